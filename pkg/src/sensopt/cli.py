"""Command line entry point: ``sensopt solve|sweep|verify|fm-reduce``.

Exit codes: 0 success, 2 bad input, 3 solver failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional

from .analysis import InfeasiblePolicy, check_structure, extract_profile
from .constraints import (build_reduced_system, format_system, project_raw_system,
                          systems_equivalent)
from .dispatch import solve_scenario
from .io import SchemaError, load_json, load_scenario, scenario_to_dict, validate_sweep, write_csv
from .model import Policy
from .sweep import SweepSpec, run_sweep

log = logging.getLogger("sensopt")

EXIT_OK, EXIT_SCHEMA, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4
FM_MAX_SLOTS = 8

SLOT_COLUMNS = ["i", "h", "sigma2", "p", "c", "r", "D", "theta", "phi",
                "nu", "xi", "occupancy", "battery"]


def _slot_rows(s, pol, prof):
    for i in range(s.n_slots):
        yield [i + 1, s.gains[i], s.variances[i], pol.power[i], pol.cap_rate[i],
               pol.src_rate[i], pol.distortion[i], pol.burst[i], pol.sample_frac[i],
               prof.nu[i], prof.xi[i], prof.occupancy[i], prof.battery[i]]


def _out_dir(out: Optional[str]) -> Optional[Path]:
    if out is None:
        return None
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_solve(args) -> int:
    s, cfg = load_scenario(args.scenario)
    sol = solve_scenario(s, cfg, xcheck=args.xcheck, tol=args.tol)
    if sol.status != "Optimal":
        log.error("solver stopped with status %s after %d Newton steps (residual %.3g)",
                  sol.status, sol.report.iterations if sol.report else 0, sol.feas_residual)
        return EXIT_SOLVER
    prof = extract_profile(sol.policy, s)
    findings = check_structure(prof, sol.policy, s)
    report = {
        "scenario": scenario_to_dict(s),
        "validated": s.validated,
        "method": sol.method,
        "status": sol.status,
        "objective": sol.objective,
        "feas_residual": sol.feas_residual,
        "policy": sol.policy.to_dict(),
        "profile": prof.to_dict(),
        "findings": [f.to_dict() for f in findings],
    }
    if sol.xcheck is not None:
        report["xcheck"] = sol.xcheck
    out = _out_dir(args.out)
    csv_text = write_csv(out / "policy.csv" if out else None, SLOT_COLUMNS,
                         _slot_rows(s, sol.policy, prof))
    if out:
        (out / "report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    else:
        sys.stdout.write(csv_text)
    print(f"objective {sol.objective:.6g} ({sol.method})", file=sys.stderr)
    if sol.xcheck is not None and not sol.xcheck["agree"]:
        log.error("cross-check mismatch: %s", sol.xcheck)
        return EXIT_VERIFY
    return EXIT_OK


def _sweep_spec(args) -> SweepSpec:
    if args.spec:
        return SweepSpec.from_dict(validate_sweep(load_json(args.spec)))
    if not args.param:
        raise SchemaError("parameter", "give --spec FILE or --param with --grid/--range")
    doc = {"parameter": args.param}
    if args.grid:
        doc["grid"] = [v if v in ("inf", "Infinity") else float(v) for v in args.grid.split(",")]
    elif args.range:
        doc["range"] = args.range
    variants = []
    for v in args.variant or []:
        over = {}
        for kv in v.split(","):
            k, _, val = kv.partition("=")
            over[k.strip()] = val.strip() if val.strip() in ("inf", "N") else float(val)
        variants.append(over)
    if variants:
        doc["variants"] = variants
    return SweepSpec.from_dict(validate_sweep(doc))


def cmd_sweep(args) -> int:
    s, cfg = load_scenario(args.scenario)
    try:
        spec = _sweep_spec(args)
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError("sweep", str(exc)) from exc
    try:
        rows = run_sweep(s, spec, cfg, jobs=args.jobs)
    except ValueError as exc:  # a variant or grid value the scenario cannot take
        raise SchemaError("sweep", str(exc)) from exc
    out = _out_dir(args.out)
    text = write_csv(out / "sweep.csv" if out else None,
                     ["parameter", "value", "variant", "objective", "status", "method"],
                     ([spec.parameter, r.value, r.variant, r.objective, r.status, r.method]
                      for r in rows))
    if not out:
        sys.stdout.write(text)
    failed = [r for r in rows if r.status != "Optimal"]
    for r in failed:
        log.error("grid point %s=%s (%s) failed: %s", spec.parameter, r.value, r.variant, r.status)
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_verify(args) -> int:
    s, cfg = load_scenario(args.scenario)
    if args.policy:
        doc = load_json(args.policy)
        try:
            pol = Policy.from_dict(doc.get("policy", doc))
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError("policy", f"cannot read policy: {exc}") from exc
    else:
        sol = solve_scenario(s, cfg)
        if sol.status != "Optimal":
            log.error("solver stopped with status %s", sol.status)
            return EXIT_SOLVER
        pol = sol.policy
    try:
        prof = extract_profile(pol, s)
    except InfeasiblePolicy as exc:
        print(f"FAIL infeasible policy: violates {exc.constraint} by {exc.amount:.3g}")
        return EXIT_VERIFY
    findings = check_structure(prof, pol, s, eps=args.tol)
    for f in findings:
        tag = "note" if f.check == "note" else ("ok  " if f.passed else "FAIL")
        print(f"{tag} [{f.check}] slot {f.slot}: {f.detail}")
    bad = [f for f in findings if not f.passed]
    print(f"{len(findings)} findings, {len(bad)} failed")
    return EXIT_VERIFY if bad else EXIT_OK


def _parse_b(text: str):
    t = text.strip()
    if t.lower() in ("inf", "infinity"):
        return math.inf
    try:
        float(t)
    except ValueError:
        return t  # symbolic buffer size
    return t  # exact decimal parsing happens in the constraint builder


def cmd_fm_reduce(args) -> int:
    n, d = args.n, args.d
    if n > FM_MAX_SLOTS:
        raise SchemaError("N", f"N={n} exceeds {FM_MAX_SLOTS}; elimination grows "
                               "combinatorially, use build_reduced_system directly")
    if not 1 <= d <= n:
        raise SchemaError("d", f"delay must be in [1, {n}]")
    b = _parse_b(args.b)
    projected = project_raw_system(n, d, b)
    reduced = build_reduced_system(n, d, b)
    ok, witness = systems_equivalent(projected, reduced)
    cert = {"N": n, "d": d, "b_max": args.b, "rows": len(projected),
            "certificate": "equivalent" if ok else "different",
            "witness": None if witness is None else {k: str(v) for k, v in witness.items()}}
    text = format_system(projected)
    out = _out_dir(args.out)
    if out:
        (out / "reduced.txt").write_text(text, encoding="utf-8")
        (out / "certificate.json").write_text(json.dumps(cert, indent=2) + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(f"certificate: {cert['certificate']}", file=sys.stderr if not out else sys.stdout)
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sensopt", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one scenario file")
    p.add_argument("scenario")
    p.add_argument("--out", help="directory for report.json and policy.csv")
    p.add_argument("--xcheck", action="store_true",
                   help="also run the barrier solver and compare objectives")
    p.add_argument("--tol", type=float, default=1e-6, help="cross-check tolerance")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="solve a scenario over a parameter grid")
    p.add_argument("scenario")
    p.add_argument("--spec", help="sweep JSON: parameter, grid|range, variants")
    p.add_argument("--param", choices=["b_max", "delay", "energy", "eps_p", "eps_s"])
    p.add_argument("--grid", help="comma separated values")
    p.add_argument("--range", nargs=3, type=float, metavar=("LO", "HI", "STEPS"))
    p.add_argument("--variant", action="append",
                   help="overrides such as delay=10 or b_max=inf (repeatable)")
    p.add_argument("--out", help="directory for sweep.csv")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="check structural optimality properties")
    p.add_argument("scenario")
    p.add_argument("--policy", help="JSON report or policy to verify instead of solving")
    p.add_argument("--tol", type=float, default=1e-5, help="structural tolerance")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fm-reduce", help="eliminate the per-source split variables")
    p.add_argument("n", type=int, metavar="N")
    p.add_argument("d", type=int)
    p.add_argument("b", help="buffer size: number, inf, or a symbol such as B")
    p.add_argument("--out", help="directory for reduced.txt and certificate.json")
    p.set_defaults(func=cmd_fm_reduce)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"input error at {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
