"""Acceptance criteria 1-12.

Every test records one PASS/FAIL line (printed in the terminal summary and,
with ``-s``, inline) and then asserts. Nothing here is loosened to make a red
criterion green; see the notes next to the target constants.

Run alone with ``pytest tests/test_acceptance.py -v`` or
``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from acceptance_log import record
from oracles import Case, LatticeOracle
from scenarios import VARIANTS, random_d1, small_random
from sensopt import (build_reduced_system, check_structure, extract_profile, parse_system,
                     proc_root_vp, project_raw_system, samp_root_vs, solve, systems_equivalent)
from sensopt.analysis import check_clamping
from sensopt.dispatch import closed_form, solve_scenario
from sensopt.presets import VARIANCES, benchmark, benchmark_harvest
from sensopt.waterfilling import samp_gain

INF = math.inf

# target values, rounded to two decimals
TARGET_P_CAPPED = [0.57, 0.23, 1.15, 0.46, 0.11, 0.38, 0.25, 0, 0.5, 0.23]
TARGET_D_CAPPED = [0.56, 0.57, 0.81, 0.40, 0.28, 0.48, 0.16, 0.3, 0.56, 0.4]
TARGET_P_UNCAPPED = [0.74, 0, 0.48, 0.45, 0, 0.78, 0.04, 0, 0.74, 0.73]

TARGET_REDUCED_3_2 = """\
# variables: r_1 r_2 r_3 c_1 c_2 c_3 B
# nonneg: r_1 r_2 r_3 c_1 c_2 c_3 B
+1*r_3 -1*c_3 <= 0
+1*r_2 +1*r_3 -1*c_2 -1*c_3 <= 0
+1*r_1 +1*r_2 +1*r_3 -1*c_1 -1*c_2 -1*c_3 <= 0
+1*r_1 -1*c_1 -1*c_2 <= 0
+1*r_1 +1*r_2 -1*c_1 -1*B <= 0
+1*r_1 +1*r_2 +1*r_3 -1*c_1 -1*c_2 -1*B <= 0
+1*r_2 +1*r_3 -1*c_2 -1*B <= 0
+1*r_1 -1*B <= 0
+1*r_2 -1*B <= 0
+1*r_3 -1*B <= 0
"""


def _nonincreasing(values, tol=1e-9):
    return bool(np.all(np.diff(values) <= tol))


def _flat_onset(grid, values, thr):
    """First grid value from which every later consecutive step is below ``thr``."""
    steps = np.abs(np.diff(values))
    for i in range(len(steps)):
        if np.all(steps[i:] < thr):
            return float(grid[i])
    return math.inf


def _objective(s):
    return solve_scenario(s).objective


def _bad_slots(got, want, tol):
    return [i + 1 for i, (g, w) in enumerate(zip(got, want)) if abs(g - w) > tol]


# --------------------------------------------------------------------------
def test_criterion_01_capped_buffer_allocation():
    s = benchmark()
    t0 = time.perf_counter()
    sol = solve_scenario(s)
    dt = time.perf_counter() - t0
    p, D = sol.policy.power, sol.policy.distortion
    bad_p = _bad_slots(p, TARGET_P_CAPPED, 0.02)
    bad_d = _bad_slots(D, TARGET_D_CAPPED, 0.02)
    ok_total = abs(sol.objective - 4.57) <= 0.01
    ok = ok_total and not bad_p and not bad_d and dt < 1.0
    detail = (f"D={sol.objective:.4f} (4.57+-0.01), runtime {dt:.3f}s; "
              f"p slots off by >0.02: {bad_p or 'none'}"
              + (f" (slot {bad_p[0]}: {p[bad_p[0] - 1]:.3f} vs {TARGET_P_CAPPED[bad_p[0] - 1]})"
                 if bad_p else "")
              + f"; D slots off: {bad_d or 'none'}")
    record(1, ok, detail)
    assert ok, detail


def test_criterion_02_unlimited_buffer_allocation():
    s = benchmark(buffer_max=INF)
    sol = solve_scenario(s)
    bad_p = _bad_slots(sol.policy.power, TARGET_P_UNCAPPED, 0.02)
    ok = abs(sol.objective - 4.48) <= 0.01 and not bad_p
    detail = f"D={sol.objective:.4f} (4.48+-0.01); p slots off by >0.02: {bad_p or 'none'}"
    record(2, ok, detail)
    assert ok, detail


def test_criterion_03_harvesting_level_change():
    s = benchmark_harvest()
    sol = solve_scenario(s)
    prof = extract_profile(sol.policy, s)
    findings = check_structure(prof, sol.policy, s)
    rises = [f for f in findings if f.check == "level"]
    justified = [f for f in rises if f.passed and "battery empty" in f.detail]
    ok = (abs(sol.objective - 4.50) <= 0.01 and len(rises) == 1 and len(justified) == 1
          and justified[0].slot == 5 and all(f.passed for f in findings))
    detail = (f"D={sol.objective:.4f} (4.50+-0.01); level changes: "
              + "; ".join(f"slot {f.slot}: {f.detail}" for f in rises))
    record(3, ok, detail)
    assert ok, detail


def test_criterion_04_buffer_sweep_thresholds():
    grid = np.round(np.arange(0.01, 2.0001, 0.01), 2)
    parts, ok = [], True
    for d, thr in ((1, 0.32), (10, 1.13)):
        D = np.array([_objective(benchmark(buffer_max=float(b), delay=d)) for b in grid])
        mono = _nonincreasing(D)
        i0 = int(np.searchsorted(grid, thr - 1e-9))
        flat = bool(np.all(np.abs(np.diff(D[i0:])) < 1e-3))
        onset = _flat_onset(grid, D, 1e-3)
        ok &= mono and flat
        parts.append(f"d={d}: non-increasing={mono}, flat from {thr}={flat} "
                     f"(steps <1e-3 from {onset:.2f})")
    detail = "; ".join(parts)
    record(4, ok, detail)
    assert ok, detail


def test_criterion_05_delay_sweep():
    ds = list(range(1, 11))
    D_inf = np.array([_objective(benchmark(buffer_max=INF, delay=d)) for d in ds])
    D_cap = np.array([_objective(benchmark(buffer_max=0.15, delay=d)) for d in ds])
    mono = _nonincreasing(D_inf) and _nonincreasing(D_cap)
    flat_inf = bool(np.all(np.abs(np.diff(D_inf[3:])) < 1e-3))  # d >= 4
    flat_cap = bool(np.all(np.abs(np.diff(D_cap[1:])) < 1e-3))  # d >= 2
    ok = mono and flat_inf and flat_cap
    detail = (f"non-increasing={mono}; B=inf constant for d>=4: {flat_inf} "
              f"(D(4..8)={np.round(D_inf[3:8], 4).tolist()}, constant from d="
              f"{int(_flat_onset(ds, D_inf, 1e-3))}); B=0.15 constant for d>=2: {flat_cap}")
    record(5, ok, detail)
    assert ok, detail


def test_criterion_06_energy_sweep():
    grid = np.round(np.r_[0.0, 0.05, np.arange(0.1, 10.0001, 0.1)], 2)
    D1 = np.array([_objective(benchmark(energy=float(e), delay=1)) for e in grid])
    DN = np.array([_objective(benchmark(energy=float(e), delay=10)) for e in grid])
    mono = _nonincreasing(D1) and _nonincreasing(DN)
    total = sum(VARIANCES)
    # D(0) is the sum of the ten variances, 5.4
    zero_ok = abs(D1[0] - total) < 1e-12 and abs(DN[0] - total) < 1e-12
    low = grid <= 0.1 + 1e-12
    gap_low = float(np.max(np.abs(D1[low] - DN[low])))
    gap_high = float(abs(D1[-1] - DN[-1]))
    ok = mono and zero_ok and gap_low < 1e-3 and gap_high < 1e-3
    detail = (f"non-increasing={mono}; D(0)={D1[0]:.4g}=sum of variances ({total:.4g}); "
              f"|D_d1-D_dN| max over E<=0.1: {gap_low:.3g}, at E=10: {gap_high:.2g} (need <1e-3)")
    record(6, ok, detail)
    assert ok, detail


def test_criterion_07_elimination_golden_and_exhaustive():
    t0 = time.perf_counter()
    projected = project_raw_system(3, 2, "B")
    golden = parse_system(TARGET_REDUCED_3_2)
    same_rows = projected.row_keys() == golden.row_keys()
    cert, _ = systems_equivalent(projected, build_reduced_system(3, 2, "B"))
    failures = []
    for n in range(1, 5):
        for d in range(1, n + 1):
            for b in ("inf", "3/20", "B"):
                ok_nd, _ = systems_equivalent(project_raw_system(n, d, b),
                                              build_reduced_system(n, d, b))
                if not ok_nd:
                    failures.append((n, d, b))
    dt = time.perf_counter() - t0
    ok = same_rows and cert and not failures and dt < 10
    detail = (f"golden rows reproduced={same_rows}, certified={cert}; exhaustive N<=4 "
              f"(B in inf, 3/20, symbolic) failures={failures or 'none'}; runtime {dt:.1f}s")
    record(7, ok, detail)
    assert ok, detail


def _oracle_case(s):
    return Case(s.h, s.sigma2, s.cumulative_energy(), s.buffer_max, s.delay,
                s.proc_cost, s.samp_cost)


def test_criterion_08_oracle_equivalence():
    t0 = time.perf_counter()
    worst = {}
    for kind in VARIANTS:
        for s in small_random(kind):
            rep = solve(s)
            ref, _ = LatticeOracle(_oracle_case(s)).solve(step=1e-3)
            worst[kind] = max(worst.get(kind, 0.0), abs(rep.objective - ref))
    dt = time.perf_counter() - t0
    ok = all(v <= 1e-3 for v in worst.values()) and dt < 300
    detail = ("max |solver - oracle|: " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
              + f"; runtime {dt:.0f}s")
    record(8, ok, detail)
    assert ok, detail


def _d1_benchmarks():
    return [benchmark(), benchmark(buffer_max=INF), benchmark_harvest(),
            benchmark(buffer_max=0.1, proc_cost=1.0), benchmark(buffer_max=INF, proc_cost=0.5)]


def test_criterion_09_closed_form_vs_barrier():
    scen = _d1_benchmarks() + random_d1(50)
    worst, not_opt = 0.0, 0
    for s in scen:
        wf = closed_form(s)
        rep = solve(s)
        not_opt += rep.status != "Optimal"
        worst = max(worst, abs(float(np.sum(wf.distortion)) - rep.objective))
    ok = worst <= 1e-6 and not_opt == 0
    detail = f"{len(scen)} scenarios, max objective difference {worst:.2e} (<=1e-6)"
    record(9, ok, detail)
    assert ok, detail


def test_criterion_10_structural_properties():
    policies = []
    for s in (benchmark(), benchmark(buffer_max=INF), benchmark_harvest()):
        policies.append((s, solve_scenario(s).policy))
        policies.append((s, solve(s).policy))
    for kind in VARIANTS:
        policies += [(s, solve(s).policy) for s in small_random(kind)]
    for s in _d1_benchmarks() + random_d1(50):
        policies.append((s, closed_form(s)))
        policies.append((s, solve(s).policy))
    failed, clamp_bad = [], 0
    for s, pol in policies:
        prof = extract_profile(pol, s)
        bad = [f for f in check_structure(prof, pol, s, eps=1e-5) if not f.passed]
        if bad:
            failed.append((s.variant, bad[0].detail))
        clamp_bad += len(check_clamping(pol, s, tol=1e-8))
    ok = not failed and clamp_bad == 0
    detail = (f"{len(policies)} optimal policies, structural failures={len(failed)}"
              + (f" (first: {failed[0]})" if failed else "")
              + f", clamping violations={clamp_bad}")
    record(10, ok, detail)
    assert ok, detail


def _sampling_slot(phi, r, s2=1.0):
    return s2 * (1 - phi) + s2 * phi * 2.0 ** (-2 * r / phi)


def test_criterion_11_root_finders():
    vp_err = abs(proc_root_vp(1.0, 1.0) - (math.e - 1))
    res = 0.0
    for s2 in (0.2, 1.0, 3.0):
        for cost in np.linspace(0.0, 0.999, 40):
            k = samp_root_vs(s2, float(cost))
            res = max(res, abs(samp_gain(k) - cost))
    # g(k) is -dD/dphi / sigma^2 at fixed r = k * phi
    fd_err = 0.0
    for phi in (0.2, 0.5, 0.9):
        for k in (0.05, 0.3, 1.0, 2.5):
            r, step = k * phi, 1e-6
            fd = -(_sampling_slot(phi + step, r) - _sampling_slot(phi - step, r)) / (2 * step)
            fd_err = max(fd_err, abs(fd - samp_gain(k)) / abs(fd))
    ok = vp_err <= 1e-8 and res <= 1e-10 and fd_err <= 1e-5
    detail = (f"|v_p(1,1)-(e-1)|={vp_err:.1e}; max root residual {res:.1e}; "
              f"max relative finite-difference error {fd_err:.1e}")
    record(11, ok, detail)
    assert ok, detail


def test_criterion_12_cost_sweeps():
    eps_p = [0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.5, 10.0, 15.0, 20.0]
    eps_s = [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0]
    mono, gaps = True, {}
    for d in (1, 10):
        curves = {}
        for b in (0.1, INF):
            curves[b] = np.array([solve(benchmark(buffer_max=b, delay=d, proc_cost=e)).objective
                                  for e in eps_p])
            mono &= _nonincreasing(-curves[b])
        gaps[d] = curves[0.1] - curves[INF]
        samp = np.array([solve(benchmark(buffer_max=0.1, delay=d, samp_cost=e)).objective
                         for e in eps_s])
        mono &= _nonincreasing(-samp)
    shrinking = all(_nonincreasing(gaps[d][1:]) for d in gaps)
    closed_d1 = bool(np.all(np.abs(gaps[1][eps_p.index(10.0):]) < 1e-3))
    closing_dn = gaps[10][-1] < 0.1 * gaps[10][1]
    ok = mono and shrinking and closed_d1 and closing_dn
    detail = (f"non-decreasing in eps_p and eps_s={mono}; buffer gap shrinking={shrinking} "
              f"(d=1: {gaps[1][1]:.3f} -> {abs(gaps[1][-1]):.1e}, "
              f"d=N: {gaps[10][1]:.3f} -> {gaps[10][-1]:.3f})")
    record(12, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
