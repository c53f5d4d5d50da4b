"""Independent conic solve of the original (per-source split) problem.

Builds the problem over the raw split variables R[i, j] (bits of source i
sent in slot j) with cvxpy and solves it with CLARABEL, then compares the
objective with ``sensopt.solve_scenario`` on a set of scenarios. Writes
``reference_check.csv``. Needs the optional ``reference`` extra (cvxpy).

    python3 scripts/conic_reference.py --out results
"""

import argparse
import math
from pathlib import Path

import cvxpy as cp
import numpy as np

from sensopt.dispatch import solve_scenario
from sensopt.io import write_csv
from sensopt.presets import benchmark, benchmark_harvest

A = 2 * math.log(2)


def conic_solve(h, s2, E, B, d, eps_p=0.0, eps_s=0.0):
    """Return (objective, transmit energy per slot). ``E`` scalar or arrivals."""
    h = np.asarray(h, float)
    s2 = np.asarray(s2, float)
    n = len(h)
    R = {(i, j): cp.Variable(nonneg=True) for i in range(n) for j in range(i, min(i + d, n))}
    c = cp.Variable(n, nonneg=True)
    p = cp.Variable(n, nonneg=True)
    cons = []
    r = [sum(R[i, j] for j in range(i, min(i + d, n))) for i in range(n)]
    for j in range(n):
        cons.append(sum(R[i, j] for i in range(max(0, j - d + 1), j + 1)) <= c[j])
    if math.isfinite(B):
        for k in range(n):
            stored = sum(r[i] - sum(R[i, j] for j in range(i, k)) for i in range(max(0, k - d + 1), k + 1))
            cons.append(stored <= B)
    if eps_p > 0:
        th = cp.Variable(n, nonneg=True)
        cons += [th <= 1, c <= -cp.rel_entr(th, th + cp.multiply(h, p)) / A]
        e = p + eps_p * th
    else:
        cons.append(c <= cp.log(1 + cp.multiply(h, p)) / A)
        e = p
    if eps_s > 0:
        ph = cp.Variable(n, nonneg=True)
        t = cp.Variable(n, nonneg=True)
        cons += [ph <= 1, cp.constraints.ExpCone(-A * cp.hstack(r), ph, t)]
        e = e + eps_s * ph
        obj = cp.sum(cp.multiply(s2, 1 - ph)) + cp.sum(cp.multiply(s2, t))
    else:
        obj = cp.sum(cp.multiply(s2, cp.exp(-A * cp.hstack(r))))
    if np.ndim(E) == 0:
        cons.append(cp.sum(e) <= E)
    else:
        cum = np.cumsum(E)
        for i in range(n):
            cons.append(cp.sum(e[:i + 1]) <= cum[i])
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver="CLARABEL", tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11, max_iter=500)
    return prob.value, np.array(p.value)


def cases():
    yield "capped", benchmark()
    yield "uncapped", benchmark(buffer_max=math.inf)
    yield "harvest", benchmark_harvest()
    for d in (2, 5, 10):
        yield f"capped_d{d}", benchmark(delay=d)
        yield f"uncapped_d{d}", benchmark(delay=d, buffer_max=math.inf)
    yield "low_energy", benchmark(energy=0.05, delay=10, buffer_max=math.inf)
    yield "processing", benchmark(buffer_max=0.1, proc_cost=0.5)
    yield "processing_d3", benchmark(buffer_max=0.3, delay=3, proc_cost=2.0)
    yield "sampling", benchmark(buffer_max=0.1, delay=10, samp_cost=0.3)
    yield "sampling_d1", benchmark(samp_cost=0.2)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for name, s in cases():
        E = s.energy.arrivals if s.harvesting else s.total_energy
        ref, _ = conic_solve(s.h, s.sigma2, E, s.buffer_max, s.delay, s.proc_cost, s.samp_cost)
        sol = solve_scenario(s)
        rows.append([name, s.delay, s.buffer_max, ref, sol.objective, sol.method, abs(ref - sol.objective)])
        print(f"{name:16s} conic {ref:.9f}  sensopt {sol.objective:.9f}  diff {abs(ref - sol.objective):.1e}")
    write_csv(out / "reference_check.csv",
              ["case", "delay", "b_max", "conic", "sensopt", "method", "abs_diff"], rows)


if __name__ == "__main__":
    main()
