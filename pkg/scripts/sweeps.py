"""Total distortion against buffer size, delay, energy and the two costs.

Each sweep runs on the ten-slot battery benchmark and writes one CSV with a
row per (variant, grid value):

    sweep_bmax.csv      buffer size, d = 1 and d = N
    sweep_delay.csv     delay 1..10, buffer 0.15 and unbounded
    sweep_energy.csv    battery energy, four buffer/delay combinations
    sweep_proc_cost.csv processing cost, buffer 0.1, d = 1 and d = N
    sweep_samp_cost.csv sampling cost, buffer 0.1, d = 1 and d = N

    python3 scripts/sweeps.py --out results --jobs 4
"""

import argparse
import time
from pathlib import Path

import numpy as np

from sensopt.io import write_csv
from sensopt.presets import benchmark
from sensopt.sweep import SweepSpec, run_sweep

D1, DN = {"delay": 1}, {"delay": "N"}

SWEEPS = {
    "bmax": SweepSpec("b_max", tuple(np.round(np.arange(0.01, 2.001, 0.01), 2)) + ("inf",),
                      ({"name": "d=1", **D1}, {"name": "d=N", **DN})),
    "delay": SweepSpec("delay", tuple(range(1, 11)),
                       ({"name": "b_max=0.15", "b_max": 0.15}, {"name": "b_max=inf", "b_max": "inf"})),
    "energy": SweepSpec("energy", (0.0, 0.05) + tuple(np.round(np.arange(0.1, 10.001, 0.1), 1)),
                        tuple({"name": f"b_max={b},{n}", "b_max": b, **dv}
                              for b in (0.15, "inf") for n, dv in (("d=1", D1), ("d=N", DN)))),
    "proc_cost": SweepSpec("eps_p", (0.0, 0.25, 0.5, 1, 2, 3, 5, 7.5, 10, 15, 20),
                           ({"name": "d=1", "b_max": 0.1, **D1}, {"name": "d=N", "b_max": 0.1, **DN})),
    "samp_cost": SweepSpec("eps_s", (0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0),
                           ({"name": "d=1", "b_max": 0.1, **D1}, {"name": "d=N", "b_max": 0.1, **DN})),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--only", choices=sorted(SWEEPS), action="append")
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = benchmark()
    for name in args.only or SWEEPS:
        spec = SWEEPS[name]
        t0 = time.perf_counter()
        rows = run_sweep(base, spec, jobs=args.jobs)
        write_csv(out / f"sweep_{name}.csv", ["parameter", "value", "variant", "objective", "status", "method"],
                  ([spec.parameter, r.value, r.variant, r.objective, r.status, r.method] for r in rows))
        bad = sum(r.status != "Optimal" for r in rows)
        print(f"{name:10s} {len(rows)} points, {bad} failed, {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
