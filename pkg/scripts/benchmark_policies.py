"""Per-slot policies for the three ten-slot benchmark scenarios.

Writes ``policy_capped.csv`` (buffer 0.15), ``policy_uncapped.csv`` and
``policy_harvest.csv`` with power, rates, distortion, levels and the
battery trajectory.

    python3 scripts/benchmark_policies.py --out results
"""

import argparse
import math
from pathlib import Path

from sensopt.analysis import check_structure, extract_profile
from sensopt.cli import SLOT_COLUMNS, _slot_rows
from sensopt.dispatch import solve_scenario
from sensopt.io import write_csv
from sensopt.presets import benchmark, benchmark_harvest

CASES = {
    "capped": benchmark(),
    "uncapped": benchmark(buffer_max=math.inf),
    "harvest": benchmark_harvest(),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, s in CASES.items():
        sol = solve_scenario(s, xcheck=True)
        prof = extract_profile(sol.policy, s)
        bad = [f for f in check_structure(prof, sol.policy, s) if not f.passed]
        write_csv(out / f"policy_{name}.csv", SLOT_COLUMNS, _slot_rows(s, sol.policy, prof))
        print(f"{name:9s} D={sol.objective:.6f}  barrier diff {sol.xcheck['abs_diff']:.1e}  "
              f"structural failures {len(bad)}")


if __name__ == "__main__":
    main()
