"""Parameter sweeps over scenarios, optionally on a process pool."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .model import Battery, Scenario
from .solver import SolverConfig
from .dispatch import solve_scenario

__all__ = ["SweepSpec", "SweepRow", "apply_param", "run_sweep"]

PARAMS = ("b_max", "delay", "energy", "eps_p", "eps_s")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    grid: Tuple[float, ...]
    variants: Tuple[dict, ...] = field(default=({},))

    def __post_init__(self):
        if self.parameter not in PARAMS:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}; choose from {PARAMS}")
        if not self.grid:
            raise ValueError("sweep grid is empty")
        object.__setattr__(self, "grid", tuple(self.grid))
        object.__setattr__(self, "variants", tuple(self.variants) or ({},))

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepSpec":
        if "grid" in doc:
            grid = [math.inf if isinstance(v, str) else v for v in doc["grid"]]
        else:
            lo, hi, steps = doc["range"]
            grid = list(np.linspace(lo, hi, int(steps)))
        if doc["parameter"] == "delay":
            grid = [int(round(g)) for g in grid]
        return cls(doc["parameter"], tuple(grid), tuple(doc.get("variants") or ({},)))


@dataclass(frozen=True)
class SweepRow:
    index: int
    variant: str
    value: float
    objective: float
    status: str
    method: str


def variant_name(v: dict) -> str:
    if not v:
        return "base"
    return v.get("name") or ",".join(f"{k}={v[k]}" for k in sorted(v) if k != "name")


def apply_param(s: Scenario, name: str, value) -> Scenario:
    if name == "b_max":
        v = math.inf if isinstance(value, str) else float(value)
        return s.replace(buffer_max=v)
    if name == "delay":
        v = s.n_slots if value in ("N", "n") else int(value)
        return s.replace(delay=v)
    if name == "energy":
        if s.harvesting:
            raise ValueError("energy sweeps apply to battery scenarios only")
        return s.replace(energy=Battery(float(value)))
    if name == "eps_p":
        return s.replace(proc_cost=float(value))
    if name == "eps_s":
        return s.replace(samp_cost=float(value))
    raise ValueError(f"unknown parameter {name!r}")


def _apply_variant(s: Scenario, v: dict) -> Scenario:
    for k, val in v.items():
        if k != "name":
            s = apply_param(s, k, val)
    return s


def _point(args):
    idx, vname, value, s, cfg = args
    try:
        rep = solve_scenario(s, cfg)
        return SweepRow(idx, vname, value, rep.objective, rep.status, rep.method)
    except Exception as exc:  # recorded as a failed row
        return SweepRow(idx, vname, value, math.nan, f"Error: {exc}", "")


def run_sweep(s: Scenario, spec: SweepSpec, cfg: SolverConfig = SolverConfig(),
              jobs: int = 1) -> List[SweepRow]:
    """One solve per (variant, grid value); rows come back in grid order."""
    tasks = []
    idx = 0
    for v in spec.variants:
        base = _apply_variant(s, v)
        for value in spec.grid:
            tasks.append((idx, variant_name(v), value, apply_param(base, spec.parameter, value), cfg))
            idx += 1
    if jobs <= 1 or len(tasks) <= 1:
        rows = [_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return sorted(rows, key=lambda r: r.index)
