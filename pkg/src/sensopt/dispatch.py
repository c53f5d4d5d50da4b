"""Pick the fastest exact method for a scenario and optionally cross-check it."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import Policy, Scenario
from .solver import SolveReport, SolverConfig, residuals, solve
from .waterfilling import processing_policy_d1, waterfill_battery_d1, waterfill_harvest_d1

__all__ = ["Solution", "closed_form", "solve_scenario"]


@dataclass
class Solution:
    policy: Policy
    objective: float
    status: str
    method: str
    feas_residual: float
    report: Optional[SolveReport] = None  # barrier diagnostics when the solver ran
    xcheck: Optional[dict] = None


def closed_form(s: Scenario) -> Optional[Policy]:
    """Closed-form policy for the d = 1 cases that have one, else ``None``."""
    if s.delay != 1 or not s.validated:
        return None
    if s.samp_cost > 0:
        return None
    if s.proc_cost > 0:
        return None if s.harvesting else processing_policy_d1(s)
    if s.harvesting:
        return waterfill_harvest_d1(s)
    return waterfill_battery_d1(s)


def solve_scenario(s: Scenario, cfg: SolverConfig = SolverConfig(), xcheck: bool = False,
                   tol: float = 1e-6) -> Solution:
    pol = closed_form(s)
    if pol is None:
        rep = solve(s, cfg)
        return Solution(rep.policy, rep.objective, rep.status, "barrier", rep.feas_residual, rep)
    obj = float(np.sum(pol.distortion))
    sol = Solution(pol, obj, "Optimal", "waterfilling", residuals(s, pol))
    if xcheck:
        rep = solve(s, cfg)
        diff = abs(rep.objective - obj)
        sol.report = rep
        sol.xcheck = {"barrier_objective": rep.objective, "abs_diff": diff,
                      "tol": tol, "agree": bool(diff <= tol), "barrier_status": rep.status}
    return sol
