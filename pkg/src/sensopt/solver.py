"""Log-barrier interior point solver for the general (any d, any B_max) problems.

Decision vector ``x = [r, c, theta?, phi?]``: source rates, slot capacities
and, when the corresponding costs are positive, burst fractions and sampling
fractions. The scheduling constraints are the reduced linear system; the
energy budget (battery) or the prefix budgets (harvesting) are smooth convex
constraints. Each centering step is a damped Newton method with Armijo
backtracking; the barrier weight grows by ``barrier_mu`` until the surrogate
duality gap ``m / t`` drops below ``tol_gap``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np

from .constraints import build_reduced_system, to_dense
from .model import Policy, Scenario, distortion_from_rate
from .waterfilling import proc_root_vp

__all__ = [
    "SolverConfig",
    "SolveReport",
    "solve",
    "solve_battery",
    "solve_harvest",
    "solve_processing",
    "solve_sampling",
    "Problem",
]

log = logging.getLogger(__name__)

A = 2 * math.log(2)


@dataclass(frozen=True)
class SolverConfig:
    tol_gap: float = 1e-9
    tol_feas: float = 1e-9
    max_newton: int = 500
    barrier_mu: float = 10.0
    theta_floor: float = 1e-7
    phi_floor: float = 1e-7
    t_init: float = 1.0
    snap_factor: float = 100.0

    def __post_init__(self):
        for name in ("tol_gap", "tol_feas", "theta_floor", "phi_floor", "t_init", "snap_factor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.barrier_mu > 1:
            raise ValueError("barrier_mu must exceed 1")
        if self.max_newton < 1:
            raise ValueError("max_newton must be at least 1")

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "SolverConfig":
        return cls(**(d or {}))


@dataclass
class SolveReport:
    policy: Policy
    objective: float
    feas_residual: float
    iterations: int
    status: str  # "Optimal" | "MaxIter" | "Infeasible"
    multiplier_estimates: Optional[Dict[str, float]] = field(default=None)

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "feas_residual": self.feas_residual,
            "iterations": self.iterations,
            "status": self.status,
            "policy": self.policy.to_dict(),
            "multiplier_estimates": self.multiplier_estimates,
        }


@lru_cache(maxsize=256)
def _reduced_rows(n: int, d: int, b_max: float):
    sys = build_reduced_system(n, d, b_max)
    order = {v: i for i, v in enumerate(sys.variables)}
    A_, b_, _ = to_dense(sys)
    A_ = np.array([[float(v) for v in row] for row in A_]) if A_ else np.zeros((0, 2 * n))
    # reorder columns to r_1..r_n, c_1..c_n
    cols = [order[f"r_{i}"] for i in range(1, n + 1)] + [order[f"c_{i}"] for i in range(1, n + 1)]
    labels = tuple(r.label for r in sys.inequalities)
    return A_[:, cols], np.array([float(v) for v in b_], dtype=float), labels


class Problem:
    """Barrier formulation of one scenario with a set of variables fixed at zero."""

    def __init__(self, s: Scenario, cfg: SolverConfig, fixed: Optional[np.ndarray] = None):
        self.s, self.cfg = s, cfg
        n = self.n = s.n_slots
        self.has_theta = s.proc_cost > 0
        self.has_phi = s.samp_cost > 0
        self.ir = np.arange(n)
        self.ic = n + np.arange(n)
        k = 2 * n
        self.it = k + np.arange(n) if self.has_theta else None
        k += n if self.has_theta else 0
        self.ip = k + np.arange(n) if self.has_phi else None
        self.nvar = k + (n if self.has_phi else 0)

        A_sched, b_sched, labels = _reduced_rows(n, s.delay, s.buffer_max)
        rows = [np.pad(A_sched, ((0, 0), (0, self.nvar - 2 * n)))]
        bs = [b_sched]
        labels = list(labels)
        I = np.eye(self.nvar)
        for i in range(2 * n):
            rows.append(-I[i:i + 1])
            bs.append(np.zeros(1))
            labels.append(("r" if i < n else "c") + f">=0[{i % n + 1}]")
        for idx, floor, nm in ((self.it, cfg.theta_floor, "theta"), (self.ip, cfg.phi_floor, "phi")):
            if idx is None:
                continue
            for j, i in enumerate(idx):
                rows += [-I[i:i + 1], I[i:i + 1]]
                bs += [np.array([-floor]), np.ones(1)]
                labels += [f"{nm}>=floor[{j + 1}]", f"{nm}<=1[{j + 1}]"]
        self.A_all = np.vstack(rows)
        self.b_all = np.concatenate(bs)
        self.labels_all = labels

        cum = s.cumulative_energy()
        if s.harvesting:
            self.P_all = np.tril(np.ones((n, n)))
            self.Eb_all = cum.astype(float)
            self.elabels_all = [f"energy[{i + 1}]" for i in range(n)]
        else:
            self.P_all = np.ones((1, n))
            self.Eb_all = np.array([float(s.total_energy)])
            self.elabels_all = ["energy"]

        self.fixed = np.zeros(self.nvar, bool) if fixed is None else fixed.copy()
        self._presolve()

    # -- presolve ----------------------------------------------------------
    def _slot_vars(self, j):
        out = [self.ir[j], self.ic[j]]
        if self.has_theta:
            out.append(self.it[j])
        if self.has_phi:
            out.append(self.ip[j])
        return out

    def _presolve(self):
        n, fx = self.n, self.fixed
        cum = self.s.cumulative_energy()
        for j in range(n):
            if cum[j] <= 0:
                fx[self.ic[j]] = True
                if self.has_phi:
                    fx[self.ip[j]] = True
        changed = True
        while changed:
            changed = False
            for j in range(n):
                if self.has_theta and fx[self.ic[j]] and not fx[self.it[j]]:
                    fx[self.it[j]] = changed = True
                if self.has_theta and fx[self.it[j]] and not fx[self.ic[j]]:
                    fx[self.ic[j]] = changed = True
                if self.has_phi and fx[self.ip[j]] and not fx[self.ir[j]]:
                    fx[self.ir[j]] = changed = True
                if self.has_phi and fx[self.ir[j]] and not fx[self.ip[j]]:
                    fx[self.ip[j]] = changed = True
            free = ~fx
            for a, b in zip(self.A_all, self.b_all):
                af = a[free]
                if b == 0 and np.any(af > 0) and np.all(af >= 0):
                    hit = free & (a > 0)
                    fx[hit] = True
                    changed = True
        free = ~fx
        keep = np.any(self.A_all[:, free] != 0, axis=1)
        # bound rows of fixed theta / phi vanish here; the rest must stay valid
        self.A = self.A_all[keep][:, free]
        self.b = self.b_all[keep]
        self.labels = [l for l, k in zip(self.labels_all, keep) if k]
        active_slot = np.array([not fx[self.ic[j]] or (self.has_phi and not fx[self.ip[j]])
                                for j in range(n)])
        erow = np.array([np.any(active_slot[:i + 1]) if self.s.harvesting else np.any(active_slot)
                         for i in range(len(self.Eb_all))])
        self.P = self.P_all[erow]
        self.Eb = self.Eb_all[erow]
        self.elabels = [l for l, k in zip(self.elabels_all, erow) if k]
        self.free = free

    # -- model functions ---------------------------------------------------
    def full(self, z: np.ndarray) -> np.ndarray:
        x = np.zeros(self.nvar)
        x[self.free] = z
        return x

    def parts(self, x):
        r, c = x[self.ir], x[self.ic]
        th = x[self.it] if self.has_theta else np.ones(self.n)
        ph = x[self.ip] if self.has_phi else np.ones(self.n)
        return r, c, th, ph

    def objective(self, x, order=2):
        """Total distortion with gradient and per-slot Hessian blocks."""
        r, c, th, ph = self.parts(x)
        s2 = self.s.sigma2
        on = ph > 0
        phs = np.where(on, ph, 1.0)
        k = r / phs
        ek = np.exp(-A * k)
        f = float(np.sum(np.where(on, s2 * (1 - ph) + s2 * ph * ek, s2)))
        if order == 0:
            return f
        g = np.zeros(self.nvar)
        g[self.ir] = np.where(on, -A * s2 * ek, 0.0)
        H = np.zeros((self.nvar, self.nvar))
        w = np.where(on, A * A * s2 * ek / phs, 0.0)
        H[self.ir, self.ir] = w
        if self.has_phi:
            g[self.ip] = np.where(on, -s2 + s2 * ek * (1 + A * k), 0.0)
            H[self.ir, self.ip] = H[self.ip, self.ir] = -w * k
            H[self.ip, self.ip] = w * k * k
        return f, g, H

    def slot_energy(self, x, order=2):
        """Per-slot energy, its Jacobian rows (n x nvar) and Hessian blocks."""
        r, c, th, ph = self.parts(x)
        h, n = self.s.h, self.n
        eps_p, eps_s = self.s.proc_cost, self.s.samp_cost
        on = th > 0
        ths = np.where(on, th, 1.0)
        u = c / ths
        with np.errstate(over="ignore"):
            eu = np.exp(A * u)
        e = np.where(on, ths * (eu - 1) / h + (eps_p * th if self.has_theta else 0.0), 0.0)
        if self.has_phi:
            e = e + eps_s * ph
        if order == 0:
            return e
        J = np.zeros((n, self.nvar))
        J[np.arange(n), self.ic] = np.where(on, A * eu / h, 0.0)
        if self.has_theta:
            J[np.arange(n), self.it] = np.where(on, (eu - 1) / h - A * u * eu / h + eps_p, 0.0)
        if self.has_phi:
            J[np.arange(n), self.ip] = eps_s
        q = np.where(on, A * A * eu / (h * ths), 0.0)  # d2e/dc2
        return e, J, q, u

    def energy_cons(self, x, order=2):
        out = self.slot_energy(x, order)
        if order == 0:
            return self.P @ out - self.Eb
        e, J, q, u = out
        return self.P @ e - self.Eb, self.P @ J, q, u

    # -- barrier -----------------------------------------------------------
    def slacks(self, x):
        z = x[self.free]
        return self.b - self.A @ z, -self.energy_cons(x, 0)

    def strictly_feasible(self, x) -> bool:
        sl, se = self.slacks(x)
        return bool(np.all(sl > 0) and np.all(se > 0) and np.all(np.isfinite(se)))

    def barrier_value(self, x, t):
        sl, se = self.slacks(x)
        if np.any(sl <= 0) or np.any(se <= 0) or not np.all(np.isfinite(se)):
            return math.inf
        return t * self.objective(x, 0) - float(np.sum(np.log(sl))) - float(np.sum(np.log(se)))

    def barrier_derivs(self, x, t):
        f, g, H = self.objective(x)
        gv, Jg, q, u = self.energy_cons(x)
        se = -gv
        sl = self.b - self.A @ x[self.free]
        grad = t * g
        hess = t * H
        grad += Jg.T @ (1 / se)
        hess += (Jg.T / se ** 2) @ Jg
        # curvature of each energy constraint: sum of per-slot blocks below it
        wslot = self.P.T @ (1 / se)
        n = self.n
        for j in range(n):
            if q[j] == 0 or wslot[j] == 0:
                continue
            ic = self.ic[j]
            if self.has_theta:
                it = self.it[j]
                blk = wslot[j] * q[j]
                hess[ic, ic] += blk
                hess[ic, it] -= blk * u[j]
                hess[it, ic] -= blk * u[j]
                hess[it, it] += blk * u[j] ** 2
            else:
                hess[ic, ic] += wslot[j] * q[j]
        fr = self.free
        gz = grad[fr] + self.A.T @ (1 / sl)
        Hz = hess[np.ix_(fr, fr)] + (self.A.T / sl ** 2) @ self.A
        return gz, Hz

    def initial_point(self) -> Optional[np.ndarray]:
        s, n, cfg = self.s, self.n, self.cfg
        x = np.zeros(self.nvar)
        fx = self.fixed
        slots = [j for j in range(n) if not fx[self.ic[j]] or (self.has_phi and not fx[self.ip[j]])]
        if not slots:
            return x
        cum = s.cumulative_energy()
        budget = float(cum[slots[0]]) / (2 * len(slots))
        for j in slots:
            spend = budget
            if self.has_theta and not fx[self.it[j]]:
                th = min(0.5, budget / (4 * s.proc_cost))
                if th <= 10 * cfg.theta_floor:
                    return None
                x[self.it[j]] = th
                spend -= th * s.proc_cost
            if self.has_phi and not fx[self.ip[j]]:
                ph = min(0.5, budget / (4 * s.samp_cost))
                if ph <= 10 * cfg.phi_floor:
                    return None
                x[self.ip[j]] = ph
                spend -= ph * s.samp_cost
            if not fx[self.ic[j]]:
                th = x[self.it[j]] if self.has_theta else 1.0
                x[self.ic[j]] = 0.5 * th * math.log2(1 + s.h[j] * spend / th)
        cmin = min((x[self.ic[j]] for j in slots if not fx[self.ic[j]]), default=1.0)
        r0 = min(cmin, s.buffer_max) / (2 * n)
        for j in range(n):
            if not fx[self.ir[j]]:
                x[self.ir[j]] = r0
        return x

    def n_constraints(self) -> int:
        return len(self.b) + len(self.Eb)


def _newton_path(prob: Problem, x: np.ndarray, budget: int):
    """Run the barrier path; returns (x, t, newton_iterations, converged)."""
    cfg = prob.cfg
    m = prob.n_constraints()
    t = cfg.t_init
    its = 0
    z = x[prob.free]
    if z.size == 0:
        return x, t, 0, True
    while True:
        while its < budget:
            xf = prob.full(z)
            g, H = prob.barrier_derivs(xf, t)
            d = 1 / np.sqrt(np.maximum(np.diag(H), 1e-300))
            Hs = H * d[:, None] * d[None, :]
            try:
                step = -d * np.linalg.solve(Hs, d * g)
            except np.linalg.LinAlgError:
                step = -d * np.linalg.lstsq(Hs, d * g, rcond=None)[0]
            its += 1
            dec = float(-g @ step)
            # centred enough once the decrement costs < 1% of the target gap
            if dec / 2 <= 1e-10 or dec / (2 * t) <= 1e-2 * cfg.tol_gap:
                break
            F0 = prob.barrier_value(xf, t)
            alpha = 1.0
            accepted = False
            while alpha > 1e-14:
                zn = z + alpha * step
                xn = prob.full(zn)
                Fn = prob.barrier_value(xn, t)
                if math.isfinite(Fn) and (Fn <= F0 - 0.25 * alpha * dec or dec < 1e-6):
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                break
            z = zn
        if its >= budget:
            return prob.full(z), t, its, False
        if m / t <= cfg.tol_gap:
            return prob.full(z), t, its, True
        t *= cfg.barrier_mu


def _report(prob: Problem, x: np.ndarray, t: float, its: int, ok: bool,
            burst_fix: bool = True) -> SolveReport:
    s = prob.s
    r, c, th, ph = prob.parts(x)
    r = np.maximum(r, 0.0)
    c = np.maximum(c, 0.0)
    if prob.has_theta and burst_fix:
        # for a given capacity the cheapest burst length keeps power at the threshold
        u_star = np.array([0.5 * math.log2(1 + hi * proc_root_vp(hi, s.proc_cost)) for hi in s.h])
        th = np.where(c > 0, np.minimum(1.0, c / u_star), 0.0)
    if prob.has_phi:
        ph = np.where(ph > 0, ph, 0.0)
        r = np.where(ph > 0, r, 0.0)
    policy = Policy.from_rates(s, r, c,
                               burst=th if prob.has_theta else None,
                               sample_frac=ph if prob.has_phi else None)
    # distortion with the solver's own variables (from_rates clips identically)
    xx = x.copy()
    if prob.has_theta:
        xx[prob.it] = th
    viol = residuals(s, policy)
    sl, se = prob.slacks(xx)
    duals = {}
    for lab, v in zip(prob.labels, sl):
        duals[lab] = 1.0 / (t * v) if v > 0 else math.inf
    for lab, v in zip(prob.elabels, se):
        duals[lab] = 1.0 / (t * v) if v > 0 else math.inf
    status = "Optimal" if ok and viol <= prob.cfg.tol_feas else "MaxIter"
    if ok and viol > prob.cfg.tol_feas:
        log.warning("solution violates constraints by %.3g", viol)
    obj = float(np.sum(policy.distortion))
    return SolveReport(policy, obj, viol, its, status, duals)


def residuals(s: Scenario, policy: Policy) -> float:
    """Largest violation of scheduling, bound and energy constraints (>= 0)."""
    from .model import slot_energy

    n = s.n_slots
    A_, b_, _ = _reduced_rows(n, s.delay, s.buffer_max)
    x = np.concatenate([policy.src_rate, policy.cap_rate])
    worst = 0.0
    if len(b_):
        worst = max(worst, float(np.max(A_ @ x - b_)))
    worst = max(worst, float(-np.min(x)))
    for v in (policy.burst, policy.sample_frac):
        worst = max(worst, float(-np.min(v)), float(np.max(v) - 1))
    spent = np.cumsum(slot_energy(policy, s))
    avail = s.cumulative_energy()
    if s.harvesting:
        worst = max(worst, float(np.max(spent - avail)))
    else:
        worst = max(worst, float(spent[-1] - avail[-1]))
    return max(worst, 0.0)


def solve(s: Scenario, cfg: SolverConfig = SolverConfig()) -> SolveReport:
    """Solve any scenario (battery/harvest, optional processing/sampling cost)."""
    if s.total_energy <= 0:
        pol = Policy.zeros(s)
        return SolveReport(pol, float(np.sum(pol.distortion)), residuals(s, pol), 0, "Optimal", {})
    prob = Problem(s, cfg)
    total_its = 0
    for _ in range(2 * s.n_slots + 2):
        x0 = prob.initial_point()
        if x0 is None or not prob.strictly_feasible(x0):
            # budgets too small for even the minimal burst/sampling fractions:
            # treat every remaining slot as idle
            pol = Policy.zeros(s)
            return SolveReport(pol, float(np.sum(pol.distortion)), residuals(s, pol),
                               total_its, "Optimal", {})
        x, t, its, ok = _newton_path(prob, x0, cfg.max_newton - total_its)
        total_its += its
        if not ok:
            return _report(prob, x, t, total_its, False)
        snap = np.zeros(prob.nvar, bool)
        if prob.has_theta:
            snap[prob.it] = x[prob.it] <= cfg.snap_factor * cfg.theta_floor
        if prob.has_phi:
            snap[prob.ip] = x[prob.ip] <= cfg.snap_factor * cfg.phi_floor
        snap &= ~prob.fixed
        if not snap.any():
            return _report(prob, x, t, total_its, True)
        prob = Problem(s, cfg, prob.fixed | snap)
    return _report(prob, x, t, total_its, True)


def _check(s: Scenario, proc: bool, samp: bool, harvest: Optional[bool]):
    if (s.proc_cost > 0) != proc or (s.samp_cost > 0) != samp:
        raise ValueError(f"scenario has proc_cost={s.proc_cost}, samp_cost={s.samp_cost}; "
                         "use the matching solve_* function or solve()")
    if harvest is not None and s.harvesting != harvest:
        raise ValueError("energy model does not match this solver")


def solve_battery(s: Scenario, cfg: SolverConfig = SolverConfig()) -> SolveReport:
    _check(s, False, False, False)
    return solve(s, cfg)


def solve_harvest(s: Scenario, cfg: SolverConfig = SolverConfig()) -> SolveReport:
    _check(s, False, False, True)
    return solve(s, cfg)


def solve_processing(s: Scenario, cfg: SolverConfig = SolverConfig()) -> SolveReport:
    _check(s, True, False, None)
    return solve(s, cfg)


def solve_sampling(s: Scenario, cfg: SolverConfig = SolverConfig()) -> SolveReport:
    _check(s, False, True, None)
    return solve(s, cfg)
