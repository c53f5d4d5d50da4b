"""Water levels, buffer and battery trajectories, and structural checks.

The checks are the observable side of complementary slackness. Moving from
slot ``i`` to ``i + 1`` the power level ``nu = p + 1/h`` can only rise if
every constraint window starting at ``i + 1`` is tight, which means nothing
is left in the buffer at the end of slot ``i`` (or, when harvesting, the
battery ran dry). It can only fall if a window ending at slot ``i`` is
tight: a full buffer at the start of ``i + 1`` or a binding deadline. The
distortion level ``xi`` obeys the same rules shifted by one slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .model import Policy, Scenario, slot_energy
from .solver import _reduced_rows

__all__ = [
    "WaterProfile",
    "Finding",
    "InfeasiblePolicy",
    "violations",
    "extract_profile",
    "check_structure",
    "check_clamping",
]


class InfeasiblePolicy(ValueError):
    """A policy violates a named constraint."""

    def __init__(self, constraint: str, amount: float):
        super().__init__(f"policy violates {constraint} by {amount:.3g}")
        self.constraint = constraint
        self.amount = amount


@dataclass(frozen=True, eq=False)
class WaterProfile:
    """Per-slot levels and trajectories (NaN where a level is undefined)."""

    nu: np.ndarray
    xi: np.ndarray
    level: np.ndarray  # K_i + p_i / M_i, the 2D waterfilling height
    occupancy: np.ndarray  # buffer content at the start of each slot, after arrivals
    queue_end: np.ndarray  # buffer content at the end of each slot
    battery: np.ndarray  # energy left at the end of each slot

    def to_dict(self) -> dict:
        def clean(v):
            return [None if not math.isfinite(x) else float(x) for x in v]
        return {k: clean(getattr(self, k)) for k in
                ("nu", "xi", "level", "occupancy", "queue_end", "battery")}


@dataclass(frozen=True)
class Finding:
    check: str  # nu | xi | level | clamp | note
    slot: int  # 1-based; for transitions, the last slot before the change
    passed: bool
    detail: str

    def to_dict(self) -> dict:
        return {"check": self.check, "slot": self.slot, "passed": self.passed, "detail": self.detail}


def violations(s: Scenario, policy: Policy, tol: float = 1e-8) -> List[Tuple[str, float]]:
    """Constraints violated by more than ``tol`` (name, amount), worst first."""
    if policy.n_slots != s.n_slots:
        raise ValueError(f"policy has {policy.n_slots} slots, scenario has {s.n_slots}")
    out = []
    A_, b_, labels = _reduced_rows(s.n_slots, s.delay, s.buffer_max)
    x = np.concatenate([policy.src_rate, policy.cap_rate])
    for lab, v in zip(labels, A_ @ x - b_ if len(b_) else []):
        if v > tol:
            out.append((lab, float(v)))
    for nm, vec in (("r", policy.src_rate), ("c", policy.cap_rate), ("p", policy.power)):
        for i, v in enumerate(vec):
            if v < -tol:
                out.append((f"{nm}>=0[{i + 1}]", float(-v)))
    for nm, vec in (("theta", policy.burst), ("phi", policy.sample_frac)):
        for i, v in enumerate(vec):
            if v < -tol or v > 1 + tol:
                out.append((f"{nm} in [0,1][{i + 1}]", float(max(-v, v - 1))))
    spent = np.cumsum(slot_energy(policy, s))
    avail = s.cumulative_energy()
    idx = range(s.n_slots) if s.harvesting else [s.n_slots - 1]
    for i in idx:
        v = spent[i] - avail[i]
        if v > tol * max(1.0, avail[i]):
            out.append((f"energy[{i + 1}]" if s.harvesting else "energy", float(v)))
    return sorted(out, key=lambda kv: -kv[1])


def _windows(r: np.ndarray, c: np.ndarray, end_offset: int) -> np.ndarray:
    """``max_j [sum_{j..k} r - sum_{j..k-1+end_offset} c]^+`` for each k."""
    n = len(r)
    out = np.zeros(n)
    for k in range(n):
        best = 0.0
        for j in range(k + 1):
            best = max(best, r[j:k + 1].sum() - c[j:k + end_offset].sum())
        out[k] = best
    return out


def extract_profile(policy: Policy, s: Scenario, tol: float = 1e-8,
                    active_tol: float = 1e-6) -> WaterProfile:
    """Compute levels and trajectories; rejects infeasible policies."""
    bad = violations(s, policy, tol)
    if bad:
        raise InfeasiblePolicy(*bad[0])
    p, r, c = policy.power, policy.src_rate, policy.cap_rate
    h, s2 = s.h, s.sigma2
    on = p > active_tol
    nu = np.where(on, p + 1 / h, np.nan)
    phi = policy.sample_frac
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(phi > 0, r / np.where(phi > 0, phi, 1), 0.0)
    xi = np.where(phi > 0, s2 * 2.0 ** (-2 * k), s2)
    sig = np.sqrt(s2)
    level = 1 / (sig * np.sqrt(h)) + p * np.sqrt(h) / sig
    battery = s.cumulative_energy() - np.cumsum(slot_energy(policy, s))
    battery[np.abs(battery) < 1e-12 * max(1.0, s.total_energy)] = 0.0
    return WaterProfile(nu, xi, level, _windows(r, c, 0), _windows(r, c, 1), battery)


def _delay_tight(r, c, d, k_end: int, eps: float) -> Optional[int]:
    """Start index (1-based) of a tight deadline window whose sources end at ``k_end``."""
    n = len(r)
    m = k_end  # 0-based index of the last source in the window
    if m < 0 or m > n - 1 - d:
        return None
    for k in range(m + 1):
        gap = c[k:m + d].sum() - r[k:m + 1].sum()
        if abs(gap) <= eps:
            return k + 1
    return None


def check_clamping(policy: Policy, s: Scenario, tol: float = 1e-8) -> List[Finding]:
    if s.samp_cost > 0:
        return []
    lo = s.sigma2 * 2.0 ** (-2 * s.buffer_max) if s.finite_buffer else np.zeros(s.n_slots)
    out = []
    for i, (D, a, b) in enumerate(zip(policy.distortion, lo, s.sigma2)):
        if not a - tol <= D <= b + tol:
            out.append(Finding("clamp", i + 1, False,
                               f"D={D:.6g} outside [{a:.6g}, {b:.6g}]"))
    return out


def check_structure(profile: WaterProfile, policy: Policy, s: Scenario,
                    eps: float = 1e-5, active_tol: float = 1e-6) -> List[Finding]:
    """Check every level change against its complementary-slackness cause.

    Returns one finding per detected change (passed or not) plus notes for
    empty-battery events; an optimal policy yields no failed findings.
    """
    n, d, B = s.n_slots, s.delay, s.buffer_max
    r, c = policy.src_rate, policy.cap_rate
    occ, qend, bat = profile.occupancy, profile.queue_end, profile.battery
    out: List[Finding] = []

    def rise_ok(i):
        if qend[i] <= eps:
            return "buffer empty at end of slot"
        if s.harvesting and bat[i] <= eps:
            return "battery empty at end of slot"
        return None

    def fall_ok_nu(i):
        if math.isfinite(B) and occ[i + 1] >= B - eps:
            return "buffer full at start of next slot"
        k = _delay_tight(r, c, d, i - d + 1, eps)
        if k is not None:
            return f"deadline window from slot {k} tight"
        return None

    def fall_ok_xi(i):
        # window ending with source i: full buffer at the start of slot i
        # or a tight deadline on sources ..i
        if math.isfinite(B) and occ[i] >= B - eps:
            return "buffer full at start of slot"
        k = _delay_tight(r, c, d, i, eps)
        if k is not None:
            return f"deadline window from slot {k} tight"
        return None

    nu = profile.nu
    for i in range(n - 1):
        a, b = nu[i], nu[i + 1]
        if not (math.isfinite(a) and math.isfinite(b)):
            continue
        if b > a + eps:
            why = rise_ok(i)
            out.append(Finding("nu", i + 1, why is not None,
                               f"power level rises {a:.6g} -> {b:.6g}: {why or 'unexplained'}"))
        elif b < a - eps:
            why = fall_ok_nu(i)
            out.append(Finding("nu", i + 1, why is not None,
                               f"power level falls {a:.6g} -> {b:.6g}: {why or 'unexplained'}"))

    phi = policy.sample_frac
    lo_r, hi_r = active_tol, (B - active_tol if math.isfinite(B) else math.inf)
    free_r = (r > lo_r) & (r < hi_r) & (phi > 0)
    xi = profile.xi
    for i in range(n - 1):
        if not (free_r[i] and free_r[i + 1]):
            continue
        a, b = xi[i], xi[i + 1]
        if b > a + eps:
            why = rise_ok(i)
            out.append(Finding("xi", i + 1, why is not None,
                               f"distortion level rises {a:.6g} -> {b:.6g}: {why or 'unexplained'}"))
        elif b < a - eps:
            why = fall_ok_xi(i)
            out.append(Finding("xi", i + 1, why is not None,
                               f"distortion level falls {a:.6g} -> {b:.6g}: {why or 'unexplained'}"))

    if d == 1 and s.proc_cost == 0 and s.samp_cost == 0:
        out += _level_findings(profile, policy, s, eps, active_tol)

    if s.harvesting:
        for i in range(n - 1):
            if bat[i] <= eps and s.energy.arrivals[i + 1] > 0 and bat[i] < s.cumulative_energy()[i]:
                out.append(Finding("note", i + 1, True, f"battery empty at end of slot {i + 1}"))
    out += check_clamping(policy, s)
    return out


def _level_findings(profile, policy, s, eps, active_tol) -> List[Finding]:
    """Two-dimensional waterfilling geometry for d = 1."""
    p, r = policy.power, policy.src_rate
    B = s.buffer_max
    level, bat = profile.level, profile.battery
    capped = (r >= B - active_tol) if math.isfinite(B) else np.zeros(s.n_slots, bool)
    free = np.flatnonzero((p > active_tol) & ~capped)
    out = []
    for i, j in zip(free[:-1], free[1:]):
        a, b = level[i], level[j]
        if abs(b - a) <= eps:
            continue
        empty = [k for k in range(i, j) if bat[k] <= eps] if s.harvesting else []
        if b > a and empty:
            k = empty[-1] + 1
            out.append(Finding("level", k, True,
                               f"water level rises {a:.6g} -> {b:.6g} after slot {k}: battery empty"))
        else:
            out.append(Finding("level", i + 1, False,
                               f"water level changes {a:.6g} -> {b:.6g} between slots "
                               f"{i + 1} and {j + 1} without an empty battery"))
    if not s.harvesting and len(free):
        w = float(np.median(level[free]))
        K = 1 / np.sqrt(s.sigma2 * s.h)
        for i in range(s.n_slots):
            if p[i] <= active_tol and K[i] < w - eps:
                out.append(Finding("level", i + 1, False,
                                   f"idle slot bottom {K[i]:.6g} below water level {w:.6g}"))
            if capped[i] and level[i] > w + eps:
                out.append(Finding("level", i + 1, False,
                                   f"buffer-capped slot level {level[i]:.6g} above water level {w:.6g}"))
    return out
