"""Closed-form and semi-closed-form policies for strict delay (d = 1).

With d = 1 every slot sends exactly what it samples, so ``r_i = c_i`` and the
problem separates per slot up to the energy constraint. Power allocation is a
2D waterfilling: slot ``i`` is a rectangle of width ``M_i = sigma_i/sqrt(h_i)``
whose bottom sits at ``K_i = 1/(sigma_i sqrt(h_i))``; filling it to level
``w`` costs ``M_i (w - K_i)`` energy, and the buffer caps the level at
``K_i 2^(2 B_max)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import lambertw

from .model import Policy, Scenario, cap_from_power

__all__ = [
    "SlotGeometry",
    "waterfill_battery_d1",
    "waterfill_harvest_d1",
    "proc_root_vp",
    "samp_root_vs",
    "samp_gain",
    "processing_policy_d1",
]

LN2 = math.log(2)
A = 2 * LN2


@dataclass(frozen=True)
class SlotGeometry:
    """Per-slot rectangle widths, bottoms and buffer ceilings."""

    M: np.ndarray
    K: np.ndarray
    cap_level: np.ndarray

    @classmethod
    def of(cls, s: Scenario) -> "SlotGeometry":
        sigma = np.sqrt(s.sigma2)
        sh = np.sqrt(s.h)
        K = 1.0 / (sigma * sh)
        cap = K * 2.0 ** (2 * s.buffer_max) if s.finite_buffer else np.full(s.n_slots, np.inf)
        return cls(sigma / sh, K, cap)

    def power_at(self, level: np.ndarray) -> np.ndarray:
        return self.M * np.maximum(np.minimum(self.cap_level, level) - self.K, 0.0)

    def level_of(self, power: np.ndarray) -> np.ndarray:
        return self.K + power / self.M


def _require_d1(s: Scenario, kind: str) -> None:
    if s.delay != 1:
        raise ValueError(f"{kind} closed form needs delay 1, got {s.delay}")


def _policy_from_power(s: Scenario, p: np.ndarray) -> Policy:
    c = np.array([cap_from_power(pi, hi) for pi, hi in zip(p, s.h)])
    if s.finite_buffer:
        c = np.minimum(c, s.buffer_max)
    return Policy.from_rates(s, c, c)


def _pour(geo: SlotGeometry, base: np.ndarray, energy: float, idx: slice, tol: float) -> np.ndarray:
    """Raise levels ``base[idx]`` to a common water line using ``energy``.

    Returns the new levels of the slots in ``idx``. Energy beyond what the
    caps can hold is left unused.
    """
    M, cap, lv = geo.M[idx], geo.cap_level[idx], base[idx]

    def used(w):
        return float(np.sum(M * (np.minimum(cap, np.maximum(lv, w)) - lv)))

    room = used(np.inf) if np.all(np.isfinite(cap)) else np.inf
    if energy <= 0:
        return lv.copy()
    if energy >= room:
        return np.maximum(lv, cap)
    lo = float(np.min(lv))
    # the cheapest slot alone absorbs ``energy`` here up to rounding; widen
    # until the sign change is strict (energy < room guarantees it happens)
    hi = float(np.min(lv + energy / M))
    width = max(hi - lo, 4 * np.finfo(float).eps * max(1.0, abs(lo)))
    while used(hi) < energy:
        width *= 2.0
        hi = lo + width
    w = brentq(lambda w: used(w) - energy, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps,
               maxiter=200)
    return np.minimum(cap, np.maximum(lv, w))


def waterfill_battery_d1(s: Scenario, tol: float = 1e-13) -> Policy:
    """Battery-powered, d = 1: single water level found by root bracketing."""
    _require_d1(s, "battery")
    if s.harvesting or s.proc_cost > 0 or s.samp_cost > 0:
        raise ValueError("waterfill_battery_d1 handles the plain battery model only")
    geo = SlotGeometry.of(s)
    level = _pour(geo, geo.K.copy(), s.total_energy, slice(None), tol)
    return _policy_from_power(s, geo.power_at(level))


def waterfill_harvest_d1(s: Scenario, tol: float = 1e-13) -> Policy:
    """Directional waterfilling under energy harvesting, d = 1.

    Packets are poured from the last arrival backwards; packet ``j`` can only
    raise slots ``j..N`` and only where they sit below its water line.
    """
    _require_d1(s, "harvest")
    if s.proc_cost > 0 or s.samp_cost > 0:
        raise ValueError("waterfill_harvest_d1 handles the plain harvesting model only")
    geo = SlotGeometry.of(s)
    arrivals = np.asarray(s.energy.arrivals) if s.harvesting else np.r_[s.total_energy, np.zeros(s.n_slots - 1)]
    level = geo.K.copy()
    for j in range(s.n_slots - 1, -1, -1):
        if arrivals[j] > 0:
            level[j:] = _pour(geo, level, float(arrivals[j]), slice(j, None), tol)
    return _policy_from_power(s, geo.power_at(level))


def proc_root_vp(h: float, eps_p: float, tol: float = 1e-12) -> float:
    """Burst power threshold under a processing cost.

    Unique ``p >= 0`` with ``ln(1 + h p) (1/h + p) = eps_p + p``. The left
    side minus the right has derivative ``ln(1 + h p) > 0`` so the root is
    bracketed by doubling and then polished by Newton.
    """
    if not h > 0 or eps_p < 0:
        raise ValueError(f"proc_root_vp domain error: h={h}, eps_p={eps_p}")
    if eps_p == 0:
        return 0.0

    def F(p):
        return math.log1p(h * p) * (1 / h + p) - eps_p - p

    hi = max(1.0, eps_p)
    while F(hi) < 0:
        hi *= 2
    p = brentq(F, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    for _ in range(5):
        d = math.log1p(h * p)
        if d <= 0:
            break
        step = F(p) / d
        p -= step
        if abs(step) <= tol * max(1.0, p):
            break
    return p


def samp_gain(k):
    """Marginal value of collecting more samples at per-sample rate ``k``.

    ``g(k) = 1 - 2^(-2k) (1 + 2 ln2 k)``, which is ``-d/dphi`` of the
    partial-sampling distortion divided by ``sigma^2``.
    """
    x = A * np.asarray(k, dtype=float)
    return -np.expm1(-x) - x * np.exp(-x)


def samp_root_vs(sigma2: float, scaled_cost: float, tol: float = 1e-12) -> float:
    """Per-sample rate ``k`` at which ``samp_gain(k) == scaled_cost``.

    ``sigma2`` is accepted for interface symmetry; the equation is already
    normalised by it. Returns ``math.inf`` when ``scaled_cost >= 1`` (the
    supremum of the gain), meaning no finite interior rate exists.
    """
    if not sigma2 > 0 or scaled_cost < 0:
        raise ValueError(f"samp_root_vs domain error: sigma2={sigma2}, cost={scaled_cost}")
    if scaled_cost == 0:
        return 0.0
    if scaled_cost >= 1:
        return math.inf
    # (1 + x) e^{-x} = 1 - s  <=>  x = -1 - W_{-1}(-(1 - s)/e)
    z = -(1 - scaled_cost) / math.e
    x = float(-1 - lambertw(z, -1).real) if scaled_cost > 1e-8 else math.nan
    if not math.isfinite(x) or x <= 0:
        # next to the branch point: g ~ x^2/2 - x^3/3
        x = math.sqrt(2 * scaled_cost) + 2 * scaled_cost / 3
    for _ in range(8):
        g = float(samp_gain(x / A)) - scaled_cost
        dg = x * math.exp(-x)  # derivative in x
        if dg <= 0 or abs(g) <= tol * 1e-2:
            break
        x -= g / dg
    return x / A


def processing_policy_d1(s: Scenario, tol: float = 1e-13) -> Policy:
    """Bursty policy for a battery with processing cost, d = 1.

    A slot idles, bursts at the threshold power ``v_p`` for a fraction
    ``theta < 1`` of the slot, or transmits over the whole slot with the
    usual waterfilling power. Per slot the cheapest energy for rate ``c`` is
    linear (``c * k``) up to ``u = log2(1 + h v_p)/2`` and ``(2^(2c)-1)/h +
    eps_p`` beyond; the multiplier is found by bracketing total energy.
    """
    _require_d1(s, "processing")
    if s.harvesting or s.samp_cost > 0:
        raise ValueError("processing_policy_d1 handles battery + processing cost only")
    if s.proc_cost == 0:
        return waterfill_battery_d1(s, tol)
    n, h, sig2, eps = s.n_slots, s.h, s.sigma2, s.proc_cost
    vp = np.array([proc_root_vp(hi, eps) for hi in h])
    u = 0.5 * np.log2(1 + h * vp)
    slope = (vp + eps) / u
    bmax = s.buffer_max

    def energy_of(c):
        return np.where(c <= u, c * slope, np.expm1(A * c) / h + eps)

    def rate_at(lam):
        # stationarity: A sig2 2^{-2c} = lam e'(c)
        with np.errstate(divide="ignore"):
            lin = 0.5 * np.log2(A * sig2 / (lam * slope))
            full = 0.25 * np.log2(sig2 * h / lam)
        c = np.where(lin <= u, np.maximum(lin, 0.0), np.maximum(full, u))
        return np.minimum(c, bmax)

    E = s.total_energy
    if E <= 0:
        return Policy.zeros(s)
    if math.isfinite(bmax) and float(np.sum(energy_of(np.full(n, bmax)))) <= E:
        c = np.full(n, bmax)
    else:
        def gap(loglam):
            return float(np.sum(energy_of(rate_at(math.exp(loglam))))) - E

        lo, hi = -1.0, 1.0
        while gap(lo) < 0:
            lo -= 2
        while gap(hi) > 0:
            hi += 2
        ll = brentq(gap, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        c = rate_at(math.exp(ll))
        # spend the bracketing residue on the marginal slots
        c = np.where(c > 0, c, 0.0)
    theta = np.where(c > 0, np.minimum(1.0, c / u), 0.0)
    return Policy.from_rates(s, c, c, burst=theta)
