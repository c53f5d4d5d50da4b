"""Scenario and policy data model, unit conversions and the distortion objective.

All rates are in bits per source sample (base-2 logs). Samples per slot and the
slot duration are normalised to one, so a per-slot power is also the energy the
slot consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "Battery",
    "Harvest",
    "Scenario",
    "Policy",
    "cap_from_power",
    "power_from_cap",
    "distortion_from_rate",
    "total_distortion",
    "slot_energy",
]

INF = math.inf


@dataclass(frozen=True)
class Battery:
    """All energy available at t=0."""

    energy: float

    def __post_init__(self):
        if not self.energy >= 0:
            raise ValueError(f"battery energy must be >= 0, got {self.energy}")


@dataclass(frozen=True)
class Harvest:
    """Energy packets arriving at the start of each slot."""

    arrivals: tuple

    def __post_init__(self):
        arr = tuple(float(e) for e in self.arrivals)
        if any(not e >= 0 for e in arr):
            raise ValueError("harvested energies must be >= 0")
        object.__setattr__(self, "arrivals", arr)


EnergyModel = Union[Battery, Harvest]


@dataclass(frozen=True)
class Scenario:
    """One offline problem instance.

    Parameters
    ----------
    gains : sequence of float
        Channel power gain ``h_i`` per slot.
    variances : sequence of float
        Source variance ``sigma_i^2`` per slot.
    energy : Battery or Harvest
    buffer_max : float
        Buffer size in bits/sample; ``math.inf`` for an unlimited buffer.
    delay : int
        Deadline in slots, ``1 <= delay <= n_slots``.
    proc_cost, samp_cost : float
        Energy per transmitted symbol / per collected sample.
    """

    gains: tuple
    variances: tuple
    energy: EnergyModel
    buffer_max: float = INF
    delay: int = 1
    proc_cost: float = 0.0
    samp_cost: float = 0.0

    def __post_init__(self):
        gains = tuple(float(g) for g in self.gains)
        variances = tuple(float(v) for v in self.variances)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "variances", variances)
        object.__setattr__(self, "buffer_max", float(self.buffer_max))
        n = len(gains)
        if n == 0:
            raise ValueError("scenario needs at least one slot")
        if len(variances) != n:
            raise ValueError(f"variances has length {len(variances)}, expected {n}")
        if any(not g > 0 for g in gains):
            raise ValueError("channel gains must be strictly positive")
        if any(not v > 0 for v in variances):
            raise ValueError("source variances must be strictly positive")
        if isinstance(self.energy, Harvest) and len(self.energy.arrivals) != n:
            raise ValueError(
                f"harvest vector has length {len(self.energy.arrivals)}, expected {n}"
            )
        if not isinstance(self.energy, (Battery, Harvest)):
            raise TypeError("energy must be Battery or Harvest")
        if not isinstance(self.delay, (int, np.integer)) or not 1 <= self.delay <= n:
            raise ValueError(f"delay must be an integer in [1, {n}], got {self.delay}")
        object.__setattr__(self, "delay", int(self.delay))
        if not self.buffer_max > 0:
            raise ValueError("buffer_max must be positive (or inf)")
        if not (self.proc_cost >= 0 and self.samp_cost >= 0):
            raise ValueError("processing and sampling costs must be >= 0")

    @property
    def n_slots(self) -> int:
        return len(self.gains)

    @property
    def h(self) -> np.ndarray:
        return np.asarray(self.gains)

    @property
    def sigma2(self) -> np.ndarray:
        return np.asarray(self.variances)

    @property
    def finite_buffer(self) -> bool:
        return math.isfinite(self.buffer_max)

    @property
    def harvesting(self) -> bool:
        return isinstance(self.energy, Harvest)

    def cumulative_energy(self) -> np.ndarray:
        """Energy available up to and including each slot."""
        if self.harvesting:
            return np.cumsum(self.energy.arrivals)
        return np.full(self.n_slots, float(self.energy.energy))

    @property
    def total_energy(self) -> float:
        return float(self.cumulative_energy()[-1])

    @property
    def variant(self) -> str:
        """Which energy model dominates: battery, harvest, processing or sampling."""
        if self.proc_cost > 0:
            return "processing"
        if self.samp_cost > 0:
            return "sampling"
        return "harvest" if self.harvesting else "battery"

    @property
    def validated(self) -> bool:
        # each extra energy constraint is only studied on its own
        active = sum([self.proc_cost > 0, self.samp_cost > 0, self.harvesting])
        return active <= 1

    def replace(self, **changes) -> "Scenario":
        from dataclasses import replace

        return replace(self, **changes)


def _arr(x, n=None) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if n is not None and a.shape != (n,):
        raise ValueError(f"expected a vector of length {n}, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class Policy:
    """Per-slot transmission policy.

    ``power`` is the power used while transmitting, i.e. during the burst
    fraction ``burst`` of the slot.
    """

    power: np.ndarray
    cap_rate: np.ndarray
    src_rate: np.ndarray
    distortion: np.ndarray
    burst: np.ndarray = field(default=None)
    sample_frac: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.power)
        for name in ("power", "cap_rate", "src_rate", "distortion"):
            object.__setattr__(self, name, _arr(getattr(self, name), n))
        for name in ("burst", "sample_frac"):
            v = getattr(self, name)
            object.__setattr__(self, name, np.ones(n) if v is None else _arr(v, n))

    @property
    def n_slots(self) -> int:
        return len(self.power)

    @classmethod
    def from_rates(cls, scenario: Scenario, src_rate, cap_rate, burst=None,
                   sample_frac=None) -> "Policy":
        """Build a consistent policy from source and channel rates."""
        n = scenario.n_slots
        r = np.clip(_arr(src_rate, n), 0.0, None)
        c = np.clip(_arr(cap_rate, n), 0.0, None)
        theta = np.ones(n) if burst is None else np.clip(_arr(burst, n), 0.0, 1.0)
        phi = np.ones(n) if sample_frac is None else np.clip(_arr(sample_frac, n), 0.0, 1.0)
        power = np.array([power_from_cap(ci, hi, ti) / ti if ti > 0 else 0.0
                          for ci, hi, ti in zip(c, scenario.h, theta)])
        dist = np.array([distortion_from_rate(ri, s2, fi)
                         for ri, s2, fi in zip(r, scenario.sigma2, phi)])
        return cls(power, c, r, dist, theta, phi)

    @classmethod
    def zeros(cls, scenario: Scenario) -> "Policy":
        n = scenario.n_slots
        z = np.zeros(n)
        return cls(z, z, z, scenario.sigma2.copy(),
                   np.zeros(n) if scenario.proc_cost > 0 else np.ones(n),
                   np.zeros(n) if scenario.samp_cost > 0 else np.ones(n))

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in
                ("power", "cap_rate", "src_rate", "distortion", "burst", "sample_frac")}

    @classmethod
    def from_dict(cls, d: dict) -> "Policy":
        return cls(d["power"], d["cap_rate"], d["src_rate"], d["distortion"],
                   d.get("burst"), d.get("sample_frac"))


def cap_from_power(p: float, h: float, theta: float = 1.0) -> float:
    """Bits per sample delivered by power ``p`` used over a fraction ``theta``."""
    if p < 0 or not h > 0 or not 0 <= theta <= 1:
        raise ValueError(f"cap_from_power domain error: p={p}, h={h}, theta={theta}")
    if theta == 0:
        return 0.0
    return 0.5 * theta * math.log1p(h * p) / math.log(2)


def power_from_cap(c: float, h: float, theta: float = 1.0) -> float:
    """Energy per slot needed to deliver ``c`` bits in a burst of length ``theta``.

    This is ``theta * (2**(2c/theta) - 1) / h``, the closed perspective of the
    inverse capacity; for ``theta == 1`` it is simply the power.
    """
    if c < 0 or not h > 0 or not 0 <= theta <= 1:
        raise ValueError(f"power_from_cap domain error: c={c}, h={h}, theta={theta}")
    if c == 0:
        return 0.0
    if theta == 0:
        raise ValueError("positive rate with zero burst length needs infinite power")
    return theta * math.expm1(2 * c / theta * math.log(2)) / h


def distortion_from_rate(r: float, sigma2: float, phi: float = 1.0) -> float:
    """MSE distortion of a Gaussian source compressed at ``r`` bits/sample.

    With partial sampling only a fraction ``phi`` of the samples is collected
    and the rest are reconstructed at their variance.
    """
    if r < 0 or not sigma2 > 0 or not 0 <= phi <= 1:
        raise ValueError(f"distortion_from_rate domain error: r={r}, sigma2={sigma2}, phi={phi}")
    if phi == 0:
        if r > 0:
            raise ValueError("positive rate with no collected samples")
        return sigma2
    if phi == 1:
        return sigma2 * 2.0 ** (-2 * r)
    return sigma2 * (1 - phi) + sigma2 * phi * 2.0 ** (-2 * r / phi)


def slot_energy(policy: Policy, scenario: Scenario) -> np.ndarray:
    """Energy consumed in each slot (transmission, processing and sampling)."""
    return (policy.burst * (policy.power + scenario.proc_cost)
            + scenario.samp_cost * policy.sample_frac)


def total_distortion(policy: Policy, scenario: Scenario) -> float:
    if policy.n_slots != scenario.n_slots:
        raise ValueError(
            f"policy has {policy.n_slots} slots, scenario has {scenario.n_slots}")
    return float(np.sum(policy.distortion))
