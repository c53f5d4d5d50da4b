"""The ten-slot benchmark scenario used by the experiment scripts and tests."""

from __future__ import annotations

import math

from .model import Battery, Harvest, Scenario

GAINS = (0.4, 0.2, 0.2, 0.5, 0.4, 0.6, 0.9, 0.3, 0.4, 1.0)
VARIANCES = (0.7, 0.6, 1.0, 0.5, 0.3, 0.6, 0.2, 0.3, 0.7, 0.5)
HARVEST = (1.0, 0.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0)


def benchmark(energy: float = 4.0, buffer_max: float = 0.15, delay: int = 1,
              proc_cost: float = 0.0, samp_cost: float = 0.0) -> Scenario:
    return Scenario(GAINS, VARIANCES, Battery(energy), buffer_max, delay, proc_cost, samp_cost)


def benchmark_harvest(buffer_max: float = math.inf, delay: int = 1) -> Scenario:
    return Scenario(GAINS, VARIANCES, Harvest(HARVEST), buffer_max, delay)
