import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from sensopt import (Battery, Harvest, Policy, Scenario, cap_from_power, distortion_from_rate,
                     power_from_cap, total_distortion)
from sensopt.model import slot_energy
from sensopt.presets import GAINS, VARIANCES, benchmark


@pytest.mark.parametrize("p,h,theta,want", [
    (0.0, 1.0, 1.0, 0.0),
    (3.0, 1.0, 1.0, 1.0),
    # 0.5 * log2(1.23); the buffer cap of 0.15 is just above it
    (1.15, 0.2, 1.0, 0.14932915778225758),
    (5.0, 1.0, 0.0, 0.0),
])
def test_cap_from_power_values(p, h, theta, want):
    assert cap_from_power(p, h, theta) == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("c,h,theta,want", [
    (0.0, 0.5, 1.0, 0.0),
    (1.0, 1.0, 1.0, 3.0),
    (0.5, 1.0, 0.5, 1.5),
    (0.0, 1.0, 0.0, 0.0),
])
def test_power_from_cap_values(c, h, theta, want):
    assert power_from_cap(c, h, theta) == pytest.approx(want, abs=1e-12)


@pytest.mark.parametrize("r,s2,phi,want", [
    (0.0, 0.7, 1.0, 0.7),
    (0.15, 0.7, 1.0, 0.7 * 2 ** -0.3),
    (0.5, 1.0, 0.5, 0.625),
    (0.0, 0.4, 0.0, 0.4),
])
def test_distortion_from_rate_values(r, s2, phi, want):
    assert distortion_from_rate(r, s2, phi) == pytest.approx(want, abs=1e-12)


def test_domain_errors():
    with pytest.raises(ValueError):
        cap_from_power(-1.0, 1.0)
    with pytest.raises(ValueError):
        cap_from_power(1.0, 0.0)
    with pytest.raises(ValueError):
        power_from_cap(0.1, 1.0, 0.0)
    with pytest.raises(ValueError):
        distortion_from_rate(0.1, 1.0, 0.0)


@given(st.floats(0, 1e3), st.floats(1e-3, 1e3), st.floats(1e-3, 1.0))
def test_power_cap_round_trip(p, h, theta):
    # power_from_cap returns the slot energy theta * p
    back = power_from_cap(cap_from_power(p, h, theta), h, theta) / theta
    assert back == pytest.approx(p, rel=1e-12, abs=1e-300)


@given(st.floats(0, 100), st.floats(1e-3, 10), st.floats(1e-3, 1))
def test_capacity_strictly_increasing(p, h, dp):
    assert cap_from_power(p + dp, h) > cap_from_power(p, h)
    assert cap_from_power(p + dp, h * 1.5) > cap_from_power(p + dp, h)


@given(st.floats(0, 10), st.floats(1e-2, 1), st.floats(0.01, 1))
def test_distortion_strictly_decreasing(r, phi, dr):
    # keep 2^(-2k) resolvable next to the uncollected share 1 - phi
    assume((r + dr) / phi <= 10)
    assert distortion_from_rate(r + dr, 1.0, phi) < distortion_from_rate(r, 1.0, phi)


@given(st.floats(0.01, 2.0), st.floats(0, 1), st.floats(0.05, 5.0))
def test_distortion_within_clamp(b_max, frac, s2):
    r = frac * b_max
    D = distortion_from_rate(r, s2)
    assert s2 * 2 ** (-2 * b_max) * (1 - 1e-12) <= D <= s2


def test_zero_policy_distortion_is_sum_of_variances():
    s = benchmark()
    total = total_distortion(Policy.zeros(s), s)
    # the ten variances add up to 5.4
    assert total == pytest.approx(sum(VARIANCES)) == pytest.approx(5.4)


def test_total_distortion_dimension_mismatch():
    s = benchmark()
    small = Scenario((1.0,), (1.0,), Battery(1.0))
    with pytest.raises(ValueError):
        total_distortion(Policy.zeros(small), s)


def test_policy_from_rates_invariants():
    s = Scenario((0.5, 2.0), (1.0, 0.3), Battery(3.0), delay=2, proc_cost=0.1)
    pol = Policy.from_rates(s, [0.2, 0.4], [0.3, 0.25], burst=[0.5, 1.0])
    for i in range(2):
        assert cap_from_power(pol.power[i], s.h[i], pol.burst[i]) == pytest.approx(pol.cap_rate[i])
        assert pol.distortion[i] == pytest.approx(s.sigma2[i] * 2 ** (-2 * pol.src_rate[i]))
    e = slot_energy(pol, s)
    assert e == pytest.approx(pol.burst * (pol.power + 0.1))


def test_policy_dict_round_trip():
    s = benchmark()
    pol = Policy.from_rates(s, np.linspace(0, 0.1, 10), np.linspace(0, 0.1, 10))
    back = Policy.from_dict(pol.to_dict())
    for k in ("power", "cap_rate", "src_rate", "distortion", "burst", "sample_frac"):
        assert np.array_equal(getattr(back, k), getattr(pol, k))


@pytest.mark.parametrize("kwargs", [
    dict(gains=(1.0, 0.0), variances=(1.0, 1.0)),
    dict(gains=(1.0,), variances=(1.0, 1.0)),
    dict(gains=(1.0,), variances=(-1.0,)),
    dict(gains=(1.0,), variances=(1.0,), delay=2),
    dict(gains=(1.0,), variances=(1.0,), buffer_max=0.0),
    dict(gains=(1.0,), variances=(1.0,), proc_cost=-1.0),
])
def test_scenario_validation(kwargs):
    kwargs.setdefault("energy", Battery(1.0))
    with pytest.raises(ValueError):
        Scenario(**kwargs)


def test_energy_models_validate():
    with pytest.raises(ValueError):
        Battery(-1.0)
    with pytest.raises(ValueError):
        Harvest((1.0, -0.5))
    with pytest.raises(ValueError):
        Scenario((1.0, 1.0), (1.0, 1.0), Harvest((1.0,)))


def test_variant_and_validation_flags():
    base = benchmark()
    assert base.variant == "battery" and base.validated
    assert base.replace(proc_cost=1.0).variant == "processing"
    assert base.replace(samp_cost=1.0).variant == "sampling"
    h = Scenario(GAINS, VARIANCES, Harvest((1.0,) * 10))
    assert h.variant == "harvest" and h.validated
    assert not h.replace(proc_cost=0.5).validated
    assert h.cumulative_energy()[-1] == pytest.approx(10.0)
    assert h.total_energy == pytest.approx(10.0)
    assert math.isinf(benchmark(buffer_max=math.inf).buffer_max)
