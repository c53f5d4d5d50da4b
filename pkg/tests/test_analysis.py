import math

import numpy as np
import pytest

from scenarios import VARIANTS, random_general
from sensopt import Battery, Policy, Scenario, check_structure, extract_profile, solve
from sensopt.analysis import InfeasiblePolicy, check_clamping, violations
from sensopt.presets import benchmark, benchmark_harvest

INF = math.inf


def _failed(findings):
    return [f for f in findings if not f.passed]


def test_capped_benchmark_first_level():
    s = benchmark()
    pol = solve(s).policy
    prof = extract_profile(pol, s)
    # p_1 + 1/h_1 with p_1 = 0.5779 and h_1 = 0.4
    assert prof.nu[0] == pytest.approx(0.5779 + 2.5, abs=1e-3)
    assert math.isnan(prof.nu[7])  # slot 8 is idle
    assert not _failed(check_structure(prof, pol, s))


def test_zero_policy_profile():
    s = benchmark(delay=3)
    prof = extract_profile(Policy.zeros(s), s)
    assert np.all(prof.occupancy == 0) and np.all(prof.queue_end == 0)
    assert np.all(prof.battery == pytest.approx(s.total_energy))
    assert np.all(np.isnan(prof.nu))
    assert prof.xi == pytest.approx(s.sigma2)


def test_harvest_battery_runs_dry_before_second_packet():
    s = benchmark_harvest()
    pol = solve(s).policy
    prof = extract_profile(pol, s)
    assert prof.battery[[3, 4, 9]] == pytest.approx(0.0, abs=1e-8)
    assert prof.battery[5] > 1.0
    found = check_structure(prof, pol, s)
    notes = [f.detail for f in found if f.check == "note"]
    assert notes == ["battery empty at end of slot 5"]
    assert not _failed(found)


def test_infeasible_policy_names_constraint():
    s = benchmark()
    good = solve(s).policy
    bad = Policy.from_rates(s, good.src_rate * 2, good.cap_rate * 2)
    with pytest.raises(InfeasiblePolicy) as info:
        extract_profile(bad, s)
    assert info.value.constraint in {name for name, _ in violations(s, bad)}
    assert info.value.amount > 0


def test_policy_size_mismatch():
    with pytest.raises(ValueError):
        violations(benchmark(), Policy.zeros(Scenario((1.0,), (1.0,), Battery(1.0))))


def test_two_slot_buffer_limited():
    s = Scenario((1.0, 1.0), (1.0, 0.2), Battery(10.0), 0.2, 1)
    pol = solve(s).policy
    assert pol.src_rate == pytest.approx([0.2, 0.2], abs=1e-7)
    assert not check_clamping(pol, s)
    prof = extract_profile(pol, s)
    assert prof.occupancy == pytest.approx([0.2, 0.2], abs=1e-7)
    assert not _failed(check_structure(prof, pol, s))


def test_flat_policy_has_no_transitions():
    s = Scenario((1.0,) * 4, (1.0,) * 4, Battery(2.0), INF, 1)
    pol = solve(s).policy
    prof = extract_profile(pol, s)
    assert np.ptp(prof.nu) < 1e-8
    assert [f for f in check_structure(prof, pol, s) if f.check != "clamp"] == []


def test_full_delay_unbounded_buffer_flat_distortion():
    s = benchmark(delay=10, buffer_max=INF)
    pol = solve(s).policy
    prof = extract_profile(pol, s)
    active = pol.src_rate > 1e-6
    assert np.ptp(prof.xi[active]) < 1e-5
    assert not _failed(check_structure(prof, pol, s))


@pytest.mark.parametrize("kind", VARIANTS)
def test_random_optimal_policies_pass(kind):
    for s in random_general(kind, count=50, seed=3):
        rep = solve(s)
        prof = extract_profile(rep.policy, s)
        bad = _failed(check_structure(prof, rep.policy, s))
        assert not bad, (s, bad)


def test_perturbed_policy_is_flagged():
    s = benchmark(buffer_max=INF)
    pol = solve(s).policy
    # move energy from slot 1 to slot 3 and keep it feasible
    p = pol.power.copy()
    p[0] -= 0.2
    p[2] += 0.2
    c = 0.5 * np.log2(1 + s.h * p)
    moved = Policy.from_rates(s, c, c)
    prof = extract_profile(moved, s)
    assert _failed(check_structure(prof, moved, s))


def test_profile_serialises_nan_as_null():
    s = benchmark()
    d = extract_profile(solve(s).policy, s).to_dict()
    assert d["nu"][7] is None
    assert set(d) == {"nu", "xi", "level", "occupancy", "queue_end", "battery"}
