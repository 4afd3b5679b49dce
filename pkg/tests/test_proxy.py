import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from gclsynth.model import Flow, Link, WindowConfig
from gclsynth.proxy import (NonHarmonicPeriod, ProxyCheck, WindowTooSmall, timing_feasible, transmission_demand,
                            window_capacity)

from conftest import line_instance

LINK = Link("SW1", "ES3", 100)


def _f(fid, l, t, src="ES1"):
    return Flow(fid, l, t, 7, t, (src, "SW1", "ES3"))


def fluid_capacity_area(phi, w, T, gb, hp, byte_time):
    """Trapezoid integration of the fluid capacity curve on the 1 us grid (exact: breaks are integral)."""
    per_open = Fraction(w - gb) / byte_time

    def cap(t):
        k, r = divmod(t, T)
        done = k * per_open
        if r < phi:
            return done
        if r < phi + w:
            return done + per_open * Fraction(r - phi, w)
        return done + per_open

    return sum((cap(t) + cap(t + 1)) / 2 for t in range(hp))


def staircase_demand_area(flows, switch_flows, hp):
    total = Fraction(0)
    for t in range(hp):
        total += sum(f.payload_bytes * (t // f.period_us + 1) for f in flows)
        total += sum(f.payload_bytes * (t // f.period_us) for f in switch_flows)
    return total


def test_capacity_worked_example():
    cap = window_capacity(WindowConfig(3, 4, 10), LINK, 0, 30)
    assert cap.bytes_per_window == 50
    assert (cap.s1, cap.s2, cap.s3) == (300, 450, 1500)
    assert cap.total == 2250


def test_capacity_zero_usable():
    assert window_capacity(WindowConfig(3, 4, 10), LINK, 4, 30).total == 0


def test_capacity_offset_zero_matches_integration():
    cap = window_capacity(WindowConfig(0, 4, 10), LINK, 0, 30)
    assert cap.s2 == 900 and cap.total == 2700
    assert fluid_capacity_area(0, 4, 10, 0, 30, LINK.byte_time_us) == 2700


def test_capacity_guard_band_too_large():
    with pytest.raises(WindowTooSmall):
        window_capacity(WindowConfig(0, 4, 10), LINK, 5, 30)


def test_capacity_nonharmonic():
    with pytest.raises(NonHarmonicPeriod):
        window_capacity(WindowConfig(0, 4, 7), LINK, 0, 30)


def test_demand_worked_example():
    f1, f2, f3 = _f("f1", 50, 5), _f("f2", 60, 6), _f("f3", 100, 15)
    d = transmission_demand([f1, f2, f3], [f3], 1, 30)
    assert d.a1 == {"f1": 5250, "f2": 5400, "f3": 4500}
    assert d.a2 == {"f3": 1500}
    assert d.total == 16650


def test_demand_single_switch_flow():
    f3 = _f("f3", 100, 15)
    assert transmission_demand([f3], [f3], 1, 30).total == 6000
    assert staircase_demand_area([f3], [f3], 30) == 6000


def test_demand_empty():
    assert transmission_demand([], [], 1, 30).total == 0


def test_demand_nonharmonic():
    with pytest.raises(NonHarmonicPeriod):
        transmission_demand([_f("f", 10, 7)], [], 1, 30)


def test_worked_example_is_infeasible():
    chk = ProxyCheck(window_capacity(WindowConfig(3, 4, 10), LINK, 0, 30),
                     transmission_demand([_f("f1", 50, 5), _f("f2", 60, 6), _f("f3", 100, 15)],
                                         [_f("f3", 100, 15)], 1, 30))
    assert not chk.feasible
    assert chk.margin == -14400


def test_always_open_window_feasible_for_light_load():
    f = Flow("f", 100, 1000, 7, 1000, ("ES1", "SW1", "SW2", "ES3"))
    inst = line_instance([f])
    checks = timing_feasible(("SW1", "SW2"), {(("SW1", "SW2"), 7): WindowConfig(0, 1000, 1000)}, inst)
    assert checks[7].feasible


def test_zero_demand_feasible():
    chk = ProxyCheck(window_capacity(WindowConfig(0, 2, 10), LINK, 0, 30), transmission_demand([], [], 1, 30))
    assert chk.feasible


def _random_window(rng):
    T = rng.choice([2, 3, 4, 5, 6, 10, 12, 15])
    hp = T * rng.randint(1, 6)
    w = rng.randint(1, T)
    phi = rng.randint(0, T - w)
    gb = rng.randint(0, w)
    return phi, w, T, gb, hp


def test_capacity_oracle_many_random_configurations():
    rng = random.Random(7)
    for _ in range(1000):
        phi, w, T, gb, hp = _random_window(rng)
        link = Link("a", "b", rng.choice([10, 100, 1000]))
        cap = window_capacity(WindowConfig(phi, w, T), link, gb, hp)
        assert cap.total == fluid_capacity_area(phi, w, T, gb, hp, link.byte_time_us)
        assert min(cap.s1, cap.s2, cap.s3) >= 0


def test_demand_oracle_many_random_configurations():
    rng = random.Random(11)
    for _ in range(1000):
        hp = rng.choice([12, 30, 60])
        periods = [p for p in range(1, hp + 1) if hp % p == 0]
        flows = [_f(f"f{i}", rng.randint(1, 200), rng.choice(periods)) for i in range(rng.randint(0, 4))]
        sw = [f for f in flows if rng.random() < 0.5]
        assert transmission_demand(flows, sw, 1, hp).total == staircase_demand_area(flows, sw, hp)


@given(extra=st.integers(1, 500), base=st.integers(1, 500))
def test_demand_nondecreasing_in_frame_size(extra, base):
    a = transmission_demand([_f("f", base, 10)], [], 1, 30).total
    b = transmission_demand([_f("f", base + extra, 10)], [], 1, 30).total
    assert b >= a


@given(st.permutations([("a", 50, 5), ("b", 60, 6), ("c", 100, 15)]))
def test_feasibility_permutation_invariant(order):
    flows = [_f(*x) for x in order]
    d = transmission_demand(flows, flows[:1], 1, 30)
    base = transmission_demand(flows, flows[:1], 1, 30)
    assert d.total == base.total
    swapped = transmission_demand(list(reversed(flows)), flows[:1], 1, 30)
    assert swapped.total == d.total


@given(b=st.integers(1, 6))
def test_backlog_never_increases_demand(b):
    f3 = _f("f3", 100, 5)
    assert transmission_demand([f3], [f3], b + 1, 30).total <= transmission_demand([f3], [f3], b, 30).total
