import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from gclsynth.analysis import (RateLatencyAnalyzer, analyze, flow_arrival_curve, flow_wcd, hop_delay_bound,
                               output_arrival_curve, tdma_deviation, window_service_curve)
from gclsynth.curves import CumulativeCurve
from gclsynth.model import AnalysisParams, Flow, Link, WindowConfig
from gclsynth.proxy import WindowTooSmall
from gclsynth.schedule import Schedule

from conftest import line_instance

LINK = Link("SW1", "SW2", 100)


def _uniform(instance, window):
    """Same window on every switch egress queue in use."""
    return Schedule.from_assignment({k: window for k in instance.st_queues()})


def test_arrival_curve():
    a = flow_arrival_curve(Flow("f", 100, 10, 7, 10, ("ES1", "SW1", "ES3")))
    assert a(0) == 100 and a(10) == 200
    assert a.is_concave()
    doubled = a + a
    for t in range(0, 50, 7):
        assert doubled(t) == 2 * a(t)


def test_service_always_open():
    s = window_service_curve(WindowConfig(0, 10, 10), LINK, 0)
    assert s.final_slope == Fraction(25, 2)
    assert s.latency == 0


def test_service_worked_example():
    s = window_service_curve(WindowConfig(0, 4, 10), LINK, 1)
    assert s.final_slope == Fraction(3, 10) * Fraction(25, 2)
    assert s.latency == 7


def test_service_halving_period():
    a = window_service_curve(WindowConfig(0, 8, 20), LINK, 2)
    b = window_service_curve(WindowConfig(0, 4, 10), LINK, 1)
    assert a.final_slope == b.final_slope
    assert b.latency * 2 == a.latency


def test_service_window_too_small():
    with pytest.raises(WindowTooSmall):
        window_service_curve(WindowConfig(0, 4, 10), LINK, 4)


def test_service_matches_worst_phase_gate():
    # discrete gate: worst phase starts right after the window closes
    T, w, gb = 10, 4, 1
    s = window_service_curve(WindowConfig(0, w, T), LINK, gb)
    rate = LINK.bytes_per_us
    for t in range(0, 60):
        served = sum(rate for x in range(t) if (x + w) % T < w - gb)
        assert s(t) <= served


def test_hop_delay_example():
    d = hop_delay_bound(CumulativeCurve.token_bucket(100, 10), CumulativeCurve.rate_latency(20, 5))
    assert d == 10


def test_hop_delay_grid_oracle():
    a, b = CumulativeCurve.token_bucket(100, 10), CumulativeCurve.rate_latency(20, 5)
    grid = [Fraction(k, 4) for k in range(200)]
    worst = max(min(d for d in grid if b(t + d) >= a(t)) for t in grid)
    assert worst == 10


def test_hop_delay_ideal():
    assert hop_delay_bound(CumulativeCurve.token_bucket(0, 10), CumulativeCurve.rate_latency(20, 0)) == 0


def test_hop_delay_burst_linear():
    b = CumulativeCurve.rate_latency(20, 5)
    d1 = hop_delay_bound(CumulativeCurve.token_bucket(100, 10), b) - 5
    d2 = hop_delay_bound(CumulativeCurve.token_bucket(200, 10), b) - 5
    assert d2 == 2 * d1


def test_output_curve():
    out = output_arrival_curve(CumulativeCurve.token_bucket(100, 10), CumulativeCurve.rate_latency(20, 5))
    assert out.burst == 150 and out.final_slope == 10
    same = output_arrival_curve(CumulativeCurve.token_bucket(100, 10), CumulativeCurve.rate_latency(20, 0))
    assert same.burst == 100 and same.final_slope == 10


def _staircase_inverse(y, T, u, C):
    if y <= 0:
        return Fraction(0)
    k = math.ceil(y / (C * u)) - 1
    return k * T + (T - u) + (y - k * C * u) / C


@pytest.mark.parametrize("burst, rate, T, u", [(100, 1, 10, 4), (30, Fraction(1, 2), 10, 3),
                                              (400, 2, 20, 12), (50, 0, 10, 4), (1, 3, 7, 5)])
def test_tdma_deviation_vs_staircase(burst, rate, T, u):
    C = Fraction(25, 2)
    step = Fraction(1, 16)
    grid = (step * k for k in range(int(6 * T / step)))
    sampled = max(_staircase_inverse(burst + rate * t, T, u, C) - t for t in grid)
    exact = tdma_deviation(burst, rate, T, u, C)
    assert sampled <= exact <= sampled + step


@given(st.integers(1, 2000), st.fractions(0, 5), st.integers(2, 40), st.data())
@settings(max_examples=60, deadline=None)
def test_tdma_not_above_rate_latency(burst, rate, T, data):
    u = data.draw(st.integers(1, T))
    C = Fraction(25, 2)
    if rate > C * u / T:
        return
    assert tdma_deviation(burst, rate, T, u, C) <= (T - u) + Fraction(burst) / (C * u / T)


def test_always_open_two_hops():
    f = Flow("f", 1000, 1000, 7, 1000, ("ES4", "SW2", "ES3"))
    inst = line_instance([f])
    fd = flow_wcd(f, _uniform(inst, WindowConfig(0, 1000, 1000)), inst)
    assert fd.wcd_us == 2 * 80
    assert fd.schedulable


def test_frame_longer_than_window_is_unschedulable():
    f = Flow("f", 150, 100, 7, 100, ("ES1", "SW1", "SW2", "ES3"))
    inst = line_instance([f])
    rep = analyze(inst, _uniform(inst, WindowConfig(0, 4, 10)))
    assert rep.flows["f"].unstable and not rep.all_schedulable
    assert rep.mean_wcd is None


def test_delta_and_processing_added():
    f = Flow("f", 1000, 1000, 7, 1000, ("ES4", "SW2", "ES3"))
    inst = line_instance([f])
    sched = _uniform(inst, WindowConfig(0, 1000, 1000))
    base = flow_wcd(f, sched, inst).wcd_us
    more = flow_wcd(f, sched, inst, AnalysisParams(delta_precision_us=5, processing_delay_us=3)).wcd_us
    assert more == base + 5 + 3


def test_store_and_forward_floor(two_flows):
    rep = analyze(two_flows, _uniform(two_flows, WindowConfig(0, 400, 1000)))
    for f in two_flows.flows:
        assert rep.flows[f.id].wcd_us >= len(f.links) * f.payload_bytes * 8 / 100


def test_monotone_in_window_length(single_flow):
    prev = None
    for w in range(100, 1001, 50):
        wcd = analyze(single_flow, _uniform(single_flow, WindowConfig(0, w, 1000))).flows["f1"].wcd_us
        if prev is not None and wcd is not None:
            assert wcd <= prev
        prev = wcd if wcd is not None else prev


def test_competing_flow_never_helps():
    f1 = Flow("f1", 500, 1000, 7, 1000, ("ES1", "SW1", "SW2", "ES3"))
    f2 = Flow("f2", 400, 1000, 7, 1000, ("ES2", "SW1", "SW2", "ES3"))
    alone, both = line_instance([f1]), line_instance([f1, f2])
    win = WindowConfig(0, 500, 1000)
    a = analyze(alone, _uniform(alone, win)).flows["f1"].wcd_us
    b = analyze(both, _uniform(both, win)).flows["f1"].wcd_us
    assert b >= a


def test_analyzer_is_pure(two_flows):
    an = RateLatencyAnalyzer(two_flows)
    sched = _uniform(two_flows, WindowConfig(0, 400, 1000))
    assert an.analyze(sched).rows() == an.analyze(sched).rows()


def test_offset_does_not_change_bound(single_flow):
    a = analyze(single_flow, _uniform(single_flow, WindowConfig(0, 300, 1000))).rows()
    b = analyze(single_flow, _uniform(single_flow, WindowConfig(700, 300, 1000))).rows()
    assert a == b
