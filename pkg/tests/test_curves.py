from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from gclsynth.curves import (CumulativeCurve, UnstableQueue, aggregate, convolution_at, deconvolve,
                             horizontal_deviation)


def test_token_bucket_values():
    tb = CumulativeCurve.token_bucket(100, Fraction(1, 2))
    assert tb(0) == 100
    assert tb(10) == 105
    assert tb(-1) == 0


def test_rate_latency_shape():
    rl = CumulativeCurve.rate_latency(3, 7)
    assert rl(7) == 0
    assert rl(9) == 6
    assert rl.latency == 7


def test_horizontal_deviation_token_bucket_rate_latency():
    # b/R + latency
    d = horizontal_deviation(CumulativeCurve.token_bucket(30, 1), CumulativeCurve.rate_latency(3, 7))
    assert d == 17


def test_unstable_when_arrival_faster():
    with pytest.raises(UnstableQueue):
        horizontal_deviation(CumulativeCurve.token_bucket(1, 4), CumulativeCurve.rate_latency(3, 0))


def test_deconvolution_grows_burst_by_rate_times_latency():
    out = deconvolve(CumulativeCurve.token_bucket(10, 2), CumulativeCurve.rate_latency(5, 4))
    assert out.burst == 18
    assert out.final_slope == 2


def test_aggregate_adds_bursts_and_rates():
    a = aggregate([CumulativeCurve.token_bucket(10, 1), CumulativeCurve.token_bucket(5, 2)])
    assert (a.burst, a.final_slope) == (15, 3)


def test_nonmonotone_curve_rejected():
    with pytest.raises(ValueError):
        CumulativeCurve(((0, 5, 1), (2, 3, 1)))


@given(b=st.integers(0, 500), r=st.integers(1, 20), R=st.integers(21, 60), L=st.integers(0, 50))
def test_deviation_matches_closed_form(b, r, R, L):
    d = horizontal_deviation(CumulativeCurve.token_bucket(b, r), CumulativeCurve.rate_latency(R, L))
    assert d == L + Fraction(b, R)


@given(b=st.integers(0, 100), r=st.integers(0, 5), R=st.integers(6, 20), L=st.integers(0, 20),
       t=st.integers(0, 60))
def test_convolution_of_bucket_and_rate_latency(b, r, R, L, t):
    f = CumulativeCurve.token_bucket(b, r)
    g = CumulativeCurve.rate_latency(R, L)
    grid = [Fraction(k, 4) for k in range(4 * t + 1)]
    brute = min(f(s) + g(t - s) for s in grid)
    assert convolution_at(f, g, t) <= brute
