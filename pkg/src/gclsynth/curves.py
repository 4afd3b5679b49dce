"""Piecewise-linear cumulative curves (bytes over microseconds) and min-plus operators.

A curve is a list of pieces ``(t, value, slope)`` with strictly increasing ``t`` starting at
0; on ``[t_i, t_{i+1})`` the curve equals ``value_i + slope_i * (t - t_i)``.  Curves are
right-continuous, so a token bucket has ``value(0) == burst``.  All arithmetic uses
``Fraction`` so comparisons are exact.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Number = int | Fraction


class UnstableQueue(ArithmeticError):
    """Long-run arrival rate exceeds the guaranteed service rate."""


def _q(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class CumulativeCurve:
    pieces: tuple[tuple[Fraction, Fraction, Fraction], ...]

    def __post_init__(self):
        pcs = tuple((_q(t), _q(v), _q(s)) for t, v, s in self.pieces)
        if not pcs or pcs[0][0] != 0:
            raise ValueError("curve must start at t=0")
        for (t0, v0, s0), (t1, v1, _) in zip(pcs, pcs[1:]):
            if t1 <= t0:
                raise ValueError("breakpoints must be strictly increasing")
            if v1 < v0 + s0 * (t1 - t0):
                raise ValueError("curve must be nondecreasing")
        if any(s < 0 for _, _, s in pcs) or pcs[0][1] < 0:
            raise ValueError("curve must be nondecreasing and start nonnegative")
        object.__setattr__(self, "pieces", pcs)

    # -- constructors ----------------------------------------------------
    @classmethod
    def token_bucket(cls, burst: Number, rate: Number) -> "CumulativeCurve":
        return cls(((0, burst, rate),))

    @classmethod
    def rate_latency(cls, rate: Number, latency: Number) -> "CumulativeCurve":
        if latency < 0 or rate < 0:
            raise ValueError("rate and latency must be nonnegative")
        if latency == 0:
            return cls(((0, 0, rate),))
        return cls(((0, 0, 0), (latency, 0, rate)))

    # -- inspection ------------------------------------------------------
    @property
    def breakpoints(self) -> list[Fraction]:
        return [t for t, _, _ in self.pieces]

    @property
    def final_slope(self) -> Fraction:
        return self.pieces[-1][2]

    @property
    def burst(self) -> Fraction:
        return self.pieces[0][1]

    @property
    def latency(self) -> Fraction:
        """First instant after which the curve is positive (0 for a curve with a burst)."""
        for t, v, s in self.pieces:
            if v > 0 or s > 0:
                return t
        return self.pieces[-1][0]

    def _index(self, t: Fraction) -> int:
        return bisect.bisect_right(self.breakpoints, t) - 1

    def __call__(self, t: Number) -> Fraction:
        t = _q(t)
        if t < 0:
            return Fraction(0)
        t0, v, s = self.pieces[self._index(t)]
        return v + s * (t - t0)

    def left_limit(self, t: Number) -> Fraction:
        t = _q(t)
        if t <= 0:
            return Fraction(0)
        i = bisect.bisect_left(self.breakpoints, t) - 1
        t0, v, s = self.pieces[i]
        return v + s * (t - t0)

    def is_concave(self) -> bool:
        """Concave on (0, inf): slopes nonincreasing and no jumps after t=0."""
        for (t0, v0, s0), (t1, v1, s1) in zip(self.pieces, self.pieces[1:]):
            if s1 > s0 or v1 != v0 + s0 * (t1 - t0):
                return False
        return True

    def is_convex(self) -> bool:
        for (t0, v0, s0), (t1, v1, s1) in zip(self.pieces, self.pieces[1:]):
            if s1 < s0 or v1 != v0 + s0 * (t1 - t0):
                return False
        return True

    # -- algebra ---------------------------------------------------------
    def __add__(self, other: "CumulativeCurve") -> "CumulativeCurve":
        ts = sorted(set(self.breakpoints) | set(other.breakpoints))
        pieces = []
        for t in ts:
            pieces.append((t, self(t) + other(t),
                           self.pieces[self._index(t)][2] + other.pieces[other._index(t)][2]))
        return CumulativeCurve(tuple(pieces))

    def scaled(self, k: Number) -> "CumulativeCurve":
        k = _q(k)
        return CumulativeCurve(tuple((t, v * k, s * k) for t, v, s in self.pieces))

    def shifted_left(self, d: Number) -> "CumulativeCurve":
        """t -> self(t + d)."""
        d = _q(d)
        if d < 0:
            raise ValueError("shift must be nonnegative")
        pieces = [(Fraction(0), self(d), self.pieces[self._index(d)][2])]
        for t, v, s in self.pieces:
            if t > d:
                pieces.append((t - d, v, s))
        return CumulativeCurve(tuple(pieces))

    def pseudo_inverse(self, y: Number) -> Fraction:
        """inf{t >= 0 : self(t) >= y}; raises UnstableQueue if never reached."""
        y = _q(y)
        for i, (t0, v, s) in enumerate(self.pieces):
            if v >= y:
                return t0
            end = self.pieces[i + 1][0] if i + 1 < len(self.pieces) else None
            if s > 0:
                cross = t0 + (y - v) / s
                if end is None or cross < end:
                    return cross
        raise UnstableQueue(f"curve never reaches {y}")

    def __repr__(self):
        body = ", ".join(f"({float(t):g}, {float(v):g}, {float(s):g})" for t, v, s in self.pieces)
        return f"CumulativeCurve([{body}])"


def aggregate(curves: Iterable[CumulativeCurve]) -> CumulativeCurve:
    total = CumulativeCurve(((0, 0, 0),))
    for c in curves:
        total = total + c
    return total


def horizontal_deviation(arrival: CumulativeCurve, service: CumulativeCurve) -> Fraction:
    """sup over t of the time service needs to catch up with arrival(t)."""
    if arrival.final_slope > service.final_slope:
        raise UnstableQueue(f"arrival rate {arrival.final_slope} exceeds service rate {service.final_slope}")
    candidates = set(arrival.breakpoints)
    # instants where the arrival curve reaches a breakpoint value of the service curve
    for _, v, _ in service.pieces:
        try:
            t = arrival.pseudo_inverse(v)
        except UnstableQueue:
            continue
        candidates.add(t)
    best = Fraction(0)
    for t in candidates:
        y = arrival(t)
        best = max(best, service.pseudo_inverse(y) - t)
        if arrival.pieces[arrival._index(t)][2] > 0:
            # data arriving just after t waits until service strictly exceeds y
            best = max(best, _strict_inverse(service, y) - t)
    return best


def _strict_inverse(curve: CumulativeCurve, y: Fraction) -> Fraction:
    """inf{t >= 0 : curve(t) > y}."""
    for i, (t0, v, s) in enumerate(curve.pieces):
        if v > y:
            return t0
        end = curve.pieces[i + 1][0] if i + 1 < len(curve.pieces) else None
        if s > 0:
            cross = t0 + (y - v) / s
            if end is None or cross < end:
                return cross
    raise UnstableQueue(f"curve never exceeds {y}")


def deconvolve(arrival: CumulativeCurve, service: CumulativeCurve) -> CumulativeCurve:
    """Min-plus deconvolution of an arrival curve by a rate-latency service curve.

    For arrival slopes never above the service rate this is the arrival curve advanced
    by the service latency (a token bucket's burst grows by rate * latency).
    """
    rate, latency = service.final_slope, service.latency
    if not service.is_convex() or len(service.pieces) > 2:
        raise ValueError("deconvolution is implemented for rate-latency service curves")
    if arrival.final_slope > rate:
        raise UnstableQueue(f"arrival rate {arrival.final_slope} exceeds service rate {rate}")
    ends = arrival.breakpoints[1:] + [None]
    if any(s > rate for (_, _, s), end in zip(arrival.pieces, ends) if end is None or end > latency):
        raise ValueError("arrival slope above service rate past the latency")
    return arrival.shifted_left(latency)


def convolution_at(f: CumulativeCurve, g: CumulativeCurve, t: Number) -> Fraction:
    """(f (min,+)-convolved with g)(t), evaluated exactly at one instant."""
    t = _q(t)
    cands = {Fraction(0), t}
    cands.update(b for b in f.breakpoints if 0 < b < t)
    cands.update(t - b for b in g.breakpoints if 0 < t - b < t)
    best = min(f(s) + g(t - s) for s in cands)
    for s in cands:
        if 0 < s:
            best = min(best, f.left_limit(s) + g(t - s))
        if s < t:
            best = min(best, f(s) + g.left_limit(t - s))
    return best


def sampled_grid(horizon: Number, step: Number) -> Sequence[Fraction]:
    step = _q(step)
    n = int(_q(horizon) / step)
    return [k * step for k in range(n + 1)]
