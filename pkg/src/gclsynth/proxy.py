"""Pruning proxy used by the window search: window capacity vs. transmission demand.

Both quantities are areas (byte x microsecond) under cumulative curves over one port
hyperperiod and are computed as exact fractions.  The comparison is a heuristic filter,
not a schedulability test; the delay analysis decides schedulability.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .model import (Flow, Instance, Link, LinkId, QueueKey, WindowConfig, guard_band,
                    hyperperiod_of_port, queue_flow_sets)


class WindowTooSmall(ValueError):
    pass


class NonHarmonicPeriod(ValueError):
    pass


@dataclass(frozen=True)
class CapacityBreakdown:
    s1: Fraction
    s2: Fraction
    s3: Fraction
    bytes_per_window: Fraction
    instances: int

    @property
    def total(self) -> Fraction:
        return self.s1 + self.s2 + self.s3


@dataclass(frozen=True)
class DemandBreakdown:
    a1: dict[str, Fraction]
    a2: dict[str, Fraction]

    @property
    def total(self) -> Fraction:
        return sum(self.a1.values(), Fraction(0)) + sum(self.a2.values(), Fraction(0))


@dataclass(frozen=True)
class ProxyCheck:
    capacity: CapacityBreakdown
    demand: DemandBreakdown

    @property
    def margin(self) -> Fraction:
        return self.capacity.total - self.demand.total

    @property
    def feasible(self) -> bool:
        return self.demand.total <= self.capacity.total


def window_capacity(window: WindowConfig, link: Link, guard_band_mt: int,
                    hyperperiod_us: int) -> CapacityBreakdown:
    """Area under the fluid capacity curve of a window over one hyperperiod.

    The bytes one opening can carry are the usable width (length minus guard band)
    divided by the per-byte transmission time; partial frames count.
    """
    mt = link.macrotick_us
    period, length, offset = window.period * mt, window.length * mt, window.offset * mt
    usable = length - guard_band_mt * mt
    if usable < 0:
        raise WindowTooSmall(f"window length {length} us shorter than guard band {guard_band_mt * mt} us")
    if hyperperiod_us % period:
        raise NonHarmonicPeriod(f"window period {period} does not divide hyperperiod {hyperperiod_us}")
    n = hyperperiod_us // period
    per_window = usable / link.byte_time_us
    s1 = n * length * per_window / 2
    s2 = n * (period - length - offset) * per_window
    s3 = Fraction(n * (n - 1), 2) * period * per_window
    return CapacityBreakdown(Fraction(s1), Fraction(s2), Fraction(s3), Fraction(per_window), n)


def transmission_demand(all_flows: Sequence[Flow], switch_flows: Sequence[Flow], backlog: int,
                        hyperperiod_us: int, overhead_bytes: int = 0) -> DemandBreakdown:
    """Area under the cumulative arrival staircase of the queue over one hyperperiod.

    Every flow releases a frame at the start of each of its periods; flows arriving from a
    switch add a backlog term, clamped at zero so a demand never turns negative.
    """
    if backlog < 1:
        raise ValueError("backlog must be >= 1")
    a1: dict[str, Fraction] = {}
    a2: dict[str, Fraction] = {}
    for f in all_flows:
        if hyperperiod_us % f.period_us:
            raise NonHarmonicPeriod(f"flow {f.id} period {f.period_us} does not divide {hyperperiod_us}")
        n = hyperperiod_us // f.period_us
        a1[f.id] = Fraction(n * (n + 1), 2) * f.period_us * (f.payload_bytes + overhead_bytes)
    for f in switch_flows:
        if hyperperiod_us % f.period_us:
            raise NonHarmonicPeriod(f"flow {f.id} period {f.period_us} does not divide {hyperperiod_us}")
        n = hyperperiod_us // f.period_us
        raw = Fraction(n * (n + 1 - 2 * backlog), 2) * f.period_us * (f.payload_bytes + overhead_bytes)
        a2[f.id] = max(Fraction(0), raw)
    return DemandBreakdown(a1, a2)


class QueueProxy:
    """Precomputed per-queue inputs of the proxy so the search can re-evaluate cheaply."""

    def __init__(self, instance: Instance, backlog: int):
        self.instance = instance
        self.backlog = backlog
        self.sets = queue_flow_sets(instance)
        self._demand: dict[QueueKey, DemandBreakdown] = {}
        self._gb: dict[QueueKey, int] = {}
        self._hp: dict[LinkId, int] = {}
        for key in self.sets:
            if key[0] not in self._hp:
                self._hp[key[0]] = hyperperiod_of_port(key[0], instance.flows)
        for key, qf in self.sets.items():
            link = instance.links[key[0]]
            self._gb[key] = guard_band(link, qf.all_flows, instance.overhead_bytes)
            self._demand[key] = transmission_demand(qf.all_flows, qf.from_switch, backlog,
                                                    self._hp[key[0]], instance.overhead_bytes)

    def hyperperiod(self, link: LinkId) -> int:
        return self._hp[link]

    def guard_band(self, key: QueueKey) -> int:
        return self._gb[key]

    def check(self, key: QueueKey, window: WindowConfig) -> ProxyCheck:
        link = self.instance.links[key[0]]
        cap = window_capacity(window, link, self._gb[key], self._hp[key[0]])
        return ProxyCheck(cap, self._demand[key])


def timing_feasible(link: LinkId, assignment: Mapping[QueueKey, WindowConfig], instance: Instance,
                    backlog: int = 1, proxy: QueueProxy | None = None) -> dict[int, ProxyCheck]:
    """Capacity >= demand test for every ST queue of one port."""
    proxy = proxy or QueueProxy(instance, backlog)
    return {q: proxy.check((lk, q), w) for (lk, q), w in sorted(assignment.items()) if lk == link}
