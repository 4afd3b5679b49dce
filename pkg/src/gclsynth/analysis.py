"""Conservative worst-case end-to-end delay analysis for window schedules.

End systems are unsynchronized, so every gated queue is served phase-obliviously: a single
window with usable width ``u = w - GB`` and period ``T`` guarantees, from the worst phase on,
the TDMA staircase ``C (k u + max(0, r - (T - u)))`` at ``t = kT + r``.  Its rate-latency
lower bound has rate ``C u / T`` and latency ``T - u``; queues with several windows use that
bound directly.  End systems transmit under non-preemptive strict priority.  Flows are
aggregated FIFO per queue, per-flow arrivals are periodic staircases shifted by the delay
accumulated upstream, and the per-port bounds are iterated to a fixed point because routes may form cyclic port dependencies.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Protocol, Sequence

from .curves import CumulativeCurve, UnstableQueue, deconvolve, horizontal_deviation
from .model import AnalysisParams, Flow, Instance, Link, LinkId, QueueKey, WindowConfig
from .proxy import WindowTooSmall
from .schedule import Schedule

MAX_PASSES = 200


class MissingWindow(KeyError):
    pass


# -- curves ---------------------------------------------------------------

def flow_arrival_curve(flow: Flow, overhead_bytes: int = 0) -> CumulativeCurve:
    """Token bucket of a strictly periodic source: one frame burst, rate l/T."""
    size = flow.payload_bytes + overhead_bytes
    return CumulativeCurve.token_bucket(size, Fraction(size, flow.period_us))


def _effective_intervals(windows: Sequence[WindowConfig], mt: int, gb_us: int):
    """Guaranteed-service intervals (us) within one cycle, or None when the gate never closes."""
    cycle = math.lcm(*(w.period for w in windows)) * mt
    raw = []
    for w in windows:
        if w.length == 0:
            continue
        for k in range(cycle // (w.period * mt)):
            a = (w.offset + k * w.period) * mt
            raw.append([a, a + w.length * mt])
    raw.sort()
    merged: list[list[int]] = []
    for a, b in raw:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    if len(merged) == 1 and merged[0] == [0, cycle]:
        return cycle, None
    if len(merged) > 1 and merged[0][0] == 0 and merged[-1][1] == cycle:
        first = merged.pop(0)
        merged[-1][1] = cycle + first[1]
    eff = [(a, b - gb_us) for a, b in merged if b - a > gb_us]
    return cycle, eff


@dataclass(frozen=True)
class QueueService:
    """Lower service of a gated queue; ``period``/``usable`` are set for a single window."""

    rate: Fraction
    latency: Fraction
    link_rate: Fraction
    period: int | None = None
    usable: int | None = None

    def curve(self) -> CumulativeCurve:
        return CumulativeCurve.rate_latency(self.rate, self.latency)

    def delay(self, burst: Fraction, rate: Fraction) -> Fraction:
        """Horizontal deviation between a token bucket and this service."""
        if rate > self.rate:
            raise UnstableQueue(f"arrival rate {rate} exceeds service rate {self.rate}")
        if self.period is None:
            return self.latency + (burst / self.rate if burst else 0)
        return tdma_deviation(burst, rate, self.period, self.usable, self.link_rate)

    def inverse(self, y: Fraction) -> Fraction:
        """Earliest time by which ``y`` bytes are guaranteed to have been served."""
        if y <= 0:
            return Fraction(0)
        if self.period is None:
            return self.latency + y / self.rate
        per_opening = self.link_rate * self.usable
        k = math.ceil(y / per_opening) - 1
        return k * self.period + (self.period - self.usable) + (y - k * per_opening) / self.link_rate

    def periodic_delay(self, members: Sequence[tuple[int, int, int]]) -> Fraction:
        """Delay bound for FIFO-aggregated periodic flows given as (size, period, jitter).

        Flow ``i`` delivers at most ``size * (floor((t + jitter) / period) + 1)`` bytes in any
        window of length ``t``.  The deviation only peaks at jumps of that staircase; the search
        over jumps stops once the token-bucket envelope cannot beat the running maximum, or
        after one common period of arrivals and service.
        """
        rate = sum((Fraction(l, T) for l, T, _ in members), Fraction(0))
        if rate > self.rate:
            raise UnstableQueue(f"arrival rate {rate} exceeds service rate {self.rate}")
        envelope = sum((l + Fraction(l * j, T) for l, T, j in members), Fraction(0))
        horizon = math.lcm(*(T for _, T, _ in members), self.period or 1)
        level = sum(l * (j // T + 1) for l, T, j in members)
        events = [(T - j % T, i) for i, (l, T, j) in enumerate(members)]
        heapq.heapify(events)
        best = self.inverse(Fraction(level))
        while events:
            t = events[0][0]
            if t > horizon or (rate < self.rate and self.latency + (envelope + rate * t) / self.rate - t <= best):
                break
            while events and events[0][0] == t:
                _, i = heapq.heappop(events)
                level += members[i][0]
                heapq.heappush(events, (t + members[i][1], i))
            best = max(best, self.inverse(Fraction(level)) - t)
        return best


def tdma_deviation(burst, rate, period: int, usable: int, link_rate) -> Fraction:
    """Worst delay of a token bucket through a periodic window seen from its worst phase.

    The inverse of the staircase jumps by ``T - u`` each time the backlog reaches a whole
    number of openings, and decreases between jumps, so the supremum is either at ``t = 0``
    or just after the first such level at or above the burst.
    """
    burst, rate, link_rate = Fraction(burst), Fraction(rate), Fraction(link_rate)
    per_opening = link_rate * usable
    gap = period - usable
    if burst <= 0:
        return Fraction(gap) if rate > 0 else Fraction(0)
    m = math.ceil(burst / per_opening)
    best = (m - 1) * period + gap + (burst - (m - 1) * per_opening) / link_rate
    if rate > 0:
        best = max(best, m * period + gap - (m * per_opening - burst) / rate)
    return best


@lru_cache(maxsize=65536)
def _queue_service(windows: tuple[WindowConfig, ...], speed_mbps: int, mt: int,
                   gb_mt: int) -> QueueService:
    link_rate = Fraction(speed_mbps, 8)
    cycle, eff = _effective_intervals(windows, mt, gb_mt * mt)
    if eff is None:
        return QueueService(link_rate, Fraction(0), link_rate)
    served = sum(b - a for a, b in eff)
    if served <= 0:
        raise WindowTooSmall("no window is longer than the guard band")
    rate = link_rate * Fraction(served, cycle)
    # worst latency: backlog starts when one guaranteed interval ends and waits for service to
    # catch up with the average rate somewhere later in the cycle
    latency = Fraction(0)
    n = len(eff)
    for i in range(n):
        end = eff[i][1]
        got = 0
        for k in range(1, n + 1):
            a, b = eff[(i + k) % n]
            start = a + (cycle if (i + k) >= n else 0)
            if start < end:
                start += cycle
            latency = max(latency, (start - end) - Fraction(got * cycle, served))
            got += b - a
    if len(eff) == 1 and len(windows) == 1:
        return QueueService(rate, latency, link_rate, cycle, served)
    return QueueService(rate, latency, link_rate)


def window_service_curve(window: WindowConfig, link: Link, guard_band_mt: int) -> CumulativeCurve:
    """Worst-phase rate-latency service of one periodic window."""
    if not window.always_open and window.length <= guard_band_mt:
        raise WindowTooSmall(f"window length {window.length} <= guard band {guard_band_mt}")
    return _queue_service((window,), link.speed_mbps, link.macrotick_us, guard_band_mt).curve()


def queue_service_curve(windows: Sequence[WindowConfig], link: Link, guard_band_mt: int) -> CumulativeCurve:
    """Rate-latency lower bound for a queue served by one or more periodic windows."""
    return _queue_service(tuple(windows), link.speed_mbps, link.macrotick_us, guard_band_mt).curve()


def _round_up(x: Fraction, mt: int) -> int:
    return math.ceil(x / mt) * mt


def hop_delay_bound(arrival: CumulativeCurve, service: CumulativeCurve, macrotick_us: int = 1) -> int:
    """Horizontal deviation rounded up to the macrotick.

    Arrival curves count a frame when it is completely received, so the deviation already
    bounds the instant its last byte leaves the port (store-and-forward included).
    """
    return _round_up(horizontal_deviation(arrival, service), macrotick_us)


def output_arrival_curve(arrival: CumulativeCurve, service: CumulativeCurve) -> CumulativeCurve:
    return deconvolve(arrival, service)


# -- reports --------------------------------------------------------------

@dataclass
class FlowDelay:
    flow_id: str
    deadline_us: int
    wcd_us: int | None
    hops: list[tuple[LinkId, int]] = field(default_factory=list)
    unstable: bool = False

    @property
    def schedulable(self) -> bool:
        return not self.unstable and self.wcd_us is not None and self.wcd_us <= self.deadline_us

    @property
    def slack_us(self) -> int | None:
        return None if self.wcd_us is None else self.deadline_us - self.wcd_us


@dataclass
class DelayReport:
    flows: dict[str, FlowDelay]
    unstable_queues: list[QueueKey] = field(default_factory=list)

    @property
    def all_schedulable(self) -> bool:
        return all(fd.schedulable for fd in self.flows.values())

    @property
    def mean_wcd(self) -> float | None:
        vals = [fd.wcd_us for fd in self.flows.values()]
        if not vals or any(v is None for v in vals):
            return None
        return sum(vals) / len(vals)

    def tardiness(self) -> float:
        """Normalised deadline overrun used to steer the search; 0 iff schedulable."""
        total = 0.0
        for fd in self.flows.values():
            if fd.unstable or fd.wcd_us is None:
                total += 10.0
            elif fd.wcd_us > fd.deadline_us:
                total += (fd.wcd_us - fd.deadline_us) / fd.deadline_us
        return total

    def rows(self) -> list[dict]:
        return [{"flow": fid, "wcd_us": fd.wcd_us, "deadline_us": fd.deadline_us,
                 "slack_us": fd.slack_us, "schedulable": fd.schedulable}
                for fid, fd in sorted(self.flows.items())]


class Analyzer(Protocol):
    def analyze(self, schedule: Schedule) -> DelayReport: ...


# -- analysis -------------------------------------------------------------

class RateLatencyAnalyzer:
    """Default analyzer; pure with respect to the schedule it is given."""

    def __init__(self, instance: Instance, params: AnalysisParams | None = None):
        self.instance = instance
        self.params = params or AnalysisParams()
        self._size = {f.id: instance.wire_bytes(f) for f in instance.flows}
        self._rate = {f.id: Fraction(self._size[f.id], f.period_us) for f in instance.flows}
        self._source = {f.id: self._source_delay(f) for f in instance.flows}

    def _source_delay(self, flow: Flow) -> int | None:
        """Delay from release to full transmission on the end system's link under SP."""
        first = flow.links[0]
        link = self.instance.links[first]
        others = self.instance.flows_on(first)
        higher = [g for g in others if g.priority > flow.priority]
        same = [g for g in others if g.priority == flow.priority]
        lower = [g for g in others if g.priority < flow.priority]
        hp_burst = sum(self._size[g.id] for g in higher)
        hp_rate = sum((self._rate[g.id] for g in higher), Fraction(0))
        blocking = max((self._size[g.id] for g in lower), default=0)
        rate = link.bytes_per_us - hp_rate
        same_rate = sum((self._rate[g.id] for g in same), Fraction(0))
        if rate <= 0 or same_rate > rate:
            return None
        latency = Fraction(hp_burst + blocking) / rate
        same_burst = sum(self._size[g.id] for g in same)
        return _round_up(latency + Fraction(same_burst) / rate, link.macrotick_us)

    def source_delay(self, flow: Flow) -> int | None:
        return self._source[flow.id]

    def service(self, schedule: Schedule, key: QueueKey, members: Sequence[Flow]) -> QueueService:
        if key not in schedule.windows:
            raise MissingWindow(f"no window for queue {key[1]} on {key[0][0]}->{key[0][1]}")
        link = self.instance.links[key[0]]
        gb = link.tx_time_mt(max(self._size[f.id] for f in members))
        return _queue_service(tuple(schedule.windows[key]), link.speed_mbps, link.macrotick_us, gb)

    def analyze(self, schedule: Schedule) -> DelayReport:
        inst, params = self.instance, self.params
        proc = params.processing_delay_us
        # switch hops of every flow, as queue keys
        hops: dict[str, list[QueueKey]] = {}
        members: dict[QueueKey, list[Flow]] = {}
        for f in inst.flows:
            keys = []
            for lk in f.links[1:]:
                key = (lk, schedule.queue_of(lk, f))
                keys.append(key)
                members.setdefault(key, []).append(f)
            hops[f.id] = keys

        unstable: set[QueueKey] = set()
        service: dict[QueueKey, QueueService] = {}
        load: dict[QueueKey, Fraction] = {}
        for key, fl in members.items():
            try:
                svc = self.service(schedule, key, fl)
            except WindowTooSmall:
                unstable.add(key)
                continue
            load[key] = sum((self._rate[f.id] for f in fl), Fraction(0))
            if load[key] > svc.rate:
                unstable.add(key)
            else:
                service[key] = svc

        # per queue: (size, period, source delay, upstream queue keys) of each member flow
        feeds: dict[QueueKey, list[tuple[int, int, int | None, tuple[QueueKey, ...]]]] = {}
        for f in inst.flows:
            for i, key in enumerate(hops[f.id]):
                feeds.setdefault(key, []).append(
                    (self._size[f.id], f.period_us, self._source[f.id], tuple(hops[f.id][:i])))
        delay: dict[QueueKey, int] = {k: 0 for k in service}
        order = sorted(service, key=lambda k: (max(len(up) for *_, up in feeds[k]), k))
        changed: list[QueueKey] = []
        for _ in range(MAX_PASSES):
            changed = []
            for key in order:
                if key in unstable:
                    continue
                arrivals = []
                for size, period, src, upstream in feeds[key]:
                    if src is None or any(k in unstable for k in upstream):
                        unstable.add(key)
                        break
                    arrivals.append((size, period, src + sum(delay[k] + proc for k in upstream)))
                if key in unstable:
                    changed.append(key)
                    continue
                d = _round_up(service[key].periodic_delay(arrivals), inst.links[key[0]].macrotick_us)
                if d > delay[key]:
                    delay[key] = d
                    changed.append(key)
            if not changed:
                break
        else:
            # no fixed point: the queues still growing are treated as unbounded
            unstable.update(changed)

        report: dict[str, FlowDelay] = {}
        for f in inst.flows:
            src = self._source[f.id]
            if src is None or any(k in unstable for k in hops[f.id]):
                report[f.id] = FlowDelay(f.id, f.deadline_us, None, unstable=True)
                continue
            per_hop = [(f.links[0], src + params.delta_precision_us)]
            per_hop += [(k[0], delay[k] + proc) for k in hops[f.id]]
            report[f.id] = FlowDelay(f.id, f.deadline_us, sum(d for _, d in per_hop), per_hop)
        return DelayReport(report, sorted(unstable))

    def flow_wcd(self, flow: Flow, schedule: Schedule) -> FlowDelay:
        return self.analyze(schedule).flows[flow.id]


def flow_wcd(flow: Flow, schedule: Schedule, instance: Instance,
             params: AnalysisParams | None = None) -> FlowDelay:
    return RateLatencyAnalyzer(instance, params).flow_wcd(flow, schedule)


def analyze(instance: Instance, schedule: Schedule, params: AnalysisParams | None = None) -> DelayReport:
    return RateLatencyAnalyzer(instance, params).analyze(schedule)
