"""Discrete-event simulation of 802.1Qbv switches fed by unsynchronized end systems.

End systems release frames strictly periodically from a per-flow phase and send them
immediately under strict priority.  Switches are store-and-forward, queue frames per traffic
class, and transmit a head-of-line frame only while its gate is open and the whole frame fits
before the gate closes (look-ahead).  Time is kept in integer nanoseconds.
"""
from __future__ import annotations

import bisect
import heapq
import math
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .model import Instance, LinkId, WindowConfig
from .schedule import Schedule

NS_PER_US = 1000


class ConfigError(ValueError):
    pass


# -- gate primitives (macrotick domain) -------------------------------------

def gate_state(window: WindowConfig, t) -> bool:
    """True when the window's gate is open at time ``t`` (same unit as the window)."""
    return window.offset <= t % window.period < window.offset + window.length


def window_close(window: WindowConfig, t):
    """Closing instant of the opening that contains ``t``."""
    base = t - t % window.period
    return base + window.offset + window.length


def transmission_eligible(tx_time, window: WindowConfig | None, t) -> bool:
    """Look-ahead: the gate is open and the whole frame ends no later than the gate closes."""
    if window is None or window.always_open:
        return True
    return gate_state(window, t) and t + tx_time <= window_close(window, t)


def strict_priority_select(heads: Mapping[int, object | None], eligible) -> int | None:
    """Highest-priority queue whose head-of-line frame is eligible; ``eligible(q, frame)``."""
    for q in sorted(heads, reverse=True):
        frame = heads[q]
        if frame is not None and eligible(q, frame):
            return q
    return None


# -- gate timeline in ns ----------------------------------------------------

class GateTimeline:
    """Union of a queue's periodic windows, precomputed over one cycle in nanoseconds."""

    def __init__(self, windows: Sequence[WindowConfig], mt_ns: int):
        self.cycle = math.lcm(*(w.period for w in windows)) * mt_ns
        raw = []
        for w in windows:
            if w.length == 0:
                continue
            for k in range(self.cycle // (w.period * mt_ns)):
                a = (w.offset + k * w.period) * mt_ns
                raw.append((a, a + w.length * mt_ns))
        raw.sort()
        merged: list[list[int]] = []
        for a, b in raw:
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        self.always_open = len(merged) == 1 and merged[0] == [0, self.cycle]
        self.never_open = not merged
        self.starts = [a for a, _ in merged]
        self.ends = [b for _, b in merged]
        # an opening that runs into the cycle boundary continues into the first one
        self.wraps = bool(merged) and merged[0][0] == 0 and merged[-1][1] == self.cycle and len(merged) > 1

    def _close_of(self, i: int, base: int) -> int:
        end = base + self.ends[i]
        if self.wraps and i == len(self.starts) - 1:
            end = base + self.cycle + self.ends[0]
        return end

    def close_at(self, t: int) -> int | None:
        """Close instant of the opening containing t, or None if the gate is closed at t."""
        if self.always_open:
            return None
        base = t - t % self.cycle
        r = t - base
        i = bisect.bisect_right(self.starts, r) - 1
        if i < 0 or r >= self.ends[i]:
            return None
        return self._close_of(i, base)

    def is_open(self, t: int) -> bool:
        return self.always_open or self.close_at(t) is not None

    def fits(self, t: int, tx: int) -> bool:
        if self.always_open:
            return True
        close = self.close_at(t)
        return close is not None and t + tx <= close

    def next_fit(self, t: int, tx: int) -> int | None:
        """Earliest instant >= t at which a frame of duration tx may start."""
        if self.always_open:
            return t
        if self.never_open:
            return None
        if self.fits(t, tx):
            return t
        base = t - t % self.cycle
        r = t - base
        i = bisect.bisect_right(self.starts, r)
        n = len(self.starts)
        for step in range(2 * n + 1):
            j = i + step
            cyc, k = divmod(j, n)
            b = base + cyc * self.cycle
            start = b + self.starts[k]
            if start < t:
                continue
            if start + tx <= self._close_of(k, b):
                return start
        return None


# -- simulation -------------------------------------------------------------

@dataclass
class SimConfig:
    seed: int = 0
    phases_ns: Mapping[str, int] | None = None
    duration_us: int | None = None
    processing_delay_us: int = 0
    trace: bool = False
    queue_capacity: int | None = None


@dataclass
class FlowStats:
    frames: int = 0
    max_delay_ns: int = 0
    total_delay_ns: int = 0

    @property
    def mean_delay_ns(self) -> float:
        return self.total_delay_ns / self.frames if self.frames else 0.0

    @property
    def max_delay_us(self) -> Fraction:
        return Fraction(self.max_delay_ns, NS_PER_US)


@dataclass
class HopRecord:
    link: LinkId
    queue: int
    enqueued_ns: int
    start_ns: int
    end_ns: int


@dataclass
class FrameRecord:
    flow: str
    index: int
    release_ns: int
    hops: list[HopRecord] = field(default_factory=list)
    delivered_ns: int | None = None


@dataclass
class SimResult:
    flows: dict[str, FlowStats]
    phases_ns: dict[str, int]
    duration_ns: int
    dropped: int = 0
    undelivered: int = 0
    trace: list[FrameRecord] = field(default_factory=list)

    def max_delay_us(self, flow_id: str) -> Fraction:
        return self.flows[flow_id].max_delay_us

    def rows(self) -> list[dict]:
        return [{"flow": fid, "frames": s.frames, "max_delay_us": float(s.max_delay_us),
                 "mean_delay_us": s.mean_delay_ns / NS_PER_US}
                for fid, s in sorted(self.flows.items())]


def tx_time_ns(nbytes: int, speed_mbps: int) -> int:
    return -(-nbytes * 8 * NS_PER_US // speed_mbps)


class _Port:
    __slots__ = ("link", "speed", "queues", "gates", "busy", "wake_at", "prios")

    def __init__(self, link: LinkId, speed: int):
        self.link = link
        self.speed = speed
        self.queues: dict[int, deque] = {}
        self.gates: dict[int, GateTimeline] = {}
        self.busy = False
        self.wake_at: int | None = None
        self.prios: list[int] = []


_TX_END, _ARRIVE, _WAKE, _RELEASE = 0, 1, 2, 3


def draw_phases(instance: Instance, seed: int) -> dict[str, int]:
    rng = random.Random(seed)
    return {f.id: rng.randrange(f.period_us * NS_PER_US) for f in instance.flows}


def simulate(instance: Instance, schedule: Schedule, config: SimConfig | None = None) -> SimResult:
    config = config or SimConfig()
    hp = instance.global_hyperperiod()
    duration = (config.duration_us if config.duration_us is not None else 2 * hp) * NS_PER_US
    if duration < 2 * hp * NS_PER_US:
        raise ConfigError(f"duration must cover at least two hyperperiods ({2 * hp} us)")
    phases = dict(config.phases_ns) if config.phases_ns is not None else draw_phases(instance, config.seed)
    for f in instance.flows:
        if not 0 <= phases.get(f.id, -1) < f.period_us * NS_PER_US:
            raise ConfigError(f"phase of {f.id} must lie in [0, period)")
    proc = config.processing_delay_us * NS_PER_US

    ports: dict[LinkId, _Port] = {}
    flows = list(instance.flows)
    routes = [f.links for f in flows]
    queue_at: list[list[int]] = []
    txs: list[list[int]] = []
    for f in flows:
        qs, ts = [], []
        for i, lk in enumerate(f.links):
            link = instance.links[lk]
            port = ports.get(lk)
            if port is None:
                port = ports[lk] = _Port(lk, link.speed_mbps)
            q = f.priority if i == 0 else schedule.queue_of(lk, f)
            if q not in port.queues:
                port.queues[q] = deque()
                if i > 0:
                    wins = schedule.windows.get((lk, q))
                    if not wins:
                        raise ConfigError(f"no window for queue {q} on {lk[0]}->{lk[1]}")
                    port.gates[q] = GateTimeline(wins, link.macrotick_us * NS_PER_US)
            qs.append(q)
            ts.append(tx_time_ns(instance.wire_bytes(f), link.speed_mbps))
        queue_at.append(qs)
        txs.append(ts)
    for port in ports.values():
        port.prios = sorted(port.queues, reverse=True)

    stats = {f.id: FlowStats() for f in flows}
    trace: list[FrameRecord] = []
    heap: list = []
    seq = 0
    for idx, f in enumerate(flows):
        heapq.heappush(heap, (phases[f.id], seq, _RELEASE, idx, 0))
        seq += 1
    dropped = 0
    capacity = config.queue_capacity

    def try_transmit(port: _Port, t: int) -> None:
        nonlocal seq
        if port.busy:
            return
        wake = None
        for q in port.prios:
            dq = port.queues[q]
            if not dq:
                continue
            frame = dq[0]
            tx = txs[frame[0]][frame[2]]
            gate = port.gates.get(q)
            if gate is None or gate.fits(t, tx):
                dq.popleft()
                port.busy = True
                if frame[3] is not None:
                    frame[3].hops[-1].start_ns = t
                    frame[3].hops[-1].end_ns = t + tx
                heapq.heappush(heap, (t + tx, seq, _TX_END, port, frame))
                seq += 1
                return
            nxt = gate.next_fit(t, tx)
            if nxt is not None and (wake is None or nxt < wake):
                wake = nxt
        if wake is not None and (port.wake_at is None or wake < port.wake_at or port.wake_at <= t):
            port.wake_at = wake
            heapq.heappush(heap, (wake, seq, _WAKE, port, None))
            seq += 1

    def enqueue(frame: list, t: int) -> None:
        nonlocal dropped
        idx, hop = frame[0], frame[2]
        port = ports[routes[idx][hop]]
        q = queue_at[idx][hop]
        dq = port.queues[q]
        if capacity is not None and len(dq) >= capacity:
            dropped += 1
            return
        if frame[3] is not None:
            frame[3].hops.append(HopRecord(port.link, q, t, -1, -1))
        dq.append(frame)
        try_transmit(port, t)

    while heap:
        t, _, kind, a, b = heapq.heappop(heap)
        if kind == _TX_END:
            port, frame = a, b
            port.busy = False
            idx = frame[0]
            frame[2] += 1
            if frame[2] == len(routes[idx]):
                delay = t - frame[1]
                st = stats[flows[idx].id]
                st.frames += 1
                st.total_delay_ns += delay
                if delay > st.max_delay_ns:
                    st.max_delay_ns = delay
                if frame[3] is not None:
                    frame[3].delivered_ns = t
            elif proc:
                heapq.heappush(heap, (t + proc, seq, _ARRIVE, frame, None))
                seq += 1
            else:
                enqueue(frame, t)
            try_transmit(port, t)
        elif kind == _ARRIVE:
            enqueue(a, t)
        elif kind == _RELEASE:
            idx, k = a, b
            f = flows[idx]
            rec = FrameRecord(f.id, k, t) if config.trace else None
            if rec is not None:
                trace.append(rec)
            enqueue([idx, t, 0, rec], t)
            nxt = t + f.period_us * NS_PER_US
            if nxt < duration:
                heapq.heappush(heap, (nxt, seq, _RELEASE, idx, k + 1))
                seq += 1
        else:
            port = a
            if port.wake_at == t:
                port.wake_at = None
            try_transmit(port, t)

    undelivered = sum(len(dq) for p in ports.values() for dq in p.queues.values())
    return SimResult(stats, phases, duration, dropped, undelivered, trace)
