"""Frame-level baselines for synchronized, scheduled end systems.

Every flow sends one frame per period and each frame gets a fixed offset on every link of
its route, so per-hop jitter is zero.  0GCL opens one gate window per frame; FGCL groups
back-to-back frames of one queue and period into a shared window.  Both run on the same
backtracking core; the two only differ in how candidate offsets are ordered and how windows
are derived afterwards.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from ..analysis import DelayReport, FlowDelay
from ..model import Flow, Instance, LinkId, WindowConfig
from ..schedule import Schedule

COMPARISON_WARNING = ("frame-level schedules assume scheduled, synchronized end systems; "
                      "with unsynchronized end systems they are a comparison mode only")


class Infeasible(RuntimeError):
    pass


class Timeout(RuntimeError):
    pass


@dataclass(frozen=True)
class FrameSlot:
    flow: str
    link: LinkId
    offset: int       # macroticks from the start of the flow's period
    duration: int     # macroticks
    queue: int


@dataclass
class FrameSchedule:
    instance: Instance
    method: str
    slots: dict[tuple[str, LinkId], FrameSlot]
    delta: int = 0
    # (link, queue) -> list of windows; frame -> index of its window in that list
    windows: dict[tuple[LinkId, int], list[WindowConfig]] = field(default_factory=dict)
    frame_window: dict[tuple[str, LinkId], int] = field(default_factory=dict)
    nodes: int = 0

    def flow_slots(self, flow: Flow) -> list[FrameSlot]:
        return [self.slots[(flow.id, lk)] for lk in flow.links]

    def latency_us(self, flow: Flow) -> int:
        slots = self.flow_slots(flow)
        first, last = slots[0], slots[-1]
        mt = self.instance.links
        return (last.offset + last.duration) * mt[last.link].macrotick_us - first.offset * mt[first.link].macrotick_us

    def report(self) -> DelayReport:
        out = {}
        for f in self.instance.flows:
            hops = []
            prev_end = None
            for s in self.flow_slots(f):
                mt = self.instance.links[s.link].macrotick_us
                end = (s.offset + s.duration) * mt
                hops.append((s.link, end - (prev_end if prev_end is not None else s.offset * mt)))
                prev_end = end
            out[f.id] = FlowDelay(f.id, f.deadline_us, self.latency_us(f), hops)
        return DelayReport(out)

    def release_offsets_us(self) -> dict[str, int]:
        return {f.id: self.slots[(f.id, f.links[0])].offset * self.instance.links[f.links[0]].macrotick_us
                for f in self.instance.flows}

    def to_schedule(self) -> Schedule:
        qmap = {(s.link, s.flow): s.queue for s in self.slots.values()
                if self.instance.is_switch(s.link[0])}
        return Schedule({k: tuple(v) for k, v in sorted(self.windows.items())}, method=self.method,
                        queue_map=qmap, meta={"release_offsets_us": self.release_offsets_us(),
                                             "latency_us": {f.id: self.latency_us(f) for f in self.instance.flows}})


def _hp(a: int, b: int) -> int:
    return math.lcm(a, b)


class FrameScheduler:
    """Depth-first assignment of (offset, queue) per frame and link, in route order.

    Candidate offsets for a frame are its earliest legal start, the ends of frames already
    placed on the same link and the instants at which frames already queued at the next switch
    leave it; with ``merge`` the ends of same-queue, same-period frames come
    first so that frames chain into shared windows.
    """

    def __init__(self, instance: Instance, delta_us: int = 0, queues: tuple[int, ...] | None = None,
                 merge: bool = False, time_budget: float = 30.0, node_limit: int = 2_000_000):
        self.instance = instance
        self.merge = merge
        self.time_budget = time_budget
        self.node_limit = node_limit
        self.queues = tuple(sorted(set(queues or {f.priority for f in instance.flows}), reverse=True))
        self.mt = {lk: instance.links[lk].macrotick_us for f in instance.flows for lk in f.links}
        self.delta = {lk: -(-delta_us // mt) for lk, mt in self.mt.items()}
        self.delta_us = delta_us
        self.dur = {(f.id, lk): instance.links[lk].tx_time_mt(instance.wire_bytes(f))
                    for f in instance.flows for lk in f.links}
        self.period = {}
        for f in instance.flows:
            for lk in f.links:
                if f.period_us % self.mt[lk]:
                    raise Infeasible(f"period of {f.id} is not a multiple of the macrotick on {lk}")
                self.period[(f.id, lk)] = f.period_us // self.mt[lk]
        self.order = sorted(instance.flows, key=lambda f: (f.period_us, -len(f.links), f.id))
        self.slots: dict[tuple[str, LinkId], FrameSlot] = {}
        self.on_link: dict[LinkId, list[FrameSlot]] = {}
        self.nodes = 0

    # -- constraint checks against placed frames -----------------------------
    def _link_ok(self, s: FrameSlot) -> bool:
        ti = self.period[(s.flow, s.link)]
        for o in self.on_link.get(s.link, ()):
            tj = self.period[(o.flow, o.link)]
            hp = _hp(ti, tj)
            for a in range(hp // ti):
                x = s.offset + a * ti
                for b in range(hp // tj):
                    y = o.offset + b * tj
                    if x < y + o.duration and y < x + s.duration:
                        return False
        return True

    def _isolation_ok(self, s: FrameSlot, flow: Flow) -> bool:
        """Frames sharing an egress queue of a switch never interleave inside it."""
        link = s.link
        prev = flow.links[flow.links.index(link) - 1]
        arr_i = self.slots[(flow.id, prev)].offset
        ti = self.period[(s.flow, link)]
        d = self.delta[link]
        for o in self.on_link.get(link, ()):
            if o.queue != s.queue:
                continue
            g = self.instance.flow(o.flow)
            arr_j = self.slots[(o.flow, g.links[g.links.index(link) - 1])].offset
            tj = self.period[(o.flow, link)]
            hp = _hp(ti, tj)
            for a in range(hp // ti):
                for b in range(hp // tj):
                    if not (s.offset + a * ti + d <= arr_j + b * tj
                            or o.offset + b * tj + d <= arr_i + a * ti):
                        return False
        return True

    def _candidates(self, flow: Flow, hop: int):
        link = flow.links[hop]
        key = (flow.id, link)
        t, dur = self.period[key], self.dur[key]
        if hop == 0:
            lb = 0
        else:
            p = self.slots[(flow.id, flow.links[hop - 1])]
            lb = p.offset + p.duration + self.delta[link]
        ub = t - dur
        first = self.slots.get((flow.id, flow.links[0]))
        if hop > 0:
            # end-to-end bound with the remaining hops packed back to back
            rest = sum(self.dur[(flow.id, lk)] + self.delta[lk] for lk in flow.links[hop + 1:])
            limit = first.offset + (flow.deadline_us - self.delta_us) // self.mt[link] - dur - rest
            ub = min(ub, limit)
        if lb > ub:
            return []
        joins, ends = [], set()
        for o in self.on_link.get(link, ()):
            to = self.period[(o.flow, link)]
            for b in range(_hp(t, to) // to):
                end = o.offset + b * to + o.duration
                for a in range(_hp(t, to) // t):
                    c = end - a * t
                    if lb <= c <= ub:
                        ends.add(c)
                        if self.merge and to == t and b == 0 and a == 0:
                            joins.append((c, o.queue))
        if hop + 1 < len(flow.links):
            # frames may only enter the next switch queue once earlier frames have left it
            nxt = flow.links[hop + 1]
            for o in self.on_link.get(nxt, ()):
                to = self.period[(o.flow, nxt)]
                for b in range(_hp(t, to) // to):
                    rel = o.offset + b * to + self.delta[nxt]
                    for a in range(_hp(t, to) // t):
                        c = rel - a * t
                        if lb <= c <= ub:
                            ends.add(c)
        switch = self.instance.is_switch(link[0])
        queues = (flow.priority,) + tuple(q for q in self.queues if q != flow.priority) if switch \
            else (flow.priority,)
        out = []
        seen = set()
        for c, q in sorted(joins):
            if q in queues and (c, q) not in seen:
                seen.add((c, q))
                out.append((c, q))
        for c in sorted(ends | {lb}):
            for q in queues:
                if (c, q) not in seen:
                    seen.add((c, q))
                    out.append((c, q))
        return out

    # -- search --------------------------------------------------------------
    def solve(self) -> dict[tuple[str, LinkId], FrameSlot]:
        frames = [(f, h) for f in self.order for h in range(len(f.links))]
        start = time.monotonic()
        self._check_capacity()

        def place(i: int) -> bool:
            if i == len(frames):
                return True
            self.nodes += 1
            if self.nodes > self.node_limit or (self.nodes % 512 == 0
                                                and time.monotonic() - start > self.time_budget):
                raise Timeout(f"search stopped after {self.nodes} nodes")
            flow, hop = frames[i]
            link = flow.links[hop]
            key = (flow.id, link)
            for c, q in self._candidates(flow, hop):
                s = FrameSlot(flow.id, link, c, self.dur[key], q)
                if not self._link_ok(s):
                    continue
                if self.instance.is_switch(link[0]) and not self._isolation_ok(s, flow):
                    continue
                self.slots[key] = s
                self.on_link.setdefault(link, []).append(s)
                if place(i + 1):
                    return True
                self.on_link[link].pop()
                del self.slots[key]
            return False

        if not place(0):
            raise Infeasible(f"no frame schedule exists within the candidate offsets "
                             f"({self.nodes} nodes explored)")
        return dict(self.slots)

    def _check_capacity(self) -> None:
        load: dict[LinkId, float] = {}
        for (fid, lk), d in self.dur.items():
            load[lk] = load.get(lk, 0) + d / self.period[(fid, lk)]
        for lk, u in load.items():
            if u > 1:
                raise Infeasible(f"link {lk[0]}->{lk[1]} is overloaded ({u:.2f})")


def _frame_windows(instance: Instance, slots, merge: bool):
    """Gate windows on switch egress ports derived from frame slots."""
    groups: dict[tuple[LinkId, int, int], list[FrameSlot]] = {}
    period = {}
    for s in slots.values():
        if not instance.is_switch(s.link[0]):
            continue
        t = instance.flow(s.flow).period_us // instance.links[s.link].macrotick_us
        period[(s.flow, s.link)] = t
        groups.setdefault((s.link, s.queue, t), []).append(s)
    windows: dict[tuple[LinkId, int], list[WindowConfig]] = {}
    fmap: dict[tuple[str, LinkId], int] = {}
    for (link, q, t), members in sorted(groups.items()):
        members.sort(key=lambda s: (s.offset, s.flow))
        runs: list[list[FrameSlot]] = []
        for s in members:
            if merge and runs and runs[-1][-1].offset + runs[-1][-1].duration == s.offset:
                runs[-1].append(s)
            else:
                runs.append([s])
        lst = windows.setdefault((link, q), [])
        for run in runs:
            for s in run:
                fmap[(s.flow, link)] = len(lst)
            lst.append(WindowConfig(run[0].offset, sum(s.duration for s in run), t))
    return windows, fmap


def _schedule(instance: Instance, method: str, merge: bool, delta_us: int, **kw) -> FrameSchedule:
    solver = FrameScheduler(instance, delta_us, merge=merge, **kw)
    slots = solver.solve()
    windows, fmap = _frame_windows(instance, slots, merge)
    return FrameSchedule(instance, method, slots, delta_us, windows, fmap, solver.nodes)


def schedule_0gcl(instance: Instance, delta_us: int = 0, **kw) -> FrameSchedule:
    """Zero-jitter frame schedule with one window per frame."""
    return _schedule(instance, "0gcl", False, delta_us, **kw)


def schedule_fgcl(instance: Instance, delta_us: int = 0, **kw) -> FrameSchedule:
    """Frame schedule whose back-to-back frames of a queue share windows."""
    return _schedule(instance, "fgcl", True, delta_us, **kw)


def frame_window_violations(fs: FrameSchedule) -> list[str]:
    """Window-size and frame-to-window consistency of a frame schedule."""
    out = []
    members: dict[tuple[LinkId, int, int], list[FrameSlot]] = {}
    for key, idx in fs.frame_window.items():
        s = fs.slots[key]
        wins = fs.windows.get((s.link, s.queue), [])
        if idx >= len(wins):
            out.append(f"{s.flow} on {s.link}: no window {idx}")
            continue
        w = wins[idx]
        members.setdefault((s.link, s.queue, idx), []).append(s)
        if not (w.offset <= s.offset and s.offset + s.duration <= w.offset + w.length):
            out.append(f"{s.flow} on {s.link}: frame [{s.offset}, {s.offset + s.duration}) "
                       f"outside window {w}")
    for (link, q, idx), ms in members.items():
        w = fs.windows[(link, q)][idx]
        if w.length != sum(s.duration for s in ms):
            out.append(f"window {idx} of queue {q} on {link}: length {w.length} "
                       f"!= sum of frame durations {sum(s.duration for s in ms)}")
    return out
