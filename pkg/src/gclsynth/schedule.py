"""Window schedules: per (port, queue) gate windows, GCL expansion and Gantt rows."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .model import MAX_QUEUES_PER_PORT, Flow, LinkId, QueueKey, WindowConfig, lcm_all


class NoWindows(ValueError):
    pass


@dataclass
class Schedule:
    """Gate windows per (egress link, queue); CPWO/WND use exactly one window per queue.

    ``queue_map`` overrides the priority->queue mapping for individual flows on a link
    (the frame-level baselines choose queues per frame).
    """

    windows: dict[QueueKey, tuple[WindowConfig, ...]]
    method: str = "cpwo"
    queue_map: dict[tuple[LinkId, str], int] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_assignment(cls, assignment: Mapping[QueueKey, WindowConfig], method: str = "cpwo",
                        **kw) -> "Schedule":
        return cls({k: (w,) for k, w in assignment.items()}, method=method, **kw)

    def queue_of(self, link: LinkId, flow: Flow) -> int:
        return self.queue_map.get((link, flow.id), flow.priority)

    def ports(self) -> list[LinkId]:
        return sorted({k[0] for k in self.windows})

    def queues_on(self, link: LinkId) -> list[int]:
        return sorted(q for (lk, q) in self.windows if lk == link)

    def single(self) -> dict[QueueKey, WindowConfig]:
        """The one-window-per-queue view; raises if a queue has several windows."""
        out = {}
        for k, ws in self.windows.items():
            if len(ws) != 1:
                raise ValueError(f"queue {k} has {len(ws)} windows")
            out[k] = ws[0]
        return out

    def all_windows(self) -> Iterable[tuple[QueueKey, WindowConfig]]:
        for k in sorted(self.windows):
            for w in self.windows[k]:
                yield k, w


def objective_omega(windows: Mapping[QueueKey, WindowConfig] | Schedule) -> Fraction:
    """Average window utilisation: sum of w/T over all windows divided by the window count."""
    if isinstance(windows, Schedule):
        items = [w for _, w in windows.all_windows()]
    else:
        items = list(windows.values())
    if not items:
        raise NoWindows("no windows to average over")
    return sum((w.utilization for w in items), Fraction(0)) / len(items)


def port_cycle(schedule: Schedule, link: LinkId) -> int:
    return lcm_all(w.period for q in schedule.queues_on(link) for w in schedule.windows[(link, q)])


def open_intervals(windows: Iterable[WindowConfig], horizon: int) -> list[tuple[int, int]]:
    """Periodic expansion of windows over [0, horizon), merged, in macroticks."""
    raw = []
    for w in windows:
        if w.length == 0:
            continue
        for start in range(w.offset, horizon, w.period):
            raw.append((start, min(start + w.length, horizon)))
    raw.sort()
    merged: list[tuple[int, int]] = []
    for a, b in raw:
        if merged and a <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], b))
        else:
            merged.append((a, b))
    return merged


def gantt_rows(schedule: Schedule, hyperperiods: Mapping[LinkId, int] | None = None) -> list[dict]:
    """Open intervals per (port, queue) over one port cycle, as plot-ready rows."""
    rows = []
    for link in schedule.ports():
        horizon = (hyperperiods or {}).get(link) or port_cycle(schedule, link)
        for q in schedule.queues_on(link):
            for a, b in open_intervals(schedule.windows[(link, q)], horizon):
                rows.append({"node": link[0], "port": f"{link[0]}->{link[1]}", "queue": q,
                             "open": a, "close": b})
    return rows


def gcl_entries(schedule: Schedule, link: LinkId, horizon: int | None = None) -> list[dict]:
    """Gate-state change list for one port over one cycle.

    The state string has one character per traffic class, class 7 first; ST gates follow
    their windows, the remaining classes are open whenever no ST window is open.
    """
    horizon = horizon or port_cycle(schedule, link)
    st = schedule.queues_on(link)
    per_queue = {q: open_intervals(schedule.windows[(link, q)], horizon) for q in st}
    cuts = {0}
    for ivs in per_queue.values():
        for a, b in ivs:
            cuts.update((a, b))
    cuts = sorted(t for t in cuts if t < horizon)
    entries = []
    prev = None
    for t in cuts:
        open_st = {q for q, ivs in per_queue.items() if any(a <= t < b for a, b in ivs)}
        state = "".join(
            ("o" if c in open_st else "C") if c in per_queue else ("C" if open_st else "o")
            for c in range(MAX_QUEUES_PER_PORT - 1, -1, -1)
        )
        if state != prev:
            entries.append({"time": t, "gates": state})
            prev = state
    return entries
