"""Independent audit of emitted schedules.

Shares nothing with the checker used inside the search: windows are expanded onto a
per-port slot timeline over the full port cycle and every slot is inspected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .model import Instance, LinkId
from .schedule import Schedule

ALL_RULES = ("validity", "overlap", "bandwidth", "harmonic", "period-limit", "coverage")
FRAME_RULES = ("validity", "overlap", "coverage")


@dataclass(frozen=True)
class Finding:
    rule: str
    port: LinkId
    detail: str

    def __str__(self):
        return f"{self.rule} at {self.port[0]}->{self.port[1]}: {self.detail}"


def _port_flows(instance: Instance, link: LinkId):
    return [f for f in instance.flows if link in set(zip(f.route, f.route[1:]))]


def occupancy(schedule: Schedule, link: LinkId, horizon: int) -> list[set[int]]:
    """Set of queues whose gate is open in each macrotick slot of [0, horizon)."""
    slots: list[set[int]] = [set() for _ in range(horizon)]
    for (lk, q), windows in schedule.windows.items():
        if lk != link:
            continue
        for w in windows:
            start = w.offset
            while start < horizon:
                for t in range(start, min(start + w.length, horizon)):
                    slots[t].add(q)
                start += w.period
    return slots


def validate_schedule(schedule: Schedule, instance: Instance, rules=ALL_RULES) -> list[Finding]:
    found: list[Finding] = []
    ports = sorted({lk for f in instance.flows for lk in zip(f.route, f.route[1:])
                    if instance.nodes[lk[0]].value == "sw"})
    for link in ports:
        flows = _port_flows(instance, link)
        mt = instance.links[link].macrotick_us
        speed = instance.links[link].speed_mbps
        hp = math.lcm(*(f.period_us for f in flows))
        queues = {}
        for f in flows:
            queues.setdefault(schedule.queue_map.get((link, f.id), f.priority), []).append(f)
        if "coverage" in rules:
            for q in sorted(queues):
                if not schedule.windows.get((link, q)):
                    found.append(Finding("coverage", link, f"queue {q} carries flows but has no window"))
        mine = {q: ws for (lk, q), ws in schedule.windows.items() if lk == link}
        for q, ws in sorted(mine.items()):
            for w in ws:
                if "validity" in rules and (w.offset < 0 or w.offset + w.length > w.period):
                    found.append(Finding("validity", link, f"queue {q}: {w}"))
                if "period-limit" in rules and (hp % (w.period * mt)):
                    found.append(Finding("period-limit", link, f"queue {q}: period {w.period * mt} us vs {hp} us"))
            if "bandwidth" in rules and q in queues:
                need = sum(Fraction(f.payload_bytes + instance.overhead_bytes, 1) * 8 / speed / f.period_us
                           for f in queues[q])
                have = sum(Fraction(w.length, w.period) for w in ws)
                if have < need:
                    found.append(Finding("bandwidth", link, f"queue {q}: {have} < {need}"))
        periods = sorted({w.period for ws in mine.values() for w in ws})
        if "harmonic" in rules:
            for i, a in enumerate(periods):
                for b in periods[i + 1:]:
                    if b % a:
                        found.append(Finding("harmonic", link, f"periods {a} and {b}"))
        if "overlap" in rules and periods:
            horizon = math.lcm(*periods)
            clash = [t for t, open_q in enumerate(occupancy(schedule, link, horizon)) if len(open_q) > 1]
            if clash:
                found.append(Finding("overlap", link, f"{len(clash)} slots with several open ST gates, "
                                                      f"first at {clash[0]}"))
    return found
