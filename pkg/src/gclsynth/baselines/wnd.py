"""Aligned windows: one (offset, length, period) shape per priority, identical on every port.

Every priority starts at its shortest valid length.  The period is shrunk first, stepping
down through the divisors of the ports' common hyperperiod; when no period is accepted the
lengths grow by one step and the periods are swept again.  The first configuration the
analyzer accepts is returned.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from ..analysis import Analyzer, DelayReport, RateLatencyAnalyzer
from ..model import Instance, WindowConfig, divisors, queue_flow_sets
from ..schedule import Schedule, objective_omega
from ..synthesis import NoFeasibleSolutionFound, build_domains


@dataclass
class WndResult:
    schedule: Schedule
    shapes: dict[int, WindowConfig]
    omega: Fraction
    report: DelayReport
    tried: int


def _shape_schedule(instance: Instance, shapes: dict[int, WindowConfig], keys) -> Schedule:
    return Schedule.from_assignment({k: shapes[k[1]] for k in keys}, method="wnd")


def schedule_wnd(instance: Instance, analyzer: Analyzer | None = None, growth_steps: int = 20,
                 max_periods: int | None = None) -> WndResult:
    analyzer = analyzer or RateLatencyAnalyzer(instance)
    domains = build_domains(instance)
    if not domains:
        raise NoFeasibleSolutionFound("no gated queue carries traffic")
    mts = {k[0]: instance.links[k[0]].macrotick_us for k in domains}
    if len(set(mts.values())) != 1:
        raise NoFeasibleSolutionFound("aligned windows need one macrotick on every port")
    common = math.gcd(*(d.hyperperiod for d in domains.values()))
    prios = sorted({k[1] for k in domains}, reverse=True)
    w_min = {p: max(d.min_length for k, d in domains.items() if k[1] == p) for p in prios}
    sets = queue_flow_sets(instance)
    load = {p: max(sum((instance.links[k[0]].tx_time_us(instance.wire_bytes(f)) / f.period_us
                        for f in sets[k].all_flows), Fraction(0))
                   for k in domains if k[1] == p) for p in prios}
    keys = sorted(domains)

    periods = [t for t in reversed(divisors(common)) if t >= sum(w_min.values())]
    if max_periods is not None and len(periods) > max_periods:
        step = (len(periods) - 1) / (max_periods - 1)
        periods = sorted({periods[round(i * step)] for i in range(max_periods)}, reverse=True)
    tried = 0
    for level in range(growth_steps + 1):
        any_fit = False
        for t in periods:
            lengths = {p: max(w_min[p], math.ceil(load[p] * t)) + level * (t // growth_steps) for p in prios}
            if sum(lengths.values()) > t:
                continue
            any_fit = True
            shapes, phi = {}, 0
            for p in prios:
                shapes[p] = WindowConfig(phi, lengths[p], t)
                phi += lengths[p]
            sched = _shape_schedule(instance, shapes, keys)
            report = analyzer.analyze(sched)
            tried += 1
            if report.all_schedulable:
                return WndResult(sched, shapes, objective_omega(sched), report, tried)
        if not any_fit:
            break
    raise NoFeasibleSolutionFound(f"no aligned window shape was accepted ({tried} analyzed)")
