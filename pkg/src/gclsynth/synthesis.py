"""Window synthesis: domains, constraint checking and the tabu-guided search.

The decision variables are the offset, length and period of one window per ST queue.  A
candidate is *valid* when the structural window constraints hold on every port and the
capacity/demand proxy does not prune it; only valid candidates are handed to the delay
analyzer, and only analyzer-schedulable ones become incumbents.
"""
from __future__ import annotations

import enum
import itertools
import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .analysis import Analyzer, DelayReport, RateLatencyAnalyzer
from .model import (AnalysisParams, Instance, LinkId, QueueKey, WindowConfig, divisors,
                    guard_band, hyperperiod_of_port, max_frame_size, queue_flow_sets)
from .proxy import QueueProxy
from .schedule import Schedule, objective_omega

Assignment = dict[QueueKey, WindowConfig]


class EmptyDomain(ValueError):
    pass


class NoFeasibleSolutionFound(RuntimeError):
    def __init__(self, message: str, stats: "SearchStats | None" = None):
        super().__init__(message)
        self.stats = stats


# -- domains ----------------------------------------------------------------

@dataclass(frozen=True)
class QueueDomain:
    """Integer ranges of one queue's variables, in macroticks of its link."""

    key: QueueKey
    hyperperiod: int
    periods: tuple[int, ...]
    min_length: int
    guard_band: int

    @property
    def usable_periods(self) -> tuple[int, ...]:
        return tuple(t for t in self.periods if t >= self.min_length)

    @property
    def max_offset(self) -> int:
        return self.hyperperiod

    def size(self) -> int:
        """Number of (length, period) pairs that can hold a valid window."""
        return sum(t - self.min_length + 1 for t in self.usable_periods)


def build_domains(instance: Instance) -> dict[QueueKey, QueueDomain]:
    sets = queue_flow_sets(instance)
    out = {}
    for key in sorted(sets):
        link = instance.links[key[0]]
        mt = link.macrotick_us
        hp_us = hyperperiod_of_port(key[0], instance.flows)
        if hp_us % mt:
            raise EmptyDomain(f"hyperperiod {hp_us} of {key[0]} is not a multiple of the macrotick {mt}")
        hp = hp_us // mt
        members = sets[key].all_flows
        gb = guard_band(link, members, instance.overhead_bytes)
        w_min = link.tx_time_mt(max_frame_size(members, instance.overhead_bytes)) + gb
        if w_min > hp:
            raise EmptyDomain(f"queue {key[1]} on {key[0][0]}->{key[0][1]}: minimum window {w_min} "
                              f"exceeds the hyperperiod {hp}")
        out[key] = QueueDomain(key, hp, tuple(divisors(hp)), w_min, gb)
    return out


# -- constraints ------------------------------------------------------------

class Constraint(str, enum.Enum):
    MISSING = "missing-window"
    DOMAIN = "domain"
    VALIDITY = "window-validity"
    OVERLAP = "non-overlap"
    BANDWIDTH = "bandwidth"
    PORT_PERIOD = "port-period"
    PERIOD_LIMIT = "period-limit"
    TIMING = "timing"


@dataclass(frozen=True)
class ConstraintViolation:
    constraint: Constraint
    subject: tuple
    detail: str = ""

    def __str__(self):
        return f"{self.constraint.value} {self.subject}: {self.detail}"


def windows_overlap(a: WindowConfig, b: WindowConfig) -> bool:
    """Pairwise overlap test over every instance in the common cycle of the two periods."""
    span = math.lcm(a.period, b.period)
    for i in range(-(-span // a.period)):
        sa = a.offset + i * a.period
        for j in range(-(-span // b.period)):
            sb = b.offset + j * b.period
            if not (sa + a.length <= sb or sb + b.length <= sa):
                return True
    return False


class ConstraintChecker:
    """Window constraints with per-queue flow data precomputed; checks can be port-local."""

    def __init__(self, instance: Instance, backlog: int = 1, domains: Mapping[QueueKey, QueueDomain] | None = None,
                 proxy: QueueProxy | None = None):
        self.instance = instance
        self.domains = dict(domains) if domains is not None else build_domains(instance)
        self.proxy = proxy or QueueProxy(instance, backlog)
        sets = queue_flow_sets(instance)
        self.demand_ratio: dict[QueueKey, Fraction] = {}
        for key, qf in sets.items():
            link = instance.links[key[0]]
            self.demand_ratio[key] = sum((link.tx_time_us(instance.wire_bytes(f)) / f.period_us
                                          for f in qf.all_flows), Fraction(0))
        self.by_port: dict[LinkId, list[QueueKey]] = {}
        for key in self.domains:
            self.by_port.setdefault(key[0], []).append(key)

    def check_port(self, link: LinkId, assignment: Mapping[QueueKey, WindowConfig],
                   timing: bool = True) -> list[ConstraintViolation]:
        out: list[ConstraintViolation] = []
        keys = self.by_port.get(link, [])
        present = []
        for key in keys:
            w = assignment.get(key)
            if w is None:
                out.append(ConstraintViolation(Constraint.MISSING, key, "no window"))
                continue
            present.append(key)
            d = self.domains[key]
            if not (d.min_length <= w.length <= d.hyperperiod and 0 < w.period <= d.hyperperiod
                    and 0 <= w.offset <= d.max_offset):
                out.append(ConstraintViolation(Constraint.DOMAIN, key, f"{w} outside domain"))
            if w.offset + w.length > w.period:
                out.append(ConstraintViolation(Constraint.VALIDITY, key, "offset + length > period"))
            if Fraction(w.length, w.period) < self.demand_ratio[key]:
                out.append(ConstraintViolation(Constraint.BANDWIDTH, key,
                                               f"w/T={w.length}/{w.period} below load {self.demand_ratio[key]}"))
            if d.hyperperiod % w.period:
                out.append(ConstraintViolation(Constraint.PERIOD_LIMIT, key,
                                               f"period {w.period} does not divide {d.hyperperiod}"))
        for k1, k2 in itertools.combinations(present, 2):
            a, b = assignment[k1], assignment[k2]
            if a.period % b.period and b.period % a.period:
                out.append(ConstraintViolation(Constraint.PORT_PERIOD, (k1, k2),
                                               f"periods {a.period} and {b.period} are not harmonic"))
            if windows_overlap(a, b):
                out.append(ConstraintViolation(Constraint.OVERLAP, (k1, k2), f"{a} overlaps {b}"))
        if timing and not out:
            for key in present:
                chk = self.proxy.check(key, assignment[key])
                if not chk.feasible:
                    out.append(ConstraintViolation(Constraint.TIMING, key, f"capacity margin {chk.margin}"))
        return out

    def check(self, assignment: Mapping[QueueKey, WindowConfig], timing: bool = True) -> list[ConstraintViolation]:
        out = []
        for link in sorted(self.by_port):
            out.extend(self.check_port(link, assignment, timing))
        return out


def check_constraints(assignment: Mapping[QueueKey, WindowConfig], instance: Instance,
                      backlog: int = 1, timing: bool = True) -> list[ConstraintViolation]:
    return ConstraintChecker(instance, backlog).check(assignment, timing)


# -- offset packing ---------------------------------------------------------

def pack_offsets(shapes: Mapping[QueueKey, tuple[int, int]]) -> dict[QueueKey, int] | None:
    """First-fit offsets for (length, period) shapes sharing a port, or None if they do not fit.

    Shorter periods are placed first, higher priorities first among equal periods.
    """
    order = sorted(shapes, key=lambda k: (shapes[k][1], -k[1], k))
    placed: list[WindowConfig] = []
    out: dict[QueueKey, int] = {}
    for key in order:
        length, period = shapes[key]
        candidates = {0}
        for p in placed:
            for j in range(max(1, period // p.period)):
                end = p.offset + p.length + j * p.period
                candidates.add(end % period)
        for phi in sorted(candidates):
            if phi + length > period:
                continue
            w = WindowConfig(phi, length, period)
            if not any(windows_overlap(w, p) for p in placed):
                placed.append(w)
                out[key] = phi
                break
        else:
            return None
    return out


# -- search -----------------------------------------------------------------

@dataclass(frozen=True)
class SearchParams:
    time_budget: float = 60.0
    max_iterations: int = 300
    backlog: int = 1
    tabu_tenure: int = 7
    neighborhood_size: int = 24
    seed: int = 0
    exhaustive_limit: int = 20000
    restart_after: int = 40
    use_proxy: bool = True
    analysis: AnalysisParams = field(default_factory=AnalysisParams)

    def __post_init__(self):
        if self.time_budget < 0:
            raise ValueError("time budget must be >= 0")
        if self.tabu_tenure < 1:
            raise ValueError("tabu tenure must be >= 1")
        if self.backlog < 1:
            raise ValueError("backlog must be >= 1")
        if self.neighborhood_size < 1 or self.max_iterations < 0:
            raise ValueError("neighborhood size must be >= 1 and iterations >= 0")


@dataclass
class SearchStats:
    iterations: int = 0
    moves_generated: int = 0
    rejected_constraints: int = 0
    pruned_timing: int = 0
    analyzer_calls: int = 0
    analyzer_schedulable: int = 0
    cache_hits: int = 0
    restarts: int = 0
    exhaustive: bool = False
    stopped_by: str = ""
    elapsed: float = 0.0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Solution:
    assignment: Assignment
    omega: Fraction
    report: DelayReport
    iteration: int

    def schedule(self, method: str = "cpwo") -> Schedule:
        return Schedule.from_assignment(self.assignment, method=method)


@dataclass
class SearchResult:
    incumbents: list[Solution]
    stats: SearchStats

    @property
    def best(self) -> Solution:
        return self.incumbents[-1]


@dataclass(frozen=True)
class Move:
    key: QueueKey
    var: str           # "T", "w", "phi", or "give" (length taken from ``donor``)
    value: int
    keep_ratio: bool = False
    donor: QueueKey | None = None


_ATTR = {"T": "period", "w": "length", "give": "length", "phi": "offset"}


def _score(report: DelayReport, assignment: Assignment) -> tuple:
    omega = objective_omega(assignment)
    if report.all_schedulable:
        return (0, 0.0, omega, report.mean_wcd, tuple(assignment[k].offset for k in sorted(assignment)))
    return (1, report.tardiness(), omega, 0.0, ())


def neighborhood(assignment: Assignment, domains: Mapping[QueueKey, QueueDomain], rng: random.Random,
                 size: int | None = None, focus: Iterable[QueueKey] | None = None) -> list[Move]:
    """Candidate moves: period steps on the divisor lattice, length steps, offset shifts."""
    moves: list[Move] = []
    for key in sorted(focus if focus is not None else assignment):
        w = assignment[key]
        d = domains[key]
        periods = d.usable_periods
        i = periods.index(w.period) if w.period in periods else bisect_left(periods, w.period)
        for step in (1, 2, 4, 8, 16):
            for j in (i - step, i + step):
                if 0 <= j < len(periods) and periods[j] != w.period:
                    moves.append(Move(key, "T", periods[j], True))
                    if d.min_length <= w.length <= periods[j]:
                        moves.append(Move(key, "T", periods[j], False))
        for delta in sorted({1, max(1, w.length // 20), max(1, w.length // 5)}):
            for nl in (w.length - delta, w.length + delta):
                if d.min_length <= nl <= w.period:
                    moves.append(Move(key, "w", nl))
        for donor in sorted(k for k in assignment if k[0] == key[0] and k != key):
            dw = assignment[donor]
            for delta in sorted({max(1, w.length // 20), max(1, w.length // 5)}):
                if dw.length - delta * dw.period // w.period >= domains[donor].min_length:
                    moves.append(Move(key, "give", w.length + delta, donor=donor))
        for nphi in (w.offset - 1, w.offset + 1, 0):
            if 0 <= nphi <= w.period - w.length and nphi != w.offset:
                moves.append(Move(key, "phi", nphi))
    moves = list(dict.fromkeys(moves))
    if size is not None and len(moves) > size:
        moves = rng.sample(moves, size)
    return moves


def bisect_left(seq: Sequence[int], x: int) -> int:
    lo, hi = 0, len(seq)
    while lo < hi:
        mid = (lo + hi) // 2
        if seq[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return min(lo, len(seq) - 1)


def _nearest_harmonic(period: int, anchor: int, options: Sequence[int]) -> int | None:
    ok = [t for t in options if t % anchor == 0 or anchor % t == 0]
    if not ok:
        return None
    return min(ok, key=lambda t: (abs(math.log(t / period)), t))


class CPWOSearch:
    """Constraint-checked tabu search over per-queue windows."""

    def __init__(self, instance: Instance, params: SearchParams | None = None,
                 analyzer: Analyzer | None = None):
        self.instance = instance
        self.params = params or SearchParams()
        self.domains = build_domains(instance)
        self.analyzer = analyzer or RateLatencyAnalyzer(instance, self.params.analysis)
        self.checker = ConstraintChecker(instance, self.params.backlog, self.domains)
        self.stats = SearchStats()
        self._cache: dict[tuple, DelayReport] = {}
        self._flow_queues: dict[str, list[QueueKey]] = {
            f.id: [(lk, f.priority) for lk in f.links[1:]] for f in instance.flows}

    # -- evaluation -------------------------------------------------------
    def evaluate(self, assignment: Assignment) -> DelayReport:
        sig = tuple(sorted(assignment.items()))
        hit = self._cache.get(sig)
        if hit is not None:
            self.stats.cache_hits += 1
            return hit
        self.stats.analyzer_calls += 1
        report = self.analyzer.analyze(Schedule.from_assignment(assignment))
        if report.all_schedulable:
            self.stats.analyzer_schedulable += 1
        self._cache[sig] = report
        return report

    def port_valid(self, link: LinkId, assignment: Assignment) -> bool:
        viol = self.checker.check_port(link, assignment, timing=self.params.use_proxy)
        if not viol:
            return True
        if any(v.constraint is Constraint.TIMING for v in viol):
            self.stats.pruned_timing += 1
        else:
            self.stats.rejected_constraints += 1
        return False

    # -- construction ------------------------------------------------------
    def _min_valid_length(self, key: QueueKey, period: int, offset: int) -> int | None:
        """Smallest length at this period passing the bandwidth and proxy checks."""
        d = self.domains[key]
        lo = max(d.min_length, math.ceil(self.checker.demand_ratio[key] * period))
        hi = period - offset
        if lo > hi:
            return None

        def ok(length: int) -> bool:
            if not self.params.use_proxy:
                return True
            return self.checker.proxy.check(key, WindowConfig(offset, length, period)).feasible

        if not ok(hi):
            return None
        while lo < hi:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid + 1
        return lo

    def port_layout(self, link: LinkId, periods: Mapping[QueueKey, int]) -> dict[QueueKey, WindowConfig] | None:
        """Stacked minimal windows for the given periods on one port."""
        keys = sorted(periods, key=lambda k: (periods[k], -k[1], k))
        lengths: dict[QueueKey, int] = {}
        for _ in range(2):
            shapes = {}
            for key in keys:
                length = lengths.get(key) or self.domains[key].min_length
                shapes[key] = (length, periods[key])
            offsets = pack_offsets(shapes)
            if offsets is None:
                return None
            changed = False
            for key in keys:
                need = self._min_valid_length(key, periods[key], offsets[key])
                if need is None:
                    return None
                if need != lengths.get(key):
                    lengths[key] = need
                    changed = True
            if not changed:
                break
        shapes = {k: (lengths[k], periods[k]) for k in keys}
        offsets = pack_offsets(shapes)
        if offsets is None:
            return None
        out = {k: WindowConfig(offsets[k], lengths[k], periods[k]) for k in keys}
        return out if not self.checker.check_port(link, out, timing=self.params.use_proxy) else None

    def _split_layout(self, link: LinkId, period: int) -> dict[QueueKey, WindowConfig] | None:
        """Queues of a port share the period equally, stacked by priority."""
        keys = sorted(self.checker.by_port[link], key=lambda k: (-k[1], k))
        share = period // len(keys)
        out = {k: WindowConfig(i * share, share, period) for i, k in enumerate(keys)}
        return out if not self.checker.check_port(link, out, timing=self.params.use_proxy) else None

    def _aligned(self, target: int, split: bool) -> Assignment | None:
        out: Assignment = {}
        for link, keys in sorted(self.checker.by_port.items()):
            d = self.domains[keys[0]]
            fitting = [t for t in d.periods if t <= target and all(t >= self.domains[k].min_length for k in keys)]
            if not fitting:
                return None
            period = fitting[-1]
            layout = (self._split_layout(link, period) if split
                      else self.port_layout(link, {k: period for k in keys}))
            if layout is None:
                return None
            out.update(layout)
        return out

    def starting_points(self, limit: int = 24) -> list[Assignment]:
        """Stacked layouts with a common period target on every port.

        The first target is each port's hyperperiod with the shortest valid windows; the
        others spread geometrically over the usable periods, with both the shortest valid
        windows and an equal split of the period.
        """
        hp_min = min(d.hyperperiod for d in self.domains.values())
        floor = max(d.min_length for d in self.domains.values())
        targets = sorted({t for d in self.domains.values() for t in d.periods if floor <= t <= hp_min})
        if len(targets) > limit:
            targets = [targets[round(i * (len(targets) - 1) / (limit - 1))] for i in range(limit)]
        seen: dict[tuple, Assignment] = {}
        first = self._aligned(max(d.hyperperiod for d in self.domains.values()), split=False)
        for cand in [first] + [self._aligned(t, split) for t in reversed(targets) for split in (False, True)]:
            if cand is not None:
                seen.setdefault(tuple(sorted(cand.items())), cand)
        return list(seen.values())

    def initial(self) -> Assignment | None:
        """The best-scoring starting point, or None if no stacked layout is valid."""
        best = None
        for cand in self.starting_points():
            s = _score(self.evaluate(cand), cand)
            if best is None or s < best[0]:
                best = (s, cand)
        return best[1] if best else None

    # -- moves -------------------------------------------------------------
    def apply(self, assignment: Assignment, move: Move) -> Assignment | None:
        key = move.key
        link = key[0]
        cur = assignment[key]
        d = self.domains[key]
        new = dict(assignment)
        if move.var == "phi":
            new[key] = WindowConfig(move.value, cur.length, cur.period)
            return new if self.port_valid(link, new) else None
        if move.var == "T":
            period = move.value
            length = max(d.min_length, math.ceil(cur.length * period / cur.period)) if move.keep_ratio else cur.length
        else:
            period, length = cur.period, move.value
        if length > period:
            return None
        shapes = {key: (length, period)}
        if move.var == "give":
            dw = assignment[move.donor]
            taken = (length - cur.length) * dw.period // period
            shapes[move.donor] = (dw.length - taken, dw.period)
        for other in self.checker.by_port[link]:
            if other in shapes:
                continue
            ow = assignment[other]
            op = ow.period
            if op % period and period % op:
                op = _nearest_harmonic(op, period, self.domains[other].usable_periods)
                if op is None:
                    return None
            ol = max(self.domains[other].min_length, math.ceil(ow.length * op / ow.period))
            if ol > op:
                return None
            shapes[other] = (ol, op)
        # keep current offsets when they still fit, otherwise repack the port
        trial = {k: WindowConfig(min(assignment[k].offset, p - l), l, p) for k, (l, p) in shapes.items()}
        ok = all(not windows_overlap(trial[a], trial[b])
                 for a, b in itertools.combinations(sorted(trial), 2))
        if not ok:
            offsets = pack_offsets(shapes)
            if offsets is None:
                self.stats.rejected_constraints += 1
                return None
            trial = {k: WindowConfig(offsets[k], l, p) for k, (l, p) in shapes.items()}
        new.update(trial)
        return new if self.port_valid(link, new) else None

    # -- main loop ---------------------------------------------------------
    def _deadline(self, start: float) -> Callable[[], bool]:
        budget = self.params.time_budget
        return lambda: time.monotonic() - start >= budget

    def lattice_size(self) -> int:
        total = 1
        for d in self.domains.values():
            total *= max(1, d.size())
            if total > 10 ** 12:
                break
        return total

    def run(self, initial: Assignment | None = None) -> SearchResult:
        start = time.monotonic()
        out_of_time = self._deadline(start)
        incumbents: list[Solution] = []
        if self.lattice_size() <= self.params.exhaustive_limit:
            self.stats.exhaustive = True
            incumbents = self._exhaustive(out_of_time)
        else:
            incumbents = self._tabu(initial, out_of_time)
        self.stats.elapsed = time.monotonic() - start
        if not incumbents:
            raise NoFeasibleSolutionFound(
                f"no schedulable window assignment found ({self.stats.stopped_by}; "
                f"{self.stats.analyzer_calls} analyzed, {self.stats.pruned_timing} pruned by the proxy)",
                self.stats)
        return SearchResult(incumbents, self.stats)

    def _offer(self, incumbents: list[Solution], assignment: Assignment, report: DelayReport,
               iteration: int) -> bool:
        if not report.all_schedulable:
            return False
        omega = objective_omega(assignment)
        sol = Solution(dict(assignment), omega, report, iteration)
        if not incumbents or omega < incumbents[-1].omega:
            incumbents.append(sol)
            return True
        last = incumbents[-1]
        if omega == last.omega and _score(report, assignment) < _score(last.report, last.assignment):
            incumbents[-1] = sol
            return True
        return False

    def _tabu(self, initial: Assignment | None, out_of_time: Callable[[], bool]) -> list[Solution]:
        p = self.params
        rng = random.Random(p.seed)
        incumbents: list[Solution] = []
        current = initial if initial is not None else self.initial()
        if current is None:
            self.stats.stopped_by = "no-initial-candidate"
            return incumbents
        if out_of_time():
            self.stats.stopped_by = "time"
            return incumbents
        report = self.evaluate(current)
        self._offer(incumbents, current, report, 0)
        cur_score = _score(report, current)
        best_score, best = cur_score, current
        tabu: dict[tuple, int] = {}
        stale = 0
        self.stats.stopped_by = "iterations"
        for it in range(1, p.max_iterations + 1):
            if out_of_time():
                self.stats.stopped_by = "time"
                break
            self.stats.iterations = it
            focus = None
            rep = self.evaluate(current)
            if not rep.all_schedulable:
                late = [fid for fid, fd in rep.flows.items() if not fd.schedulable]
                focus = sorted({k for fid in late for k in self._flow_queues[fid] if k in current})
            moves = neighborhood(current, self.domains, rng, p.neighborhood_size, focus or None)
            self.stats.moves_generated += len(moves)
            chosen = None
            for mv in moves:
                cand = self.apply(current, mv)
                if cand is None:
                    continue
                s = _score(self.evaluate(cand), cand)
                attr = _ATTR[mv.var]
                if tabu.get((mv.key, attr, mv.value), 0) > it and not s < best_score:
                    continue
                if chosen is None or s < chosen[0]:
                    chosen = (s, mv, cand)
            if chosen is None:
                stale += 1
            else:
                s, mv, cand = chosen
                attr = _ATTR[mv.var]
                tabu[(mv.key, attr, getattr(current[mv.key], attr))] = it + p.tabu_tenure
                current, cur_score = cand, s
                self._offer(incumbents, current, self.evaluate(current), it)
                if s < best_score:
                    best_score, best, stale = s, current, 0
                else:
                    stale += 1
            if stale >= p.restart_after:
                self.stats.restarts += 1
                current, cur_score = best, best_score
                tabu.clear()
                stale = 0
        return incumbents

    def _exhaustive(self, out_of_time: Callable[[], bool]) -> list[Solution]:
        """Enumerate every (length, period) combination; offsets are packed per port."""
        keys = sorted(self.domains)
        options = []
        for k in keys:
            d = self.domains[k]
            options.append([(length, t) for t in d.usable_periods for length in range(d.min_length, t + 1)])
        order = sorted(range(len(keys)), key=lambda i: keys[i])
        incumbents: list[Solution] = []
        self.stats.stopped_by = "exhausted"
        for n, combo in enumerate(itertools.product(*options)):
            if n % 256 == 0 and out_of_time():
                self.stats.stopped_by = "time"
                break
            self.stats.iterations = n + 1
            shapes = {keys[i]: combo[i] for i in order}
            omega = sum((Fraction(l, t) for l, t in combo), Fraction(0)) / len(combo)
            if incumbents and omega >= incumbents[-1].omega:
                continue
            assignment: Assignment = {}
            for link, pkeys in self.checker.by_port.items():
                offsets = pack_offsets({k: shapes[k] for k in pkeys})
                if offsets is None:
                    break
                assignment.update({k: WindowConfig(offsets[k], *shapes[k]) for k in pkeys})
            else:
                if all(self.port_valid(link, assignment) for link in sorted(self.checker.by_port)):
                    self._offer(incumbents, assignment, self.evaluate(assignment), n)
                continue
            self.stats.rejected_constraints += 1
        return incumbents


def optimize(instance: Instance, params: SearchParams | None = None, analyzer: Analyzer | None = None,
             initial: Assignment | None = None) -> SearchResult:
    """Search for schedulable window assignments with decreasing average window utilisation."""
    return CPWOSearch(instance, params, analyzer).run(initial)
