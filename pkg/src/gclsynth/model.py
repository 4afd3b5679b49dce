"""Network, flow and window data model plus the per-port/per-queue helper quantities.

Times are integer microseconds unless noted; schedule quantities (window offset,
length, period) are integer macroticks of the link they belong to.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Iterable, Iterator, Mapping, Sequence

LinkId = tuple[str, str]
QueueKey = tuple[LinkId, int]

ETH_MIN_FRAME = 64
ETH_MAX_FRAME = 1518
MAX_QUEUES_PER_PORT = 8


class NoFlowsOnPort(ValueError):
    pass


class NodeKind(str, enum.Enum):
    END_SYSTEM = "es"
    SWITCH = "sw"


@dataclass(frozen=True)
class Link:
    src: str
    dst: str
    speed_mbps: int
    macrotick_us: int = 1
    propagation_us: int = 0

    def __post_init__(self):
        if self.speed_mbps <= 0:
            raise ValueError(f"link {self.src}->{self.dst}: speed must be positive")
        if self.macrotick_us < 1:
            raise ValueError(f"link {self.src}->{self.dst}: macrotick must be >= 1")
        if self.propagation_us != 0:
            raise ValueError(f"link {self.src}->{self.dst}: propagation delay must be 0")

    @property
    def id(self) -> LinkId:
        return (self.src, self.dst)

    @property
    def byte_time_us(self) -> Fraction:
        """Transmission time of one byte in microseconds (Mbps == bits/us)."""
        return Fraction(8, self.speed_mbps)

    @property
    def bytes_per_us(self) -> Fraction:
        return Fraction(self.speed_mbps, 8)

    def tx_time_us(self, nbytes: int) -> Fraction:
        return nbytes * self.byte_time_us

    def tx_time_mt(self, nbytes: int) -> int:
        """Transmission time rounded up to whole macroticks."""
        return math.ceil(self.tx_time_us(nbytes) / self.macrotick_us)


@dataclass(frozen=True)
class Flow:
    id: str
    payload_bytes: int
    period_us: int
    priority: int
    deadline_us: int
    route: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "route", tuple(self.route))

    @cached_property
    def links(self) -> tuple[LinkId, ...]:
        return tuple(zip(self.route[:-1], self.route[1:]))

    @property
    def source(self) -> str:
        return self.route[0]

    @property
    def destination(self) -> str:
        return self.route[-1]

    def previous_node(self, link: LinkId) -> str | None:
        """Node the frame came from before entering ``link``'s source, None at the source."""
        i = self.links.index(link)
        return self.route[i - 1] if i > 0 else None


@dataclass(frozen=True)
class WindowConfig:
    """Gate-open window <offset, length, period> in macroticks."""

    offset: int
    length: int
    period: int

    def __post_init__(self):
        for name in ("offset", "length", "period"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ValueError(f"window {name} must be a nonnegative integer, got {v!r}")
        if self.period <= 0:
            raise ValueError("window period must be positive")
        if self.offset + self.length > self.period:
            raise ValueError(f"offset + length exceeds period in {self}")

    @property
    def utilization(self) -> Fraction:
        return Fraction(self.length, self.period)

    @property
    def always_open(self) -> bool:
        return self.length == self.period


@dataclass(frozen=True)
class AnalysisParams:
    delta_precision_us: int = 0
    backlog: int = 1
    processing_delay_us: int = 0

    def __post_init__(self):
        if self.backlog < 1:
            raise ValueError("backlog must be >= 1")
        if self.delta_precision_us < 0:
            raise ValueError("network precision must be >= 0")
        if self.processing_delay_us < 0:
            raise ValueError("processing delay must be >= 0")


@dataclass(frozen=True)
class Port:
    link: Link
    st_queues: tuple[int, ...]
    other_queues: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.st_queues) + len(self.other_queues) > MAX_QUEUES_PER_PORT:
            raise ValueError(f"port {self.link.id} has more than {MAX_QUEUES_PER_PORT} queues")

    @property
    def id(self) -> LinkId:
        return self.link.id


@dataclass
class QueueFlows:
    all_flows: list[Flow] = field(default_factory=list)  # R(q)
    from_switch: list[Flow] = field(default_factory=list)  # X(q)


@dataclass(frozen=True)
class Instance:
    nodes: Mapping[str, NodeKind]
    links: Mapping[LinkId, Link]
    flows: tuple[Flow, ...]
    overhead_bytes: int = 0
    min_frame_bytes: int = ETH_MIN_FRAME
    max_frame_bytes: int = ETH_MAX_FRAME
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "flows", tuple(self.flows))

    @classmethod
    def build(cls, switches: Iterable[str], end_systems: Iterable[str],
              edges: Iterable[tuple[str, str]], flows: Iterable[Flow], speed_mbps: int = 100,
              macrotick_us: int = 1, **kw) -> "Instance":
        """Instance with full-duplex links of uniform speed between the given node pairs."""
        nodes = {n: NodeKind.SWITCH for n in switches}
        nodes.update({n: NodeKind.END_SYSTEM for n in end_systems})
        links = {}
        for a, b in edges:
            links[(a, b)] = Link(a, b, speed_mbps, macrotick_us)
            links[(b, a)] = Link(b, a, speed_mbps, macrotick_us)
        return cls(nodes=nodes, links=links, flows=tuple(flows), **kw)

    # -- lookups ---------------------------------------------------------
    def is_switch(self, node: str) -> bool:
        return self.nodes.get(node) is NodeKind.SWITCH

    def is_end_system(self, node: str) -> bool:
        return self.nodes.get(node) is NodeKind.END_SYSTEM

    def flow(self, flow_id: str) -> Flow:
        for f in self.flows:
            if f.id == flow_id:
                return f
        raise KeyError(flow_id)

    def wire_bytes(self, flow: Flow) -> int:
        return flow.payload_bytes + self.overhead_bytes

    def flows_on(self, link: LinkId) -> list[Flow]:
        return [f for f in self.flows if link in f.links]

    def used_links(self) -> list[LinkId]:
        seen: dict[LinkId, None] = {}
        for f in self.flows:
            for lk in f.links:
                seen.setdefault(lk, None)
        return sorted(seen)

    def gated_ports(self) -> list[Port]:
        """Switch egress ports that carry ST traffic, one ST queue per priority present."""
        ports = []
        for lk in self.used_links():
            if not self.is_switch(lk[0]):
                continue
            prios = sorted({f.priority for f in self.flows_on(lk)}, reverse=True)
            others = tuple(p for p in range(MAX_QUEUES_PER_PORT) if p not in prios)
            ports.append(Port(self.links[lk], tuple(prios), others))
        return ports

    def st_queues(self) -> list[QueueKey]:
        return [(p.id, q) for p in self.gated_ports() for q in p.st_queues]

    def global_hyperperiod(self) -> int:
        return lcm_all(f.period_us for f in self.flows)


def lcm_all(values: Iterable[int]) -> int:
    return reduce(math.lcm, values, 1)


def divisors(n: int) -> list[int]:
    small, large = [], []
    i = 1
    while i * i <= n:
        if n % i == 0:
            small.append(i)
            if i * i != n:
                large.append(n // i)
        i += 1
    return small + large[::-1]


# -- helper quantities ---------------------------------------------------

def queue_members(instance: Instance, link: LinkId, queue: int) -> list[Flow]:
    return [f for f in instance.flows_on(link) if f.priority == queue]


def hyperperiod_of_port(port: Port | LinkId, flows: Iterable[Flow]) -> int:
    """LCM of the periods (us) of the flows routed through the port."""
    link = port.id if isinstance(port, Port) else port
    periods = [f.period_us for f in flows if link in f.links]
    if not periods:
        raise NoFlowsOnPort(f"no flow is routed through {link}")
    return lcm_all(periods)


def max_frame_size(flows: Sequence[Flow], overhead_bytes: int = 0) -> int:
    return max((f.payload_bytes + overhead_bytes for f in flows), default=0)


def guard_band(link: Link, flows: Sequence[Flow], overhead_bytes: int = 0) -> int:
    """Largest frame transmission time in the queue, in macroticks (rounded up)."""
    return link.tx_time_mt(max_frame_size(flows, overhead_bytes)) if flows else 0


def queue_flow_sets(instance: Instance) -> dict[QueueKey, QueueFlows]:
    """R(q) and X(q) for every ST queue of every gated port."""
    out: dict[QueueKey, QueueFlows] = {}
    for port in instance.gated_ports():
        for q in port.st_queues:
            qf = QueueFlows()
            for f in queue_members(instance, port.id, q):
                qf.all_flows.append(f)
                prev = f.previous_node(port.id)
                if prev is not None and instance.is_switch(prev):
                    qf.from_switch.append(f)
            out[(port.id, q)] = qf
    return out


def window_count(instance: Instance) -> int:
    """Total number of ST windows in the model."""
    return len(instance.st_queues())


# -- validation ----------------------------------------------------------

class Problem(str, enum.Enum):
    UNKNOWN_NODE = "UnknownNode"
    MISSING_REVERSE_LINK = "MissingReverseLink"
    SELF_LOOP = "SelfLoop"
    DUPLICATE_FLOW_ID = "DuplicateFlowId"
    ROUTE_TOO_SHORT = "RouteTooShort"
    MISSING_LINK = "MissingLink"
    DISCONNECTED_ROUTE = "DisconnectedRoute"
    BAD_ENDPOINT = "BadEndpoint"
    INTERIOR_NOT_SWITCH = "InteriorNotSwitch"
    FRAME_SIZE = "FrameSizeOutOfRange"
    BAD_PERIOD = "BadPeriod"
    BAD_DEADLINE = "BadDeadline"
    BAD_PRIORITY = "BadPriority"
    MACROTICK_MISMATCH = "MacrotickMismatch"
    TOO_MANY_QUEUES = "TooManyQueues"


@dataclass(frozen=True)
class Violation:
    kind: Problem
    subject: str
    detail: str = ""

    def __str__(self):
        return f"{self.kind.value}: {self.subject}" + (f" ({self.detail})" if self.detail else "")


def validate_instance(instance: Instance) -> list[Violation]:
    """Collect every structural problem; an empty list means the instance is well formed."""
    report: list[Violation] = []
    add = lambda kind, subject, detail="": report.append(Violation(kind, subject, detail))

    for (a, b), lk in instance.links.items():
        if (lk.src, lk.dst) != (a, b):
            add(Problem.MISSING_LINK, f"{a}->{b}", "key does not match link endpoints")
        if a == b:
            add(Problem.SELF_LOOP, f"{a}->{b}")
        for n in (a, b):
            if n not in instance.nodes:
                add(Problem.UNKNOWN_NODE, n, f"endpoint of {a}->{b}")
        if (b, a) not in instance.links:
            add(Problem.MISSING_REVERSE_LINK, f"{a}->{b}")

    seen: set[str] = set()
    for f in instance.flows:
        if f.id in seen:
            add(Problem.DUPLICATE_FLOW_ID, f.id)
        seen.add(f.id)
        size = instance.wire_bytes(f)
        if not instance.min_frame_bytes <= size <= instance.max_frame_bytes:
            add(Problem.FRAME_SIZE, f.id,
                f"{size} B not in [{instance.min_frame_bytes}, {instance.max_frame_bytes}]")
        if f.period_us <= 0:
            add(Problem.BAD_PERIOD, f.id, str(f.period_us))
        if f.deadline_us <= 0:
            add(Problem.BAD_DEADLINE, f.id, str(f.deadline_us))
        if not 0 <= f.priority < MAX_QUEUES_PER_PORT:
            add(Problem.BAD_PRIORITY, f.id, str(f.priority))
        if len(f.route) < 2:
            add(Problem.ROUTE_TOO_SHORT, f.id)
            continue
        for n in f.route:
            if n not in instance.nodes:
                add(Problem.UNKNOWN_NODE, n, f"on route of {f.id}")
        if not instance.is_end_system(f.route[0]) or not instance.is_end_system(f.route[-1]):
            add(Problem.BAD_ENDPOINT, f.id, "route must start and end at end systems")
        for n in f.route[1:-1]:
            if n in instance.nodes and not instance.is_switch(n):
                add(Problem.INTERIOR_NOT_SWITCH, f.id, n)
        for lk in f.links:
            if lk not in instance.links:
                add(Problem.DISCONNECTED_ROUTE, f.id, f"no link {lk[0]}->{lk[1]}")
            elif f.period_us > 0 and f.period_us % instance.links[lk].macrotick_us:
                add(Problem.MACROTICK_MISMATCH, f.id, f"period not a multiple of macrotick on {lk}")

    for lk in instance.used_links():
        if lk in instance.links and instance.is_switch(lk[0]):
            prios = {f.priority for f in instance.flows_on(lk)}
            if len(prios) > MAX_QUEUES_PER_PORT:
                add(Problem.TOO_MANY_QUEUES, f"{lk[0]}->{lk[1]}")
    return report


def iter_route_pairs(flow: Flow) -> Iterator[tuple[LinkId, LinkId]]:
    links = flow.links
    return zip(links[:-1], links[1:])
