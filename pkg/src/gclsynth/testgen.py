"""Synthetic TSN test cases: ring, mesh and tree topologies with random periodic flows."""
from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass

import networkx as nx

from .io import load_instance  # noqa: F401  re-exported for realistic cases
from .model import ETH_MAX_FRAME, ETH_MIN_FRAME, Flow, Instance

DEFAULT_PERIODS = (1500, 2500, 3500, 5000, 7500, 10000)


class TopologyTooSmall(ValueError):
    pass


class Topology(str, enum.Enum):
    SRM = "srm"   # small ring and mesh
    MR = "mr"     # medium ring
    MM = "mm"     # medium mesh
    ST = "st"     # tree of depth 1
    MT = "mt"     # tree of depth 2

    @classmethod
    def parse(cls, text: str) -> "Topology":
        key = text.strip().lower()
        aliases = {"st1": "st", "mt2": "mt"}
        return cls(aliases.get(key, key))


MIN_SWITCHES = {Topology.SRM: 2, Topology.MR: 3, Topology.MM: 4, Topology.ST: 2, Topology.MT: 4}


@dataclass(frozen=True)
class GenSpec:
    topology: Topology
    switches: int
    end_systems: int
    flows: int
    seed: int = 0
    speed_mbps: int = 100
    periods: tuple[int, ...] = DEFAULT_PERIODS
    priorities: tuple[int, ...] = (7, 6)
    min_frame: int = ETH_MIN_FRAME
    max_frame: int = ETH_MAX_FRAME
    max_link_utilization: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "topology", Topology.parse(str(getattr(self.topology, "value", self.topology))))
        if min(self.switches, self.end_systems, self.flows) < 1:
            raise ValueError("switch, end-system and flow counts must be >= 1")
        if not self.periods or min(self.periods) <= 0:
            raise ValueError("period set must be non-empty and positive")
        if not self.priorities or not all(0 <= p <= 7 for p in self.priorities):
            raise ValueError("priorities must lie in 0..7")
        if not 0 < self.min_frame <= self.max_frame:
            raise ValueError("bad frame size bounds")


def switch_graph(kind: Topology, n: int) -> tuple[nx.Graph, list[str]]:
    """Switch-level topology and the switches end systems may attach to."""
    if n < MIN_SWITCHES[kind]:
        raise TopologyTooSmall(f"{kind.value} needs at least {MIN_SWITCHES[kind]} switches, got {n}")
    names = [f"SW{i}" for i in range(n)]
    g = nx.Graph()
    g.add_nodes_from(names)
    if kind in (Topology.SRM, Topology.MR, Topology.MM):
        g.add_edges_from(zip(names, names[1:]))
        if n >= 3:
            g.add_edge(names[-1], names[0])
        if kind is Topology.SRM and n >= 4:
            g.add_edge(names[0], names[n // 2])
        if kind is Topology.MM:
            g.add_edges_from((names[i], names[(i + 2) % n]) for i in range(0, n, 2) if (i + 2) % n != i)
        return g, names
    root, rest = names[0], names[1:]
    if kind is Topology.ST:
        g.add_edges_from((root, c) for c in rest)
        return g, rest
    # depth 2: a first level of at least two switches, the rest hang below them
    first = rest[:max(2, len(rest) // 3)]
    second = rest[len(first):]
    if not second:
        raise TopologyTooSmall("a depth-2 tree needs switches below the first level")
    g.add_edges_from((root, c) for c in first)
    g.add_edges_from((first[i % len(first)], c) for i, c in enumerate(second))
    leaves = [s for s in rest if g.degree(s) == 1]
    return g, leaves


def _draw_flows(spec: GenSpec, g: nx.Graph, es: list[str], rng: random.Random) -> list[Flow]:
    flows = []
    for i in range(spec.flows):
        src, dst = rng.sample(es, 2)
        route = tuple(nx.shortest_path(g, src, dst))
        period = rng.choice(spec.periods)
        flows.append(Flow(f"f{i}", rng.randint(spec.min_frame, spec.max_frame), period,
                          rng.choice(spec.priorities), period, route))
    return flows


def _peak_utilization(flows: list[Flow], speed_mbps: int) -> float:
    load: dict[tuple[str, str], float] = {}
    for f in flows:
        for lk in f.links:
            load[lk] = load.get(lk, 0.0) + f.payload_bytes * 8 / (f.period_us * speed_mbps)
    return max(load.values(), default=0.0)


def generate(spec: GenSpec, max_attempts: int = 200) -> Instance:
    if spec.end_systems < 2:
        raise TopologyTooSmall("at least two end systems are needed to form a flow")
    rng = random.Random(spec.seed)
    g, hosts = switch_graph(spec.topology, spec.switches)
    es = [f"ES{i}" for i in range(spec.end_systems)]
    for i, e in enumerate(es):
        g.add_edge(e, hosts[i % len(hosts)])
    for _ in range(max_attempts):
        flows = _draw_flows(spec, g, es, rng)
        if spec.max_link_utilization is None or _peak_utilization(flows, spec.speed_mbps) <= spec.max_link_utilization:
            break
    else:
        raise ValueError(f"no flow set under {spec.max_link_utilization} link utilisation "
                         f"after {max_attempts} draws")
    switches = [n for n in g.nodes if n.startswith("SW")]
    edges = sorted(tuple(sorted(e)) for e in g.edges)
    name = f"{spec.topology.value}-{spec.switches}sw-{spec.end_systems}es-{spec.flows}f-s{spec.seed}"
    return Instance.build(switches, es, edges, flows, speed_mbps=spec.speed_mbps,
                          min_frame_bytes=spec.min_frame, max_frame_bytes=spec.max_frame, name=name)


def tree_depth(g: nx.Graph, root: str = "SW0") -> int:
    sw = g.subgraph(n for n in g.nodes if n.startswith("SW"))
    return max(nx.single_source_shortest_path_length(sw, root).values())


def period_lcm(periods=DEFAULT_PERIODS) -> int:
    return math.lcm(*periods)
