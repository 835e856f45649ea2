"""Flows, deterministic shortest-hop routing, slices, and scenario validation.

Rates, capacities and slice widths are exact rationals end-to-end: the fluid
queue model makes floating point a correctness hazard in conservation checks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .topology import InterferenceModel, NetworkGraph


@dataclass(frozen=True)
class Flow:
    id: int
    src: int
    dst: int
    rate: Fraction
    deadline: int
    route: tuple[int, ...]  # link indices, source -> destination order

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        if self.deadline < 1:
            raise ValueError("deadline must be a positive integer")


@dataclass
class Scenario:
    net: NetworkGraph
    model: InterferenceModel
    flows: tuple[Flow, ...]

    def link_rate(self, e: int) -> Fraction:
        """Aggregate arrival rate across flows routed through link e."""
        return sum((f.rate for f in self.flows if e in f.route), Fraction(0))

    def flows_on(self, e: int) -> list[Flow]:
        return [f for f in self.flows if e in f.route]

    def used_links(self) -> list[int]:
        return sorted({e for f in self.flows for e in f.route})


@dataclass
class SliceAssignment:
    """Per-(flow, link) reserved capacities w_{i,e}."""

    widths: dict[tuple[int, int], Fraction] = field(default_factory=dict)

    def width(self, flow_id: int, e: int) -> Fraction:
        return self.widths[(flow_id, e)]

    @staticmethod
    def from_capacities(scn: Scenario) -> "SliceAssignment":
        """Slices = full link capacity; only valid with one flow per link."""
        widths = {}
        for f in scn.flows:
            for e in f.route:
                if len(scn.flows_on(e)) != 1:
                    raise ValueError(f"link {e} shared; cannot assign full capacity")
                widths[(f.id, e)] = scn.net.links[e].capacity
        return SliceAssignment(widths)

    def validate(self, scn: Scenario) -> None:
        per_link: dict[int, Fraction] = {}
        route_links = {(f.id, e) for f in scn.flows for e in f.route}
        for (fid, e), w in self.widths.items():
            if w <= 0:
                raise ValueError("slice widths must be positive")
            if (fid, e) not in route_links:
                raise ValueError(f"slice on ({fid},{e}) which is not on the route")
            per_link[e] = per_link.get(e, Fraction(0)) + w
        for e, total in per_link.items():
            if total > scn.net.links[e].capacity:
                raise ValueError(f"slices on link {e} exceed capacity")


def shortest_route(net: NetworkGraph, src: int, dst: int) -> tuple[int, ...]:
    """Minimum-hop directed path; ties broken by lexicographically smallest
    node sequence.  Dijkstra on (hops, node sequence)."""
    if src == dst:
        raise ValueError("source equals destination")
    # Directed BFS distance to dst, then greedy descent picking the smallest
    # next node id gives the lexicographically smallest minimum-hop sequence.
    to_dst = {dst: 0}
    frontier = [dst]
    while frontier:
        nxt = []
        for v in frontier:
            for u in net.neighbors(v):
                if net.has_link(u, v) and u not in to_dst:
                    to_dst[u] = to_dst[v] + 1
                    nxt.append(u)
        frontier = nxt
    if src not in to_dst:
        raise ValueError(f"no directed path {src}->{dst}")
    path = [src]
    while path[-1] != dst:
        u = path[-1]
        step = min(
            v
            for v in net.neighbors(u)
            if net.has_link(u, v) and to_dst.get(v, -1) == to_dst[u] - 1
        )
        path.append(step)
    return tuple(net.link_id(a, b) for a, b in zip(path, path[1:]))


def random_flows(
    net: NetworkGraph,
    count: int,
    rng_seed: int,
    rate: Fraction = Fraction(1),
    deadline: int = 1_000_000,
) -> tuple[Flow, ...]:
    """Distinct uniformly random (src,dst) pairs, routed by shortest_route."""
    if count < 1:
        raise ValueError("count must be >= 1")
    pairs = [(u, v) for u in net.nodes for v in net.nodes if u != v]
    if count > len(pairs):
        raise ValueError(f"count {count} exceeds {len(pairs)} available pairs")
    rng = random.Random(rng_seed)
    chosen = rng.sample(pairs, count)
    return tuple(
        Flow(i, u, v, rate, deadline, shortest_route(net, u, v))
        for i, (u, v) in enumerate(chosen)
    )


def validate_scenario(scn: Scenario) -> list[str]:
    """Necessary-condition check; returns human-readable violations (empty = ok)."""
    violations = []
    n_links = len(scn.net.links)
    for f in scn.flows:
        if any(not 0 <= e < n_links for e in f.route):
            violations.append(f"flow {f.id}: route references unknown link")
            continue
        nodes = [scn.net.links[f.route[0]].src] + [scn.net.links[e].dst for e in f.route]
        if nodes[0] != f.src or nodes[-1] != f.dst:
            violations.append(f"flow {f.id}: route does not connect {f.src}->{f.dst}")
        if any(scn.net.links[a].dst != scn.net.links[b].src for a, b in zip(f.route, f.route[1:])):
            violations.append(f"flow {f.id}: route is not a contiguous path")
        if len(set(nodes)) != len(nodes):
            violations.append(f"flow {f.id}: route is not simple")
        if f.deadline < len(f.route):
            violations.append(
                f"flow {f.id}: deadline {f.deadline} < route length {len(f.route)}"
            )
    for e in scn.used_links():
        demand = scn.link_rate(e)
        if demand > scn.net.links[e].capacity:
            violations.append(
                f"link {e}: aggregate rate {demand} exceeds capacity {scn.net.links[e].capacity}"
            )
    if not 0 <= scn.model.phi <= max(n_links - 1, 0):
        violations.append(f"phi={scn.model.phi} outside [0, {n_links - 1}]")
    return violations
