"""Topology, flows, traffic schedules, and greedy geographic routing.

Connectivity uses a unit-disk rule: two nodes are neighbors iff their
Euclidean distance is at most the radio radius. The same radius doubles as
the interference range in the MAC engine. All functions here are pure and
deterministic for identical inputs.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field

log = logging.getLogger("codesleep.world")


class RouteFailure(Exception):
    """Greedy forwarding dead end: no neighbor is strictly closer to the destination."""


class InfiniteGap(Exception):
    """No neighbor traffic ever produces an overhearing opportunity (event rate 0)."""


@dataclass(frozen=True)
class Topology:
    """Static node placement plus the derived unit-disk neighbor sets."""

    positions: tuple[tuple[float, float], ...]
    radius: float
    neighbors: tuple[frozenset[int], ...]

    def __len__(self) -> int:
        return len(self.positions)

    def distance(self, i: int, j: int) -> float:
        return math.dist(self.positions[i], self.positions[j])


def build_topology(positions, radius: float) -> Topology:
    """Build a topology from explicit 2-D positions.

    Coincident nodes (distance 0) are allowed but logged as a warning since
    they usually indicate a bad scenario file. A non-positive radius is
    rejected.
    """
    pts = tuple((float(x), float(y)) for x, y in positions)
    if not pts:
        raise ValueError("at least one node position is required")
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    n = len(pts)
    neighbor_sets: list[set[int]] = [set() for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d = math.dist(pts[i], pts[j])
            if d == 0.0:
                log.warning("nodes %d and %d share position %s", i, j, pts[i])
            if d <= radius:
                neighbor_sets[i].add(j)
                neighbor_sets[j].add(i)
    return Topology(pts, float(radius), tuple(frozenset(s) for s in neighbor_sets))


def random_topology(n: int, area: tuple[float, float], radius: float, seed: int) -> Topology:
    """Scatter ``n`` nodes uniformly over ``area`` (width, height) meters."""
    if n < 1:
        raise ValueError("need at least one node")
    w, h = area
    rng = random.Random(seed)
    positions = [(rng.uniform(0.0, w), rng.uniform(0.0, h)) for _ in range(n)]
    return build_topology(positions, radius)


def next_hop(topology: Topology, current: int, destination: int) -> int:
    """Greedy geographic forwarding: the neighbor closest to the destination.

    Ties break toward the lowest node id. Raises RouteFailure when no
    neighbor is strictly closer than the current node (the packet must be
    dropped and counted by the caller).
    """
    if current == destination:
        raise ValueError("next_hop undefined when current == destination")
    nbrs = topology.neighbors[current]
    if not nbrs:
        raise RouteFailure(f"node {current} has no neighbors")
    best = min(nbrs, key=lambda j: (topology.distance(j, destination), j))
    if topology.distance(best, destination) >= topology.distance(current, destination):
        raise RouteFailure(f"greedy dead end at node {current} toward {destination}")
    return best


def route_path(topology: Topology, source: int, destination: int) -> list[int]:
    """Full greedy route, source included. Raises RouteFailure on a dead end."""
    path = [source]
    current = source
    while current != destination:
        current = next_hop(topology, current, destination)
        path.append(current)
        if len(path) > len(topology):
            raise RouteFailure("routing loop detected")  # cannot happen with strict progress
    return path


@dataclass(frozen=True)
class Flow:
    """A unicast session with exponential packet inter-arrival times.

    ``mean_interarrival`` is in slots; ``math.inf`` is the rate-0 sentinel.
    ``arrivals`` optionally pins an explicit arrival schedule (used by the
    canonical single-shot scenarios), overriding the random draw.
    """

    id: int
    source: int
    destination: int
    packet_size_bits: int
    mean_interarrival: float
    start: int
    end: int
    arrivals: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.source == self.destination:
            raise ValueError(f"flow {self.id}: source equals destination")
        if not self.mean_interarrival > 0:
            raise ValueError(f"flow {self.id}: mean inter-arrival must be positive")
        if self.start > self.end:
            raise ValueError(f"flow {self.id}: start after end")
        if self.arrivals is not None:
            bad = [t for t in self.arrivals if not self.start <= t <= self.end]
            if bad:
                raise ValueError(f"flow {self.id}: explicit arrivals outside window: {bad}")


def generate_arrivals(flow: Flow, seed: int) -> list[int]:
    """Arrival slots for a flow, deterministic per seed.

    Gaps are i.i.d. exponential with the flow's mean, rounded up to whole
    slots so at most one packet per flow enters the queue per slot.
    """
    if flow.arrivals is not None:
        return list(flow.arrivals)
    if math.isinf(flow.mean_interarrival):
        return []
    rng = random.Random(seed)
    rate = 1.0 / flow.mean_interarrival
    out: list[int] = []
    t = flow.start
    while True:
        t += max(1, math.ceil(rng.expovariate(rate)))
        if t > flow.end:
            return out
        out.append(t)


@dataclass
class TrafficRates:
    """Per-directed-link transmission intensities (packets per slot)."""

    rates: dict[tuple[int, int], float] = field(default_factory=dict)

    def get(self, i: int, j: int) -> float:
        return self.rates.get((i, j), 0.0)

    def add(self, i: int, j: int, rate: float) -> None:
        if rate < 0:
            raise ValueError("rates must be non-negative")
        self.rates[(i, j)] = self.rates.get((i, j), 0.0) + rate


def flow_rates(topology: Topology, flows) -> TrafficRates:
    """Estimate per-link intensities by walking each flow's greedy route.

    Flows that dead-end contribute rates only along the hops they can
    traverse; their packets are dropped at the dead end anyway.
    """
    rates = TrafficRates()
    for flow in flows:
        if flow.arrivals is not None:
            span = max(1, flow.end - flow.start)
            rate = len(flow.arrivals) / span
        elif math.isinf(flow.mean_interarrival):
            continue
        else:
            rate = 1.0 / flow.mean_interarrival
        if rate <= 0:
            continue
        current = flow.source
        for _ in range(len(topology)):
            if current == flow.destination:
                break
            try:
                nxt = next_hop(topology, current, flow.destination)
            except RouteFailure:
                break
            rates.add(current, nxt, rate)
            current = nxt
    return rates


def expected_epoch_gap(topology: Topology, rates: TrafficRates, node: int) -> float:
    """Expected slots between overhearing opportunities at ``node``.

    An opportunity is any transmission by a neighbor of ``node`` addressed to
    someone other than ``node``; the expected gap is the inverse of the
    summed intensity of those processes. Raises InfiniteGap when the summed
    rate is zero.
    """
    total = 0.0
    for i in topology.neighbors[node]:
        for j in topology.neighbors[i]:
            if j == node:
                continue
            total += rates.get(i, j)
    if total <= 0.0:
        raise InfiniteGap(f"node {node} never overhears under the given rates")
    return 1.0 / total
