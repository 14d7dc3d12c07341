"""Three-layer infrastructure model: nodes, mobility, links, services, users.

The topology is a time-varying directed graph. Ground nodes are static and
fully meshed among themselves; non-terrestrial nodes follow circular orbits
and re-link to their three nearest neighbors after every slot advance. Link
latency grows linearly with distance and capacity (= cost) shrinks with it,
so short links are fast, fat and expensive while long links are slow, thin
and cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, UnsupportedEventError

LATENCY_MIN_MS = 1.0
LATENCY_MAX_MS = 10.0
CAPACITY_MIN_MBPS = 10.0
CAPACITY_MAX_MBPS = 100.0

FULL_RESOLUTION = (1920, 1080)
RESOLUTION_TIERS = ((1.0, (1920, 1080)), (0.5, (960, 540)), (0.0, (480, 270)))


class Layer(Enum):
    GROUND = "ground"
    AIR = "air"
    SPACE = "space"


class UserStatus(Enum):
    REQUESTING = "requesting"
    SERVED = "served"
    UNSUPPORTED = "unsupported"


@dataclass(frozen=True)
class MobilitySpec:
    """Circular orbit in a horizontal plane, periodic in slots."""

    period: int
    phase: float
    radius: float
    center: np.ndarray

    def position_at(self, slot: int) -> np.ndarray:
        # modulo before the trig call keeps position(t) == position(t + period) bit-exact
        theta = self.phase + 2.0 * math.pi * ((slot % self.period) / self.period)
        offset = np.array([self.radius * math.cos(theta), self.radius * math.sin(theta), 0.0])
        return self.center + offset


@dataclass
class Node:
    id: int
    layer: Layer
    position: np.ndarray
    compute_capacity: float
    compute_available: float
    compute_cost: float
    orbit: Optional[MobilitySpec] = None

    def copy(self) -> "Node":
        return replace(self, position=self.position.copy())


@dataclass
class Link:
    src: int
    dst: int
    latency: float
    capacity: float
    capacity_available: float
    cost: float

    def copy(self) -> "Link":
        return replace(self)


@dataclass(frozen=True)
class FunctionalBlock:
    id: int
    compute_demand: float


@dataclass(frozen=True)
class ServiceSpec:
    id: int
    blocks: tuple[FunctionalBlock, ...]
    qoe_requirement: str
    qoe_threshold: float
    rate_requirement: float


@dataclass
class User:
    id: int
    attach_node: int
    service: int
    status: UserStatus = UserStatus.REQUESTING


@dataclass(frozen=True)
class PerturbationEvent:
    iteration: int
    kind: str = "LatencySwap"


@dataclass
class AllocationRecord:
    """One standing allocation: a placed block plus a reserved path."""

    user: int
    node: int
    path: tuple[int, ...]
    compute_amount: float
    capacity_amount: float
    rate_requirement: float
    delivered_rate: float = 0.0

    def __post_init__(self):
        if self.delivered_rate == 0.0:
            self.delivered_rate = self.capacity_amount

    def path_pairs(self) -> list[tuple[int, int]]:
        return [(self.path[i], self.path[i + 1]) for i in range(len(self.path) - 1)]


@dataclass
class Topology:
    nodes: list[Node]
    links: list[Link]
    slot: int
    d_max: float
    # persistent additive distance offsets installed by latency swaps, keyed by directed pair
    offsets: dict[tuple[int, int], float] = field(default_factory=dict)

    def copy(self) -> "Topology":
        return Topology(
            nodes=[n.copy() for n in self.nodes],
            links=[l.copy() for l in self.links],
            slot=self.slot,
            d_max=self.d_max,
            offsets=dict(self.offsets),
        )

    def link_map(self) -> dict[tuple[int, int], Link]:
        return {(l.src, l.dst): l for l in self.links}

    def node_map(self) -> dict[int, Node]:
        return {n.id: n for n in self.nodes}

    def structure_key(self) -> frozenset[tuple[int, int]]:
        return frozenset((l.src, l.dst) for l in self.links)

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for l in self.links:
            adj[l.src].append(l.dst)
        for nbrs in adj.values():
            nbrs.sort()
        return adj


@dataclass(frozen=True)
class PathInfo:
    nodes: tuple[int, ...]
    latency: float
    capacity: float
    cost: float


def _distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b))


def _link_properties(d: float, d_max: float, offset: float) -> tuple[float, float, float]:
    """Map an (offset-shifted) distance to (latency, capacity, cost)."""
    d_eff = min(max(d + offset, 0.0), d_max)
    latency = LATENCY_MIN_MS + 9.0 * (d_eff / d_max)
    latency = min(max(latency, LATENCY_MIN_MS), LATENCY_MAX_MS)
    capacity = 110.0 - 10.0 * latency
    capacity = min(max(capacity, CAPACITY_MIN_MBPS), CAPACITY_MAX_MBPS)
    return latency, capacity, capacity


def _latency_to_offset(target_latency: float, d: float, d_max: float) -> float:
    """Distance offset that makes _link_properties yield target_latency for raw distance d."""
    d_target = (target_latency - LATENCY_MIN_MS) * d_max / 9.0
    return d_target - d


def _wire_pairs(topology: Topology) -> set[tuple[int, int]]:
    """Directed link pairs implied by the current node positions."""
    nodes = topology.nodes
    pairs: set[tuple[int, int]] = set()
    ground = [n for n in nodes if n.layer is Layer.GROUND]
    for a in ground:
        for b in ground:
            if a.id != b.id:
                pairs.add((a.id, b.id))
    for u in nodes:
        if u.layer is Layer.GROUND:
            continue
        others = sorted(
            (n for n in nodes if n.id != u.id),
            key=lambda n: (_distance(u.position, n.position), n.id),
        )
        for v in others[:3]:
            pairs.add((u.id, v.id))
            pairs.add((v.id, u.id))  # 3-NN links are assumed bidirectional
    return pairs


def _build_links(topology: Topology, previous: Optional[dict[tuple[int, int], Link]] = None) -> list[Link]:
    node_map = topology.node_map()
    links = []
    for src, dst in sorted(_wire_pairs(topology)):
        d = _distance(node_map[src].position, node_map[dst].position)
        latency, capacity, cost = _link_properties(d, topology.d_max, topology.offsets.get((src, dst), 0.0))
        links.append(Link(src=src, dst=dst, latency=latency, capacity=capacity,
                          capacity_available=capacity, cost=cost))
    return links


def build_topology(config, seed: int) -> Topology:
    """Construct the slot-0 topology from a scenario config.

    Expects the config to expose ground/air/space node counts, the area side
    length, layer altitudes, orbit period and radius bounds, and the compute
    capacity range.
    """
    counts = (config.ground_nodes, config.air_nodes, config.space_nodes)
    total = sum(counts)
    if total < 2:
        raise ConfigurationError("need at least 2 nodes, got %d" % total)
    ntn = config.air_nodes + config.space_nodes
    if ntn > 0 and config.ground_nodes < 4:
        raise ConfigurationError(
            "3-nearest-neighbor linking requires at least 4 ground nodes, got %d" % config.ground_nodes
        )

    rng = np.random.default_rng(seed)
    area = float(config.area_km)
    nodes: list[Node] = []
    next_id = 0

    for _ in range(config.ground_nodes):
        pos = np.array([rng.uniform(0.0, area), rng.uniform(0.0, area), 0.0])
        cap = float(rng.uniform(config.compute_min, config.compute_max))
        nodes.append(Node(next_id, Layer.GROUND, pos, cap, cap, cap))
        next_id += 1

    base_period = int(config.orbit_period)
    divisors = [d for d in (1, 2, 3) if base_period % d == 0]
    for layer, count, altitude in (
        (Layer.AIR, config.air_nodes, float(config.air_altitude_km)),
        (Layer.SPACE, config.space_nodes, float(config.space_altitude_km)),
    ):
        for _ in range(count):
            center = np.array([rng.uniform(0.0, area), rng.uniform(0.0, area), altitude])
            radius = float(rng.uniform(config.orbit_radius_min_km, config.orbit_radius_max_km))
            phase = float(rng.uniform(0.0, 2.0 * math.pi))
            # staggered angular speeds (periods divide the base) keep the joint
            # configuration periodic in base_period while links keep re-sorting
            period = base_period // divisors[int(rng.integers(0, len(divisors)))]
            orbit = MobilitySpec(period=period, phase=phase, radius=radius, center=center)
            cap = float(rng.uniform(config.compute_min, config.compute_max))
            nodes.append(Node(next_id, layer, orbit.position_at(0), cap, cap, cap, orbit=orbit))
            next_id += 1

    d_max = _bounding_diagonal(nodes)
    topo = Topology(nodes=nodes, links=[], slot=0, d_max=d_max)
    topo.links = _build_links(topo)
    return topo


def _bounding_diagonal(nodes: Sequence[Node]) -> float:
    lo = np.full(3, np.inf)
    hi = np.full(3, -np.inf)
    for n in nodes:
        if n.orbit is None:
            lo = np.minimum(lo, n.position)
            hi = np.maximum(hi, n.position)
        else:
            c, r = n.orbit.center, n.orbit.radius
            lo = np.minimum(lo, c - np.array([r, r, 0.0]))
            hi = np.maximum(hi, c + np.array([r, r, 0.0]))
    diag = float(np.linalg.norm(hi - lo))
    return max(diag, 1e-9)


def advance(topology: Topology) -> Topology:
    """Move one slot forward: update orbits, re-link, re-derive link properties.

    Link reservations are not carried over; callers that track standing
    allocations re-apply them and re-evaluate QoE on the fresh snapshot.
    """
    new = topology.copy()
    new.slot = topology.slot + 1
    for n in new.nodes:
        if n.orbit is not None:
            n.position = n.orbit.position_at(new.slot)
    new.links = _build_links(new)
    return new


def apply_perturbation(topology: Topology, event: PerturbationEvent) -> Topology:
    """Apply a scheduled perturbation, returning a new topology.

    LatencySwap pairs the i-th lowest-latency link with the i-th highest and
    exchanges their latencies. The exchange is installed as a persistent
    distance offset per directed pair, so it survives subsequent advances of
    links that keep existing.
    """
    if event.kind != "LatencySwap":
        raise UnsupportedEventError("unknown perturbation kind: %r" % (event.kind,))
    new = topology.copy()
    order = sorted(range(len(new.links)), key=lambda i: (new.links[i].latency, new.links[i].src, new.links[i].dst))
    n = len(order)
    node_map = new.node_map()
    targets = {}
    for rank, idx in enumerate(order):
        partner = new.links[order[n - 1 - rank]]
        targets[idx] = partner.latency
    for idx, target_latency in targets.items():
        link = new.links[idx]
        d = _distance(node_map[link.src].position, node_map[link.dst].position)
        new.offsets[(link.src, link.dst)] = _latency_to_offset(target_latency, d, new.d_max)
        reserved = link.capacity - link.capacity_available
        latency, capacity, cost = _link_properties(d, new.d_max, new.offsets[(link.src, link.dst)])
        link.latency, link.capacity, link.cost = latency, capacity, cost
        link.capacity_available = max(capacity - reserved, 0.0)
    return new


def simple_path_nodes(adjacency: dict[int, list[int]], src: int, dst: int,
                      max_hops: int) -> list[tuple[int, ...]]:
    """All simple paths src -> dst with at most max_hops links, lexicographic."""
    if src == dst:
        return [(src,)]
    out: list[tuple[int, ...]] = []
    stack = [src]
    seen = {src}

    def walk(u: int, hops: int):
        if hops == max_hops:
            return
        for v in adjacency.get(u, ()):
            if v in seen:
                continue
            stack.append(v)
            if v == dst:
                out.append(tuple(stack))
            else:
                seen.add(v)
                walk(v, hops + 1)
                seen.discard(v)
            stack.pop()

    walk(src, 0)
    return out


def enumerate_paths(topology: Topology, src: int, dst: int, max_hops: int) -> list[PathInfo]:
    """All simple paths up to max_hops with latency/bottleneck/cost aggregates."""
    node_ids = {n.id for n in topology.nodes}
    if src not in node_ids or dst not in node_ids:
        raise ValueError("unknown endpoint: %s -> %s" % (src, dst))
    if max_hops < 1:
        raise ValueError("max_hops must be >= 1")
    lmap = topology.link_map()
    infos = []
    for nodes in simple_path_nodes(topology.adjacency(), src, dst, max_hops):
        if len(nodes) == 1:
            infos.append(PathInfo(nodes=nodes, latency=0.0, capacity=math.inf, cost=0.0))
            continue
        links = [lmap[(nodes[i], nodes[i + 1])] for i in range(len(nodes) - 1)]
        infos.append(PathInfo(
            nodes=nodes,
            latency=sum(l.latency for l in links),
            capacity=min(l.capacity_available for l in links),
            cost=sum(l.cost for l in links),
        ))
    return infos


def resolution_for_ratio(ratio: float) -> tuple[int, int]:
    for threshold, dims in RESOLUTION_TIERS:
        if ratio >= threshold:
            return dims
    return RESOLUTION_TIERS[-1][1]


def render_feedback(user: User, allocation: Optional[AllocationRecord]) -> Optional[str]:
    """Deterministic user feedback for a standing allocation.

    The delivered resolution tier follows the allocation's delivered rate
    relative to the service rate requirement. Returns None (the no-feedback
    marker) when the user holds no allocation.
    """
    if allocation is None or user.status is not UserStatus.SERVED:
        return None
    ratio = allocation.delivered_rate / allocation.rate_requirement
    w, h = resolution_for_ratio(ratio)
    return "received image at %dx%d" % (w, h)
