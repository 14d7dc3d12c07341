"""State encoding, action profiles, feasibility masking, and rewards.

The state is a fixed-length vector per scenario: a per-node block (compute
availability and cost), a per-ordered-node-pair link block (existence,
available capacity, cost, latency), and a per-user block (request flag,
service demands, attach one-hot). Everything is min-max normalized to [0,1]
by scenario ranges, so the same encoding doubles as agent input.

Agents never see the raw state: they get per-kind fixed-dimension masked
views in which infeasible resources are zeroed and the active objective is
appended one-hot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import environment as env
from .environment import ServiceSpec, Topology, User, UserStatus
from .knowledge import raw_hash_vector

EPS = 1e-9

PLACEMENT_FEATURES = 4   # feasible, compute avail, compute cost, best-route value hint
ROUTING_FEATURES = 3     # feasible, cost, value hint
VALUE_HINT_CAP = 4.0

OBJECTIVE_KINDS = ("min_cost", "max_quality", "load_balance")

OBJECTIVE_PROFILES = {
    "min_cost": (
        "minimizing cost: prefer cheap low cost resources, prioritize users "
        "with lower capacity requirements, pick the cheapest least expensive "
        "links and nodes, reduce spending and expenses"
    ),
    "max_quality": (
        "maximizing quality: serve users with stringent qoe demands on "
        "superior high performance resources, best resolution, premium "
        "experience, highest fidelity"
    ),
    "load_balance": (
        "load balancing: spread traffic evenly across nodes and links, even "
        "distribution of resource usage, balance utilization uniformly over "
        "the whole infrastructure"
    ),
}


class ActionKind(Enum):
    PLACEMENT = "placement"
    ROUTING = "routing"


@dataclass(frozen=True)
class Objective:
    kind: str
    profile_text: str

    def one_hot(self) -> np.ndarray:
        vec = np.zeros(len(OBJECTIVE_KINDS))
        vec[OBJECTIVE_KINDS.index(self.kind)] = 1.0
        return vec


def objective(kind: str) -> Objective:
    return Objective(kind=kind, profile_text=OBJECTIVE_PROFILES[kind])


@dataclass(frozen=True)
class ActionProfile:
    """Ordered action kinds a service requires; routing depends on placement."""

    kinds: tuple[ActionKind, ...]

    @staticmethod
    def for_service(service: ServiceSpec) -> "ActionProfile":
        kinds = tuple(ActionKind.PLACEMENT for _ in service.blocks) + (ActionKind.ROUTING,)
        return ActionProfile(kinds=kinds)


@dataclass(frozen=True)
class ActionDecision:
    user: int
    kind: ActionKind
    node: Optional[int] = None
    path: Optional[tuple[int, ...]] = None
    compute_amount: float = 0.0
    capacity_amount: float = 0.0

    def payload(self) -> dict:
        return {
            "kind": self.kind.value,
            "node": self.node,
            "path": list(self.path) if self.path is not None else None,
            "compute": self.compute_amount,
            "capacity": self.capacity_amount,
        }

    @staticmethod
    def from_payload(user: int, data: dict) -> "ActionDecision":
        return ActionDecision(
            user=user,
            kind=ActionKind(data["kind"]),
            node=data.get("node"),
            path=tuple(data["path"]) if data.get("path") else None,
            compute_amount=float(data.get("compute", 0.0)),
            capacity_amount=float(data.get("capacity", 0.0)),
        )


@dataclass
class RewardRecord:
    user: int
    per_action: list[tuple[ActionDecision, float]]
    total: float


@dataclass
class State:
    vector: np.ndarray
    slot: int
    raw_embed: Optional[np.ndarray] = None

    def raw_embed_vector(self) -> np.ndarray:
        if self.raw_embed is None:
            tokens = ["f%d=%.2f" % (i, v) for i, v in enumerate(self.vector)]
            self.raw_embed = raw_hash_vector(tokens)
        return self.raw_embed


@dataclass
class ActionFrame:
    """Masked agent input plus the slot-aligned decisions it encodes."""

    kind: ActionKind
    vector: np.ndarray
    decisions: list[Optional[ActionDecision]]

    @property
    def feasible_indices(self) -> list[int]:
        return [i for i, d in enumerate(self.decisions) if d is not None]


@dataclass
class GraphView:
    """Node/link attributes seen either from a topology or from a state vector.

    Total capacities are only known on topology-derived views; state vectors
    carry availabilities, costs and latencies.
    """

    n: int
    node_avail: np.ndarray
    node_cost: np.ndarray
    pair_exists: np.ndarray
    pair_avail: np.ndarray
    pair_cost: np.ndarray
    pair_latency: np.ndarray
    node_capacity: Optional[np.ndarray] = None
    pair_capacity: Optional[np.ndarray] = None

    def structure_key(self, pairs: Sequence[tuple[int, int]]) -> frozenset:
        return frozenset(p for p, ex in zip(pairs, self.pair_exists) if ex)

    def adjacency(self, pairs: Sequence[tuple[int, int]]) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {i: [] for i in range(self.n)}
        for (i, j), ex in zip(pairs, self.pair_exists):
            if ex:
                adj[i].append(j)
        for nbrs in adj.values():
            nbrs.sort()
        return adj


@dataclass
class PathMatrix:
    """Simple paths for one (src, dst) as padded pair-index rows."""

    paths: tuple[tuple[int, ...], ...]
    idx: np.ndarray   # (num_paths, max_hops), padded with the sentinel index
    hops: np.ndarray  # (num_paths,)


@dataclass(frozen=True)
class JointCandidate:
    placement: ActionDecision
    routing: ActionDecision
    placement_reward: float
    routing_reward: float

    @property
    def reward(self) -> float:
        return self.placement_reward + self.routing_reward


class Mdp:
    """Scenario-bound encoder, feasibility model and reward model.

    Holds the static pieces every operation needs: node count, service specs,
    normalization ranges, the per-kind action-space geometry, and a cache of
    simple-path structures keyed by link-set signature.
    """

    def __init__(self, num_nodes: int, services: dict[int, ServiceSpec],
                 demand_range: tuple[float, float], rate_range: tuple[float, float],
                 max_hops: int = 4, path_slots: int = 12, slot_period: int = 1):
        self.n = num_nodes
        self.services = dict(services)
        self.demand_range = demand_range
        self.rate_range = rate_range
        self.max_hops = max_hops
        self.path_slots = path_slots
        self.slot_period = max(int(slot_period), 1)
        self.pairs = [(i, j) for i in range(num_nodes) for j in range(num_nodes) if i != j]
        self.pair_pos = {p: idx for idx, p in enumerate(self.pairs)}
        self.sentinel = len(self.pairs)
        self._path_cache: dict = {}

    # ---------------------------------------------------------------- layout

    def state_length(self, num_users: int) -> int:
        return 2 * self.n + 4 * len(self.pairs) + num_users * (3 + self.n)

    def _norm_demand(self, d: float) -> float:
        lo, hi = self.demand_range
        return (d - lo) / (hi - lo) if hi > lo else 0.0

    def _norm_rate(self, r: float) -> float:
        lo, hi = self.rate_range
        return (r - lo) / (hi - lo) if hi > lo else 0.0

    # ------------------------------------------------------------ graph views

    def view_from_topology(self, topology: Topology) -> GraphView:
        n = self.n
        node_avail = np.zeros(n)
        node_cost = np.zeros(n)
        node_cap = np.zeros(n)
        for node in topology.nodes:
            node_avail[node.id] = node.compute_available
            node_cost[node.id] = node.compute_cost
            node_cap[node.id] = node.compute_capacity
        p = len(self.pairs)
        exists = np.zeros(p, dtype=bool)
        avail = np.zeros(p)
        cost = np.zeros(p)
        latency = np.zeros(p)
        cap = np.zeros(p)
        for link in topology.links:
            idx = self.pair_pos[(link.src, link.dst)]
            exists[idx] = True
            avail[idx] = link.capacity_available
            cost[idx] = link.cost
            latency[idx] = link.latency
            cap[idx] = link.capacity
        return GraphView(n, node_avail, node_cost, exists, avail, cost, latency,
                         node_capacity=node_cap, pair_capacity=cap)

    def view_from_state(self, state: State) -> GraphView:
        n = self.n
        vec = state.vector
        node_avail = vec[0:2 * n:2] * 100.0
        node_cost = vec[1:2 * n:2] * 90.0 + 10.0
        base = 2 * n
        p = len(self.pairs)
        block = vec[base:base + 4 * p].reshape(p, 4)
        exists = block[:, 0] > 0.5
        avail = block[:, 1] * 100.0 * exists
        cost = np.where(exists, block[:, 2] * 90.0 + 10.0, 0.0)
        latency = np.where(exists, block[:, 3] * 9.0 + 1.0, 0.0)
        return GraphView(n, node_avail, node_cost, exists, avail, cost, latency)

    # ---------------------------------------------------------- state indexing

    def index_state(self, topology: Topology, users: Sequence[User],
                    qoe_results: dict[int, bool]) -> State:
        """Deterministic encoding of the current slot.

        A user's request flag clears only when it is served and its QoE held;
        failed or missing evaluations leave the user marked as seeking.
        """
        view = self.view_from_topology(topology)
        node_block = np.empty(2 * self.n)
        node_block[0::2] = view.node_avail / 100.0
        node_block[1::2] = (view.node_cost - 10.0) / 90.0
        link_block = np.zeros((len(self.pairs), 4))
        link_block[:, 0] = view.pair_exists
        link_block[:, 1] = view.pair_avail / 100.0
        link_block[:, 2] = np.where(view.pair_exists, (view.pair_cost - 10.0) / 90.0, 0.0)
        link_block[:, 3] = np.where(view.pair_exists, (view.pair_latency - 1.0) / 9.0, 0.0)

        user_block = np.zeros(len(users) * (3 + self.n))
        tokens = []
        for pos, user in enumerate(sorted(users, key=lambda u: u.id)):
            service = self.services[user.service]
            flag = 0.0 if (user.status is UserStatus.SERVED and qoe_results.get(user.id, False)) else 1.0
            off = pos * (3 + self.n)
            user_block[off] = flag
            user_block[off + 1] = self._norm_demand(service.blocks[0].compute_demand)
            user_block[off + 2] = self._norm_rate(service.rate_requirement)
            user_block[off + 3 + user.attach_node] = 1.0
            tokens.append("u%d.req=%d" % (user.id, int(flag)))
            tokens.append("u%d.at=%d" % (user.id, user.attach_node))

        for i in range(self.n):
            tokens.append("n%d.av=%.2f" % (i, node_block[2 * i]))
        for (i, j), idx in self.pair_pos.items():
            if view.pair_exists[idx]:
                tokens.append("e%d.%d.c=%.2f" % (i, j, link_block[idx, 2]))
                tokens.append("e%d.%d.av=%.2f" % (i, j, link_block[idx, 1]))
        tokens.append("ph=%d" % (topology.slot % self.slot_period))

        vector = np.concatenate([node_block, link_block.reshape(-1), user_block])
        return State(vector=vector, slot=topology.slot, raw_embed=raw_hash_vector(tokens))

    # ------------------------------------------------------------- path cache

    def path_matrix(self, view: GraphView, src: int, dst: int) -> PathMatrix:
        key = (view.structure_key(self.pairs), src, dst)
        hit = self._path_cache.get(key)
        if hit is None:
            adj = view.adjacency(self.pairs)
            paths = tuple(env.simple_path_nodes(adj, src, dst, self.max_hops))
            idx = np.full((len(paths), self.max_hops), self.sentinel, dtype=int)
            hops = np.zeros(len(paths), dtype=int)
            for row, path in enumerate(paths):
                hops[row] = len(path) - 1
                for col in range(len(path) - 1):
                    idx[row, col] = self.pair_pos[(path[col], path[col + 1])]
            hit = PathMatrix(paths=paths, idx=idx, hops=hops)
            self._path_cache[key] = hit
        return hit

    def paths_between(self, view: GraphView, src: int, dst: int) -> tuple[tuple[int, ...], ...]:
        return self.path_matrix(view, src, dst).paths

    def _augmented(self, values: np.ndarray, pad: float) -> np.ndarray:
        return np.append(values, pad)

    def path_costs(self, view: GraphView, pm: PathMatrix) -> np.ndarray:
        return self._augmented(view.pair_cost, 0.0)[pm.idx].sum(axis=1)

    def path_bottlenecks(self, view: GraphView, pm: PathMatrix) -> np.ndarray:
        return self._augmented(view.pair_avail, math.inf)[pm.idx].min(axis=1)

    def path_latencies(self, view: GraphView, pm: PathMatrix) -> np.ndarray:
        return self._augmented(view.pair_latency, 0.0)[pm.idx].sum(axis=1)

    def path_aggregates(self, view: GraphView, path: tuple[int, ...]) -> tuple[float, float, float]:
        """(summed cost, bottleneck available capacity, summed latency) along one path."""
        cost = 0.0
        bottleneck = math.inf
        latency = 0.0
        for i in range(len(path) - 1):
            idx = self.pair_pos[(path[i], path[i + 1])]
            cost += view.pair_cost[idx]
            latency += view.pair_latency[idx]
            bottleneck = min(bottleneck, view.pair_avail[idx])
        return cost, bottleneck, latency

    # ------------------------------------------------------------- feasibility

    def _placement_candidates(self, view: GraphView, user: User) -> list[ActionDecision]:
        demand = self.services[user.service].blocks[0].compute_demand
        out = []
        for node in range(self.n):
            if view.node_avail[node] + EPS >= demand:
                out.append(ActionDecision(user=user.id, kind=ActionKind.PLACEMENT,
                                          node=node, compute_amount=demand))
        return out

    def _routing_rows(self, view: GraphView, user: User, placement_node: int
                      ) -> tuple[PathMatrix, np.ndarray]:
        """Path matrix plus the row mask of rate-feasible, at-least-one-link paths."""
        rate = self.services[user.service].rate_requirement
        pm = self.path_matrix(view, user.attach_node, placement_node)
        if len(pm.paths) == 0:
            return pm, np.zeros(0, dtype=bool)
        feasible = (self.path_bottlenecks(view, pm) + EPS >= rate) & (pm.hops >= 1)
        return pm, feasible

    def _routing_decision(self, user_id: int, path: tuple[int, ...],
                          rate: float) -> ActionDecision:
        return ActionDecision(user=user_id, kind=ActionKind.ROUTING, path=path,
                              capacity_amount=rate)

    def _routing_candidates(self, view: GraphView, user: User,
                            placement_node: int) -> list[ActionDecision]:
        rate = self.services[user.service].rate_requirement
        pm, feasible = self._routing_rows(view, user, placement_node)
        return [self._routing_decision(user.id, pm.paths[row], rate)
                for row in np.flatnonzero(feasible)]

    def feasible_decisions(self, state: Optional[State], topology: Topology, user: User,
                           kind: ActionKind, placement_node: Optional[int] = None
                           ) -> list[ActionDecision]:
        """All decisions satisfying capacity and rate constraints, deterministic order.

        Routing candidates require the pending placement node. An empty list
        means the user cannot be supported for this kind.
        """
        view = self.view_from_topology(topology)
        if kind is ActionKind.PLACEMENT:
            return self._placement_candidates(view, user)
        if placement_node is None:
            raise ValueError("routing feasibility requires the placement node")
        return self._routing_candidates(view, user, placement_node)

    # ----------------------------------------------------------------- frames

    def _user_context_block(self, user: User, objective: Objective) -> np.ndarray:
        service = self.services[user.service]
        block = np.zeros(2 + self.n + len(OBJECTIVE_KINDS))
        block[0] = self._norm_demand(service.blocks[0].compute_demand)
        block[1] = self._norm_rate(service.rate_requirement)
        block[2 + user.attach_node] = 1.0
        block[2 + self.n:] = objective.one_hot()
        return block

    def _mean_link_cost(self, view: GraphView) -> float:
        exists = view.pair_exists
        if not exists.any():
            return 0.0
        return float(np.mean(view.pair_cost[exists]))

    def placement_frame(self, view: GraphView, user: User, objective: Objective) -> ActionFrame:
        decisions: list[Optional[ActionDecision]] = [None] * self.n
        f = PLACEMENT_FEATURES
        vector = np.zeros(f * self.n)
        mean_link = self._mean_link_cost(view)
        for dec in self._placement_candidates(view, user):
            node = dec.node
            decisions[node] = dec
            vector[f * node] = 1.0
            vector[f * node + 1] = view.node_avail[node] / 100.0
            vector[f * node + 2] = (view.node_cost[node] - 10.0) / 90.0
            pm, feasible = self._routing_rows(view, user, node)
            if feasible.any():
                best = float(self.path_costs(view, pm)[feasible].min())
                hint = min(mean_link / best, VALUE_HINT_CAP) / VALUE_HINT_CAP
                vector[f * node + 3] = hint
        vector = np.concatenate([vector, self._user_context_block(user, objective)])
        return ActionFrame(kind=ActionKind.PLACEMENT, vector=vector, decisions=decisions)

    def routing_frame(self, view: GraphView, user: User, objective: Objective,
                      placement_node: int) -> ActionFrame:
        k = self.path_slots
        f = ROUTING_FEATURES
        rate = self.services[user.service].rate_requirement
        pm, feasible = self._routing_rows(view, user, placement_node)
        rows = np.flatnonzero(feasible)
        if len(rows):
            costs = self.path_costs(view, pm)
            mean_link = self._mean_link_cost(view)
            if len(rows) > k:
                ranked = sorted(rows, key=lambda r: (costs[r], pm.paths[r]))[:k]
                rows = sorted(ranked, key=lambda r: pm.paths[r])
        decisions: list[Optional[ActionDecision]] = [None] * k
        vector = np.zeros(f * k)
        for slot, row in enumerate(rows):
            path = pm.paths[row]
            decisions[slot] = self._routing_decision(user.id, path, rate)
            vector[f * slot] = 1.0
            vector[f * slot + 1] = costs[row] / (100.0 * self.max_hops)
            vector[f * slot + 2] = min(mean_link / costs[row], VALUE_HINT_CAP) / VALUE_HINT_CAP
        vector = np.concatenate([vector, self._user_context_block(user, objective)])
        return ActionFrame(kind=ActionKind.ROUTING, vector=vector, decisions=decisions)

    def action_frame(self, state: State, user: User, kind: ActionKind, objective: Objective,
                     placement_node: Optional[int] = None) -> ActionFrame:
        view = self.view_from_state(state)
        if kind is ActionKind.PLACEMENT:
            return self.placement_frame(view, user, objective)
        if placement_node is None:
            raise ValueError("routing frame requires the placement node")
        return self.routing_frame(view, user, objective, placement_node)

    def mask_state(self, history, user: User, kind: ActionKind, objective: Objective,
                   placement_node: Optional[int] = None) -> np.ndarray:
        """Masked view of the latest state in the history for one user and kind."""
        return self.action_frame(history.last(), user, kind, objective, placement_node).vector

    def frame_dim(self, kind: ActionKind) -> int:
        base = 2 + self.n + len(OBJECTIVE_KINDS)
        if kind is ActionKind.PLACEMENT:
            return PLACEMENT_FEATURES * self.n + base
        return ROUTING_FEATURES * self.path_slots + base

    def action_count(self, kind: ActionKind) -> int:
        return self.n if kind is ActionKind.PLACEMENT else self.path_slots

    # ------------------------------------------------------- joint candidates

    def joint_candidates(self, topology: Topology, user: User, objective: Objective,
                         view: Optional[GraphView] = None) -> list[JointCandidate]:
        """Feasible (placement, routing) pairs with per-action rewards.

        Valued against the view's current availabilities, as a single user
        would see them; deterministic order (node ascending, path lex).
        """
        view = view or self.view_from_topology(topology)
        rate = self.services[user.service].rate_requirement
        out: list[JointCandidate] = []
        for placement in self._placement_candidates(view, user):
            pm, feasible = self._routing_rows(view, user, placement.node)
            rows = np.flatnonzero(feasible)
            if not len(rows):
                continue
            costs = self.path_costs(view, pm)
            p_reward = self._candidate_placement_reward(view, placement, objective)
            for row in sorted(rows, key=lambda r: pm.paths[r]):
                routing = ActionDecision(user=user.id, kind=ActionKind.ROUTING,
                                         path=pm.paths[row], capacity_amount=rate)
                r_reward = self._candidate_routing_reward(view, routing, costs[row], objective)
                out.append(JointCandidate(placement, routing, p_reward, r_reward))
        return out

    def best_joint_reward(self, topology: Topology, user: User, objective: Objective,
                          view: Optional[GraphView] = None) -> Optional[float]:
        view = view or self.view_from_topology(topology)
        if objective.kind == "min_cost":
            service = self.services[user.service]
            demand = service.blocks[0].compute_demand
            mean_node = float(np.mean(view.node_cost))
            mean_link = float(np.mean(view.pair_cost[view.pair_exists]))
            best = None
            for node in range(self.n):
                if view.node_avail[node] + EPS < demand:
                    continue
                pm, feasible = self._routing_rows(view, user, node)
                if not feasible.any():
                    continue
                min_path = float(self.path_costs(view, pm)[feasible].min())
                p_reward = mean_node / (view.node_cost[node] * demand / view.node_capacity[node])
                reward = p_reward + mean_link / min_path
                if best is None or reward > best:
                    best = reward
            return best
        candidates = self.joint_candidates(topology, user, objective, view=view)
        if not candidates:
            return None
        return max(c.reward for c in candidates)

    def min_single_cost(self, view: GraphView, user: User) -> Optional[float]:
        """Cheapest single-user allocated cost on the given view, contention-free.

        Used as the per-user term of the cost lower bound: any joint
        allocation pays at least this much for this user.
        """
        service = self.services[user.service]
        demand = service.blocks[0].compute_demand
        best = None
        for node in range(self.n):
            if view.node_avail[node] + EPS < demand:
                continue
            pm, feasible = self._routing_rows(view, user, node)
            if not feasible.any():
                continue
            min_path = float(self.path_costs(view, pm)[feasible].min())
            total = view.node_cost[node] * demand / view.node_capacity[node] + min_path
            if best is None or total < best:
                best = total
        return best

    def _candidate_placement_reward(self, view: GraphView, dec: ActionDecision,
                                    objective: Objective) -> float:
        if objective.kind == "min_cost":
            capacity = view.node_capacity[dec.node]
            allocated = view.node_cost[dec.node] * (dec.compute_amount / capacity)
            return float(np.mean(view.node_cost)) / allocated
        if objective.kind == "max_quality":
            return min(view.node_capacity[dec.node] / dec.compute_amount, 2.0)
        utils = 1.0 - view.node_avail / view.node_capacity
        utils = utils + 0.0
        utils[dec.node] += dec.compute_amount / view.node_capacity[dec.node]
        return 1.0 - float(np.std(utils))

    def _candidate_routing_reward(self, view: GraphView, dec: ActionDecision,
                                  path_cost: float, objective: Objective) -> float:
        if objective.kind == "min_cost":
            if path_cost <= 0.0:
                raise ValueError("allocated cost must be positive, got %r" % path_cost)
            return float(np.mean(view.pair_cost[view.pair_exists])) / path_cost
        if objective.kind == "max_quality":
            bottleneck = min(view.pair_capacity[self.pair_pos[p]] for p in _path_pairs(dec.path))
            return min(bottleneck / dec.capacity_amount, 2.0)
        exists = view.pair_exists
        utils = 1.0 - view.pair_avail[exists] / view.pair_capacity[exists]
        utils = utils.copy()
        positions = {int(i): k for k, i in enumerate(np.flatnonzero(exists))}
        for p in _path_pairs(dec.path):
            utils[positions[self.pair_pos[p]]] += dec.capacity_amount / view.pair_capacity[self.pair_pos[p]]
        return 1.0 - float(np.std(utils))

    # ---------------------------------------------------------------- rewards

    def _action_reward(self, decision: ActionDecision, objective: Objective,
                       topology: Topology) -> float:
        if objective.kind == "min_cost":
            return self._min_cost_reward(decision, topology)
        if objective.kind == "max_quality":
            return self._max_quality_reward(decision, topology)
        return self._load_balance_reward(decision, topology)

    def _min_cost_reward(self, decision: ActionDecision, topology: Topology) -> float:
        if decision.kind is ActionKind.PLACEMENT:
            node = topology.node_map()[decision.node]
            allocated = node.compute_cost * (decision.compute_amount / node.compute_capacity)
            mean_cost = float(np.mean([n.compute_cost for n in topology.nodes]))
        else:
            lmap = topology.link_map()
            allocated = sum(lmap[p].cost for p in _path_pairs(decision.path))
            mean_cost = float(np.mean([l.cost for l in topology.links]))
        if allocated <= 0.0:
            raise ValueError("allocated cost must be positive, got %r" % allocated)
        return mean_cost / allocated

    def _max_quality_reward(self, decision: ActionDecision, topology: Topology) -> float:
        if decision.kind is ActionKind.PLACEMENT:
            node = topology.node_map()[decision.node]
            margin = node.compute_capacity / decision.compute_amount
        else:
            lmap = topology.link_map()
            bottleneck = min(lmap[p].capacity for p in _path_pairs(decision.path))
            margin = bottleneck / decision.capacity_amount
        return min(margin, 2.0)

    def _load_balance_reward(self, decision: ActionDecision, topology: Topology) -> float:
        if decision.kind is ActionKind.PLACEMENT:
            utils = [1.0 - n.compute_available / n.compute_capacity for n in topology.nodes]
        else:
            utils = [1.0 - l.capacity_available / l.capacity for l in topology.links]
        return 1.0 - float(np.std(utils))

    def compute_reward(self, prev: Optional[State], curr: Optional[State],
                       decisions: Sequence[ActionDecision], objective: Objective,
                       qoe_met: dict[int, bool], topology: Topology) -> list[RewardRecord]:
        """Per-user reward records for the slot's decisions, QoE gated.

        Rewards follow the active objective; any user whose QoE is unmet (or
        who ended up unsupported) earns exactly 0 for every action.
        """
        per_user: dict[int, list[ActionDecision]] = {}
        order: list[int] = []
        for dec in decisions:
            if dec.user not in per_user:
                per_user[dec.user] = []
                order.append(dec.user)
            per_user[dec.user].append(dec)
        records = []
        for uid in order:
            gated = not qoe_met.get(uid, False)
            per_action = []
            for dec in per_user[uid]:
                reward = 0.0 if gated else self._action_reward(dec, objective, topology)
                per_action.append((dec, reward))
            records.append(RewardRecord(user=uid, per_action=per_action,
                                        total=sum(r for _, r in per_action)))
        return records


def _path_pairs(path: tuple[int, ...]) -> list[tuple[int, int]]:
    return [(path[i], path[i + 1]) for i in range(len(path) - 1)]
