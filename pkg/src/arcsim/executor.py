"""Per-action RL agents and serial execution of a user sequence.

Each action kind gets its own dueling Q-network pair (acting + training)
over the masked state view for that kind. Networks are small dense numpy
models with hand-rolled backprop so training gradients stay inspectable and
exactly testable against finite differences.

Naming follows the inverted convention used with the double construction:
the training network is updated every step and is periodically copied into
the acting network, which is the one that selects actions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .environment import AllocationRecord, Topology, User, UserStatus
from .mdp import ActionDecision, ActionFrame, ActionKind, Mdp, Objective, State


class QNetwork:
    """Feedforward trunk (2x64 rectifier) with value and advantage heads.

    Q(s, a) = V(s) + A(s, a) - mean_a' A(s, a'), exactly.
    """

    PARAM_NAMES = ("W1", "b1", "W2", "b2", "Wv", "bv", "Wa", "ba")

    def __init__(self, input_dim: int, action_count: int, hidden: int = 64,
                 rng: Optional[np.random.Generator] = None):
        rng = rng or np.random.default_rng(0)
        self.input_dim = input_dim
        self.action_count = action_count
        self.hidden = hidden
        self.params = {
            "W1": rng.normal(0.0, np.sqrt(2.0 / input_dim), (input_dim, hidden)),
            "b1": np.zeros(hidden),
            "W2": rng.normal(0.0, np.sqrt(2.0 / hidden), (hidden, hidden)),
            "b2": np.zeros(hidden),
            "Wv": rng.normal(0.0, np.sqrt(2.0 / hidden), (hidden, 1)),
            "bv": np.zeros(1),
            "Wa": rng.normal(0.0, np.sqrt(2.0 / hidden), (hidden, action_count)),
            "ba": np.zeros(action_count),
        }

    def copy_from(self, other: "QNetwork") -> None:
        for name in self.PARAM_NAMES:
            self.params[name] = other.params[name].copy()

    def clone(self) -> "QNetwork":
        dup = QNetwork(self.input_dim, self.action_count, self.hidden)
        dup.copy_from(self)
        return dup

    def _forward_cached(self, x: np.ndarray):
        p = self.params
        z1 = x @ p["W1"] + p["b1"]
        h1 = np.maximum(z1, 0.0)
        z2 = h1 @ p["W2"] + p["b2"]
        h2 = np.maximum(z2, 0.0)
        v = h2 @ p["Wv"] + p["bv"]
        a = h2 @ p["Wa"] + p["ba"]
        q = v + a - a.mean(axis=1, keepdims=True)
        return q, (x, z1, h1, z2, h2)

    def forward(self, x: np.ndarray) -> np.ndarray:
        squeeze = x.ndim == 1
        batch = np.atleast_2d(np.asarray(x, dtype=float))
        if batch.shape[1] != self.input_dim:
            raise ValueError("input dim %d != network dim %d" % (batch.shape[1], self.input_dim))
        q, _ = self._forward_cached(batch)
        return q[0] if squeeze else q

    def loss_and_grads(self, states: np.ndarray, actions: np.ndarray,
                       targets: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
        """Mean-squared TD loss on the chosen actions plus analytic gradients."""
        p = self.params
        batch = states.shape[0]
        q, (x, z1, h1, z2, h2) = self._forward_cached(states)
        rows = np.arange(batch)
        chosen = q[rows, actions]
        err = chosen - targets
        loss = float(np.mean(err ** 2))

        dq = np.zeros_like(q)
        dq[rows, actions] = 2.0 * err / batch
        dv = dq.sum(axis=1, keepdims=True)
        da = dq - dq.sum(axis=1, keepdims=True) / self.action_count

        grads = {
            "Wv": h2.T @ dv, "bv": dv.sum(axis=0),
            "Wa": h2.T @ da, "ba": da.sum(axis=0),
        }
        dh2 = dv @ p["Wv"].T + da @ p["Wa"].T
        dz2 = dh2 * (z2 > 0.0)
        grads["W2"] = h1.T @ dz2
        grads["b2"] = dz2.sum(axis=0)
        dh1 = dz2 @ p["W2"].T
        dz1 = dh1 * (z1 > 0.0)
        grads["W1"] = x.T @ dz1
        grads["b1"] = dz1.sum(axis=0)
        return loss, grads

    def apply_grads(self, grads: dict[str, np.ndarray], lr: float) -> None:
        for name, g in grads.items():
            self.params[name] -= lr * g


def q_forward(net: QNetwork, masked: np.ndarray) -> np.ndarray:
    """Per-action Q values for one masked state."""
    return net.forward(masked)


@dataclass(frozen=True)
class EpsilonSchedule:
    start: float = 1.0
    end: float = 0.05
    decay_slots: int = 2000

    def value(self, slot: int) -> float:
        frac = min(max(slot, 0) / self.decay_slots, 1.0) if self.decay_slots > 0 else 1.0
        return self.start + (self.end - self.start) * frac


@dataclass
class Agent:
    """One specialist per action kind: paired networks plus a replay buffer."""

    kind: ActionKind
    acting_net: QNetwork
    training_net: QNetwork
    buffer: object
    epsilon: float = 1.0

    def select(self, frame: ActionFrame, rng: np.random.Generator) -> int:
        return select_action_index(self, frame.vector, frame.decisions, rng)


def select_action_index(agent: Agent, masked: np.ndarray,
                        decisions: Sequence[Optional[ActionDecision]],
                        rng: np.random.Generator) -> int:
    """Epsilon-greedy over the feasible slots; greedy ties go to the lowest index."""
    feasible = [i for i, d in enumerate(decisions) if d is not None]
    if not feasible:
        raise ValueError("select_action requires a nonempty feasible set")
    if agent.epsilon > 0.0 and rng.random() < agent.epsilon:
        return int(feasible[rng.integers(0, len(feasible))])
    q = agent.acting_net.forward(masked)
    best = feasible[0]
    for i in feasible[1:]:
        if q[i] > q[best]:
            best = i
    return int(best)


def select_action(agent: Agent, masked: np.ndarray,
                  decisions: Sequence[Optional[ActionDecision]],
                  rng: np.random.Generator) -> ActionDecision:
    idx = select_action_index(agent, masked, decisions, rng)
    return decisions[idx]


@dataclass
class StepRecord:
    """One executed (or attempted) decision with the view it was chosen from."""

    user: int
    kind: ActionKind
    frame_vector: np.ndarray
    action_index: int
    decision: ActionDecision


@dataclass
class ExecutionResult:
    decisions: list[StepRecord]
    topology: Topology
    state: State
    allocations: dict[int, AllocationRecord]
    unsupported: list[int]


def execute_sequence(sequence, history, agents: dict[ActionKind, Agent],
                     topology: Topology, mdp: Mdp, users: Sequence[User],
                     objective: Objective, qoe_met: dict[int, bool],
                     rng: np.random.Generator) -> ExecutionResult:
    """Run the slot's sequence serially, updating availability after each user.

    Users are processed in sequence order; each user's kinds run serially
    (routing needs the placement output). A user with an empty feasible set
    for any kind becomes Unsupported and any partial reservation is rolled
    back exactly. The working state is re-indexed after every user so later
    users see reduced availability.
    """
    topo = topology.copy()
    user_map = {u.id: u for u in users}
    qoe = dict(qoe_met)
    state = history.last()
    records: list[StepRecord] = []
    allocations: dict[int, AllocationRecord] = {}
    unsupported: list[int] = []

    for user_id, kinds in sequence.ordered:
        user = user_map[user_id]
        if user.status is not UserStatus.REQUESTING:
            continue
        service = mdp.services[user.service]
        placement: Optional[ActionDecision] = None
        routing: Optional[ActionDecision] = None
        user_records: list[StepRecord] = []
        failed = False

        for kind in kinds:
            frame = mdp.action_frame(state, user, kind, objective,
                                     placement_node=placement.node if placement else None)
            if not frame.feasible_indices:
                failed = True
                break
            idx = agents[kind].select(frame, rng)
            decision = frame.decisions[idx]
            user_records.append(StepRecord(user_id, kind, frame.vector, idx, decision))
            if kind is ActionKind.PLACEMENT:
                placement = decision
                node = topo.node_map()[decision.node]
                node.compute_available -= decision.compute_amount
            else:
                routing = decision
                lmap = topo.link_map()
                for pair in _pairs(decision.path):
                    lmap[pair].capacity_available -= decision.capacity_amount

        records.extend(user_records)
        if failed:
            if placement is not None:
                topo.node_map()[placement.node].compute_available += placement.compute_amount
            if routing is not None:
                lmap = topo.link_map()
                for pair in _pairs(routing.path):
                    lmap[pair].capacity_available += routing.capacity_amount
            user.status = UserStatus.UNSUPPORTED
            unsupported.append(user_id)
            qoe[user_id] = False
        else:
            user.status = UserStatus.SERVED
            qoe[user_id] = True
            allocations[user_id] = AllocationRecord(
                user=user_id,
                node=placement.node,
                path=routing.path,
                compute_amount=placement.compute_amount,
                capacity_amount=routing.capacity_amount,
                rate_requirement=service.rate_requirement,
            )
        state = mdp.index_state(topo, users, qoe)

    return ExecutionResult(decisions=records, topology=topo, state=state,
                           allocations=allocations, unsupported=unsupported)


def _pairs(path: tuple[int, ...]) -> list[tuple[int, int]]:
    return [(path[i], path[i + 1]) for i in range(len(path) - 1)]


def save_agent_params(agent: Agent, path: str) -> None:
    """Flat-array text dump: header line, then name/shape line + values line per array."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("arc-agent v1 kind=%s epsilon=%r\n" % (agent.kind.value, agent.epsilon))
        for net_name, net in (("acting", agent.acting_net), ("training", agent.training_net)):
            for pname in QNetwork.PARAM_NAMES:
                arr = net.params[pname]
                fh.write("%s.%s %s\n" % (net_name, pname, " ".join(str(d) for d in arr.shape)))
                fh.write(" ".join(repr(float(v)) for v in arr.reshape(-1)) + "\n")


def load_agent_params(agent: Agent, path: str) -> None:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if not header or header[0] != "arc-agent":
            raise ValueError("not an agent parameter file: %s" % path)
        agent.epsilon = float(header[3].split("=", 1)[1])
        while True:
            meta = fh.readline()
            if not meta.strip():
                break
            name, *dims = meta.split()
            net_name, pname = name.split(".")
            shape = tuple(int(d) for d in dims)
            values = np.array([float(v) for v in fh.readline().split()])
            net = agent.acting_net if net_name == "acting" else agent.training_net
            net.params[pname] = values.reshape(shape)
