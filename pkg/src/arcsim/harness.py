"""Scenario-driven closed-loop simulation, ablation modes, metrics, CSV.

Per iteration the loop advances the environment, re-evaluates the QoE of
standing allocations (discarding failed ones), indexes and stores the state,
tracks the active objective, prompts, sequences, executes, rewards, augments
the experience base, refreshes replay buffers, trains, applies scheduled
perturbations, and emits one metrics row.

Modes:
  arc     full loop (contrastive exemplars, agents trained continually)
  ru-arc  reward-unaware: similarity-only exemplars, agents frozen at their
          bootstrap parameters, no training
  nr-arc  non-reinforcement: no agents at all; low-level decisions come from
          the sequencer backend's per-step chooser
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional

import numpy as np

from . import environment as env
from . import crl
from .environment import (AllocationRecord, FunctionalBlock, PerturbationEvent,
                          ServiceSpec, Topology, User, UserStatus, render_feedback)
from .errors import ConfigurationError
from .executor import (Agent, EpsilonSchedule, ExecutionResult, QNetwork,
                       execute_sequence)
from .knowledge import KBKind, KnowledgeBase, StateHistory, push_state
from .mdp import (ROUTING_FEATURES, ActionKind, Mdp, Objective,
                  objective as make_objective)
from .oracle import MAX_ORACLE_NODES, MAX_ORACLE_USERS, bootstrap_exemplars
from .rag import (StrategistCommand, UpdatePrompt, augment_experience,
                  build_allocation_prompt, build_skb, chat_complete, evaluate_qoe,
                  track_objective)
from .sequencer import HeuristicBackend, OracleBackend, RemoteBackend, sequence_users

MODES = ("arc", "ru-arc", "nr-arc")
BACKENDS = ("heuristic", "oracle", "remote")

CSV_HEADER = "iteration,mode,normalized_cost_score,supported_users,mean_reward"


@dataclass
class ScenarioConfig:
    # scenario
    iterations: int = 5000
    seed: int = 7
    mode: str = "arc"
    backend: str = "heuristic"
    window: int = 16
    exemplar_k: int = 2
    exemplar_m: int = 8
    max_hops: int = 4
    path_slots: int = 8
    nr_random_rate: float = 0.25
    nr_path_slots: int = 32
    remote_deadline_ms: int = 10000
    # nodes
    ground_nodes: int = 5
    air_nodes: int = 2
    space_nodes: int = 3
    area_km: float = 500.0
    air_altitude_km: float = 20.0
    space_altitude_km: float = 500.0
    orbit_period: int = 60
    orbit_radius_min_km: float = 120.0
    orbit_radius_max_km: float = 360.0
    compute_min: float = 10.0
    compute_max: float = 100.0
    # services and users
    user_count: int = 10
    attach_layers: str = "ntn"  # ntn | ground | any
    demand_min: float = 2.0
    demand_max: float = 5.0
    rate_min: float = 4.0
    rate_max: float = 8.0
    qoe_threshold: float = 0.99
    qoe_requirement: str = "the image must be 1920x1080 to be acceptable"
    # agents
    hidden: int = 64
    buffer_capacity: int = 2048
    batch_size: int = 64
    gamma: float = 0.9
    lr: float = 1e-2
    epsilon_start: float = 1.0
    epsilon_end: float = 0.01
    epsilon_decay_slots: int = 2000
    sync_every: int = 100
    train_steps_per_slot: int = 8
    bootstrap_exemplars: int = 6
    # (iteration, PerturbationEvent | StrategistCommand), sorted by iteration
    events: list = field(default_factory=list)

    def validate(self) -> None:
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if self.mode not in MODES:
            raise ConfigurationError("unknown mode %r (expected one of %s)" % (self.mode, MODES))
        if self.backend not in BACKENDS:
            raise ConfigurationError("unknown backend %r" % self.backend)
        if self.user_count < 0:
            raise ConfigurationError("user_count must be >= 0")
        if any(self.events[i][0] > self.events[i + 1][0] for i in range(len(self.events) - 1)):
            raise ConfigurationError("events must be sorted by iteration")
        if self.backend == "oracle":
            nodes = self.ground_nodes + self.air_nodes + self.space_nodes
            if self.user_count > MAX_ORACLE_USERS or nodes > MAX_ORACLE_NODES:
                raise ConfigurationError(
                    "oracle backend limited to %d users / %d nodes"
                    % (MAX_ORACLE_USERS, MAX_ORACLE_NODES))


@dataclass
class MetricsRow:
    iteration: int
    mode: str
    normalized_cost_score: float
    supported_users: int
    mean_reward: float


class NoisyGreedyChooser:
    """Per-step decision stand-in for a remote model managing allocations.

    Instability is response-level: each slot the model is either reliable
    (greedy on the frame's immediate-value features) or erratic (uniform
    over feasible) for all of its decisions, so one bad generation corrupts
    the whole slot's allocations.
    """

    def __init__(self, kind: ActionKind):
        self.kind = kind
        self.erratic = False

    def select(self, frame, rng: np.random.Generator) -> int:
        feasible = frame.feasible_indices
        if not feasible:
            raise ValueError("chooser requires a nonempty feasible set")
        if self.erratic:
            return int(feasible[rng.integers(0, len(feasible))])
        if self.kind is ActionKind.ROUTING:
            return min(feasible, key=lambda i: (frame.vector[ROUTING_FEATURES * i + 1], i))
        return feasible[0]


class Simulation:
    """One scenario run; construct, then iterate run()."""

    def __init__(self, config: ScenarioConfig):
        config.validate()
        self.config = config
        self.mode = config.mode
        seed = config.seed

        self.topology = env.build_topology(config, seed)
        self._initial_topology = self.topology.copy()
        self.num_nodes = len(self.topology.nodes)
        svc_rng = np.random.default_rng([seed, 1])
        self.services: dict[int, ServiceSpec] = {}
        self.users: list[User] = []
        attach_pool = _attach_pool(self.topology, config.attach_layers)
        for uid in range(config.user_count):
            demand = float(svc_rng.uniform(config.demand_min, config.demand_max))
            rate = float(svc_rng.uniform(config.rate_min, config.rate_max))
            self.services[uid] = ServiceSpec(
                id=uid, blocks=(FunctionalBlock(id=0, compute_demand=demand),),
                qoe_requirement=config.qoe_requirement,
                qoe_threshold=config.qoe_threshold, rate_requirement=rate)
            attach = attach_pool[int(svc_rng.integers(0, len(attach_pool)))]
            self.users.append(User(id=uid, attach_node=attach, service=uid))

        # the no-agent mode is not bound to the RL-side candidate preselection,
        # so its frames carry a wider path window
        slots = config.path_slots if config.mode != "nr-arc" else max(config.path_slots,
                                                                      config.nr_path_slots)
        self.mdp = Mdp(self.num_nodes, self.services,
                       (config.demand_min, config.demand_max),
                       (config.rate_min, config.rate_max),
                       max_hops=config.max_hops, path_slots=slots,
                       slot_period=config.orbit_period)
        self.skb = build_skb(self.services)
        self.dkb = KnowledgeBase(KBKind.DKB)
        self.objective: Objective = make_objective("min_cost")
        self.history = StateHistory(states=(), objective=self.objective)
        self.allocations: dict[int, AllocationRecord] = {}

        self.epsilon_schedule = EpsilonSchedule(config.epsilon_start, config.epsilon_end,
                                                config.epsilon_decay_slots)
        self.agents: Optional[dict[ActionKind, Agent]] = None
        if self.mode != "nr-arc":
            self.agents = {}
            for i, kind in enumerate(ActionKind):
                net_rng = np.random.default_rng([seed, 2, i])
                acting = QNetwork(self.mdp.frame_dim(kind), self.mdp.action_count(kind),
                                  config.hidden, rng=net_rng)
                training = acting.clone()
                self.agents[kind] = Agent(kind=kind, acting_net=acting, training_net=training,
                                          buffer=crl.ReplayBuffer(config.buffer_capacity),
                                          epsilon=config.epsilon_start)
        self.choosers = {kind: NoisyGreedyChooser(kind) for kind in ActionKind}

        self.action_rng = np.random.default_rng([seed, 4])
        self.train_rng = np.random.default_rng([seed, 5])
        self.gdss_rng = np.random.default_rng([seed, 6])
        boot_rng = np.random.default_rng([seed, 8])
        if self.users:
            bootstrap_exemplars(self.dkb, self.topology, self.objective,
                                config.bootstrap_exemplars, boot_rng, self.mdp, self.users)

        self._events: dict[int, list] = {}
        for iteration, event in config.events:
            self._events.setdefault(int(iteration), []).append(event)
        self._swap_count = 0
        self._train_steps = 0
        self._min_cost_cache: dict = {}
        self._noted_remote_fallback = False

    # ----------------------------------------------------------------- loop

    def run(self) -> Iterator[MetricsRow]:
        for iteration in range(self.config.iterations):
            yield self.step(iteration)

    def step(self, iteration: int) -> MetricsRow:
        self.topology = env.advance(self.topology)
        qoe_met = self._reapply_and_evaluate()
        state = self.mdp.index_state(self.topology, self.users, qoe_met)
        self.history = push_state(self.dkb, self.history, state, self.config.window)

        for event in self._events.get(iteration, ()):
            if isinstance(event, StrategistCommand):
                updated = track_objective(event, self.objective, self.skb)
                if updated.kind != self.objective.kind:
                    self.objective = updated
                    self.history = StateHistory(states=self.history.states, objective=updated)

        requesting = [u for u in self.users if u.status is UserStatus.REQUESTING]
        reward_records = []
        if requesting:
            prompt = build_allocation_prompt(
                self.history, self.objective, requesting, self.skb, self.dkb,
                self.config.exemplar_k, self.mdp, m=self.config.exemplar_m,
                similarity_only=(self.mode == "ru-arc"))
            backend = self._make_backend(requesting)
            seq = sequence_users(prompt, self.history, backend)
            if self.agents is not None:
                for agent in self.agents.values():
                    agent.epsilon = self.epsilon_schedule.value(iteration)
            if self.mode == "nr-arc":
                erratic = self.action_rng.random() < self.config.nr_random_rate
                for chooser in self.choosers.values():
                    chooser.erratic = erratic
                actors = self.choosers
            else:
                actors = self.agents
            result = execute_sequence(seq, self.history, actors, self.topology, self.mdp,
                                      self.users, self.objective, qoe_met, self.action_rng)
            self.topology = result.topology
            self._admit_new_allocations(result, qoe_met)
            decisions = [rec.decision for rec in result.decisions]
            reward_records = self.mdp.compute_reward(state, result.state, decisions,
                                                     self.objective, qoe_met, self.topology)
            update = UpdatePrompt(slot=self.topology.slot, records=reward_records)
            self._learn(result, update)

        for event in self._events.get(iteration, ()):
            if isinstance(event, PerturbationEvent):
                self.topology = env.apply_perturbation(self.topology, event)
                self._swap_count += 1

        return self._metrics_row(iteration, reward_records)

    # ------------------------------------------------------- standing  QoE

    def _reapply_and_evaluate(self) -> dict[int, bool]:
        """Re-apply standing reservations on the fresh snapshot and gate by QoE.

        Link capacity shares are proportional when a link shrank below its
        total reservations; any delivered-rate shortfall drops the resolution
        tier, fails the threshold, and releases the allocation in this slot.
        """
        for user in self.users:
            if user.status is UserStatus.UNSUPPORTED:
                user.status = UserStatus.REQUESTING
        qoe: dict[int, bool] = {}
        if not self.allocations:
            return qoe
        lmap = self.topology.link_map()
        nmap = self.topology.node_map()
        totals: dict[tuple[int, int], float] = {}
        for uid in sorted(self.allocations):
            for pair in self.allocations[uid].path_pairs():
                totals[pair] = totals.get(pair, 0.0) + self.allocations[uid].capacity_amount
        user_map = {u.id: u for u in self.users}
        for uid in sorted(self.allocations):
            alloc = self.allocations[uid]
            ratio = 1.0
            for pair in alloc.path_pairs():
                link = lmap.get(pair)
                if link is None:
                    ratio = 0.0
                    break
                ratio = min(ratio, min(1.0, link.capacity / totals[pair]))
            alloc.delivered_rate = alloc.capacity_amount * ratio
            feedback = render_feedback(user_map[uid], alloc)
            met, _ = evaluate_qoe(feedback, self.services[user_map[uid].service])
            qoe[uid] = met
        for uid in sorted(self.allocations):
            alloc = self.allocations[uid]
            if qoe[uid]:
                for pair in alloc.path_pairs():
                    lmap[pair].capacity_available -= alloc.capacity_amount
            else:
                nmap[alloc.node].compute_available += alloc.compute_amount
                user_map[uid].status = UserStatus.REQUESTING
                del self.allocations[uid]
        return qoe

    def _admit_new_allocations(self, result: ExecutionResult, qoe_met: dict[int, bool]) -> None:
        """Evaluate fresh allocations; failures release resources in-slot."""
        user_map = {u.id: u for u in self.users}
        nmap = self.topology.node_map()
        lmap = self.topology.link_map()
        for uid in sorted(result.allocations):
            alloc = result.allocations[uid]
            feedback = render_feedback(user_map[uid], alloc)
            met, _ = evaluate_qoe(feedback, self.services[uid])
            qoe_met[uid] = met
            if met:
                self.allocations[uid] = alloc
            else:
                nmap[alloc.node].compute_available += alloc.compute_amount
                for pair in alloc.path_pairs():
                    lmap[pair].capacity_available += alloc.capacity_amount
                user_map[uid].status = UserStatus.REQUESTING
                del result.allocations[uid]

    # -------------------------------------------------------------- learning

    def _learn(self, result: ExecutionResult, update: UpdatePrompt) -> None:
        reward_by_step = _align_step_rewards(result, update)
        cot = [(rec.user, rec.decision, reward_by_step[i])
               for i, rec in enumerate(result.decisions)]
        if cot:
            augment_experience(self.dkb, self.history, self.objective, cot)
        if self.mode != "arc" or self.agents is None:
            return
        for i, rec in enumerate(result.decisions):
            agent = self.agents[rec.kind]
            transition = crl.Transition(
                masked_state=rec.frame_vector,
                action=rec.action_index,
                reward=reward_by_step[i],
                next_masked_state=np.zeros_like(rec.frame_vector),
                terminal=True,
            )
            crl.gdss_insert(agent.buffer, transition, agent.training_net,
                            self.gdss_rng, gamma=self.config.gamma)
        for _ in range(self.config.train_steps_per_slot):
            for kind in ActionKind:
                agent = self.agents[kind]
                crl.train_step(agent, self.config.batch_size, self.config.gamma,
                               self.config.lr, self.train_rng)
            self._train_steps += 1
            if self._train_steps % self.config.sync_every == 0:
                for agent in self.agents.values():
                    crl.sync(agent)

    # --------------------------------------------------------------- metrics

    def _make_backend(self, requesting):
        heuristic = HeuristicBackend(self.mdp, self.topology, self.users, self.objective)
        if self.config.backend == "heuristic":
            return heuristic
        if self.config.backend == "oracle":
            return OracleBackend(self.mdp, self.topology, self.users, self.objective)
        chat = lambda text: chat_complete(text, self.config.remote_deadline_ms)
        return RemoteBackend(heuristic, chat)

    def _reference_bounds(self) -> dict[int, float]:
        """Fixed per-user cost lower bounds for the whole run.

        Each user's bound is its cheapest contention-free allocated cost over
        one full mobility cycle of the initial (unperturbed) topology on a
        clean snapshot. Beyond the exhaustive-oracle size bounds this fixed
        denominator stands in for the per-slot oracle; scores are clamped at
        1 since later perturbations can in principle open cheaper options
        than the reference cycle offered.
        """
        cached = self._min_cost_cache.get("reference")
        if cached is not None:
            return cached
        bounds: dict[int, float] = {}
        probe = self._initial_topology.copy()
        for _ in range(self.config.orbit_period):
            view = self.mdp.view_from_topology(probe)
            view.node_avail = view.node_capacity.copy()
            view.pair_avail = view.pair_capacity.copy()
            for user in self.users:
                cost = self.mdp.min_single_cost(view, user)
                if cost is not None and (user.id not in bounds or cost < bounds[user.id]):
                    bounds[user.id] = cost
            probe = env.advance(probe)
        self._min_cost_cache["reference"] = bounds
        return bounds

    def _metrics_row(self, iteration: int, reward_records) -> MetricsRow:
        supported = sorted(self.allocations)
        if supported:
            bounds = self._reference_bounds()
            achieved = 0.0
            bound = 0.0
            nmap = self.topology.node_map()
            lmap = self.topology.link_map()
            for uid in supported:
                alloc = self.allocations[uid]
                node = nmap[alloc.node]
                achieved += node.compute_cost * alloc.compute_amount / node.compute_capacity
                achieved += sum(lmap[p].cost for p in alloc.path_pairs())
                bound += bounds.get(uid, 0.0)
            score = min(bound / achieved, 1.0) if achieved > 0 else 0.0
        else:
            score = 0.0
        mean_reward = (sum(r.total for r in reward_records) / len(reward_records)
                       if reward_records else 0.0)
        return MetricsRow(iteration=iteration, mode=self.mode,
                          normalized_cost_score=score,
                          supported_users=len(supported), mean_reward=mean_reward)


def _attach_pool(topology: Topology, layers: str) -> list[int]:
    if layers == "any":
        return [n.id for n in topology.nodes]
    if layers == "ground":
        pool = [n.id for n in topology.nodes if n.layer is env.Layer.GROUND]
    elif layers == "ntn":
        pool = [n.id for n in topology.nodes if n.layer is not env.Layer.GROUND]
    else:
        raise ConfigurationError("unknown attach_layers %r" % layers)
    if not pool:
        raise ConfigurationError("no nodes available for attach_layers=%r" % layers)
    return pool


def _user_by_id(users, uid: int) -> User:
    for u in users:
        if u.id == uid:
            return u
    raise KeyError(uid)


def _align_step_rewards(result: ExecutionResult, update: UpdatePrompt) -> list[float]:
    """Match per-action rewards back to execution step records, in order."""
    queues: dict[int, list[float]] = {}
    for record in update.records:
        queues.setdefault(record.user, []).extend(r for _, r in record.per_action)
    out = []
    for rec in result.decisions:
        queue = queues.get(rec.user)
        out.append(queue.pop(0) if queue else 0.0)
    return out


def run(config: ScenarioConfig) -> Iterator[MetricsRow]:
    """Stream one MetricsRow per iteration for the given scenario."""
    yield from Simulation(config).run()


def emit_csv(rows: Iterable[MetricsRow], path: str) -> None:
    """Write the metrics stream; 6 fractional digits, newline-terminated."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write("%d,%s,%.6f,%d,%.6f\n" % (
                row.iteration, row.mode, row.normalized_cost_score,
                row.supported_users, row.mean_reward))
            count += 1
    if count == 0:
        raise ValueError("emit_csv requires at least one row")


def parse_csv(path: str) -> list[MetricsRow]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError("unexpected CSV header: %r" % header)
        for line in fh:
            it, mode, score, supported, mean_reward = line.strip().split(",")
            rows.append(MetricsRow(int(it), mode, float(score), int(supported),
                                   float(mean_reward)))
    return rows


def moving_average(values, window: int) -> list[float]:
    """Centered moving average, edge-truncated, normalized by actual window."""
    if window < 1:
        raise ValueError("window must be >= 1")
    half = (window - 1) // 2
    out = []
    n = len(values)
    for i in range(n):
        lo = max(0, i - half)
        hi = min(n, i + (window - half))
        out.append(sum(values[lo:hi]) / (hi - lo))
    return out


# ------------------------------------------------------------ scenario files

_SECTION_KEYS = {
    "scenario": {
        "iterations": int, "seed": int, "mode": str, "backend": str, "window": int,
        "exemplar_k": int, "exemplar_m": int, "max_hops": int, "path_slots": int,
        "nr_random_rate": float, "nr_path_slots": int, "remote_deadline_ms": int,
    },
    "nodes": {
        "ground": int, "air": int, "space": int, "area_km": float,
        "air_altitude_km": float, "space_altitude_km": float, "orbit_period": int,
        "orbit_radius_min_km": float, "orbit_radius_max_km": float,
        "compute_min": float, "compute_max": float,
    },
    "services": {
        "demand_min": float, "demand_max": float, "rate_min": float, "rate_max": float,
        "qoe_threshold": float, "qoe_requirement": str,
    },
    "users": {"count": int, "attach_layers": str},
    "agents": {
        "hidden": int, "buffer_capacity": int, "batch_size": int, "gamma": float,
        "lr": float, "epsilon_start": float, "epsilon_end": float,
        "epsilon_decay_slots": int, "sync_every": int, "train_steps_per_slot": int,
        "bootstrap_exemplars": int,
    },
}

_KEY_ALIASES = {
    ("nodes", "ground"): "ground_nodes",
    ("nodes", "air"): "air_nodes",
    ("nodes", "space"): "space_nodes",
    ("users", "count"): "user_count",
}


def parse_scenario(path: str) -> ScenarioConfig:
    """Parse the sectioned key-value scenario format; unknown keys are errors."""
    config = ScenarioConfig(events=[])
    section = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip().lower()
                if section != "events" and section not in _SECTION_KEYS:
                    raise ConfigurationError("line %d: unknown section [%s]" % (lineno, section))
                continue
            if section is None:
                raise ConfigurationError("line %d: key outside any section" % lineno)
            if "=" not in line:
                raise ConfigurationError("line %d: expected key = value" % lineno)
            key, value = (part.strip() for part in line.split("=", 1))
            if section == "events":
                config.events.append(_parse_event(key, value, lineno))
                continue
            keys = _SECTION_KEYS[section]
            if key not in keys:
                raise ConfigurationError("line %d: unknown key %r in [%s]" % (lineno, key, section))
            attr = _KEY_ALIASES.get((section, key), key)
            caster = keys[key]
            try:
                setattr(config, attr, caster(value))
            except ValueError as exc:
                raise ConfigurationError("line %d: bad value for %s: %s" % (lineno, key, exc))
    config.events.sort(key=lambda t: t[0])
    config.validate()
    return config


# -------------------------------------------------------- theorem instances

def theorem_instance(seed: int):
    """A random small instance inside the enumeration bounds.

    Rates are kept below the minimum link capacity and compute capacities
    above the summed demands, so joint feasibility never hinges on knife-edge
    contention; the ordering claim is then checked against the exhaustive
    optimum on exactly the regime where its construction applies.
    """
    rng = np.random.default_rng([seed, 97])
    ground = int(rng.integers(4, 6))        # 4 or 5 ground nodes
    ntn = int(rng.integers(0, 2)) if ground == 4 else 0
    config = ScenarioConfig(
        seed=seed, ground_nodes=ground, air_nodes=ntn, space_nodes=0,
        area_km=400.0, orbit_period=24, orbit_radius_min_km=60.0,
        orbit_radius_max_km=120.0, compute_min=25.0, compute_max=100.0,
        user_count=int(rng.integers(1, 5)), demand_min=2.0, demand_max=5.0,
        rate_min=1.0, rate_max=2.4, max_hops=3, events=[])
    topology = env.build_topology(config, seed)
    svc_rng = np.random.default_rng([seed, 98])
    services = {}
    users = []
    ground_ids = [n.id for n in topology.nodes if n.layer is env.Layer.GROUND]
    for uid in range(config.user_count):
        demand = float(svc_rng.uniform(config.demand_min, config.demand_max))
        rate = float(svc_rng.uniform(config.rate_min, config.rate_max))
        services[uid] = ServiceSpec(id=uid, blocks=(FunctionalBlock(0, demand),),
                                    qoe_requirement=config.qoe_requirement,
                                    qoe_threshold=config.qoe_threshold,
                                    rate_requirement=rate)
        users.append(User(id=uid, attach_node=ground_ids[int(svc_rng.integers(0, len(ground_ids)))],
                          service=uid))
    mdp = Mdp(len(topology.nodes), services, (config.demand_min, config.demand_max),
              (config.rate_min, config.rate_max), max_hops=config.max_hops,
              path_slots=config.path_slots, slot_period=config.orbit_period)
    return mdp, topology, users, make_objective("min_cost")


def run_theorem_suite(instances: int, seed: int = 0):
    """Verify the optimal-sequence property on seeded random small instances."""
    from .oracle import verify_sequence_theorem
    results = []
    for i in range(instances):
        mdp, topology, users, obj = theorem_instance(seed + i)
        results.append(verify_sequence_theorem(mdp, topology, users, obj))
    return results


def _parse_event(key: str, value: str, lineno: int):
    try:
        iteration = int(key)
    except ValueError:
        raise ConfigurationError("line %d: event key must be an iteration number" % lineno)
    if value == "latency-swap":
        return (iteration, PerturbationEvent(iteration=iteration, kind="LatencySwap"))
    if value.startswith("command "):
        text = value[len("command "):].strip()
        return (iteration, StrategistCommand(text=text, slot=iteration))
    raise ConfigurationError("line %d: unknown event %r" % (lineno, value))
