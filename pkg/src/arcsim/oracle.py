"""Exhaustive ground truth for small instances.

The optimal allocation is found by depth-first enumeration of joint
(placement, routing) assignments per user, with an unsupported fallback
branch, under a lexicographic objective: supported-user count first, total
reward second. Branch-and-bound pruning uses per-user reward upper bounds,
which are exact for the objectives whose per-action rewards do not depend on
other users' allocations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .environment import Topology, User
from .errors import InstanceTooLargeError
from .knowledge import KnowledgeBase, ReasoningExemplar, StateHistory, embed, store_exemplar
from .mdp import ActionKind, JointCandidate, Mdp, Objective

MAX_ORACLE_USERS = 4
MAX_ORACLE_NODES = 6


@dataclass
class OptimalResult:
    assignment: dict[int, Optional[JointCandidate]]
    total_reward: float
    supported: int
    ordering: list[int]
    per_user_reward: dict[int, float]


@dataclass
class GreedyResult:
    assignment: dict[int, Optional[JointCandidate]]
    total_reward: float
    supported: int


def _apply(candidate: JointCandidate, node_avail: np.ndarray, pair_avail: np.ndarray,
           mdp: Mdp, sign: float) -> None:
    node_avail[candidate.placement.node] -= sign * candidate.placement.compute_amount
    for i in range(len(candidate.routing.path) - 1):
        pair = (candidate.routing.path[i], candidate.routing.path[i + 1])
        pair_avail[mdp.pair_pos[pair]] -= sign * candidate.routing.capacity_amount


def _fits(candidate: JointCandidate, node_avail: np.ndarray, pair_avail: np.ndarray,
          mdp: Mdp) -> bool:
    if node_avail[candidate.placement.node] + 1e-9 < candidate.placement.compute_amount:
        return False
    for i in range(len(candidate.routing.path) - 1):
        pair = (candidate.routing.path[i], candidate.routing.path[i + 1])
        if pair_avail[mdp.pair_pos[pair]] + 1e-9 < candidate.routing.capacity_amount:
            return False
    return True


def optimal_allocation(mdp: Mdp, topology: Topology, users: Sequence[User],
                       objective: Objective, max_hops: Optional[int] = None) -> OptimalResult:
    """Exhaustively optimal joint assignment for a small instance.

    Maximizes (supported users, total reward) lexicographically; among exact
    ties the first assignment in enumeration order (user id ascending, node
    ascending, path lexicographic, unsupported last) is kept.
    """
    if len(users) > MAX_ORACLE_USERS or len(topology.nodes) > MAX_ORACLE_NODES:
        raise InstanceTooLargeError(
            "instance %d users / %d nodes exceeds enumeration bounds (%d users, %d nodes)"
            % (len(users), len(topology.nodes), MAX_ORACLE_USERS, MAX_ORACLE_NODES))
    if max_hops is not None and max_hops != mdp.max_hops:
        mdp = Mdp(mdp.n, mdp.services, mdp.demand_range, mdp.rate_range,
                  max_hops=max_hops, path_slots=mdp.path_slots, slot_period=mdp.slot_period)

    ordered_users = sorted(users, key=lambda u: u.id)
    view = mdp.view_from_topology(topology)
    per_user = [mdp.joint_candidates(topology, u, objective, view=view) for u in ordered_users]
    reward_independent = objective.kind != "load_balance"
    upper = [max((c.reward for c in cands), default=0.0) for cands in per_user]
    suffix = np.zeros(len(ordered_users) + 1)
    for i in range(len(ordered_users) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + upper[i]

    node_avail = view.node_avail.copy()
    pair_avail = view.pair_avail.copy()
    chosen: list[Optional[JointCandidate]] = [None] * len(ordered_users)
    best = {"sup": -1, "total": -math.inf, "assign": None}

    def leaf_total(assign: list[Optional[JointCandidate]]) -> float:
        if reward_independent:
            return sum(c.reward for c in assign if c is not None)
        total = 0.0
        sim = topology.copy()
        nmap, lmap = sim.node_map(), sim.link_map()
        for cand in assign:
            if cand is None:
                continue
            nmap[cand.placement.node].compute_available -= cand.placement.compute_amount
            for i in range(len(cand.routing.path) - 1):
                lmap[(cand.routing.path[i], cand.routing.path[i + 1])].capacity_available -= \
                    cand.routing.capacity_amount
        for cand in assign:
            if cand is None:
                continue
            total += mdp._action_reward(cand.placement, objective, sim)
            total += mdp._action_reward(cand.routing, objective, sim)
        return total

    def walk(depth: int, sup: int, total: float) -> None:
        remaining = len(ordered_users) - depth
        if best["assign"] is not None:
            potential_sup = sup + remaining
            if potential_sup < best["sup"]:
                return
            if reward_independent and potential_sup == best["sup"] \
                    and total + suffix[depth] < best["total"] - 1e-12:
                return
        if depth == len(ordered_users):
            leaf = total if reward_independent else leaf_total(chosen)
            if sup > best["sup"] or (sup == best["sup"] and leaf > best["total"] + 1e-12):
                best["sup"] = sup
                best["total"] = leaf
                best["assign"] = list(chosen)
            return
        for cand in per_user[depth]:
            if not _fits(cand, node_avail, pair_avail, mdp):
                continue
            _apply(cand, node_avail, pair_avail, mdp, 1.0)
            chosen[depth] = cand
            walk(depth + 1, sup + 1, total + cand.reward)
            chosen[depth] = None
            _apply(cand, node_avail, pair_avail, mdp, -1.0)
        walk(depth + 1, sup, total)

    walk(0, 0, 0.0)

    assign_list = best["assign"] or [None] * len(ordered_users)
    assignment = {u.id: cand for u, cand in zip(ordered_users, assign_list)}
    rewards = {u.id: (cand.reward if cand else 0.0) for u, cand in zip(ordered_users, assign_list)}
    ordering = sorted(assignment, key=lambda uid: (-rewards[uid], uid))
    total = best["total"] if best["assign"] is not None else 0.0
    return OptimalResult(assignment=assignment, total_reward=total,
                         supported=max(best["sup"], 0), ordering=ordering,
                         per_user_reward=rewards)


def greedy_execution(mdp: Mdp, topology: Topology, users: Sequence[User],
                     objective: Objective, order: Sequence[int],
                     rng: Optional[np.random.Generator] = None) -> GreedyResult:
    """Serially give each user in order its current best (or random) option."""
    sim = topology.copy()
    user_map = {u.id: u for u in users}
    assignment: dict[int, Optional[JointCandidate]] = {}
    total = 0.0
    supported = 0
    for uid in order:
        user = user_map[uid]
        candidates = mdp.joint_candidates(sim, user, objective)
        if not candidates:
            assignment[uid] = None
            continue
        if rng is None:
            pick = min(candidates, key=lambda c: (-c.reward, c.placement.node, c.routing.path))
        else:
            pick = candidates[int(rng.integers(0, len(candidates)))]
        assignment[uid] = pick
        total += pick.reward
        supported += 1
        nmap, lmap = sim.node_map(), sim.link_map()
        nmap[pick.placement.node].compute_available -= pick.placement.compute_amount
        for i in range(len(pick.routing.path) - 1):
            lmap[(pick.routing.path[i], pick.routing.path[i + 1])].capacity_available -= \
                pick.routing.capacity_amount
    return GreedyResult(assignment=assignment, total_reward=total, supported=supported)


@dataclass
class TheoremCheck:
    ordering: list[int]
    holds: bool
    optimal_total: float
    greedy_total: float


def verify_sequence_theorem(mdp: Mdp, topology: Topology, users: Sequence[User],
                            objective: Objective) -> TheoremCheck:
    """Check that greedy execution along the optimal decreasing-reward ordering
    reproduces the exhaustive optimum exactly."""
    optimal = optimal_allocation(mdp, topology, users, objective)
    greedy = greedy_execution(mdp, topology, users, objective, optimal.ordering)
    holds = (greedy.supported == optimal.supported
             and abs(greedy.total_reward - optimal.total_reward) <= 1e-9)
    return TheoremCheck(ordering=optimal.ordering, holds=holds,
                        optimal_total=optimal.total_reward, greedy_total=greedy.total_reward)


def _cot_from_assignment(order: Sequence[int],
                         assignment: dict[int, Optional[JointCandidate]]) -> tuple:
    cot = []
    for uid in order:
        cand = assignment.get(uid)
        if cand is None:
            continue
        cot.append((uid, cand.placement.payload(), cand.placement_reward))
        cot.append((uid, cand.routing.payload(), cand.routing_reward))
    return tuple(cot)


def bootstrap_exemplars(dkb: KnowledgeBase, topology: Topology, objective: Objective,
                        n: int, rng: np.random.Generator, mdp: Mdp,
                        users: Sequence[User]) -> int:
    """Seed the DKB with optimal-derived, greedy, and random reasoning exemplars.

    ceil(n/3) exemplars come from the exhaustive optimum (or, beyond the
    enumeration bounds, from best-single-reward-first greedy as the closest
    tractable stand-in), ceil(n/3) from randomly ordered greedy execution,
    and the remainder from random feasible choices.
    """
    if n < 3:
        raise ValueError("need n >= 3 exemplars, got %d" % n)
    state = mdp.index_state(topology, users, {})
    history = StateHistory(states=(state,), objective=objective)
    input_vec = embed(history)

    n_opt = math.ceil(n / 3)
    n_greedy = math.ceil(n / 3)
    n_random = n - n_opt - n_greedy
    within_bounds = len(users) <= MAX_ORACLE_USERS and len(topology.nodes) <= MAX_ORACLE_NODES

    def heuristic_order() -> list[int]:
        scored = [(u.id, mdp.best_joint_reward(topology, u, objective)) for u in users]
        return [uid for uid, r in sorted(scored, key=lambda t: (-(t[1] or 0.0), t[0]))]

    stored = 0
    for _ in range(n_opt):
        if within_bounds:
            opt = optimal_allocation(mdp, topology, users, objective)
            order, assignment = opt.ordering, opt.assignment
        else:
            order = heuristic_order()
            assignment = greedy_execution(mdp, topology, users, objective, order).assignment
        cot = _cot_from_assignment(order, assignment)
        stored += _store(dkb, input_vec, objective, cot)
    for _ in range(n_greedy):
        order = list(sorted(u.id for u in users))
        rng.shuffle(order)
        result = greedy_execution(mdp, topology, users, objective, order)
        stored += _store(dkb, input_vec, objective, _cot_from_assignment(order, result.assignment))
    for _ in range(n_random):
        order = list(sorted(u.id for u in users))
        rng.shuffle(order)
        result = greedy_execution(mdp, topology, users, objective, order, rng=rng)
        stored += _store(dkb, input_vec, objective, _cot_from_assignment(order, result.assignment))
    return stored


def _store(dkb: KnowledgeBase, input_vec, objective: Objective, cot: tuple) -> int:
    exemplar = ReasoningExemplar(
        input_vector=input_vec,
        objective_kind=objective.kind,
        cot=cot,
        output=sum(r for _, _, r in cot),
    )
    store_exemplar(dkb, exemplar)
    return 1
