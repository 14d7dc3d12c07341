"""Outer planner tier: order the slot's requesting users in one shot.

Three interchangeable backends produce the ordering. The oracle backend
reads it off the exhaustive optimum (decreasing allocated reward), the
heuristic backend ranks users by their best single-user greedy reward, and
the remote backend asks a chat model and repairs whatever comes back. Remote
failures always degrade to the heuristic ordering.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .environment import Topology, User
from .mdp import ActionProfile, ActionKind, Mdp, Objective
from . import oracle as oracle_mod
from .rag import AllocationPrompt

_ID_RE = re.compile(r"\d+")


@dataclass
class Sequence:
    ordered: list[tuple[int, tuple[ActionKind, ...]]]
    backend_used: str


def parse_sequence(response: str, expected_users: set[int],
                   fallback_order: Optional[Sequence[int]] = None) -> list[int]:
    """Repair a model response into a permutation of the expected user ids.

    Ids are taken in first-mention order; unknown ids and repeat mentions are
    dropped, and missing ids are appended in fallback order (ascending id
    when no fallback is given). Total by construction.
    """
    seen: list[int] = []
    for token in _ID_RE.findall(response or ""):
        uid = int(token)
        if uid in expected_users and uid not in seen:
            seen.append(uid)
    tail = [uid for uid in (fallback_order or sorted(expected_users)) if uid not in seen]
    return seen + tail


class HeuristicBackend:
    """Order users by their best single-user greedy reward, descending."""

    name = "heuristic"

    def __init__(self, mdp: Mdp, topology: Topology, users: Sequence[User],
                 objective: Objective):
        self.mdp = mdp
        self.topology = topology
        self.users = {u.id: u for u in users}
        self.objective = objective

    def order(self, user_ids: Sequence[int]) -> list[int]:
        scored = []
        for uid in user_ids:
            best = self.mdp.best_joint_reward(self.topology, self.users[uid], self.objective)
            scored.append((uid, best if best is not None else -1.0))
        return [uid for uid, _ in sorted(scored, key=lambda t: (-t[1], t[0]))]


class OracleBackend:
    """Order users by decreasing allocated reward in the exhaustive optimum."""

    name = "oracle"

    def __init__(self, mdp: Mdp, topology: Topology, users: Sequence[User],
                 objective: Objective):
        self.mdp = mdp
        self.topology = topology
        self.users = {u.id: u for u in users}
        self.objective = objective

    def order(self, user_ids: Sequence[int]) -> list[int]:
        instance = [self.users[uid] for uid in sorted(user_ids)]
        result = oracle_mod.optimal_allocation(self.mdp, self.topology, instance, self.objective)
        return list(result.ordering)


class RemoteBackend:
    """Ask the chat model for the ordering; fall back to the heuristic."""

    name = "remote"

    def __init__(self, heuristic: HeuristicBackend,
                 chat: Callable[[str], Optional[str]]):
        self.heuristic = heuristic
        self.chat = chat
        self.fell_back = False

    def order(self, user_ids: Sequence[int], prompt_text: str = "") -> list[int]:
        self.fell_back = False
        response = self.chat(prompt_text)
        fallback = self.heuristic.order(user_ids)
        if response is None:
            self.fell_back = True
            return fallback
        return parse_sequence(response, set(user_ids), fallback_order=fallback)


def sequence_users(prompt: AllocationPrompt, state, backend) -> Sequence:
    """Produce the slot's full user sequence with per-user action kinds."""
    if not prompt.user_ids:
        raise ValueError("cannot sequence an empty user set")
    if isinstance(backend, RemoteBackend):
        ordering = backend.order(prompt.user_ids, prompt.render())
        used = "heuristic" if backend.fell_back else "remote"
        mdp = backend.heuristic.mdp
        users = backend.heuristic.users
    else:
        ordering = backend.order(prompt.user_ids)
        used = backend.name
        mdp = backend.mdp
        users = backend.users
    ordered = []
    for uid in ordering:
        service = mdp.services[users[uid].service]
        ordered.append((uid, ActionProfile.for_service(service).kinds))
    return Sequence(ordered=ordered, backend_used=used)
