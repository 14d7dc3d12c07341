"""Coordination hub between monitoring, knowledge bases, and the planner.

Everything here is offline-first: the remote chat model is optional
transport, and every pass that could use it (step-back command expansion,
QoE similarity, sequencing) has a deterministic local substitute so the full
loop runs with no network at all.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

import requests

from .environment import ServiceSpec, User
from .knowledge import (KBKind, KnowledgeBase, ReasoningExemplar, StateHistory,
                        embed, select_contrastive, store_exemplar)
from .mdp import ActionDecision, Mdp, Objective, OBJECTIVE_PROFILES, RewardRecord, objective

ENDPOINT_VAR = "ARC_LLM_ENDPOINT"
API_KEY_VAR = "ARC_LLM_API_KEY"
MODEL_VAR = "ARC_LLM_MODEL"

FULL_PIXELS = 1920 * 1080

_RESOLUTION_RE = re.compile(r"(\d+)\s*[xX]\s*(\d+)")


@dataclass(frozen=True)
class StrategistCommand:
    text: str
    slot: int

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("strategist command must be nonempty")


def build_skb(services: dict[int, ServiceSpec]) -> KnowledgeBase:
    """Static knowledge base: objective profiles, service specs, action profiles."""
    skb = KnowledgeBase(KBKind.SKB)
    for kind in sorted(OBJECTIVE_PROFILES):
        text = OBJECTIVE_PROFILES[kind]
        skb.add(embed(text), {"kind": "objective", "objective": kind, "text": text})
    for sid in sorted(services):
        svc = services[sid]
        text = ("service %d with %d functional block(s), qoe requirement: %s, "
                "rate requirement %.2f Mbps" % (sid, len(svc.blocks), svc.qoe_requirement,
                                                svc.rate_requirement))
        skb.add(embed(text), {
            "kind": "service", "id": sid, "qoe_requirement": svc.qoe_requirement,
            "qoe_threshold": svc.qoe_threshold, "rate": svc.rate_requirement,
            "blocks": [[b.id, b.compute_demand] for b in svc.blocks],
        })
    profiles = {
        "placement": "choose the computing node hosting each functional block and "
                     "reserve its processing capacity",
        "routing": "choose the network path from the user's attach node to the hosting "
                   "node and reserve link capacity along it",
    }
    for action in sorted(profiles):
        skb.add(embed(profiles[action]),
                {"kind": "action_profile", "action": action, "text": profiles[action]})
    return skb.freeze()


def track_objective(command: Optional[StrategistCommand], current: Objective,
                    skb: KnowledgeBase, chat=None) -> Objective:
    """Activate the SKB objective most similar to a strategist command.

    Without a command the current objective stays active. When a chat
    backend is supplied the command is first expanded through a step-back
    question; otherwise the raw text is embedded directly.
    """
    if command is None:
        return current
    text = command.text
    if chat is not None:
        expanded = chat("Step back: restate the general resource-management goal behind "
                        "this command, in one sentence.\nCommand: %s" % text)
        if expanded:
            text = "%s %s" % (text, expanded)
    query = embed(text)
    best = None
    for rid in sorted(skb.records):
        rec = skb.records[rid]
        if rec.payload.get("kind") != "objective":
            continue
        score = float(query @ rec.vector)
        if best is None or score > best[0]:
            best = (score, rec.payload["objective"])
    if best is None:
        return current
    return objective(best[1])


def evaluate_qoe(feedback: Optional[str], spec: ServiceSpec, chat=None) -> tuple[bool, float]:
    """Score delivered quality against the service requirement.

    The offline evaluator parses a WxH resolution from the feedback and
    scores by delivered pixel fraction; a chat backend, when given, may
    replace the score with its reported similarity. Unparseable or missing
    feedback scores 0.
    """
    if chat is not None and feedback:
        reply = chat("Requirement: %s\nFeedback: %s\nReply with a similarity score "
                     "between 0 and 1." % (spec.qoe_requirement, feedback))
        if reply:
            match = re.search(r"([01](?:\.\d+)?)", reply)
            if match:
                score = min(max(float(match.group(1)), 0.0), 1.0)
                return score >= spec.qoe_threshold, score
    if not feedback:
        return False, 0.0
    match = _RESOLUTION_RE.search(feedback)
    if not match:
        return False, 0.0
    width, height = int(match.group(1)), int(match.group(2))
    score = min(1.0, (width * height) / FULL_PIXELS)
    return score >= spec.qoe_threshold, score


@dataclass
class AllocationPrompt:
    """Deterministically serialized request for one slot's allocations."""

    header: str
    history_digest: str
    users: list[str]
    user_ids: list[int]
    exemplars_high: list[str]
    exemplars_low: list[str]
    degenerate_exemplars: bool
    instructions: str = ("Respond with a single line containing the user ids, "
                         "comma-separated, in allocation order.")

    def render(self) -> str:
        sections = [
            "[OBJECTIVE AND ACTION PROFILES]", self.header,
            "[STATE HISTORY]", self.history_digest,
            "[REQUESTING USERS]", "\n".join(self.users),
            "[EXEMPLARS HIGH REWARD]", "\n".join(self.exemplars_high) or "(none)",
            "[EXEMPLARS LOW REWARD]", "\n".join(self.exemplars_low) or "(none)",
            "[OUTPUT FORMAT]", self.instructions,
        ]
        return "\n".join(sections) + "\n"


@dataclass
class UpdatePrompt:
    """Published per-slot reward report consumed by the learning side."""

    slot: int
    records: list[RewardRecord]

    def render(self) -> str:
        lines = ["[UPDATE slot=%d]" % self.slot]
        for rec in self.records:
            actions = "; ".join("%s r=%.6f" % (_decision_text(d), r) for d, r in rec.per_action)
            lines.append("user %d total=%.6f | %s" % (rec.user, rec.total, actions))
        return "\n".join(lines) + "\n"


def _decision_text(decision: ActionDecision) -> str:
    if decision.node is not None:
        return "place@n%d(%.2f MIPS)" % (decision.node, decision.compute_amount)
    return "route %s (%.2f Mbps)" % ("->".join(str(n) for n in decision.path),
                                     decision.capacity_amount)


def _exemplar_text(record) -> str:
    payload = record.payload
    steps = []
    for user, dec, reward in payload["cot"]:
        decision = ActionDecision.from_payload(user, dec)
        steps.append("u%d %s r=%.4f" % (user, _decision_text(decision), reward))
    return "reward %.4f :: %s" % (payload["output"], "; ".join(steps))


def _history_digest(history: StateHistory, mdp: Mdp, users: Sequence[User]) -> str:
    lines = []
    n_users = len(users)
    for state in history.states:
        base = 2 * mdp.n + 4 * len(mdp.pairs)
        flags = "".join(str(int(state.vector[base + i * (3 + mdp.n)])) for i in range(n_users))
        node_avail = state.vector[0:2 * mdp.n:2].mean()
        lines.append("slot %d: requests=%s mean-node-avail=%.3f" % (state.slot, flags, node_avail))
    return "\n".join(lines)


def build_allocation_prompt(history: StateHistory, objective_: Objective,
                            users: Sequence[User], skb: KnowledgeBase, dkb: KnowledgeBase,
                            k: int, mdp: Mdp, m: Optional[int] = None,
                            similarity_only: bool = False) -> AllocationPrompt:
    """Assemble the slot's allocation prompt, byte-deterministic given inputs.

    Exemplars come from contrastive selection over the m most similar DKB
    records (m defaults to 4k); with similarity_only the reward ranking is
    ignored and the most similar records fill both sections in retrieval
    order.
    """
    if not users:
        raise ValueError("allocation prompt requires at least one requesting user")
    m = m if m is not None else 4 * k
    ordered = sorted(users, key=lambda u: u.id)
    profile_lines = [
        "objective %s: %s" % (objective_.kind, objective_.profile_text),
    ]
    for rid in sorted(skb.records):
        payload = skb.records[rid].payload
        if payload.get("kind") == "action_profile":
            profile_lines.append("action %s: %s" % (payload["action"], payload["text"]))
    user_lines = []
    for u in ordered:
        svc = mdp.services[u.service]
        user_lines.append("user %d: service %d, demand %.2f MIPS, rate %.2f Mbps, attach n%d"
                          % (u.id, u.service, svc.blocks[0].compute_demand,
                             svc.rate_requirement, u.attach_node))
    query = embed(history)
    if similarity_only:
        ranked = dkb.query_topk(query, 2 * k, payload_kind="exemplar")
        records = [dkb.records[rid] for rid, _ in ranked]
        high = [_exemplar_text(r) for r in records[:k]]
        low = [_exemplar_text(r) for r in records[k:2 * k]]
        degenerate = len(records) < 2 * k
    else:
        selection = select_contrastive(dkb, query, m, k)
        high = [_exemplar_text(r) for r in selection.high]
        low = [_exemplar_text(r) for r in selection.low]
        degenerate = selection.degenerate
    return AllocationPrompt(
        header="\n".join(profile_lines),
        history_digest=_history_digest(history, mdp, ordered),
        users=user_lines,
        user_ids=[u.id for u in ordered],
        exemplars_high=high,
        exemplars_low=low,
        degenerate_exemplars=degenerate,
    )


def augment_experience(dkb: KnowledgeBase, history: StateHistory, objective_: Objective,
                       cot: Sequence[tuple[int, ActionDecision, float]]) -> int:
    """Store the slot's decision chain as a reasoning exemplar; returns its id."""
    if not cot:
        raise ValueError("cannot store an empty chain of thought")
    exemplar = ReasoningExemplar(
        input_vector=embed(history),
        objective_kind=objective_.kind,
        cot=tuple((uid, dec.payload(), float(r)) for uid, dec, r in cot),
        output=float(sum(r for _, _, r in cot)),
    )
    return store_exemplar(dkb, exemplar)


def chat_complete(prompt: str, deadline_ms: int, endpoint: Optional[str] = None,
                  api_key: Optional[str] = None, model: Optional[str] = None) -> Optional[str]:
    """POST to an OpenAI-compatible chat-completions endpoint.

    Returns the first choice's message content, or None (the failure marker)
    on any transport, deadline, or schema problem. Callers fall back to the
    offline backend when they see None.
    """
    endpoint = endpoint or os.environ.get(ENDPOINT_VAR)
    if not endpoint:
        return None
    api_key = api_key or os.environ.get(API_KEY_VAR, "")
    model = model or os.environ.get(MODEL_VAR, "default")
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = "Bearer %s" % api_key
    body = {
        "model": model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": 0,
    }
    try:
        resp = requests.post(endpoint, headers=headers, data=json.dumps(body),
                             timeout=deadline_ms / 1000.0)
        resp.raise_for_status()
        data = resp.json()
        content = data["choices"][0]["message"]["content"]
        if not isinstance(content, str):
            return None
        return content
    except Exception:
        return None
