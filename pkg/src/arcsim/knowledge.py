"""Vector-backed knowledge bases and the deterministic embedding they share.

Embeddings are signed feature hashes over canonical token streams: every
token is CRC-hashed into one of D buckets with a +/-1 sign and the bucket
counts are L2-normalized. The scheme is deterministic across processes,
additive over token multisets, and has the usual property that texts sharing
tokens land closer in cosine than texts sharing none.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Optional

import numpy as np

from .errors import OrderingError

EMBED_DIM = 256

_PUNCT = str.maketrans({c: " " for c in r"""!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~"""})


def tokenize(text: str) -> list[str]:
    return text.lower().translate(_PUNCT).split()


def raw_hash_vector(tokens: Iterable[str], dim: int = EMBED_DIM) -> np.ndarray:
    """Unnormalized signed bucket counts; additive over token streams."""
    vec = np.zeros(dim)
    for tok in tokens:
        h = zlib.crc32(tok.encode("utf-8"))
        sign = 1.0 if (h >> 16) & 1 else -1.0
        vec[h % dim] += sign
    return vec


def _normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm < 1e-12:
        out = np.zeros(len(vec))
        out[0] = 1.0  # reserved basis vector for empty/degenerate input
        return out
    return vec / norm


def embed(item) -> np.ndarray:
    """Deterministic L2-normalized embedding of text, a state, or a history.

    States and histories must expose ``raw_embed_vector()`` returning their
    unnormalized hash-count vector; histories sum their members' vectors,
    which equals hashing the concatenated token streams.
    """
    if isinstance(item, str):
        return _normalize(raw_hash_vector(tokenize(item)))
    if hasattr(item, "raw_embed_vector"):
        return _normalize(item.raw_embed_vector())
    raise TypeError("cannot embed %r" % type(item).__name__)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


class KBKind(Enum):
    SKB = "skb"
    DKB = "dkb"


@dataclass
class KnowledgeRecord:
    id: int
    vector: np.ndarray
    payload: dict


class KnowledgeBase:
    """Append-only vector store with brute-force cosine retrieval.

    SKBs are frozen after initialization; DKBs accept appends throughout.
    Vectors live in one preallocated growing matrix so per-slot retrieval
    stays a single matrix-vector product.
    """

    def __init__(self, kind: KBKind):
        self.kind = kind
        self.records: dict[int, KnowledgeRecord] = {}
        self._next_id = 0
        self._frozen = False
        self._buf = np.zeros((64, EMBED_DIM))
        self._norms = np.zeros(64)
        self._kind_ids: dict[str, list[int]] = {}

    def __len__(self) -> int:
        return len(self.records)

    def freeze(self) -> "KnowledgeBase":
        self._frozen = True
        return self

    def add(self, vector: np.ndarray, payload: dict) -> int:
        if self._frozen:
            raise PermissionError("knowledge base is frozen (%s)" % self.kind.value)
        rid = self._next_id
        self._next_id += 1
        vec = np.asarray(vector, dtype=float)
        if rid >= self._buf.shape[0]:
            grown = np.zeros((2 * self._buf.shape[0], self._buf.shape[1]))
            grown[:rid] = self._buf
            self._buf = grown
            norms = np.zeros(2 * self._norms.shape[0])
            norms[:rid] = self._norms
            self._norms = norms
        self._buf[rid] = vec
        norm = float(np.linalg.norm(vec))
        self._norms[rid] = norm if norm > 0 else 1.0
        self.records[rid] = KnowledgeRecord(rid, vec, dict(payload))
        self._kind_ids.setdefault(payload.get("kind", ""), []).append(rid)
        return rid

    def query_topk(self, query: np.ndarray, k: int,
                   payload_kind: Optional[str] = None) -> list[tuple[int, float]]:
        if k < 1:
            raise ValueError("k must be >= 1")
        if payload_kind is None:
            ids = np.arange(self._next_id)
        else:
            ids = np.asarray(self._kind_ids.get(payload_kind, ()), dtype=int)
        if ids.size == 0:
            return []
        q = np.asarray(query, dtype=float)
        qn = float(np.linalg.norm(q))
        if qn > 0:
            q = q / qn
        scores = (self._buf[ids] @ q) / self._norms[ids]
        take = min(k, ids.size)
        # argsort on (-score, id); ids are ascending so a stable sort suffices
        order = np.argsort(-scores, kind="stable")[:take]
        return [(int(ids[i]), float(scores[i])) for i in order]


def query_topk(kb: KnowledgeBase, query: np.ndarray, k: int) -> list[tuple[int, float]]:
    """k highest-cosine records, descending score, ties broken by ascending id."""
    return kb.query_topk(query, k)


@dataclass(frozen=True)
class StateHistory:
    """Slot-ordered window of states under one active objective."""

    states: tuple
    objective: Any

    def __len__(self) -> int:
        return len(self.states)

    def last(self):
        return self.states[-1]

    def raw_embed_vector(self) -> np.ndarray:
        vec = np.zeros(EMBED_DIM)
        for s in self.states:
            vec = vec + s.raw_embed_vector()
        if self.objective is not None:
            vec = vec + raw_hash_vector(tokenize(self.objective.profile_text))
        return vec


def push_state(dkb: Optional[KnowledgeBase], history: StateHistory, state, window: int) -> StateHistory:
    """Append a state to the history window, evicting the oldest beyond W.

    The state's embedding is also recorded in the DKB (when one is given) so
    the base keeps the raw state trail alongside reasoning exemplars.
    """
    if history.states and state.slot <= history.states[-1].slot:
        raise OrderingError(
            "state slot %d not after history tail %d" % (state.slot, history.states[-1].slot)
        )
    if window < 1:
        raise ValueError("window must be >= 1")
    if dkb is not None:
        dkb.add(embed(state), {"kind": "state", "slot": state.slot})
    states = (history.states + (state,))[-window:]
    return StateHistory(states=states, objective=history.objective)


@dataclass(frozen=True)
class ReasoningExemplar:
    """Retrieval record: (history+objective embedding, decision chain, total reward)."""

    input_vector: np.ndarray
    objective_kind: str
    cot: tuple  # ordered (user id, decision payload, reward) triples
    output: float

    def __post_init__(self):
        total = sum(r for _, _, r in self.cot)
        if abs(total - self.output) > 1e-9:
            raise ValueError("exemplar output %r != sum of cot rewards %r" % (self.output, total))

    def payload(self) -> dict:
        return {
            "kind": "exemplar",
            "objective": self.objective_kind,
            "cot": [[u, d, r] for u, d, r in self.cot],
            "output": self.output,
        }


def store_exemplar(dkb: KnowledgeBase, exemplar: ReasoningExemplar) -> int:
    return dkb.add(exemplar.input_vector, exemplar.payload())


@dataclass
class ContrastiveSelection:
    high: list[KnowledgeRecord]
    low: list[KnowledgeRecord]
    degenerate: bool = False


def select_contrastive(dkb: KnowledgeBase, query: np.ndarray, m: int, k: int) -> ContrastiveSelection:
    """Among the m most similar exemplars, the k highest- and k lowest-reward ones.

    With fewer than 2k candidates the available exemplars are split around
    the reward median and the result is flagged degenerate.
    """
    if m < 2 * k:
        raise ValueError("need m >= 2k, got m=%d k=%d" % (m, k))
    ranked = dkb.query_topk(query, m, payload_kind="exemplar")
    candidates = [dkb.records[rid] for rid, _ in ranked]
    if not candidates:
        return ContrastiveSelection(high=[], low=[], degenerate=True)
    ordered = sorted(candidates, key=lambda r: (r.payload["output"], r.id))
    if len(ordered) < 2 * k:
        split = len(ordered) // 2
        low = ordered[:split]
        high = list(reversed(ordered[split:]))
        return ContrastiveSelection(high=high, low=low, degenerate=True)
    low = ordered[:k]
    high = list(reversed(ordered[-k:]))
    return ContrastiveSelection(high=high, low=low, degenerate=False)


def save_kb(kb: KnowledgeBase, path: str) -> None:
    """One record per line: id TAB base-10 vector values TAB canonical payload JSON."""
    with open(path, "w", encoding="utf-8") as fh:
        for rid in sorted(kb.records):
            rec = kb.records[rid]
            values = " ".join(repr(float(v)) for v in rec.vector)
            payload = json.dumps(rec.payload, sort_keys=True, separators=(",", ":"))
            fh.write("%d\t%s\t%s\n" % (rid, values, payload))


def load_kb(path: str, kind: KBKind) -> KnowledgeBase:
    kb = KnowledgeBase(kind)
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            rid_s, values_s, payload_s = line.split("\t")
            vector = np.array([float(v) for v in values_s.split()])
            rid = kb.add(vector, json.loads(payload_s))
            assert rid == int(rid_s), "non-contiguous record ids in %s" % path
    if kind is KBKind.SKB:
        kb.freeze()
    return kb
