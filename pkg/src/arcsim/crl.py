"""Continual-learning machinery: gradient-diversity replay and double-Q training.

Replay admission follows gradient-based sample selection: each transition
carries a fixed-dimension sketch of its single-sample loss gradient, and a
full buffer only admits a newcomer whose worst-case cosine against a sampled
comparison set is lower than the most redundant stored sample's. Training
uses the double construction: the acting network picks the bootstrap action,
the training network evaluates it.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .executor import Agent, QNetwork

SKETCH_DIM = 128
COMPARISON_SAMPLE = 32

_sketch_maps: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _sketch_map(size: int) -> tuple[np.ndarray, np.ndarray]:
    """Fixed (bucket, sign) assignment for each flattened gradient index."""
    cached = _sketch_maps.get(size)
    if cached is None:
        rng = np.random.default_rng(zlib.crc32(b"gdss-sketch") + size)
        buckets = rng.integers(0, SKETCH_DIM, size=size)
        signs = rng.choice([-1.0, 1.0], size=size)
        cached = (buckets, signs)
        _sketch_maps[size] = cached
    return cached


def sketch_gradient(grads: dict[str, np.ndarray]) -> np.ndarray:
    flat = np.concatenate([grads[name].reshape(-1) for name in sorted(grads)])
    buckets, signs = _sketch_map(flat.size)
    sketch = np.zeros(SKETCH_DIM)
    np.add.at(sketch, buckets, flat * signs)
    norm = float(np.linalg.norm(sketch))
    if norm < 1e-12:
        sketch[0] = 1.0
        norm = 1.0
    return sketch / norm


@dataclass
class Transition:
    masked_state: np.ndarray
    action: int
    reward: float
    next_masked_state: np.ndarray
    terminal: bool
    grad_feature: Optional[np.ndarray] = None


@dataclass
class ReplayBuffer:
    capacity: int
    items: list[Transition] = field(default_factory=list)
    admitted: int = 0
    rejected: int = 0

    def __len__(self) -> int:
        return len(self.items)

    def feature_matrix(self) -> np.ndarray:
        return np.stack([t.grad_feature for t in self.items])


def transition_target(t: Transition, acting: QNetwork, training: QNetwork,
                      gamma: float) -> float:
    if t.terminal:
        return t.reward
    best = int(np.argmax(acting.forward(t.next_masked_state)))
    return t.reward + gamma * float(training.forward(t.next_masked_state)[best])


def compute_grad_feature(t: Transition, net: QNetwork, gamma: float) -> np.ndarray:
    """Sketch of the single-sample loss gradient at the given network."""
    target = transition_target(t, net, net, gamma)
    _, grads = net.loss_and_grads(
        np.asarray([t.masked_state], dtype=float),
        np.asarray([t.action]),
        np.asarray([target], dtype=float),
    )
    return sketch_gradient(grads)


def gdss_insert(buffer: ReplayBuffer, t: Transition, net: QNetwork,
                rng: np.random.Generator, gamma: float = 0.9) -> bool:
    """Admit a transition, replacing the most redundant stored sample if full.

    The newcomer's score is its maximum cosine against a random comparison
    sample of stored gradient sketches; it is admitted only if that score is
    strictly below the in-sample score of the most redundant sampled item.
    """
    if t.grad_feature is None:
        t.grad_feature = compute_grad_feature(t, net, gamma)
    if len(buffer.items) < buffer.capacity:
        buffer.items.append(t)
        buffer.admitted += 1
        return True

    count = min(COMPARISON_SAMPLE, len(buffer.items))
    sample_idx = rng.choice(len(buffer.items), size=count, replace=False)
    feats = np.stack([buffer.items[i].grad_feature for i in sample_idx])
    score_new = float(np.max(feats @ t.grad_feature))
    if count == 1:
        score_worst, worst_pos = 1.0, 0
    else:
        sims = feats @ feats.T
        np.fill_diagonal(sims, -np.inf)
        in_sample = sims.max(axis=1)
        worst_pos = int(np.argmax(in_sample))
        score_worst = float(in_sample[worst_pos])
    if score_new < score_worst:
        buffer.items[int(sample_idx[worst_pos])] = t
        buffer.admitted += 1
        return True
    buffer.rejected += 1
    return False


def fifo_insert(buffer: ReplayBuffer, t: Transition, net: QNetwork,
                rng: np.random.Generator, gamma: float = 0.9) -> bool:
    """Baseline replacement policy used for the diversity comparison."""
    if t.grad_feature is None:
        t.grad_feature = compute_grad_feature(t, net, gamma)
    if len(buffer.items) >= buffer.capacity:
        buffer.items.pop(0)
    buffer.items.append(t)
    buffer.admitted += 1
    return True


def train_step(agent: Agent, batch_size: int, gamma: float, lr: float,
               rng: np.random.Generator) -> Optional[float]:
    """One uniform-batch double-Q descent step on the training network.

    Returns the batch loss, or None as the no-op marker when the buffer is
    empty.
    """
    buffer: ReplayBuffer = agent.buffer
    if len(buffer.items) == 0:
        return None
    idx = rng.integers(0, len(buffer.items), size=batch_size)
    batch = [buffer.items[i] for i in idx]
    states = np.stack([t.masked_state for t in batch])
    actions = np.array([t.action for t in batch])
    targets = np.empty(batch_size)

    nonterminal = [i for i, t in enumerate(batch) if not t.terminal]
    for i, t in enumerate(batch):
        targets[i] = t.reward
    if nonterminal:
        nxt = np.stack([batch[i].next_masked_state for i in nonterminal])
        q_act = agent.acting_net.forward(nxt)
        q_train = agent.training_net.forward(nxt)
        best = np.argmax(q_act, axis=1)
        boot = q_train[np.arange(len(nonterminal)), best]
        for j, i in enumerate(nonterminal):
            targets[i] += gamma * float(boot[j])

    loss, grads = agent.training_net.loss_and_grads(states, actions, targets)
    agent.training_net.apply_grads(grads, lr)
    return loss


def sync(agent: Agent) -> None:
    """Copy training-network parameters into the acting network, exactly."""
    agent.acting_net.copy_from(agent.training_net)
