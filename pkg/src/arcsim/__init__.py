"""arcsim: a desk-scale SAGIN resource-orchestration simulator.

A retrieval-augmented pipeline feeds a two-tier planner (user sequencer plus
per-action continual-RL agents), closed through QoE-gated rewards,
contrastive exemplar selection, and gradient-diversity replay management.
"""

__version__ = "0.1.0"

from .environment import (AllocationRecord, Layer, Link, MobilitySpec, Node,
                          PerturbationEvent, ServiceSpec, Topology, User, UserStatus,
                          advance, apply_perturbation, build_topology, enumerate_paths,
                          render_feedback)
from .mdp import ActionDecision, ActionKind, Mdp, Objective, RewardRecord, State, objective
from .knowledge import (KBKind, KnowledgeBase, ReasoningExemplar, StateHistory, embed,
                        push_state, query_topk, select_contrastive)
from .harness import MetricsRow, ScenarioConfig, Simulation, emit_csv, parse_scenario, run
