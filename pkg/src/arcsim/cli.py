"""Command-line entry points: run, verify-theorem, bootstrap."""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import environment as env
from .harness import (MODES, BACKENDS, ScenarioConfig, Simulation, emit_csv,
                      parse_scenario, run_theorem_suite)
from .knowledge import save_kb
from .oracle import bootstrap_exemplars


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arc",
                                     description="SAGIN resource-orchestration simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write the metrics CSV")
    p_run.add_argument("--config", required=True, help="scenario file path")
    p_run.add_argument("--out", required=True, help="output CSV path")
    p_run.add_argument("--mode", choices=MODES, help="override scenario mode")
    p_run.add_argument("--backend", choices=BACKENDS, help="override sequencer backend")
    p_run.add_argument("--seed", type=int, help="override scenario seed")
    p_run.add_argument("--iterations", type=int, help="override iteration count")
    p_run.add_argument("--quiet", action="store_true", help="suppress progress output")

    p_thm = sub.add_parser("verify-theorem",
                           help="check the optimal-sequence property on random instances")
    p_thm.add_argument("--instances", type=int, default=50)
    p_thm.add_argument("--seed", type=int, default=0)

    p_boot = sub.add_parser("bootstrap", help="seed a DKB with reasoning exemplars")
    p_boot.add_argument("--config", required=True)
    p_boot.add_argument("--n", type=int, required=True)
    p_boot.add_argument("--out", default="dkb_bootstrap.txt", help="DKB dump path")
    return parser


def _cmd_run(args) -> int:
    config = parse_scenario(args.config)
    if args.mode:
        config.mode = args.mode
    if args.backend:
        config.backend = args.backend
    if args.seed is not None:
        config.seed = args.seed
    if args.iterations is not None:
        config.iterations = args.iterations
    config.validate()
    sim = Simulation(config)
    started = time.time()
    rows = []
    for row in sim.run():
        rows.append(row)
        if not args.quiet and (row.iteration + 1) % 500 == 0:
            print("iteration %d/%d score=%.3f supported=%d (%.1fs)"
                  % (row.iteration + 1, config.iterations, row.normalized_cost_score,
                     row.supported_users, time.time() - started), file=sys.stderr)
    emit_csv(rows, args.out)
    if not args.quiet:
        print("wrote %d rows to %s" % (len(rows), args.out), file=sys.stderr)
    return 0


def _cmd_verify_theorem(args) -> int:
    results = run_theorem_suite(args.instances, seed=args.seed)
    failures = 0
    for i, check in enumerate(results):
        status = "ok" if check.holds else "FAIL"
        print("instance %02d: %s optimal=%.9f greedy=%.9f ordering=%s"
              % (i, status, check.optimal_total, check.greedy_total, check.ordering))
        failures += 0 if check.holds else 1
    print("%d/%d instances hold" % (len(results) - failures, len(results)))
    return 1 if failures else 0


def _cmd_bootstrap(args) -> int:
    config = parse_scenario(args.config)
    sim = Simulation(config)
    rng = np.random.default_rng([config.seed, 99])
    stored = bootstrap_exemplars(sim.dkb, sim.topology, sim.objective, args.n, rng,
                                 sim.mdp, sim.users)
    save_kb(sim.dkb, args.out)
    print("stored %d exemplars; DKB (%d records) written to %s"
          % (stored, len(sim.dkb), args.out))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "verify-theorem":
        return _cmd_verify_theorem(args)
    return _cmd_bootstrap(args)


if __name__ == "__main__":
    sys.exit(main())
