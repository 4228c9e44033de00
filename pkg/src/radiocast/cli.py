"""Command-line front end.

Commands:
  simulate   run one protocol config for a number of trials
  sweep      run the same config across a list of phi values
  oracle     run a verification oracle (lemma1 | thm4 | fact1 | alpha)
  graph      generate a topology and write it as an edge list

Exit codes: 0 success, 2 invalid arguments, 3 graph generation or load
failure, 4 refusing to overwrite an existing output file (use --force),
5 an oracle check failed.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from fractions import Fraction

from . import harness, oracle, topology
from .errors import (
    BudgetExceededError,
    GenerationFailureError,
    GraphFormatError,
    InvalidParameterError,
)
from .harness import ExperimentConfig
from .protocols import make_protocol

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_GENERATION = 3
EXIT_CLOBBER = 4
EXIT_ORACLE_FAIL = 5


class _WouldClobber(Exception):
    pass


def _ensure_writable(path: str | None, force: bool) -> None:
    if path is not None and os.path.exists(path) and not force:
        raise _WouldClobber(path)


def _print_config(cfg: ExperimentConfig, g, protocol) -> None:
    print(f"graph={cfg.graph} n={g.n} m={g.num_edges} D={topology.diameter(g)} origin={cfg.origin}")
    print(protocol.describe())
    print(
        f"trials={cfg.trials} base_seed={cfg.base_seed} "
        f"max_rounds={cfg.max_rounds or harness.default_max_rounds(g, protocol)}"
    )


def cmd_simulate(args) -> int:
    _ensure_writable(args.out, args.force)
    cfg = ExperimentConfig(
        graph=args.graph,
        protocol=args.protocol,
        n=args.n,
        trials=args.trials,
        base_seed=args.seed,
        phi=args.phi,
        eps=args.eps,
        origin=args.origin,
        graph_seed=args.graph_seed,
        max_rounds=args.max_rounds,
    )
    g = harness.build_graph_from_spec(cfg.graph, cfg.graph_seed)
    protocol = make_protocol(cfg.protocol, cfg.n, cfg.phi, cfg.eps)
    _print_config(cfg, g, protocol)
    if args.trace is not None:
        _ensure_writable(args.trace, args.force)
        from .engine import run_trial

        max_rounds = cfg.max_rounds or harness.default_max_rounds(g, protocol)
        with open(args.trace, "w") as fh:
            for t in range(cfg.trials):
                seed = harness.derive_seed(cfg.base_seed, t)
                fh.write(f"# trial={t} seed={seed}\n")
                run_trial(
                    g, protocol, origin=cfg.origin, seed=seed,
                    max_rounds=max_rounds, trace=lambda line: fh.write(line + "\n"),
                )
    records = harness.run_experiment(cfg, workers=args.workers, graph=g)
    agg = harness.aggregate_records(records)
    print(
        f"success_rate={agg['success_rate']:.4g} "
        f"median_time={agg['median_time']} p95_time={agg['p95_time']} "
        f"max_energy={agg['max_energy']}"
    )
    if args.out:
        harness.write_csv(records, args.out)
        print(f"wrote {len(records)} records to {args.out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    phi_values = _parse_float_list(args.phi_list)
    _ensure_writable(args.out, args.force)
    _ensure_writable(args.json, args.force)
    cfg = ExperimentConfig(
        graph=args.graph,
        protocol=args.protocol,
        n=args.n,
        trials=args.trials,
        base_seed=args.seed,
        phi=None,
        eps=args.eps,
        origin=args.origin,
        graph_seed=args.graph_seed,
        max_rounds=args.max_rounds,
    )
    g = harness.build_graph_from_spec(cfg.graph, cfg.graph_seed)
    for phi in phi_values:
        protocol = make_protocol(cfg.protocol, cfg.n, phi, cfg.eps)
        print(protocol.describe())
    rows = harness.sweep_phi(cfg, phi_values, workers=args.workers)
    for row in rows:
        print(
            f"phi={row['phi']:g} success_rate={row['success_rate']:.4g} "
            f"median_time={row['median_time']} p95_time={row['p95_time']} "
            f"max_energy={row['max_energy']}"
        )
    if args.out:
        harness.write_aggregates_csv(rows, args.out)
        print(f"wrote {len(rows)} aggregate rows to {args.out}")
    if args.json:
        harness.write_json(rows, args.json)
    return EXIT_OK


def _parse_float_list(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part]
    except ValueError:
        raise InvalidParameterError(f"bad float list {text!r}")
    if not values:
        raise InvalidParameterError("empty phi list")
    return values


def _parse_dist(spec: str) -> oracle.DiscreteDistribution:
    """Distribution DSL for `oracle fact1`:

    uniform:lo,hi | point:v | two:v1,v2[,p] | geo:q[,tail] | geo-mean:k[,tail]
    (q and p accept fractions like 19/20; geo-mean:k uses q = (k-1)/k).
    """
    kind, _, arg = spec.partition(":")
    parts = arg.split(",") if arg else []
    try:
        if kind == "uniform" and len(parts) == 2:
            return oracle.DiscreteDistribution.uniform_range(int(parts[0]), int(parts[1]))
        if kind == "point" and len(parts) == 1:
            return oracle.DiscreteDistribution.point_mass(int(parts[0]))
        if kind == "two" and len(parts) in (2, 3):
            p1 = Fraction(parts[2]) if len(parts) == 3 else Fraction(1, 2)
            return oracle.DiscreteDistribution.two_point(int(parts[0]), int(parts[1]), p1)
        if kind == "geo" and len(parts) in (1, 2):
            tail = float(parts[1]) if len(parts) == 2 else 1e-12
            return oracle.DiscreteDistribution.truncated_geometric(Fraction(parts[0]), tail)
        if kind == "geo-mean" and len(parts) in (1, 2):
            k = int(parts[0])
            if k < 1:
                raise InvalidParameterError(f"geo-mean needs k >= 1, got {k}")
            tail = float(parts[1]) if len(parts) == 2 else 1e-12
            return oracle.DiscreteDistribution.truncated_geometric(Fraction(k - 1, k), tail)
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidParameterError(f"bad distribution spec {spec!r}: {exc}")
    raise InvalidParameterError(f"bad distribution spec {spec!r}")


def cmd_oracle(args) -> int:
    if args.target == "lemma1":
        report = oracle.check_lemma1(args.n, args.phi, budget=args.budget,
                                     mc_trials=args.trials, seed=args.seed)
        mode = "exact" if report.exact else f"monte-carlo({report.confidence:.0%})"
        print(
            f"lemma1 n={report.n} phi={report.phi:g} k={report.k} m_max={report.m_max} "
            f"bound={float(report.bound):.6g} mode={mode}"
        )
        print(
            f"max p/bound = {report.max_ratio:.6g} at m={report.worst_m} "
            f"=> {'PASS' if report.passed else 'FAIL'}"
        )
        return EXIT_OK if report.passed else EXIT_ORACLE_FAIL

    if args.target == "thm4":
        report = oracle.green_decay_success_mc(args.n, args.k, args.trials, seed=args.seed)
        print(
            f"thm4 n={args.n} k={args.k} trials={report.trials} "
            f"frequency={report.frequency:.5f} "
            f"wilson99=[{report.wilson_low:.5f},{report.wilson_high:.5f}]"
        )
        if args.k >= 2 * math.ceil(math.log2(args.n)):
            passed = report.wilson_low > 0.5
            print(f"window >= 2 log n: require frequency > 0.5 => {'PASS' if passed else 'FAIL'}")
            return EXIT_OK if passed else EXIT_ORACLE_FAIL
        print("window below 2 log n: informational only")
        return EXIT_OK

    if args.target == "fact1":
        dist = _parse_dist(args.dist)
        report = oracle.check_collision_bound(dist)
        if report.applicable:
            print(
                f"fact1 mean={float(report.mean):g} collision={float(report.value):.6g} "
                f"bound=1/(2*{report.k})={float(report.bound):.6g} "
                f"=> {'PASS' if report.passed else 'FAIL'}"
            )
            return EXIT_OK if report.passed else EXIT_ORACLE_FAIL
        print(
            f"fact1 mean={float(report.mean):g} collision={float(report.value):.6g} "
            f"bound not applicable (mean must be an even integer >= 2) => PASS"
        )
        return EXIT_OK

    if args.target == "alpha":
        report = oracle.check_pattern_bound(args.T, args.E)
        print(
            f"alpha(T={report.T},E={report.E}) = {report.count} <= {report.bound:.6g} "
            f"=> {'PASS' if report.passed else 'FAIL'}"
        )
        return EXIT_OK if report.passed else EXIT_ORACLE_FAIL

    raise InvalidParameterError(f"unknown oracle target {args.target!r}")


def cmd_graph(args) -> int:
    _ensure_writable(args.out, args.force)
    g = harness.build_graph_from_spec(args.family, args.seed)
    print(f"n={g.n} m={g.num_edges} D={topology.diameter(g)}")
    if args.out:
        topology.write_edge_list(g, args.out)
        print(f"wrote edge list to {args.out}")
    return EXIT_OK


def _add_simulate_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True,
                   help="graph spec: path:N | gnp:N,P | star-perm:N | pair-chain:S | file:PATH")
    p.add_argument("--protocol", required=True,
                   help="ggb | gb | decay-baseline | fixed:<offsets>")
    p.add_argument("--n", type=int, required=True,
                   help="network size parameter given to the protocol")
    p.add_argument("--eps", type=float, default=0.1, help="failure budget (ggb)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0, help="base seed for per-trial seeds")
    p.add_argument("--graph-seed", type=int, default=0)
    p.add_argument("--origin", type=int, default=0)
    p.add_argument("--max-rounds", type=int, default=None,
                   help="horizon; default 100*(D+log^2 n)*phase_length")
    p.add_argument("--workers", type=int, default=None,
                   help=f"worker processes (default ${harness.WORKERS_ENV_VAR} or 1)")
    p.add_argument("--out", default=None, help="write per-trial CSV here")
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radiocast",
        description="Simulate and verify energy-bounded broadcast in multi-hop radio networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one protocol configuration")
    _add_simulate_flags(p_sim)
    p_sim.add_argument("--phi", type=float, default=None, help="energy parameter (ggb)")
    p_sim.add_argument("--trace", default=None,
                       help="write a per-round trace of every trial to this file")
    p_sim.set_defaults(func=cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="run a config across several phi values")
    _add_simulate_flags(p_sweep)
    p_sweep.add_argument("--phi-list", required=True, help="comma-separated phi values")
    p_sweep.add_argument("--json", default=None, help="also write aggregates as JSON")
    p_sweep.set_defaults(func=cmd_sweep)

    p_oracle = sub.add_parser("oracle", help="run a verification oracle")
    sub_o = p_oracle.add_subparsers(dest="target", required=True)
    p_l1 = sub_o.add_parser("lemma1", help="slot-window no-singleton bound, exact")
    p_l1.add_argument("--n", type=int, required=True)
    p_l1.add_argument("--phi", type=float, required=True)
    p_l1.add_argument("--budget", type=int, default=oracle.DEFAULT_COUNT_BUDGET)
    p_l1.add_argument("--trials", type=int, default=4000, help="fallback Monte-Carlo trials per m")
    p_l1.add_argument("--seed", type=int, default=0)
    p_t4 = sub_o.add_parser("thm4", help="two-shot contention window success frequency")
    p_t4.add_argument("--n", type=int, required=True)
    p_t4.add_argument("--k", type=int, required=True)
    p_t4.add_argument("--trials", type=int, default=100_000)
    p_t4.add_argument("--seed", type=int, default=0)
    p_f1 = sub_o.add_parser("fact1", help="collision lower bound for slot distributions")
    p_f1.add_argument("--dist", required=True,
                      help="uniform:lo,hi | point:v | two:v1,v2[,p] | geo:q[,tail] | geo-mean:k")
    p_al = sub_o.add_parser("alpha", help="pattern-count bound")
    p_al.add_argument("--T", type=int, required=True)
    p_al.add_argument("--E", type=int, required=True)
    p_oracle.set_defaults(func=cmd_oracle)

    p_graph = sub.add_parser("graph", help="generate a topology")
    p_graph.add_argument("--family", required=True,
                         help="path:N | gnp:N,P | star-perm:N | pair-chain:S")
    p_graph.add_argument("--seed", type=int, default=0)
    p_graph.add_argument("--out", default=None, help="write edge list here")
    p_graph.add_argument("--force", action="store_true")
    p_graph.set_defaults(func=cmd_graph)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GenerationFailureError, GraphFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    except _WouldClobber as exc:
        print(f"error: {exc} exists; pass --force to overwrite", file=sys.stderr)
        return EXIT_CLOBBER
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
