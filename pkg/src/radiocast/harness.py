"""Experiment harness: batches of trials with reproducible seeds.

A run is described by an ExperimentConfig (graph spec, protocol, parameters,
trial count, base seed). Trial i always runs with seed derive_seed(base_seed,
i), so results are independent of execution order and of how many worker
processes are used; per-trial records and their CSV serialization are
byte-identical between serial and parallel runs of the same config.

Graph specs are strings so configs stay serializable and hashable:
"path:16", "gnp:1024,0.012", "star-perm:63", "pair-chain:8", "file:g.edges".
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from itertools import repeat

import numpy as np

from . import topology
from .engine import run_trial
from .errors import GraphFormatError, InvalidParameterError
from .protocols import DecayBaselineProtocol, GbProtocol, GgbProtocol, make_protocol
from .topology import Graph, diameter

__all__ = [
    "derive_seed",
    "build_graph_from_spec",
    "ExperimentConfig",
    "ExperimentRecord",
    "default_max_rounds",
    "run_experiment",
    "sweep_phi",
    "aggregate_records",
    "write_csv",
    "read_csv",
    "write_aggregates_csv",
    "write_json",
    "WORKERS_ENV_VAR",
]

WORKERS_ENV_VAR = "RADIOCAST_WORKERS"

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def derive_seed(base_seed: int, index: int) -> int:
    """Per-trial seed: splitmix64 finalizer applied to base + (index+1)*phi64.

    The pre-mix step is injective in the index (the golden-ratio increment is
    odd) and the finalizer is a bijection on 64-bit words, so distinct trial
    indices under one base seed never share a seed.
    """
    if base_seed < 0 or index < 0:
        raise InvalidParameterError(f"need base_seed, index >= 0, got {base_seed}, {index}")
    x = (base_seed + (index + 1) * _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def build_graph_from_spec(spec: str, seed: int = 0) -> Graph:
    """Materialize a graph from its string spec (see module docstring)."""
    kind, _, arg = spec.partition(":")

    def rng() -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([seed, 17]))

    try:
        if kind == "path":
            return topology.make_path(int(arg))
        if kind == "gnp":
            n_str, p_str = arg.split(",")
            return topology.make_random_connected(int(n_str), float(p_str), rng())
        if kind == "star-perm":
            return topology.make_star_permutation(int(arg), rng())
        if kind == "pair-chain":
            return topology.make_pair_chain(int(arg))
        if kind == "file":
            return topology.read_edge_list(arg)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, (InvalidParameterError, GraphFormatError)):
            raise
        raise InvalidParameterError(f"bad graph spec {spec!r}: {exc}")
    raise InvalidParameterError(f"unknown graph family in spec {spec!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """One batch of trials.

    n is the network-size parameter handed to the protocol; it may differ
    from the actual node count of the graph spec (a warning is emitted, since
    mismatched knowledge is sometimes exactly what an experiment wants).
    graph_per_trial resamples the graph spec with a per-trial seed instead of
    reusing one instance, for families with instance-level randomness.
    """

    graph: str
    protocol: str
    n: int
    trials: int
    base_seed: int = 0
    phi: float | None = None
    eps: float | None = None
    origin: int = 0
    graph_seed: int = 0
    max_rounds: int | None = None
    graph_per_trial: bool = False

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ExperimentRecord:
    """Flat per-trial result row (see CSV_COLUMNS for the column order)."""

    config_hash: str
    trial: int
    seed: int
    n: int
    D: int
    protocol: str
    phi: float | None
    eps: float | None
    success: bool
    completion_round: int | None
    termination_round: int
    max_energy: int
    mean_energy: float


CSV_COLUMNS = [
    "config_hash",
    "trial",
    "seed",
    "n",
    "D",
    "protocol",
    "phi",
    "eps",
    "success",
    "completion_round",
    "termination_round",
    "max_energy",
    "mean_energy",
]


def default_max_rounds(g: Graph, protocol) -> int:
    """Horizon used when a config does not pin one:
    100 * (D + ceil(log2 n)^2) * (phase length of the protocol)."""
    if isinstance(protocol, (GgbProtocol, GbProtocol)):
        phase = protocol.params.t_ph
    elif isinstance(protocol, DecayBaselineProtocol):
        phase = protocol.k
    else:
        phase = 1
    log_n = math.ceil(math.log2(max(2, g.n)))
    return 100 * (diameter(g) + log_n * log_n) * phase


def _run_one(cfg: ExperimentConfig, g: Graph | None, trial: int) -> ExperimentRecord:
    if g is None:
        g = build_graph_from_spec(cfg.graph, derive_seed(cfg.graph_seed, trial))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        protocol = make_protocol(cfg.protocol, cfg.n, cfg.phi, cfg.eps)
    max_rounds = cfg.max_rounds or default_max_rounds(g, protocol)
    seed = derive_seed(cfg.base_seed, trial)
    res = run_trial(g, protocol, origin=cfg.origin, seed=seed, max_rounds=max_rounds)
    return ExperimentRecord(
        config_hash=cfg.config_hash(),
        trial=trial,
        seed=seed,
        n=g.n,
        D=diameter(g),
        protocol=cfg.protocol,
        phi=cfg.phi,
        eps=cfg.eps,
        success=res.success,
        completion_round=res.completion_round,
        termination_round=res.termination_round,
        max_energy=max(res.energy),
        mean_energy=sum(res.energy) / g.n,
    )


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV_VAR, "1"))
    return max(1, workers)


def run_experiment(
    cfg: ExperimentConfig, workers: int | None = None, graph: Graph | None = None
) -> list[ExperimentRecord]:
    """Run all trials of a config and return records ordered by trial index.

    workers > 1 distributes trials over processes; seeding is per-trial, so
    the records (and any CSV written from them) do not depend on the worker
    count. A prebuilt graph instance may be passed to share one across
    configs; ignored when the config resamples the graph per trial.
    """
    if cfg.trials < 1:
        raise InvalidParameterError(f"need trials >= 1, got {cfg.trials}")
    make_protocol(cfg.protocol, cfg.n, cfg.phi, cfg.eps)  # validate early, with warnings
    if cfg.graph_per_trial:
        g = None
    else:
        g = graph if graph is not None else build_graph_from_spec(cfg.graph, cfg.graph_seed)
        diameter(g)  # cache before distributing to workers
        if g.n != cfg.n:
            warnings.warn(
                f"protocol parameter n={cfg.n} differs from graph size {g.n}",
                stacklevel=2,
            )
    workers = _resolve_workers(workers)
    if workers == 1:
        return [_run_one(cfg, g, t) for t in range(cfg.trials)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, cfg.trials // (workers * 4))
        return list(
            pool.map(_run_one, repeat(cfg), repeat(g), range(cfg.trials), chunksize=chunk)
        )


def aggregate_records(records: list[ExperimentRecord]) -> dict:
    """Collapse one config's records into the summary row used by sweeps.

    median_time and p95_time are over completion rounds of successful trials
    (None when every trial failed); max_energy is over all trials.
    """
    if not records:
        raise InvalidParameterError("no records to aggregate")
    times = sorted(r.completion_round for r in records if r.success)
    first = records[0]
    return {
        "config_hash": first.config_hash,
        "n": first.n,
        "D": first.D,
        "protocol": first.protocol,
        "phi": first.phi,
        "eps": first.eps,
        "trials": len(records),
        "success_rate": sum(r.success for r in records) / len(records),
        "median_time": float(np.median(times)) if times else None,
        "p95_time": float(np.percentile(times, 95)) if times else None,
        "max_energy": max(r.max_energy for r in records),
    }


def sweep_phi(
    cfg: ExperimentConfig, phi_values: list[float], workers: int | None = None
) -> list[dict]:
    """Run the config once per phi (shared graph instance, same base seed)
    and return one aggregate row per phi, in the given order."""
    if not phi_values:
        raise InvalidParameterError("empty phi list")
    if cfg.graph_per_trial:
        shared = None
    else:
        shared = build_graph_from_spec(cfg.graph, cfg.graph_seed)
        diameter(shared)
    rows = []
    for phi in phi_values:
        records = run_experiment(replace(cfg, phi=phi), workers=workers, graph=shared)
        rows.append(aggregate_records(records))
    return rows


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(records: list[ExperimentRecord], path: str) -> None:
    """Write per-trial records in the fixed CSV_COLUMNS order. Missing values
    (failed-trial completion rounds, protocol-free phi/eps) are empty cells."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([_cell(getattr(r, col)) for col in CSV_COLUMNS])


def read_csv(path: str) -> list[ExperimentRecord]:
    """Read back a file written by write_csv."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise InvalidParameterError(f"unexpected CSV header in {path}")
        for row in reader:
            records.append(
                ExperimentRecord(
                    config_hash=row["config_hash"],
                    trial=int(row["trial"]),
                    seed=int(row["seed"]),
                    n=int(row["n"]),
                    D=int(row["D"]),
                    protocol=row["protocol"],
                    phi=float(row["phi"]) if row["phi"] else None,
                    eps=float(row["eps"]) if row["eps"] else None,
                    success=row["success"] == "true",
                    completion_round=int(row["completion_round"]) if row["completion_round"] else None,
                    termination_round=int(row["termination_round"]),
                    max_energy=int(row["max_energy"]),
                    mean_energy=float(row["mean_energy"]),
                )
            )
    return records


AGGREGATE_COLUMNS = [
    "config_hash",
    "n",
    "D",
    "protocol",
    "phi",
    "eps",
    "trials",
    "success_rate",
    "median_time",
    "p95_time",
    "max_energy",
]


def write_aggregates_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_COLUMNS)
        for row in rows:
            writer.writerow([_cell(row[col]) for col in AGGREGATE_COLUMNS])


def write_json(rows: list[dict], path: str) -> None:
    """Write sweep aggregates as a JSON array (schema = AGGREGATE_COLUMNS)."""
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=2, sort_keys=True)
        fh.write("\n")
