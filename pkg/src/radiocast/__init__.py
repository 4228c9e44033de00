"""Simulation and verification toolkit for energy-bounded broadcast in
synchronous multi-hop radio networks without collision detection."""

from .engine import TrialResult, derive_rng, resolve_round, run_trial
from .errors import (
    BudgetExceededError,
    GenerationFailureError,
    GraphFormatError,
    InvalidParameterError,
)
from .harness import (
    ExperimentConfig,
    ExperimentRecord,
    build_graph_from_spec,
    derive_seed,
    run_experiment,
    sweep_phi,
)
from .protocols import (
    DecayBaselineProtocol,
    FixedPatternProtocol,
    GbProtocol,
    GgbProtocol,
    StationSchedule,
    gb_params,
    ggb_params,
    make_protocol,
)
from .topology import (
    Graph,
    bfs_from,
    diameter,
    make_pair_chain,
    make_path,
    make_random_connected,
    make_star_permutation,
    read_edge_list,
    write_edge_list,
)

__version__ = "0.1.0"
