"""Scalable, noise-robust dynamic graph clustering by separated matrix
factorization with bi-clustering regularization and selective embedding
updating, plus the synthetic benchmarks and metrics to evaluate it."""

from .errors import (
    ConvergenceFailure,
    DynclustError,
    EmptyCluster,
    EmptySnapshot,
    InfeasibleParams,
    LengthMismatch,
    MissingPrevFactors,
    NonFiniteLoss,
    SaturatedGraph,
    ShapeMismatch,
    TooManySubsets,
)
from .estimator import DynamicGraphClustering
from .graph import (
    DynamicGraph,
    Snapshot,
    build_pmi,
    degree_vector,
    inject_noise,
    load_dynamic_graph,
    save_dynamic_graph,
)
from .metrics import density, modularity, nf1, nmi
from .pipeline import RunConfig, RunResult, extract_partition, run, run_ablation
from .synth import GreenParams, gen_green, gen_syn_fix, gen_syn_var

__version__ = "0.1.0"

__all__ = [
    "ConvergenceFailure",
    "DynamicGraph",
    "DynamicGraphClustering",
    "DynclustError",
    "EmptyCluster",
    "EmptySnapshot",
    "GreenParams",
    "InfeasibleParams",
    "LengthMismatch",
    "MissingPrevFactors",
    "NonFiniteLoss",
    "RunConfig",
    "RunResult",
    "SaturatedGraph",
    "ShapeMismatch",
    "Snapshot",
    "TooManySubsets",
    "build_pmi",
    "degree_vector",
    "density",
    "extract_partition",
    "gen_green",
    "gen_syn_fix",
    "gen_syn_var",
    "inject_noise",
    "load_dynamic_graph",
    "modularity",
    "nf1",
    "nmi",
    "run",
    "run_ablation",
    "save_dynamic_graph",
]
