"""Community detection in weighted multi-layer networks.

Provides quality measures generalizing modularity to multiple layers,
greedy and swap-based optimizers, Poisson null-model selection, synthetic
network generators and partition evaluation, plus a command line front end.
"""

from .graph import (
    CommunityStats,
    InputDataError,
    MultiLayerGraph,
    Partition,
    PreconditionError,
    aggregate_graph,
    apply_move,
    init_stats,
    load_layer_files,
    load_multilayer_edgelist,
    load_partition,
    write_multilayer_edgelist,
    write_partition,
)
from .modularity import (
    Measure,
    delta_isolated_join,
    delta_move,
    q_dcmlsbm,
    q_dcrmlsbm,
    q_mnavrg,
    q_ng,
    q_ng_aggregate,
    q_sdavrg,
    q_sdlocal,
    q_sdmlsbm,
    q_sdratio,
    q_sdrmlsbm,
    score,
)
from .nullmodels import (
    LrtResult,
    NullParams,
    bootstrap_lrt,
    fit_id,
    fit_sd,
    loglik_id,
    loglik_sd,
    lrt_statistic,
    sample_from_null,
)
from .optimize import (
    DetectResult,
    OptimizeConfig,
    brute_force_best,
    detect,
    kernighan_lin,
    louvain,
    perturb_labels,
)
from .generate import (
    GeneratorSpec,
    connectivity_matrix,
    sample_dcmlsbm,
    sample_labels,
    sample_mlsbm,
    sample_network,
    sample_propensities,
)
from .scenarios import Scenario, builtin_scenario, builtin_scenario_names, load_scenario
from .evaluate import EvalReport, confusion_matrix, mse_num_communities, nmi, optimal_assignment
from .sweep import SweepSpec, degree_fit_table, run_sweep

__version__ = "0.1.0"

__all__ = [
    "CommunityStats",
    "DetectResult",
    "EvalReport",
    "GeneratorSpec",
    "InputDataError",
    "LrtResult",
    "Measure",
    "MultiLayerGraph",
    "NullParams",
    "OptimizeConfig",
    "Partition",
    "PreconditionError",
    "Scenario",
    "SweepSpec",
    "aggregate_graph",
    "apply_move",
    "bootstrap_lrt",
    "brute_force_best",
    "builtin_scenario",
    "builtin_scenario_names",
    "confusion_matrix",
    "connectivity_matrix",
    "degree_fit_table",
    "delta_isolated_join",
    "delta_move",
    "detect",
    "fit_id",
    "fit_sd",
    "init_stats",
    "kernighan_lin",
    "load_layer_files",
    "load_multilayer_edgelist",
    "load_partition",
    "load_scenario",
    "loglik_id",
    "loglik_sd",
    "louvain",
    "lrt_statistic",
    "mse_num_communities",
    "nmi",
    "optimal_assignment",
    "perturb_labels",
    "q_dcmlsbm",
    "q_dcrmlsbm",
    "q_mnavrg",
    "q_ng",
    "q_ng_aggregate",
    "q_sdavrg",
    "q_sdlocal",
    "q_sdmlsbm",
    "q_sdratio",
    "q_sdrmlsbm",
    "run_sweep",
    "sample_dcmlsbm",
    "sample_from_null",
    "sample_labels",
    "sample_mlsbm",
    "sample_network",
    "sample_propensities",
    "score",
    "write_multilayer_edgelist",
    "write_partition",
]
