"""Learning continuous-time dynamics on complex networks.

The package couples graph neural networks with numerical ODE integration:
a GNN layer is integrated over continuous time instead of being stacked a
discrete number of times, which supports three tasks in one framework:
continuous-time dynamics prediction, structured-sequence prediction, and
semi-supervised node classification.
"""

from .autodiff import DiffMatrix, Tape, backward
from .datasets import LabeledGraphBundle, gen_sbm_bundle, load_bundle, save_bundle
from .dynamics import (
    DynamicsSpec,
    default_initial_state,
    gene_rhs,
    heat_rhs,
    mutualistic_rhs,
    sample_times,
    simulate_truth,
)
from .errors import DegenerateInputError, FormatError, NumericError, StiffnessError
from .estimators import GraphODEClassifier, NetworkDynamicsRegressor, TemporalGraphForecaster
from .graphgen import (
    Graph,
    gen_barabasi_albert,
    gen_erdos_renyi,
    gen_grid8,
    gen_newman_watts,
    gen_random_partition,
    greedy_modularity_communities,
    greedy_modularity_reorder,
    read_edgelist,
    write_edgelist,
)
from .models import (
    ModelSpec,
    classify_forward,
    init_params,
    load_params,
    ndcn_forward,
    param_count,
    save_params,
    temporal_forward,
    temporal_rollout,
)
from .odeint import SolverSpec, Trajectory, solve
from .operators import DiffOp, normalized_laplacian, tunable_diffusion
from .training import (
    AdamState,
    ExperimentPlan,
    RunResult,
    adam_step,
    aggregate,
    l1_loss,
    normalized_l1,
    run_classify,
    run_continuous,
    run_plan,
    run_regular,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "DegenerateInputError",
    "DiffMatrix",
    "DiffOp",
    "DynamicsSpec",
    "ExperimentPlan",
    "FormatError",
    "Graph",
    "GraphODEClassifier",
    "LabeledGraphBundle",
    "ModelSpec",
    "NetworkDynamicsRegressor",
    "NumericError",
    "RunResult",
    "SolverSpec",
    "StiffnessError",
    "Tape",
    "TemporalGraphForecaster",
    "Trajectory",
    "adam_step",
    "aggregate",
    "backward",
    "classify_forward",
    "default_initial_state",
    "gen_barabasi_albert",
    "gen_erdos_renyi",
    "gen_grid8",
    "gen_newman_watts",
    "gen_random_partition",
    "gen_sbm_bundle",
    "gene_rhs",
    "greedy_modularity_communities",
    "greedy_modularity_reorder",
    "heat_rhs",
    "init_params",
    "l1_loss",
    "load_bundle",
    "load_params",
    "mutualistic_rhs",
    "ndcn_forward",
    "normalized_l1",
    "normalized_laplacian",
    "param_count",
    "read_edgelist",
    "run_classify",
    "run_continuous",
    "run_plan",
    "run_regular",
    "sample_times",
    "save_bundle",
    "save_params",
    "simulate_truth",
    "solve",
    "temporal_forward",
    "temporal_rollout",
    "tunable_diffusion",
    "write_edgelist",
]
