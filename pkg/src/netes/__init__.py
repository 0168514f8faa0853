"""Networked evolution strategies: population-based search where agents
share rewards and parameters over a configurable communication graph."""

from .diagnostics import (
    BoundReport,
    bound_sweep,
    offset_spread,
    perturbation_drift,
    update_variance,
    variance_bound_report,
)
from .harness import (
    ExperimentConfig,
    RunResult,
    Summary,
    aggregate_runs,
    apply_preset,
    detect_plateau,
    emit_outputs,
    evaluate_policy,
    load_config,
    run_experiment,
)
from .metrics import (
    approx_homogeneity_er,
    approx_reachability_er,
    family_scatter,
    homogeneity,
    reachability,
)
from .objectives import MlpPolicy, Objective, ObjectiveKind, evaluate, mlp_forward
from .optimizer import (
    AgentPopulation,
    ESHyperparams,
    PerturbationSet,
    apply_broadcast,
    compute_update,
    perturb,
    shape_fitness,
    step,
)
from .topology import (
    Graph,
    GraphFamily,
    degree_stats,
    generate_barabasi_albert,
    generate_complete,
    generate_erdos_renyi,
    generate_watts_strogatz,
    is_connected,
    sample_connected,
)

__version__ = "0.1.0"
