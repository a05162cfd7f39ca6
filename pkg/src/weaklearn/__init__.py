"""weaklearn - social learning over weak graphs and influence recovery.

A weak graph splits a network into sending sub-networks (which broadcast
but never listen back) and receiving sub-networks.  This package simulates
log-linear belief dynamics over such graphs and solves the reverse problem:
from the belief stream of a receiving agent, recover how strongly each
sending sub-network influences it.

Quick tour::

    import weaklearn as wl

    part = wl.Partition(sending_sizes=(3, 3, 3), receiving_sizes=(2, 2))
    g = wl.random_weak_graph(part, density=0.4, seed=7)
    x_true = wl.limiting_profile(g).X          # aggregate influence weights

    suite, D = wl.diversity_model(3, 3, base_means=(1, 2, 3),
                                  perturb_range=0.1, seed=3)
    traj = wl.simulate(g, suite, horizon=20000, seed=11)

    y_hat = wl.empirical_rates(traj, agent_id=10, time=20000)
    theta, _ = wl.estimate_theta_star(y_hat)
    sys = wl.build_system(D, theta, y_hat)
    est = wl.solve_topology(sys)               # est.x_hat ~ x_true column
"""

from weaklearn.graphs import (
    GraphValidationError,
    LimitingProfile,
    Partition,
    PerronConvergenceError,
    ReceivingConnectivityError,
    WeakGraph,
    aggregate_weights,
    limiting_profile,
    matrix_power_limit,
    perron_vector,
    random_weak_graph,
    read_graph_csv,
    validate_weak_graph,
    weak_graph_diagnostics,
    write_graph_csv,
)
from weaklearn.models import (
    AgentModel,
    AssumptionTieWarning,
    DivergenceMatrix,
    DivergenceProfile,
    HypothesisSet,
    ModelError,
    ModelSuite,
    build_edm,
    diversity_model,
    divergence_profile,
    gaussian_kl,
    sample_observation,
    structured_gaussian_model,
    write_divergence_csv,
)
from weaklearn.learning import (
    AssumptionViolationError,
    BeliefState,
    Trajectory,
    bayesian_update,
    combine_step,
    empirical_rates,
    estimate_theta_star,
    export_trajectory_csv,
    geometric_sample_times,
    simulate,
    theoretical_rates,
)
from weaklearn.inverse import (
    ConstraintInfeasibleError,
    EstimationError,
    InverseSystem,
    NonIdentifiableError,
    RankVerdict,
    TopologyEstimate,
    build_system,
    estimate_record,
    estimation_error,
    project_to_simplex,
    rank_feasibility,
    solve_topology,
)
from weaklearn.experiment import (
    ConfigError,
    ExperimentConfig,
    ExperimentReport,
    emit_plot_data,
    run_experiment,
    validate_config,
)

__version__ = "0.1.0"
