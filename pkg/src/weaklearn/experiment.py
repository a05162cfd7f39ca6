"""Config-driven end-to-end experiments: graph, models, simulation, inversion.

A single JSON document describes the whole pipeline; :func:`validate_config`
resolves defaults and reports every violation at once, and
:func:`run_experiment` writes a self-contained, deterministic set of output
files: the graph and divergence matrices, per-trial trajectories and
estimates, and a summary with the per-agent verdicts.  Wall-clock metadata
is confined to a separate meta file so the analytical outputs are
byte-reproducible.

Config schema (defaults in brackets)::

    {
      "hypotheses": 3,
      "sending":    {"sizes": [3, 3, 3], "base_means": [1, 2, 3],
                     "perturb_range": 0.1, "model_seed": 5},
      "receiving":  {"sizes": [2, 2]},
      "graph":      {"random": {"density": 0.5, "seed": 11}}  or  {"csv": "path"},
      "simulation": {"steps": 20000, "sample_times": "geometric" | [...],
                     "trials": [1], "seed": 100},
      "inference":  {"rank_tol": [1e-10], "observation_time": [steps]},
      "output_dir": ["out"]
    }

``model_seed`` is required whenever ``perturb_range > 0``: every stochastic
component carries its own seed.
"""

from __future__ import annotations

import datetime
import json
import statistics
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graphs import (
    Partition,
    WeakGraph,
    limiting_profile,
    random_weak_graph,
    read_graph_csv,
    write_graph_csv,
)
from .inverse import (
    build_system,
    estimate_record,
    solve_topology,
)
from .learning import (
    Trajectory,
    empirical_rates,
    estimate_theta_star,
    export_trajectory_csv,
    geometric_sample_times,
    simulate,
)
from .models import (
    AssumptionTieWarning,
    DivergenceMatrix,
    ModelSuite,
    diversity_model,
    divergence_profile,
    write_divergence_csv,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "validate_config",
    "run_experiment",
    "emit_plot_data",
]


class ConfigError(ValueError):
    """Invalid experiment config; ``errors`` lists every violation found."""

    def __init__(self, errors: list[str]):
        super().__init__("invalid config:\n  " + "\n  ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description (defaults already applied)."""

    n_hypotheses: int
    sending_sizes: tuple[int, ...]
    base_means: tuple[float, ...]
    perturb_range: float
    model_seed: int
    receiving_sizes: tuple[int, ...]
    graph_csv: str | None
    graph_density: float | None
    graph_seed: int | None
    steps: int
    sample_times: tuple[int, ...]
    trials: int
    sim_seed: int
    rank_tol: float
    observation_time: int
    output_dir: str

    @property
    def partition(self) -> Partition:
        return Partition(self.sending_sizes, self.receiving_sizes)


@dataclass
class ExperimentReport:
    """In-memory results of one run, mirroring the files on disk."""

    config: ExperimentConfig
    out_dir: Path
    graph: WeakGraph
    suite: ModelSuite
    D: DivergenceMatrix
    x_true: np.ndarray
    trajectories: list[Trajectory]
    estimates: list[list[dict]]
    summary: dict

    @property
    def identifiable(self) -> bool:
        return bool(self.summary["identifiable"])


def _check_int(raw: dict, dotted: str, errors: list[str], minimum=None):
    cur = raw
    for part in dotted.split(".")[:-1]:
        cur = cur.get(part, {}) if isinstance(cur, dict) else {}
    leaf = dotted.split(".")[-1]
    if not isinstance(cur, dict) or leaf not in cur:
        errors.append(f"missing field: {dotted}")
        return None
    value = cur[leaf]
    if not isinstance(value, int) or isinstance(value, bool):
        errors.append(f"{dotted}: expected an integer, got {value!r}")
        return None
    if minimum is not None and value < minimum:
        errors.append(f"{dotted}: must be >= {minimum}, got {value}")
        return None
    return value


def _check_sizes(raw: dict, dotted: str, errors: list[str]):
    cur = raw
    for part in dotted.split(".")[:-1]:
        cur = cur.get(part, {}) if isinstance(cur, dict) else {}
    leaf = dotted.split(".")[-1]
    if not isinstance(cur, dict) or leaf not in cur:
        errors.append(f"missing field: {dotted}")
        return None
    sizes = cur[leaf]
    if (
        not isinstance(sizes, list)
        or not sizes
        or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in sizes)
    ):
        errors.append(f"{dotted}: expected a nonempty list of positive integers")
        return None
    return tuple(sizes)


def validate_config(path) -> ExperimentConfig:
    """Load, validate and resolve a JSON experiment config.

    Raises :class:`ConfigError` whose ``errors`` attribute enumerates every
    violation found, not just the first.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a JSON object"])

    errors: list[str] = []

    H = _check_int(raw, "hypotheses", errors, minimum=None)
    if H is not None and H < 2:
        errors.append("hypotheses: H >= 2 required")
        H = None

    sending_sizes = _check_sizes(raw, "sending.sizes", errors)
    receiving_sizes = _check_sizes(raw, "receiving.sizes", errors)

    sending = raw.get("sending", {}) if isinstance(raw.get("sending"), dict) else {}
    base_means = sending.get("base_means")
    if (
        not isinstance(base_means, list)
        or not base_means
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in base_means)
    ):
        errors.append("sending.base_means: expected a nonempty list of numbers")
        base_means = None
    perturb_range = sending.get("perturb_range", 0.0)
    if not isinstance(perturb_range, (int, float)) or perturb_range < 0:
        errors.append("sending.perturb_range: expected a nonnegative number")
        perturb_range = 0.0
    model_seed = sending.get("model_seed")
    if perturb_range > 0 and not isinstance(model_seed, int):
        errors.append("sending.model_seed: seed required when perturb_range > 0")
    if model_seed is None:
        model_seed = 0

    if H is not None and base_means is not None and sending_sizes is not None:
        needed = max(H, len(sending_sizes))
        if len(base_means) < needed:
            errors.append(
                f"sending.base_means: needs at least max(H, S) = {needed} entries, "
                f"got {len(base_means)}"
            )

    graph = raw.get("graph")
    graph_csv = graph_density = graph_seed = None
    if not isinstance(graph, dict) or ("csv" in graph) == ("random" in graph):
        errors.append('graph: expected exactly one of {"csv": path} or {"random": {...}}')
    elif "csv" in graph:
        graph_csv = graph["csv"]
        if not isinstance(graph_csv, str):
            errors.append("graph.csv: expected a path string")
        else:
            csv_path = Path(graph_csv)
            if not csv_path.is_absolute():
                csv_path = path.parent / csv_path
            graph_csv = str(csv_path)
            if not csv_path.exists():
                errors.append(f"graph.csv: file not found: {csv_path}")
            elif sending_sizes is not None and receiving_sizes is not None:
                try:
                    header = csv_path.open().readline()
                    nums = [int(v) for v in header.lstrip("#").split()]
                    file_sizes = tuple(nums[3:])
                    if file_sizes != sending_sizes + receiving_sizes:
                        errors.append(
                            f"graph.csv: partition sizes {file_sizes} disagree with config "
                            f"{sending_sizes + receiving_sizes}"
                        )
                except (OSError, ValueError):
                    errors.append(f"graph.csv: unreadable header in {csv_path}")
    else:
        rnd = graph["random"]
        if not isinstance(rnd, dict):
            errors.append("graph.random: expected an object with density and seed")
        else:
            graph_density = rnd.get("density")
            if not isinstance(graph_density, (int, float)) or not 0 < graph_density <= 1:
                errors.append("graph.random.density: expected a number in (0, 1]")
            graph_seed = rnd.get("seed")
            if not isinstance(graph_seed, int):
                errors.append("graph.random.seed: seed required for a random graph")

    steps = _check_int(raw, "simulation.steps", errors, minimum=1)
    trials = raw.get("simulation", {}).get("trials", 1) if isinstance(raw.get("simulation"), dict) else 1
    if not isinstance(trials, int) or trials < 1:
        errors.append("simulation.trials: expected a positive integer")
        trials = 1
    sim_seed = _check_int(raw, "simulation.seed", errors)

    sim = raw.get("simulation", {}) if isinstance(raw.get("simulation"), dict) else {}
    sample_times_raw = sim.get("sample_times", "geometric")
    sample_times = None
    if sample_times_raw == "geometric":
        if steps is not None:
            sample_times = geometric_sample_times(steps)
    elif isinstance(sample_times_raw, list) and all(
        isinstance(t, int) and not isinstance(t, bool) for t in sample_times_raw
    ):
        sample_times = tuple(sample_times_raw)
        if any(t2 <= t1 for t1, t2 in zip(sample_times, sample_times[1:])):
            errors.append("simulation.sample_times: must be strictly increasing")
            sample_times = None
        elif steps is not None and (sample_times[0] < 1 or sample_times[-1] > steps):
            errors.append(f"simulation.sample_times: must lie in [1, {steps}]")
            sample_times = None
    else:
        errors.append('simulation.sample_times: expected "geometric" or a list of integers')

    inference = raw.get("inference", {}) if isinstance(raw.get("inference"), dict) else {}
    rank_tol = inference.get("rank_tol", 1e-10)
    if not isinstance(rank_tol, (int, float)) or rank_tol <= 0:
        errors.append("inference.rank_tol: expected a positive number")
        rank_tol = 1e-10
    observation_time = inference.get("observation_time", steps)
    if observation_time is not None and (
        not isinstance(observation_time, int) or observation_time < 1
    ):
        errors.append("inference.observation_time: expected a positive integer")
        observation_time = steps
    if (
        observation_time is not None
        and steps is not None
        and observation_time > steps
    ):
        errors.append(f"inference.observation_time: exceeds simulation.steps = {steps}")

    output_dir = raw.get("output_dir", "out")
    if not isinstance(output_dir, str):
        errors.append("output_dir: expected a path string")
        output_dir = "out"

    if errors:
        raise ConfigError(errors)

    # Estimates are produced at every sample time; the headline
    # observation_time must therefore be on the grid.
    if observation_time not in sample_times:
        sample_times = tuple(sorted(set(sample_times) | {observation_time}))

    return ExperimentConfig(
        n_hypotheses=H,
        sending_sizes=sending_sizes,
        base_means=tuple(float(v) for v in base_means),
        perturb_range=float(perturb_range),
        model_seed=model_seed,
        receiving_sizes=receiving_sizes,
        graph_csv=graph_csv,
        graph_density=float(graph_density) if graph_density is not None else None,
        graph_seed=graph_seed,
        steps=steps,
        sample_times=sample_times,
        trials=trials,
        sim_seed=sim_seed,
        rank_tol=float(rank_tol),
        observation_time=observation_time,
        output_dir=output_dir,
    )


def _mode_smallest(values: list[int]) -> int:
    counts = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    top = max(counts.values())
    return min(v for v, c in counts.items() if c == top)


def run_experiment(
    config: ExperimentConfig,
    out_dir: str | None = None,
    seed_override: int | None = None,
) -> ExperimentReport:
    """Run the full pipeline described by ``config`` and write its outputs.

    Produces ``graph.csv``, ``divergence_matrix.csv``, one trajectory CSV
    and one estimates JSON per trial, ``summary.json`` (deterministic for a
    fixed config) and ``run_meta.json`` (timestamps live here only).
    """
    if seed_override is not None:
        config = ExperimentConfig(**{**config.__dict__, "sim_seed": seed_override})
    out = Path(out_dir) if out_dir is not None else Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    partition = config.partition
    if config.graph_csv is not None:
        graph = read_graph_csv(config.graph_csv)
        if graph.partition != partition:
            raise ConfigError(
                [f"graph file partition {graph.partition} disagrees with config {partition}"]
            )
    else:
        graph = random_weak_graph(partition, config.graph_density, config.graph_seed)

    S = partition.num_sending
    suite, D = diversity_model(
        config.n_hypotheses, S, config.base_means, config.perturb_range, config.model_seed
    )

    profile = limiting_profile(graph)
    x_true = profile.X
    receiving_ids = partition.receiving_agent_ids()

    theta_theory: dict[int, int] = {}
    ties: dict[int, bool] = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AssumptionTieWarning)
        for col, agent_id in enumerate(receiving_ids):
            prof = divergence_profile(D, x_true[:, col])
            theta_theory[agent_id] = prof.theta_star
            ties[agent_id] = prof.tied

    write_graph_csv(graph, out / "graph.csv")
    write_divergence_csv(D, out / "divergence_matrix.csv")

    trajectories: list[Trajectory] = []
    estimates: list[list[dict]] = []
    for t in range(config.trials):
        traj = simulate(
            graph,
            suite,
            horizon=config.steps,
            sample_times=config.sample_times,
            seed=config.sim_seed + t,
        )
        export_trajectory_csv(traj, out / f"trajectory_trial{t:02d}.csv")
        trajectories.append(traj)

        records = []
        for col, agent_id in enumerate(receiving_ids):
            for time in config.sample_times:
                y_hat = empirical_rates(traj, agent_id, time)
                theta_hat, _ = estimate_theta_star(y_hat)
                sys = build_system(D, theta_hat, y_hat, tol=config.rank_tol)
                est = solve_topology(sys) if sys.feasible else None
                records.append(
                    estimate_record(agent_id, sys, est, x_true[:, col], time)
                )
        estimates.append(records)
        with open(out / f"estimates_trial{t:02d}.json", "w") as fh:
            json.dump(records, fh, indent=2, sort_keys=True)
            fh.write("\n")

    summary = _build_summary(config, partition, theta_theory, ties, x_true, estimates)
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "run_meta.json", "w") as fh:
        json.dump(
            {
                "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                "config_output_dir": str(out),
            },
            fh,
            indent=2,
        )
        fh.write("\n")

    report = ExperimentReport(
        config=config,
        out_dir=out,
        graph=graph,
        suite=suite,
        D=D,
        x_true=x_true,
        trajectories=trajectories,
        estimates=estimates,
        summary=summary,
    )
    emit_plot_data(report)
    return report


def _build_summary(config, partition, theta_theory, ties, x_true, estimates) -> dict:
    receiving_ids = partition.receiving_agent_ids()
    agents = []
    for col, agent_id in enumerate(receiving_ids):
        at_primary = [
            rec
            for trial in estimates
            for rec in trial
            if rec["agent"] == agent_id and rec["observation_time"] == config.observation_time
        ]
        feasible = all(rec["feasible"] for rec in at_primary)
        linfs = [rec["l_inf"] for rec in at_primary if rec["l_inf"] is not None]
        l2s = [rec["l2"] for rec in at_primary if rec["l2"] is not None]
        agents.append(
            {
                "agent": agent_id,
                "theta_star_theory": theta_theory[agent_id],
                "theta_star_estimated": _mode_smallest([r["theta_star"] for r in at_primary]),
                "assumption_tie": ties[agent_id],
                "rank": _mode_smallest([r["rank"] for r in at_primary]),
                "feasible": feasible,
                "status": "ok" if feasible else "non-identifiable",
                "x_true": [float(v) for v in x_true[:, col]],
                "median_l_inf": statistics.median(linfs) if linfs else None,
                "median_l2": statistics.median(l2s) if l2s else None,
            }
        )
    return {
        "n_agents": partition.n_agents,
        "n_hypotheses": config.n_hypotheses,
        "n_sending_subnetworks": partition.num_sending,
        "n_receiving_subnetworks": partition.num_receiving,
        "trials": config.trials,
        "observation_time": config.observation_time,
        "identifiable": all(a["feasible"] for a in agents),
        "agents": agents,
    }


def emit_plot_data(report: ExperimentReport) -> None:
    """Write plot-ready CSVs from a finished run.

    ``belief_evolution.csv`` holds each agent's combined beliefs (linear
    domain) over the sample grid of trial 0; ``weights.csv`` compares true
    and estimated aggregate weights at the headline observation time (the
    estimate column is empty when the system is not identifiable).
    """
    out = report.out_dir
    traj = report.trajectories[0]
    n_agents = traj.log_mu.shape[1]
    H = traj.log_mu.shape[2]

    with open(out / "belief_evolution.csv", "w") as fh:
        fh.write("time,agent," + ",".join(f"mu_{h + 1}" for h in range(H)) + "\n")
        for t_idx, time in enumerate(traj.sample_times):
            mu = np.exp(traj.log_mu[t_idx])
            for a in range(n_agents):
                cells = ",".join(f"{v:.17g}" for v in mu[a])
                fh.write(f"{time},{a + 1},{cells}\n")

    primary = {
        rec["agent"]: rec
        for rec in report.estimates[0]
        if rec["observation_time"] == report.config.observation_time
    }
    with open(out / "weights.csv", "w") as fh:
        fh.write("agent,s,x_true,x_hat\n")
        for agent_id in report.config.partition.receiving_agent_ids():
            rec = primary[agent_id]
            for s in range(len(rec["x_true"])):
                x_hat = "" if rec["x_hat"] is None else f"{rec['x_hat'][s]:.17g}"
                fh.write(f"{agent_id},{s + 1},{rec['x_true'][s]:.17g},{x_hat}\n")
