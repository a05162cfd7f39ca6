"""Log-linear belief dynamics over a weak graph.

Each step, every agent scores its newest private observation against its
likelihood family (a Bayesian update of the current belief), then replaces
its belief with the weight-averaged logs of the neighbors' intermediate
beliefs.  All belief arithmetic lives in the log domain: away from the
winning hypothesis, beliefs decay exponentially and would underflow a linear
representation within a few hundred steps.

The recorded quantity at sample time ``i`` is ``log psi / i``, the empirical
per-step decay rate, which converges to the theoretical rate gap computed by
:func:`theoretical_rates`; those rates are the data that the topology
inversion consumes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .graphs import WeakGraph, limiting_profile
from .models import (
    TIE_REL_TOL,
    DivergenceMatrix,
    ModelSuite,
    divergence_profile,
)

__all__ = [
    "NORMALIZATION_TOL",
    "AssumptionViolationError",
    "BeliefState",
    "Trajectory",
    "bayesian_update",
    "combine_step",
    "geometric_sample_times",
    "simulate",
    "empirical_rates",
    "estimate_theta_star",
    "theoretical_rates",
    "export_trajectory_csv",
]

# A log-belief vector must satisfy logsumexp(v) == 0 within this bound.
NORMALIZATION_TOL = 1e-10


class AssumptionViolationError(ValueError):
    """The average divergence has no unique minimizer (tied hypotheses)."""


@dataclass(frozen=True)
class BeliefState:
    """One agent's belief over the hypotheses, stored as log-probabilities."""

    log_belief: np.ndarray

    def __post_init__(self):
        v = np.array(self.log_belief, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "log_belief", v)
        if not np.all(np.isfinite(v)):
            raise ValueError("log-beliefs must be finite (all hypotheses keep positive mass)")
        if abs(logsumexp(v)) > NORMALIZATION_TOL:
            raise ValueError(f"log-beliefs not normalized: logsumexp = {logsumexp(v):.3g}")

    @classmethod
    def uniform(cls, n_hypotheses: int) -> "BeliefState":
        return cls(np.full(n_hypotheses, -np.log(n_hypotheses)))

    @property
    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_belief)


@dataclass(frozen=True)
class Trajectory:
    """Belief snapshots of one simulation run.

    ``log_psi[t]`` and ``log_mu[t]`` hold the network's intermediate and
    combined log-beliefs (shape ``(n_agents, H)``) at ``sample_times[t]``.
    ``tied_agents`` lists receiving agents (1-based ids) whose predicted
    limiting hypothesis could not be certified because the unique-minimizer
    assumption failed.
    """

    sample_times: tuple[int, ...]
    log_psi: np.ndarray
    log_mu: np.ndarray
    horizon: int
    seed: int
    theta_star_theory: dict[int, int]
    tied_agents: tuple[int, ...]

    def _time_index(self, time: int) -> int:
        try:
            return self.sample_times.index(time)
        except ValueError:
            raise KeyError(
                f"time {time} not recorded; sample times are {list(self.sample_times)}"
            ) from None

    def log_psi_at(self, time: int) -> np.ndarray:
        """Intermediate log-beliefs of all agents at a recorded time."""
        return self.log_psi[self._time_index(time)]

    def log_mu_at(self, time: int) -> np.ndarray:
        """Combined log-beliefs of all agents at a recorded time."""
        return self.log_mu[self._time_index(time)]


def bayesian_update(prior: BeliefState, log_likelihoods) -> BeliefState:
    """Fold one observation's log-likelihoods into a belief.

    Adds the log-likelihoods to the log-prior and renormalizes; in the
    linear domain this is the usual multiply-and-normalize Bayes step.
    """
    ll = np.asarray(log_likelihoods, dtype=float)
    log_post = prior.log_belief + ll
    return BeliefState(log_post - logsumexp(log_post))


def combine_step(neighbor_log_psis) -> BeliefState:
    """Geometric-mean combination of neighbors' intermediate beliefs.

    ``neighbor_log_psis`` is a sequence of ``(weight, log_psi)`` pairs whose
    weights (one column of the combination matrix, restricted to
    in-neighbors) must be nonnegative and sum to 1.
    """
    weights = np.array([w for w, _ in neighbor_log_psis], dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights must be nonnegative and sum to 1, got sum {weights.sum():.12g}")
    combo = sum(w * np.asarray(lp, dtype=float) for w, lp in neighbor_log_psis)
    return BeliefState(combo - logsumexp(combo))


def geometric_sample_times(horizon: int) -> tuple[int, ...]:
    """Doubling grid ``10, 20, 40, ...`` capped and terminated at ``horizon``."""
    times = []
    t = 10
    while t < horizon:
        times.append(t)
        t *= 2
    times.append(horizon)
    return tuple(times)


def _log_normalize_rows(x: np.ndarray) -> np.ndarray:
    """Shift each row so its logsumexp is zero (finite inputs only)."""
    m = x.max(axis=1, keepdims=True)
    return x - (m + np.log(np.exp(x - m).sum(axis=1, keepdims=True)))


def _likelihood_means_by_agent(g: WeakGraph, suite: ModelSuite) -> tuple[np.ndarray, np.ndarray]:
    """Per-agent true means (n,) and likelihood means (n, H)."""
    part = g.partition
    H = suite.hypothesis_set.count
    true_means = np.empty(part.n_agents)
    lik_means = np.empty((part.n_agents, H))
    for s in range(part.num_sending):
        model = suite.sending_models[s]
        sl = part.sending_slice(s)
        true_means[sl] = model.true_mean
        lik_means[sl] = model.likelihood_means
    for agent_id in part.receiving_agent_ids():
        model = suite.receiving_model(agent_id)
        true_means[agent_id - 1] = model.true_mean
        lik_means[agent_id - 1] = model.likelihood_means
    return true_means, lik_means


def simulate(
    g: WeakGraph,
    suite: ModelSuite,
    horizon: int,
    sample_times=None,
    seed: int = 0,
) -> Trajectory:
    """Run the two-step belief recursion for ``horizon`` steps.

    All agents start from the uniform belief.  Each step the whole network
    synchronously performs the Bayesian update on a fresh private
    observation, then the log-linear combination along the graph.  Snapshots
    of both belief stages are kept at ``sample_times`` (default: the
    geometric grid).  Deterministic for a fixed seed.

    The predicted limiting hypothesis of each receiving agent is computed
    up front from the limiting profile; agents whose average divergence is
    tied are reported in ``tied_agents`` rather than certified.
    """
    if suite.num_sending != g.partition.num_sending:
        raise ValueError(
            f"model suite has {suite.num_sending} sending sub-networks, "
            f"graph has {g.partition.num_sending}"
        )
    if sample_times is None:
        sample_times = geometric_sample_times(horizon)
    sample_times = tuple(int(t) for t in sample_times)
    if any(t2 <= t1 for t1, t2 in zip(sample_times, sample_times[1:])):
        raise ValueError("sample times must be strictly increasing")
    if sample_times and (sample_times[0] < 1 or sample_times[-1] > horizon):
        raise ValueError("sample times must lie in [1, horizon]")

    D = _suite_divergences(suite)
    X = limiting_profile(g).X
    theta_star: dict[int, int] = {}
    tied: list[int] = []
    for col, agent_id in enumerate(g.partition.receiving_agent_ids()):
        prof = divergence_profile(D, X[:, col])
        theta_star[agent_id] = prof.theta_star
        if prof.tied:
            tied.append(agent_id)

    n = g.partition.n_agents
    H = suite.hypothesis_set.count
    true_means, lik_means = _likelihood_means_by_agent(g, suite)

    rng = np.random.default_rng(seed)
    observations = rng.normal(loc=true_means, scale=1.0, size=(horizon, n))

    At = g.A.T
    wanted = set(sample_times)
    psi_snaps = np.empty((len(sample_times), n, H))
    mu_snaps = np.empty((len(sample_times), n, H))
    snap = 0

    log_mu = np.full((n, H), -np.log(H))
    for i in range(1, horizon + 1):
        log_lik = -0.5 * (observations[i - 1][:, None] - lik_means) ** 2
        log_psi = _log_normalize_rows(log_mu + log_lik)
        log_mu = _log_normalize_rows(At @ log_psi)
        if i in wanted:
            psi_snaps[snap] = log_psi
            mu_snaps[snap] = log_mu
            snap += 1

    return Trajectory(
        sample_times=sample_times,
        log_psi=psi_snaps,
        log_mu=mu_snaps,
        horizon=horizon,
        seed=seed,
        theta_star_theory=theta_star,
        tied_agents=tuple(tied),
    )


def _suite_divergences(suite: ModelSuite) -> DivergenceMatrix:
    """Divergence matrix induced by a suite's sending models."""
    H = suite.hypothesis_set.count
    D = np.empty((H, suite.num_sending))
    for s, model in enumerate(suite.sending_models):
        D[:, s] = 0.5 * (model.true_mean - model.likelihood_means) ** 2
    return DivergenceMatrix(D)


def empirical_rates(traj: Trajectory, agent_id: int, time: int) -> np.ndarray:
    """Empirical decay rates ``log psi / time`` for one agent.

    ``agent_id`` is 1-based.  Raises ``KeyError`` if ``time`` was not
    recorded.
    """
    if not 1 <= agent_id <= traj.log_psi.shape[1]:
        raise ValueError(f"agent id {agent_id} out of range 1..{traj.log_psi.shape[1]}")
    return traj.log_psi_at(time)[agent_id - 1] / time


def estimate_theta_star(y_hat) -> tuple[int, bool]:
    """Maximizing hypothesis of an empirical rate vector.

    Returns the 1-based label and an ambiguity flag; near-ties (relative
    tolerance ``TIE_REL_TOL``) resolve to the smallest tied label with the
    flag set.
    """
    y = np.asarray(y_hat, dtype=float)
    best = float(np.max(y))
    tol = TIE_REL_TOL * max(1.0, abs(best))
    contenders = np.flatnonzero(best - y <= tol)
    return int(contenders[0]) + 1, len(contenders) > 1


def theoretical_rates(D: DivergenceMatrix, x_k) -> np.ndarray:
    """Limiting rate gaps ``y(theta) = avg_div(theta_star) - avg_div(theta)``.

    Zero at the minimizing hypothesis, strictly negative elsewhere.

    Raises
    ------
    AssumptionViolationError
        If the average divergence at ``x_k`` has no unique minimizer.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        prof = divergence_profile(D, x_k)
    if prof.tied:
        raise AssumptionViolationError(
            "average divergence has tied minimizers; limiting rates are undefined"
        )
    return prof.values[prof.theta_star - 1] - prof.values


def export_trajectory_csv(traj: Trajectory, path) -> None:
    """Write snapshots as CSV rows ``time,agent,hypothesis,log_psi``.

    Rows are ordered by time, then agent, then hypothesis; agent and
    hypothesis are 1-based; values are natural logs.
    """
    n_agents = traj.log_psi.shape[1]
    n_hyp = traj.log_psi.shape[2]
    with open(path, "w") as fh:
        fh.write("time,agent,hypothesis,log_psi\n")
        for t_idx, time in enumerate(traj.sample_times):
            for a in range(n_agents):
                for h in range(n_hyp):
                    fh.write(f"{time},{a + 1},{h + 1},{traj.log_psi[t_idx, a, h]:.17g}\n")
