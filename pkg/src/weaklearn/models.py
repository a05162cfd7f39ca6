"""Statistical models of the sending sub-networks and their divergence matrix.

Every agent scores its scalar observations against a family of unit-variance
Gaussian likelihoods, one per hypothesis.  What drives the limiting beliefs
of the network is the ``H x S`` divergence matrix ``D``: entry ``(theta, s)``
is the KL divergence between sending sub-network ``s``'s true distribution
and its likelihood at hypothesis ``theta``, in nats.

Two constructions are provided.  The *structured Gaussian* model gives every
sub-network the same likelihood means, making ``D`` half a Euclidean distance
matrix (and the inverse problem rank-deficient); the *diversity* model
perturbs each sub-network's likelihood means independently, which restores
full column rank almost surely.

Hypotheses carry 1-based labels ``1..H``; arrays over hypotheses use
position ``label - 1``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

__all__ = [
    "TIE_REL_TOL",
    "SIMPLEX_TOL",
    "ModelError",
    "AssumptionTieWarning",
    "HypothesisSet",
    "AgentModel",
    "ModelSuite",
    "DivergenceMatrix",
    "DivergenceProfile",
    "gaussian_kl",
    "build_edm",
    "structured_gaussian_model",
    "diversity_model",
    "divergence_profile",
    "sample_observation",
    "write_divergence_csv",
]

# Relative tolerance below which two average divergences count as tied,
# i.e. the unique-minimizer assumption is considered violated.
TIE_REL_TOL = 1e-9

# Slack allowed when checking that a weight vector lies on the simplex.
SIMPLEX_TOL = 1e-9


class ModelError(ValueError):
    """Invalid model construction (duplicate means, bad dimensions, ...)."""


class AssumptionTieWarning(UserWarning):
    """The average divergence has no unique minimizer at this weight vector."""


@dataclass(frozen=True)
class HypothesisSet:
    """Finite hypothesis set, labeled ``1..count``."""

    count: int

    def __post_init__(self):
        if self.count < 2:
            raise ModelError("need at least two hypotheses")

    def labels(self) -> range:
        return range(1, self.count + 1)


@dataclass(frozen=True)
class AgentModel:
    """True distribution and likelihood family of one agent.

    Both are unit-variance Gaussians: the true distribution has mean
    ``true_mean``, the likelihood at hypothesis ``theta`` has mean
    ``likelihood_means[theta - 1]``.
    """

    true_mean: float
    likelihood_means: np.ndarray

    def __post_init__(self):
        means = np.array(self.likelihood_means, dtype=float)
        means.setflags(write=False)
        object.__setattr__(self, "likelihood_means", means)
        if not (np.isfinite(self.true_mean) and np.all(np.isfinite(means))):
            raise ModelError("all means must be finite")


@dataclass(frozen=True)
class ModelSuite:
    """Models for a whole network: one shared model per sending sub-network.

    ``sending_models[s]`` is used by every agent of sending sub-network
    ``s + 1`` (homogeneity within sub-networks).  Receiving agents fall back
    to ``default_receiving_model`` unless ``receiving_models`` overrides them
    by 1-based agent id.
    """

    hypothesis_set: HypothesisSet
    sending_models: tuple[AgentModel, ...]
    default_receiving_model: AgentModel
    receiving_models: Mapping[int, AgentModel] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "sending_models", tuple(self.sending_models))
        H = self.hypothesis_set.count
        for m in (*self.sending_models, self.default_receiving_model, *self.receiving_models.values()):
            if len(m.likelihood_means) != H:
                raise ModelError(
                    f"agent model has {len(m.likelihood_means)} likelihood means, expected {H}"
                )

    @property
    def num_sending(self) -> int:
        return len(self.sending_models)

    def receiving_model(self, agent_id: int) -> AgentModel:
        """Model for receiving agent ``agent_id`` (1-based)."""
        return self.receiving_models.get(agent_id, self.default_receiving_model)


@dataclass(frozen=True)
class DivergenceMatrix:
    """``H x S`` matrix of KL divergences (nats), all finite and nonnegative."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if v.ndim != 2:
            raise ModelError("divergence matrix must be 2-D")
        if not np.all(np.isfinite(v)):
            raise ModelError("divergences must be finite")
        if np.any(v < 0):
            raise ModelError("divergences must be nonnegative")

    @property
    def n_hypotheses(self) -> int:
        return self.values.shape[0]

    @property
    def n_sending(self) -> int:
        return self.values.shape[1]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True)
class DivergenceProfile:
    """Average divergence per hypothesis at one receiving agent.

    ``theta_star`` is the 1-based minimizing label; ``tied`` flags a
    violation of the unique-minimizer assumption (to within relative
    tolerance ``TIE_REL_TOL``).
    """

    values: np.ndarray
    theta_star: int
    tied: bool


def gaussian_kl(mean_f: float, mean_l: float) -> float:
    """KL divergence between unit-variance Gaussians: ``(mean_f - mean_l)**2 / 2``."""
    return 0.5 * (mean_f - mean_l) ** 2


def build_edm(points) -> np.ndarray:
    """Euclidean distance matrix of scalar points: entry ``(i, j) = (p_i - p_j)**2``."""
    p = np.asarray(points, dtype=float)
    return (p[:, None] - p[None, :]) ** 2


def structured_gaussian_model(means, n_sending: int) -> tuple[ModelSuite, DivergenceMatrix]:
    """All sub-networks share one Gaussian likelihood family.

    ``means`` lists the ``H`` likelihood means; sending sub-network ``s``'s
    true distribution has mean ``means[s - 1]``, so ``D`` is half the first
    ``n_sending`` columns of the Euclidean distance matrix of ``means``.

    Raises
    ------
    ModelError
        If ``n_sending > H`` or the means are not pairwise distinct (the
        sub-networks must have different true means).
    """
    means = np.asarray(means, dtype=float)
    H = len(means)
    if not 1 <= n_sending <= H:
        raise ModelError(f"need 1 <= n_sending <= H, got n_sending={n_sending}, H={H}")
    if len(np.unique(means)) != H:
        raise ModelError("likelihood means must be pairwise distinct")

    suite = ModelSuite(
        hypothesis_set=HypothesisSet(H),
        sending_models=tuple(
            AgentModel(true_mean=means[s], likelihood_means=means) for s in range(n_sending)
        ),
        default_receiving_model=AgentModel(true_mean=means[0], likelihood_means=means),
    )
    D = np.array(
        [[gaussian_kl(means[s], means[t]) for s in range(n_sending)] for t in range(H)]
    )
    return suite, DivergenceMatrix(D)


def diversity_model(
    n_hypotheses: int,
    n_sending: int,
    base_means,
    perturb_range: float,
    seed: int,
) -> tuple[ModelSuite, DivergenceMatrix]:
    """Per-sub-network likelihood means, independently perturbed.

    Sub-network ``s`` keeps true mean ``base_means[s - 1]`` but evaluates
    hypothesis ``theta`` with mean ``base_means[theta - 1] + u``, where each
    ``u`` is an independent uniform draw from
    ``[-perturb_range, perturb_range]``.  With ``perturb_range = 0`` this
    reproduces the structured Gaussian divergences exactly.
    """
    if n_hypotheses < 2:
        raise ModelError("need at least two hypotheses")
    if n_sending < 1:
        raise ModelError("need at least one sending sub-network")
    if perturb_range < 0:
        raise ModelError("perturb_range must be nonnegative")
    base = np.asarray(base_means, dtype=float)
    if len(base) < max(n_hypotheses, n_sending):
        raise ModelError(
            f"base_means needs at least max(H, S) = {max(n_hypotheses, n_sending)} entries, "
            f"got {len(base)}"
        )

    rng = np.random.default_rng(seed)
    u = rng.uniform(-perturb_range, perturb_range, size=(n_hypotheses, n_sending))

    sending = []
    D = np.empty((n_hypotheses, n_sending))
    for s in range(n_sending):
        lik_means = base[:n_hypotheses] + u[:, s]
        sending.append(AgentModel(true_mean=base[s], likelihood_means=lik_means))
        D[:, s] = [gaussian_kl(base[s], lik_means[t]) for t in range(n_hypotheses)]

    suite = ModelSuite(
        hypothesis_set=HypothesisSet(n_hypotheses),
        sending_models=tuple(sending),
        default_receiving_model=AgentModel(
            true_mean=base[0], likelihood_means=base[:n_hypotheses]
        ),
    )
    return suite, DivergenceMatrix(D)


def divergence_profile(D: DivergenceMatrix, x_k) -> DivergenceProfile:
    """Average divergence ``D @ x_k`` and its minimizing hypothesis.

    ``x_k`` must be a probability vector over the sending sub-networks.  A
    near-tie of the two smallest averages (relative tolerance
    ``TIE_REL_TOL``) sets ``tied`` and emits an :class:`AssumptionTieWarning`;
    the reported ``theta_star`` is then the smallest tied label.
    """
    Dv = np.asarray(D)
    x = np.asarray(x_k, dtype=float)
    if x.shape != (Dv.shape[1],):
        raise ValueError(f"weight vector has shape {x.shape}, expected ({Dv.shape[1]},)")
    if np.any(x < -SIMPLEX_TOL) or abs(x.sum() - 1.0) > SIMPLEX_TOL:
        raise ValueError("x_k must be a probability vector")

    values = Dv @ x
    order = np.argsort(values, kind="stable")
    theta_star = int(order[0]) + 1
    tied = False
    if len(values) > 1:
        gap = values[order[1]] - values[order[0]]
        tied = bool(gap <= TIE_REL_TOL * max(1.0, abs(values[order[0]])))
    if tied:
        warnings.warn(
            f"average divergence is tied at its minimum (theta={theta_star}); "
            "the unique-minimizer assumption fails for this weight vector",
            AssumptionTieWarning,
            stacklevel=2,
        )
    return DivergenceProfile(values=values, theta_star=theta_star, tied=tied)


def sample_observation(model: AgentModel, rng: np.random.Generator) -> float:
    """One draw from the agent's true distribution (unit-variance Gaussian)."""
    return float(rng.normal(model.true_mean, 1.0))


def write_divergence_csv(D: DivergenceMatrix, path) -> None:
    """Write ``D`` row-major as CSV with a ``# H S`` header."""
    with open(path, "w") as fh:
        fh.write(f"# {D.n_hypotheses} {D.n_sending}\n")
        for row in D.values:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
