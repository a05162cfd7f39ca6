"""Recovering aggregate influence weights from limiting belief rates.

The rate vector observed at a receiving agent is linear in the aggregate
weights ``x`` of the sending sub-networks: stacking the pairwise divergence
differences into ``B`` and appending an all-ones convexity row gives an
augmented system ``C x = y_tilde``.  The system identifies ``x`` exactly
when ``C`` has full column rank, which requires at least as many hypotheses
as sending sub-networks; under the structured Gaussian model the rank
collapses to 2 regardless of dimensions, whereas independently perturbed
divergences give full rank almost surely.

Empirical rate vectors are noisy, so the solver minimizes the residual over
the probability simplex: nonnegative least squares on the augmented system
followed by a Euclidean projection onto the simplex.  With exact data and
full rank this reduces to the exact solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .models import DivergenceMatrix

__all__ = [
    "RANK_TOL",
    "NonIdentifiableError",
    "ConstraintInfeasibleError",
    "InverseSystem",
    "RankVerdict",
    "TopologyEstimate",
    "EstimationError",
    "build_system",
    "rank_feasibility",
    "solve_topology",
    "estimation_error",
    "project_to_simplex",
    "estimate_record",
]

# Singular values below RANK_TOL * sigma_max do not count toward the rank;
# separates exact structural deficiency (machine-epsilon singular values)
# from small but genuine ones.
RANK_TOL = 1e-10


class NonIdentifiableError(ValueError):
    """rank(C) < S: the constrained linear system has no unique solution."""

    def __init__(self, rank: int, n_sending: int):
        super().__init__(
            f"system is not identifiable: rank(C) = {rank} < {n_sending} sending sub-networks"
        )
        self.rank = rank
        self.n_sending = n_sending


class ConstraintInfeasibleError(RuntimeError):
    """The active-set solver could not produce a simplex-feasible estimate.

    Does not occur for valid inputs; indicates corrupted data.
    """


@dataclass(frozen=True)
class InverseSystem:
    """Augmented constrained linear system for one receiving agent.

    ``B`` has row ``theta`` equal to ``d[theta_star] - d[theta]`` (so the
    ``theta_star`` row is zero); ``C`` appends the all-ones convexity row and
    ``y_tilde`` the matching 1.  ``rank`` is the numerical rank of ``C`` at
    tolerance ``RANK_TOL``; the system is ``feasible`` iff ``rank`` equals
    the number of sending sub-networks.
    """

    B: np.ndarray
    C: np.ndarray
    y_tilde: np.ndarray
    theta_star: int
    rank: int
    feasible: bool

    def __post_init__(self):
        for name in ("B", "C", "y_tilde"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_sending(self) -> int:
        return self.C.shape[1]

    @property
    def n_hypotheses(self) -> int:
        return self.B.shape[0]


@dataclass(frozen=True)
class RankVerdict:
    """Numerical rank report plus the H >= S necessary condition."""

    rank: int
    feasible: bool
    n_hypotheses: int
    n_sending: int

    @property
    def necessary_condition_met(self) -> bool:
        """At least as many hypotheses as sending sub-networks."""
        return self.n_hypotheses >= self.n_sending


@dataclass(frozen=True)
class TopologyEstimate:
    """Recovered aggregate weights, guaranteed to lie on the simplex.

    ``residual`` is the 2-norm of ``C @ x_hat - y_tilde``; ``condition`` is
    the ratio of extreme singular values of ``C`` (inf when rank-deficient).
    ``boundary_zeros`` lists sub-networks (1-based) whose recovered weight
    is exactly zero, since the underlying model assumes strictly positive
    weights.
    """

    x_hat: np.ndarray
    residual: float
    condition: float
    boundary_zeros: tuple[int, ...]

    def __post_init__(self):
        x = np.array(self.x_hat, dtype=float)
        x.setflags(write=False)
        object.__setattr__(self, "x_hat", x)
        if np.any(x < 0) or abs(x.sum() - 1.0) > 1e-9:
            raise ValueError("estimate must lie on the probability simplex")


@dataclass(frozen=True)
class EstimationError:
    """Sup-norm and Euclidean distance between estimated and true weights."""

    l_inf: float
    l2: float


def _numerical_rank(M: np.ndarray, tol: float) -> int:
    sigma = np.linalg.svd(M, compute_uv=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int(np.sum(sigma > tol * sigma[0]))


def build_system(D: DivergenceMatrix, theta_star: int, y_k, tol: float = RANK_TOL) -> InverseSystem:
    """Assemble the augmented system from divergences, minimizer and rates.

    Row ``theta`` of ``B`` is ``d[theta_star, :] - d[theta, :]``; ``C``
    stacks ``B`` over the all-ones row, ``y_tilde`` stacks ``y_k`` over 1.
    ``theta_star`` is a 1-based label; ``tol`` is the relative
    singular-value threshold used for the stored rank and feasibility.
    """
    Dv = np.asarray(D)
    H, S = Dv.shape
    if not 1 <= theta_star <= H:
        raise ValueError(f"theta_star must lie in 1..{H}, got {theta_star}")
    y = np.asarray(y_k, dtype=float)
    if y.shape != (H,):
        raise ValueError(f"rate vector has shape {y.shape}, expected ({H},)")

    B = Dv[theta_star - 1][None, :] - Dv
    C = np.vstack([B, np.ones(S)])
    y_tilde = np.append(y, 1.0)
    rank = _numerical_rank(C, tol)
    return InverseSystem(
        B=B, C=C, y_tilde=y_tilde, theta_star=theta_star, rank=rank, feasible=rank == S
    )


def rank_feasibility(sys: InverseSystem, tol: float = RANK_TOL) -> RankVerdict:
    """Numerical rank of the augmented matrix and the identifiability verdict.

    The rank counts singular values above ``tol`` times the largest; the
    system is feasible iff the rank equals the number of sending
    sub-networks, which presupposes the necessary condition H >= S.
    """
    rank = _numerical_rank(sys.C, tol)
    return RankVerdict(
        rank=rank,
        feasible=rank == sys.n_sending,
        n_hypotheses=sys.n_hypotheses,
        n_sending=sys.n_sending,
    )


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex.

    Sort-based algorithm; leaves vectors already on the simplex unchanged.
    """
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, len(v) + 1)
    rho = np.max(ks[u - (css - 1.0) / ks > 0])
    tau = (css[rho - 1] - 1.0) / rho
    return np.maximum(v - tau, 0.0)


def solve_topology(sys: InverseSystem) -> TopologyEstimate:
    """Simplex-constrained least-squares solution of the augmented system.

    Nonnegative least squares (active set) gives ``x >= 0`` with the
    convexity constraint carried by the last row of ``C``; the output is
    then projected onto the simplex so the sum is exact.  With exact rates
    and full column rank this recovers the true weights.

    Raises
    ------
    NonIdentifiableError
        If ``rank(C)`` is below the number of sending sub-networks.
    ConstraintInfeasibleError
        If the active-set solver fails (corrupted data).
    """
    if not sys.feasible:
        raise NonIdentifiableError(sys.rank, sys.n_sending)
    try:
        x, _ = nnls(sys.C, sys.y_tilde)
    except Exception as exc:
        raise ConstraintInfeasibleError(f"active-set solver failed: {exc}") from exc
    if not np.all(np.isfinite(x)) or x.sum() <= 0:
        raise ConstraintInfeasibleError(
            f"active-set solver returned an unusable iterate (sum {x.sum():.3g})"
        )
    x = project_to_simplex(x)

    sigma = np.linalg.svd(sys.C, compute_uv=False)
    condition = float(sigma[0] / sigma[-1]) if sigma[-1] > 0 else float("inf")
    residual = float(np.linalg.norm(sys.C @ x - sys.y_tilde))
    zeros = tuple(int(i) + 1 for i in np.flatnonzero(x == 0.0))
    return TopologyEstimate(x_hat=x, residual=residual, condition=condition, boundary_zeros=zeros)


def estimation_error(x_hat, x_true) -> EstimationError:
    """Sup-norm and Euclidean norm of the estimation error."""
    a = np.asarray(x_hat, dtype=float)
    b = np.asarray(x_true, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return EstimationError(l_inf=float(np.max(np.abs(diff))), l2=float(np.linalg.norm(diff)))


def estimate_record(
    agent_id: int,
    sys: InverseSystem,
    estimate: TopologyEstimate | None,
    x_true,
    observation_time: int,
) -> dict:
    """JSON-ready record for one receiving agent at one observation time.

    For infeasible systems ``estimate`` is None and the estimate-dependent
    fields are null.
    """
    x_true = np.asarray(x_true, dtype=float)
    record = {
        "agent": int(agent_id),
        "theta_star": int(sys.theta_star),
        "rank": int(sys.rank),
        "feasible": bool(sys.feasible),
        "x_hat": None,
        "x_true": [float(v) for v in x_true],
        "l_inf": None,
        "l2": None,
        "residual": None,
        "observation_time": int(observation_time),
    }
    if estimate is not None:
        err = estimation_error(estimate.x_hat, x_true)
        record.update(
            x_hat=[float(v) for v in estimate.x_hat],
            l_inf=err.l_inf,
            l2=err.l2,
            residual=estimate.residual,
        )
    return record
