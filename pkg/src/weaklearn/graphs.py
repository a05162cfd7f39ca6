"""Weak graphs: block-structured combination matrices and their limiting influence.

A weak graph splits a network of ``N`` agents into sending sub-networks
(influence flows out of them, never back in) and receiving sub-networks.
With agents ordered sending-first, the left-stochastic combination matrix
``A`` (entry ``A[l, k]`` is the weight agent ``k`` assigns to agent ``l``)
has the block form::

    A = [ A_S   A_SR ]
        [  0    A_R  ]

where ``A_S`` is block-diagonal over the sending sub-networks.  As the
matrix power ``A**i`` grows, it converges to::

    A_inf = [ E   Omega ]        Omega = E @ W,   W = A_SR @ inv(I - A_R)
            [ 0     0   ]

with ``E`` stacking the Perron eigenvectors of the sending blocks.  Column
``k`` of ``Omega`` gives the limiting influence each sending agent exerts on
receiving agent ``k``; summing it over the agents of each sending
sub-network yields the aggregate weights that the inversion machinery in
:mod:`weaklearn.inverse` recovers.

Agent ids are 1-based (``1..N``) in diagnostics and file formats; array
positions are id minus one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

__all__ = [
    "COLUMN_SUM_TOL",
    "GraphValidationError",
    "PerronConvergenceError",
    "ReceivingConnectivityError",
    "Partition",
    "WeakGraph",
    "LimitingProfile",
    "weak_graph_diagnostics",
    "validate_weak_graph",
    "perron_vector",
    "limiting_profile",
    "aggregate_weights",
    "matrix_power_limit",
    "random_weak_graph",
    "write_graph_csv",
    "read_graph_csv",
]

# Absolute tolerance on column sums; loose enough for text-parsed matrices.
COLUMN_SUM_TOL = 1e-9


class GraphValidationError(ValueError):
    """Combination matrix violates the weak-graph invariants.

    The ``diagnostics`` attribute lists every violated invariant, each
    naming the offending indices.
    """

    def __init__(self, diagnostics: list[str]):
        super().__init__("invalid weak graph:\n  " + "\n  ".join(diagnostics))
        self.diagnostics = diagnostics


class PerronConvergenceError(RuntimeError):
    """Power iteration failed to converge (non-primitive or ill-conditioned block)."""


class ReceivingConnectivityError(ValueError):
    """(I - A_R) is numerically singular.

    Signals that some receiving agents are not (even indirectly) anchored to
    a sending sub-network, so the geometric series of receiving-to-receiving
    hops does not die out.
    """


@dataclass(frozen=True)
class Partition:
    """Agent partition: sending sub-networks first, then receiving ones.

    ``sending_sizes[s]`` is the number of agents in sending sub-network
    ``s + 1``; likewise for ``receiving_sizes``.  Agents are numbered
    ``1..N`` contiguously in that order.
    """

    sending_sizes: tuple[int, ...]
    receiving_sizes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sending_sizes", tuple(int(n) for n in self.sending_sizes))
        object.__setattr__(self, "receiving_sizes", tuple(int(n) for n in self.receiving_sizes))
        if len(self.sending_sizes) < 1 or len(self.receiving_sizes) < 1:
            raise ValueError("need at least one sending and one receiving sub-network")
        if any(n < 1 for n in self.sending_sizes + self.receiving_sizes):
            raise ValueError("all sub-network sizes must be positive")

    @property
    def num_sending(self) -> int:
        """Number of sending sub-networks (S)."""
        return len(self.sending_sizes)

    @property
    def num_receiving(self) -> int:
        """Number of receiving sub-networks (R)."""
        return len(self.receiving_sizes)

    @property
    def n_sending_agents(self) -> int:
        return sum(self.sending_sizes)

    @property
    def n_receiving_agents(self) -> int:
        return sum(self.receiving_sizes)

    @property
    def n_agents(self) -> int:
        return self.n_sending_agents + self.n_receiving_agents

    def sending_slice(self, s: int) -> slice:
        """Array slice of sending sub-network ``s`` (0-based ``s``)."""
        start = sum(self.sending_sizes[:s])
        return slice(start, start + self.sending_sizes[s])

    def receiving_slice(self, r: int) -> slice:
        """Array slice of receiving sub-network ``r`` (0-based ``r``)."""
        start = self.n_sending_agents + sum(self.receiving_sizes[:r])
        return slice(start, start + self.receiving_sizes[r])

    def receiving_agent_ids(self) -> list[int]:
        """1-based ids of all receiving agents, in order."""
        return list(range(self.n_sending_agents + 1, self.n_agents + 1))


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class WeakGraph:
    """A validated weak graph: partition plus left-stochastic matrix ``A``.

    Construct through :func:`validate_weak_graph` or
    :func:`random_weak_graph`; the matrix is stored read-only.
    """

    partition: Partition
    A: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A", _readonly(self.A))

    @property
    def n_agents(self) -> int:
        return self.partition.n_agents

    def sending_block(self, s: int) -> np.ndarray:
        """Combination sub-matrix of sending sub-network ``s`` (0-based)."""
        sl = self.partition.sending_slice(s)
        return self.A[sl, sl]

    @property
    def cross_block(self) -> np.ndarray:
        """A_SR: rows are sending agents, columns receiving agents."""
        ns = self.partition.n_sending_agents
        return self.A[:ns, ns:]

    @property
    def receiving_block(self) -> np.ndarray:
        """A_R: the receiving-to-receiving sub-matrix."""
        ns = self.partition.n_sending_agents
        return self.A[ns:, ns:]


@dataclass(frozen=True)
class LimitingProfile:
    """Closed-form limit of the combination-matrix powers.

    Fields follow the block decomposition of the limiting matrix:
    ``E`` (Perron outer products, one block per sending sub-network),
    ``W = A_SR @ inv(I - A_R)``, ``Omega = E @ W`` (limiting per-agent
    influence, columns sum to 1) and ``X`` (aggregate per-sub-network
    influence, ``S x n_receiving_agents``, columns sum to 1).
    """

    E: np.ndarray
    perron_vectors: tuple[np.ndarray, ...]
    W: np.ndarray
    Omega: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        for name in ("E", "W", "Omega", "X"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        object.__setattr__(
            self, "perron_vectors", tuple(_readonly(p) for p in self.perron_vectors)
        )


def weak_graph_diagnostics(A: np.ndarray, partition: Partition) -> list[str]:
    """Check every weak-graph invariant; return the list of violations.

    An empty list means ``A`` is a valid weak-graph combination matrix for
    ``partition``.  Each diagnostic names the violated invariant and the
    offending 1-based agent indices.

    Raises
    ------
    ValueError
        If ``A`` is not square of size ``partition.n_agents`` (precondition,
        not a recoverable diagnostic).
    """
    A = np.asarray(A, dtype=float)
    n = partition.n_agents
    if A.shape != (n, n):
        raise ValueError(f"matrix shape {A.shape} does not match partition with {n} agents")

    out: list[str] = []

    bad = np.argwhere(A < 0)
    for l, k in bad:
        out.append(f"negative weight at (l={l + 1}, k={k + 1})")

    sums = A.sum(axis=0)
    for k in np.flatnonzero(np.abs(sums - 1.0) > COLUMN_SUM_TOL):
        out.append(f"non-stochastic column {k + 1}: sums to {sums[k]:.12g}")

    ns = partition.n_sending_agents
    for l, k in np.argwhere(A[ns:, :ns] != 0):
        out.append(f"forbidden receiving->sending weight at (l={ns + l + 1}, k={k + 1})")

    # A_S must be block-diagonal: no weights between distinct sending sub-networks.
    block_of = np.empty(ns, dtype=int)
    for s in range(partition.num_sending):
        block_of[partition.sending_slice(s)] = s
    for l, k in np.argwhere(A[:ns, :ns] != 0):
        if block_of[l] != block_of[k]:
            out.append(
                f"weight between distinct sending sub-networks at (l={l + 1}, k={k + 1})"
            )

    for s in range(partition.num_sending):
        sl = partition.sending_slice(s)
        block = A[sl, sl]
        n_comp, _ = connected_components(block > 0, directed=True, connection="strong")
        if n_comp != 1:
            out.append(f"sending sub-network {s + 1} is not strongly connected")
        if not np.any(np.diag(block) > 0):
            out.append(f"sending sub-network {s + 1} has no self-loop")

    for r in range(partition.num_receiving):
        sl = partition.receiving_slice(r)
        if not np.any(A[:ns, sl] > 0):
            out.append(f"receiving sub-network {r + 1} has no inbound link from any sending agent")

    return out


def validate_weak_graph(A: np.ndarray, partition: Partition) -> WeakGraph:
    """Return a validated :class:`WeakGraph`, or raise with all violations.

    Raises
    ------
    GraphValidationError
        Carries the full diagnostics list from :func:`weak_graph_diagnostics`.
    """
    diagnostics = weak_graph_diagnostics(A, partition)
    if diagnostics:
        raise GraphValidationError(diagnostics)
    return WeakGraph(partition=partition, A=np.asarray(A, dtype=float))


def perron_vector(
    block: np.ndarray, tol: float = 1e-12, max_iter: int = 10**6
) -> np.ndarray:
    """Perron eigenvector of an irreducible left-stochastic block.

    Power iteration, renormalized to unit sum each step; stops when the
    sup-norm step change drops below ``tol`` relative to the iterate.
    Returns ``p`` with ``block @ p == p``, ``p > 0`` and ``sum(p) == 1``.

    Raises
    ------
    PerronConvergenceError
        No convergence within ``max_iter`` iterations, which indicates a
        non-primitive (periodic) or ill-conditioned block.
    """
    block = np.asarray(block, dtype=float)
    n = block.shape[0]
    # Deterministic, slightly tilted start: a uniform start can sit exactly on
    # the fixed point of a periodic block and mask the non-convergence.
    p = 1.0 + np.linspace(0.0, 0.5, n)
    p /= p.sum()
    for _ in range(max_iter):
        nxt = block @ p
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - p)) <= tol * max(np.max(np.abs(nxt)), 1e-300):
            if np.any(nxt <= 0):
                raise PerronConvergenceError(
                    "power iteration converged to a vector with non-positive entries; "
                    "block is not irreducible"
                )
            return nxt
        p = nxt
    raise PerronConvergenceError(
        f"power iteration did not converge within {max_iter} iterations"
    )


def limiting_profile(g: WeakGraph) -> LimitingProfile:
    """Closed-form limiting influence of a weak graph.

    Assembles ``E`` from the sending blocks' Perron vectors, computes
    ``W = A_SR @ inv(I - A_R)`` by linear solves (never an explicit
    inverse), ``Omega = E @ W``, and the aggregate weights ``X``.

    Raises
    ------
    ReceivingConnectivityError
        If ``I - A_R`` is numerically singular, i.e. the receiving part
        violates the connected-to-a-sender assumption.
    """
    part = g.partition
    ns = part.n_sending_agents

    perrons = tuple(perron_vector(g.sending_block(s)) for s in range(part.num_sending))
    E = np.zeros((ns, ns))
    for s, p in enumerate(perrons):
        sl = part.sending_slice(s)
        E[sl, sl] = np.outer(p, np.ones(len(p)))

    A_R = g.receiving_block
    I_minus = np.eye(A_R.shape[0]) - A_R
    try:
        # W @ (I - A_R) = A_SR, solved column-block-wise via the transpose.
        W = np.linalg.solve(I_minus.T, g.cross_block.T).T
    except np.linalg.LinAlgError as exc:
        raise ReceivingConnectivityError(
            "(I - A_R) is singular: receiving agents are not anchored to any sending sub-network"
        ) from exc

    Omega = E @ W
    col_sums = Omega.sum(axis=0)
    if np.any(np.abs(col_sums - 1.0) > 1e-8):
        raise ReceivingConnectivityError(
            "(I - A_R) is numerically singular: limiting influence columns do not sum to 1 "
            f"(max deviation {np.max(np.abs(col_sums - 1.0)):.3g})"
        )

    profile = LimitingProfile(E=E, perron_vectors=perrons, W=W, Omega=Omega, X=np.empty(0))
    X = aggregate_weights(profile, part)
    return LimitingProfile(E=E, perron_vectors=perrons, W=W, Omega=Omega, X=X)


def aggregate_weights(profile: LimitingProfile, partition: Partition) -> np.ndarray:
    """Aggregate influence of each sending sub-network on each receiving agent.

    Row ``s`` sums the ``Omega`` rows of sub-network ``s+1``; every column is
    a probability vector.  Identical (up to rounding) to summing rows of
    ``W`` instead, since each Perron vector sums to one.
    """
    S = partition.num_sending
    X = np.empty((S, profile.Omega.shape[1]))
    for s in range(S):
        X[s] = profile.Omega[partition.sending_slice(s)].sum(axis=0)
    return X


def matrix_power_limit(g: WeakGraph, i: int) -> np.ndarray:
    """``A**i`` by repeated multiplication.

    Brute-force oracle for :func:`limiting_profile`: for large ``i`` the
    top-right block approaches ``Omega`` and the bottom blocks vanish.
    """
    if i < 1:
        raise ValueError("power must be >= 1")
    out = np.eye(g.n_agents)
    for _ in range(i):
        out = out @ g.A
    return out


def random_weak_graph(partition: Partition, density: float, seed: int) -> WeakGraph:
    """Generate a valid weak graph, deterministic for a fixed seed.

    Each sending sub-network gets a directed ring plus self-loops (so it is
    strongly connected and primitive); each receiving sub-network gets an
    internal ring and at least one inbound edge from a sending agent.  Every
    other admissible edge is included independently with probability
    ``density``; edge weights are uniform on [0.2, 1) before column
    normalization, keeping the subdominant spectral gap away from 1.
    """
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    n = partition.n_agents
    ns = partition.n_sending_agents

    mask = np.zeros((n, n), dtype=bool)

    def ring(sl: slice) -> None:
        size = sl.stop - sl.start
        for j in range(sl.start, sl.stop):
            mask[j, sl.start + (j - sl.start + 1) % size] = True

    admissible = np.zeros((n, n), dtype=bool)
    for s in range(partition.num_sending):
        sl = partition.sending_slice(s)
        admissible[sl, sl] = True
        mask[sl, sl] |= np.eye(sl.stop - sl.start, dtype=bool)  # self-loops
        ring(sl)
    admissible[:ns, ns:] = True  # receiving agents may listen to any sender
    admissible[ns:, ns:] = True  # and to any receiving agent

    for r in range(partition.num_receiving):
        sl = partition.receiving_slice(r)
        ring(sl)  # internal ring (self-loop if singleton)
        # anchor: one inbound edge from a random sending agent
        mask[rng.integers(0, ns), rng.integers(sl.start, sl.stop)] = True

    extra = rng.random((n, n)) < density
    mask |= admissible & extra

    A = np.where(mask, rng.uniform(0.2, 1.0, size=(n, n)), 0.0)
    A /= A.sum(axis=0)
    return validate_weak_graph(A, partition)


def write_graph_csv(g: WeakGraph, path) -> None:
    """Write ``A`` row-major as CSV with header ``# N S R <sizes>``."""
    part = g.partition
    header_nums = [part.n_agents, part.num_sending, part.num_receiving]
    header_nums += list(part.sending_sizes) + list(part.receiving_sizes)
    with open(path, "w") as fh:
        fh.write("# " + " ".join(str(v) for v in header_nums) + "\n")
        for row in g.A:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_graph_csv(path) -> WeakGraph:
    """Read and re-validate a combination matrix written by :func:`write_graph_csv`."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing '# N S R <sizes>' header")
        nums = [int(v) for v in header[1:].split()]
        if len(nums) < 3:
            raise ValueError(f"{path}: header needs at least N, S and R")
        n, s_count, r_count = nums[:3]
        sizes = nums[3:]
        if len(sizes) != s_count + r_count:
            raise ValueError(f"{path}: header lists {len(sizes)} sizes, expected {s_count + r_count}")
        partition = Partition(tuple(sizes[:s_count]), tuple(sizes[s_count:]))
        if partition.n_agents != n:
            raise ValueError(f"{path}: sizes sum to {partition.n_agents}, header says N={n}")
        rows = [[float(v) for v in line.strip().split(",")] for line in fh if line.strip()]
    A = np.array(rows)
    return validate_weak_graph(A, partition)
