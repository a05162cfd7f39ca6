"""Weak-graph validation, Perron vectors and the limiting-influence closed form."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weaklearn.graphs import (
    GraphValidationError,
    LimitingProfile,
    Partition,
    PerronConvergenceError,
    ReceivingConnectivityError,
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

TWO_NODE = Partition(sending_sizes=(1,), receiving_sizes=(1,))


def perron_oracle(block):
    """Dense eigendecomposition: eigenvector at eigenvalue 1, normalized to sum 1."""
    w, v = np.linalg.eig(np.asarray(block, dtype=float))
    idx = int(np.argmin(np.abs(w - 1.0)))
    p = np.real(v[:, idx])
    return p / p.sum()


@st.composite
def partitions(draw):
    sending = draw(st.lists(st.integers(1, 4), min_size=1, max_size=3))
    receiving = draw(st.lists(st.integers(1, 3), min_size=1, max_size=2))
    return Partition(tuple(sending), tuple(receiving))


class TestValidation:
    def test_smallest_legal_weak_graph(self):
        g = validate_weak_graph([[1, 0.6], [0, 0.4]], TWO_NODE)
        assert g.n_agents == 2
        assert weak_graph_diagnostics(g.A, TWO_NODE) == []

    def test_receiving_without_inbound_link_rejected(self):
        diags = weak_graph_diagnostics(np.eye(2), TWO_NODE)
        assert len(diags) == 1
        assert "no inbound link" in diags[0]
        with pytest.raises(GraphValidationError):
            validate_weak_graph(np.eye(2), TWO_NODE)

    def test_multiple_violations_all_reported(self):
        # Column 1 sums to 1.1 and the bottom-left block has a forbidden entry.
        diags = weak_graph_diagnostics([[1, 0.6], [0.1, 0.4]], TWO_NODE)
        assert any("non-stochastic column 1" in d for d in diags)
        assert any("receiving->sending" in d for d in diags)
        assert len(diags) == 2

    def test_missing_self_loop_rejected(self):
        part = Partition((2,), (1,))
        A = np.array([[0, 1, 0.5], [1, 0, 0.2], [0, 0, 0.3]], dtype=float)
        diags = weak_graph_diagnostics(A, part)
        assert any("no self-loop" in d for d in diags)

    def test_disconnected_sending_block_rejected(self):
        part = Partition((2,), (1,))
        A = np.array([[1, 0, 0.5], [0, 1, 0.2], [0, 0, 0.3]], dtype=float)
        diags = weak_graph_diagnostics(A, part)
        assert any("not strongly connected" in d for d in diags)

    def test_cross_sending_weight_rejected(self):
        part = Partition((1, 1), (1,))
        A = np.array([[0.5, 0, 0.3], [0.5, 1, 0.2], [0, 0, 0.5]], dtype=float)
        diags = weak_graph_diagnostics(A, part)
        assert any("distinct sending sub-networks" in d for d in diags)

    def test_shape_mismatch_is_a_precondition_error(self):
        with pytest.raises(ValueError, match="does not match"):
            weak_graph_diagnostics(np.eye(3), TWO_NODE)

    def test_diagnostics_name_offending_indices(self):
        A = np.array([[1, 0.6], [0.2, 0.4]])
        diags = weak_graph_diagnostics(A, TWO_NODE)
        assert any("(l=2, k=1)" in d for d in diags)


class TestPerronVector:
    def test_identity_block(self):
        assert perron_vector(np.array([[1.0]])) == pytest.approx([1.0])

    def test_symmetric_block(self):
        p = perron_vector(np.array([[0.5, 0.5], [0.5, 0.5]]))
        assert p == pytest.approx([0.5, 0.5])

    def test_two_by_two_against_eigendecomposition(self):
        block = np.array([[0.8, 0.4], [0.2, 0.6]])
        p = perron_vector(block)
        assert p == pytest.approx([2 / 3, 1 / 3], abs=1e-12)
        assert p == pytest.approx(perron_oracle(block), abs=1e-12)
        assert np.max(np.abs(block @ p - p)) <= 1e-10

    def test_periodic_block_does_not_converge(self):
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        with pytest.raises(PerronConvergenceError):
            perron_vector(swap, max_iter=2000)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6), st.integers(2, 6))
    def test_random_primitive_blocks_match_oracle(self, seed, size):
        rng = np.random.default_rng(seed)
        block = rng.uniform(0.05, 1.0, size=(size, size))
        block /= block.sum(axis=0)
        p = perron_vector(block)
        assert np.all(p > 0)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(block @ p - p)) <= 1e-10
        assert p == pytest.approx(perron_oracle(block), abs=1e-9)


class TestLimitingProfile:
    def test_single_sender_forces_unit_column(self):
        g = validate_weak_graph([[1, 0.6], [0, 0.4]], TWO_NODE)
        prof = limiting_profile(g)
        assert prof.W == pytest.approx(np.array([[1.0]]))
        assert prof.Omega == pytest.approx(np.array([[1.0]]))

    def test_two_singleton_senders_against_power_oracle(self):
        part = Partition((1, 1), (1,))
        A = np.array([[1, 0, 0.3], [0, 1, 0.2], [0, 0, 0.5]])
        g = validate_weak_graph(A, part)
        prof = limiting_profile(g)
        assert prof.W == pytest.approx(np.array([[0.6], [0.4]]))
        assert prof.Omega == pytest.approx(np.array([[0.6], [0.4]]))
        oracle = matrix_power_limit(g, 100)[:2, 2:]
        assert prof.Omega == pytest.approx(oracle, abs=1e-12)

    def test_receivers_listening_only_to_senders(self):
        # A_R = 0 truncates the geometric series at the identity.
        part = Partition((2,), (2,))
        A = np.array(
            [
                [0.5, 0.5, 0.3, 0.6],
                [0.5, 0.5, 0.7, 0.4],
                [0.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 0.0],
            ]
        )
        g = validate_weak_graph(A, part)
        prof = limiting_profile(g)
        assert prof.W == pytest.approx(g.cross_block)

    def test_omega_columns_sum_to_one(self):
        g = random_weak_graph(Partition((3, 2), (2, 2)), density=0.5, seed=3)
        prof = limiting_profile(g)
        assert prof.Omega.sum(axis=0) == pytest.approx(np.ones(4), abs=1e-12)
        for p in prof.perron_vectors:
            assert np.all(p > 0)
            assert p.sum() == pytest.approx(1.0, abs=1e-12)

    def test_singular_receiving_block_raises(self):
        # Receiving agent 3 only listens to itself: (I - A_R) is singular.
        part = Partition((1,), (2,))
        A = np.array([[1, 0.4, 0], [0, 0.3, 0], [0, 0.3, 1.0]])
        g = validate_weak_graph(A, part)
        with pytest.raises(ReceivingConnectivityError):
            limiting_profile(g)


class TestAggregateWeights:
    def test_single_sending_subnetwork_gets_all_influence(self):
        g = random_weak_graph(Partition((4,), (2, 1)), density=0.6, seed=1)
        X = limiting_profile(g).X
        assert X == pytest.approx(np.ones((1, 3)))

    def test_three_node_example(self):
        part = Partition((1, 1), (1,))
        A = np.array([[1, 0, 0.3], [0, 1, 0.2], [0, 0, 0.5]])
        prof = limiting_profile(validate_weak_graph(A, part))
        assert prof.X == pytest.approx(np.array([[0.6], [0.4]]))

    def test_direct_summation_over_blocks(self):
        part = Partition((2, 1), (1,))
        omega = np.array([[0.25], [0.25], [0.5]])
        prof = LimitingProfile(
            E=np.eye(3),
            perron_vectors=(np.array([0.5, 0.5]), np.array([1.0])),
            W=omega,
            Omega=omega,
            X=np.empty((0, 0)),
        )
        assert aggregate_weights(prof, part) == pytest.approx(np.array([[0.5], [0.5]]))

    def test_omega_route_equals_w_route(self):
        part = Partition((3, 2), (2,))
        g = random_weak_graph(part, density=0.7, seed=9)
        prof = limiting_profile(g)
        from_omega = aggregate_weights(prof, part)
        from_w = np.vstack(
            [prof.W[part.sending_slice(s)].sum(axis=0) for s in range(part.num_sending)]
        )
        assert from_omega == pytest.approx(from_w, abs=1e-13)


class TestMatrixPowerLimit:
    def test_power_one_is_the_matrix_itself(self):
        g = validate_weak_graph([[1, 0.6], [0, 0.4]], TWO_NODE)
        assert matrix_power_limit(g, 1) == pytest.approx(g.A)

    def test_two_node_limit(self):
        g = validate_weak_graph([[1, 0.6], [0, 0.4]], TWO_NODE)
        assert matrix_power_limit(g, 50) == pytest.approx(
            np.array([[1.0, 1.0], [0.0, 0.0]]), abs=1e-12
        )

    def test_bottom_blocks_vanish(self):
        g = random_weak_graph(Partition((2, 2), (2,)), density=0.5, seed=4)
        ns = g.partition.n_sending_agents
        power = matrix_power_limit(g, 500)
        assert np.max(np.abs(power[ns:, :])) <= 1e-10

    def test_converges_to_closed_form(self):
        g = random_weak_graph(Partition((3, 2), (1, 2)), density=0.4, seed=12)
        prof = limiting_profile(g)
        ns = g.partition.n_sending_agents
        closed = np.zeros((g.n_agents, g.n_agents))
        closed[:ns, :ns] = prof.E
        closed[:ns, ns:] = prof.Omega
        assert np.max(np.abs(matrix_power_limit(g, 2000) - closed)) <= 1e-8


class TestRandomWeakGraph:
    def test_deterministic_for_fixed_seed(self):
        part = Partition((2, 3), (2,))
        a = random_weak_graph(part, density=0.3, seed=42)
        b = random_weak_graph(part, density=0.3, seed=42)
        assert np.array_equal(a.A, b.A)

    def test_different_seeds_differ(self):
        part = Partition((2, 3), (2,))
        a = random_weak_graph(part, density=0.3, seed=42)
        b = random_weak_graph(part, density=0.3, seed=43)
        assert not np.array_equal(a.A, b.A)

    def test_full_density_fills_every_admissible_entry(self):
        part = Partition((2, 2), (1, 1))
        g = random_weak_graph(part, density=1.0, seed=0)
        ns = part.n_sending_agents
        for s in range(part.num_sending):
            sl = part.sending_slice(s)
            assert np.all(g.A[sl, sl] > 0)
        assert np.all(g.A[:ns, ns:] > 0)
        assert np.all(g.A[ns:, ns:] > 0)

    def test_invalid_density_rejected(self):
        with pytest.raises(ValueError):
            random_weak_graph(TWO_NODE, density=0.0, seed=0)

    @settings(max_examples=25, deadline=None)
    @given(partitions(), st.floats(0.05, 1.0), st.integers(0, 10**6))
    def test_generated_graphs_always_validate(self, part, density, seed):
        g = random_weak_graph(part, density, seed)
        assert weak_graph_diagnostics(g.A, part) == []
        assert g.A.sum(axis=0) == pytest.approx(np.ones(part.n_agents), abs=1e-12)
        prof = limiting_profile(g)
        assert prof.X.sum(axis=0) == pytest.approx(
            np.ones(part.n_receiving_agents), abs=1e-12
        )


class TestCsvRoundTrip:
    def test_round_trip_preserves_matrix_and_partition(self, tmp_path):
        part = Partition((3, 1), (2, 1))
        g = random_weak_graph(part, density=0.5, seed=5)
        path = tmp_path / "graph.csv"
        write_graph_csv(g, path)
        g2 = read_graph_csv(path)
        assert g2.partition == part
        assert np.max(np.abs(g2.A - g.A)) <= 1e-9

    def test_header_format(self, tmp_path):
        g = random_weak_graph(Partition((2,), (1,)), density=1.0, seed=0)
        path = tmp_path / "graph.csv"
        write_graph_csv(g, path)
        assert path.open().readline().strip() == "# 3 1 1 2 1"

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "graph.csv"
        path.write_text("1,0\n0,1\n")
        with pytest.raises(ValueError, match="header"):
            read_graph_csv(path)

    def test_size_sum_mismatch_rejected(self, tmp_path):
        path = tmp_path / "graph.csv"
        path.write_text("# 3 1 1 1 1\n1,0\n0,1\n")
        with pytest.raises(ValueError, match="sum"):
            read_graph_csv(path)


class TestImmutability:
    def test_matrices_are_read_only(self):
        g = random_weak_graph(Partition((2,), (1,)), density=0.5, seed=0)
        with pytest.raises(ValueError):
            g.A[0, 0] = 2.0
        prof = limiting_profile(g)
        with pytest.raises(ValueError):
            prof.Omega[0, 0] = 2.0
