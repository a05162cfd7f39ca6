"""Weak graphs and their limiting influence.

Builds a small weak graph by hand, validates it, and shows that the
closed-form limit of the combination-matrix powers (Perron blocks on the
sending side, the influence matrix on the receiving side) agrees with
brute-force repeated multiplication.

Run:  python3 demos/01_weak_graph_limits.py
"""

import numpy as np

from weaklearn import (
    Partition,
    limiting_profile,
    matrix_power_limit,
    perron_vector,
    validate_weak_graph,
    weak_graph_diagnostics,
)

np.set_printoptions(precision=4, suppress=True)

# Two sending sub-networks (agents 1-2 and agent 3) and one receiving
# sub-network (agents 4-5).  Columns hold the weights an agent assigns to
# its in-neighbors, so every column sums to 1.
partition = Partition(sending_sizes=(2, 1), receiving_sizes=(2,))
A = np.array(
    [
        [0.7, 0.4, 0.0, 0.3, 0.0],
        [0.3, 0.6, 0.0, 0.0, 0.2],
        [0.0, 0.0, 1.0, 0.3, 0.1],
        [0.0, 0.0, 0.0, 0.2, 0.4],
        [0.0, 0.0, 0.0, 0.2, 0.3],
    ]
)

print("combination matrix A (columns sum to 1):")
print(A)

g = validate_weak_graph(A, partition)
print("\nvalidation: ok,", len(weak_graph_diagnostics(A, partition)), "violations")

# The Perron eigenvector of each sending block is that sub-network's
# internal long-run weight distribution.
for s in range(partition.num_sending):
    print(f"Perron vector of sending block {s + 1}:", perron_vector(g.sending_block(s)))

profile = limiting_profile(g)
print("\nlimiting influence Omega (sending agent -> receiving agent):")
print(profile.Omega)
print("aggregate influence X (sub-network -> receiving agent):")
print(profile.X)
print("column sums of X:", profile.X.sum(axis=0))

# Brute force: the powers A^i converge to [E Omega; 0 0].
ns = partition.n_sending_agents
for i in (1, 5, 50, 500):
    power = matrix_power_limit(g, i)
    gap = max(
        np.abs(power[:ns, ns:] - profile.Omega).max(),
        np.abs(power[ns:, :]).max(),
    )
    print(f"i = {i:4d}   max |A^i - A_inf| over influence blocks = {gap:.2e}")

# An invalid graph is rejected with one diagnostic per violated invariant.
bad = A.copy()
bad[3, 0] = 0.1  # receiving agent feeding a sending agent: forbidden
print("\ndiagnostics for a corrupted matrix:")
for diag in weak_graph_diagnostics(bad, partition):
    print(" -", diag)
