"""Shared fixtures: the reference scenario and its multi-seed simulation batch.

The reference scenario is a 13-agent weak graph (three sending sub-networks
of three agents, two receiving sub-networks of two) with the randomly
perturbed Gaussian models; it is the workhorse for the convergence, rate-law
and end-to-end recovery checks.
"""

from dataclasses import dataclass

import numpy as np
import pytest

from weaklearn.graphs import Partition, WeakGraph, limiting_profile, random_weak_graph
from weaklearn.learning import Trajectory, geometric_sample_times, simulate
from weaklearn.models import DivergenceMatrix, ModelSuite, diversity_model

HORIZON = 20_000
EARLY_TIME = 2_000
BATCH_SEEDS = tuple(range(100, 110))


@dataclass(frozen=True)
class Scenario:
    graph: WeakGraph
    suite: ModelSuite
    D: DivergenceMatrix
    x_true: np.ndarray
    receiving_ids: tuple[int, ...]
    sample_times: tuple[int, ...]


@pytest.fixture(scope="session")
def scenario() -> Scenario:
    partition = Partition(sending_sizes=(3, 3, 3), receiving_sizes=(2, 2))
    graph = random_weak_graph(partition, density=0.4, seed=7)
    suite, D = diversity_model(3, 3, base_means=(1.0, 2.0, 3.0), perturb_range=0.1, seed=3)
    x_true = limiting_profile(graph).X
    times = tuple(sorted(set(geometric_sample_times(HORIZON)) | {EARLY_TIME, HORIZON}))
    return Scenario(
        graph=graph,
        suite=suite,
        D=D,
        x_true=x_true,
        receiving_ids=tuple(partition.receiving_agent_ids()),
        sample_times=times,
    )


@pytest.fixture(scope="session")
def trajectory_batch(scenario) -> dict[int, Trajectory]:
    """One full-horizon trajectory per seed, shared across acceptance checks."""
    return {
        seed: simulate(
            scenario.graph,
            scenario.suite,
            horizon=HORIZON,
            sample_times=scenario.sample_times,
            seed=seed,
        )
        for seed in BATCH_SEEDS
    }
