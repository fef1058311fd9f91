"""Shared draw helpers for randomized tests; all seeded and deterministic."""

import numpy as np

from anticoord.instance import CMode, generate_random, random_well_behaved


def rng_for(seed):
    return np.random.default_rng(seed)


def random_uniform_instance(rng, max_part=8):
    n0 = int(rng.integers(1, max_part + 1))
    n1 = int(rng.integers(1, max_part + 1))
    p = float(rng.uniform(0.0, 1.0))
    return generate_random(n0, n1, p, CMode.UNIFORM01, int(rng.integers(0, 2**63)))


def random_wb_instance(rng, min_part=3, max_part=7, p_lo=0.5, p_hi=0.9):
    """Well-behaved instance with min degree >= 2 (so the one-step results apply)."""
    n0 = int(rng.integers(min_part, max_part + 1))
    n1 = int(rng.integers(min_part, max_part + 1))
    p = float(rng.uniform(p_lo, p_hi))
    return random_well_behaved(n0, n1, p, int(rng.integers(0, 2**63)))


def random_subset(rng, pool, p=0.4):
    return frozenset(int(i) for i in pool if rng.random() < p)


def random_partition(rng, agents, max_cells=4):
    """Disjoint cells covering ``agents`` in random order; cells may be empty."""
    agents = list(agents)
    rng.shuffle(agents)
    k = int(rng.integers(1, max_cells + 1))
    cells = [[] for _ in range(k)]
    for a in agents:
        cells[int(rng.integers(0, k))].append(int(a))
    return [frozenset(c) for c in cells]
