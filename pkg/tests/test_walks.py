import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lozenge.errors import InvariantViolation
from lozenge.lattice import PathEnsemble
from lozenge.walks import (
    WalkParams,
    azuma_check,
    ending_law,
    enumerate_walk_paths,
    exact_walk_law,
    log_vandermonde,
    sample_walk_ensemble,
    sample_walk_paths,
    transition_law,
    walk_height,
    walk_path_probability,
)

configs = st.lists(st.integers(-15, 15), min_size=1, max_size=8, unique=True).map(sorted)
betas = st.floats(0.05, 0.95)


@settings(max_examples=60, deadline=None)
@given(configs, betas)
def test_transition_weights_sum_to_one(a, beta):
    _, probs, total = transition_law(a, beta)
    assert abs(total - 1) < 1e-10
    assert abs(probs.sum() - 1) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=1, max_size=3, unique=True).map(sorted), betas, st.integers(0, 3))
def test_path_probabilities_telescope(a, beta, T):
    law = exact_walk_law(a, beta, T)
    assert abs(sum(p for _, p in law) - 1) < 1e-10
    for tr, p in law[:20]:
        prod = 1.0
        for s in range(T):
            outcomes, probs, _ = transition_law(tr[:, s], beta)
            prod *= probs[np.flatnonzero((outcomes == tr[:, s + 1]).all(axis=1))[0]]
        assert abs(prod - p) < 1e-10


def test_single_walker_is_free():
    law = ending_law((0,), 0.3, 4)
    for (x,), p in law.items():
        assert p == pytest.approx(math.comb(4, x) * 0.3**x * 0.7 ** (4 - x))


def test_enumeration_counts_nonintersecting():
    # two walkers at distance one: the right walker must move first
    assert len(enumerate_walk_paths((0, 1), 1)) == 3
    assert len(enumerate_walk_paths((0, 2), 1)) == 4


def test_sampler_matches_ending_law():
    a, beta, T = (0, 1, 3), 0.4, 3
    law = ending_law(a, beta, T)
    paths = sample_walk_paths(WalkParams(beta, a, T), 20000, rng=7)
    ends = [tuple(r) for r in paths[:, :, -1]]
    for k, p in law.items():
        emp = sum(e == k for e in ends) / len(ends)
        assert abs(emp - p) < 5 * math.sqrt(p * (1 - p) / len(ends)) + 1e-3


def test_ensemble_is_valid():
    E = sample_walk_ensemble(WalkParams(0.5, (0, 2, 3, 7), 10), rng=1)
    E.check()
    assert E.at(0) == (0, 2, 3, 7)
    assert walk_path_probability(E, 0.5) > 0


def test_rejects_bad_configuration():
    with pytest.raises(InvariantViolation):
        log_vandermonde([1, 1])
    with pytest.raises(InvariantViolation):
        WalkParams(0.5, (2, 1), 3)
    with pytest.raises(ValueError):
        WalkParams(0.0, (0,), 3)


def test_walk_height_origin():
    paths = np.array([[[-1, 0, 0], [1, 1, 2]]])
    assert walk_height(paths, 0, 0)[0] == 0
    assert walk_height(paths, 1, 2)[0] == 1 - 1 + 1


def test_azuma_tail_below_bound():
    rep = azuma_check(WalkParams(0.5, tuple(range(0, 20, 2)), 16), (10, 16), 6.0, 2000, rng=3)
    assert not rep.violated
