import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lozenge.errors import InvariantViolation
from lozenge.lattice import Slope, hexagon_domain
from lozenge.perturb import (
    build_p_r,
    build_q,
    coupled_walks,
    coupling_experiment,
    default_window,
    in_Z,
    restricted_paths,
    slope_to_beta,
)
from lozenge.sampling import sample_uniform


@st.composite
def configurations(draw, ell):
    # gaps below ell with at most ell - 2 unit gaps in a row, so no run of ell consecutive integers
    n = draw(st.integers(4, 40))
    gaps = draw(st.lists(st.integers(1, ell - 1), min_size=n - 1, max_size=n - 1))
    ones = 0
    for i, g in enumerate(gaps):
        ones = ones + 1 if g == 1 else 0
        if ones == ell - 1:
            gaps[i], ones = 2, 0
    vals = np.r_[0, np.cumsum(gaps)]
    vals -= vals[draw(st.integers(0, n - 2))]
    assert in_Z(vals, ell)
    return tuple(int(v) for v in vals)


@settings(max_examples=60, deadline=None)
@given(st.data(), st.integers(3, 5))
def test_perturbations_are_ordered(data, ell):
    q = data.draw(configurations(ell))
    tr = build_p_r(q, ell)
    p, qq, r = (np.array(x.values) for x in (tr.p, tr.q, tr.r))
    assert (p <= qq).all() and (qq <= r).all()
    assert (np.diff(p) > 0).all() and (np.diff(r) > 0).all()
    near = np.abs(qq) <= 2 * ell
    assert (p[near] == qq[near]).all() and (r[near] == qq[near]).all()


def test_labels_put_origin_between_first_two():
    tr = build_p_r((-3, -1, 0, 2, 3, 5), 3)
    assert tr.q[0] <= 0 < tr.q[1]


def test_in_Z():
    assert in_Z([0, 1, 3, 4, 6], 3)
    assert not in_Z([0, 1, 2, 4], 3)
    assert not in_Z([0, 4], 3)
    with pytest.raises(ValueError):
        in_Z([0], 1)


def test_bad_configuration_rejected():
    with pytest.raises(InvariantViolation):
        build_p_r((-1, 0, 1, 2), 2)


def test_slope_to_beta():
    assert slope_to_beta(Slope(1 / 3, 1 / 3)) == pytest.approx(0.5)
    assert 0 < slope_to_beta(Slope(0.2, 0.1)) < 0.5


def test_single_coupled_walkers_are_monotone_in_beta():
    gen = np.random.default_rng(0)
    for _ in range(50):
        lo, hi = coupled_walks([(0,), (0,)], [0.3, 0.7], 6, gen)
        assert (lo <= hi).all()


def test_identical_inputs_identical_paths():
    P, R = coupled_walks([(0, 1), (0, 1)], [0.4, 0.4], 5, 3)
    assert np.array_equal(P, R)


def test_restricted_paths_follow_tiling():
    N = 8
    d, b = hexagon_domain(N, N, N)
    H = sample_uniform(d.translate(-N, -N), b.translate(-N, -N), sweeps=200, rng=1)
    q = build_q(H, 2, default_window(2, 5))
    Q = restricted_paths(H, q, 2)
    assert (np.diff(Q, axis=1) >= 0).all() and (np.diff(Q, axis=1) <= 1).all()
    assert (np.diff(Q, axis=0) > 0).all()
    for s in range(3):
        assert all(H[(x + 1, s)] == H[(x, s)] for x in Q[:, s])


def test_coupling_experiment_runs():
    N = 8
    d, b = hexagon_domain(N, N, N)
    d, b = d.translate(-N, -N), b.translate(-N, -N)
    rep = coupling_experiment(lambda g: sample_uniform(d, b, sweeps=200, rng=g), Slope(1 / 3, 1 / 3), 0.1, 2, 5,
                              rng=4)
    assert rep.initial_ordered == 1.0
    assert 0 <= rep.ordered_pqr <= rep.ordered_pr <= 1
