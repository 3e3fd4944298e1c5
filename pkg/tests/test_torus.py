import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lozenge.errors import CapExceeded
from lozenge.lattice import Slope
from lozenge.torus import (
    TorusWeights,
    Z_bruteforce,
    Z_exact,
    constrained_count,
    frakZ,
    legendre_check,
    log_Z_exact,
    tile_densities,
    torus_convergence,
    torus_type_counts,
    weights_from_slope,
)
from lozenge.variational import sigma

weights = st.builds(TorusWeights, *[st.floats(0.2, 3.0)] * 3)


def test_unweighted_counts():
    # independent counts of lozenge tilings of the N x N torus
    assert [sum(torus_type_counts(N).values()) for N in (1, 2, 3)] == [3, 9, 42]


@settings(max_examples=30, deadline=None)
@given(weights, st.integers(1, 3))
def test_exact_formula_matches_enumeration(w, N):
    assert Z_exact(N, w) == pytest.approx(Z_bruteforce(N, w), rel=1e-9)


@given(weights)
def test_partition_function_is_homogeneous(w):
    N = 3
    scaled = TorusWeights(2 * w.a, 2 * w.b, 2 * w.c)
    assert log_Z_exact(N, scaled) == pytest.approx(log_Z_exact(N, w) + N * N * math.log(2), abs=1e-9)


def test_limit_values():
    assert frakZ(TorusWeights(1, 1, 1)) == pytest.approx(0.32306594721945, abs=1e-12)
    assert frakZ(TorusWeights(3, 1, 1)) == pytest.approx(math.log(3), abs=1e-12)
    d = tile_densities(TorusWeights(1, 1, 1))
    assert (d.s, d.t) == pytest.approx((1 / 3, 1 / 3), abs=1e-10)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 0.8), st.floats(0.1, 0.8))
def test_weights_follow_law_of_sines(s, t):
    if s + t > 0.9:
        return
    w = weights_from_slope(Slope(s, t)).normalized()
    u = 1 - s - t
    ref = np.array([math.sin(math.pi * s), math.sin(math.pi * t), math.sin(math.pi * u)])
    got = np.array(list(w))
    assert got / got.sum() == pytest.approx(ref / ref.sum(), abs=1e-8)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 0.8), st.floats(0.1, 0.8))
def test_legendre_identity(s, t):
    if s + t > 0.9:
        return
    rep = legendre_check(Slope(s, t))
    assert rep.residual < 1e-6
    assert rep.sigma == pytest.approx(sigma(s, t), abs=1e-12)


def test_densities_invert_weights():
    w = weights_from_slope(Slope(0.5, 0.25))
    d = tile_densities(w)
    assert (d.s, d.t) == pytest.approx((0.5, 0.25), abs=1e-8)


def test_convergence_at_unit_weights():
    rows = torus_convergence([8, 16, 32, 64])
    errs = [e for _, _, e in rows]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 0.02


def test_frozen_weights():
    d = tile_densities(TorusWeights(1, 2, 3))
    assert d.s == pytest.approx(0, abs=1e-12) and d.t == 0


def test_constrained_counts():
    assert constrained_count(1, Slope(1 / 3, 1 / 3), 0.4) == 1
    assert constrained_count(2, Slope(0.5, 0.5), 0) == 2
    assert constrained_count(3, Slope(1 / 3, 1 / 3), 0) == 21


def test_brute_force_cap():
    with pytest.raises(CapExceeded):
        torus_type_counts(4)


def test_boundary_slope_rejected():
    with pytest.raises(ValueError):
        weights_from_slope(Slope(0.0, 0.5))
    with pytest.raises(ValueError):
        TorusWeights(1, 0, 1)
