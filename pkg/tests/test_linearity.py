import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lozenge.errors import InvariantViolation
from lozenge.linearity import (
    DyadicFunction,
    extend_triangle,
    is_linear,
    is_semilinear,
    linearity_scan,
    sawtooth,
    semilinear_to_linear_check,
    takagi,
)


def random_lipschitz(gen, n):
    steps = gen.uniform(-1, 1, 2**n) / 2**n
    return DyadicFunction(np.r_[0.0, np.cumsum(steps)])


def cone_function(gen, n, cones=30):
    N = 2**n
    x, y = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
    c = gen.uniform(0, N, (cones, 2))
    h = gen.uniform(0, N / 4, cones)
    return np.min(h[:, None, None] + np.hypot(x[None] - c[:, 0, None, None], y[None] - c[:, 1, None, None]), axis=0)


def test_square_is_quarter_linear_and_semilinear():
    f = DyadicFunction.from_callable(lambda x: x * x, 8)
    assert f.linear_deviations(0)[0] == pytest.approx(0.25)
    assert f.semilinear_deviations(0)[0] == pytest.approx(0.25)
    assert is_linear(f, 0.25) and not is_linear(f, 0.24)
    assert is_semilinear(f, 0.25) and not is_semilinear(f, 0.24)


def test_square_semilinear_bound():
    f = DyadicFunction.from_callable(lambda x: x * x, 10)
    chk = semilinear_to_linear_check(f, 8)
    assert chk.hypothesis and chk.holds
    assert chk.deviation == pytest.approx(0.25)


def test_linear_function_needs_no_sigma():
    f = DyadicFunction.from_callable(lambda x: 3 * x - 1, 6)
    chk = semilinear_to_linear_check(f, 4, 0.0)
    assert chk.hypothesis and chk.holds and chk.deviation < 1e-12


@pytest.mark.parametrize("m", [1, 3, 5])
def test_sawtooth_sits_a_quarter_of_the_allowance(m):
    chk = semilinear_to_linear_check(sawtooth(10, m), m, 0.0)
    assert chk.hypothesis and chk.holds
    assert chk.deviation == pytest.approx(chk.bound / 4)


@pytest.mark.parametrize("m", [2, 4, 6])
def test_takagi_is_tight_within_factor_two(m):
    sigma = 1 / (2 * (m + 1)) / 2
    f = takagi(12, m, sigma)
    assert f.lipschitz_constant() <= 1 + 1e-12
    chk = semilinear_to_linear_check(f, m, sigma)
    assert chk.hypothesis and chk.holds
    # the sigma-dependent part of the bound is met within a factor of two
    assert chk.deviation >= sigma


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.05, 0.5), st.floats(0.05, 1.0))
def test_semilinear_set_bound(seed, sigma, theta):
    f = random_lipschitz(np.random.default_rng(seed), 12)
    assert len(f.Y(sigma, theta, 0, 12)) <= 1 / (sigma**2 * theta)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.01, 0.5), st.floats(0.01, 0.5), st.integers(0, 8))
def test_bad_sets_shrink_as_sigma_grows(seed, s1, s2, k):
    f = random_lipschitz(np.random.default_rng(seed), 8)
    lo, hi = sorted((s1, s2))
    assert set(f.A(hi, k)) <= set(f.A(lo, k))
    assert set(f.X(hi, 0.2, 0, 8)) <= set(f.X(lo, 0.2, 0, 8))


def test_dyadic_function_validation():
    with pytest.raises(ValueError):
        DyadicFunction(np.zeros(6))
    with pytest.raises(ValueError):
        DyadicFunction(np.zeros(5), 1.0, 0.0)


def test_linear_surface_has_every_face_good():
    N = 2**8
    x, y = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
    r = linearity_scan(0.3 * x - 0.5 * y, 4)
    assert r.m == 4 and r.n_good == r.n_faces and r.guarantee_met
    assert all(v["X"] == 0 for v in r.per_scale.values())


def test_random_surface_scan():
    gen = np.random.default_rng(2)
    r = linearity_scan(cone_function(gen, 8), 3)
    assert r.m is not None and 3 <= r.m < 6
    assert 0 <= r.n_good <= r.n_faces
    assert r.guarantee_met


def test_scan_rejects_steep_input():
    N = 2**6
    x, y = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
    with pytest.raises(InvariantViolation):
        linearity_scan(2.0 * x, 2)


def test_triangle_extension_is_lipschitz():
    gen = np.random.default_rng(0)
    F = cone_function(gen, 5)
    ext = extend_triangle(F)
    pts = gen.integers(-10, 45, (500, 2))
    vals = ext(pts[:, 0], pts[:, 1])
    src = np.clip(pts, 0, 32)
    i, j = np.minimum(src[:, 0], src[:, 1]), np.maximum(src[:, 0], src[:, 1])
    assert np.array_equal(vals, F[i, j])
    for d in ((1, 0), (0, 1)):
        step = np.abs(ext(pts[:, 0] + d[0], pts[:, 1] + d[1]) - vals)
        assert step.max() <= 1 + 1e-12
    assert math.isfinite(vals.sum())
