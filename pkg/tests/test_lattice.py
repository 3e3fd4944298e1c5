import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lozenge.errors import Infeasible, InvariantViolation
from lozenge.lattice import (
    BoundaryHeight,
    Domain,
    HeightFunction,
    PathEnsemble,
    Slope,
    Tiling,
    crossing_count,
    disk_domain,
    extremal_heights,
    height_from_paths,
    height_from_tiling,
    hexagon_domain,
    is_tileable,
    paths_from_tiling,
    tiling_from_height,
    tiling_from_paths,
)
from lozenge.sampling import enumerate_tilings


def macmahon(A, B, C):
    out = Fraction(1)
    for i, j, k in itertools.product(range(1, A + 1), range(1, B + 1), range(1, C + 1)):
        out *= Fraction(i + j + k - 1, i + j + k - 2)
    return int(out)


sides = st.tuples(*[st.integers(1, 3)] * 3)


@settings(max_examples=15, deadline=None)
@given(sides)
def test_enumeration_matches_product_formula(abc):
    d, b = hexagon_domain(*abc)
    assert len(enumerate_tilings(d, b)) == macmahon(*abc)


@settings(max_examples=10, deadline=None)
@given(sides, st.data())
def test_round_trips(abc, data):
    d, b = hexagon_domain(*abc)
    tilings = enumerate_tilings(d, b)
    H = data.draw(st.sampled_from(tilings))
    T = tiling_from_height(H)
    assert height_from_tiling(T, d, (0, 0), 0) == H
    E = paths_from_tiling(T)
    assert tiling_from_paths(E, d) == T
    assert height_from_paths(E, d) == H


@settings(max_examples=10, deadline=None)
@given(sides, st.data())
def test_lozenge_counts_fixed_by_sides(abc, data):
    A, B, C = abc
    d, b = hexagon_domain(*abc)
    H = data.draw(st.sampled_from(enumerate_tilings(d, b)))
    n1, n2, n3 = tiling_from_height(H).counts()
    assert sorted((n1, n2, n3)) == sorted((A * C, B * C, A * B))
    assert n1 + n2 + n3 == A * B + B * C + C * A


def test_small_counts():
    assert [len(enumerate_tilings(*hexagon_domain(*s))) for s in [(1, 1, 1), (2, 2, 1), (2, 2, 2)]] == [2, 6, 20]


def test_height_increment_rule_is_enforced():
    d, b = hexagon_domain(1, 1, 1)
    lo, _ = extremal_heights(d, b)
    arr = lo.array.copy()
    arr[d.index((1, 1))] += 5
    with pytest.raises(InvariantViolation):
        HeightFunction(d, arr)


def test_extremal_heights_bracket_every_tiling():
    d, b = hexagon_domain(2, 2, 2)
    lo, hi = extremal_heights(d, b)
    arrs = [H.array for H in enumerate_tilings(d, b)]
    assert any(np.array_equal(a, lo.array) for a in arrs)
    assert any(np.array_equal(a, hi.array) for a in arrs)
    for a in arrs:
        assert (lo.array <= a).all() and (a <= hi.array).all()


def test_infeasible_boundary():
    d, b = hexagon_domain(2, 2, 2)
    assert is_tileable(d, b)
    bad = b.shift(0).array.copy()
    bad[d.index((0, 0))] = 3
    with pytest.raises(Infeasible):
        extremal_heights(d, BoundaryHeight(d, bad))
    assert not is_tileable(d, BoundaryHeight(d, bad))


def test_crossing_count_counts_paths():
    d, b = hexagon_domain(2, 3, 2)
    for H in enumerate_tilings(d, b)[:10]:
        E = paths_from_tiling(tiling_from_height(H))
        row = 1
        xs = [x for x, y in d.vertices if y == row]
        x1, x2 = min(xs), max(xs)
        on_row = E.paths[:, row - E.row0] if row >= E.row0 else []
        n = sum(1 for p in on_row if x1 <= p <= x2 - 1)
        assert crossing_count(H, x1, x2, row) == n


def test_path_ensemble_rejects_intersections():
    with pytest.raises(InvariantViolation):
        PathEnsemble([[0, 1], [1, 1]])
    with pytest.raises(InvariantViolation):
        PathEnsemble([[0, 2]])


def test_tiling_equality_and_hash():
    d, b = hexagon_domain(1, 1, 1)
    T1, T2 = (tiling_from_height(H) for H in enumerate_tilings(d, b))
    assert T1 != T2
    assert len({T1, T2, Tiling(d, T1.sorted_centers())}) == 2


def test_domain_translation():
    d = disk_domain(3)
    t = d.translate(2, -1)
    assert {(x - 2, y + 1) for x, y in t.vertices} == d.vertices


@given(st.floats(0, 1), st.floats(0, 1))
def test_slope_distance_sign(s, t):
    sl = Slope(s, t)
    assert sl.in_closed_triangle() == (s + t <= 1)
    if sl.in_interior():
        assert sl.in_closed_triangle()


def test_domain_rejects_holes():
    ring = [(x, y) for x in range(5) for y in range(5) if (x, y) != (2, 2)]
    with pytest.raises(InvariantViolation):
        Domain(ring)
