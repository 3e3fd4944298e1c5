"""Dyadic scans for approximate linearity of Lipschitz functions.

A function ``f`` on ``[a, b]`` is ``sigma``-linear when its largest distance
from the chord, divided by ``b - a``, is at most ``sigma``; it is
``sigma``-semilinear when the midpoint value alone is within
``sigma (b - a)`` of the chord.  Functions are sampled at ``2**n + 1``
equally spaced points, and ``Q(i, k)`` is the ``i``-th of the ``2**k``
dyadic subintervals, so scales ``k <= n`` are available for linearity and
``k <= n - 1`` for semilinearity.

The two-dimensional scan works on ``T = {0 <= x <= y <= 2**n}`` and looks for
a scale ``2**(n - m)`` at which most triangles of the scaled lattice have
nearly linear boundary data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantViolation


def _chord_deviation(seg: np.ndarray) -> np.ndarray:
    """Row-wise max distance from the chord, in units of the row's length in steps."""
    m = seg.shape[-1] - 1
    lam = np.linspace(0.0, 1.0, m + 1)
    chord = seg[..., :1] * (1 - lam) + seg[..., -1:] * lam
    return np.abs(seg - chord).max(axis=-1) / m


@dataclass(frozen=True)
class DyadicFunction:
    """Samples ``values[j] = f(a + j h)`` with ``h = (b - a) / 2**n``."""

    values: np.ndarray
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        n = len(v) - 1
        if n < 1 or n & (n - 1):
            raise ValueError("need 2**n + 1 samples")
        if not self.a < self.b:
            raise ValueError("need a < b")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, f, n: int, a: float = 0.0, b: float = 1.0) -> "DyadicFunction":
        return cls(np.array([f(x) for x in np.linspace(a, b, 2**n + 1)]), a, b)

    @property
    def n(self) -> int:
        return (len(self.values) - 1).bit_length() - 1

    @property
    def step(self) -> float:
        return (self.b - self.a) / 2**self.n

    def lipschitz_constant(self) -> float:
        return float(np.abs(np.diff(self.values)).max() / self.step)

    def linear_deviations(self, k: int) -> np.ndarray:
        """Normalized distance from the chord on each ``Q(i, k)``; the sup runs over samples."""
        if not 0 <= k <= self.n:
            raise ValueError(f"scale {k} outside [0, {self.n}]")
        w = 2 ** (self.n - k)
        idx = np.arange(2**k)[:, None] * w + np.arange(w + 1)[None, :]
        return _chord_deviation(self.values[idx]) / self.step

    def semilinear_deviations(self, k: int) -> np.ndarray:
        """``|f(mid) - (f(left) + f(right)) / 2| / length`` on each ``Q(i, k)``."""
        if not 0 <= k < self.n:
            raise ValueError(f"scale {k} outside [0, {self.n - 1}]")
        v = self.values[:: 2 ** (self.n - k - 1)]
        length = (self.b - self.a) / 2**k
        return np.abs(v[1::2] - (v[:-1:2] + v[2::2]) / 2) / length

    def A(self, sigma: float, k: int) -> np.ndarray:
        """Indices ``i`` with ``f`` not ``sigma``-linear on ``Q(i, k)``."""
        return np.flatnonzero(self.linear_deviations(k) > sigma)

    def S(self, sigma: float, k: int) -> np.ndarray:
        """Indices ``i`` with ``f`` not ``sigma``-semilinear on ``Q(i, k)``."""
        return np.flatnonzero(self.semilinear_deviations(k) > sigma)

    def X(self, sigma: float, theta: float, m: int, n: int) -> list[int]:
        """Scales ``k`` in ``[m, n)`` where at least a ``theta`` share of intervals is not linear."""
        return [k for k in range(m, n) if len(self.A(sigma, k)) >= theta * 2**k]

    def Y(self, sigma: float, theta: float, m: int, n: int) -> list[int]:
        """Scales ``k`` in ``[m, n)`` where at least a ``theta`` share of intervals is not semilinear."""
        return [k for k in range(m, n) if len(self.S(sigma, k)) >= theta * 2**k]


def is_linear(f: DyadicFunction, sigma: float) -> bool:
    return bool(f.linear_deviations(0)[0] <= sigma)


def is_semilinear(f: DyadicFunction, sigma: float) -> bool:
    return bool(f.semilinear_deviations(0)[0] <= sigma)


@dataclass(frozen=True)
class SemilinearCheck:
    """Outcome of the semilinear-to-linear bound on one interval.

    ``hypothesis`` says whether ``f`` is ``sigma``-semilinear on every
    ``Q(i, k)`` with ``k <= m``; when it is, ``deviation <= bound`` must hold.
    """

    m: int
    sigma: float
    hypothesis: bool
    deviation: float
    bound: float

    @property
    def holds(self) -> bool:
        return not self.hypothesis or self.deviation <= self.bound + 1e-12

    def __bool__(self) -> bool:
        return self.holds


def semilinear_to_linear_check(f: DyadicFunction, m: int, sigma: float | None = None) -> SemilinearCheck:
    """Test ``sigma``-semilinearity on scales ``0..m`` against ``(2 sigma + 2**-m)``-linearity.

    With ``sigma=None`` the smallest admissible ``sigma`` is measured from ``f``.
    """
    if not 0 <= m < f.n:
        raise ValueError(f"m must lie in [0, {f.n - 1}]")
    measured = max(float(f.semilinear_deviations(k).max()) for k in range(m + 1))
    if sigma is None:
        sigma = measured
    return SemilinearCheck(m, float(sigma), measured <= sigma + 1e-12,
                           float(f.linear_deviations(0)[0]), 2 * sigma + 2.0**-m)


def sawtooth(n: int, m: int) -> DyadicFunction:
    """Tent train of period ``2**-(m+1)`` on ``[0, 1]``.

    Every dyadic midpoint up to scale ``m`` is a zero, so the function is
    0-semilinear on all those intervals, yet it sits ``2**-(m+2)`` off the
    chord, a quarter of the ``2**-m`` allowance.
    """
    if not 0 <= m < n - 1:
        raise ValueError("need 0 <= m < n - 1")
    x = np.linspace(0.0, 1.0, 2**n + 1)
    p = 2.0 ** -(m + 1)
    return DyadicFunction(p / 2 - np.abs((x % p) - p / 2))


def takagi(n: int, m: int, sigma: float) -> DyadicFunction:
    """``2 sigma sum_{k<=m} 2**-k dist(2**k x, Z)``: exactly ``sigma``-semilinear at every scale ``<= m``.

    Its distance from the chord tends to ``4 sigma / 3``, against the bound
    ``2 sigma + 2**-m``.  It is 1-Lipschitz when ``2 sigma (m + 1) <= 1``.
    """
    x = np.linspace(0.0, 1.0, 2**n + 1)
    f = sum(2.0**-k * np.abs(2.0**k * x - np.round(2.0**k * x)) for k in range(m + 1))
    return DyadicFunction(2 * sigma * f)


# ----------------------------------------------------------------------------
# two-dimensional scan


def extend_triangle(F: np.ndarray) -> callable:
    """1-Lipschitz extension of ``F[x, y]`` (used for ``x <= y``) to the whole plane.

    Reflects across the diagonal, then clamps into the square; both maps are
    1-Lipschitz, so the composite keeps the Lipschitz constant of ``F``.
    """
    N = F.shape[0] - 1

    def ext(x, y):
        x = np.clip(x, 0, N)
        y = np.clip(y, 0, N)
        return F[np.minimum(x, y), np.maximum(x, y)]

    return ext


def _line_functions(ext, N: int, family: int, offsets) -> np.ndarray:
    """Samples of ``F`` along lines of one family; rows are lines, columns are steps."""
    z = np.arange(N + 1)
    o = np.asarray(offsets)[:, None]
    if family == 1:  # y = offset
        return ext(z[None, :], np.broadcast_to(o, (len(offsets), N + 1)))
    if family == 2:  # x = offset
        return ext(np.broadcast_to(o, (len(offsets), N + 1)), z[None, :])
    return ext(z[None, :], z[None, :] + o)  # y = x + offset


@dataclass
class LinearityReport:
    """Result of the two-dimensional scan.

    ``m`` is the chosen scale (``None`` when every candidate is excluded),
    ``n_faces`` and ``n_good`` count the faces of the ``2**(n - m)`` lattice
    inside the triangle and those whose three sides are ``face_sigma``-linear.
    ``per_scale[k]`` holds summed ``|A|``, ``|S|``, ``|X|``, ``|Y|`` over all
    scanned lines at scale ``k``.
    """

    v: int
    n: int
    m: int | None
    sigma: float
    face_sigma: float
    n_faces: int
    n_good: int
    per_scale: dict = field(default_factory=dict)
    excluded: dict = field(default_factory=dict)

    @property
    def guarantee(self) -> float:
        """Lower bound ``|I| - M**2 face_sigma`` promised for the good-face count."""
        return self.n_faces - 4.0**self.m * self.face_sigma if self.m is not None else math.nan

    @property
    def guarantee_met(self) -> bool:
        return self.m is not None and self.n_good >= self.guarantee

    def __post_init__(self):
        if self.n_good > self.n_faces or self.n_good < 0:
            raise InvariantViolation("good-face count out of range")


def _face_sides(ext, N: int, g: int):
    """Boundary samples of all faces of side ``g`` inside the triangle, one array per side."""
    xs, ys = np.meshgrid(np.arange(0, N, g), np.arange(0, N, g), indexing="ij")
    xs, ys = xs.ravel(), ys.ravel()
    r = np.arange(g + 1)[None, :]
    lr = xs + g <= ys
    ul = xs <= ys
    sides = []
    x, y = xs[lr][:, None], ys[lr][:, None]
    sides.append((ext(x + r, y + 0 * r), ext(x + g + 0 * r, y + r), ext(x + r, y + r)))
    x, y = xs[ul][:, None], ys[ul][:, None]
    sides.append((ext(x + 0 * r, y + r), ext(x + r, y + g + 0 * r), ext(x + r, y + r)))
    return sides


def linearity_scan(F: np.ndarray, v: int, n: int | None = None, sigma: float | None = None,
                   face_sigma: float | None = None) -> LinearityReport:
    """Search ``m`` in ``[v, 2v)`` where lines of all three families are mostly linear.

    ``F`` is an ``(N + 1, N + 1)`` array with ``N = 2**n`` whose entries with
    ``x <= y`` give the function on the triangle; it must be 1-Lipschitz along
    each lattice direction (diagonal steps have length ``sqrt 2``).  Lines are
    ``y = j 2**(n - 2v)``, ``x = j 2**(n - 2v)`` and ``y = x + j 2**(n - 2v)``.
    A scale ``k`` is excluded when, for some family, a ``sigma`` share of the
    residue classes ``j mod 2**(2v - k)`` have a ``sigma`` share of their lines
    with ``k`` in ``X(sigma, sigma; v, 2v)``.  The first surviving scale is
    ``m``; good faces are then counted directly with tolerance
    ``face_sigma``, which defaults to ``(log 2**m)**-0.1``.
    """
    F = np.asarray(F, dtype=float)
    N = F.shape[0] - 1
    if n is None:
        n = N.bit_length() - 1
    if F.shape != (N + 1, N + 1) or N != 2**n:
        raise ValueError("F must have shape (2**n + 1, 2**n + 1)")
    if not (1 <= v and 2 * v <= n):
        raise ValueError("need 1 <= v and 2 v <= n")
    tri = np.tri(N + 1, dtype=bool).T
    steps = [np.abs(np.diff(F, axis=0))[tri[1:] & tri[:-1]],
             np.abs(np.diff(F, axis=1))[tri[:, 1:] & tri[:, :-1]],
             np.abs(F[1:, 1:] - F[:-1, :-1])[tri[1:, 1:]] / math.sqrt(2)]
    if max(float(s.max(initial=0.0)) for s in steps) > 1 + 1e-12:
        raise InvariantViolation("F is not 1-Lipschitz on the triangle")
    if sigma is None:
        sigma = v ** (-1 / 9)
    ext = extend_triangle(F)
    offsets = np.arange(2 ** (2 * v) + 1) * 2 ** (n - 2 * v)
    scales = range(v, 2 * v)
    per_scale = {k: {"A": 0, "S": 0, "X": 0, "Y": 0} for k in scales}
    in_X = {}
    for fam in (1, 2, 3):
        rows = _line_functions(ext, N, fam, offsets)
        length = N * (math.sqrt(2) if fam == 3 else 1.0)
        marks = np.zeros((len(offsets), len(per_scale)), dtype=bool)
        for j, row in enumerate(rows):
            f = DyadicFunction(row, 0.0, length)
            for col, k in enumerate(scales):
                a = len(f.A(sigma, k))
                s = len(f.S(sigma, k)) if k < f.n else 0
                per_scale[k]["A"] += a
                per_scale[k]["S"] += s
                marks[j, col] = a >= sigma * 2**k
                per_scale[k]["X"] += int(marks[j, col])
                per_scale[k]["Y"] += int(s >= sigma * 2**k)
        in_X[fam] = marks
    excluded = {}
    for col, k in enumerate(scales):
        period = 2 ** (2 * v - k)
        bad_fams = []
        for fam in (1, 2, 3):
            # W(j; k): lines h * period + j with k in X; J(k): residues with a large W
            hits = [int(in_X[fam][np.arange(2**k) * period + j, col].sum()) for j in range(period)]
            n_bad = sum(h >= sigma * 2**k for h in hits)
            if n_bad >= sigma * period:
                bad_fams.append(fam)
        if bad_fams:
            excluded[k] = bad_fams
    m = next((k for k in scales if k not in excluded), None)
    if m is None:
        return LinearityReport(v, n, None, sigma, math.nan, 0, 0, per_scale, excluded)
    if face_sigma is None:
        face_sigma = math.log(2.0**m) ** -0.1
    g = 2 ** (n - m)
    n_faces = n_good = 0
    for sides in _face_sides(ext, N, g):
        a, b, diag = sides
        dev = np.max([_chord_deviation(a), _chord_deviation(b), _chord_deviation(diag) / math.sqrt(2)], axis=0)
        n_faces += len(dev)
        n_good += int((dev <= face_sigma).sum())
    return LinearityReport(v, n, m, sigma, face_sigma, n_faces, n_good, per_scale, excluded)
