"""Correlation kernels for lozenge tilings and conditioned walks.

Two kernels are evaluated here.

The extended discrete sine kernel of complex slope ``xi``,

    K_xi(x1, y1; x2, y2) = (1 / 2 pi i) int_{conj(xi)}^{xi} (1 - z)^(y1 - y2) z^(x2 - x1 - 1) dz,

integrated along a half ellipse that meets the real axis in ``(0, 1)`` when
``y1 >= y2`` and in ``(-inf, 0)`` otherwise.  Its determinants give the joint
probabilities of type-1 lozenges under the translation invariant measure.

The finite kernel of Bernoulli walkers started at ``a`` and conditioned not
to intersect.  After taking the ``w`` residues at the particles
``k in a, x - t <= k <= x`` it reads

    K(x, t; y, s) = 1[x = y, t = s]
                    - 1[x >= y, t > s] (-1)^(x - y + 1) C(t - s, x - y)
                    - sum_k pi (-1)^x C(t, x - k) J_k(y, s)

with ``J_k`` the line integral over ``Re z = y - s + 1/2`` (divided by ``2 pi``) of

    ((1 - beta) / beta)^(k - z) (z - y + 1)_{s - 1} prod_j (z - a_j)
    / ((s - 1)! prod_{a_j != k} (k - a_j) sin(pi z) (k - z)).

Everything inside ``J_k`` is accumulated in log space, which keeps large
particle counts and long times free of overflow.  For long times the sum over
``k`` cancels catastrophically (binomials near ``C(t, t/2)`` with alternating
signs), so once the cancellation exceeds ``CANCELLATION_LIMIT`` the entry is
recomputed node by node: the rational sum ``sum_k c_k f^k / (k - z)`` is
formed in multiprecision and only then multiplied by the common factor.

At time zero the configuration is deterministic, so rows with ``t = 0`` are
replaced by ``1[x = y, s = 0] 1[x not in a]``.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field

import gmpy2
import numpy as np

from .errors import NonConvergence
from .lattice import Slope


@dataclass(frozen=True)
class ComplexSlope:
    xi: complex

    def __post_init__(self):
        if not complex(self.xi).imag > 0:
            raise ValueError("complex slope must lie in the upper half plane")
        object.__setattr__(self, "xi", complex(self.xi))

    @property
    def density(self) -> float:
        """Type-1 density ``arg(xi) / pi``."""
        return cmath.phase(self.xi) / math.pi


@dataclass(frozen=True)
class QuadratureSpec:
    nodes_per_unit: int = 16
    truncation: float = 40.0
    rtol: float = 1e-12
    max_refinements: int = 8

    def __post_init__(self):
        if self.truncation <= 0:
            raise ValueError("truncation height must be positive")
        if not 0 < self.rtol <= 1e-3:
            raise ValueError("tolerance must lie in (0, 1e-3]")
        if self.nodes_per_unit < 1:
            raise ValueError("need at least one node per unit length")


DEFAULT_QUAD = QuadratureSpec()


def slope_to_xi(slope: Slope) -> ComplexSlope:
    s, t = slope.s, slope.t
    if not slope.in_interior():
        raise ValueError(f"slope {(s, t)} is not in the open triangle")
    return ComplexSlope(cmath.exp(1j * math.pi * s) * math.sin(math.pi * t) / math.sin(math.pi * (1 - s - t)))


def beta_rho_to_xi(beta: float, rho: float) -> ComplexSlope:
    """Complex slope seen by walkers of jump rate ``beta`` and particle density ``rho``."""
    if not (0 < beta < 1 and 0 < rho < 1):
        raise ValueError("beta and rho must lie in (0, 1)")
    return ComplexSlope(beta / (1 - beta) * cmath.exp(1j * math.pi * (1 - rho)))


def xi_to_slope(xi: ComplexSlope | complex) -> Slope:
    """Inverse of ``slope_to_xi``: the angles at ``0`` and ``1`` of the triangle ``0, 1, xi`` over pi."""
    z = xi.xi if isinstance(xi, ComplexSlope) else complex(xi)
    return Slope(cmath.phase(z) / math.pi, 1 - cmath.phase(z - 1) / math.pi)


# Sine kernel ------------------------------------------------------------

def _arc(xi: complex, crossing: float, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X, Y = xi.real, xi.imag
    z = X + (crossing - X) * np.cos(theta) + 1j * Y * np.sin(theta)
    dz = -(crossing - X) * np.sin(theta) + 1j * Y * np.cos(theta)
    return z, dz


def default_crossing(xi: complex, y1: int, y2: int) -> float:
    return 0.5 if y1 >= y2 else min(xi.real, 0.0) - 1.0


def _gauss_arc(f, xi: complex, crossing: float, n: int) -> tuple[complex, float]:
    """Integral along the arc and the integral of its absolute integrand (the rounding scale)."""
    nodes, weights = np.polynomial.legendre.leggauss(n)
    theta = nodes * (math.pi / 2)
    z, dz = _arc(xi, crossing, theta)
    terms = weights * f(z) * dz * (math.pi / 2)
    return complex(terms.sum()), float(np.abs(terms).sum())


def sine_kernel(xi: ComplexSlope | complex, x1: int, y1: int, x2: int, y2: int,
                quad: QuadratureSpec = DEFAULT_QUAD, crossing: float | None = None) -> complex:
    """Extended discrete sine kernel by Gauss-Legendre quadrature on a half ellipse.

    ``crossing`` overrides the real-axis crossing point; it must lie in
    ``(0, 1)`` when ``y1 >= y2`` and be negative otherwise.
    """
    z0 = xi.xi if isinstance(xi, ComplexSlope) else complex(xi)
    if z0.imag <= 0:
        raise ValueError("complex slope must lie in the upper half plane")
    p = default_crossing(z0, y1, y2) if crossing is None else float(crossing)
    if y1 >= y2 and not 0 < p < 1:
        raise ValueError("arc must cross the real axis inside (0, 1)")
    if y1 < y2 and not p < 0:
        raise ValueError("arc must cross the real axis left of 0")
    m, n = y1 - y2, x2 - x1 - 1

    def f(z):
        return (1 - z) ** m * z**n

    length = math.pi * math.sqrt((abs(p - z0.real) ** 2 + z0.imag**2) / 2)
    nodes = max(8, int(quad.nodes_per_unit * length * (1 + abs(m) + abs(n)) ** 0.5))
    prev, _ = _gauss_arc(f, z0, p, nodes)
    for _ in range(quad.max_refinements):
        nodes *= 2
        cur, scale = _gauss_arc(f, z0, p, nodes)
        if abs(cur - prev) <= quad.rtol * max(1.0, scale):
            return cur / (2j * math.pi)
        prev = cur
    raise NonConvergence("sine kernel quadrature did not converge")


class SineKernel:
    """Callable ``K(p, q)`` on points ``(x, y)`` with memoised translation-invariant entries."""

    def __init__(self, xi: ComplexSlope | complex, quad: QuadratureSpec = DEFAULT_QUAD):
        self.xi = xi if isinstance(xi, ComplexSlope) else ComplexSlope(xi)
        self.quad = quad
        self._cache: dict = {}

    def __call__(self, p, q) -> float:
        key = (q[0] - p[0], p[1] - q[1])
        if key not in self._cache:
            self._cache[key] = sine_kernel(self.xi, 0, key[1], key[0], 0, self.quad).real
        return self._cache[key]


# Finite kernel ----------------------------------------------------------

def _log_poch(z: np.ndarray, k: int) -> np.ndarray:
    """``log (z)_k`` for ``k >= 0`` summed termwise (complex, any branch)."""
    out = np.zeros_like(z)
    for i in range(k):
        out += np.log(z + i)
    return out


CANCELLATION_LIMIT = 1e6


@dataclass
class FiniteKernel:
    """Kernel of walkers with jump rate ``beta`` started at ``a``, memoised per column."""

    beta: float
    a: tuple[int, ...]
    quad: QuadratureSpec = DEFAULT_QUAD
    _columns: dict = field(default_factory=dict, repr=False)
    _scales: dict = field(default_factory=dict, repr=False)
    _sums: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        self.a = tuple(int(v) for v in self.a)
        if any(self.a[i] >= self.a[i + 1] for i in range(len(self.a) - 1)):
            raise ValueError("initial data must be strictly increasing")
        self._arr = np.array(self.a, dtype=float)
        self._aset = set(self.a)
        # log prod_{j != k} (k - a_j), complex so that negative factors carry i pi
        diff = self._arr[:, None] - self._arr[None, :] + 0j
        np.fill_diagonal(diff, 1.0)
        self._log_gaps = np.log(diff).sum(axis=1)

    def _log_common(self, y: int, s: int, u: np.ndarray) -> np.ndarray:
        """Log of the particle independent factor ``f^-z (z-y+1)_{s-1} prod (z-a_j) / ((s-1)! sin(pi z))``."""
        z = y - s + 0.5 + 1j * u
        logf = math.log((1 - self.beta) / self.beta)
        common = _log_poch(z - y + 1, s - 1) + np.log(z[:, None] - self._arr[None, :]).sum(axis=1)
        # log sin(pi z) with the exponentially large half factored out
        up = u >= 0
        small = np.exp(np.where(up, 2j, -2j) * math.pi * z)
        log_sin = np.where(up, -1j * math.pi * z + cmath.log(0.5j), 1j * math.pi * z + cmath.log(-0.5j))
        log_sin = log_sin + np.log(1 - small)
        return common - log_sin - z * logf - math.lgamma(s)

    def _log_integrand(self, y: int, s: int, u: np.ndarray) -> np.ndarray:
        """Logarithm of the ``J_k`` integrand at ``z = y - s + 1/2 + i u``, one row per particle."""
        z = y - s + 0.5 + 1j * u
        logf = math.log((1 - self.beta) / self.beta)
        k = self._arr[:, None]
        return (self._log_common(y, s, u)[None, :] + k * logf - np.log(k - z[None, :])
                - self._log_gaps[:, None])

    def _line(self, y: int, s: int, h: float, Y: float, offset: float = 0.0) -> np.ndarray:
        """Trapezoid sum for ``J_k(y, s)`` on nodes ``offset + h Z`` within ``|Im z| <= Y``."""
        n = int(math.ceil(Y / h))
        u = np.arange(-n, n + 1) * h + offset
        vals = np.exp(self._log_integrand(y, s, u))
        return vals.sum(axis=1) * h / (2 * math.pi), np.abs(vals).sum(axis=1) * h / (2 * math.pi)

    def _truncation(self, y: int, s: int) -> float:
        Y = self.quad.truncation
        while True:
            u = np.linspace(-Y, Y, 401)
            mag = np.abs(np.exp(self._log_integrand(y, s, u).real))
            peak = mag.max(axis=1)
            if (np.maximum(mag[:, 0], mag[:, -1]) <= 1e-3 * self.quad.rtol * peak).all():
                return Y
            Y *= 2
            if Y > 1e4:
                raise NonConvergence("line integral tail does not decay")

    def column(self, y: int, s: int) -> np.ndarray:
        key = (y, s)
        if key in self._columns:
            return self._columns[key]
        if s < 1 or not self.a:
            col = np.zeros(len(self.a), dtype=complex)
            self._columns[key] = col
            self._scales[key] = np.zeros(len(self.a))
            return col
        q = self.quad
        Y = self._truncation(y, s)
        h = 1.0 / q.nodes_per_unit
        prev, scale = self._line(y, s, h, Y)
        for _ in range(q.max_refinements):
            # halving the step only needs the midpoints
            mid, mid_scale = self._line(y, s, h, Y, offset=h / 2)
            cur = 0.5 * (prev + mid)
            scale = 0.5 * (scale + mid_scale)
            h /= 2
            if (np.abs(cur - prev) <= q.rtol * scale).all():
                self._columns[key] = cur
                self._scales[key] = scale
                return cur
            prev = cur
        raise NonConvergence("finite kernel line integral did not converge")

    def residues(self, x: int, t: int) -> np.ndarray:
        """``pi (-1)^x C(t, x - k)`` for particles ``k`` in ``[x - t, x]``, else zero."""
        out = np.zeros(len(self.a))
        for idx, k in enumerate(self.a):
            if x - t <= k <= x:
                out[idx] = math.pi * (-1) ** (x % 2) * math.comb(t, x - k)
        return out

    def _residue_sum(self, x: int, t: int, y: int, s: int) -> float:
        R = self.residues(x, t)
        col = self.column(y, s)
        if np.dot(np.abs(R), self._scales[(y, s)]) <= CANCELLATION_LIMIT:
            return float(np.dot(R, col).real)
        return self._precise(x, t, y, s)

    def _coefficients(self, x: int, t: int, bits: int) -> list:
        """Exact ``pi``-free weights ``(-1)^x C(t, x-k) f^k / prod_{j != k} (k - a_j)`` as multiprecision reals."""
        f = gmpy2.mpq(*(1 - self.beta).as_integer_ratio()) / gmpy2.mpq(*self.beta.as_integer_ratio())
        out = []
        with gmpy2.context(gmpy2.get_context(), precision=bits):
            for k in self.a:
                if x - t <= k <= x:
                    den = 1
                    for aj in self.a:
                        if aj != k:
                            den *= k - aj
                    w = gmpy2.mpq((-1) ** (x % 2) * math.comb(t, x - k), den) * f**k
                    out.append((k, gmpy2.mpfr(w)))
        return out

    def _partial_fractions(self, x: int, t: int, z: np.ndarray) -> np.ndarray:
        """``log sum_k c_k / (k - z)`` evaluated with enough bits to survive the cancellation."""
        bits = 128
        while True:
            coeffs = self._coefficients(x, t, bits)
            out = np.empty(len(z), dtype=complex)
            with gmpy2.context(gmpy2.get_context(), precision=bits):
                for i, zi in enumerate(z):
                    zz = gmpy2.mpc(zi.real, zi.imag)
                    acc = gmpy2.mpc(0)
                    for k, c in coeffs:
                        acc += c / (k - zz)
                    out[i] = complex(gmpy2.log(acc)) if acc != 0 else -np.inf
            # terms reach 2 max |c_k| (nodes stay 1/2 away from the particles)
            top = max((float(gmpy2.log10(abs(c))) for _, c in coeffs), default=0.0) + math.log10(2)
            floor = float(np.min(out.real)) / math.log(10)
            if bits * math.log10(2) >= top - floor + 20 or bits >= 8192:
                return out
            bits *= 2

    def _precise(self, x: int, t: int, y: int, s: int) -> float:
        q = self.quad
        Y = self._truncation(y, s)
        h = 1.0 / q.nodes_per_unit
        prev = None
        for _ in range(q.max_refinements):
            key = (x, t, y - s, h, Y)
            if key not in self._sums:
                n = int(math.ceil(Y / h))
                u = np.arange(-n, n + 1) * h
                self._sums[key] = (u, self._partial_fractions(x, t, y - s + 0.5 + 1j * u))
            u, logS = self._sums[key]
            vals = np.exp(self._log_common(y, s, u) + logS)
            cur = float(vals.sum().real) * h / 2
            scale = float(np.abs(vals).sum()) * h / 2
            if prev is not None and abs(cur - prev) <= max(q.rtol * scale, 1e-9):
                return cur
            prev = cur
            h /= 2
        raise NonConvergence("finite kernel line integral did not converge")

    def __call__(self, x: int, t: int, y: int, s: int) -> float:
        if t < 0 or s < 0:
            raise ValueError("times must be non-negative")
        if t == 0:
            return float(x == y and s == 0 and x not in self._aset)
        val = float(x == y and t == s)
        if x >= y and t > s:
            val -= (-1) ** ((x - y + 1) % 2) * math.comb(t - s, x - y)
        if s >= 1:
            val -= self._residue_sum(x, t, y, s)
        return val

    def kernel(self, p, q) -> float:
        return self(p[0], p[1], q[0], q[1])

    def matrix(self, points) -> np.ndarray:
        """Kernel matrix on a list of ``(x, t)`` points."""
        pts = np.array([tuple(p) for p in points], dtype=np.int64).reshape(-1, 2)
        x, t = pts[:, 0], pts[:, 1]
        if (t < 0).any():
            raise ValueError("times must be non-negative")
        X, Y = x[:, None], x[None, :]
        Tt, S = t[:, None], t[None, :]
        M = ((X == Y) & (Tt == S)).astype(float)
        dt = Tt - S
        dx = X - Y
        band = (dx >= 0) & (dt > 0) & (dx <= np.maximum(dt, 0))
        binom = np.zeros(M.shape)
        for i, j in zip(*np.nonzero(band)):
            binom[i, j] = math.comb(int(dt[i, j]), int(dx[i, j])) * (-1) ** ((int(dx[i, j]) + 1) % 2)
        M -= binom
        if self.a:
            R = np.array([self.residues(int(xi), int(ti)) for xi, ti in pts])
            J = np.array([self.column(int(yi), int(si)) for yi, si in pts])
            scale = np.abs(R) @ np.array([self._scales[(int(yi), int(si))] for yi, si in pts]).T
            M -= (R @ J.T).real
            for i, j in zip(*np.nonzero(scale > CANCELLATION_LIMIT)):
                M[i, j] += float((R[i] @ J[j]).real) - self._precise(int(x[i]), int(t[i]), int(Y[0, j]), int(S[0, j]))
        zero = t == 0
        M[zero, :] = 0.0
        for i in np.flatnonzero(zero):
            M[i, i] = float(int(x[i]) not in self._aset)
        return M


def finite_kernel(beta: float, a, x: int, t: int, y: int, s: int, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    return FiniteKernel(beta, tuple(a), quad)(x, t, y, s)


# Determinants -----------------------------------------------------------

def kernel_matrix(kernel, points) -> np.ndarray:
    pts = [tuple(p) for p in points]
    if hasattr(kernel, "matrix"):
        return kernel.matrix(pts)
    k = kernel
    return np.array([[k(p, q) for q in pts] for p in pts], dtype=float).reshape(len(pts), len(pts))


def correlation_probability(kernel, points, with_flag: bool = False):
    """``det [K(p_i, p_j)]``; with ``with_flag`` also whether the value is within rounding noise of zero."""
    pts = [tuple(p) for p in points]
    if len(set(pts)) != len(pts):
        raise ValueError("points must be distinct")
    if not pts:
        return (1.0, False) if with_flag else 1.0
    M = kernel_matrix(kernel, pts)
    det = float(np.linalg.det(M))
    if not with_flag:
        return det
    floor = 1e-13 * max(1.0, float(np.prod(np.linalg.norm(M, axis=1))))
    return det, abs(det) < floor


def subset_determinants(M: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray]:
    """All principal minors of one size: index combinations and their determinants."""
    n = len(M)
    combos = np.array(list(itertools.combinations(range(n), size)), dtype=np.int64).reshape(-1, size)
    if not len(combos):
        return combos, np.zeros(0)
    sub = M[combos[:, :, None], combos[:, None, :]]
    return combos, np.linalg.det(sub)


def D_diagnostic(a, X: float, Y: float = math.inf) -> float:
    """``|sum 1/a_k|`` over ``|a_k|`` in ``[X, Y]``."""
    if not 0 < X <= Y:
        raise ValueError("need 0 < X <= Y")
    total = 0.0
    for v in a:
        if X <= abs(v) <= Y:
            if v == 0:
                raise ZeroDivisionError("zero particle inside the band")
            total += 1.0 / v
    return abs(total)


@dataclass
class ConvergenceReport:
    xi: complex
    T: list
    discrepancy: list
    diagonal_finite: list
    diagonal_sine: float

    def decreasing(self) -> bool:
        d = self.discrepancy
        return all(d[i + 1] < d[i] for i in range(len(d) - 1))


def kernel_convergence_experiment(beta: float, rho: float, a_generator, T_list, offsets: int = 2,
                                  quad: QuadratureSpec = DEFAULT_QUAD) -> ConvergenceReport:
    """Largest ``|K_{beta;a}(x, t + T; y, s + T) - K_xi(x, t; y, s)|`` over ``|x|, |y|, t, s <= offsets``.

    ``a_generator(T)`` supplies the initial data used at time shift ``T``.
    """
    xi = beta_rho_to_xi(beta, rho)
    sine = SineKernel(xi, quad)
    B = int(offsets)
    out, diag = [], []
    for T in T_list:
        K = FiniteKernel(beta, tuple(a_generator(T)), quad)
        worst = 0.0
        for x, y in itertools.product(range(-B, B + 1), repeat=2):
            for t, s in itertools.product(range(0, B + 1), repeat=2):
                if t + T == 0:
                    continue
                worst = max(worst, abs(K(x, t + T, y, s + T) - sine((x, t), (y, s))))
        out.append(worst)
        diag.append(K(0, T + 1, 0, T + 1) if T + 1 > 0 else float("nan"))
    return ConvergenceReport(xi.xi, list(T_list), out, diag, xi.density)
