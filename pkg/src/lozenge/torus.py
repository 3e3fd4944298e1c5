"""Weighted lozenge tilings of the ``N x N`` torus and their free energy.

A tiling of the torus gets weight ``a**n1 * b**n2 * c**n3`` from its lozenge
type counts.  The partition function is a signed combination of four
products over the ``N``-th roots of unity, two of them with a half-step
phase shift.  Its per-site limit ``frakZ`` is the mean of
``log|a + b z + c w|`` over the unit torus, and by Jensen's formula the
inner circle average collapses to ``log max(|a + c w|, b)``, leaving a
one-dimensional periodic integral with two kinks.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import CapExceeded, NonConvergence
from .kernels import DEFAULT_QUAD, QuadratureSpec
from .lattice import _UL_PARTNER, Slope
from .variational import sigma

MAX_BRUTE_N = 3
# a product with a factor this small is treated as vanishing
ZERO_FACTOR = 1e-12


@dataclass(frozen=True)
class TorusWeights:
    a: float
    b: float
    c: float

    def __post_init__(self):
        if not all(math.isfinite(v) and v > 0 for v in (self.a, self.b, self.c)):
            raise ValueError(f"torus weights must be positive, got {(self.a, self.b, self.c)}")

    def normalized(self) -> "TorusWeights":
        m = max(self.a, self.b, self.c)
        return TorusWeights(self.a / m, self.b / m, self.c / m)

    def __iter__(self):
        yield self.a
        yield self.b
        yield self.c


def _log_product(N: int, a: float, b: complex, c: complex) -> tuple[float, float, bool]:
    """``(log|P|, arg P, vanishes)`` for ``P = prod_{j,k} (a + b w^j + c w^k)``."""
    w = np.exp(2j * np.pi * np.arange(N) / N)
    terms = a + b * w[:, None] + c * w[None, :]
    mod = np.abs(terms)
    if (mod < ZERO_FACTOR).any():
        return -math.inf, 0.0, True
    return float(np.log(mod).sum()), float(np.angle(terms).sum()), False


def _four_products(N: int, w: TorusWeights):
    """Signed products; the negative one is the doubly shifted product for odd
    ``N`` and the unshifted one for even ``N``."""
    h = np.exp(1j * np.pi / N)
    odd = N % 2 == 1
    return [
        (+1 if odd else -1, _log_product(N, w.a, w.b, w.c)),
        (+1, _log_product(N, w.a, w.b, w.c * h)),
        (+1, _log_product(N, w.a, w.b * h, w.c)),
        (-1 if odd else +1, _log_product(N, w.a, w.b * h, w.c * h)),
    ]


def log_Z_exact(N: int, w: TorusWeights) -> float:
    """Natural log of the torus partition function, safe for large ``N``."""
    if N < 1:
        raise ValueError("N must be positive")
    parts = [(sign, lm, ph) for sign, (lm, ph, zero) in _four_products(N, w) if not zero]
    top = max(lm for _, lm, _ in parts)
    total = sum(sign * math.exp(lm - top) * math.cos(ph) for sign, lm, ph in parts) / 2
    if total <= 0:
        raise NonConvergence(f"four-product combination lost all precision at N={N}")
    return top + math.log(total)


def Z_exact(N: int, w: TorusWeights) -> float:
    lz = log_Z_exact(N, w)
    return math.exp(lz) if lz < 709 else math.inf


def _torus_tilings(N: int):
    """Yield the type grid ``types[x, y]`` of every tiling of the ``N x N`` torus."""
    faces = [(x, y) for x in range(N) for y in range(N)]
    index = {f: i for i, f in enumerate(faces)}
    partner = {t: [index[((x + dx) % N, (y + dy) % N)] for x, y in faces]
               for t, (dx, dy) in _UL_PARTNER.items()}

    def extend(k, used, chosen):
        if k == len(faces):
            yield tuple(chosen)
            return
        for t in (1, 2, 3):
            p = partner[t][k]
            if not used[p]:
                used[p] = True
                chosen.append(t)
                yield from extend(k + 1, used, chosen)
                chosen.pop()
                used[p] = False

    yield from extend(0, [False] * len(faces), [])


def torus_type_counts(N: int, max_n: int = MAX_BRUTE_N) -> dict[tuple[int, int, int], int]:
    """Multiplicity of each ``(n1, n2, n3)`` among tilings of the ``N x N`` torus."""
    if N < 1:
        raise ValueError("torus size must be positive")
    if N > max_n:
        raise CapExceeded(f"brute force enumeration is capped at N = {max_n}")
    out: dict[tuple[int, int, int], int] = {}
    for types in _torus_tilings(N):
        key = (types.count(1), types.count(2), types.count(3))
        out[key] = out.get(key, 0) + 1
    return out


def Z_bruteforce(N: int, w: TorusWeights) -> float:
    return float(sum(m * w.a**n1 * w.b**n2 * w.c**n3
                     for (n1, n2, n3), m in torus_type_counts(N).items()))


def constrained_count(N: int, slope: Slope, omega: float) -> int:
    """Number of torus tilings with ``n1 / N^2`` and ``n2 / N^2`` within ``omega`` of ``slope``."""
    if omega < 0:
        raise ValueError("omega must be non-negative")
    area = N * N
    eps = 1e-12
    return sum(m for (n1, n2, _), m in torus_type_counts(N).items()
               if abs(n1 / area - slope.s) <= omega + eps and abs(n2 / area - slope.t) <= omega + eps)


def _kinks(w: TorusWeights) -> list[float]:
    """Angles ``phi`` in ``(0, pi)`` where ``|a + c e^{i phi}| = b``."""
    k = (w.b**2 - w.a**2 - w.c**2) / (2 * w.a * w.c)
    return [math.acos(k)] if -1 < k < 1 else []


def _half_circle(f, w: TorusWeights, quad: QuadratureSpec) -> float:
    # integrands are even in phi, so integrate over [0, pi] and divide by pi
    val, err = integrate.quad(f, 0.0, math.pi, points=_kinks(w) or None,
                              epsabs=quad.rtol, epsrel=quad.rtol, limit=200)
    if err > 1e3 * quad.rtol * max(abs(val), 1.0):
        raise NonConvergence(f"circle quadrature error {err:.2e} for weights {tuple(w)}")
    return val / math.pi


def frakZ(w: TorusWeights, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Mean of ``log|a + b z + c w|`` over the unit torus."""
    def f(phi):
        return math.log(max(abs(w.a + w.c * complex(math.cos(phi), math.sin(phi))), w.b))
    return _half_circle(f, w, quad)


def tile_densities(w: TorusWeights, quad: QuadratureSpec = DEFAULT_QUAD) -> Slope:
    """Densities ``(p_a, p_b)`` of the type-1 and type-2 lozenges under weights ``w``.

    For fixed ``w`` on the circle, the ``z``-average of ``a / (A + b z)`` with
    ``A = a + c w`` is ``a / A`` when ``|A| > b`` and zero otherwise; that of
    ``b z / (A + b z)`` is zero or one in the same two cases.
    """
    def fa(phi):
        A = w.a + w.c * complex(math.cos(phi), math.sin(phi))
        return (w.a / A).real if abs(A) > w.b else 0.0

    k = (w.b**2 - w.a**2 - w.c**2) / (2 * w.a * w.c)
    pb = 0.0 if k <= -1 else 1.0 if k >= 1 else 1.0 - math.acos(k) / math.pi
    return Slope(_half_circle(fa, w, quad), pb)


def weights_from_slope(slope: Slope, quad: QuadratureSpec = DEFAULT_QUAD, tol: float = 1e-10) -> TorusWeights:
    """Weights with ``max = 1`` whose tile densities equal ``slope``.

    Densities are the gradient of ``frakZ`` in ``(log b, log c)`` at ``a = 1``,
    so the weights minimize the convex function ``frakZ - t log b - u log c``
    with ``u = 1 - s - t``; a quasi-Newton line search does this from equal
    weights.  Slopes within ``1e-3`` of the boundary of the
    triangle give a warning since the weights then degenerate.
    """
    if not slope.in_interior():
        raise ValueError(f"slope {tuple(slope)} is not in the open triangle")
    if slope.distance_to_boundary() < 1e-3:
        warnings.warn(f"slope {tuple(slope)} is close to the boundary; weights are ill conditioned",
                      RuntimeWarning, stacklevel=2)
    target = np.array([slope.t, 1.0 - slope.s - slope.t])

    def objective(u):
        w = TorusWeights(1.0, math.exp(u[0]), math.exp(u[1]))
        d = tile_densities(w, quad)
        grad = np.array([d.t, 1.0 - d.s - d.t]) - target
        return frakZ(w, quad) - target @ u, grad

    sol = optimize.minimize(objective, np.zeros(2), jac=True, method="BFGS", options={"gtol": 1e-8})
    u = sol.x
    g = objective(u)[1]
    # Newton polish on the gradient; BFGS stalls on roundoff well above tol
    for _ in range(20):
        if np.abs(g).max() < tol:
            break
        H = np.empty((2, 2))
        for i in range(2):
            e = np.zeros(2)
            e[i] = 1e-5
            H[:, i] = (objective(u + e)[1] - objective(u - e)[1]) / 2e-5
        u = u - np.linalg.solve((H + H.T) / 2, g)
        g = objective(u)[1]
    if np.abs(g).max() >= tol:
        raise NonConvergence(f"weights for slope {tuple(slope)} not found")
    return TorusWeights(1.0, math.exp(u[0]), math.exp(u[1])).normalized()


@dataclass(frozen=True)
class LegendreReport:
    slope: Slope
    weights: TorusWeights
    sigma: float
    legendre: float

    @property
    def residual(self) -> float:
        return abs(self.sigma - self.legendre)


def legendre_check(slope: Slope, quad: QuadratureSpec = DEFAULT_QUAD) -> LegendreReport:
    """Compare ``sigma(s, t)`` with ``frakZ - s log a - t log b - (1 - s - t) log c``."""
    w = weights_from_slope(slope, quad)
    s, t = slope.s, slope.t
    leg = frakZ(w, quad) - s * math.log(w.a) - t * math.log(w.b) - (1 - s - t) * math.log(w.c)
    return LegendreReport(slope, w, float(sigma(s, t)), leg)


def torus_convergence(sizes, w: TorusWeights = TorusWeights(1.0, 1.0, 1.0),
                      quad: QuadratureSpec = DEFAULT_QUAD) -> list[tuple[int, float, float]]:
    """Rows ``(N, log Z / N^2, |log Z / N^2 - frakZ|)``."""
    limit = frakZ(w, quad)
    rows = []
    for N in sizes:
        f = log_Z_exact(N, w) / N**2
        rows.append((N, f, abs(f - limit)))
    return rows
