"""Surface tension, the entropy functional and its discrete maximiser.

Slopes are gradients ``(s, t) = (dF/dx, dF/dy)`` in lattice coordinates,
where the admissible set is the triangle ``s, t >= 0, s + t <= 1``.  The
surface tension is

    sigma(s, t) = (L(pi s) + L(pi t) + L(pi (1 - s - t))) / pi,

with ``L`` the Lobachevsky function.  Its Hessian is ``-pi`` times the
coefficient matrix ``a_xx = cot(pi u) + cot(pi s)``, ``a_xy = cot(pi u)``,
``a_yy = cot(pi u) + cot(pi t)``, ``u = 1 - s - t``.

Profiles live on a square grid of spacing ``h`` cut along the ``(1, 1)``
diagonal, so each triangle is a lattice face and its slope is read off from
two edge differences.  A triangle is admissible iff its three edge
differences lie in ``[0, h]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve
from scipy.special import zeta

from .errors import Infeasible, InvariantViolation, NonConvergence
from .lattice import Domain, Slope

CLAMP = 1e-8

# Cl_2(x) = x - x log x + sum_k c_k x^(2k+1) for |x| < 2 pi, where
# c_k = |B_2k| / (2k (2k+1) (2k)!) = 2 zeta(2k) / ((2 pi)^2k 2k (2k+1))
_K = np.arange(1, 30)
_CLAUSEN = 2 * zeta(2 * _K) / ((2 * math.pi) ** (2 * _K) * 2 * _K * (2 * _K + 1))
# pi minus its double rounding, so pi - x keeps full relative accuracy near pi
_PI_LOW = 1.2246467991473532e-16


def _clausen(x: np.ndarray) -> np.ndarray:
    """``Cl_2(x)`` for ``x`` in ``[0, pi]``."""
    x = np.asarray(x, dtype=float)
    out = np.where(x > 0, x - x * np.log(np.where(x > 0, x, 1.0)), 0.0)
    x2 = x * x
    term = x.copy()
    for c in _CLAUSEN:
        term = term * x2
        out = out + c * term
    return out


def _lob(x: np.ndarray) -> np.ndarray:
    # L is odd about pi / 2 on [0, pi]: L(pi - x) = -L(x)
    x = np.asarray(x, dtype=float)
    folded = np.where(x > math.pi / 2, (math.pi - x) + _PI_LOW, x)
    val = 0.5 * _clausen(2 * folded)
    val = np.where(x > math.pi / 2, -val, val)
    # near the zero at pi / 2 integrate -log(2 cos u) term by term instead
    d = (x - math.pi / 2) - _PI_LOW / 2
    d2 = d * d
    near = -d * math.log(2) + d * d2 * (1 / 6 + d2 * (1 / 60 + d2 * (1 / 315 + d2 * (17 / 22680 + d2 * 31 / 155925))))
    return np.where(np.abs(d) <= 0.1, near, val)


def lobachevsky(x):
    """``L(x) = -int_0^x log|2 sin z| dz`` on ``[0, pi]``; accepts scalars or arrays."""
    arr = np.asarray(x, dtype=float)
    if ((arr < -1e-14) | (arr > math.pi + 1e-14)).any():
        raise ValueError("L is only evaluated on [0, pi]")
    out = _lob(np.clip(arr, 0.0, math.pi))
    return float(out) if out.ndim == 0 else out


# Surface tension -------------------------------------------------------

def sigma(s, t):
    """Vectorised surface tension on the closed triangle."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    u = 1.0 - s - t
    pts = [np.clip(v, 0.0, 1.0) * math.pi for v in (s, t, u)]
    out = (_lob(pts[0]) + _lob(pts[1]) + _lob(pts[2])) / math.pi
    return float(out) if out.ndim == 0 else out


def _clamped(s, t):
    s = np.clip(np.asarray(s, dtype=float), CLAMP, 1 - 2 * CLAMP)
    t = np.clip(np.asarray(t, dtype=float), CLAMP, 1 - 2 * CLAMP)
    over = s + t - (1 - CLAMP)
    excess = np.maximum(over, 0.0) / 2
    return s - excess, t - excess


def sigma_gradient(s, t):
    """``(log(sin pi u / sin pi s), log(sin pi u / sin pi t))``, clamped near the boundary."""
    s, t = _clamped(s, t)
    su = np.log(np.sin(math.pi * (1 - s - t)))
    return su - np.log(np.sin(math.pi * s)), su - np.log(np.sin(math.pi * t))


def aij(s, t):
    """Coefficients ``(a_xx, a_xy, a_yy)`` of the Euler-Lagrange operator."""
    s, t = _clamped(s, t)
    cu = 1.0 / np.tan(math.pi * (1 - s - t))
    return cu + 1.0 / np.tan(math.pi * s), cu, cu + 1.0 / np.tan(math.pi * t)


@dataclass(frozen=True)
class SurfaceTensionEval:
    value: float
    gradient: tuple[float, float]
    a_xx: float
    a_xy: float
    a_yy: float

    @property
    def hessian(self) -> np.ndarray:
        return -math.pi * np.array([[self.a_xx, self.a_xy], [self.a_xy, self.a_yy]])


def surface_tension(slope: Slope) -> SurfaceTensionEval:
    if not slope.in_closed_triangle(1e-12):
        raise ValueError(f"slope {tuple(slope)} is outside the closed triangle")
    gs, gt = sigma_gradient(slope.s, slope.t)
    axx, axy, ayy = aij(slope.s, slope.t)
    return SurfaceTensionEval(sigma(slope.s, slope.t), (float(gs), float(gt)), float(axx), float(axy), float(ayy))


# Meshes and profiles ---------------------------------------------------

@dataclass(frozen=True)
class Region:
    """A planar region given by a vectorised membership test and a bounding box."""

    contains: Callable[[np.ndarray, np.ndarray], np.ndarray]
    bbox: tuple[float, float, float, float]

    @classmethod
    def polygon(cls, vertices) -> "Region":
        """Closed polygon by even-odd ray casting, with the boundary counted as inside."""
        P = np.asarray(vertices, dtype=float)
        nxt = np.roll(P, -1, axis=0)

        def contains(x, y):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            inside = np.zeros(np.broadcast(x, y).shape, dtype=bool)
            on_edge = np.zeros_like(inside)
            for (x1, y1), (x2, y2) in zip(P, nxt):
                cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
                within = (np.minimum(x1, x2) - 1e-12 <= x) & (x <= np.maximum(x1, x2) + 1e-12) & \
                         (np.minimum(y1, y2) - 1e-12 <= y) & (y <= np.maximum(y1, y2) + 1e-12)
                on_edge |= within & (np.abs(cross) <= 1e-12 * max(1.0, abs(x2 - x1) + abs(y2 - y1)))
                if y1 != y2:
                    hit = ((y1 > y) != (y2 > y)) & (x < x1 + (y - y1) * (x2 - x1) / (y2 - y1))
                    inside ^= hit
            return inside | on_edge

        lo, hi = P.min(axis=0), P.max(axis=0)
        return cls(contains, (lo[0], lo[1], hi[0], hi[1]))

    @classmethod
    def disk(cls, center=(0.0, 0.0), radius: float = 1.0) -> "Region":
        cx, cy = center
        return cls(lambda x, y: (np.asarray(x) - cx) ** 2 + (np.asarray(y) - cy) ** 2 <= radius**2 * (1 + 1e-12),
                   (cx - radius, cy - radius, cx + radius, cy + radius))

    @classmethod
    def hexagon(cls, a: float, b: float, c: float) -> "Region":
        return cls.polygon(hexagon_corners(a, b, c))


def hexagon_corners(a: float, b: float, c: float) -> np.ndarray:
    """Corners of the ``a x b x c`` hexagon in lattice coordinates, counter-clockwise."""
    if min(a, b, c) <= 0:
        raise ValueError("hexagon sides must be positive")
    return np.array([(0, 0), (a, 0), (a + c, c), (a + c, b + c), (c, b + c), (0, b)], dtype=float)


def hexagon_boundary(a: float, b: float, c: float) -> Callable:
    """Boundary heights of the hexagon: 0 on the sides at the origin, ``c`` on the far sides.

    ``clip(max(x - a, y - b), 0, c)`` restricts to ``y`` on the side
    ``x - y = a`` and to ``x`` on the side ``y - x = b``.
    """

    def f(x, y):
        return np.clip(np.maximum(np.asarray(x, dtype=float) - a, np.asarray(y, dtype=float) - b), 0.0, c)

    return f


@dataclass
class Mesh:
    """Grid points ``origin + h (i, j)`` inside a region, with lattice triangles."""

    h: float
    origin: tuple[float, float]
    domain: Domain

    @classmethod
    def from_region(cls, region: Region, h: float) -> "Mesh":
        if h <= 0:
            raise ValueError("mesh size must be positive")
        x0, y0, x1, y1 = region.bbox
        ni = int(math.floor((x1 - x0) / h + 1e-9)) + 1
        nj = int(math.floor((y1 - y0) / h + 1e-9)) + 1
        I, J = np.meshgrid(np.arange(ni), np.arange(nj), indexing="ij")
        inside = region.contains(x0 + I * h, y0 + J * h)
        verts = [(int(i), int(j)) for i, j in zip(I[inside], J[inside])]
        return cls(h, (x0, y0), Domain(verts))

    @property
    def shape(self) -> tuple[int, int]:
        return self.domain.shape

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Real coordinates of every grid cell, shape ``shape``."""
        nx, ny = self.shape
        I, J = np.meshgrid(np.arange(nx) + self.domain.x0, np.arange(ny) + self.domain.y0, indexing="ij")
        return self.origin[0] + I * self.h, self.origin[1] + J * self.h

    @property
    def mask(self) -> np.ndarray:
        return self.domain.mask

    @property
    def boundary_mask(self) -> np.ndarray:
        return self.domain.boundary_mask

    @property
    def interior_mask(self) -> np.ndarray:
        return self.domain.interior_mask

    def triangles(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Flat indices ``(base, sx_from, sx_to/ty_from, ty_to)`` per triangle, and the orientation.

        Returns arrays ``ia, ib, ic`` of vertex indices and ``kind`` (0 for
        lower-right, 1 for upper-left).  Slopes are ``s = (H[ib] - H[ia]) / h``
        and ``t = (H[ic] - H[ib]) / h`` for lower-right triangles, and
        ``t = (H[ib] - H[ia]) / h``, ``s = (H[ic] - H[ib]) / h`` for upper-left ones.
        """
        if not hasattr(self, "_tri"):
            nx, ny = self.shape
            lr = np.argwhere(self.domain.lr_mask())
            ul = np.argwhere(self.domain.ul_mask())
            flat = lambda ij: ij[:, 0] * ny + ij[:, 1]  # noqa: E731
            ia = np.r_[flat(lr), flat(ul)]
            ib = np.r_[flat(lr + [1, 0]), flat(ul + [0, 1])]
            ic = np.r_[flat(lr + [1, 1]), flat(ul + [1, 1])]
            kind = np.r_[np.zeros(len(lr), dtype=np.int8), np.ones(len(ul), dtype=np.int8)]
            self._tri = (ia, ib, ic, kind)
        return self._tri

    def centroids(self) -> np.ndarray:
        X, Y = self.coords()
        ia, ib, ic, _ = self.triangles()
        xs, ys = X.reshape(-1), Y.reshape(-1)
        return np.stack([(xs[ia] + xs[ib] + xs[ic]) / 3, (ys[ia] + ys[ib] + ys[ic]) / 3], axis=1)

    @property
    def triangle_area(self) -> float:
        return self.h * self.h / 2


@dataclass
class DiscreteProfile:
    """Piecewise linear function on a mesh; ``values`` has the mesh grid shape."""

    mesh: Mesh
    values: np.ndarray
    history: list = field(default_factory=list, repr=False)

    @property
    def boundary_flags(self) -> np.ndarray:
        return self.mesh.boundary_mask

    def slopes(self) -> tuple[np.ndarray, np.ndarray]:
        ia, ib, ic, kind = self.mesh.triangles()
        v = self.values.reshape(-1)
        d1 = (v[ib] - v[ia]) / self.mesh.h
        d2 = (v[ic] - v[ib]) / self.mesh.h
        s = np.where(kind == 0, d1, d2)
        t = np.where(kind == 0, d2, d1)
        return s, t

    def at(self, x: float, y: float) -> float:
        """Linear interpolation inside the containing triangle."""
        i, j, fx, fy = self._locate(x, y)
        H = lambda a, b: self.values[a - self.mesh.domain.x0, b - self.mesh.domain.y0]  # noqa: E731
        if fx >= fy:
            return H(i, j) + fx * (H(i + 1, j) - H(i, j)) + fy * (H(i + 1, j + 1) - H(i + 1, j))
        return H(i, j) + fy * (H(i, j + 1) - H(i, j)) + fx * (H(i + 1, j + 1) - H(i, j + 1))

    def _locate(self, x, y):
        h = self.mesh.h
        gx = (x - self.mesh.origin[0]) / h
        gy = (y - self.mesh.origin[1]) / h
        i, j = int(math.floor(gx + 1e-12)), int(math.floor(gy + 1e-12))
        return i, j, gx - i, gy - j


class InadmissibleProfile(InvariantViolation):
    def __init__(self, index: int, slope):
        super().__init__(f"triangle {index} has slope {slope} outside the closed triangle")
        self.index = index


def _check_admissible(s, t, tol=1e-9):
    bad = (s < -tol) | (t < -tol) | (s + t > 1 + tol)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise InadmissibleProfile(k, (float(s[k]), float(t[k])))


def entropy(profile: DiscreteProfile, tol: float = 1e-9) -> float:
    """``sum area * sigma(slope)`` over the mesh triangles."""
    s, t = profile.slopes()
    _check_admissible(s, t, tol)
    return float(np.sum(sigma(s, t)) * profile.mesh.triangle_area)


def linear_profile(mesh: Mesh, slope: Slope, offset: float = 0.0) -> DiscreteProfile:
    X, Y = mesh.coords()
    vals = np.where(mesh.mask, offset + slope.s * X + slope.t * Y, 0.0)
    return DiscreteProfile(mesh, vals)


# Boundary feasibility --------------------------------------------------

def extremal_extensions(mesh: Mesh, boundary: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Smallest and largest admissible extensions of boundary values (grid arrays).

    An admissible function increases by between ``0`` and ``h`` along each
    forward edge, so the extremes are shortest-path potentials, computed by
    relaxation sweeps.
    """
    h = mesh.h
    m = mesh.mask
    b = mesh.boundary_mask
    big = 1e300
    hi = np.where(b, boundary, big)
    lo = np.where(b, boundary, -big)
    hi[~m] = big
    lo[~m] = -big
    dom = mesh.domain
    edges = {d: dom.edge_mask(d) for d in ((1, 0), (0, 1), (1, 1))}
    from .lattice import shifted

    back = {d: shifted(e, -d[0], -d[1], False) for d, e in edges.items()}
    for _ in range(4 * sum(m.shape) + 8):
        nh, nl = hi.copy(), lo.copy()
        for d in edges:
            dx, dy = d
            nh = np.where(edges[d], np.minimum(nh, shifted(hi, dx, dy, big)), nh)
            nl = np.where(edges[d], np.maximum(nl, shifted(lo, dx, dy, -big) - h), nl)
            nh = np.where(back[d], np.minimum(nh, shifted(hi, -dx, -dy, big) + h), nh)
            nl = np.where(back[d], np.maximum(nl, shifted(lo, -dx, -dy, -big)), nl)
        nh = np.where(b, boundary, nh)
        nl = np.where(b, boundary, nl)
        if np.array_equal(nh, hi) and np.array_equal(nl, lo):
            break
        hi, lo = nh, nl
    slack = 1e-9 * max(1.0, h)
    if (lo[m] > hi[m] + slack).any():
        raise Infeasible("boundary data admits no admissible extension")
    # boundary values themselves must satisfy the rule along boundary edges
    for d, e in edges.items():
        both = e & b & shifted(b, d[0], d[1], False)
        diff = shifted(boundary, d[0], d[1], 0.0) - boundary
        if (both & ((diff < -slack) | (diff > h + slack))).any():
            raise Infeasible("boundary data breaks the slope constraint along the boundary")
    return np.where(m, lo, 0.0), np.where(m, hi, 0.0)


# The solver -------------------------------------------------------------

@dataclass
class SolverStats:
    iterations: int
    barrier: list
    objective: list
    entropy: list
    residual: float


_TINY = 1e-300


def _local(s, t, mu, ms, mt, mu_):
    """Per triangle gradient and Hessian of ``sigma`` plus the log barrier on the free edges.

    ``ms``, ``mt``, ``mu_`` flag which of ``s``, ``t``, ``1 - s - t`` move with
    the unknowns; frozen ones may sit on the boundary and are clipped so
    that their infinite derivatives meet zero coefficients harmlessly.
    """
    u = 1.0 - s - t
    s, t, u = (np.maximum(v, _TINY) for v in (s, t, u))
    ps, pt, pu = math.pi * s, math.pi * t, math.pi * u
    lsu = np.log(np.sin(pu))
    bs, bt, bu = mu * ms / s, mu * mt / t, mu * mu_ / u
    gs = lsu - np.log(np.sin(ps)) + bs - bu
    gt = lsu - np.log(np.sin(pt)) + bt - bu
    cu = math.pi / np.tan(pu)
    hss = -cu - math.pi / np.tan(ps) - bs / s - bu / u
    hst = -cu - bu / u
    htt = -cu - math.pi / np.tan(pt) - bt / t - bu / u
    return gs, gt, hss, hst, htt


def _barrier_value(s, t, mu, ms, mt, mu_):
    u = 1.0 - s - t
    val = sigma(s, t)
    for flag, v in ((ms, s), (mt, t), (mu_, u)):
        val = val + mu * np.where(flag, np.log(np.where(flag, v, 1.0)), 0.0)
    return val


def maximize_entropy(region, boundary_data, mesh_size: float | None = None, tol: float = 1e-9,
                     mu0: float = 0.1, mu_min: float = 1e-9, max_iter: int = 500) -> DiscreteProfile:
    """Discrete maximiser of the entropy with Dirichlet boundary values.

    ``region`` is a ``Region`` (meshed at ``mesh_size``) or a ``Mesh``;
    ``boundary_data`` is a function of ``(x, y)`` arrays or a grid array.
    A log barrier on every triangle keeps slopes inside the open triangle and
    is driven to zero geometrically; each barrier level is solved by damped
    Newton steps with a sparse Hessian.  ``profile.history`` records the
    barrier objective, which never decreases within a level.
    """
    mesh = region if isinstance(region, Mesh) else Mesh.from_region(region, mesh_size)
    X, Y = mesh.coords()
    m, b = mesh.mask, mesh.boundary_mask
    bvals = boundary_data(X, Y) if callable(boundary_data) else np.asarray(boundary_data, dtype=float)
    bvals = np.where(b, bvals, 0.0)
    lo, hi = extremal_extensions(mesh, bvals)
    h = mesh.h
    fixed = b | (hi - lo <= 1e-12 * max(1.0, h))
    u0 = np.where(m, 0.5 * (lo + hi), 0.0)

    ia, ib, ic, kind = mesh.triangles()
    A = mesh.triangle_area
    free = fixed.reshape(-1) == 0
    free &= m.reshape(-1)
    free_idx = np.flatnonzero(free)
    pos = -np.ones(m.size, dtype=np.int64)
    pos[free_idx] = np.arange(len(free_idx))
    vals = u0.reshape(-1).copy()

    # triangles with all vertices fixed contribute constants; drop them
    live = free[ia] | free[ib] | free[ic]
    ia, ib, ic, kind = ia[live], ib[live], ic[live], kind[live]
    # slope = D @ values on the triangle: (s, t) rows over (ia, ib, ic)
    lr = kind == 0
    Ds = np.where(lr[:, None], np.array([-1.0, 1.0, 0.0]), np.array([0.0, -1.0, 1.0])) / h
    Dt = np.where(lr[:, None], np.array([0.0, -1.0, 1.0]), np.array([-1.0, 1.0, 0.0])) / h
    tri = np.stack([ia, ib, ic], axis=1)
    # a slope moves iff one of its two edge endpoints is free
    fa, fb, fc = free[ia], free[ib], free[ic]
    ms = np.where(lr, fa | fb, fb | fc)
    mt = np.where(lr, fb | fc, fa | fb)
    mu_ = fa | fc

    def slopes(v):
        w = v[tri]
        return (Ds * w).sum(axis=1), (Dt * w).sum(axis=1)

    def strict(s, t):
        u = 1 - s - t
        return bool(((s > 0) | ~ms).all() and ((t > 0) | ~mt).all() and ((u > 0) | ~mu_).all())

    s, t = slopes(vals)
    if not strict(s, t):
        vals = _strict_start(mesh, vals, free, lambda v: strict(*slopes(v)))
        s, t = slopes(vals)
        if not strict(s, t):
            raise Infeasible("no strictly admissible starting profile; boundary data is too rigid")

    rows = pos[tri]
    history, ent = [], []
    mu = mu0
    it = 0
    while True:
        for _ in range(100):
            it += 1
            if it > max_iter:
                raise NonConvergence("entropy maximisation exceeded the iteration cap")
            gs, gt, hss, hst, htt = _local(s, t, mu, ms, mt, mu_)
            f = float(np.sum(_barrier_value(s, t, mu, ms, mt, mu_)) * A)
            history.append(f)
            # gradient with respect to vertex values
            gv = A * (gs[:, None] * Ds + gt[:, None] * Dt)
            g = np.zeros(len(free_idx))
            ok = rows >= 0
            np.add.at(g, rows[ok], gv[ok])
            Hloc = A * (hss[:, None, None] * Ds[:, :, None] * Ds[:, None, :]
                        + hst[:, None, None] * (Ds[:, :, None] * Dt[:, None, :] + Dt[:, :, None] * Ds[:, None, :])
                        + htt[:, None, None] * Dt[:, :, None] * Dt[:, None, :])
            r = np.repeat(rows, 3, axis=1).reshape(-1, 3, 3)
            c = np.tile(rows, 3).reshape(-1, 3, 3)
            keep = (r >= 0) & (c >= 0)
            H = sp.csr_matrix((-Hloc[keep], (r[keep], c[keep])), shape=(len(free_idx),) * 2)
            step = spsolve(H.tocsc(), g)
            dec = float(g @ step)
            if dec / 2 <= tol * A * max(1, len(free_idx)) * 1e-3:
                break
            full = np.zeros_like(vals)
            full[free_idx] = step
            ds, dt = slopes(full)
            du = -ds - dt
            alpha = 1.0
            u = 1 - s - t
            for cur, dv, flag in ((s, ds, ms), (t, dt, mt), (u, du, mu_)):
                neg = (dv < 0) & flag
                if neg.any():
                    alpha = min(alpha, 0.99 * float(np.min(-cur[neg] / dv[neg])))
            while True:
                trial = vals + alpha * full
                ts, tt = slopes(trial)
                if strict(ts, tt):
                    ft = float(np.sum(_barrier_value(ts, tt, mu, ms, mt, mu_)) * A)
                    if ft >= f + 0.25 * alpha * dec:
                        break
                alpha /= 2
                if alpha < 1e-14:
                    break
            if alpha < 1e-14:
                break
            vals, s, t = trial, ts, tt
        ent.append(float(np.sum(sigma(s, t)) * A))
        if mu <= mu_min:
            break
        mu = max(mu * 0.1, mu_min)
    out = DiscreteProfile(mesh, vals.reshape(m.shape), history)
    out.stats = SolverStats(it, history, history, ent, float(dec))
    return out


def _strict_start(mesh: Mesh, vals, free, ok, max_sweeps: int = 20000):
    """Sweep the three colour classes, moving each free vertex to the middle of its local interval.

    The local interval of a vertex is where its value keeps all six incident
    edges admissible; centring repeatedly pushes every edge off its bounds
    whenever the boundary data leaves room for that.
    """
    from .lattice import FORWARD

    nx, ny = mesh.shape
    h = mesh.h
    v = vals.copy()
    idx = np.argwhere(free.reshape(nx, ny))
    colour = (idx[:, 0] + idx[:, 1]) % 3
    classes = []
    for c in range(3):
        sel = idx[colour == c]
        flat = sel[:, 0] * ny + sel[:, 1]
        classes.append((flat, [flat + dx * ny + dy for dx, dy in FORWARD], [flat - dx * ny - dy for dx, dy in FORWARD]))
    for sweep in range(max_sweeps):
        for flat, fwd, bwd in classes:
            if not len(flat):
                continue
            f = np.stack([v[k] for k in fwd])
            b = np.stack([v[k] for k in bwd])
            lo = np.maximum(b.max(axis=0), f.max(axis=0) - h)
            hi = np.minimum(f.min(axis=0), b.min(axis=0) + h)
            v[flat] = 0.5 * (lo + hi)
        if sweep % 8 == 7 and ok(v):
            break
    return v


# Read-outs ---------------------------------------------------------------

def gradient_at(profile: DiscreteProfile, point) -> Slope:
    """Slope at a point: the containing triangle, or the mean over triangles meeting there."""
    x, y = point
    i, j, fx, fy = profile._locate(x, y)
    eps = 1e-9
    cands = []
    if abs(fx - fy) > eps and eps < fx < 1 - eps and eps < fy < 1 - eps:
        cands.append((i, j, 0 if fx > fy else 1))
    else:
        # on an edge or a vertex: every triangle whose closure contains the point
        for di in (-1, 0):
            for dj in (-1, 0):
                for k in (0, 1):
                    a, b2 = fx - di, fy - dj
                    if -eps <= a <= 1 + eps and -eps <= b2 <= 1 + eps and \
                            ((k == 0 and a >= b2 - eps) or (k == 1 and b2 >= a - eps)):
                        cands.append((i + di, j + dj, k))
    dom = profile.mesh.domain
    H = profile.values
    ss, ts = [], []
    for a, b2, k in cands:
        mask = dom.lr_mask() if k == 0 else dom.ul_mask()
        ii, jj = a - dom.x0, b2 - dom.y0
        if not (0 <= ii < mask.shape[0] and 0 <= jj < mask.shape[1]) or not mask[ii, jj]:
            continue
        h = profile.mesh.h
        if k == 0:
            ss.append((H[ii + 1, jj] - H[ii, jj]) / h)
            ts.append((H[ii + 1, jj + 1] - H[ii + 1, jj]) / h)
        else:
            ts.append((H[ii, jj + 1] - H[ii, jj]) / h)
            ss.append((H[ii + 1, jj + 1] - H[ii, jj + 1]) / h)
    if not ss:
        raise ValueError(f"point {point} is not inside the mesh")
    return Slope(float(np.mean(ss)), float(np.mean(ts)))


def euler_lagrange_residual(profile: DiscreteProfile, epsilon: float = 0.05) -> float:
    """Mean ``|sum a_jk d_j d_k F|`` over interior vertices whose six triangles have slopes in the open ``epsilon`` triangle."""
    mesh = profile.mesh
    F = profile.values
    h = mesh.h
    s, t = profile.slopes()
    good_tri = np.minimum(np.minimum(s, t), (1 - s - t) / math.sqrt(2)) > epsilon
    nx, ny = mesh.shape
    ia, ib, ic, _ = mesh.triangles()
    bad_vertex = np.zeros(nx * ny, dtype=bool)
    for idx in (ia, ib, ic):
        np.logical_or.at(bad_vertex, idx[~good_tri], True)
    bad_vertex = bad_vertex.reshape(nx, ny)
    sel = mesh.interior_mask & ~bad_vertex
    sel[0, :] = sel[-1, :] = False
    sel[:, 0] = sel[:, -1] = False
    if not sel.any():
        raise ValueError("no interior vertex has all adjacent slopes inside the liquid region")
    C = F[1:-1, 1:-1]
    fxx = (F[2:, 1:-1] - 2 * C + F[:-2, 1:-1]) / h**2
    fyy = (F[1:-1, 2:] - 2 * C + F[1:-1, :-2]) / h**2
    fdd = (F[2:, 2:] - 2 * C + F[:-2, :-2]) / h**2
    fxy = (fdd - fxx - fyy) / 2
    gx = (F[2:, 1:-1] - F[:-2, 1:-1]) / (2 * h)
    gy = (F[1:-1, 2:] - F[1:-1, :-2]) / (2 * h)
    inner = sel[1:-1, 1:-1]
    axx, axy, ayy = aij(gx[inner], gy[inner])
    res = axx * fxx[inner] + 2 * axy * fxy[inner] + ayy * fyy[inner]
    return float(np.mean(np.abs(res)))


def facet_map(profile: DiscreteProfile, epsilon: float) -> np.ndarray:
    """``True`` for liquid triangles (slope at distance more than ``epsilon`` from the boundary)."""
    s, t = profile.slopes()
    return np.minimum(np.minimum(s, t), (1 - s - t) / math.sqrt(2)) > epsilon


# The hexagon arctic ellipse ---------------------------------------------------

@dataclass(frozen=True)
class Ellipse:
    """``{p : (p - center)^T Q (p - center) < 1}``."""

    center: tuple[float, float]
    Q: np.ndarray
    tangency: tuple[float, ...]

    def contains(self, x, y) -> np.ndarray:
        dx = np.asarray(x, dtype=float) - self.center[0]
        dy = np.asarray(y, dtype=float) - self.center[1]
        return self.Q[0, 0] * dx * dx + 2 * self.Q[0, 1] * dx * dy + self.Q[1, 1] * dy * dy < 1

    @property
    def area(self) -> float:
        return math.pi / math.sqrt(np.linalg.det(self.Q))


def _side_lines(corners: np.ndarray) -> np.ndarray:
    P = np.c_[corners, np.ones(len(corners))]
    return np.cross(P, np.roll(P, -1, axis=0))


def hexagon_ellipse(a: float, b: float, c: float) -> Ellipse:
    """The conic tangent to all six sides of the ``a x b x c`` hexagon.

    A line ``l`` is tangent to the conic with dual matrix ``C*`` iff
    ``l^T C* l = 0``.  Five sides fix ``C*`` up to scale; the sixth is
    checked and its residual is kept in ``tangency``.
    """
    corners = hexagon_corners(a, b, c)
    lines = _side_lines(corners)
    lines = lines / np.linalg.norm(lines[:, :2], axis=1)[:, None]
    rows = np.array([[l1 * l1, 2 * l1 * l2, 2 * l1 * l3, l2 * l2, 2 * l2 * l3, l3 * l3] for l1, l2, l3 in lines])
    _, sv, Vt = np.linalg.svd(rows[:5])
    v = Vt[-1]
    Cd = np.array([[v[0], v[1], v[2]], [v[1], v[3], v[4]], [v[2], v[4], v[5]]])
    C = np.linalg.inv(Cd)
    C = C / -C[2, 2] if C[2, 2] != 0 else C
    M = C[:2, :2]
    center = -np.linalg.solve(M, C[:2, 2])
    k = float(center @ M @ center + 2 * C[:2, 2] @ center + C[2, 2])
    Q = M / -k
    if not (np.linalg.eigvalsh(Q) > 0).all():
        raise ValueError("degenerate hexagon: tangent conic is not an ellipse")
    # tangency residuals: distance from centre to each side minus the support distance
    res = []
    Qi = np.linalg.inv(Q)
    for l in lines:
        n, off = l[:2], l[2]
        res.append(abs(abs(n @ center + off) - math.sqrt(n @ Qi @ n)))
    return Ellipse((float(center[0]), float(center[1])), Q, tuple(float(r) for r in res))
