"""Triangular-lattice domains, height functions, tilings and path ensembles.

Vertices are integer pairs ``(x, y)``.  Every vertex has six neighbours,
``(x +- 1, y)``, ``(x, y +- 1)`` and ``(x + 1, y + 1)``, ``(x - 1, y - 1)``.
The three forward directions ``(1, 0)``, ``(0, 1)``, ``(1, 1)`` carry the
height increment rule ``H(v) - H(u) in {0, 1}``.

Faces come in two shapes::

    LR(x, y) = {(x, y), (x + 1, y), (x + 1, y + 1)}
    UL(x, y) = {(x, y), (x, y + 1), (x + 1, y + 1)}

A lozenge is a pair of adjacent faces and is keyed by ``(type, x, y)``
where ``(x, y)`` is its lower-right face::

    type 1: LR(x, y) + UL(x, y - 1)   shared edge (x, y)-(x + 1, y)
    type 2: LR(x, y) + UL(x + 1, y)   shared edge (x + 1, y)-(x + 1, y + 1)
    type 3: LR(x, y) + UL(x, y)       shared edge (x, y)-(x + 1, y + 1)

The type-1 centre set of a tiling is ``{(x, y) : (1, x, y) is a lozenge}``,
equivalently the horizontal edges along which the height jumps by one.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from scipy import ndimage

from .errors import Infeasible, InvariantViolation

FORWARD = ((1, 0), (0, 1), (1, 1))
NEIGHBORS = FORWARD + ((-1, 0), (0, -1), (-1, -1))

# 6-connectivity of the triangular lattice in (x, y) array indexing
_HEX_STRUCTURE = np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1]], dtype=bool)

# relative heights of the four vertices of each lozenge type
_LOZENGE_VERTICES = {
    1: (((0, -1), 0), ((0, 0), 0), ((1, 0), 1), ((1, 1), 1)),
    2: (((0, 0), 0), ((1, 0), 0), ((1, 1), 1), ((2, 1), 1)),
    3: (((0, 0), 0), ((1, 0), 0), ((1, 1), 0), ((0, 1), 0)),
}
# offset of the upper-left partner face relative to the lower-right face
_UL_PARTNER = {1: (0, -1), 2: (1, 0), 3: (0, 0)}


_DIFF_SLICES = (
    ((1, 0), (slice(0, -1), slice(None)), (slice(1, None), slice(None))),
    ((0, 1), (slice(None), slice(0, -1)), (slice(None), slice(1, None))),
    ((1, 1), (slice(0, -1), slice(0, -1)), (slice(1, None), slice(1, None))),
)


def shifted(arr: np.ndarray, dx: int, dy: int, fill=0) -> np.ndarray:
    """Return ``out`` with ``out[..., i, j] = arr[..., i + dx, j + dy]``."""
    out = np.full_like(arr, fill)
    nx, ny = arr.shape[-2:]
    src = (Ellipsis, slice(max(dx, 0), nx + min(dx, 0)), slice(max(dy, 0), ny + min(dy, 0)))
    dst = (Ellipsis, slice(max(-dx, 0), nx + min(-dx, 0)), slice(max(-dy, 0), ny + min(-dy, 0)))
    out[dst] = arr[src]
    return out


class Domain:
    """A finite simply connected set of lattice vertices with induced edges.

    The vertex set is mirrored on a padded boolean grid ``mask`` where
    ``mask[x - x0, y - y0]`` is true for member vertices; the pad of one cell
    on every side keeps neighbour lookups in range.
    """

    def __init__(self, vertices: Iterable[tuple[int, int]], validate: bool = True):
        verts = frozenset((int(x), int(y)) for x, y in vertices)
        if not verts:
            raise ValueError("a domain needs at least one vertex")
        pts = np.array(sorted(verts), dtype=np.int64)
        self.x0 = int(pts[:, 0].min()) - 1
        self.y0 = int(pts[:, 1].min()) - 1
        shape = (int(pts[:, 0].max()) - self.x0 + 2, int(pts[:, 1].max()) - self.y0 + 2)
        mask = np.zeros(shape, dtype=bool)
        mask[pts[:, 0] - self.x0, pts[:, 1] - self.y0] = True
        inner = mask.copy()
        for dx, dy in NEIGHBORS:
            inner &= shifted(mask, dx, dy, False)
        self.mask = mask
        self.boundary_mask = mask & ~inner
        self.interior_mask = inner
        self.vertices = verts
        self.boundary = frozenset(self._to_points(self.boundary_mask))
        self.interior = verts - self.boundary
        if validate:
            _check_simply_connected(mask)

    def _to_points(self, m: np.ndarray) -> list[tuple[int, int]]:
        idx = np.argwhere(m)
        return [(int(i) + self.x0, int(j) + self.y0) for i, j in idx]

    def index(self, v: tuple[int, int]) -> tuple[int, int]:
        return v[0] - self.x0, v[1] - self.y0

    def __contains__(self, v) -> bool:
        return (int(v[0]), int(v[1])) in self.vertices

    def __len__(self) -> int:
        return len(self.vertices)

    def __eq__(self, other) -> bool:
        return isinstance(other, Domain) and self.vertices == other.vertices

    def __hash__(self) -> int:
        return hash(self.vertices)

    def __repr__(self) -> str:
        return f"Domain({len(self.vertices)} vertices, {len(self.boundary)} on the boundary)"

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    def _cached(self, key, fn):
        cache = self.__dict__.setdefault("_cache", {})
        if key not in cache:
            cache[key] = fn()
        return cache[key]

    def lr_mask(self) -> np.ndarray:
        m = self.mask
        return self._cached("lr", lambda: m & shifted(m, 1, 0, False) & shifted(m, 1, 1, False))

    def ul_mask(self) -> np.ndarray:
        m = self.mask
        return self._cached("ul", lambda: m & shifted(m, 0, 1, False) & shifted(m, 1, 1, False))

    def edge_mask(self, d: tuple[int, int]) -> np.ndarray:
        """Grid of base points ``u`` whose edge ``u -> u + d`` lies in the domain."""
        m = self.mask
        return self._cached(("edge", d), lambda: m & shifted(m, d[0], d[1], False))

    def faces(self) -> frozenset:
        return self._cached("faces", lambda: frozenset(domain_faces(self)))

    def sorted_vertices(self) -> list[tuple[int, int]]:
        return sorted(self.vertices)

    def diameter(self) -> int:
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return max(max(xs) - min(xs), max(ys) - min(ys)) + 1

    def strip(self, r0: int, r1: int) -> "Domain":
        return Domain([v for v in self.vertices if r0 <= v[1] <= r1])

    def translate(self, dx: int, dy: int) -> "Domain":
        """The same domain moved by ``(dx, dy)``; grids keep their shape."""
        return Domain([(x + dx, y + dy) for x, y in self.vertices], validate=False)


def _check_simply_connected(mask: np.ndarray) -> None:
    _, n_in = ndimage.label(mask, structure=_HEX_STRUCTURE)
    if n_in != 1:
        raise InvariantViolation(f"domain is not connected ({n_in} components)")
    outside = np.pad(~mask, 1, constant_values=True)
    _, n_out = ndimage.label(outside, structure=_HEX_STRUCTURE)
    if n_out != 1:
        raise InvariantViolation("domain has holes (complement is disconnected)")


@dataclass(frozen=True)
class Slope:
    """Local densities ``(s, t)`` of type-1 and type-2 lozenges."""

    s: float
    t: float

    def in_closed_triangle(self, tol: float = 0.0) -> bool:
        return self.s >= -tol and self.t >= -tol and self.s + self.t <= 1 + tol

    def distance_to_boundary(self) -> float:
        return min(self.s, self.t, (1.0 - self.s - self.t) / np.sqrt(2.0))

    def in_interior(self, eps: float = 0.0) -> bool:
        return self.distance_to_boundary() > eps

    def __iter__(self) -> Iterator[float]:
        yield self.s
        yield self.t


class _GridFunction:
    """Integer values on a subset of a domain, stored on the domain grid."""

    def __init__(self, domain: Domain, array: np.ndarray, support: np.ndarray):
        self.domain = domain
        self.array = np.asarray(array, dtype=np.int64)
        self.support = support

    def __getitem__(self, v: tuple[int, int]) -> int:
        i, j = self.domain.index(v)
        if not (0 <= i < self.support.shape[0] and 0 <= j < self.support.shape[1]) or not self.support[i, j]:
            raise KeyError(v)
        return int(self.array[i, j])

    @property
    def values(self) -> dict[tuple[int, int], int]:
        idx = np.argwhere(self.support)
        x0, y0 = self.domain.x0, self.domain.y0
        return {(int(i) + x0, int(j) + y0): int(self.array[i, j]) for i, j in idx}

    def __eq__(self, other) -> bool:
        return (
            type(self) is type(other)
            and self.domain == other.domain
            and np.array_equal(np.where(self.support, self.array, 0), np.where(other.support, other.array, 0))
        )

    def __hash__(self) -> int:
        return hash((self.domain, np.where(self.support, self.array, 0).tobytes()))


class BoundaryHeight(_GridFunction):
    """Prescribed heights on the boundary vertices of a domain."""

    def __init__(self, domain: Domain, values):
        if isinstance(values, np.ndarray):
            arr = np.where(domain.boundary_mask, values, 0)
        else:
            arr = np.zeros(domain.shape, dtype=np.int64)
            missing = set(domain.boundary) - set(values)
            if missing:
                raise ValueError(f"boundary values missing at {sorted(missing)[:5]}")
            for v in domain.boundary:
                arr[domain.index(v)] = int(values[v])
        super().__init__(domain, arr, domain.boundary_mask)

    def __repr__(self) -> str:
        return f"BoundaryHeight(on {len(self.domain.boundary)} vertices)"

    def edge_violation(self) -> tuple | None:
        """First boundary edge breaking the increment rule, if any."""
        d = self.domain
        for dx, dy in FORWARD:
            both = d.boundary_mask & shifted(d.boundary_mask, dx, dy, False) & d.edge_mask((dx, dy))
            inc = shifted(self.array, dx, dy) - self.array
            bad = np.argwhere(both & ((inc < 0) | (inc > 1)))
            if len(bad):
                i, j = bad[0]
                u = (int(i) + d.x0, int(j) + d.y0)
                return u, (u[0] + dx, u[1] + dy)
        return None

    def shift(self, c: int) -> "BoundaryHeight":
        return BoundaryHeight(self.domain, self.array + c)

    def translate(self, dx: int, dy: int) -> "BoundaryHeight":
        return BoundaryHeight(self.domain.translate(dx, dy), self.array)


class HeightFunction(_GridFunction):
    """Integer heights on every vertex of a domain."""

    def __init__(self, domain: Domain, values, check: bool = True):
        if isinstance(values, np.ndarray):
            arr = np.where(domain.mask, values, 0).astype(np.int64)
        else:
            arr = np.zeros(domain.shape, dtype=np.int64)
            for v in domain.vertices:
                arr[domain.index(v)] = int(values[v])
        super().__init__(domain, arr, domain.mask)
        if check:
            self.check()

    def __repr__(self) -> str:
        return f"HeightFunction(on {len(self.domain)} vertices)"

    def violations(self) -> list[tuple[tuple[int, int], tuple[int, int], int]]:
        d = self.domain
        out = []
        for dx, dy in FORWARD:
            inc = shifted(self.array, dx, dy) - self.array
            for i, j in np.argwhere(d.edge_mask((dx, dy)) & ((inc < 0) | (inc > 1))):
                u = (int(i) + d.x0, int(j) + d.y0)
                out.append((u, (u[0] + dx, u[1] + dy), int(inc[i, j])))
        return out

    def is_valid(self) -> bool:
        d = self.domain
        a = self.array
        for (dx, dy), lo, hi in _DIFF_SLICES:
            inc = a[hi] - a[lo]
            if ((inc < 0) | (inc > 1))[d.edge_mask((dx, dy))[lo]].any():
                return False
        return True

    def check(self) -> None:
        if self.is_valid():
            return
        bad = self.violations()
        if bad:
            u, v, inc = bad[0]
            raise InvariantViolation(f"height increment {inc} along edge {u} -> {v}")

    def boundary(self) -> BoundaryHeight:
        return BoundaryHeight(self.domain, self.array)

    def shift(self, c: int) -> "HeightFunction":
        return HeightFunction(self.domain, self.array + c, check=False)

    def translate(self, dx: int, dy: int) -> "HeightFunction":
        return HeightFunction(self.domain.translate(dx, dy), self.array, check=False)

    def restrict(self, domain: Domain) -> "HeightFunction":
        return HeightFunction(domain, {v: self[v] for v in domain.vertices})


Face = tuple[str, int, int]


def lozenge_faces(key: tuple[int, int, int]) -> tuple[Face, Face]:
    t, x, y = key
    dx, dy = _UL_PARTNER[t]
    return ("L", x, y), ("U", x + dx, y + dy)


class Tiling:
    """A lozenge tiling, stored as its covered face region and type-1 centres.

    For a tiling of a domain the region is the set of domain faces.  A free
    tiling, where lozenges along the boundary may use one face outside the
    domain, carries those outside faces in its region as well.  Given the
    region, the centre set determines every lozenge.
    """

    def __init__(self, domain: Domain, centers: Iterable[tuple[int, int]], region: Iterable[Face] | None = None):
        self.domain = domain
        self.type1_centers = frozenset((int(x), int(y)) for x, y in centers)
        if region is None:
            region = domain.faces()
        self.region = frozenset(region)
        self._lozenges: frozenset | None = None

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Tiling)
            and self.type1_centers == other.type1_centers
            and self.region == other.region
        )

    def __hash__(self) -> int:
        return hash((self.type1_centers, self.region))

    def __repr__(self) -> str:
        return f"Tiling({len(self.region) // 2} lozenges, {len(self.type1_centers)} of type 1)"

    def sorted_centers(self) -> list[tuple[int, int]]:
        return sorted(self.type1_centers)

    @property
    def lozenges(self) -> frozenset:
        if self._lozenges is None:
            self._lozenges = _pair_faces(self.region, self.type1_centers)
        return self._lozenges

    @property
    def face_types(self) -> dict[tuple[Face, Face], int]:
        return {lozenge_faces(k): k[0] for k in self.lozenges}

    def counts(self) -> tuple[int, int, int]:
        c = [0, 0, 0]
        for t, _, _ in self.lozenges:
            c[t - 1] += 1
        return c[0], c[1], c[2]


def domain_faces(domain: Domain) -> set[Face]:
    faces = set()
    x0, y0 = domain.x0, domain.y0
    for i, j in np.argwhere(domain.lr_mask()):
        faces.add(("L", int(i) + x0, int(j) + y0))
    for i, j in np.argwhere(domain.ul_mask()):
        faces.add(("U", int(i) + x0, int(j) + y0))
    return faces


def _pair_faces(region: frozenset, centers: frozenset) -> frozenset:
    """Recover all lozenges from the region and type-1 centres.

    Within one horizontal strip the faces read left to right as
    UL(x), LR(x), UL(x + 1), ...  (positions 2x and 2x + 1).  Once type-1
    faces are removed, each remaining run pairs up consecutively; a pair
    starting at an even position is type 3, at an odd position type 2.
    """
    lozenges = set()
    rows: dict[int, list[int]] = {}
    for kind, x, y in region:
        if kind == "L":
            if (x, y) in centers:
                if ("U", x, y - 1) not in region:
                    raise InvariantViolation(f"type-1 centre {(x, y)} lacks its lower face")
                lozenges.add((1, x, y))
                continue
            rows.setdefault(y, []).append(2 * x + 1)
        else:
            if (x, y + 1) in centers:
                if ("L", x, y + 1) not in region:
                    raise InvariantViolation(f"type-1 centre {(x, y + 1)} lacks its upper face")
                continue
            rows.setdefault(y, []).append(2 * x)
    for y, pos in rows.items():
        pos.sort()
        if len(pos) % 2:
            raise InvariantViolation(f"odd number of unpaired faces in strip {y}")
        for a, b in zip(pos[::2], pos[1::2]):
            if b != a + 1:
                raise InvariantViolation(f"faces in strip {y} cannot be paired near x={a // 2}")
            if a % 2 == 0:
                lozenges.add((3, a // 2, y))
            else:
                lozenges.add((2, a // 2, y))
    for c in centers:
        if (1, c[0], c[1]) not in lozenges:
            raise InvariantViolation(f"type-1 centre {c} is not covered by the region")
    return frozenset(lozenges)


def lozenge_grid(domain: Domain, heights: np.ndarray) -> np.ndarray:
    """Lozenge types read from heights, on the grid of lower-right faces.

    ``heights`` has shape ``(..., X, Y)``; the result holds 0 where no lozenge
    has its lower-right face and otherwise the lozenge type.  Upper-left faces
    whose partner lies outside the domain still produce their lozenge, so
    free tilings are represented too.
    """
    H = np.asarray(heights)
    dh = shifted(H, 1, 0) - H
    dv = shifted(H, 0, 1) - H
    lr = domain.lr_mask()
    ul = domain.ul_mask()
    lr_t1 = lr & (dh == 1)
    lr_t2 = lr & ~lr_t1 & (shifted(dv, 1, 0) == 1)
    ul_t1 = ul & (shifted(dh, 0, 1) == 1)
    ul_t2 = ul & ~ul_t1 & (dv == 1)
    g = np.zeros(H.shape, dtype=np.int8)
    g[(lr & ~lr_t1 & ~lr_t2) | (ul & ~ul_t1 & ~ul_t2)] = 3
    g[lr_t2 | shifted(ul_t2, 1, 0, False)] = 2
    g[lr_t1 | shifted(ul_t1, 0, -1, False)] = 1
    return g


def _face_edge_masks(domain: Domain) -> dict:
    """Per direction, the domain edges lying on at least one domain face."""
    lr = domain.lr_mask()
    ul = domain.ul_mask()
    return {
        (1, 0): lr | shifted(ul, 0, -1, False),
        (0, 1): shifted(lr, -1, 0, False) | ul,
        (1, 1): lr | ul,
    }


def _row_links(domain: Domain):
    """Edges stitching consecutive rows when every row is a single run."""
    m = domain.mask
    known = domain._cached("face_edges", lambda: _face_edge_masks(domain))
    starts = m & ~shifted(m, -1, 0, False)
    runs = starts.sum(axis=0)
    rows = np.flatnonzero(runs)
    if not (runs[rows] == 1).all() or not np.all(np.diff(rows) == 1):
        return None
    if not (known[(1, 0)] == domain.edge_mask((1, 0))).all():
        return None
    links = []
    for j0 in rows[:-1]:
        if known[(0, 1)][:, j0].any():
            links.append((int(j0), int(np.argmax(known[(0, 1)][:, j0])), (0, 1)))
        elif known[(1, 1)][:, j0].any():
            links.append((int(j0), int(np.argmax(known[(1, 1)][:, j0])), (1, 1)))
        else:
            return None
    return links


def heights_from_lozenge_grid(domain: Domain, grid: np.ndarray, anchor: tuple[int, int] | None = None,
                              anchor_value: int = 0) -> np.ndarray:
    """Inverse of ``lozenge_grid``: integrate lozenge increments into heights.

    A horizontal edge rises iff it is a type-1 centre, a vertical edge rises
    iff a type-2 lozenge straddles it, and a diagonal edge is flat iff a
    type-3 lozenge straddles it.
    """
    g = np.asarray(grid)
    if anchor is None:
        anchor = min(domain.vertices)
    ai, aj = domain.index(anchor)
    if not (0 <= ai < domain.shape[0] and 0 <= aj < domain.shape[1]) or not domain.mask[ai, aj]:
        raise ValueError(f"anchor {tuple(anchor)} is outside the domain")
    known = domain._cached("face_edges", lambda: _face_edge_masks(domain))
    inc = {
        (1, 0): (g == 1).astype(np.int64),
        (0, 1): shifted(g == 2, -1, 0, False).astype(np.int64),
        (1, 1): (g != 3).astype(np.int64),
    }
    links = domain._cached("row_links", lambda: _row_links(domain))
    if links is not None:
        H = np.zeros(g.shape, dtype=np.int64)
        H[..., 1:, :] = np.cumsum(np.where(known[(1, 0)], inc[(1, 0)], 0), axis=-2)[..., :-1, :]
        for j0, i, d in links:
            dx, dy = d
            delta = H[..., i, j0] + inc[d][..., i, j0] - H[..., i + dx, j0 + 1]
            H[..., :, j0 + 1] += delta[..., None]
    else:
        flat = g.reshape((-1,) + g.shape[-2:])
        H = np.stack([
            _integrate_bfs(domain, {d: inc[d].reshape(flat.shape)[k] for d in FORWARD}, known, (ai, aj))
            for k in range(flat.shape[0])
        ]).reshape(g.shape)
    H = H - H[..., ai, aj][..., None, None] + anchor_value
    H = np.where(domain.mask, H, 0)
    if not np.array_equal(lozenge_grid(domain, H), g) or not _valid_heights(domain, H):
        raise InvariantViolation("lozenges are inconsistent with any height function")
    return H


def _valid_heights(domain: Domain, H: np.ndarray) -> bool:
    for (dx, dy), lo, hi in _DIFF_SLICES:
        inc = H[(Ellipsis,) + hi] - H[(Ellipsis,) + lo]
        if ((inc < 0) | (inc > 1))[..., domain.edge_mask((dx, dy))[lo]].any():
            return False
    return True


def _integrate_bfs(domain: Domain, inc, known, start) -> np.ndarray:
    m = domain.mask
    H = np.zeros(m.shape, dtype=np.int64)
    seen = np.zeros(m.shape, dtype=bool)
    seen[start] = True
    queue = deque([start])
    while queue:
        i, j = queue.popleft()
        for d in FORWARD:
            dx, dy = d
            if known[d][i, j] and not seen[i + dx, j + dy]:
                H[i + dx, j + dy] = H[i, j] + inc[d][i, j]
                seen[i + dx, j + dy] = True
                queue.append((i + dx, j + dy))
            if known[d][i - dx, j - dy] and not seen[i - dx, j - dy]:
                H[i - dx, j - dy] = H[i, j] - inc[d][i - dx, j - dy]
                seen[i - dx, j - dy] = True
                queue.append((i - dx, j - dy))
    if (m & ~seen).any():
        i, j = np.argwhere(m & ~seen)[0]
        raise InvariantViolation(f"tiling does not cover domain vertex {(int(i) + domain.x0, int(j) + domain.y0)}")
    return H


def _grid_to_keys(domain: Domain, g: np.ndarray) -> frozenset:
    idx = np.argwhere(g > 0)
    x0, y0 = domain.x0, domain.y0
    return frozenset((int(g[i, j]), int(i) + x0, int(j) + y0) for i, j in idx)


def _keys_to_grid(domain: Domain, keys) -> np.ndarray:
    g = np.zeros(domain.shape, dtype=np.int8)
    arr = np.array(sorted(keys), dtype=np.int64).reshape(-1, 3)
    i = arr[:, 1] - domain.x0
    j = arr[:, 2] - domain.y0
    nx, ny = domain.shape
    if ((i < 0) | (i >= nx) | (j < 0) | (j >= ny)).any():
        raise InvariantViolation("tiling extends beyond the domain")
    g[i, j] = arr[:, 0]
    return g


def tiling_from_height(height: HeightFunction, domain: Domain | None = None) -> Tiling:
    """The (free) tiling encoded by a height function.

    Each face's type is read from the heights at its three corners; when the
    partner face lies outside the domain it joins the tiling's region.
    """
    if domain is None:
        domain = height.domain
    elif domain != height.domain:
        height = HeightFunction(domain, {v: height[v] for v in domain.vertices}, check=False)
    height.check()
    keys = _grid_to_keys(domain, lozenge_grid(domain, height.array))
    region = set(domain.faces())
    for k in keys:
        region.update(lozenge_faces(k))
    if 2 * len(keys) != len(region):
        raise InvariantViolation("lozenges overlap")
    tiling = Tiling(domain, [(x, y) for t, x, y in keys if t == 1], region)
    tiling._lozenges = keys
    return tiling


def height_from_tiling(
    tiling: Tiling, domain: Domain | None = None, anchor: tuple[int, int] | None = None, anchor_value: int = 0
) -> HeightFunction:
    """Integrate the lozenge increments of a tiling into a height function."""
    if domain is None:
        domain = tiling.domain
    if anchor is None:
        anchor = min(domain.vertices)
    anchor = (int(anchor[0]), int(anchor[1]))
    if anchor not in domain.vertices:
        raise ValueError(f"anchor {anchor} is outside the domain")
    g = _keys_to_grid(domain, tiling.lozenges)
    return HeightFunction(domain, heights_from_lozenge_grid(domain, g, anchor, anchor_value), check=False)


class PathEnsemble:
    """Non-intersecting up-right paths ``q_k(s)`` for ``s = 0..t``.

    ``paths[k, s]`` holds the position of the ``k``-th path (counted from the
    left, labels starting at ``first_label``) at row ``row0 + s``.
    """

    def __init__(self, paths, row0: int = 0, first_label: int = 0, check: bool = True):
        arr = np.asarray(paths, dtype=np.int64)
        if arr.ndim == 1:
            arr = arr[:, None]
        self.paths = arr
        self.row0 = int(row0)
        self.first_label = int(first_label)
        if check:
            self.check()

    @property
    def length(self) -> int:
        return self.paths.shape[1] - 1

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    def at(self, s: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.paths[:, s])

    def check(self) -> None:
        p = self.paths
        if p.shape[1] > 1:
            steps = np.diff(p, axis=1)
            if ((steps < 0) | (steps > 1)).any():
                k, s = np.argwhere((steps < 0) | (steps > 1))[0]
                raise InvariantViolation(f"path {k} has an illegal step at time {s}")
        if p.shape[0] > 1:
            gaps = np.diff(p, axis=0)
            if (gaps <= 0).any():
                k, s = np.argwhere(gaps <= 0)[0]
                raise InvariantViolation(f"paths {k} and {k + 1} intersect at time {s}")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PathEnsemble)
            and self.row0 == other.row0
            and self.first_label == other.first_label
            and np.array_equal(self.paths, other.paths)
        )

    def __repr__(self) -> str:
        return f"PathEnsemble({self.n_paths} paths, length {self.length})"


def paths_from_heights(domain: Domain, heights: np.ndarray, rows: tuple[int, int]) -> np.ndarray:
    """Path positions for a batch of height arrays, shape ``(..., n, rows)``.

    Path positions in a row are the horizontal edges with zero height
    increment; a type-2 lozenge moves a path one step right.
    """
    H = np.asarray(heights)
    r0, r1 = rows
    hmask = domain.edge_mask((1, 0))
    zero = hmask & ((shifted(H, 1, 0) - H) == 0)
    cols = []
    n = None
    for y in range(r0, r1 + 1):
        j = y - domain.y0
        if not (0 <= j < H.shape[-1]) or not hmask[:, j].any():
            raise ValueError(f"row {y} is not covered by the tiling")
        z = zero[..., :, j]
        counts = z.sum(axis=-1)
        if n is None:
            n = int(counts.reshape(-1)[0]) if counts.size else 0
        if (counts != n).any():
            raise ValueError("rows of the strip carry different numbers of paths")
        order = np.argsort(~z, axis=-1, kind="stable")[..., :n]
        cols.append(order + domain.x0)
    return np.stack(cols, axis=-1)


def heights_from_paths(domain: Domain, paths: np.ndarray, row0: int) -> np.ndarray:
    """``H(x, s) = x - #{k : q_k(s) < x}`` for a batch of path arrays."""
    P = np.asarray(paths)
    nx, ny = domain.shape
    xs = np.arange(nx) + domain.x0
    H = np.zeros(P.shape[:-2] + (nx, ny), dtype=np.int64)
    for j in range(ny):
        if not domain.mask[:, j].any():
            continue
        s = j + domain.y0 - row0
        if not 0 <= s < P.shape[-1]:
            raise ValueError(f"row {j + domain.y0} lies outside the rows of the ensemble")
        below = (P[..., :, s, None] < xs).sum(axis=-2)
        H[..., :, j] = xs - below
    return np.where(domain.mask, H, 0)


def paths_from_tiling(tiling: Tiling, rows: tuple[int, int] | None = None) -> PathEnsemble:
    """Read off the non-intersecting paths in the strip ``rows[0] <= y <= rows[1]``."""
    height = height_from_tiling(tiling)
    ys = [v[1] for v in tiling.domain.vertices]
    r0, r1 = rows if rows is not None else (min(ys), max(ys))
    return PathEnsemble(paths_from_heights(tiling.domain, height.array, (r0, r1)), row0=r0)


def height_from_paths(ensemble: PathEnsemble, domain: Domain) -> HeightFunction:
    """The height function traced by a path ensemble on a domain within its rows."""
    return HeightFunction(domain, heights_from_paths(domain, ensemble.paths, ensemble.row0))


def tiling_from_paths(ensemble: PathEnsemble, domain: Domain | None = None) -> Tiling:
    """The free tiling of a strip traced by a path ensemble.

    Without an explicit domain the strip is the parallelogram of rows
    ``row0 .. row0 + t`` and columns from the leftmost start to one past the
    rightmost end.
    """
    ensemble.check()
    if domain is None:
        lo = int(ensemble.paths[:, 0].min()) if ensemble.n_paths else 0
        hi = int(ensemble.paths[:, -1].max()) + 1 if ensemble.n_paths else 1
        domain = Domain(
            [(x, ensemble.row0 + s) for s in range(ensemble.length + 1) for x in range(lo, hi + 1)]
        )
    return tiling_from_height(height_from_paths(ensemble, domain), domain)


def hexagon_domain(A: int, B: int, C: int) -> tuple[Domain, BoundaryHeight]:
    """The ``A x B x C`` hexagon with its boundary heights.

    Corners are (0, 0), (A, 0), (A + C, C), (A + C, B + C), (C, B + C), (0, B).
    """
    if min(A, B, C) < 1:
        raise ValueError("hexagon sides must be positive")
    verts = [
        (x, y)
        for x in range(A + C + 1)
        for y in range(B + C + 1)
        if x - y <= A and y - x <= B
    ]
    domain = Domain(verts, validate=False)
    values = {}
    for x, y in domain.boundary:
        if x == 0 or y == 0:
            h = 0
        elif x == A + C or y == B + C:
            h = C
        elif x - y == A:
            h = y
        elif y - x == B:
            h = x
        else:  # pragma: no cover - every boundary vertex lies on a side
            raise AssertionError((x, y))
        values[(x, y)] = h
    return domain, BoundaryHeight(domain, values)


def disk_domain(N: int) -> Domain:
    """Lattice vertices with ``x^2 + y^2 < N^2``."""
    if N < 1:
        raise ValueError("N must be positive")
    return Domain([(x, y) for x in range(-N, N + 1) for y in range(-N, N + 1) if x * x + y * y < N * N])


def extremal_heights(domain: Domain, boundary: BoundaryHeight) -> tuple[HeightFunction, HeightFunction]:
    """Pointwise minimal and maximal height functions with the given boundary.

    Both are shortest-path potentials: ``H_max(v) = min_b h(b) + dist(b, v)``
    where a forward step costs one and a backward step costs nothing, and
    symmetrically for ``H_min``.  They are computed by vectorised relaxation.
    """
    bad = boundary.edge_violation()
    if bad is not None:
        raise Infeasible(f"boundary increment rule fails along {bad[0]} -> {bad[1]}")
    m = domain.mask
    bmask = domain.boundary_mask
    big = 4 * (int(np.abs(boundary.array).max()) + m.shape[0] + m.shape[1] + 1)
    h = boundary.array
    hmax = np.where(bmask, h, big).astype(np.int64)
    hmin = np.where(bmask, h, -big).astype(np.int64)
    hmax[~m] = big
    hmin[~m] = -big
    emask = {d: domain.edge_mask(d) for d in FORWARD}
    bmask_back = {d: shifted(emask[d], -d[0], -d[1], False) for d in FORWARD}
    for _ in range(4 * (m.shape[0] + m.shape[1]) + 8):
        new_max = hmax.copy()
        new_min = hmin.copy()
        for d in FORWARD:
            dx, dy = d
            # forward neighbour w = v + d: H(v) <= H(w), H(v) >= H(w) - 1
            fw = emask[d]
            new_max = np.where(fw, np.minimum(new_max, shifted(hmax, dx, dy, big)), new_max)
            new_min = np.where(fw, np.maximum(new_min, shifted(hmin, dx, dy, -big) - 1), new_min)
            # backward neighbour u = v - d: H(v) <= H(u) + 1, H(v) >= H(u)
            bw = bmask_back[d]
            new_max = np.where(bw, np.minimum(new_max, shifted(hmax, -dx, -dy, big) + 1), new_max)
            new_min = np.where(bw, np.maximum(new_min, shifted(hmin, -dx, -dy, -big)), new_min)
        if np.array_equal(new_max, hmax) and np.array_equal(new_min, hmin):
            break
        hmax, hmin = new_max, new_min
    if (hmax[bmask] != h[bmask]).any() or (hmin[bmask] != h[bmask]).any() or (hmin[m] > hmax[m]).any():
        raise Infeasible("boundary heights admit no extension")
    return HeightFunction(domain, hmin, check=False), HeightFunction(domain, hmax, check=False)


def is_tileable(domain: Domain, boundary: BoundaryHeight) -> bool:
    """True iff some height function on the domain restricts to ``boundary``."""
    try:
        extremal_heights(domain, boundary)
    except Infeasible:
        return False
    return True


def crossing_count(height: HeightFunction, x1: int, x2: int, s: int) -> int:
    """Paths crossing ``[x1, x2 - 1]`` on row ``s``, from height differences."""
    return x2 - x1 - (height[(x2, s)] - height[(x1, s)])
