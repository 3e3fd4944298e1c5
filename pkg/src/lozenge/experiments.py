"""Desk-scale experiments comparing sampled tilings with their limits.

Every experiment is a pure function of an ``ExperimentConfig``: samples are
drawn in fixed-size chunks, chunk ``k`` using stream ``k`` spawned from the
master seed, so the numbers do not depend on how many worker threads run
the chunks.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import Infeasible
from .io import domain_from_spec
from .kernels import SineKernel, correlation_probability, slope_to_xi
from .lattice import BoundaryHeight, Domain, HeightFunction, Slope, extremal_heights, hexagon_domain
from .sampling import HeatBath, RngState
from .variational import (
    Mesh,
    Region,
    gradient_at,
    hexagon_boundary,
    hexagon_ellipse,
    maximize_entropy,
)

CONFIG_FORMAT = "lozenge-experiment"
CONFIG_VERSION = 1
CHUNK = 500


@dataclass
class ExperimentConfig:
    """Everything an experiment needs; ``params`` holds experiment-specific knobs.

    Serialized as JSON with a format tag and version number.  Python's JSON
    writer emits the shortest repr of each float, which reads back exactly.
    """

    name: str
    domain: dict = field(default_factory=dict)
    samples: int = 100
    sweeps: int | None = None
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"format": CONFIG_FORMAT, "version": CONFIG_VERSION, **asdict(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        fmt = d.pop("format", CONFIG_FORMAT)
        version = d.pop("version", CONFIG_VERSION)
        if fmt != CONFIG_FORMAT:
            raise ValueError(f"not an experiment config: format {fmt!r}")
        if version != CONFIG_VERSION:
            raise ValueError(f"unsupported config version {version}")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config fields {sorted(unknown)}")
        return cls(**d)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.dumps() + "\n")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.loads(Path(path).read_text())


def local_stats_sweeps(domain: Domain) -> int:
    """Default chain length: twice the squared diameter.

    On the size-24 regular hexagon, pairs of chains started at the minimal and
    maximal heights and driven by common coins coalesce after about
    ``1.2 diameter**2`` sweeps.
    """
    return 2 * domain.diameter() ** 2


def run_chains(domain: Domain, boundary: BoundaryHeight, samples: int, sweeps: int, seed: int,
               workers: int = 1, monitors: int = 0) -> tuple[np.ndarray, float]:
    """Heat-bath chains from the minimal height; returns site-major states.

    ``monitors`` extra pairs of chains, one from the minimal and one from the
    maximal height, share coins within each pair; the second return value is
    the fraction of those pairs that coalesced (``nan`` without monitors).
    """
    hmin, hmax = extremal_heights(domain, boundary)
    bath = HeatBath(domain)
    sizes = [min(CHUNK, samples - k) for k in range(0, samples, CHUNK)]
    streams = RngState(seed).spawn(len(sizes))

    def chunk(k):
        n = sizes[k]
        gen = streams[k].generator
        extra = monitors if k == 0 else 0
        states = np.concatenate([bath.initial(hmin, n + extra), bath.initial(hmax, extra)], axis=1)
        for _ in range(sweeps):
            coins = bath.coins(gen, n + extra)
            if extra:
                coins = [np.concatenate([c, c[:, n:]], axis=1) for c in coins]
            bath.sweep(states, None, coins)
        agree = (states[:, n:n + extra] == states[:, n + extra:]).all(axis=0)
        return states[:, :n], agree

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(chunk, range(len(sizes))))
    else:
        parts = [chunk(k) for k in range(len(sizes))]
    coalesced = float(parts[0][1].mean()) if monitors and parts else math.nan
    return np.concatenate([p[0] for p in parts], axis=1), coalesced


def lattice_limit_shape(domain: Domain, boundary: BoundaryHeight, tol: float = 1e-9):
    """Entropy maximiser on the domain's own lattice with its boundary heights."""
    mesh = Mesh(1.0, (0.0, 0.0), domain)
    return maximize_entropy(mesh, boundary.array.astype(float), tol=tol)


def _center_vertex(domain: Domain) -> tuple[int, int]:
    pts = np.array(domain.sorted_vertices())
    c = pts.mean(axis=0)
    return tuple(int(v) for v in pts[np.argmin(((pts - c) ** 2).sum(axis=1))])


@dataclass
class LocalStatsReport:
    """Empirical type-1 occupation near ``target`` against the sine process.

    ``points`` are the lower-right faces in the window; ``one_point`` rows are
    ``(empirical, wald_se, theory)`` per point and ``pairs`` rows are
    ``(i, j, empirical, wald_se, theory)``.  Theory entries are ``nan`` when
    the slope is frozen.
    """

    target: tuple[int, int]
    slope: Slope
    samples: int
    sweeps: int
    coalesced: float
    points: list
    one_point: np.ndarray
    pairs: np.ndarray

    @staticmethod
    def _z(emp, se, th):
        diff = emp - th
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff == 0, 0.0, np.inf))

    def center(self) -> tuple[float, float, float, float]:
        """``(empirical, se, theory, z)`` at the target face."""
        emp, se, th = self.one_point[self.points.index(self.target)]
        return emp, se, th, float(self._z(np.array(emp), np.array(se), np.array(th)))

    def nearest_pairs(self) -> np.ndarray:
        """Rows ``(dx, dy, empirical, se, theory, z)`` for the six neighbours of the target."""
        x0, y0 = self.target
        c = self.points.index(self.target)
        out = []
        for dx, dy in ((1, 0), (0, 1), (1, 1), (-1, 0), (0, -1), (-1, -1)):
            other = self.points.index((x0 + dx, y0 + dy))
            for i, j, emp, se, th in self.pairs:
                if {int(i), int(j)} == {c, other}:
                    out.append((dx, dy, emp, se, th, float(self._z(np.array(emp), np.array(se), np.array(th)))))
        return np.array(out)

    def z_scores(self) -> tuple[np.ndarray, np.ndarray]:
        o, p = self.one_point, self.pairs
        return self._z(o[:, 0], o[:, 1], o[:, 2]), self._z(p[:, 2], p[:, 3], p[:, 4])


def local_stats_experiment(config: ExperimentConfig) -> LocalStatsReport:
    """Type-1 correlations near a target vertex against the sine process at the limit slope.

    ``params``: ``target`` (default: the vertex nearest the centroid),
    ``radius`` (2), ``workers`` (1), ``monitors`` (8), ``liquid_eps`` (1e-3)
    and ``allow_frozen`` (False).  A frozen target raises ``Infeasible``
    unless ``allow_frozen`` is set, in which case theory columns are ``nan``.
    """
    p = config.params
    domain, boundary = domain_from_spec(config.domain)
    target = tuple(p["target"]) if "target" in p else _center_vertex(domain)
    radius = int(p.get("radius", 2))
    profile = lattice_limit_shape(domain, boundary)
    slope = gradient_at(profile, target)
    frozen = not slope.in_interior(float(p.get("liquid_eps", 1e-3)))
    if frozen and not p.get("allow_frozen", False):
        raise Infeasible(f"target {target} has frozen slope {tuple(slope)}")

    verts = domain.vertices
    x0, y0 = target
    points = [(x, y) for x in range(x0 - radius, x0 + radius + 1) for y in range(y0 - radius, y0 + radius + 1)
              if {(x, y), (x + 1, y), (x + 1, y + 1)} <= verts]
    if target not in points:
        raise ValueError(f"target face {target} is not inside the domain")

    sweeps = local_stats_sweeps(domain) if config.sweeps is None else int(config.sweeps)
    states, coalesced = run_chains(domain, boundary, config.samples, sweeps, config.seed,
                                   int(p.get("workers", 1)), int(p.get("monitors", 8)))
    ny = domain.shape[1]
    flat = lambda v: (v[0] - domain.x0) * ny + (v[1] - domain.y0)  # noqa: E731
    ind = np.stack([states[flat((x + 1, y))] - states[flat((x, y))] == 1 for x, y in points], axis=1)
    n = ind.shape[0]
    ind = ind.astype(float)
    p1 = ind.mean(axis=0)
    p2 = ind.T @ ind / n

    K = None if frozen else SineKernel(slope_to_xi(slope))
    one = np.array([(p1[i], math.sqrt(p1[i] * (1 - p1[i]) / n),
                     math.nan if K is None else correlation_probability(K, [points[i]]))
                    for i in range(len(points))])
    pairs = np.array([(i, j, p2[i, j], math.sqrt(p2[i, j] * (1 - p2[i, j]) / n),
                       math.nan if K is None else correlation_probability(K, [points[i], points[j]]))
                      for i in range(len(points)) for j in range(i + 1, len(points))])
    return LocalStatsReport(target, slope, n, sweeps, coalesced, points, one, pairs)


@dataclass
class GlobalLawReport:
    """Per size ``N``: the max over liquid vertices of ``|H(v)/N - limit(v/N)|`` for each sample.

    ``corner`` is the fraction of samples whose height at the interior vertex
    next to the corner ``(0, 0)`` equals the rounded limit value, and
    ``tail`` lists ``(r, empirical P[|H - mean| >= r], 2 exp(-r^2 / 32))`` at
    the centre vertex.
    """

    sides: tuple[float, float, float]
    sizes: tuple[int, ...]
    deviations: dict
    corner: dict
    tail: dict

    def median(self, N: int) -> float:
        return float(np.median(self.deviations[N]))

    def summary(self) -> list[tuple[int, float, float, float, float]]:
        return [(N, self.median(N), float(np.mean(self.deviations[N])), float(np.max(self.deviations[N])),
                 self.corner[N]) for N in self.sizes]


def hexagon_globallaw_experiment(A: float, B: float, C: float, samples: int, sweeps: int | None = None,
                                 rng=0, sizes=(8, 24), mesh: float = 1 / 48, workers: int = 1) -> GlobalLawReport:
    """Sampled normalised heights of the ``AN x BN x CN`` hexagons against the limit shape.

    The limit shape is solved once on the ``A x B x C`` hexagon with mesh
    ``mesh``; ``v / N`` must land on mesh points, so each ``N * mesh`` must
    be the reciprocal of an integer.
    """
    seed = rng.seed if isinstance(rng, RngState) else int(rng)
    profile = maximize_entropy(Region.hexagon(A, B, C), hexagon_boundary(A, B, C), mesh_size=mesh)
    ellipse = hexagon_ellipse(A, B, C)
    deviations, corner, tail = {}, {}, {}
    for k, N in enumerate(sizes):
        ratio = 1 / (N * mesh)
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(f"size {N} does not divide the mesh")
        ratio = int(round(ratio))
        domain, boundary = hexagon_domain(int(round(A * N)), int(round(B * N)), int(round(C * N)))
        sw = local_stats_sweeps(domain) if sweeps is None else int(sweeps)
        states, _ = run_chains(domain, boundary, samples, sw, seed + k, workers)
        pts = np.array(domain.sorted_vertices())
        liquid = pts[ellipse.contains(pts[:, 0] / N, pts[:, 1] / N)]
        ny = domain.shape[1]
        m0 = profile.mesh.domain
        idx = (liquid[:, 0] - domain.x0) * ny + (liquid[:, 1] - domain.y0)
        limit = profile.values[liquid[:, 0] * ratio - m0.x0, liquid[:, 1] * ratio - m0.y0]
        H = states[idx].astype(float)
        deviations[N] = np.abs(H / N - limit[:, None]).max(axis=0)
        cv = (1, 1)
        ci = (cv[0] - domain.x0) * ny + (cv[1] - domain.y0)
        staircase = round(N * profile.values[cv[0] * ratio - m0.x0, cv[1] * ratio - m0.y0])
        corner[N] = float((states[ci] == staircase).mean())
        centre = _center_vertex(domain)
        hc = states[(centre[0] - domain.x0) * ny + (centre[1] - domain.y0)].astype(float)
        dev = np.abs(hc - hc.mean())
        tail[N] = [(r, float((dev >= r).mean()), 2 * math.exp(-r * r / 32)) for r in range(1, 9)]
    return GlobalLawReport((A, B, C), tuple(sizes), deviations, corner, tail)


def height_samples(states: np.ndarray, domain: Domain) -> list[HeightFunction]:
    return [HeightFunction(domain, col.reshape(domain.shape).astype(np.int64), check=False) for col in states.T]
