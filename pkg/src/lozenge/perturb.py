"""Boundary perturbations of a path configuration and the coupling experiment.

Starting from the path positions ``q`` of a tiling on the x-axis, ``p`` is
obtained by sliding paths left and ``r`` by sliding them right, by ``i``
units in the ``i``-th block of width ``2 ell`` away from the origin.  Inside
``[-2 ell, 2 ell]`` all three agree.  Shifts may only grow across a gap of at
least two, which keeps ``p`` and ``r`` strictly increasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvariantViolation
from .lattice import Domain, HeightFunction, Slope, Tiling, height_from_tiling
from .sampling import _as_generator
from .walks import transition_law, walk_height


@dataclass(frozen=True)
class LabeledSequence:
    """Strictly increasing integers ``values[k]`` carrying labels ``first_label + k``."""

    values: tuple[int, ...]
    first_label: int

    def __getitem__(self, j: int) -> int:
        return self.values[j - self.first_label]

    def __len__(self) -> int:
        return len(self.values)

    @property
    def labels(self) -> range:
        return range(self.first_label, self.first_label + len(self.values))


@dataclass(frozen=True)
class PerturbationTriple:
    q: LabeledSequence
    p: LabeledSequence
    r: LabeledSequence
    ell: int


def _label(values) -> LabeledSequence:
    v = tuple(int(x) for x in values)
    nonpos = sum(1 for x in v if x <= 0)
    if nonpos == 0 or nonpos == len(v):
        raise InvariantViolation("no labelling with q_0 <= 0 < q_1 exists")
    return LabeledSequence(v, 1 - nonpos)


def default_window(ell: int, width: int | None = None) -> int:
    W = 2 * ell**4
    return W if width is None else min(W, width)


def build_q(tiling: Tiling | HeightFunction, ell: int, window: int | None = None) -> LabeledSequence:
    """Positions on the x-axis within ``[-W, W]`` that are not type-1 centres."""
    if ell < 2:
        raise ValueError("ell must exceed 1")
    height = tiling if isinstance(tiling, HeightFunction) else height_from_tiling(tiling)
    domain = height.domain
    W = default_window(ell) if window is None else int(window)
    xs = np.arange(-W, W + 1)
    for s in range(ell + 1):
        for x in (-W, W + 1):
            if (x, s) not in domain.vertices:
                raise ValueError(f"window [{-W}, {W}] x [0, {ell}] is not covered by the domain")
    vals = [int(x) for x in xs if height[(x + 1, 0)] == height[(x, 0)]]
    return _label(vals)


def restricted_paths(height: HeightFunction, q: LabeledSequence, ell: int) -> np.ndarray:
    """Follow the paths through ``q`` up to row ``ell``; shape ``(len(q), ell + 1)``."""
    out = np.empty((len(q), ell + 1), dtype=np.int64)
    out[:, 0] = q.values
    verts = height.domain.vertices
    for s in range(1, ell + 1):
        for k, x in enumerate(out[:, s - 1]):
            x = int(x)
            if (x + 1, s) not in verts:
                raise ValueError(f"path through ({x}, {s - 1}) leaves the domain")
            # a flat diagonal above the edge means a type-3 lozenge: the path goes straight up
            out[k, s] = x if height[(x + 1, s)] == height[(x, s - 1)] else x + 1
    return out


def in_Z(seq, k: int) -> bool:
    """True iff ``seq`` has no run of ``k`` consecutive integers and no gap of ``k`` or more."""
    if k <= 1:
        raise ValueError("k must exceed 1")
    a = np.asarray(seq, dtype=np.int64)
    if len(a) >= k and (a[k - 1:] - a[: len(a) - k + 1] < k).any():
        return False
    return not (np.diff(a) >= k).any()


def build_p_r(q: LabeledSequence | tuple, ell: int, check: bool = True) -> PerturbationTriple:
    """Left and right perturbations ``p <= q <= r`` of a labelled configuration.

    Blocks ``i = 1, 2, ...`` cover ``2 i ell < |x| <= 2 (i + 1) ell``.  On the
    left, ``p`` shifts block ``i`` by ``-i`` outright, while ``r`` raises its
    shift by one at the rightmost element of each block followed by a gap.  On
    the right the roles swap: ``r`` shifts by ``+i`` outright and ``p`` lowers
    its shift at the leftmost element of each block preceded by a gap.  A
    block without such an element leaves the shift unchanged.
    """
    if not isinstance(q, LabeledSequence):
        q = _label(q)
    if check and not in_Z(q.values, ell):
        raise InvariantViolation(f"q is not in Z({ell})")
    a = np.array(q.values, dtype=np.int64)
    L = 2 * ell
    block = np.where(np.abs(a) > L, np.ceil(np.abs(a) / L).astype(np.int64) - 1, 0)
    left = a < -L
    right = a > L
    idx = np.arange(len(a))
    gap_before = np.r_[False, np.diff(a) > 1]
    gap_after = np.r_[np.diff(a) > 1, False]

    p_shift = np.where(left, -block, 0)
    r_shift = np.where(right, block, 0)
    for i in range(1, int(block.max(initial=0)) + 1):
        cand = idx[right & (block == i) & gap_before]
        if len(cand):
            p_shift[right & (idx >= cand[0])] -= 1
        cand = idx[left & (block == i) & gap_after]
        if len(cand):
            r_shift[left & (idx <= cand[-1])] += 1

    p = a + p_shift
    r = a + r_shift
    if (np.diff(p) <= 0).any() or (np.diff(r) <= 0).any():
        raise InvariantViolation("perturbed configuration is not strictly increasing")
    return PerturbationTriple(q, LabeledSequence(tuple(int(v) for v in p), q.first_label),
                              LabeledSequence(tuple(int(v) for v in r), q.first_label), ell)


def slope_to_beta(slope: Slope) -> float:
    """Jump probability of walkers whose local statistics have slope ``(s, t)``."""
    st = math.sin(math.pi * slope.t)
    su = math.sin(math.pi * (1 - slope.s - slope.t))
    return st / (st + su)


def coupled_walks(configs, betas, horizon: int, rng=None) -> list[np.ndarray]:
    """Walk ensembles for several ``(config, beta)`` pairs driven by one uniform per step.

    Each step inverts the cumulative transition law in lexicographic order of
    the outcomes with a shared uniform, so identical inputs give identical paths.
    """
    gen = _as_generator(rng)
    trajs = [np.empty((len(c), horizon + 1), dtype=np.int64) for c in configs]
    for tr, c in zip(trajs, configs):
        tr[:, 0] = c
    for s in range(horizon):
        u = gen.random()
        for tr, beta in zip(trajs, betas):
            outcomes, probs, _ = transition_law(tr[:, s], beta)
            k = min(int(np.searchsorted(np.cumsum(probs), u, side="right")), len(probs) - 1)
            tr[:, s + 1] = outcomes[k]
    return trajs


@dataclass
class CouplingReport:
    beta: float
    ell: int
    window: int
    samples: int
    ordered_pqr: float
    ordered_pr: float
    agree_pqr: float
    agree_pr: float
    initial_ordered: float


def coupling_experiment(tiling_source, slope: Slope, delta: float, ell: int, samples: int, rng=None,
                        window: int | None = None, agree_radius: int = 1) -> CouplingReport:
    """Frequencies of ``H_P <= H_Q <= H_R`` and of local agreement for sampled tilings.

    ``tiling_source(gen)`` returns a height function or tiling containing the
    window.  ``P`` and ``R`` are walks from ``p`` and ``r`` with jump rates
    ``beta -+ delta``, coupled through shared uniforms; ``Q`` is the tiling's
    own path ensemble started at ``q``.  Heights are compared on
    ``[-ell, ell] x [0, ell]``.
    """
    beta = slope_to_beta(slope)
    if not 0 < beta - delta < beta + delta < 1 and delta != 0:
        raise ValueError("beta +- delta must lie in (0, 1)")
    gen = _as_generator(rng)
    counts = np.zeros(5)
    xs = range(-ell, ell + 1)
    near = [(x, s) for x in range(-agree_radius, agree_radius + 1) for s in range(0, min(agree_radius, ell) + 1)]
    W = None
    for _ in range(samples):
        source = tiling_source(gen)
        height = source if isinstance(source, HeightFunction) else height_from_tiling(source)
        W = window if window is not None else default_window(ell, _half_width(height.domain, ell))
        q = build_q(height, ell, W)
        triple = build_p_r(q, ell, check=False)
        Q = restricted_paths(height, q, ell)
        P, R = coupled_walks([triple.p.values, triple.r.values], [beta - delta, beta + delta], ell, gen)
        hp = np.array([[walk_height(P, x, s) for s in range(ell + 1)] for x in xs])
        hq = np.array([[walk_height(Q, x, s) for s in range(ell + 1)] for x in xs])
        hr = np.array([[walk_height(R, x, s) for s in range(ell + 1)] for x in xs])
        counts[0] += bool((hp <= hq).all() and (hq <= hr).all())
        counts[1] += bool((hp <= hr).all())
        loc = [(x + ell, s) for x, s in near]
        counts[2] += all(hp[i, s] == hq[i, s] == hr[i, s] for i, s in loc)
        counts[3] += all(hp[i, s] == hr[i, s] for i, s in loc)
        counts[4] += bool((np.array(triple.p.values) <= np.array(q.values)).all()
                          and (np.array(q.values) <= np.array(triple.r.values)).all())
    f = counts / max(samples, 1)
    return CouplingReport(beta, ell, int(W or 0), samples, *map(float, f))


def _half_width(domain: Domain, ell: int) -> int:
    """Largest ``W`` with ``[-W, W + 1] x [0, ell]`` inside the domain."""
    W = 0
    while all((x, y) in domain.vertices for y in range(ell + 1) for x in (-W - 1, W + 2)):
        W += 1
    return max(W, 1)
