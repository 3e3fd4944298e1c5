"""Uniform sampling and exhaustive enumeration of height functions.

The chain is the heat-bath dynamics on heights: at an interior vertex the
neighbours pin the height to an interval ``[lo, hi]`` of length at most one
and the new value is ``lo + coin * (hi - lo)`` for a fair coin.  Feeding the
same coin to two chains preserves pointwise order, which gives monotone
couplings and coupling from the past.

Vertices with equal ``(x + y) mod 3`` are never adjacent, so each colour class
can be resampled at once; ``HeatBath`` does this for a whole batch of
independent chains.
"""

from __future__ import annotations

import numpy as np

from .errors import CapExceeded, Infeasible
from .lattice import (
    FORWARD,
    BoundaryHeight,
    Domain,
    HeightFunction,
    extremal_heights,
)


class RngState:
    """Seeded random stream; identical seeds give identical draws."""

    def __init__(self, seed: int = 0, counter: int = 0):
        self.seed = int(seed) & (2**64 - 1)
        self.counter = int(counter)
        self._seq = np.random.SeedSequence(self.seed, spawn_key=(self.counter,))
        self.generator = np.random.default_rng(self._seq)

    def spawn(self, n: int) -> list["RngState"]:
        """``n`` independent child streams derived from this one."""
        base = self.counter * 1_000_003
        return [RngState(self.seed, base + k + 1) for k in range(n)]

    def __repr__(self) -> str:
        return f"RngState(seed={self.seed}, counter={self.counter})"


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngState):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _bounds(values: np.ndarray, domain: Domain, v: tuple[int, int]) -> tuple[int, int]:
    i, j = domain.index(v)
    lo, hi = -(2**62), 2**62
    for dx, dy in FORWARD:
        w = values[i + dx, j + dy]
        lo = max(lo, w - 1)
        hi = min(hi, w)
        u = values[i - dx, j - dy]
        lo = max(lo, u)
        hi = min(hi, u + 1)
    return int(lo), int(hi)


def glauber_step(height: HeightFunction, domain: Domain | None = None, rng=None) -> HeightFunction:
    """One heat-bath move at a uniformly chosen interior vertex."""
    domain = domain or height.domain
    gen = _as_generator(rng)
    interior = sorted(domain.interior)
    if not interior:
        return height
    v = interior[int(gen.integers(len(interior)))]
    lo, hi = _bounds(height.array, domain, v)
    new = lo + int(gen.integers(2)) * (hi - lo)
    arr = height.array.copy()
    arr[domain.index(v)] = new
    return HeightFunction(domain, arr, check=False)


class HeatBath:
    """Colour-class heat-bath sweeps on a batch of height arrays.

    States are arrays of shape ``(X * Y, batch)`` over the flattened domain
    grid, site-major so that neighbour gathers read contiguous rows.  A sweep
    resamples the three colour classes in turn.
    """

    def __init__(self, domain: Domain):
        self.domain = domain
        nx, ny = domain.shape
        self.size = nx * ny
        self.classes = []
        idx = np.argwhere(domain.interior_mask)
        colour = (idx[:, 0] + domain.x0 + idx[:, 1] + domain.y0) % 3
        for c in range(3):
            sel = idx[colour == c]
            flat = sel[:, 0] * ny + sel[:, 1]
            fwd = [flat + dx * ny + dy for dx, dy in FORWARD]
            bwd = [flat - dx * ny - dy for dx, dy in FORWARD]
            self.classes.append((flat, fwd, bwd))
        self.n_interior = len(idx)

    def initial(self, base: HeightFunction, batch: int, dtype=np.int16) -> np.ndarray:
        flat = base.array.reshape(-1).astype(dtype)
        return np.repeat(flat[:, None], batch, axis=1)

    def class_update(self, states: np.ndarray, c: int, coins: np.ndarray) -> None:
        flat, fwd, bwd = self.classes[c]
        if len(flat) == 0:
            return
        f = [states[k] for k in fwd]
        b = [states[k] for k in bwd]
        hi = np.minimum(np.minimum(f[0], f[1]), f[2])
        hi = np.minimum(hi, np.minimum(np.minimum(b[0], b[1]), b[2]) + 1)
        lo = np.maximum(np.maximum(b[0], b[1]), b[2])
        lo = np.maximum(lo, np.maximum(np.maximum(f[0], f[1]), f[2]) - 1)
        states[flat] = lo + coins * (hi - lo)

    def coins(self, gen: np.random.Generator, batch: int) -> list[np.ndarray]:
        out = []
        for flat, _, _ in self.classes:
            n = len(flat)
            raw = gen.integers(0, 256, size=(n, (batch + 7) // 8), dtype=np.uint8)
            out.append(np.unpackbits(raw, axis=1, count=batch).astype(np.int16))
        return out

    def sweep(self, states: np.ndarray, gen: np.random.Generator, coins=None) -> list[np.ndarray]:
        if coins is None:
            coins = self.coins(gen, states.shape[1])
        for c in range(3):
            self.class_update(states, c, coins[c])
        return coins

    def to_height(self, row: np.ndarray) -> HeightFunction:
        return HeightFunction(self.domain, row.reshape(self.domain.shape).astype(np.int64), check=False)


def default_sweeps(domain: Domain) -> int:
    return 20 * domain.diameter() ** 2


def sample_uniform(
    domain: Domain,
    boundary: BoundaryHeight,
    sweeps: int | None = None,
    rng=None,
    batch: int | None = None,
    exact: bool = False,
):
    """Approximately uniform height function(s) with the given boundary.

    Runs heat-bath sweeps from ``H_min``.  With ``batch`` an array of that many
    independent samples is returned as a list.  With ``exact=True`` coupling
    from the past is used instead and the samples are exactly uniform.
    """
    if sweeps is not None and sweeps < 1:
        raise ValueError("sweeps must be at least 1")
    hmin, hmax = extremal_heights(domain, boundary)
    gen = _as_generator(rng)
    n = 1 if batch is None else int(batch)
    bath = HeatBath(domain)
    if exact:
        states = cftp(bath, hmin, hmax, n, gen)
    else:
        sweeps = default_sweeps(domain) if sweeps is None else int(sweeps)
        states = bath.initial(hmin, n)
        for _ in range(sweeps):
            bath.sweep(states, gen)
    out = [bath.to_height(col) for col in states.T]
    return out[0] if batch is None else out


def cftp(bath: HeatBath, hmin: HeightFunction, hmax: HeightFunction, batch: int, gen: np.random.Generator,
         start: int = 16, max_sweeps: int = 2**22) -> np.ndarray:
    """Monotone coupling from the past for a batch of independent chains.

    The coins of the sweep at time ``-k`` are drawn from a stream keyed by
    ``k`` so they are reused when the starting time is pushed further back.
    """
    root = int(gen.integers(2**63))
    done = np.zeros(batch, dtype=bool)
    result = bath.initial(hmin, batch)
    T = start
    while True:
        top = bath.initial(hmax, batch)
        bottom = bath.initial(hmin, batch)
        for k in range(T, 0, -1):
            coins = bath.coins(np.random.default_rng([root, k]), batch)
            bath.sweep(top, None, coins)
            bath.sweep(bottom, None, coins)
        agree = (top == bottom).all(axis=0) & ~done
        result[:, agree] = top[:, agree]
        done |= agree
        if done.all():
            return result
        T *= 2
        if T > max_sweeps:
            raise RuntimeError("coupling from the past did not coalesce")


def monotone_coupled_sample(domain: Domain, h1: BoundaryHeight, h2: BoundaryHeight, sweeps: int, rng=None,
                            batch: int | None = None):
    """Two heat-bath chains with boundaries ``h1 <= h2`` driven by the same coins.

    Each chain starts from its own ``H_min``; the output pair is ordered
    pointwise.
    """
    if (h1.array[domain.boundary_mask] > h2.array[domain.boundary_mask]).any():
        raise ValueError("boundary heights are not ordered")
    lo1, _ = extremal_heights(domain, h1)
    lo2, _ = extremal_heights(domain, h2)
    gen = _as_generator(rng)
    n = 1 if batch is None else int(batch)
    bath = HeatBath(domain)
    s1 = bath.initial(lo1, n)
    s2 = bath.initial(lo2, n)
    for _ in range(int(sweeps)):
        coins = bath.sweep(s1, gen)
        bath.sweep(s2, None, coins)
    pairs = [(bath.to_height(a), bath.to_height(b)) for a, b in zip(s1.T, s2.T)]
    return pairs[0] if batch is None else pairs


def enumerate_height_arrays(domain: Domain, boundary: BoundaryHeight, cap: int = 10**6) -> np.ndarray:
    """All height functions with the given boundary, as flattened grid rows.

    Interior vertices are assigned in lexicographic order, so the neighbours
    ``v - d`` are always already set; every partial assignment is extended by
    each value in its admissible interval at once.
    """
    try:
        hmin, hmax = extremal_heights(domain, boundary)
    except Infeasible:
        return np.zeros((0, domain.mask.size), dtype=np.int16)
    nx, ny = domain.shape
    states = hmin.array.reshape(1, -1).astype(np.int16)
    assigned = domain.boundary_mask.copy()
    for v in sorted(domain.interior):
        i, j = domain.index(v)
        lo = np.full(len(states), hmin.array[i, j], dtype=np.int16)
        hi = np.full(len(states), hmax.array[i, j], dtype=np.int16)
        for dx, dy in FORWARD:
            if assigned[i + dx, j + dy]:
                w = states[:, (i + dx) * ny + j + dy]
                lo = np.maximum(lo, w - 1)
                hi = np.minimum(hi, w)
            if assigned[i - dx, j - dy]:
                u = states[:, (i - dx) * ny + j - dy]
                lo = np.maximum(lo, u)
                hi = np.minimum(hi, u + 1)
        width = (hi - lo + 1).clip(0)
        reps = np.repeat(np.arange(len(states)), width)
        if len(reps) > cap:
            raise CapExceeded(f"more than {cap} height functions")
        offset = np.arange(len(reps)) - np.repeat(np.cumsum(width) - width, width)
        states = states[reps]
        states[:, i * ny + j] = lo[reps] + offset
        assigned[i, j] = True
    return states


def enumerate_tilings(domain: Domain, boundary: BoundaryHeight, cap: int = 10**6) -> list[HeightFunction]:
    """Every height function with the given boundary, duplicate free."""
    states = enumerate_height_arrays(domain, boundary, cap)
    shape = domain.shape
    return [HeightFunction(domain, row.reshape(shape).astype(np.int64), check=False) for row in states]
