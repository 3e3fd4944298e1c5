"""Bernoulli walkers conditioned never to intersect.

Each of ``n`` walkers stays put with probability ``1 - beta`` or steps right
with probability ``beta``.  Conditioning on non-intersection turns the
configuration into a Markov chain whose one-step law is the product measure
tilted by the Vandermonde ratio ``V(a') / V(a)``, with
``V(a) = prod_{j<k} (a_k - a_j)``.  Because ``V`` is harmonic for the free
walk restricted to the Weyl chamber, the tilted weights already sum to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvariantViolation
from .lattice import PathEnsemble
from .sampling import _as_generator

MAX_PARTICLES = 20


@dataclass(frozen=True)
class WalkParams:
    beta: float
    initial: tuple[int, ...]
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "initial", _check_config(self.initial))
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")


class WalkStep(NamedTuple):
    config: tuple[int, ...]
    probability: float
    weight_sum: float


def _check_config(config) -> tuple[int, ...]:
    a = tuple(int(v) for v in config)
    if any(a[i] >= a[i + 1] for i in range(len(a) - 1)):
        raise InvariantViolation(f"configuration {a} is not strictly increasing")
    return a


def log_vandermonde(config) -> float:
    """``log prod_{j<k} (a_k - a_j)`` for a strictly increasing sequence."""
    a = np.asarray(config, dtype=float)
    if len(a) < 2:
        return 0.0
    diff = a[None, :] - a[:, None]
    upper = diff[np.triu_indices(len(a), 1)]
    if (upper <= 0).any():
        raise InvariantViolation("configuration is not strictly increasing")
    return float(np.log(upper).sum())


def _moves(n: int) -> np.ndarray:
    bits = (np.arange(2**n)[:, None] >> np.arange(n)[::-1]) & 1
    return bits.astype(np.int64)


def transition_law(config, beta: float) -> tuple[np.ndarray, np.ndarray, float]:
    """All admissible next configurations, their probabilities and the raw weight sum."""
    a = _check_config(config)
    n = len(a)
    if n > MAX_PARTICLES:
        raise ValueError(f"at most {MAX_PARTICLES} walkers are supported")
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64), np.ones(1), 1.0
    arr = np.array(a, dtype=np.int64)
    moves = _moves(n)
    nxt = arr + moves
    ok = (np.diff(nxt, axis=1) > 0).all(axis=1)
    nxt = nxt[ok]
    jumps = moves[ok].sum(axis=1)
    diff = nxt[:, None, :] - nxt[:, :, None]
    iu = np.triu_indices(n, 1)
    logv = np.log(diff[:, iu[0], iu[1]].astype(float)).sum(axis=1)
    logw = jumps * math.log(beta) + (n - jumps) * math.log1p(-beta) + logv - log_vandermonde(a)
    w = np.exp(logw)
    total = float(w.sum())
    return nxt, w / total, total


def walk_transition(config, beta: float, rng=None) -> WalkStep:
    """Sample the next configuration; the unnormalised weight sum is kept for checking."""
    outcomes, probs, total = transition_law(config, beta)
    gen = _as_generator(rng)
    k = int(gen.choice(len(probs), p=probs))
    return WalkStep(tuple(int(v) for v in outcomes[k]), float(probs[k]), total)


def sample_walk_ensemble(params: WalkParams, rng=None) -> PathEnsemble:
    """One ensemble of the conditioned walk started from ``params.initial``."""
    gen = _as_generator(rng)
    a = params.initial
    traj = [a]
    for _ in range(params.horizon):
        traj.append(walk_transition(traj[-1], params.beta, gen).config)
    return PathEnsemble(np.array(traj, dtype=np.int64).reshape(params.horizon + 1, len(a)).T)


def sample_walk_paths(params: WalkParams, samples: int, rng=None) -> np.ndarray:
    """Many independent ensembles at once, shape ``(samples, n, horizon + 1)``.

    Chains sharing a configuration are advanced together from one cached law.
    """
    gen = _as_generator(rng)
    n = len(params.initial)
    out = np.empty((samples, n, params.horizon + 1), dtype=np.int64)
    out[:, :, 0] = params.initial
    laws: dict = {}
    for s in range(params.horizon):
        cur = out[:, :, s]
        uniq, inv = np.unique(cur, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        for u, row in enumerate(uniq):
            key = tuple(int(v) for v in row)
            if key not in laws:
                laws[key] = transition_law(key, params.beta)
            outcomes, probs, _ = laws[key]
            idx = np.flatnonzero(inv == u)
            pick = gen.choice(len(probs), size=len(idx), p=probs)
            out[idx, :, s + 1] = outcomes[pick]
    return out


def walk_path_probability(ensemble: PathEnsemble, beta: float) -> float:
    """Probability of a whole ensemble under the conditioned walk."""
    ensemble.check()
    q = np.asarray(ensemble.paths, dtype=np.int64)
    n, steps = q.shape[0], q.shape[1] - 1
    if steps == 0:
        return 1.0
    jumps = int(q[:, -1].sum() - q[:, 0].sum())
    logp = jumps * math.log(beta) + (n * steps - jumps) * math.log1p(-beta)
    logp += log_vandermonde(q[:, -1]) - log_vandermonde(q[:, 0])
    return math.exp(logp)


def enumerate_walk_paths(initial, horizon: int) -> list[np.ndarray]:
    """Every non-intersecting trajectory of the given length, as ``(n, horizon + 1)`` arrays."""
    a = _check_config(initial)
    n = len(a)
    moves = _moves(n)
    trajs = [np.array(a, dtype=np.int64)[None, :]]
    for _ in range(horizon):
        nxt = []
        for tr in trajs:
            cand = tr[-1] + moves
            for c in cand[(np.diff(cand, axis=1) > 0).all(axis=1)]:
                nxt.append(np.vstack([tr, c]))
        trajs = nxt
    return [tr.T.copy() for tr in trajs]


def walk_height(paths: np.ndarray, x: int, s: int) -> np.ndarray:
    """Height at ``(x, s)`` of ensembles ``(..., n, T+1)``, normalised so ``H(0, 0) = 0``."""
    q = np.asarray(paths)
    left_now = (q[..., :, s] < x).sum(axis=-1)
    left_origin = (q[..., :, 0] < 0).sum(axis=-1)
    return x - left_now + left_origin


@dataclass
class AzumaReport:
    tail: float
    bound: float
    stderr: float
    mean: float
    samples: int

    @property
    def violated(self) -> bool:
        return self.tail > self.bound + 4 * self.stderr


def azuma_bound(A: float, t: int) -> float:
    if t == 0:
        return 0.0
    return 2 * math.exp(-A * A / (2 * t))


def azuma_check(params: WalkParams, point: tuple[int, int], A: float, samples: int, rng=None) -> AzumaReport:
    """Empirical tail ``P[|H(v) - E H(v)| > A]`` against the martingale bound."""
    x, s = point
    if not 0 <= s <= params.horizon:
        raise ValueError("point lies outside the strip")
    paths = sample_walk_paths(params, samples, rng)
    h = walk_height(paths, x, s).astype(float)
    mean = float(h.mean())
    tail = float((np.abs(h - mean) > A).mean())
    stderr = math.sqrt(max(tail * (1 - tail), 1.0 / samples) / samples)
    return AzumaReport(tail, azuma_bound(A, params.horizon), stderr, mean, samples)


def exact_walk_law(initial, beta: float, horizon: int) -> list[tuple[np.ndarray, float]]:
    """Pairs ``(trajectory, probability)`` over all trajectories; the oracle for small cases."""
    out = []
    for tr in enumerate_walk_paths(initial, horizon):
        out.append((tr, walk_path_probability(PathEnsemble(tr), beta)))
    return out


def ending_law(initial, beta: float, horizon: int) -> dict[tuple[int, ...], float]:
    law: dict = {}
    for tr, p in exact_walk_law(initial, beta, horizon):
        key = tuple(int(v) for v in tr[:, -1])
        law[key] = law.get(key, 0.0) + p
    return law

