"""Simulation from weighted tessellations and from generalized spherical laws.

Random stream layout (fixed, so a seed reproduces the output exactly): for a
batch of ``n`` points the generator is consumed as

1. ``n`` integers in ``[0, k)`` (alias column),
2. ``n`` uniforms (alias coin),
3. ``n * d`` standard exponentials, row by row (barycentric coordinates),
4. ``n`` radial variates (only for :func:`sample_gensphere`).
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidArgumentError


class AliasTable:
    """Walker/Vose alias table for O(1) draws from ``p_j = w_j / sum(w)``."""

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.size == 0:
            raise InvalidArgumentError("need at least one weight")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise InvalidArgumentError("weights must be finite and nonnegative")
        total = w.sum()
        if not total > 0:
            raise InvalidArgumentError("weights sum to zero")
        k = w.size
        scaled = w * (k / total)
        prob = np.ones(k)
        alias = np.arange(k)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        while small and large:
            lo = small.pop()
            hi = large.pop()
            prob[lo] = scaled[lo]
            alias[lo] = hi
            scaled[hi] = (scaled[hi] + scaled[lo]) - 1.0
            if scaled[hi] < 1.0:
                small.append(hi)
            else:
                large.append(hi)
        # leftovers are 1 up to round-off
        for i in small + large:
            prob[i] = 1.0
            alias[i] = i
        self.prob = prob
        self.alias = alias
        self.prob.setflags(write=False)
        self.alias.setflags(write=False)

    def __len__(self) -> int:
        return self.prob.size

    def probabilities(self) -> np.ndarray:
        """Selection probability of each index implied by the table."""
        k = self.prob.size
        p = self.prob.copy()
        np.add.at(p, self.alias, 1.0 - self.prob)
        return p / k

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        col = rng.integers(0, self.prob.size, size=n)
        coin = rng.random(n)
        return np.where(coin < self.prob[col], col, self.alias[col])


def sample_unit_simplex(d: int, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Uniform point(s) on the unit simplex: normalised i.i.d. exponentials.

    Returns shape ``(d,)`` when ``n`` is None, otherwise ``(n, d)``.
    """
    if d < 2:
        raise InvalidArgumentError(f"d must be >= 2, got {d!r}")
    E = rng.standard_exponential((1 if n is None else n, d))
    U = E / E.sum(axis=1, keepdims=True)
    return U[0] if n is None else U


def _check_weights(simplices: np.ndarray, weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != simplices.shape[0]:
        raise InvalidArgumentError(f"{simplices.shape[0]} simplices but {w.shape[0]} weights")
    if np.any(w < 0):
        raise InvalidArgumentError("negative weight")
    if not w.sum() > 0:
        raise InvalidArgumentError("all weights are zero")
    return w


def sample_tessellation(simplices, weights, n: int, rng: np.random.Generator, table: AliasTable | None = None) -> np.ndarray:
    """Draw ``n`` points on a union of flat simplices.

    ``simplices`` has shape ``(k, m, d)``: k simplices with m vertices in R^d
    (m need not equal d). Simplex ``j`` is chosen with probability
    proportional to ``weights[j]`` and the point is uniform inside it.
    """
    S = np.asarray(simplices, dtype=float)
    if S.ndim != 3:
        raise InvalidArgumentError(f"simplices must have shape (k, m, d), got {S.shape}")
    if n < 0:
        raise InvalidArgumentError("n must be nonnegative")
    if table is None:
        table = AliasTable(_check_weights(S, weights))
    if n == 0:
        return np.empty((0, S.shape[2]))
    j = table.sample(rng, n)
    U = sample_unit_simplex(S.shape[1], rng, n)
    return np.einsum("ni,nid->nd", U, S[j])


def sample_gensphere(dist, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` points ``X = R Z`` from a :class:`~starsphere.distribution.GenSphereDist`."""
    if n < 0:
        raise InvalidArgumentError("n must be nonnegative")
    d = dist.dim
    if n == 0:
        return np.empty((0, d))
    contour = dist.contour
    Z = sample_tessellation(contour.tess.simplices, None, n, rng, table=contour.alias)
    R = dist.radial.sample(rng, n)
    return R[:, None] * Z
