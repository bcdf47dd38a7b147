"""Adaptive cubature of c^d over the unit sphere on a simplicial mesh.

A flat simplex ``T`` with vertices ``v_1..v_d`` (rows of ``V``) is the
central projection of a spherical patch ``P``.  With ``x = sum u_i v_i``
and ``u`` on the standard (d-1)-simplex, the change of variables gives

    int_P phi(s) ds = |det V| * int_{Delta} phi(x/|x|) |x|^(-d) du

so every rule below works on the flat simplex with that Jacobian.
"""
from __future__ import annotations

import heapq
from itertools import combinations_with_replacement
import warnings
from dataclasses import dataclass, field
from math import factorial, fsum, sqrt
from typing import Callable, Optional

import numpy as np

from .contour import ContourSpec, eval_contour_unchecked
from .errors import DegenerateContourError, InvalidArgumentError
from .mesh import SurfaceMesh, bisect_longest_edge, degenerate_mask

DEFAULT_REL_TOL = 1e-5
DEFAULT_MAX_SIMPLICES = 50_000


class ToleranceNotMetWarning(UserWarning):
    pass


def stroud_points(m: int) -> np.ndarray:
    """Barycentric nodes of the equal-weight degree-2 rule on an m-simplex.

    ``m + 1`` interior points, each a permutation of ``(a, b, ..., b)``.
    For ``m == 1`` this is two-point Gauss-Legendre.
    """
    r = sqrt(m + 2)
    a = (m + 2 + m * r) / ((m + 1) * (m + 2))
    b = (m + 2 - r) / ((m + 1) * (m + 2))
    return np.full((m + 1, m + 1), b) + np.eye(m + 1) * (a - b)


@dataclass(frozen=True, eq=False)
class WeightedTessellation:
    """Simplices with the integral of c^d over each one's spherical patch.

    ``origin[j]`` is the index of the input-mesh simplex that simplex ``j``
    descends from; ``groups`` is inherited from the input mesh.
    """

    simplices: np.ndarray
    weights: np.ndarray
    total: float
    abs_error: float
    converged: bool = True
    origin: Optional[np.ndarray] = None
    groups: Optional[np.ndarray] = None
    degenerate: int = 0
    errors: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        S = np.asarray(self.simplices, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if S.shape[0] != w.shape[0]:
            raise InvalidArgumentError("one weight per simplex required")
        if np.any(w < 0):
            raise InvalidArgumentError("weights must be nonnegative")
        n = S.shape[0]
        origin = np.arange(n) if self.origin is None else np.asarray(self.origin, dtype=np.int64)
        groups = np.zeros(n, dtype=np.int64) if self.groups is None else np.asarray(self.groups, dtype=np.int64)
        for name, arr in (("simplices", S), ("weights", w), ("origin", origin), ("groups", groups)):
            arr = np.array(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.simplices.shape[2]

    def __len__(self) -> int:
        return self.simplices.shape[0]

    def with_simplices(self, simplices: np.ndarray) -> "WeightedTessellation":
        """Same weights and bookkeeping on a different set of vertices."""
        return WeightedTessellation(
            simplices, self.weights, self.total, self.abs_error, self.converged,
            self.origin, self.groups, self.degenerate, self.errors,
        )


def grundmann_moeller(m: int, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Grundmann-Moeller rule of degree ``2s+1`` on the ``m``-simplex.

    Returns barycentric nodes ``(q, m+1)`` and weights summing to one, so
    the rule approximates the mean of a function over the simplex.
    """
    nodes, weights = [], []
    for i in range(s + 1):
        denom = 2 * s + m + 1 - 2 * i
        w = (-1) ** i * 2.0 ** (-2 * s) * denom ** (2 * s + 1) * factorial(m) / (
            factorial(i) * factorial(2 * s + m + 1 - i)
        )
        for combo in combinations_with_replacement(range(m + 1), s - i):
            beta = np.bincount(np.array(combo, dtype=np.int64), minlength=m + 1)
            nodes.append((2 * beta + 1) / denom)
            weights.append(w)
    return np.array(nodes), np.array(weights)


def _reference_rule(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Barycentric nodes and weights of the rule used for error control.

    For ``d == 2`` the degree-2 family is already Gauss-Legendre (degree 3),
    so it is compared against the midpoint rule.  For ``d > 2`` it is
    compared against the degree-5 Grundmann-Moeller rule; the degree-3 one
    shares the leading error order on centrally symmetric integrands and
    underestimates the error by a factor of about three.
    """
    if d == 2:
        return np.full((1, d), 0.5), np.ones(1)
    return grundmann_moeller(d - 1, 2)


def _rules(S: np.ndarray, phi: Callable[[np.ndarray], np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Degree-2 estimate and its discrepancy with the reference rule."""
    n, d, _ = S.shape
    ref_nodes, ref_w = _reference_rule(d)
    bary = np.vstack([stroud_points(d - 1), ref_nodes])
    X = np.einsum("qi,nid->nqd", bary, S).reshape(-1, d)
    r = np.linalg.norm(X, axis=1)
    vals = phi(X / r[:, None]) * r ** (-d)
    vals = vals.reshape(n, bary.shape[0])
    jac = np.abs(np.linalg.det(S)) / factorial(d - 1)
    q2 = jac * vals[:, :d].mean(axis=1)
    qref = jac * (vals[:, d:] @ ref_w)
    return q2, np.abs(q2 - qref)


def simplex_rule(vertices, phi: Callable[[np.ndarray], np.ndarray]) -> tuple[float, float]:
    """Integrate ``phi`` over the spherical patch under one flat simplex.

    ``phi`` takes an ``(n, d)`` array of unit vectors. Returns the degree-2
    estimate and its distance from a second rule as an error proxy; a
    degenerate simplex gives ``(0.0, 0.0)``.
    """
    V = np.asarray(vertices, dtype=float)
    if degenerate_mask(V[None])[0]:
        return 0.0, 0.0
    q, e = _rules(V[None], phi)
    return float(q[0]), float(e[0])


def contour_integrand(spec: ContourSpec) -> Callable[[np.ndarray], np.ndarray]:
    d = spec.dim

    def phi(S):
        return eval_contour_unchecked(spec, S) ** d

    return phi


def integrate_sphere(
    spec: ContourSpec,
    mesh: SurfaceMesh,
    rel_tol: float = DEFAULT_REL_TOL,
    max_simplices: int = DEFAULT_MAX_SIMPLICES,
    deterministic: bool = True,
) -> WeightedTessellation:
    """Adaptively integrate ``c^d`` over the sphere starting from ``mesh``.

    The simplex with the largest error estimate is bisected along its
    longest edge until the summed error drops below ``rel_tol`` times the
    summed estimate or ``max_simplices`` is reached. In the latter case the
    result carries ``converged=False`` and a :class:`ToleranceNotMetWarning`
    is issued.

    Evaluation is sequential, so results are always reproducible; the
    ``deterministic`` flag is accepted for interface compatibility.
    """
    if spec.dim != mesh.dim:
        raise InvalidArgumentError(f"contour is {spec.dim}-d but mesh is {mesh.dim}-d")
    if not 0 < rel_tol < 1:
        raise InvalidArgumentError(f"rel_tol must lie in (0, 1), got {rel_tol!r}")
    if max_simplices < len(mesh):
        raise InvalidArgumentError("max_simplices is smaller than the initial mesh")
    return integrate_function(contour_integrand(spec), mesh, rel_tol, max_simplices)


def integrate_function(
    phi: Callable[[np.ndarray], np.ndarray],
    mesh: SurfaceMesh,
    rel_tol: float = DEFAULT_REL_TOL,
    max_simplices: int = DEFAULT_MAX_SIMPLICES,
) -> WeightedTessellation:
    """Adaptive sphere integration of an arbitrary nonnegative ``phi``."""
    S0 = mesh.simplices
    bad = degenerate_mask(S0)
    est0 = np.zeros(len(S0))
    err0 = np.zeros(len(S0))
    if np.any(~bad):
        est0[~bad], err0[~bad] = _rules(S0[~bad], phi)

    verts = [S0[j] for j in range(len(S0))]
    est = list(est0)
    err = list(err0)
    origin = list(range(len(S0)))
    alive = [True] * len(S0)
    heap = [(-err[j], j) for j in range(len(S0)) if err[j] > 0]
    heapq.heapify(heap)

    n_alive = len(S0)
    degenerate = int(bad.sum())
    sum_est = fsum(est)
    sum_err = fsum(err)
    converged = True
    while heap and sum_err >= rel_tol * abs(sum_est):
        if n_alive >= max_simplices:
            converged = False
            break
        _, j = heapq.heappop(heap)
        A, B = bisect_longest_edge(verts[j])
        kids = np.stack([A, B])
        kbad = degenerate_mask(kids)
        kq = np.zeros(2)
        ke = np.zeros(2)
        if np.any(~kbad):
            kq[~kbad], ke[~kbad] = _rules(kids[~kbad], phi)
        degenerate += int(kbad.sum())
        alive[j] = False
        sum_est += kq[0] + kq[1] - est[j]
        sum_err += ke[0] + ke[1] - err[j]
        for t in range(2):
            idx = len(verts)
            verts.append(kids[t])
            est.append(float(kq[t]))
            err.append(float(ke[t]))
            origin.append(origin[j])
            alive.append(True)
            if ke[t] > 0:
                heapq.heappush(heap, (-ke[t], idx))
        n_alive += 1
        if len(verts) % 4096 == 0:
            # keep the running sums honest
            sum_est = fsum(e for e, a in zip(est, alive) if a)
            sum_err = fsum(e for e, a in zip(err, alive) if a)

    keep = np.flatnonzero(alive)
    weights = np.array(est)[keep]
    errors = np.array(err)[keep]
    origin_arr = np.array(origin)[keep]
    total = fsum(weights)
    abs_error = fsum(errors)
    if heap and not converged:
        warnings.warn(
            f"cubature stopped at {len(keep)} simplices with estimated relative error "
            f"{abs_error / total if total else float('inf'):.3g} > {rel_tol:g}",
            ToleranceNotMetWarning,
            stacklevel=3,
        )
    if not total > 0:
        raise DegenerateContourError("contour integrates to zero over the sphere")
    return WeightedTessellation(
        np.array(verts)[keep], weights, total, abs_error, converged,
        origin_arr, mesh.groups[origin_arr], degenerate, errors,
    )


def norming_constant(tess: WeightedTessellation) -> float:
    """``k_C = 1 / integral of c^d`` over the sphere."""
    if not tess.total > 0:
        raise DegenerateContourError("norming constant undefined for a zero integral")
    return 1.0 / tess.total
