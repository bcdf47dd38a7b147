"""Finished contours and generalized spherical distributions."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .contour import ContourSpec, bump_centers, eval_contour, eval_contour_unchecked
from .cubature import (
    DEFAULT_MAX_SIMPLICES,
    DEFAULT_REL_TOL,
    WeightedTessellation,
    integrate_sphere,
    norming_constant,
)
from .errors import InvalidArgumentError
from .mesh import SurfaceMesh, refine_at_point, unit_sphere_mesh
from .radial import RadialLaw, radial_g
from .sampler import AliasTable, sample_gensphere


def _tangent_basis(mu: np.ndarray) -> np.ndarray:
    """Orthonormal basis (rows) of the hyperplane orthogonal to ``mu``."""
    d = mu.shape[0]
    Q, _ = np.linalg.qr(np.column_stack([mu, np.eye(d)]))
    return Q[:, 1:d].T


def ring_points(mu: np.ndarray, radius: float) -> np.ndarray:
    """``2(d-1)`` points at geodesic distance ``radius`` from ``mu``."""
    radius = min(float(radius), np.pi / 2)
    T = _tangent_basis(np.asarray(mu, dtype=float))
    dirs = np.concatenate([T, -T])
    pts = np.cos(radius) * mu + np.sin(radius) * dirs
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def refine_at_bumps(mesh: SurfaceMesh, spec: ContourSpec) -> SurfaceMesh:
    """Insert each bump centre and its ring of width points into ``mesh``."""
    for mu, scale in bump_centers(spec):
        mesh = refine_at_point(mesh, mu)
        for q in ring_points(mu, scale):
            mesh = refine_at_point(mesh, q)
    return mesh


@dataclass(frozen=True, eq=False)
class FinishedContour:
    """A contour with its tessellation, cubature weights and norming constant.

    ``sphere_tess`` holds the final simplices on the unit sphere; ``tess``
    has the same simplices and weights with every vertex ``s`` moved to
    ``c(s) s``. ``diagnostics`` records the simplex counts after each
    pipeline stage plus timing and error information.
    """

    spec: ContourSpec
    tess: WeightedTessellation
    sphere_tess: WeightedTessellation
    k_C: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.tess) != len(self.sphere_tess):
            raise InvalidArgumentError("contour and sphere tessellations differ in size")
        if not self.k_C > 0:
            raise InvalidArgumentError("k_C must be positive")

    @property
    def dim(self) -> int:
        return self.spec.dim

    @cached_property
    def alias(self) -> AliasTable:
        return AliasTable(self.tess.weights)

    def __call__(self, s):
        return eval_contour(self.spec, s)


def map_to_contour(spec: ContourSpec, simplices: np.ndarray) -> np.ndarray:
    """Move each sphere vertex ``s`` of a simplex stack to ``c(s) s``."""
    flat = simplices.reshape(-1, spec.dim)
    flat = flat / np.linalg.norm(flat, axis=1, keepdims=True)
    c = eval_contour_unchecked(spec, flat)
    return (c[:, None] * flat).reshape(simplices.shape)


def finish_contour(
    spec: ContourSpec,
    k: int = 4,
    rel_tol: float = DEFAULT_REL_TOL,
    max_simplices: int = DEFAULT_MAX_SIMPLICES,
    deterministic: bool = True,
) -> FinishedContour:
    """Tessellate, refine and integrate ``spec``.

    Steps: sphere mesh with ``k`` subdivisions per orthant, refinement at
    every bump centre (and a ring at the bump's angular scale), adaptive
    cubature of ``c^d``, then mapping of the final vertices onto the
    contour.
    """
    t0 = time.perf_counter()
    mesh = unit_sphere_mesh(spec.dim, k)
    n_initial = len(mesh)
    mesh = refine_at_bumps(mesh, spec)
    n_refined = len(mesh)
    sphere_tess = integrate_sphere(spec, mesh, rel_tol, max(max_simplices, n_refined), deterministic)
    tess = sphere_tess.with_simplices(map_to_contour(spec, sphere_tess.simplices))
    diagnostics = {
        "initial": n_initial,
        "refined": n_refined,
        "final": len(sphere_tess),
        "dropped_degenerate": mesh.dropped + sphere_tess.degenerate,
        "abs_error": sphere_tess.abs_error,
        "converged": sphere_tess.converged,
        "k": int(k),
        "rel_tol": float(rel_tol),
        "max_simplices": int(max_simplices),
        "seconds": time.perf_counter() - t0,
    }
    return FinishedContour(spec, tess, sphere_tess, norming_constant(sphere_tess), diagnostics)


@dataclass(frozen=True, eq=False)
class GenSphereDist:
    """Density ``f(x) = g(|x| / c(x/|x|))`` with ``g(r) = k_C r^(1-d) h(r)``.

    ``g0`` overrides the value of the density at the origin.
    """

    contour: FinishedContour
    radial: RadialLaw
    g0: Optional[float] = None

    @property
    def dim(self) -> int:
        return self.contour.dim

    @property
    def k_C(self) -> float:
        return self.contour.k_C

    def density(self, x):
        return density_at(self, x)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return simulate(self, n, rng)


def gauge(spec: ContourSpec, x) -> np.ndarray:
    """``v(x) = |x| / c(x/|x|)`` row-wise; 0 at the origin, ``inf`` where c vanishes."""
    X = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.linalg.norm(X, axis=1)
    out = np.zeros(X.shape[0])
    pos = r > 0
    if np.any(pos):
        c = eval_contour_unchecked(spec, X[pos] / r[pos, None])
        with np.errstate(divide="ignore"):
            out[pos] = np.where(c > 0, r[pos] / np.where(c > 0, c, 1.0), np.inf)
    return out


def density_at(dist: GenSphereDist, x):
    """Evaluate the density at one point (shape ``(d,)``) or at each row of ``x``.

    The contour is evaluated from the spec, not from the tessellation, so
    only ``k_C`` carries discretisation error.
    """
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    d = dist.dim
    if X.ndim != 2 or X.shape[1] != d:
        raise InvalidArgumentError(f"expected point(s) in R^{d}, got shape {np.shape(x)}")
    if not np.all(np.isfinite(X)):
        raise InvalidArgumentError("points must be finite")
    v = gauge(dist.contour.spec, X)
    r = np.linalg.norm(X, axis=1)
    out = np.zeros(X.shape[0])
    origin = r == 0
    finite = ~origin & np.isfinite(v)
    if np.any(origin):
        out[origin] = radial_g(dist.radial, dist.k_C, d, 0.0, dist.g0)
    if np.any(finite):
        out[finite] = radial_g(dist.radial, dist.k_C, d, v[finite])
    return float(out[0]) if single else out


def simulate(dist: GenSphereDist, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` draws of ``X = R Z``; ``n == 0`` returns an empty array without touching ``rng``."""
    return sample_gensphere(dist, n, rng)
