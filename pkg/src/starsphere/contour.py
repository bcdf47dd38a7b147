"""Contour functions on the unit sphere.

A contour function ``c(s)`` is built from two groups of terms::

    c(s) = sum_j coef_j * r_j(s) + 1 / sum_j coef*_j * r*_j(s)

The direct terms ``r_j`` are ``constant``, ``cone`` and ``gaussian_bump``;
the reciprocal terms ``r*_j`` are ``lp_norm``, ``generalized_lp_norm`` and
``elliptical``. Every evaluator here is vectorised over an ``(n, d)`` array
of directions.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError, NumericDomainError

DIRECT_KINDS = ("constant", "cone", "gaussian_bump")
RECIP_KINDS = ("lp_norm", "generalized_lp_norm", "elliptical")

# |s| may drift this far from 1 before we stop renormalising and reject it.
_UNIT_REJECT_TOL = 1e-8
_MU_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ContourTerm:
    """One term of a contour function.

    Only the fields relevant to ``kind`` are used: ``mu`` for cones and
    Gaussian bumps, ``theta`` for cones, ``sigma`` for bumps, ``p`` for the
    two lp kinds and ``A`` for ``generalized_lp_norm`` (m x d) and
    ``elliptical`` (d x d, symmetric positive definite).
    """

    kind: str
    coef: float = 1.0
    mu: Optional[np.ndarray] = None
    theta: Optional[float] = None
    sigma: Optional[float] = None
    p: Optional[float] = None
    A: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in DIRECT_KINDS + RECIP_KINDS:
            raise InvalidArgumentError(f"unknown term kind {self.kind!r}")
        coef = float(self.coef)
        if not np.isfinite(coef) or coef <= 0:
            raise InvalidArgumentError(f"coef must be positive, got {self.coef!r}")
        object.__setattr__(self, "coef", coef)

        if self.kind in ("cone", "gaussian_bump"):
            if self.mu is None:
                raise InvalidArgumentError(f"{self.kind} term needs mu")
            mu = np.array(self.mu, dtype=float).reshape(-1)
            if abs(np.linalg.norm(mu) - 1.0) > _MU_TOL:
                raise InvalidArgumentError(f"mu must be a unit vector, |mu| = {np.linalg.norm(mu)!r}")
            mu.setflags(write=False)
            object.__setattr__(self, "mu", mu)
        if self.kind == "cone":
            if self.theta is None or not (0 < float(self.theta) <= np.pi / 2):
                raise InvalidArgumentError(f"cone theta must lie in (0, pi/2], got {self.theta!r}")
            object.__setattr__(self, "theta", float(self.theta))
        if self.kind == "gaussian_bump":
            if self.sigma is None or not (float(self.sigma) > 0):
                raise InvalidArgumentError(f"gaussian_bump sigma must be positive, got {self.sigma!r}")
            object.__setattr__(self, "sigma", float(self.sigma))
        if self.kind in ("lp_norm", "generalized_lp_norm"):
            if self.p is None or not (float(self.p) > 0) or not np.isfinite(float(self.p)):
                raise InvalidArgumentError(f"{self.kind} p must be positive, got {self.p!r}")
            object.__setattr__(self, "p", float(self.p))
        if self.kind in ("generalized_lp_norm", "elliptical"):
            if self.A is None:
                raise InvalidArgumentError(f"{self.kind} term needs a matrix A")
            A = np.array(self.A, dtype=float)
            if A.ndim != 2:
                raise InvalidArgumentError("A must be a 2-d matrix")
            if self.kind == "elliptical":
                if A.shape[0] != A.shape[1]:
                    raise InvalidArgumentError("elliptical A must be square")
                if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
                    raise InvalidArgumentError("elliptical A must be symmetric")
                if np.linalg.eigvalsh(A).min() <= 0:
                    raise InvalidArgumentError("elliptical A must be positive definite")
            A.setflags(write=False)
            object.__setattr__(self, "A", A)

    @property
    def dim(self) -> Optional[int]:
        """Ambient dimension implied by the term, or None for ``constant``."""
        if self.mu is not None:
            return self.mu.shape[0]
        if self.A is not None:
            return self.A.shape[1]
        return None

    @property
    def is_direct(self) -> bool:
        return self.kind in DIRECT_KINDS


@dataclass(frozen=True, eq=False)
class ContourSpec:
    """A contour function in dimension ``dim`` made of direct and reciprocal terms."""

    dim: int
    direct_terms: tuple = ()
    recip_terms: tuple = ()

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise InvalidArgumentError(f"dim must be an integer >= 2, got {self.dim!r}")
        object.__setattr__(self, "dim", int(self.dim))
        direct = tuple(self.direct_terms)
        recip = tuple(self.recip_terms)
        if not direct and not recip:
            raise InvalidArgumentError("contour needs at least one term")
        for t in direct:
            if not t.is_direct:
                raise InvalidArgumentError(f"{t.kind} is not a direct term")
        for t in recip:
            if t.is_direct:
                raise InvalidArgumentError(f"{t.kind} is not a reciprocal term")
        for t in direct + recip:
            if t.dim is not None and t.dim != self.dim:
                raise InvalidArgumentError(
                    f"{t.kind} term has dimension {t.dim}, contour has {self.dim}"
                )
        object.__setattr__(self, "direct_terms", direct)
        object.__setattr__(self, "recip_terms", recip)

    @classmethod
    def from_terms(cls, dim: int, terms: Sequence[ContourTerm]) -> "ContourSpec":
        """Split a mixed list of terms into the direct and reciprocal groups."""
        terms = list(terms)
        return cls(
            dim,
            tuple(t for t in terms if t.is_direct),
            tuple(t for t in terms if not t.is_direct),
        )

    @property
    def terms(self) -> tuple:
        return self.direct_terms + self.recip_terms

    def __call__(self, s):
        return eval_contour(self, s)


def _term_values(term: ContourTerm, S: np.ndarray) -> np.ndarray:
    """Evaluate ``term`` at the rows of ``S`` (assumed unit length)."""
    kind = term.kind
    if kind == "constant":
        return np.ones(S.shape[0])
    if kind == "cone":
        dots = np.clip(S @ term.mu, -1.0, 1.0)
        return np.maximum(0.0, 1.0 - np.arccos(dots) / term.theta)
    if kind == "gaussian_bump":
        dots = S @ term.mu
        out = np.zeros(S.shape[0])
        front = dots > 0
        if np.any(front):
            # gnomonic image on the tangent plane at mu
            proj = S[front] / dots[front, None] - term.mu
            t2 = np.einsum("ij,ij->i", proj, proj)
            out[front] = np.exp(-t2 / (2.0 * term.sigma**2))
        return out
    if kind == "lp_norm":
        return _lp(S, term.p)
    if kind == "generalized_lp_norm":
        return _lp(S @ term.A.T, term.p)
    if kind == "elliptical":
        q = np.einsum("ij,jk,ik->i", S, term.A, S)
        return np.sqrt(q)
    raise InvalidArgumentError(f"unknown term kind {kind!r}")


def _lp(Y: np.ndarray, p: float) -> np.ndarray:
    if p == 2.0:
        return np.sqrt(np.einsum("ij,ij->i", Y, Y))
    if p == 1.0:
        return np.abs(Y).sum(axis=1)
    # scale by the max entry so large p does not under/overflow
    m = np.abs(Y).max(axis=1)
    safe = np.where(m > 0, m, 1.0)
    return m * ((np.abs(Y) / safe[:, None]) ** p).sum(axis=1) ** (1.0 / p)


def _as_unit_rows(s, dim: int) -> tuple[np.ndarray, bool]:
    S = np.asarray(s, dtype=float)
    single = S.ndim == 1
    S = np.atleast_2d(S)
    if S.shape[1] != dim:
        raise InvalidArgumentError(f"expected direction(s) of dimension {dim}, got shape {np.shape(s)}")
    norms = np.linalg.norm(S, axis=1)
    if not np.all(np.isfinite(norms)):
        raise InvalidArgumentError("direction contains non-finite values")
    dev = np.abs(norms - 1.0)
    if np.any(dev > _UNIT_REJECT_TOL):
        raise InvalidArgumentError(f"direction is not unit length (| |s| - 1 | = {dev.max():.3g})")
    if np.any(dev > 1e-12):
        S = S / norms[:, None]
    return S, single


def eval_term(term: ContourTerm, s) -> np.ndarray | float:
    """Evaluate a single term at one direction or at the rows of an array."""
    S = np.asarray(s, dtype=float)
    single = S.ndim == 1
    vals = _term_values(term, np.atleast_2d(S))
    return float(vals[0]) if single else vals


def eval_contour_unchecked(spec: ContourSpec, S: np.ndarray) -> np.ndarray:
    """Contour values at unit rows of ``S`` without normalisation checks.

    Directions where the reciprocal sum vanishes and no direct term exists
    raise :class:`NumericDomainError`; so does any NaN.
    """
    n = S.shape[0]
    total = np.zeros(n)
    for t in spec.direct_terms:
        total += t.coef * _term_values(t, S)
    if spec.recip_terms:
        denom = np.zeros(n)
        for t in spec.recip_terms:
            denom += t.coef * _term_values(t, S)
        zero = denom == 0
        if np.any(zero) and not spec.direct_terms:
            raise NumericDomainError("reciprocal terms vanish: contour unbounded in some direction")
        with np.errstate(divide="ignore"):
            recip = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, denom))
        total += recip
    if np.any(np.isnan(total)):
        raise NumericDomainError("contour evaluation produced NaN")
    if not np.all(np.isfinite(total)):
        raise NumericDomainError("contour evaluation overflowed")
    return total


def eval_contour(spec: ContourSpec, s) -> np.ndarray | float:
    """Evaluate ``c(s)`` for a unit vector or for each row of an ``(n, d)`` array.

    Inputs within 1e-8 of unit length are renormalised; anything further
    off raises :class:`InvalidArgumentError`.
    """
    S, single = _as_unit_rows(s, spec.dim)
    vals = eval_contour_unchecked(spec, S)
    return float(vals[0]) if single else vals


def bump_centers(spec: ContourSpec) -> list[tuple[np.ndarray, float]]:
    """Return ``(mu, angular_scale)`` for each cone and Gaussian bump, in order."""
    out = []
    for t in spec.direct_terms:
        if t.kind == "cone":
            out.append((t.mu, t.theta))
        elif t.kind == "gaussian_bump":
            out.append((t.mu, t.sigma))
    return out


def scaled(spec: ContourSpec, a: float) -> ContourSpec:
    """Return the spec of ``a * c``."""
    if not a > 0:
        raise InvalidArgumentError("scale factor must be positive")
    return ContourSpec(
        spec.dim,
        tuple(replace(t, coef=t.coef * a) for t in spec.direct_terms),
        tuple(replace(t, coef=t.coef / a) for t in spec.recip_terms),
    )
