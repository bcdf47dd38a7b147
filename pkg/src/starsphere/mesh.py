"""Simplicial meshes of the unit sphere.

A mesh is a list of (d-1)-simplices embedded in R^d, stored as an array of
shape ``(n, d, d)``: ``simplices[j, i]`` is vertex ``i`` of simplex ``j``.
Sphere meshes start from the 2^d orthant simplices with vertices
``+-e_1, ..., +-e_d`` and are subdivided recursively, new vertices being
pushed back onto the sphere.  Vertex order is kept so that
``det(simplex) > 0``, i.e. faces are outward oriented.
"""
from __future__ import annotations

import io
import itertools
from dataclasses import dataclass
from math import factorial
from typing import Iterator, Optional

import numpy as np

from .errors import DegenerateGeometryError, InvalidArgumentError, UnsupportedFormatError

#: relative (d-1)-volume below which a simplex is dropped
DEGENERATE_VOLUME_TOL = 1e-14
#: barycentric coordinates >= -this count as inside
CONTAINMENT_TOL = 1e-12
#: vertices closer than this are the same point
VERTEX_TOL = 1e-10
# |det| / prod |v_i| below this means the simplex spans a hyperplane
# through the origin, so its radial projection has no area
_CONE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SurfaceSimplex:
    """A (d-1)-simplex in R^d given by its d vertices (rows)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise InvalidArgumentError(f"a simplex in R^d needs d vertices of length d, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def volume(self) -> float:
        return float(simplex_volumes(self.vertices[None])[0])


@dataclass(frozen=True, eq=False)
class SurfaceMesh:
    """An ordered collection of (d-1)-simplices in R^d.

    ``groups`` labels each simplex with the orthant it came from (or any
    other integer tag the producer chooses). ``dropped`` counts degenerate
    simplices discarded while building the mesh.
    """

    simplices: np.ndarray
    groups: Optional[np.ndarray] = None
    dropped: int = 0

    def __post_init__(self):
        S = np.array(self.simplices, dtype=float)
        if S.ndim != 3 or S.shape[1] != S.shape[2]:
            raise InvalidArgumentError(f"simplices must have shape (n, d, d), got {S.shape}")
        if S.shape[0] == 0:
            raise InvalidArgumentError("mesh must contain at least one simplex")
        g = np.zeros(S.shape[0], dtype=np.int64) if self.groups is None else np.array(self.groups, dtype=np.int64)
        if g.shape != (S.shape[0],):
            raise InvalidArgumentError("groups must have one label per simplex")
        S.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "simplices", S)
        object.__setattr__(self, "groups", g)

    @property
    def dim(self) -> int:
        return self.simplices.shape[2]

    def __len__(self) -> int:
        return self.simplices.shape[0]

    def __iter__(self) -> Iterator[SurfaceSimplex]:
        for v in self.simplices:
            yield SurfaceSimplex(v)

    def __getitem__(self, j: int) -> SurfaceSimplex:
        return SurfaceSimplex(self.simplices[j])

    def vertices(self) -> np.ndarray:
        """Distinct vertices (bitwise) of the mesh."""
        return np.unique(self.simplices.reshape(-1, self.dim), axis=0)

    def volumes(self) -> np.ndarray:
        return simplex_volumes(self.simplices)


def simplex_volumes(S: np.ndarray) -> np.ndarray:
    """Volumes of an ``(n, m, d)`` stack of (m-1)-simplices via the Gram determinant."""
    S = np.asarray(S, dtype=float)
    m = S.shape[1]
    E = S[:, 1:, :] - S[:, :1, :]
    G = E @ np.swapaxes(E, 1, 2)
    det = np.linalg.det(G) if m > 1 else np.ones(S.shape[0])
    return np.sqrt(np.maximum(det, 0.0)) / factorial(m - 1)


def _longest_edges(S: np.ndarray) -> np.ndarray:
    d = S.shape[-1]
    best = np.zeros(S.shape[0])
    for i, j in itertools.combinations(range(d), 2):
        best = np.maximum(best, np.linalg.norm(S[:, i] - S[:, j], axis=1))
    return best


def degenerate_mask(S: np.ndarray) -> np.ndarray:
    """True for simplices that are flat or whose radial projection has no area."""
    S = np.asarray(S, dtype=float)
    d = S.shape[-1]
    vol = simplex_volumes(S)
    flat = vol < DEGENERATE_VOLUME_TOL * _longest_edges(S) ** (d - 1)
    scale = np.prod(np.linalg.norm(S, axis=2), axis=1)
    cone_flat = np.abs(np.linalg.det(S)) <= _CONE_TOL * scale
    return flat | cone_flat


def _project(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def orthant_simplices(d: int) -> tuple[np.ndarray, np.ndarray]:
    """The 2^d simplices ``(sign_1 e_1, ..., sign_d e_d)``, positively oriented."""
    out = []
    for signs in itertools.product((1.0, -1.0), repeat=d):
        V = np.diag(signs)
        if np.prod(signs) < 0:
            V[[0, 1]] = V[[1, 0]]
        out.append(V)
    return np.array(out), np.arange(2**d, dtype=np.int64)


def _split_midpoint_2d(S: np.ndarray) -> np.ndarray:
    a, b = S[:, 0], S[:, 1]
    m = _project(a + b)
    return np.stack([np.stack([a, m], 1), np.stack([m, b], 1)], 1).reshape(-1, 2, 2)


def _split_midpoint_3d(S: np.ndarray) -> np.ndarray:
    a, b, c = S[:, 0], S[:, 1], S[:, 2]
    ab, bc, ca = _project(a + b), _project(b + c), _project(c + a)
    kids = [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
    return np.stack([np.stack(k, 1) for k in kids], 1).reshape(-1, 3, 3)


def bisect_longest_edge(V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split one simplex across its longest edge, midpoint pushed to the sphere.

    Returns the two children; both keep the parent's orientation.
    """
    d = V.shape[0]
    best, bi, bj = -1.0, 0, 1
    for i, j in itertools.combinations(range(d), 2):
        e = V[i] - V[j]
        L = float(e @ e)
        if L > best * (1 + 1e-12):
            best, bi, bj = L, i, j
    m = V[bi] + V[bj]
    m = m / np.linalg.norm(m)
    A = V.copy()
    A[bi] = m
    B = V.copy()
    B[bj] = m
    return A, B


def _split_longest_all(S: np.ndarray) -> np.ndarray:
    out = np.empty((2 * S.shape[0],) + S.shape[1:])
    for j, V in enumerate(S):
        out[2 * j], out[2 * j + 1] = bisect_longest_edge(V)
    return out


def unit_sphere_mesh(d: int, k: int) -> SurfaceMesh:
    """Recursive tessellation of the unit sphere in R^d.

    Each orthant simplex is subdivided ``k`` times: arcs are halved for
    ``d == 2``, triangles split in four for ``d == 3`` and, for ``d > 3``,
    each level applies ``d - 1`` rounds of longest-edge bisection.  Every
    level multiplies the simplex count by ``2**(d - 1)``.
    """
    if int(d) != d or d < 2:
        raise InvalidArgumentError(f"d must be an integer >= 2, got {d!r}")
    if int(k) != k or k < 0:
        raise InvalidArgumentError(f"k must be a nonnegative integer, got {k!r}")
    d, k = int(d), int(k)
    S, groups = orthant_simplices(d)
    per = 2 ** (d - 1)
    for _ in range(k):
        if d == 2:
            S = _split_midpoint_2d(S)
        elif d == 3:
            S = _split_midpoint_3d(S)
        else:
            for _ in range(d - 1):
                S = _split_longest_all(S)
        groups = np.repeat(groups, per)
    return SurfaceMesh(S, groups)


def barycentric(V: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Coordinates ``lam`` with ``p = sum_i lam_i V[i]`` (linear, not affine)."""
    return np.linalg.solve(np.asarray(V, dtype=float).T, np.asarray(p, dtype=float))


def _containment_mask(S: np.ndarray, p: np.ndarray) -> np.ndarray:
    lam = np.linalg.solve(np.swapaxes(S, 1, 2), np.broadcast_to(p, S.shape[:2])[..., None])[..., 0]
    tot = lam.sum(axis=1)
    ok = tot > 0
    rel = lam / np.where(ok, tot, 1.0)[:, None]
    return ok & np.all(rel >= -CONTAINMENT_TOL, axis=1)


def radial_containment(simplex, p) -> bool:
    """Does the ray from the origin through ``p`` meet the flat simplex?

    Points on a shared facet are reported as inside every adjacent simplex.
    """
    V = simplex.vertices if isinstance(simplex, SurfaceSimplex) else np.asarray(simplex, dtype=float)
    p = np.asarray(p, dtype=float)
    if degenerate_mask(V[None])[0]:
        raise DegenerateGeometryError("cannot test containment in a degenerate simplex")
    return bool(_containment_mask(V[None], p)[0])


def refine_at_point(mesh: SurfaceMesh, p) -> SurfaceMesh:
    """Insert the unit vector ``p`` into every simplex whose cone contains it.

    Each containing simplex is replaced by the d simplices obtained by
    swapping one of its vertices for ``p``; resulting slivers are dropped.
    If ``p`` is already a vertex the mesh is returned unchanged.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape[0] != mesh.dim:
        raise InvalidArgumentError(f"point has dimension {p.shape[0]}, mesh has {mesh.dim}")
    if abs(np.linalg.norm(p) - 1.0) > 1e-10:
        raise InvalidArgumentError("refinement point must be a unit vector")
    S = mesh.simplices
    if np.any(np.linalg.norm(S - p, axis=2) < VERTEX_TOL):
        return mesh
    hit = _containment_mask(S, p)
    if not np.any(hit):
        return mesh
    d = mesh.dim
    pieces, groups = [], []
    dropped = mesh.dropped
    for j in range(S.shape[0]):
        if not hit[j]:
            pieces.append(S[j][None])
            groups.append(mesh.groups[j])
            continue
        kids = np.repeat(S[j][None], d, axis=0)
        kids[np.arange(d), np.arange(d)] = p
        bad = degenerate_mask(kids)
        dropped += int(bad.sum())
        kids = kids[~bad]
        pieces.append(kids)
        groups.extend([mesh.groups[j]] * kids.shape[0])
    return SurfaceMesh(np.concatenate(pieces), np.array(groups), dropped)


def mesh_export(mesh: SurfaceMesh, fmt: str) -> bytes:
    """Serialise a mesh as ``csv`` (any d) or Wavefront ``obj`` (d == 3)."""
    fmt = fmt.lower()
    d = mesh.dim
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(",".join(["simplex_index", "vertex_index"] + [f"x_{i + 1}" for i in range(d)]) + "\n")
        for j, V in enumerate(mesh.simplices):
            for i, v in enumerate(V):
                buf.write(f"{j},{i}," + ",".join(format_float(x) for x in v) + "\n")
        return buf.getvalue().encode("ascii")
    if fmt == "obj":
        if d != 3:
            raise UnsupportedFormatError(f"obj export needs a 3-d mesh, this one is {d}-d")
        flat = mesh.simplices.reshape(-1, 3)
        verts, index = np.unique(flat, axis=0, return_inverse=True)
        index = index.reshape(-1, 3)
        lines = [f"# {len(verts)} vertices, {len(index)} faces"]
        lines += ["v " + " ".join(format_float(x) for x in v) for v in verts]
        lines += ["f " + " ".join(str(i + 1) for i in tri) for tri in index]
        return ("\n".join(lines) + "\n").encode("ascii")
    raise UnsupportedFormatError(f"unknown mesh format {fmt!r}")


def read_simplices_csv(data: bytes | str) -> np.ndarray:
    """Read the csv layout written by :func:`mesh_export`.

    Returns an ``(n, m, d)`` array; simplices may have any number m of
    vertices, so flat triangles in R^3 or curve segments are accepted.
    """
    if isinstance(data, bytes):
        data = data.decode("ascii")
    rows = [r for r in data.splitlines() if r.strip()]
    if not rows:
        raise InvalidArgumentError("empty mesh file")
    header = [h.strip() for h in rows[0].split(",")]
    if header[:2] != ["simplex_index", "vertex_index"] or len(header) < 3:
        raise InvalidArgumentError("mesh csv header must be simplex_index,vertex_index,x_1,...")
    d = len(header) - 2
    try:
        table = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
    except ValueError:
        raise InvalidArgumentError("mesh csv contains a non-numeric or ragged row") from None
    if table.ndim != 2 or table.shape[1] != d + 2 or table.shape[0] == 0:
        raise InvalidArgumentError("mesh csv rows need simplex_index, vertex_index and d coordinates")
    sj = table[:, 0].astype(int)
    vi = table[:, 1].astype(int)
    if sj.min() < 0 or vi.min() < 0:
        raise InvalidArgumentError("mesh csv indices must be nonnegative")
    n, m = sj.max() + 1, vi.max() + 1
    if table.shape[0] != n * m:
        raise InvalidArgumentError(f"mesh csv: expected {n * m} rows for {n} simplices of {m} vertices")
    S = np.full((n, m, d), np.nan)
    S[sj, vi] = table[:, 2:]
    if np.any(np.isnan(S)):
        raise InvalidArgumentError("mesh csv: missing vertex rows")
    return S


def format_float(x: float) -> str:
    """17 significant digits, '.' decimal point, ``inf`` for infinities."""
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"
