"""Config files (YAML) and finished-contour files (versioned JSON).

Config schema::

    dim: 2
    terms:                      # any mix of direct and reciprocal terms
      - {kind: constant, coef: 1}
      - {kind: gaussian_bump, coef: 1, mu: [0.7071067811865476, 0.7071067811865476], sigma: 0.1}
      - {kind: cone, coef: 1, mu: [0, 1], theta: 0.5}
      - {kind: lp_norm, coef: 1, p: 1}
      - {kind: generalized_lp_norm, coef: 1, p: 2, A: [[1, 0], [0, 2]]}
      - {kind: elliptical, coef: 1, A: [[4, 0], [0, 1]]}
    radial: {kind: gamma, shape: 2, rate: 1}   # optional for `build`
    g0: null                    # optional override of the density at 0
    mesh: {k: 4, rel_tol: 1.0e-5, max_simplices: 50000}
    seed: 42
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import yaml

from .contour import DIRECT_KINDS, RECIP_KINDS, ContourSpec, ContourTerm
from .cubature import DEFAULT_MAX_SIMPLICES, DEFAULT_REL_TOL, WeightedTessellation
from .distribution import FinishedContour, GenSphereDist
from .errors import InvalidArgumentError
from .radial import KINDS as RADIAL_KINDS
from .radial import RadialLaw

FILE_FORMAT = "starsphere-contour"
FILE_VERSION = 1

_TERM_FIELDS = {
    "constant": (),
    "cone": ("mu", "theta"),
    "gaussian_bump": ("mu", "sigma"),
    "lp_norm": ("p",),
    "generalized_lp_norm": ("p", "A"),
    "elliptical": ("A",),
}


class ConfigError(InvalidArgumentError):
    """A config value failed validation; ``field`` is a dotted path."""

    def __init__(self, field: str, message: str, line: Optional[int] = None):
        self.field = field
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{field}: {message}")


@dataclass
class DistConfig:
    dim: int
    terms: list
    radial: Optional[dict] = None
    g0: Optional[float] = None
    mesh: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def k(self) -> int:
        return int(self.mesh.get("k", 4))

    @property
    def rel_tol(self) -> float:
        return float(self.mesh.get("rel_tol", DEFAULT_REL_TOL))

    @property
    def max_simplices(self) -> int:
        return int(self.mesh.get("max_simplices", DEFAULT_MAX_SIMPLICES))

    def contour_spec(self) -> ContourSpec:
        return ContourSpec.from_terms(self.dim, [_make_term(t) for t in self.terms])

    def radial_law(self) -> Optional[RadialLaw]:
        if self.radial is None:
            return None
        kind = self.radial["kind"]
        return RadialLaw(kind, tuple(self.radial[name] for name in RADIAL_KINDS[kind]))

    def as_dict(self) -> dict:
        return {
            "dim": self.dim,
            "terms": self.terms,
            "radial": self.radial,
            "g0": _float_out(self.g0),
            "mesh": dict(self.mesh),
            "seed": self.seed,
        }


def _make_term(t: dict) -> ContourTerm:
    return ContourTerm(**t)


def _float_out(x):
    if x is None:
        return None
    return "inf" if math.isinf(x) else x


def _line_map(text: str) -> dict:
    """Map dotted config paths to 1-based line numbers."""
    out = {}

    def walk(node, path):
        out[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                walk(v, f"{path}.{k.value}" if path else str(k.value))
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                walk(v, f"{path}[{i}]")

    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return out
    if root is not None:
        walk(root, "")
    return out


def _number(val, path, lines, positive=False, integer=False, allow_inf=False) -> float:
    if isinstance(val, bool):
        raise ConfigError(path, f"expected a number, got {val!r}", lines.get(path))
    if allow_inf and isinstance(val, str) and val.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        x = float(val)
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected a number, got {val!r}", lines.get(path)) from None
    if math.isnan(x) or (math.isinf(x) and not allow_inf):
        raise ConfigError(path, f"expected a finite number, got {val!r}", lines.get(path))
    if positive and not x > 0:
        raise ConfigError(path, f"must be positive, got {val!r}", lines.get(path))
    if integer:
        if x != int(x):
            raise ConfigError(path, f"expected an integer, got {val!r}", lines.get(path))
        return int(x)
    return x


def _vector(val, path, lines, length=None) -> list:
    if not isinstance(val, (list, tuple)):
        raise ConfigError(path, f"expected a list of numbers, got {val!r}", lines.get(path))
    vec = [_number(v, f"{path}[{i}]", lines) for i, v in enumerate(val)]
    if length is not None and len(vec) != length:
        raise ConfigError(path, f"expected {length} entries, got {len(vec)}", lines.get(path))
    return vec


def config_from_dict(raw: Any, lines: Optional[dict] = None) -> DistConfig:
    """Validate a parsed config mapping; raises :class:`ConfigError`."""
    lines = lines or {}
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping", 1)
    known = {"dim", "terms", "radial", "g0", "mesh", "seed"}
    for key in raw:
        if key not in known:
            raise ConfigError(str(key), f"unknown key; expected one of {sorted(known)}", lines.get(str(key)))
    if "dim" not in raw:
        raise ConfigError("dim", "missing", None)
    dim = _number(raw["dim"], "dim", lines, integer=True)
    if dim < 2:
        raise ConfigError("dim", f"must be >= 2, got {dim}", lines.get("dim"))

    terms_raw = raw.get("terms")
    if not isinstance(terms_raw, list) or not terms_raw:
        raise ConfigError("terms", "must be a non-empty list of terms", lines.get("terms"))
    terms = []
    for i, t in enumerate(terms_raw):
        path = f"terms[{i}]"
        if not isinstance(t, dict):
            raise ConfigError(path, "each term must be a mapping", lines.get(path))
        kind = t.get("kind")
        if kind not in DIRECT_KINDS + RECIP_KINDS:
            raise ConfigError(f"{path}.kind", f"unknown kind {kind!r}; expected one of {list(_TERM_FIELDS)}",
                              lines.get(f"{path}.kind", lines.get(path)))
        allowed = {"kind", "coef"} | set(_TERM_FIELDS[kind])
        for key in t:
            if key not in allowed:
                raise ConfigError(f"{path}.{key}", f"not a parameter of {kind} terms", lines.get(f"{path}.{key}"))
        term = {"kind": kind, "coef": _number(t.get("coef", 1.0), f"{path}.coef", lines, positive=True)}
        for name in _TERM_FIELDS[kind]:
            fp = f"{path}.{name}"
            if name not in t:
                raise ConfigError(fp, "missing", lines.get(path))
            if name == "mu":
                term["mu"] = _vector(t["mu"], fp, lines, dim)
            elif name == "A":
                A = t["A"]
                if not isinstance(A, list) or not A:
                    raise ConfigError(fp, "expected a matrix (list of rows)", lines.get(fp))
                term["A"] = [_vector(row, f"{fp}[{r}]", lines, dim) for r, row in enumerate(A)]
            else:
                term[name] = _number(t[name], fp, lines, positive=True)
        try:
            _make_term(term)
        except InvalidArgumentError as exc:
            raise ConfigError(path, str(exc), lines.get(path)) from None
        terms.append(term)
    try:
        ContourSpec.from_terms(dim, [_make_term(t) for t in terms])
    except InvalidArgumentError as exc:
        raise ConfigError("terms", str(exc), lines.get("terms")) from None

    radial = None
    if raw.get("radial") is not None:
        r = raw["radial"]
        if not isinstance(r, dict) or r.get("kind") not in RADIAL_KINDS:
            raise ConfigError("radial.kind", f"expected one of {sorted(RADIAL_KINDS)}",
                              lines.get("radial.kind", lines.get("radial")))
        names = RADIAL_KINDS[r["kind"]]
        for key in r:
            if key != "kind" and key not in names:
                raise ConfigError(f"radial.{key}", f"not a parameter of the {r['kind']} law", lines.get(f"radial.{key}"))
        radial = {"kind": r["kind"]}
        for name in names:
            if name not in r:
                raise ConfigError(f"radial.{name}", "missing", lines.get("radial"))
            radial[name] = _number(r[name], f"radial.{name}", lines, positive=True)

    g0 = None
    if raw.get("g0") is not None:
        g0 = _number(raw["g0"], "g0", lines, allow_inf=True)
        if g0 < 0:
            raise ConfigError("g0", "must be nonnegative", lines.get("g0"))

    mesh_raw = raw.get("mesh") or {}
    if not isinstance(mesh_raw, dict):
        raise ConfigError("mesh", "must be a mapping", lines.get("mesh"))
    mesh = {}
    for key in mesh_raw:
        if key not in ("k", "rel_tol", "max_simplices"):
            raise ConfigError(f"mesh.{key}", "unknown mesh option", lines.get(f"mesh.{key}"))
    if "k" in mesh_raw:
        mesh["k"] = _number(mesh_raw["k"], "mesh.k", lines, integer=True)
        if mesh["k"] < 0:
            raise ConfigError("mesh.k", "must be >= 0", lines.get("mesh.k"))
    if "rel_tol" in mesh_raw:
        mesh["rel_tol"] = _number(mesh_raw["rel_tol"], "mesh.rel_tol", lines, positive=True)
        if mesh["rel_tol"] >= 1:
            raise ConfigError("mesh.rel_tol", "must be < 1", lines.get("mesh.rel_tol"))
    if "max_simplices" in mesh_raw:
        mesh["max_simplices"] = _number(mesh_raw["max_simplices"], "mesh.max_simplices", lines,
                                        positive=True, integer=True)

    seed = 0
    if raw.get("seed") is not None:
        seed = _number(raw["seed"], "seed", lines, integer=True)
        if not 0 <= seed < 2**64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer", lines.get("seed"))
    return DistConfig(dim, terms, radial, g0, mesh, seed)


def load_config(path) -> DistConfig:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text)


def parse_config(text: str) -> DistConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError("<yaml>", f"cannot parse config: {getattr(exc, 'problem', exc)}", line) from None
    return config_from_dict(raw, _line_map(text))


# finished-contour files ----------------------------------------------------


def contour_to_dict(fc: FinishedContour, config: DistConfig) -> dict:
    d = fc.dim
    sphere = fc.sphere_tess.simplices
    flat = sphere.reshape(-1, d)
    verts, first, index = np.unique(flat, axis=0, return_index=True, return_inverse=True)
    contour_verts = fc.tess.simplices.reshape(-1, d)[first]
    # wall time is left out so that rebuilding a config gives a byte-identical file
    diagnostics = {
        k: (v.item() if isinstance(v, np.generic) else v) for k, v in fc.diagnostics.items() if k != "seconds"
    }
    return {
        "format": FILE_FORMAT,
        "version": FILE_VERSION,
        "dim": d,
        "config": config.as_dict(),
        "k_C": fc.k_C,
        "total": fc.sphere_tess.total,
        "abs_error": fc.sphere_tess.abs_error,
        "converged": bool(fc.sphere_tess.converged),
        "degenerate": int(fc.sphere_tess.degenerate),
        "diagnostics": diagnostics,
        "vertices": verts.tolist(),
        "contour_vertices": contour_verts.tolist(),
        "simplices": index.reshape(-1, d).tolist(),
        "weights": fc.sphere_tess.weights.tolist(),
        "errors": None if fc.sphere_tess.errors is None else fc.sphere_tess.errors.tolist(),
        "origin": fc.sphere_tess.origin.tolist(),
        "groups": fc.sphere_tess.groups.tolist(),
    }


def write_contour(path, fc: FinishedContour, config: DistConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(contour_to_dict(fc, config), fh, allow_nan=False)
        fh.write("\n")


def contour_from_dict(data: dict) -> tuple[FinishedContour, DistConfig]:
    if not isinstance(data, dict) or data.get("format") != FILE_FORMAT:
        raise InvalidArgumentError("not a starsphere contour file")
    if data.get("version") != FILE_VERSION:
        raise InvalidArgumentError(f"unsupported contour file version {data.get('version')!r}")
    config = config_from_dict(data["config"])
    spec = config.contour_spec()
    idx = np.asarray(data["simplices"], dtype=np.int64)
    sphere = np.asarray(data["vertices"], dtype=float)[idx]
    contour = np.asarray(data["contour_vertices"], dtype=float)[idx]
    errors = data.get("errors")
    sphere_tess = WeightedTessellation(
        sphere, np.asarray(data["weights"], dtype=float), float(data["total"]), float(data["abs_error"]),
        bool(data["converged"]), np.asarray(data["origin"]), np.asarray(data["groups"]),
        int(data.get("degenerate", 0)), None if errors is None else np.asarray(errors, dtype=float),
    )
    fc = FinishedContour(spec, sphere_tess.with_simplices(contour), sphere_tess, float(data["k_C"]),
                         dict(data.get("diagnostics", {})))
    return fc, config


def read_contour(path) -> tuple[FinishedContour, DistConfig]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"{path}: not valid JSON ({exc})") from None
    try:
        return contour_from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidArgumentError):
            raise
        raise InvalidArgumentError(f"{path}: malformed contour file ({exc})") from None


def make_dist(fc: FinishedContour, config: DistConfig) -> GenSphereDist:
    law = config.radial_law()
    if law is None:
        raise ConfigError("radial", "no radial law in the config")
    return GenSphereDist(fc, law, config.g0)
