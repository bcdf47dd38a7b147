"""Command-line interface.

Exit codes: 0 success, 2 user or validation error, 3 degenerate or numeric
failure.
"""
from __future__ import annotations

import argparse
import io
import math
import sys
import time
import warnings

import numpy as np

from .cubature import ToleranceNotMetWarning
from .distribution import density_at, finish_contour, simulate
from .errors import (
    DegenerateContourError,
    DegenerateGeometryError,
    InvalidArgumentError,
    NumericDomainError,
    UnsupportedFormatError,
)
from .mesh import SurfaceMesh, format_float, mesh_export, read_simplices_csv, simplex_volumes
from .sampler import sample_tessellation
from .storage import load_config, make_dist, read_contour, write_contour

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    pass


# csv helpers ---------------------------------------------------------------


def _write_output(path, data: bytes) -> None:
    if path in (None, "-"):
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def _csv_bytes(header, rows: np.ndarray) -> bytes:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(format_float(x) for x in row) + "\n")
    return buf.getvalue().encode("ascii")


def _read_points(path, d: int) -> tuple[list, np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise UsageError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if len(header) != d:
        raise UsageError(f"{path}: expected {d} columns, header has {len(header)}")
    rows = []
    for num, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != d:
            raise UsageError(f"{path}, line {num}: expected {d} columns, got {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise UsageError(f"{path}, line {num}: non-numeric value") from None
    pts = np.array(rows, dtype=float).reshape(-1, d)
    if not np.all(np.isfinite(pts)):
        raise UsageError(f"{path}: points must be finite")
    return header, pts


def _rng(seed: int) -> np.random.Generator:
    if not 0 <= seed < 2**64:
        raise UsageError("seed must be a 64-bit unsigned integer")
    return np.random.default_rng(seed)


# commands --------------------------------------------------------------------


def cmd_build(args) -> int:
    config = load_config(args.config)
    if args.k is not None:
        config.mesh["k"] = args.k
    if args.tol is not None:
        config.mesh["rel_tol"] = args.tol
    if args.max_simplices is not None:
        config.mesh["max_simplices"] = args.max_simplices
    if not 0 < config.rel_tol < 1:
        raise UsageError("--tol must lie in (0, 1)")
    if config.k < 0 or config.max_simplices < 1:
        raise UsageError("--k must be >= 0 and --max-simplices >= 1")
    spec = config.contour_spec()
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ToleranceNotMetWarning)
        fc = finish_contour(spec, config.k, config.rel_tol, config.max_simplices, args.deterministic)
    wall = time.perf_counter() - t0
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    write_contour(args.output, fc, config)
    dg = fc.diagnostics
    print(f"k_C = {fc.k_C:.12g}")
    print(f"integral of c^d = {fc.sphere_tess.total:.12g} (estimated abs error {fc.sphere_tess.abs_error:.3g})")
    print(f"simplices: initial {dg['initial']}, after bump refinement {dg['refined']}, final {dg['final']}")
    print(f"converged: {'yes' if fc.sphere_tess.converged else 'no'}")
    print(f"wall time: {wall:.3f} s")
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.n < 1:
        raise UsageError("-n must be >= 1")
    fc, config = read_contour(args.contour)
    dist = make_dist(fc, config)
    seed = config.seed if args.seed is None else args.seed
    X = simulate(dist, args.n, _rng(seed))
    _write_output(args.output, _csv_bytes([f"x_{i + 1}" for i in range(fc.dim)], X))
    return EXIT_OK


def cmd_density(args) -> int:
    fc, config = read_contour(args.contour)
    dist = make_dist(fc, config)
    header, pts = _read_points(args.points, fc.dim)
    f = density_at(dist, pts)
    if np.any(np.isnan(f)):
        raise NumericFailure("density evaluation produced NaN")
    _write_output(args.output, _csv_bytes(header + ["f"], np.column_stack([pts, f])))
    return EXIT_OK


_EXPR_NAMES = {
    name: getattr(np, name)
    for name in ("exp", "log", "sqrt", "abs", "sum", "sin", "cos", "tan", "arctan2", "dot", "minimum", "maximum", "prod")
}
_EXPR_NAMES.update(pi=math.pi, e=math.e, np=np)


def _density_weights(expr: str, S: np.ndarray) -> np.ndarray:
    try:
        code = compile(expr, "<density>", "eval")
    except SyntaxError as exc:
        raise UsageError(f"cannot parse density expression {expr!r}: {exc.msg}") from None
    centroids = S.mean(axis=1)
    vals = np.empty(len(S))
    for j, x in enumerate(centroids):
        try:
            vals[j] = float(eval(code, {"__builtins__": {}}, {**_EXPR_NAMES, "x": x}))
        except Exception as exc:  # user expression
            raise UsageError(f"density expression failed at centroid {x.tolist()}: {exc}") from None
    if np.any(~np.isfinite(vals)) or np.any(vals < 0):
        raise UsageError("density expression must be finite and nonnegative at every centroid")
    return simplex_volumes(S) * vals


def _read_weights(path, k: int) -> np.ndarray:
    vals = []
    with open(path, "r", encoding="utf-8") as fh:
        for num, ln in enumerate(fh, start=1):
            ln = ln.strip()
            if not ln:
                continue
            try:
                vals.append(float(ln.split(",")[-1]))
            except ValueError:
                if num == 1:
                    continue  # header
                raise UsageError(f"{path}, line {num}: not a number") from None
    w = np.array(vals)
    if w.size != k:
        raise UsageError(f"{k} simplices but {w.size} weights in {path}")
    if np.any(~np.isfinite(w)) or np.any(w < 0):
        raise UsageError("weights must be finite and nonnegative")
    return w


def cmd_sample_mesh(args) -> int:
    if args.n < 1:
        raise UsageError("-n must be >= 1")
    with open(args.mesh, "rb") as fh:
        S = read_simplices_csv(fh.read())
    src = args.weights
    if src == "uniform-area":
        w = simplex_volumes(S)
    elif src == "from-file":
        if not args.weights_file:
            raise UsageError("--weights from-file needs --weights-file")
        w = _read_weights(args.weights_file, len(S))
    elif src.startswith("density:"):
        w = _density_weights(src[len("density:"):], S)
    else:
        raise UsageError(f"unknown weights source {src!r}")
    if not w.sum() > 0:
        raise NumericFailure("total weight is zero")
    X = sample_tessellation(S, w, args.n, _rng(args.seed))
    _write_output(args.output, _csv_bytes([f"x_{i + 1}" for i in range(S.shape[2])], X))
    return EXIT_OK


def cmd_info(args) -> int:
    fc, config = read_contour(args.contour)
    dg = fc.diagnostics
    print(f"dimension: {fc.dim}")
    print("terms:")
    for t in config.terms:
        params = ", ".join(f"{k}={v}" for k, v in t.items() if k != "kind")
        print(f"  {t['kind']}({params})")
    if config.radial:
        params = ", ".join(f"{k}={v}" for k, v in config.radial.items() if k != "kind")
        print(f"radial law: {config.radial['kind']}({params})")
    else:
        print("radial law: none")
    print(f"k_C = {fc.k_C:.12g}")
    print(f"simplices: initial {dg.get('initial')}, after bump refinement {dg.get('refined')}, final {len(fc.tess)}")
    print(f"estimated abs error: {fc.sphere_tess.abs_error:.3g}")
    print(f"converged: {'yes' if fc.sphere_tess.converged else 'no'}")
    return EXIT_OK


def cmd_mesh_export(args) -> int:
    fc, _ = read_contour(args.contour)
    tess = fc.sphere_tess if args.sphere else fc.tess
    try:
        data = mesh_export(SurfaceMesh(tess.simplices, tess.groups), args.format)
    except UnsupportedFormatError as exc:
        raise UsageError(str(exc)) from None
    _write_output(args.output, data)
    return EXIT_OK


# parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="starsphere", description="Generalized spherical distributions")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="tessellate and integrate a contour from a config file")
    p.add_argument("config")
    p.add_argument("-o", "--output", required=True, help="contour file to write")
    p.add_argument("--k", type=int, help="subdivisions per orthant (overrides mesh.k)")
    p.add_argument("--tol", type=float, help="relative cubature tolerance (overrides mesh.rel_tol)")
    p.add_argument("--max-simplices", type=int, help="simplex budget (overrides mesh.max_simplices)")
    p.add_argument("--deterministic", action="store_true", help="fixed evaluation and summation order")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("sample", help="simulate from a finished contour and its radial law")
    p.add_argument("contour")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int, help="defaults to the config seed")
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("density", help="evaluate the density at points from a csv file")
    p.add_argument("contour")
    p.add_argument("points")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("sample-mesh", help="sample from an arbitrary tessellation (mesh csv)")
    p.add_argument("mesh")
    p.add_argument("--weights", default="uniform-area",
                   help="uniform-area, from-file, or density:<expression in x>")
    p.add_argument("--weights-file")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sample_mesh)

    p = sub.add_parser("info", help="summarise a contour file")
    p.add_argument("contour")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("mesh-export", help="export the contour tessellation as csv or obj")
    p.add_argument("contour")
    p.add_argument("--format", choices=("csv", "obj"), default="csv")
    p.add_argument("--sphere", action="store_true", help="export the sphere tessellation instead")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_mesh_export)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InvalidArgumentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericFailure, DegenerateContourError, DegenerateGeometryError, NumericDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
