import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from starsphere.cli import main
from starsphere.storage import load_config, make_dist, parse_config, read_contour
from starsphere.distribution import density_at
from starsphere.storage import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(path, text):
    path.write_text(text)
    return str(path)


def read_csv(path):
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


@pytest.fixture(scope="module")
def circle_contour(tmp_path_factory):
    out = tmp_path_factory.mktemp("circle") / "circle.json"
    assert main(["build", str(CONFIGS / "circle.yaml"), "-o", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def fig1_contour(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig1") / "fig1.json"
    assert main(["build", str(CONFIGS / "figure1.yaml"), "-o", str(out), "--deterministic"]) == 0
    return out


def test_build_reports(circle_contour, capsys):
    assert main(["info", str(circle_contour)]) == 0
    out = capsys.readouterr().out
    assert "k_C = 0.159154" in out
    assert "converged: yes" in out
    assert "dimension: 2" in out


def test_build_output(tmp_path, capsys):
    out = tmp_path / "c.json"
    assert main(["build", str(CONFIGS / "figure1.yaml"), "-o", str(out), "--k", "2", "--tol", "1e-4"]) == 0
    text = capsys.readouterr().out
    assert "simplices: initial 16," in text
    assert "k_C = " in text and "wall time" in text


def test_circle_k_C_value(circle_contour):
    fc, _ = read_contour(circle_contour)
    assert fc.k_C == pytest.approx(1 / (2 * math.pi), abs=1e-6)


def test_negative_coef_names_field(tmp_path, capsys):
    cfg = yaml.safe_load((CONFIGS / "figure1.yaml").read_text())
    cfg["terms"][1]["coef"] = -1
    path = write(tmp_path / "bad.yaml", yaml.safe_dump(cfg))
    assert main(["build", path, "-o", str(tmp_path / "x.json")]) == 2
    err = capsys.readouterr().err
    assert "terms[1].coef" in err
    assert not (tmp_path / "x.json").exists()


def test_config_error_line_numbers():
    text = "dim: 2\nterms:\n  - kind: constant\n    coef: -3\n"
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.field == "terms[0].coef"
    assert exc.value.line == 4


@pytest.mark.parametrize(
    "text,field",
    [
        ("dim: 1\nterms: [{kind: constant}]\n", "dim"),
        ("dim: 2\nterms: []\n", "terms"),
        ("dim: 2\nterms: [{kind: wedge}]\n", "terms[0].kind"),
        ("dim: 2\nterms: [{kind: cone, mu: [1, 0, 0], theta: 0.5}]\n", "terms[0].mu"),
        ("dim: 2\nterms: [{kind: constant, p: 1}]\n", "terms[0].p"),
        ("dim: 2\nterms: [{kind: constant}]\nradial: {kind: gamma, shape: 0, rate: 1}\n", "radial.shape"),
        ("dim: 2\nterms: [{kind: constant}]\ncolour: red\n", "colour"),
    ],
)
def test_config_validation(text, field):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.field == field


def test_malformed_yaml(tmp_path, capsys):
    path = write(tmp_path / "bad.yaml", "dim: 2\nterms: [\n")
    assert main(["build", path, "-o", str(tmp_path / "x.json")]) == 2
    assert "line" in capsys.readouterr().err


def test_missing_file_is_usage_error(tmp_path):
    assert main(["info", str(tmp_path / "nope.json")]) == 2


def test_sample_n_zero(circle_contour):
    assert main(["sample", str(circle_contour), "-n", "0"]) == 2


def test_sample_output_and_determinism(fig1_contour, tmp_path):
    a, b, c = (tmp_path / f"{x}.csv" for x in "abc")
    assert main(["sample", str(fig1_contour), "-n", "1000", "--seed", "5", "-o", str(a)]) == 0
    assert main(["sample", str(fig1_contour), "-n", "1000", "--seed", "5", "-o", str(b)]) == 0
    assert main(["sample", str(fig1_contour), "-n", "1000", "--seed", "6", "-o", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()
    assert a.read_text().splitlines()[0] == "x_1,x_2"
    assert read_csv(a).shape == (1000, 2)


def test_sample_default_seed_from_config(fig1_contour, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sample", str(fig1_contour), "-n", "50", "-o", str(a)]) == 0
    assert main(["sample", str(fig1_contour), "-n", "50", "--seed", "42", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sample_csv_round_trips_exactly(fig1_contour, tmp_path):
    from starsphere.distribution import simulate

    out = tmp_path / "s.csv"
    assert main(["sample", str(fig1_contour), "-n", "200", "--seed", "9", "-o", str(out)]) == 0
    fc, cfg = read_contour(fig1_contour)
    X = simulate(make_dist(fc, cfg), 200, np.random.default_rng(9))
    assert np.array_equal(read_csv(out), X)


def test_build_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["build", str(CONFIGS / "figure1.yaml"), "-o", str(p), "--deterministic", "--k", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_density_command(circle_contour, tmp_path):
    pts = write(tmp_path / "p.csv", "x,y\n1,0\n0,0\n0,-2.5\n")
    out = tmp_path / "f.csv"
    assert main(["density", str(circle_contour), pts, "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x,y,f"
    f = read_csv(out)[:, 2]
    assert f[0] == pytest.approx(math.exp(-1) / (2 * math.pi), rel=1e-6)
    assert f[1] == pytest.approx(1 / (2 * math.pi), rel=1e-6)
    assert f[2] == pytest.approx(math.exp(-2.5) / (2 * math.pi), rel=1e-6)


def test_density_wrong_columns(circle_contour, tmp_path):
    pts = write(tmp_path / "p.csv", "x,y,z\n1,0,0\n")
    assert main(["density", str(circle_contour), pts]) == 2
    pts = write(tmp_path / "q.csv", "x,y\n1,0,0\n")
    assert main(["density", str(circle_contour), pts]) == 2
    pts = write(tmp_path / "r.csv", "x,y\n1,nan\n")
    assert main(["density", str(circle_contour), pts]) == 2


def test_round_trip_density_bitwise(fig1_contour, tmp_path):
    from starsphere import finish_contour

    cfg = load_config(CONFIGS / "figure1.yaml")
    direct = make_dist(finish_contour(cfg.contour_spec(), cfg.k, cfg.rel_tol, cfg.max_simplices), cfg)
    fc, cfg2 = read_contour(fig1_contour)
    loaded = make_dist(fc, cfg2)
    X = np.random.default_rng(12).standard_normal((100, 2)) * 2
    assert loaded.k_C == direct.k_C
    assert np.array_equal(density_at(loaded, X), density_at(direct, X))
    assert np.array_equal(fc.tess.weights, direct.contour.tess.weights)
    assert np.array_equal(fc.tess.simplices, direct.contour.tess.simplices)


def test_density_via_cli_matches_library(fig1_contour, tmp_path):
    X = np.random.default_rng(13).standard_normal((100, 2))
    pts = tmp_path / "p.csv"
    np.savetxt(pts, X, delimiter=",", header="x_1,x_2", comments="", fmt="%.17g")
    out = tmp_path / "f.csv"
    assert main(["density", str(fig1_contour), str(pts), "-o", str(out)]) == 0
    fc, cfg = read_contour(fig1_contour)
    assert np.array_equal(read_csv(out)[:, 2], density_at(make_dist(fc, cfg), X))


def test_missing_radial(tmp_path):
    cfg = write(tmp_path / "c.yaml", "dim: 2\nterms: [{kind: constant}]\n")
    contour = tmp_path / "c.json"
    assert main(["build", cfg, "-o", str(contour)]) == 0
    assert main(["sample", str(contour), "-n", "10"]) == 2
    pts = write(tmp_path / "p.csv", "x,y\n1,0\n")
    assert main(["density", str(contour), pts]) == 2


def test_mesh_export_obj_2d_rejected(circle_contour):
    assert main(["mesh-export", str(circle_contour), "--format", "obj"]) == 2


def test_mesh_export_csv(circle_contour, tmp_path):
    out = tmp_path / "m.csv"
    assert main(["mesh-export", str(circle_contour), "--format", "csv", "-o", str(out)]) == 0
    fc, _ = read_contour(circle_contour)
    rows = out.read_text().splitlines()
    assert rows[0] == "simplex_index,vertex_index,x_1,x_2"
    assert len(rows) - 1 == 2 * len(fc.tess)


def test_mesh_export_obj_3d(tmp_path):
    contour = tmp_path / "s.json"
    assert main(["build", str(CONFIGS / "star3d.yaml"), "-o", str(contour)]) == 0
    out = tmp_path / "s.obj"
    assert main(["mesh-export", str(contour), "--format", "obj", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    fc, _ = read_contour(contour)
    assert sum(ln.startswith("f ") for ln in lines) == len(fc.tess)


def triangle_mesh(tmp_path):
    # two unit right triangles in the plane, one twice as large in area
    rows = ["simplex_index,vertex_index,x_1,x_2",
            "0,0,0,0", "0,1,1,0", "0,2,0,1",
            "1,0,10,0", "1,1,12,0", "1,2,10,1"]
    return write(tmp_path / "mesh.csv", "\n".join(rows) + "\n")


def test_sample_mesh_uniform_area(tmp_path):
    mesh = triangle_mesh(tmp_path)
    out = tmp_path / "s.csv"
    assert main(["sample-mesh", mesh, "-n", "30000", "--seed", "1", "-o", str(out)]) == 0
    X = read_csv(out)
    frac_big = np.mean(X[:, 0] > 5)
    assert abs(frac_big - 2 / 3) < 4 * math.sqrt(2 / 9 / 30000)


def test_sample_mesh_from_file(tmp_path):
    mesh = triangle_mesh(tmp_path)
    w = write(tmp_path / "w.csv", "w\n3\n1\n")
    out = tmp_path / "s.csv"
    assert main(["sample-mesh", mesh, "--weights", "from-file", "--weights-file", w, "-n", "40000",
                 "--seed", "2", "-o", str(out)]) == 0
    X = read_csv(out)
    assert abs(np.mean(X[:, 0] < 5) - 0.75) < 4 * math.sqrt(0.75 * 0.25 / 40000)


def test_sample_mesh_zero_weights(tmp_path):
    mesh = triangle_mesh(tmp_path)
    w = write(tmp_path / "w.csv", "0\n0\n")
    assert main(["sample-mesh", mesh, "--weights", "from-file", "--weights-file", w, "-n", "10"]) == 3


def test_sample_mesh_density_weights(tmp_path):
    # fine grid of triangles on [0,1]^2 weighted by a Gaussian centred at (0.3, 0.6)
    m = 40
    rows = ["simplex_index,vertex_index,x_1,x_2"]
    idx = 0
    h = 1 / m
    for i in range(m):
        for j in range(m):
            x, y = i * h, j * h
            for tri in (((x, y), (x + h, y), (x, y + h)), ((x + h, y + h), (x, y + h), (x + h, y))):
                rows += [f"{idx},{v},{p[0]!r},{p[1]!r}" for v, p in enumerate(tri)]
                idx += 1
    mesh = write(tmp_path / "grid.csv", "\n".join(rows) + "\n")
    out = tmp_path / "s.csv"
    expr = "density:exp(-50*sum((x-np.array([0.3,0.6]))**2))"
    assert main(["sample-mesh", mesh, "--weights", expr, "-n", "20000", "--seed", "3", "-o", str(out)]) == 0
    assert np.allclose(read_csv(out).mean(axis=0), [0.3, 0.6], atol=0.02)


def test_sample_mesh_bad_expression(tmp_path):
    mesh = triangle_mesh(tmp_path)
    assert main(["sample-mesh", mesh, "--weights", "density:import os", "-n", "5"]) == 2
    assert main(["sample-mesh", mesh, "--weights", "density:__import__('os')", "-n", "5"]) == 2
    assert main(["sample-mesh", mesh, "--weights", "density:-1", "-n", "5"]) == 2
    assert main(["sample-mesh", mesh, "--weights", "bogus", "-n", "5"]) == 2


def test_console_script_entry_point(circle_contour):
    res = subprocess.run([sys.executable, "-m", "starsphere.cli", "info", str(circle_contour)],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "k_C" in res.stdout
    res = subprocess.run([sys.executable, "-m", "starsphere.cli", "sample", str(circle_contour), "-n", "0"],
                         capture_output=True, text=True)
    assert res.returncode == 2
