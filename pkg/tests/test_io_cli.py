import json
import shutil
import subprocess

import numpy as np
import pytest

from dhg import io
from dhg import spectral as sp
from dhg.cli import main
from dhg.errors import ConfigError
from dhg.holo import induced_structure
from dhg.instances import random_immersion
from dhg.mesh import RegularTorus, fundamental_domain
from dhg.quatlin import from_affine, hpoint_distance


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def diagnostic(err):
    return json.loads(err.strip().splitlines()[-1])


def load(path):
    return json.loads(path.read_text())


# ---------------------------------------------------------------------------
# io

def test_json_rounding_and_complex(tmp_path):
    p = io.write_json(tmp_path / "a.json", {"z": 1 / 3 + 2j, "b": np.bool_(True),
                                            "arr": np.arange(3), "nan": float("nan")})
    data = load(p)
    assert data["z"] == [0.333333333333, 2.0]
    assert data["b"] is True and data["arr"] == [0, 1, 2] and data["nan"] == "nan"


def test_read_json_errors(tmp_path):
    with pytest.raises(ConfigError):
        io.read_json(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError):
        io.read_json(tmp_path / "bad.json")


def test_obj_round_trip(tmp_path, rng):
    lines = [rng.normal(size=(5, 3)), rng.normal(size=(5, 3))]
    io.write_obj(tmp_path / "f.obj", lines)
    text = (tmp_path / "f.obj").read_text()
    assert text.count("o step_") == 2
    back = io.read_obj_polylines(tmp_path / "f.obj")
    for a, b in zip(lines, back):
        np.testing.assert_allclose(b[:-1], a, rtol=1e-11)
        np.testing.assert_allclose(b[-1], a[0], rtol=1e-11)


@pytest.mark.parametrize("obj", [
    [0, 1, 2],
    [[0, 0], [1, 0], [2, 0]],
    {"affine": [[0, 0, 0, 0], [1, 0, 0, 0], [2, 0, 0, 0]]},
    {"points": [[[0, 0, 0, 0], [1, 0, 0, 0]], [[1, 0, 0, 0], [1, 0, 0, 0]],
                [[2, 0, 0, 0], [1, 0, 0, 0]]]},
])
def test_parse_points_formats(obj):
    expected = from_affine(np.array([[0.0, 0, 0, 0], [1, 0, 0, 0], [2, 0, 0, 0]]))
    assert np.max(hpoint_distance(io.parse_points(obj), expected)) < 1e-14


@pytest.mark.parametrize("obj", [{"other": []}, [["a", "b"]], [[[0, 0, 0, 0], [0, 0, 0, 0]]],
                                 [[1, 2, 3]]])
def test_parse_points_rejects(obj):
    with pytest.raises(ConfigError):
        io.parse_points(obj)


def test_points_json_round_trip(rng):
    pts = from_affine(rng.normal(size=(4, 4)))
    back = io.parse_points(io.jsonable(io.points_to_json(pts)))
    assert np.max(hpoint_distance(back, pts)) < 1e-10


# ---------------------------------------------------------------------------
# mesh

def test_mesh_four_point(capsys, tmp_path):
    code, _, _ = run(capsys, "mesh", "--gamma", 2, 0, "--eta", 0, 2, "--out-dir", tmp_path)
    assert code == 0
    rep = load(tmp_path / "mesh.json")
    assert (rep["n_vertices"], rep["n_black"], rep["n_white"]) == (4, 4, 4)
    assert rep["third_derived_role"] == "M"
    assert (tmp_path / "mesh.png").stat().st_size > 0
    assert (tmp_path / "index_table.csv").read_text().startswith("kind,index,x,y")


def test_mesh_thin(capsys, tmp_path):
    code, _, _ = run(capsys, "mesh", "--thin", 5, "--out-dir", tmp_path, "--no-plot")
    assert code == 0
    assert load(tmp_path / "mesh.json")["n_vertices"] == 5
    assert not (tmp_path / "mesh.png").exists()


@pytest.mark.parametrize("argv", [
    ["mesh", "--gamma", 1, 0, "--eta", 0, 1],
    ["mesh", "--thin", 2],
    ["mesh", "--thin", 4, "--gamma", 4, 0],
    ["mesh"],
    ["mesh", "--gamma", "x", 0],
    ["nonsense"],
])
def test_configuration_errors_exit_two(capsys, tmp_path, argv):
    with pytest.raises(SystemExit) as info:
        code = run(capsys, *argv, "--out-dir", tmp_path)[0]
        raise SystemExit(code)
    assert info.value.code == 2
    err = capsys.readouterr().err
    if err:
        assert "error" in diagnostic(err)


def test_config_error_diagnostic_is_json(capsys, tmp_path):
    code, _, err = run(capsys, "mesh", "--gamma", 1, 0, "--eta", 0, 1, "--out-dir", tmp_path)
    assert code == 2
    diag = diagnostic(err)
    assert diag["error"] == "NonRegularQuotient"
    assert diag["exit_code"] == 2


# ---------------------------------------------------------------------------
# spectrum

def test_spectrum_nine_point(capsys, tmp_path):
    code, out, _ = run(capsys, "spectrum", "--gamma", 3, 0, "--eta", 0, 3, "--out-dir", tmp_path)
    assert code == 0
    rep = load(tmp_path / "spectrum.json")
    assert rep["generic"] is True
    assert rep["n_ends_all_directions"] == 18
    assert rep["splits"] is False
    header = (tmp_path / "samples.csv").read_text().splitlines()[0]
    assert header == "mu_re,mu_im,lambda_re,lambda_im,residual"
    assert (tmp_path / "spectrum.png").exists()


def test_spectrum_complex_splits(capsys, tmp_path):
    code, _, _ = run(capsys, "spectrum", "--gamma", 3, 0, "--eta", 0, 3, "--complex",
                     "--no-plot", "--out-dir", tmp_path)
    assert code == 0
    rep = load(tmp_path / "spectrum.json")
    assert rep["splits"] is True and len(rep["factors"]) == 2


def test_spectrum_double_root_line(capsys, tmp_path):
    path = tmp_path / "x.json"
    path.write_text(json.dumps({"affine": [0, 1, 2, 3]}))
    code, _, _ = run(capsys, "spectrum", "--gamma", 2, 0, "--eta", 0, 2, "--immersion", path,
                     "--no-plot", "--out-dir", tmp_path)
    assert code == 0
    line = load(tmp_path / "spectrum.json")["double_root_line"]
    assert line["slope"] == [4.0, 0.0]
    assert line["intercept"] == [-3.0, 0.0]
    assert line["residual"] < 1e-8


def test_spectrum_rejects_wrong_size_immersion(capsys, tmp_path):
    path = tmp_path / "x.json"
    path.write_text(json.dumps([0, 1, 2]))
    code, _, err = run(capsys, "spectrum", "--gamma", 2, 0, "--eta", 0, 2, "--immersion", path,
                       "--out-dir", tmp_path)
    assert code == 2
    assert diagnostic(err)["details"]["expected"] == 4


def test_spectrum_degenerate_immersion_exits_three(capsys, tmp_path):
    path = tmp_path / "x.json"
    path.write_text(json.dumps([0, 0, 2, 3]))
    code, _, err = run(capsys, "spectrum", "--gamma", 2, 0, "--eta", 0, 2, "--immersion", path,
                       "--out-dir", tmp_path)
    assert code == 3
    assert diagnostic(err)["error"] == "BlackTriangleDegenerate"


# ---------------------------------------------------------------------------
# darboux

def test_darboux_generic(capsys, tmp_path):
    code, _, _ = run(capsys, "darboux", "--gamma", 3, 0, "--eta", 0, 3, "--out-dir", tmp_path)
    assert code == 0
    rep = load(tmp_path / "darboux_report.json")
    assert rep["max_multiratio_dev"] < 1e-8
    assert rep["warnings"] == []
    assert len(load(tmp_path / "transform.json")["points"]) == 9


def test_darboux_linear_system_warning(capsys, tmp_path):
    code, _, err = run(capsys, "darboux", "--gamma", 3, 0, "--eta", 0, 3, "--mu", 1,
                       "--lambda", 1, "--no-plot", "--out-dir", tmp_path)
    assert code == 0
    assert "constant prolongation" in err
    assert load(tmp_path / "darboux_report.json")["warnings"]


def test_darboux_off_spectrum_exits_three(capsys, tmp_path):
    code, _, err = run(capsys, "darboux", "--gamma", 3, 0, "--eta", 0, 3, "--mu", "0.9",
                       "--lambda", "123+4j", "--out-dir", tmp_path)
    assert code == 3
    assert diagnostic(err)["error"] == "EmptyKernel"


def test_darboux_lambda_without_mu(capsys, tmp_path):
    code, _, _ = run(capsys, "darboux", "--gamma", 3, 0, "--eta", 0, 3, "--lambda", "1",
                     "--out-dir", tmp_path)
    assert code == 2


def _first_multiplier(capsys, tmp_path):
    run(capsys, "darboux", "--gamma", 3, 0, "--eta", 0, 3, "--no-plot", "--out-dir", tmp_path)
    rep = load(tmp_path / "darboux_report.json")
    return [complex(*rep["mu"]), complex(*rep["lambda"])]


def test_darboux_bianchi(capsys, tmp_path):
    mu, lam = _first_multiplier(capsys, tmp_path)
    # a second multiplier of the same seeded immersion
    torus = RegularTorus(((3, 0), (0, 3)))
    hs = induced_structure(torus, random_immersion(torus, np.random.default_rng(42)))
    mu2 = 1.1 - 0.4j
    lam2 = np.linalg.eigvals(sp.holonomy_H(hs, fundamental_domain(torus), mu2))[0]
    code, _, _ = run(capsys, "darboux", "--gamma", 3, 0, "--eta", 0, 3, "--mu", mu,
                     "--lambda", lam, "--bianchi", mu2, lam2, "--no-plot",
                     "--out-dir", tmp_path)
    assert code == 0
    rep = load(tmp_path / "darboux_report.json")["bianchi"]
    assert rep["vs_first"] < 1e-7 and rep["vs_second"] < 1e-7
    assert (tmp_path / "bianchi.json").exists()


def test_darboux_bianchi_collision_exits_three(capsys, tmp_path):
    mu, lam = _first_multiplier(capsys, tmp_path)
    code, _, err = run(capsys, "darboux", "--gamma", 3, 0, "--eta", 0, 3, "--mu", mu,
                       "--lambda", lam, "--bianchi", mu, lam, "--no-plot", "--out-dir", tmp_path)
    assert code == 3
    assert diagnostic(err)["error"] == "TransformsCollide"


# ---------------------------------------------------------------------------
# polygon

def test_polygon_regular_pentagon_flow(capsys, tmp_path):
    code, _, _ = run(capsys, "polygon", "--regular", 5, "--steps", 20, "--out-dir", tmp_path)
    assert code == 0
    rep = load(tmp_path / "polygon.json")
    assert rep["hmax_nilpotent"] is True
    assert rep["flow"]["max_step_cross_ratio_dev"] < 1e-9
    assert rep["flow"]["max_spectral_drift"] < 1e-6
    polylines = io.read_obj_polylines(tmp_path / "flow.obj")
    assert len(polylines) == 21
    for p in polylines:
        assert len(p) == 6
        np.testing.assert_allclose(p[0], p[-1])
    assert (tmp_path / "flow.png").exists()


def test_polygon_even_random(capsys, tmp_path):
    code, _, _ = run(capsys, "polygon", "--n", 6, "--no-plot", "--out-dir", tmp_path)
    assert code == 0
    rep = load(tmp_path / "polygon.json")
    assert rep["hmax_invertible"] is True and rep["hmax_degree"] == 3
    assert rep["h0_on_L1"] < 1e-10


def test_polygon_repeated_point_exits_three(capsys, tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"affine": [[0, 0, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0],
                                           [0, 1, 0, 0]]}))
    code, _, err = run(capsys, "polygon", "--input", path, "--out-dir", tmp_path)
    assert code == 3
    assert diagnostic(err)["error"] == "NotAPolygon"


def test_polygon_too_short(capsys, tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps([0, 1]))
    code, _, _ = run(capsys, "polygon", "--input", path, "--out-dir", tmp_path)
    assert code == 2


# ---------------------------------------------------------------------------
# verify

def test_verify_subset(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--criteria", "multiratio", "--out-dir", tmp_path)
    assert code == 0
    assert out.count("[PASS]") == 1
    assert " 3 Darboux multi-ratio" in out
    assert load(tmp_path / "verify.json")["failed"] == []


def test_verify_tight_tolerance_reports_failures(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--criteria", "1,kodaira", "--tol", "1e-30",
                       "--out-dir", tmp_path)
    assert code == 1
    assert "[FAIL]" in out
    assert load(tmp_path / "verify.json")["failed"]


def test_verify_unknown_criterion(capsys, tmp_path):
    code, _, err = run(capsys, "verify", "--criteria", "nope", "--out-dir", tmp_path)
    assert code == 2
    assert diagnostic(err)["details"]["criterion"] == "nope"


# ---------------------------------------------------------------------------
# determinism

@pytest.mark.parametrize("argv,files", [
    (["spectrum", "--gamma", 3, 0, "--eta", 0, 3], ["spectrum.json", "samples.csv"]),
    (["darboux", "--gamma", 3, 0, "--eta", 0, 3], ["darboux_report.json", "transform.json"]),
    (["polygon", "--regular", 5, "--steps", 5], ["polygon.json", "flow.obj"]),
    (["mesh", "--gamma", 3, 0, "--eta", 1, 2], ["mesh.json", "black.csv"]),
])
def test_reports_are_byte_identical(capsys, tmp_path, argv, files):
    for name in ("a", "b"):
        assert run(capsys, *argv, "--no-plot", "--out-dir", tmp_path / name)[0] == 0
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


@pytest.mark.skipif(shutil.which("dhg") is None, reason="console script not installed")
def test_console_script(tmp_path):
    res = subprocess.run(["dhg", "mesh", "--gamma", "1", "0", "--eta", "0", "1",
                          "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 2
    assert json.loads(res.stderr)["error"] == "NonRegularQuotient"
