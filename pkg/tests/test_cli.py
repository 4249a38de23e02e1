import json
import tempfile
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vstates.cli import main
from vstates.continuation import Branch, VState
from vstates.io import emit_svg, read_branch_csv, read_config, write_branch_csv
from vstates.spectral import ModeVector


@pytest.fixture(scope="module")
def branch_csv(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    out = d / "m3.csv"
    assert main(["branch", "--m", "3", "--xi-max", "0.06", "--dxi", "0.02", "--out", str(out)]) == 0
    return out


def test_branch_outputs(branch_csv):
    meta, b = read_branch_csv(branch_csv)
    assert meta["m"] == 3 and meta["K"] == 16 and meta["N"] == 256
    assert meta["reason"] == "reached xi_max"
    assert len(b) == 3
    header = [l for l in branch_csv.read_text().splitlines() if not l.startswith("#")][0]
    assert header.startswith("xi,lambda,omega,residual_inf,a2,a5,")
    summary = json.loads(branch_csv.with_suffix(".json").read_text())
    assert summary["states"] == 3 and summary["residual_inf_2N_last"] < 1e-10


def test_resume_matches_uninterrupted(tmp_path, branch_csv):
    part = tmp_path / "part.csv"
    full = tmp_path / "full.csv"
    assert main(["branch", "--m", "3", "--xi-max", "0.02", "--dxi", "0.02", "--out", str(part)]) == 0
    assert main(["branch", "--resume", str(part), "--xi-max", "0.06", "--out", str(full)]) == 0

    def body(p):
        return [l for l in p.read_text().splitlines() if not l.startswith("#")]

    assert body(full) == body(branch_csv)


def test_branch_failure_exit_code(tmp_path):
    out = tmp_path / "fail.csv"
    assert main(["branch", "--m", "3", "--xi-max", "0.3", "--dxi", "0.3", "--out", str(out)]) == 1
    meta, b = read_branch_csv(out)
    assert len(b) == 0 and meta["reason"] == "conformality margin exhausted"


def test_usage_errors(tmp_path, capsys):
    assert main(["branch", "--out", str(tmp_path / "missing" / "x.csv")]) == 2
    assert main(["spectrum", "--lambdas", ""]) == 2
    assert main(["spectrum", "--lambdas", "1.5"]) == 2
    assert main(["branch", "--dxi", "0"]) == 2
    assert main(["nonsense"]) == 2
    assert main(["diagnose"]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("# m=3\n# K=2\nnot,a,table\n")
    assert main(["validate", "--state", str(bad)]) == 2
    assert main(["diagnose", "--state", str(tmp_path / "absent.csv")]) == 2
    capsys.readouterr()


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# flat config\nm = 4\nxi_max = 0.04\ndxi = 0.02\n")
    out = tmp_path / "c.csv"
    assert main(["branch", "--config", str(cfg), "--out", str(out)]) == 0
    meta, b = read_branch_csv(out)
    assert meta["m"] == 4 and len(b) == 2
    # command line wins over the file
    assert main(["branch", "--config", str(cfg), "--m", "5", "--out", str(out)]) == 0
    assert read_branch_csv(out)[0]["m"] == 5
    assert read_config(cfg) == {"m": "4", "xi_max": "0.04", "dxi": "0.02"}
    cfg.write_text("bogus = 1\n")
    assert main(["branch", "--config", str(cfg)]) == 2
    cfg.write_text("no equals sign\n")
    assert main(["branch", "--config", str(cfg)]) == 2


def test_diagnose_and_validate(tmp_path, branch_csv):
    rep = tmp_path / "d.json"
    svg = tmp_path / "s.svg"
    assert main(["diagnose", "--state", str(branch_csv), "--index", "1", "--out", str(rep), "--svg", str(svg)]) == 0
    d = json.loads(rep.read_text())
    assert d["flags"]["decay_ok"] is None  # xi = 0.04 leaves too few resolved coefficients
    assert all(v for k, v in d["flags"].items() if k != "decay_ok")
    assert main(["diagnose", "--state", str(branch_csv), "--out", str(rep)]) == 0
    assert all(json.loads(rep.read_text())["flags"].values())
    assert svg.read_text().startswith("<?xml")
    assert main(["diagnose", "--ellipse", "0.3", "--lambda", "0.5", "--out", str(rep)]) == 0
    assert not json.loads(rep.read_text())["flags"]["q_consistent"]
    assert main(["diagnose", "--ellipse", "0.3", "--lambda", "0.5", "--strict", "--out", str(rep)]) == 1
    assert main(["diagnose", "--state", str(branch_csv), "--index", "7"]) == 2

    val = tmp_path / "v.json"
    assert main(["validate", "--state", str(branch_csv), "--out", str(val)]) == 0
    v = json.loads(val.read_text())
    assert v["drift"] < 1e-6 and v["identity_R_plus_half_G"] < 1e-12
    assert main(["validate", "--disc", "--out", str(val)]) == 0
    assert json.loads(val.read_text())["far_field_error"] < 1e-14


def test_spectrum_table(tmp_path, capsys):
    out = tmp_path / "s.json"
    assert main(["spectrum", "--m", "3", "--K", "4", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "1 - n lambda" in text
    d = json.loads(out.read_text())
    assert d["max_fd_error"] < 1e-6
    zeros = [(r["lambda"], r["n"]) for r in d["rows"] if r["zero"]]
    assert zeros == [(1 / 3, 3)]


def test_ellipse_check(tmp_path):
    out = tmp_path / "e.json"
    assert main(["ellipse-check", "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["pass"] and d["states"] == 10
    assert max(d["max_deviation"].values()) < 1e-10


def test_svg_is_deterministic(tmp_path):
    z = np.exp(2j * np.pi * np.arange(8) / 8)
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    emit_svg(z, a, overlay_circle=True)
    emit_svg(z, b, overlay_circle=True)
    assert a.read_bytes() == b.read_bytes()
    assert "<circle" in a.read_text() and a.read_text().count(" L ") == 7


def test_branch_ellipse_rows(tmp_path):
    out = tmp_path / "m2.csv"
    assert main(["branch", "--m", "2", "--xi-max", "0.5", "--dxi", "0.05", "--out", str(out)]) == 0
    _, b = read_branch_csv(out)
    assert len(b) == 10
    assert max(abs(s.lam - 0.5 * (1 + s.xi**2)) for s in b.states) < 1e-10
    summary = json.loads(out.with_suffix(".json").read_text())
    assert "elapsed_seconds" not in summary and summary["conformal_margin_last"] > 0
    assert main(["branch", "--m", "2", "--tol", "0", "--out", str(out)]) == 2
    assert main(["branch", "--m", "2", "--N", "32", "--out", str(out)]) == 2


def test_summary_files_are_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["branch", "--m", "3", "--xi-max", "0.04", "--dxi", "0.02", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.with_suffix(".json").read_bytes() == b.with_suffix(".json").read_bytes()


def test_diagnose_disc_and_ellipse_curvature(tmp_path):
    rep = tmp_path / "d.json"
    assert main(["diagnose", "--disc", "--keep-curvature", "--out", str(rep)]) == 0
    d = json.loads(rep.read_text())
    assert d["q_consistency"] < 1e-14 and d["convex"]
    assert np.max(np.abs(np.array(d["curvature"]) - 1)) < 1e-14
    assert main(["diagnose", "--ellipse", "0.2", "--out", str(rep)]) == 0
    d = json.loads(rep.read_text())
    assert d["convex"] and d["min_curvature"] == pytest.approx(0.8 / 1.44, abs=1e-12)


def test_validate_disc_and_ellipse(tmp_path):
    val = tmp_path / "v.json"
    assert main(["validate", "--disc", "--strict", "--out", str(val)]) == 0
    v = json.loads(val.read_text())
    assert max(v["drift"], v["identity_R_plus_half_G"], v["far_field_error"], v["G_inf"]) < 1e-10
    assert main(["validate", "--ellipse", "0.2", "--strict", "--out", str(val)]) == 0
    assert json.loads(val.read_text())["drift"] < 1e-6
    assert main(["validate", "--ellipse", "0.2", "--lambda", "0.6", "--strict", "--out", str(val)]) == 1


def test_svg_of_m4_state_is_valid_and_symmetric(tmp_path):
    csv_path, svg = tmp_path / "m4.csv", tmp_path / "m4.svg"
    assert main(["branch", "--m", "4", "--xi-max", "0.06", "--dxi", "0.03", "--out", str(csv_path),
                 "--svg", str(svg)]) == 0
    root = ET.parse(svg).getroot()
    path = root.find("{http://www.w3.org/2000/svg}path").get("d")
    pts = np.array([complex(*map(float, t.split(","))) for t in path[2:-2].split(" L ")])
    z = (pts.real - 200) - 1j * (pts.imag - 200)
    N = z.size
    assert np.max(np.abs(np.roll(z, -N // 4) - 1j * z)) < 1e-4


@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4))
@settings(max_examples=50, deadline=None)
def test_csv_round_trip_is_exact(vals):
    mv = ModeVector(3, np.array(vals[:2]) * 1e-3)
    b = Branch(3, [VState(3, 0.3 + vals[2] * 1e-5, mv, abs(vals[3]), 256)], reason="reached xi_max")
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "b.csv"
        write_branch_csv(p, b, 2, 256, 1e-12, 0.01, 0.1)
        _, back = read_branch_csv(p)
    s, t = b.states[0], back.states[0]
    assert t.lam == s.lam and t.residual_inf == s.residual_inf
    assert np.array_equal(t.mv.coeffs, s.mv.coeffs)
