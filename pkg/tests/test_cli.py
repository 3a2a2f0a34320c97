"""CLI: exit codes, file contracts, config handling, reproducibility."""

import json

from translab.cli import main


def run(args):
    return main(args)


def test_list():
    assert run(["list"]) == 0


def test_bowl_files_and_exit(tmp_path):
    out = tmp_path / "b"
    assert run(["bowl", "--curvature", "mean:n=3", "--rmax", "60", "--out", str(out), "--quiet"]) == 0
    for name in ("profile.csv", "bowl.json", "bowl_plot.gp", "manifest.json"):
        assert (out / name).exists()
    header = (out / "profile.csv").read_text().splitlines()[0]
    assert header == "r,u,v,residual"
    payload = json.loads((out / "bowl.json").read_text())
    assert payload["curvature_key"] == "mean:n=3"
    assert set(payload["formula"]) == {"a", "b"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert {f["name"] for f in manifest["files"]} >= {"profile.csv", "bowl.json"}
    assert all(len(f["sha256"]) == 64 for f in manifest["files"])


def test_bowl_bad_rmax_exit2(tmp_path):
    assert run(["bowl", "--curvature", "mean:n=3", "--rmax", "-1", "--out", str(tmp_path)]) == 2


def test_bowl_bad_curvature_exit2(tmp_path):
    assert run(["bowl", "--curvature", "bogus:n=3", "--out", str(tmp_path)]) == 2


def test_catenoid_not_signed_exit2(tmp_path):
    assert run(["catenoid", "--curvature", "mean:n=3", "--R", "1", "--out", str(tmp_path)]) == 2


def test_catenoid_files(tmp_path):
    out = tmp_path / "c"
    code = run([
        "catenoid", "--curvature", "qk:k=4,n=6", "--R", "1", "--rmax", "120",
        "--out", str(out), "--quiet",
    ])
    assert code == 0
    for name in ("upper.csv", "lower.csv", "catenoid.json", "catenoid_plot.gp", "manifest.json"):
        assert (out / name).exists()
    header = (out / "upper.csv").read_text().splitlines()[0]
    assert header == "s,r,u,theta,kappa,residual"
    payload = json.loads((out / "catenoid.json").read_text())
    assert payload["case"] == "derivative_origin"
    assert payload["end_behavior"]["kind"] == "logarithmic"


def test_verify_suites(tmp_path):
    assert run(["verify", "--suite", "implicit", "--curvature", "hq:k=2,l=0,n=3",
                "--out", str(tmp_path / "v1"), "--quiet"]) == 0
    assert run(["verify", "--suite", "ordering", "--curvature", "mean:n=4",
                "--out", str(tmp_path / "v2"), "--quiet"]) == 0
    assert run(["verify", "--suite", "homogeneity", "--curvature", "gauss:n=4",
                "--out", str(tmp_path / "v3"), "--quiet"]) == 0


def test_reproducible_outputs(tmp_path):
    a, b = tmp_path / "r1", tmp_path / "r2"
    for out in (a, b):
        assert run(["bowl", "--curvature", "gauss:n=4", "--rmax", "300",
                    "--out", str(out), "--seed", "7", "--quiet"]) == 0
    for name in ("profile.csv", "bowl.json", "bowl_plot.gp"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    assert ma["files"] == mb["files"]


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[bowl]\ncurvature = mean:n=3\nrmax = 50\n\n[global]\nseed = 3\n")
    out = tmp_path / "cfg_out"
    assert run(["bowl", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    payload = json.loads((out / "bowl.json").read_text())
    assert payload["seed"] == 3


def test_env_overrides_config(tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[bowl]\ncurvature = mean:n=3\nrmax = 40\n")
    monkeypatch.setenv("TRANSLAB_BOWL_RMAX", "60")
    out = tmp_path / "env_out"
    assert run(["bowl", "--config", str(cfg), "--out", str(out), "--quiet"]) == 0
    payload = json.loads((out / "bowl.json").read_text())
    assert payload["fit_window"] == [6.0, 30.0]


def test_config_unknown_key_rejected(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[bowl]\nwibble = 3\n")
    assert run(["bowl", "--config", str(cfg), "--curvature", "mean:n=3",
                "--out", str(tmp_path / "x")]) == 2


def test_missing_required_exit2(tmp_path):
    assert run(["bowl", "--out", str(tmp_path)]) == 2
