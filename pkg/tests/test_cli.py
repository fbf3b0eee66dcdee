import json
import os

import numpy as np
import pytest

from gapkit import fileio
from gapkit.cli import dispatch
from gapkit.fixtures import standard_robustness_fixture


@pytest.fixture()
def fixture_files(tmp_path):
    pairs, labels = standard_robustness_fixture()
    x_path = str(tmp_path / "x.emb")
    y_path = str(tmp_path / "y.emb")
    l_path = str(tmp_path / "y.lbl")
    fileio.write_embeddings(pairs.x, x_path, "f64")
    fileio.write_embeddings(pairs.y, y_path, "f64")
    fileio.write_labels(labels, l_path)
    return x_path, y_path, l_path


def test_help_exits_zero(capsys):
    assert dispatch(["--help"]) == 0
    for sub in ("analyze", "close", "robustness", "quantize", "simulate", "diagnose-noise"):
        assert dispatch([sub, "--help"]) == 0
        out = capsys.readouterr().out
        assert "--out" in out


def test_unknown_subcommand_exits_2(capsys):
    assert dispatch(["frobnicate"]) == 2
    assert capsys.readouterr().err.startswith("gapkit: error:")


def test_missing_required_flag_exits_2(capsys):
    assert dispatch(["analyze", "--x", "a.emb"]) == 2
    assert capsys.readouterr().err.startswith("gapkit: error:")


def test_analyze_smoke(fixture_files, tmp_path, capsys):
    x_path, y_path, _ = fixture_files
    out = str(tmp_path / "report.json")
    assert dispatch(["analyze", "--x", x_path, "--y", y_path, "--out", out]) == 0
    doc = json.loads(open(out).read())
    assert doc["gap_norm"] > 0.9
    assert abs(doc["cos_summary"]["mean_abs_cos"]) < 0.05
    assert len(doc["rows"]["cos_y"]) == 500


def test_analyze_dim_mismatch_exits_3(tmp_path, capsys):
    a = str(tmp_path / "a.emb")
    b = str(tmp_path / "b.emb")
    fileio.write_embeddings(np.eye(2), a, "f64")
    fileio.write_embeddings(np.eye(3), b, "f64")
    out = str(tmp_path / "r.json")
    assert dispatch(["analyze", "--x", a, "--y", b, "--out", out]) == 3
    err = capsys.readouterr().err
    assert err.startswith("gapkit: error:")
    assert not os.path.exists(out)


def test_analyze_bad_magic_exits_3(tmp_path, capsys):
    bad = str(tmp_path / "bad.emb")
    with open(bad, "wb") as fh:
        fh.write(b"XXXX" + b"\x00" * 30)
    good = str(tmp_path / "good.emb")
    fileio.write_embeddings(np.eye(2), good, "f64")
    assert dispatch(["analyze", "--x", bad, "--y", good, "--out", str(tmp_path / "o.json")]) == 3


def test_analyze_csv_and_emb_agree(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(6, 3))
    y = rng.normal(size=(6, 3)) + 1.0
    x_emb = str(tmp_path / "x.emb")
    y_emb = str(tmp_path / "y.emb")
    fileio.write_embeddings(x, x_emb, "f64")
    fileio.write_embeddings(y, y_emb, "f64")
    x_csv = str(tmp_path / "x.csv")
    y_csv = str(tmp_path / "y.csv")
    with open(x_csv, "w") as fh:
        fh.write("\n".join(",".join(repr(float(v)) for v in row) for row in x) + "\n")
    with open(y_csv, "w") as fh:
        fh.write("\n".join(",".join(repr(float(v)) for v in row) for row in y) + "\n")
    out1 = str(tmp_path / "r1.json")
    out2 = str(tmp_path / "r2.json")
    assert dispatch(["analyze", "--x", x_emb, "--y", y_emb, "--out", out1]) == 0
    assert dispatch(["analyze", "--x", x_csv, "--y", y_csv, "--out", out2]) == 0
    assert open(out1, "rb").read() == open(out2, "rb").read()


def test_analyze_with_tau_reports_stats(fixture_files, tmp_path):
    x_path, y_path, _ = fixture_files
    # bijective pair needed: reuse x on both sides with a translation
    x = fileio.read_embeddings(x_path)
    y2 = str(tmp_path / "y2.emb")
    fileio.write_embeddings(x + np.array([0.0] * 31 + [1.0]), y2, "f64")
    out = str(tmp_path / "r.json")
    assert dispatch(["analyze", "--x", x_path, "--y", y2, "--tau", "1.0", "--out", out]) == 0
    doc = json.loads(open(out).read())
    assert abs(doc["contrastive"]["mean_sy"] - 1.0) < 1e-9
    assert doc["contrastive"]["loss"] > 0.0


def test_close_roundtrip(fixture_files, tmp_path):
    x_path, y_path, _ = fixture_files
    out = str(tmp_path / "closed.emb")
    code = dispatch(
        ["close", "--x", x_path, "--y", y_path, "--move", "x",
         "--epsilon", "0.0", "--lambda", "1.0", "--out", out]
    )
    assert code == 0
    moved = fileio.read_embeddings(out)
    y = fileio.read_embeddings(y_path)
    x = fileio.read_embeddings(x_path)
    # the retrieved side moved toward the queries along the gap coordinate
    assert abs(moved[:, -1].mean() - y[:, -1].mean()) < 0.01
    assert abs(x[:, -1].mean() - y[:, -1].mean()) > 0.9


def test_close_bad_epsilon_exits_2(fixture_files, tmp_path, capsys):
    x_path, y_path, _ = fixture_files
    code = dispatch(
        ["close", "--x", x_path, "--y", y_path, "--move", "x",
         "--epsilon", "2.0", "--lambda", "1.0", "--out", str(tmp_path / "c.emb")]
    )
    assert code == 2
    assert capsys.readouterr().err.startswith("gapkit: error:")


def test_robustness_deterministic_output(fixture_files, tmp_path):
    x_path, y_path, l_path = fixture_files
    out1 = str(tmp_path / "c1.csv")
    out2 = str(tmp_path / "c2.csv")
    args = ["robustness", "--x", x_path, "--y", y_path, "--noise", "gaussian",
            "--sigma", "0.05", "--k", "25", "--lambda-grid", "0:1:0.5",
            "--seed", "7", "--labels", l_path]
    assert dispatch(args + ["--out", out1]) == 0
    assert dispatch(args + ["--out", out2]) == 0
    b1 = open(out1, "rb").read()
    assert b1 == open(out2, "rb").read()
    lines = b1.decode().splitlines()
    assert lines[0] == "lambda,gap_norm_after,robustness,clean_accuracy,noisy_accuracy"
    assert len(lines) == 4
    # robustness improves from lambda 0 to 1 on this fixture
    first = lines[1].split(",")
    last = lines[3].split(",")
    assert float(last[2]) > float(first[2])
    assert first[3] == last[3]  # clean accuracy identical


def test_robustness_rank1_runs(fixture_files, tmp_path):
    x_path, y_path, _ = fixture_files
    out = str(tmp_path / "c.csv")
    assert dispatch(
        ["robustness", "--x", x_path, "--y", y_path, "--noise", "rank1",
         "--sigma", "0.05", "--k", "5", "--lambda-grid", "0:1:1",
         "--seed", "3", "--out", out]
    ) == 0
    lines = open(out).read().splitlines()
    assert len(lines) == 3
    assert lines[1].endswith(",,")  # no accuracy columns without labels


def test_quantize_subcommand(fixture_files, tmp_path):
    x_path, y_path, _ = fixture_files
    out = str(tmp_path / "q.csv")
    assert dispatch(
        ["quantize", "--x", x_path, "--y", y_path, "--levels", "16",
         "--lambda-grid", "0:1:0.25", "--out", out]
    ) == 0
    lines = open(out).read().splitlines()
    assert len(lines) == 6
    rob = [float(l.split(",")[2]) for l in lines[1:]]
    assert all(0.0 <= r <= 1.0 for r in rob)


def test_bad_lambda_grid_exits_2(fixture_files, tmp_path, capsys):
    x_path, y_path, _ = fixture_files
    code = dispatch(
        ["quantize", "--x", x_path, "--y", y_path, "--levels", "16",
         "--lambda-grid", "nonsense", "--out", str(tmp_path / "q.csv")]
    )
    assert code == 2


def test_simulate_and_config_validation(tmp_path, capsys):
    cfg = {
        "scenario": {"kind": "gaussian_clusters", "mu_x": [0.0, 0.5], "mu_y": [0.0, -0.5],
                     "sigma": 0.01},
        "n_per_modality": 10,
        "d": 2,
        "tau": 0.5,
        "lr": 0.01,
        "iterations": 50,
        "sphere_constrained": False,
        "log_every": 25,
        "seed": 1,
    }
    cfg_path = str(tmp_path / "sim.json")
    with open(cfg_path, "w") as fh:
        json.dump(cfg, fh)
    out = str(tmp_path / "traj.csv")
    assert dispatch(["simulate", "--config", cfg_path, "--out", out]) == 0
    lines = open(out).read().splitlines()
    assert lines[0].startswith("iter,loss,gap_norm")
    assert [int(l.split(",")[0]) for l in lines[1:]] == [0, 25, 50]

    cfg["bogus_key"] = 1
    with open(cfg_path, "w") as fh:
        json.dump(cfg, fh)
    assert dispatch(["simulate", "--config", cfg_path, "--out", out]) == 2
    assert capsys.readouterr().err.startswith("gapkit: error:")


def test_simulate_explicit_paths_relative_to_config(tmp_path):
    sub = tmp_path / "data"
    sub.mkdir()
    rng = np.random.default_rng(2)
    fileio.write_embeddings(rng.normal(size=(4, 2)), str(sub / "x0.emb"), "f64")
    fileio.write_embeddings(rng.normal(size=(4, 2)) + 1.0, str(sub / "y0.emb"), "f64")
    cfg = {
        "scenario": {"kind": "explicit", "x_path": "x0.emb", "y_path": "y0.emb"},
        "n_per_modality": 4,
        "d": 2,
        "tau": 1.0,
        "lr": 0.01,
        "iterations": 10,
        "sphere_constrained": False,
        "log_every": 10,
        "seed": 0,
    }
    cfg_path = str(sub / "sim.json")
    with open(cfg_path, "w") as fh:
        json.dump(cfg, fh)
    out = str(tmp_path / "traj.csv")
    prev = os.getcwd()
    os.chdir(tmp_path)  # ensure resolution is config-relative, not cwd-relative
    try:
        assert dispatch(["simulate", "--config", "data/sim.json", "--out", out]) == 0
    finally:
        os.chdir(prev)


def test_simulate_byte_identical_reruns(tmp_path):
    cfg = {
        "scenario": {"kind": "dim_collapse", "axis": 0, "spread": 2.0},
        "n_per_modality": 12,
        "d": 2,
        "tau": 0.5,
        "lr": 0.05,
        "iterations": 100,
        "sphere_constrained": False,
        "log_every": 50,
        "seed": 5,
    }
    cfg_path = str(tmp_path / "sim.json")
    with open(cfg_path, "w") as fh:
        json.dump(cfg, fh)
    out1 = str(tmp_path / "t1.csv")
    out2 = str(tmp_path / "t2.csv")
    assert dispatch(["simulate", "--config", cfg_path, "--out", out1]) == 0
    assert dispatch(["simulate", "--config", cfg_path, "--out", out2]) == 0
    assert open(out1, "rb").read() == open(out2, "rb").read()


def test_diagnose_noise(tmp_path):
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(7)))
    clean = rng.standard_normal((300, 32))
    a = rng.standard_normal(300)
    c = rng.standard_normal(32)
    c /= np.linalg.norm(c)
    correlated = clean + np.outer(a, c)
    iid = clean + 0.5 * rng.standard_normal((300, 32))
    paths = {}
    for name, mat in (("clean", clean), ("corr", correlated), ("iid", iid)):
        p = str(tmp_path / f"{name}.emb")
        fileio.write_embeddings(mat, p, "f64")
        paths[name] = p
    out = str(tmp_path / "diag.json")
    assert dispatch(
        ["diagnose-noise", "--clean", paths["clean"], "--noisy", paths["corr"],
         "--noisy", paths["iid"], "--out", out]
    ) == 0
    doc = json.loads(open(out).read())
    scores = {r["noisy"]: r["d_c"] for r in doc["results"]}
    assert scores[paths["corr"]] > 0.9
    assert scores[paths["iid"]] < 0.5
