import csv
import json

import numpy as np
import pytest

from bandsurf.cli import main
from bandsurf.cloud import read_cloud_csv, read_columns_csv
from bandsurf.trigpoly import TrigPolynomial, _grid


def run(*args):
    return main([str(a) for a in args])


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_sample_rows_lie_on_zero_set(tmp_path):
    assert run("sample", "--support", "3x3", "--n", 8, "--seed", 7, "--out-dir", tmp_path) == 0
    cloud = read_cloud_csv(tmp_path / "cloud.csv")
    poly = TrigPolynomial.from_json((tmp_path / "poly.json").read_text())
    assert len(cloud) == 8
    assert np.max(np.abs(poly(cloud.points))) < 1e-12
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["command"] == "sample" and man["seed"] == 7 and man["config"]["n"] == 8


def test_sample_product_is_labelled(tmp_path):
    code = run("sample", "--product", "3x3,3x3", "--per-component", "8,16", "--out-dir", tmp_path)
    assert code == 0
    cloud = read_cloud_csv(tmp_path / "cloud.csv")
    assert len(cloud) == 24
    assert np.bincount(cloud.labels).tolist() == [8, 16]
    prod = TrigPolynomial.from_dict(json.loads((tmp_path / "poly.json").read_text())["product"])
    assert np.max(np.abs(prod(cloud.points))) < 1e-11


def test_sample_zero_count_writes_header(tmp_path):
    assert run("sample", "--n", 0, "--out-dir", tmp_path) == 0
    assert (tmp_path / "cloud.csv").read_text().strip() == "x1,x2"


def test_rerun_from_manifest_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("sample", "--support", "5x5", "--n", 30, "--noise", 0.01, "--seed", 3,
               "--out-dir", a) == 0
    assert run("sample", "--config", a / "manifest.json", "--out-dir", b) == 0
    for name in ("cloud.csv", "poly.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 5, "seed": 1}))
    assert run("sample", "--config", cfg, "--n", 9, "--out-dir", tmp_path) == 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["config"]["n"] == 9 and man["seed"] == 1
    assert len(read_cloud_csv(tmp_path / "cloud.csv")) == 9


def test_recover_grid_matches_truth(tmp_path):
    assert run("sample", "--support", "3x3", "--n", 20, "--seed", 4, "--out-dir", tmp_path) == 0
    code = run("recover", "--cloud", tmp_path / "cloud.csv", "--gamma", "3x3", "--lambda", "3x3",
               "--grid", 128, "--out-dir", tmp_path)
    assert code == 0
    truth = TrigPolynomial.from_json((tmp_path / "poly.json").read_text())
    grid = _grid(2, 128)
    t = truth(grid).real
    got = np.array([float(r["real"]) for r in rows(tmp_path / "grid.csv")])
    away = np.abs(t) > 0.05 * np.abs(t).max()
    agree = np.mean(np.sign(got[away]) == np.sign(t[away]))
    agree = max(agree, 1 - agree)  # the recovered sign is arbitrary
    assert agree >= 0.999
    model = json.loads((tmp_path / "model.json").read_text())
    assert model["mode"] == "minimal" and model["samples"] == 20


def test_recover_sos_grid(tmp_path):
    run("sample", "--support", "3x3", "--n", 60, "--seed", 5, "--out-dir", tmp_path)
    code = run("recover", "--cloud", tmp_path / "cloud.csv", "--gamma", "5x5", "--lambda", "3x3",
               "--grid", 16, "--out-dir", tmp_path)
    assert code == 0
    model = json.loads((tmp_path / "model.json").read_text())
    assert model["null_dim"] == model["expected_null_dim"] == 9
    vals = [float(r["gamma"]) for r in rows(tmp_path / "grid.csv")]
    assert len(vals) == 256 and min(vals) >= 0


def test_recover_ambiguous_is_domain_error(tmp_path):
    run("sample", "--support", "3x3", "--n", 7, "--out-dir", tmp_path)
    code = run("recover", "--cloud", tmp_path / "cloud.csv", "--gamma", "3x3", "--lambda", "3x3",
               "--out-dir", tmp_path)
    assert code == 2


def test_usage_errors(tmp_path, capsys):
    assert run("recover", "--out-dir", tmp_path) == 1  # --cloud missing
    assert run("sample", "--bogus") == 1
    assert run() == 1
    assert run("recover", "--cloud", tmp_path / "missing.csv", "--gamma", "3x3") == 1


def test_parse_error_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,x2\n0.1,0.2\n0.3,oops\n")
    assert run("recover", "--cloud", bad, "--gamma", "3x3", "--out-dir", tmp_path) == 1
    assert "line 3" in capsys.readouterr().err


def test_no_zero_set_exit_code(tmp_path):
    poly = {"support": {"dims": 1, "freqs": [[-1], [0], [1]]},
            "coeffs": [0.5, 0.0, 3.0, 0.0, 0.5, 0.0]}  # 3 + cos 2 pi x
    path = tmp_path / "p.json"
    path.write_text(json.dumps(poly))
    assert run("sample", "--poly", path, "--n", 3, "--out-dir", tmp_path) == 2


def test_manifest_for_other_command_rejected(tmp_path):
    run("sample", "--n", 3, "--out-dir", tmp_path)
    assert run("denoise", "--config", tmp_path / "manifest.json", "--cloud", "c.csv",
               "--kernel", "3x3") == 1


def test_denoise_torus_parameters_log_three_rows(tmp_path):
    run("sample", "--support", "3x3x3", "--n", 200, "--noise", 0.01, "--seed", 1,
        "--out-dir", tmp_path)
    code = run("denoise", "--cloud", tmp_path / "cloud.csv", "--kernel", "7x7x7",
               "--lambda", 0.8, "--iters", 3, "--inner", 2, "--out-dir", tmp_path)
    assert code == 0
    log = rows(tmp_path / "metrics.csv")
    assert [int(r["iteration"]) for r in log] == [1, 2, 3]
    assert {"objective", "surrogate", "mean_displacement"} <= set(log[0])
    assert len(read_cloud_csv(tmp_path / "clean.csv")) == 200


def test_fit_and_eval_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.random((40, 2))
    A = X[:12]
    y = np.cos(2 * np.pi * X[:, 0]) + np.sin(2 * np.pi * X[:, 1])
    with open(tmp_path / "train.csv", "w") as fh:
        fh.write("x1,x2,y1\n")
        for p, v in zip(X, y):
            fh.write(f"{p[0]:.17g},{p[1]:.17g},{v:.17g}\n")
    with open(tmp_path / "A.csv", "w") as fh:
        fh.write("x1,x2\n")
        for p in A:
            fh.write(f"{p[0]:.17g},{p[1]:.17g}\n")
    assert run("fit-fn", "--train", tmp_path / "train.csv", "--anchors", tmp_path / "A.csv",
               "--kernel", "3x3", "--out-dir", tmp_path) == 0
    model = json.loads((tmp_path / "model.json").read_text())
    assert {"anchors", "kernel", "F", "cutoff"} <= set(model)
    # the target is band-limited to 3x3, so the fit is exact everywhere
    assert run("eval-fn", "--model", tmp_path / "model.json", "--points",
               tmp_path / "A.csv", "--out-dir", tmp_path) == 0
    pts, out = read_columns_csv(tmp_path / "y.csv", ("x", "y"))
    assert np.allclose(pts, A)
    assert np.allclose(out[:, 0], y[:12], atol=1e-8)


def test_select_anchors_greedy(tmp_path):
    run("sample", "--support", "3x3", "--n", 1, "--out-dir", tmp_path)
    code = run("select-anchors", "--poly", tmp_path / "poly.json", "--count", 10,
               "--strategy", "greedy", "--kernel", "5x5", "--out-dir", tmp_path)
    assert code == 0
    assert len(read_cloud_csv(tmp_path / "anchors.csv")) == 10


def test_phase_transition_table(tmp_path):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"factors": ["3x3"], "counts": [7, 8], "trials": 20, "seed": 2}))
    assert run("phase-transition", "--config", cfg, "--out-dir", tmp_path) == 0
    table = rows(tmp_path / "table.csv")
    assert list(table[0]) == ["N", "trials", "successes", "fraction"]
    assert [float(r["fraction"]) for r in table] == [0.0, 1.0]


def test_phase_transition_per_component(tmp_path):
    code = run("phase-transition", "--factors", "3x3,3x3", "--per-component", "7,17;8,16",
               "--trials", 5, "--out-dir", tmp_path)
    assert code == 0
    table = rows(tmp_path / "table.csv")
    assert [r["per_component"] for r in table] == ["7+17", "8+16"]
    assert float(table[0]["fraction"]) == 0.0


@pytest.mark.parametrize("cmd", ["sample", "recover", "denoise", "fit-fn", "eval-fn",
                                 "select-anchors", "phase-transition"])
def test_help_exits_cleanly(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        main([cmd, "--help"])
    assert exc.value.code == 0
