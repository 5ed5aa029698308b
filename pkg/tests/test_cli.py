import csv
import hashlib
import json
import subprocess
import sys

import pytest

from downgrading import cli
from downgrading.errors import RootCountMismatch

from conftest import fig1_params, three_class_params, video_params


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def check_manifest(out):
    manifest = json.loads((out / "manifest.json").read_text())
    for entry in manifest["outputs"]:
        data = (out / entry["path"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == entry["sha256"]
    return manifest


def test_validate_exit_codes(tmp_path, capsys):
    ok = write(tmp_path, "ok.json", video_params().to_dict())
    assert cli.run(["validate", "--config", ok, "--out", str(tmp_path / "a")]) == 0
    one = write(tmp_path, "one.json", {"A": [1], "lambda": [0.5], "mu": [1], "c": 1, "c0": 0.5})
    assert cli.run(["validate", "--config", one, "--out", str(tmp_path / "b")]) == 2
    assert "infeasible" in capsys.readouterr().err


def test_error_mapping(tmp_path, monkeypatch, capsys):
    out = str(tmp_path / "o")
    assert cli.run(["moments", "--config", str(tmp_path / "missing.json"), "--out", out]) == 2
    bad = write(tmp_path, "bad.json", {"A": [2, 3], "lambda": [0.5, 0.1], "mu": [1, 1], "c": 1, "c0": 0.5})
    assert cli.run(["fixed-point", "--config", bad, "--out", out]) == 2
    assert "A" in capsys.readouterr().err
    low = write(tmp_path, "low.json", video_params(c0=0.6).to_dict())
    assert cli.run(["fixed-point", "--config", low, "--out", out]) == 3

    def boom(*a, **k):
        raise RootCountMismatch("forced")

    monkeypatch.setattr(cli, "build_distribution", boom)
    good = write(tmp_path, "good.json", video_params().to_dict())
    assert cli.run(["invariant", "--config", good, "--out", out]) == 4
    assert "RootCountMismatch" in capsys.readouterr().err


def test_fixed_point_and_moments(tmp_path):
    cfg = write(tmp_path, "f.json", {"params": fig1_params().to_dict()})
    out = tmp_path / "fp"
    assert cli.run(["fixed-point", "--config", cfg, "--out", str(out)]) == 0
    fp = json.loads((out / "fixed_point.json").read_text())
    assert fp["region"] == "Delta0"
    assert fp["occupancy"] == pytest.approx(0.97)
    out = tmp_path / "m"
    assert cli.run(["moments", "--config", cfg, "--out", str(out), "--dump-roots"]) == 0
    m = json.loads((out / "moments.json").read_text())
    assert m["closed_form"]["mean"] == pytest.approx(8.04819, rel=1e-3)
    assert json.loads((out / "roots.json").read_text())["z1"] > 1
    check_manifest(out)


def test_invariant_csv(tmp_path):
    cfg = write(tmp_path, "v.json", video_params().to_dict())
    out = tmp_path / "inv"
    assert cli.run(["invariant", "--config", cfg, "--out", str(out), "--range=-5:5", "--dump-roots"]) == 0
    rows = read_csv(out / "invariant.csv")
    assert rows[0] == ["n", "pi_n"]
    assert [int(r[0]) for r in rows[1:]] == list(range(-5, 6))
    assert all(r[1] == format(float(r[1]), ".12g") for r in rows[1:])
    assert (out / "invariant.csv").read_bytes().endswith(b"\n")
    side = json.loads((out / "invariant.json").read_text())
    assert side["pi_neg"] == pytest.approx(0.95 / 0.7 - 1)
    assert {"kappa", "z1", "mean", "variance", "third_central", "standardized_skew"} <= set(side)
    assert "p2_out_disk" in json.loads((out / "roots.json").read_text())


def test_invariant_off_fixed_point(tmp_path):
    cfg = write(tmp_path, "v.json", {"params": video_params().to_dict(), "ell": [0.35, 0.3], "range": "0:3"})
    out = tmp_path / "inv"
    assert cli.run(["invariant", "--config", cfg, "--out", str(out)]) == 0
    side = json.loads((out / "invariant.json").read_text())
    assert side["pi_neg"] == pytest.approx((0.35 + 0.6 - 0.7) / 0.7)


def test_fluid(tmp_path):
    cfg = write(tmp_path, "fl.json", {"params": three_class_params().to_dict(), "horizon": 10, "step": 0.01, "record_every": 50})
    out = tmp_path / "fl"
    assert cli.run(["fluid", "--config", cfg, "--out", str(out)]) == 0
    rows = read_csv(out / "fluid.csv")
    assert rows[0] == ["t", "ell_1", "ell_2", "ell_3", "occupancy", "region"]
    assert float(rows[-1][0]) == pytest.approx(10.0)
    rep = json.loads((out / "stability.json").read_text())
    assert rep["max_real_part"] < 0


def test_simulate_is_byte_identical(tmp_path):
    sim = {"params": video_params(N=50).to_dict(), "seed": 4, "horizon": 50, "warmup": 5, "trace_dt": 1.0}
    cfg = write(tmp_path, "s.json", sim)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.run(["simulate", "--config", cfg, "--out", str(a)]) == 0
    assert cli.run(["simulate", "--config", cfg, "--out", str(b)]) == 0
    assert (a / "outcome.json").read_bytes() == (b / "outcome.json").read_bytes()
    manifest = check_manifest(a)
    assert manifest["prng"]["seed"] == 4
    assert {e["path"] for e in manifest["outputs"]} == {"outcome.json", "histogram.csv", "trace.csv"}
    c = tmp_path / "c"
    assert cli.run(["simulate", "--config", cfg, "--out", str(c), "--seed", "5", "--replicas", "2"]) == 0
    outcome = json.loads((c / "outcome.json").read_text())
    assert len(outcome["replicas"]) == 2 and "merged" in outcome
    assert check_manifest(c)["prng"]["seed"] == 5


def test_compare_loss(tmp_path):
    cfg = write(tmp_path, "c.json", {
        "params": {"A": [1, 3], "lambda": [0.2, 0.5], "mu": [1, 1], "c": 1.0, "c0": 0.99},
        "sweep": {"class": 2, "start": 0.3, "stop": 0.7, "num": 5},
    })
    out = tmp_path / "cl"
    assert cli.run(["compare-loss", "--config", cfg, "--out", str(out)]) == 0
    rows = read_csv(out / "compare_loss.csv")
    assert rows[0] == ["sweep_var", "beta", "W_L", "W_D"]
    assert len(rows) == 6
    assert all(float(r[3]) <= float(r[2]) for r in rows[1:])


def test_threshold(tmp_path):
    cfg = write(tmp_path, "t.json", {
        "params": video_params(c0=0.9).to_dict(),
        "capacity_units": 7061,
        "epsilon": [1e-3, 1e-6],
        "lambda2_grid": [0.7],
    })
    out = tmp_path / "th"
    assert cli.run(["threshold", "--config", cfg, "--out", str(out)]) == 0
    rows = read_csv(out / "threshold.csv")
    assert rows[0][:4] == ["epsilon", "lambda2", "alpha_eps", "pi_minus_eps"]
    assert len(rows) == 3 and all(r[-1] == "ok" for r in rows[1:])
    assert "approximation" in " ".join(check_manifest(out)["notes"])


@pytest.fixture(scope="module")
def figures(tmp_path_factory):
    out = tmp_path_factory.mktemp("figs")
    assert cli.run(["figures", "--out", str(out)]) == 0
    return out


def test_figures(figures):
    rows = read_csv(figures / "fig1_histogram.csv")[1:]
    mean = sum(int(n) * float(p) for n, p in rows)
    assert mean == pytest.approx(8.04819, rel=1e-3)
    for name in ("fig2a", "fig2b"):
        assert all(float(r[3]) <= float(r[2]) for r in read_csv(figures / f"{name}.csv")[1:])
    assert len(read_csv(figures / "fig3.csv")) == 1 + 9 * 4
    assert len(read_csv(figures / "fig4.csv")) == 1 + 3 * 9
    manifest = check_manifest(figures)
    assert set(manifest["config"]) == set(cli.FIGURES)


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, "v.json", video_params().to_dict())
    res = subprocess.run(
        [sys.executable, "-m", "downgrading", "validate", "--config", cfg, "--out", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0
    report = json.loads((tmp_path / "o" / "validate.json").read_text())["report"]
    assert report["R"] and report["R1"] and report["R2"]
