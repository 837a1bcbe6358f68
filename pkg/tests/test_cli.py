import json
import os
import subprocess
import sys

import pytest

CLI = [sys.executable, "-m", "covindex.cli"]


def run_cli(args, env_extra=None):
    env = dict(os.environ)
    env.setdefault("COVINDEX_THREADS", "1")
    if env_extra:
        env.update(env_extra)
    return subprocess.run(CLI + args, capture_output=True, text=True, env=env)


def test_theta_upper_csv_with_slope_footer(tmp_path):
    out = tmp_path / "theta.csv"
    res = run_cli(["theta-upper", "--space", "l2", "--dim", "64", "--k", "1",
                   "--n", "2,4,8,16", "--seed", "7", "--out", str(out)])
    assert res.returncode == 0, res.stderr
    text = out.read_text()
    lines = text.splitlines()
    assert lines[0].startswith("# config:")
    assert lines[1].startswith("# config_hash:")
    assert lines[2] == "study,space,N,k,n,upper,lower,kind,seed,notes"
    data_rows = [l for l in lines[3:] if l and not l.startswith("#")]
    assert len(data_rows) == 4
    assert any(l.startswith("# slope:") for l in lines)


def test_unknown_space_is_config_error():
    res = run_cli(["theta-upper", "--space", "tsirelson", "--dim", "8"])
    assert res.returncode == 2
    assert "config-error" in res.stderr
    assert len(res.stderr.strip().splitlines()) == 1


def test_bad_flag_exits_2():
    res = run_cli(["theta-upper", "--does-not-exist", "1"])
    assert res.returncode == 2


def test_cover_build_and_verify_roundtrip(tmp_path):
    cov_path = tmp_path / "cover.json"
    res = run_cli(["cover-build", "--space", "l2", "--dim", "16",
                   "--family", "alternating", "--n", "2",
                   "--out", str(cov_path)])
    assert res.returncode == 0, res.stderr
    doc = json.loads(cov_path.read_text())
    assert len(doc["pieces"]) == 4

    res = run_cli(["cover-verify", "--cover-file", str(cov_path),
                   "--samples", "5000", "--out", str(tmp_path / "v.json")])
    assert res.returncode == 0, res.stderr
    report = json.loads((tmp_path / "v.json").read_text())
    assert report["certificate"]["misses"] == 0


def test_cover_verify_failure_exit_code(tmp_path):
    # hand-build a gapped two-piece cover
    gap = {
        "space": {"dim": 2, "blocks": [[0, 1], [1, 1]], "inner_p": 2.0,
                  "outer_q": 2.0, "lower_c": 1.0, "upper_C": 1.0},
        "pieces": [
            {"shape": "intersection", "parts": [
                {"shape": "norm_ball", "center": 0.0, "radius": 1.0},
                {"shape": "halfspace", "normal": [1.0, 0.0], "offset": -0.1}]},
            {"shape": "intersection", "parts": [
                {"shape": "norm_ball", "center": 0.0, "radius": 1.0},
                {"shape": "halfspace", "normal": [-1.0, 0.0], "offset": -0.1}]},
        ],
        "provenance": {"family": "gapped"},
    }
    path = tmp_path / "gap.json"
    path.write_text(json.dumps(gap))
    res = run_cli(["cover-verify", "--cover-file", str(path),
                   "--samples", "4000", "--out", str(tmp_path / "g.json")])
    assert res.returncode == 3
    report = json.loads((tmp_path / "g.json").read_text())
    assert report["certificate"]["kind"] == "failed"
    assert "witness" in report["certificate"]


def test_gz_overflow_recorded(tmp_path):
    out = tmp_path / "gz.csv"
    res = run_cli(["gz", "--space", "linf", "--dim", "16", "--eps", "0.9",
                   "--k", "2", "--cap", "16", "--cloud", "64",
                   "--out", str(out)])
    assert res.returncode == 0, res.stderr
    assert "overflow" in out.read_text()


def test_renorm_check_identity(tmp_path):
    res = run_cli(["renorm-check", "--space", "l2", "--dim", "16",
                   "--n", "4", "--k", "1", "--lam", "1.0",
                   "--out", str(tmp_path / "r.csv")])
    assert res.returncode == 0, res.stderr
    assert "pass" in (tmp_path / "r.csv").read_text()


def test_moduli_json_format(tmp_path):
    out = tmp_path / "m.json"
    res = run_cli(["moduli", "--space", "l1", "--dim", "32", "--k", "1",
                   "--eps", "0.5", "--format", "json", "--out", str(out)])
    assert res.returncode == 0, res.stderr
    doc = json.loads(out.read_text())
    assert doc["payload"]["delta_bar"][0] == pytest.approx(0.5, abs=0.02)


def test_determinism_across_runs_and_threads(tmp_path):
    args = ["theta-lower", "--space", "l2", "--dim", "8", "--n", "2,3",
            "--k", "1", "--corpus", "6", "--seed", "11"]
    outs = []
    for i, threads in enumerate(("1", "8", "1")):
        path = tmp_path / f"run{i}.csv"
        res = run_cli(args + ["--out", str(path)],
                      env_extra={"COVINDEX_THREADS": threads})
        assert res.returncode == 0, res.stderr
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_run_config_file_executes_and_rejects_unknown_fields(tmp_path):
    cfg = {"command": "moduli", "space": "l2", "dim": 16, "seed": 3,
           "params": {"eps": "1.0", "k": 1}}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "out.csv"
    res = run_cli(["run", "--config", str(path), "--out", str(out)])
    assert res.returncode == 0, res.stderr
    direct = tmp_path / "direct.csv"
    res2 = run_cli(["moduli", "--space", "l2", "--dim", "16", "--seed", "3",
                    "--eps", "1.0", "--k", "1", "--out", str(direct)])
    assert res2.returncode == 0
    assert out.read_bytes() == direct.read_bytes()

    cfg["banach"] = True
    path.write_text(json.dumps(cfg))
    res3 = run_cli(["run", "--config", str(path)])
    assert res3.returncode == 2
    assert "unknown config fields" in res3.stderr

    cfg.pop("banach")
    cfg["params"] = {"eps": "1.0", "k": 1, "nonsense": 5}
    path.write_text(json.dumps(cfg))
    res4 = run_cli(["run", "--config", str(path)])
    assert res4.returncode == 2


def test_config_hash_embedded_and_stable(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        res = run_cli(["moduli", "--space", "l2", "--dim", "16", "--k", "1",
                       "--eps", "1.0", "--seed", "3", "--out", str(path)])
        assert res.returncode == 0
    assert a.read_bytes() == b.read_bytes()
    assert "# config_hash:" in a.read_text()
