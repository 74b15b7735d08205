import json

import numpy as np
import pytest

from fbmloops import io
from fbmloops.cli import run


@pytest.fixture
def loop_file(tmp_path):
    p = tmp_path / "paths.frlp"
    rc = run(["sample", "--geometry", "circle", "--T", "1", "--H", "0.25", "--d", "2",
              "--N", "128", "--n", "200", "--seed", "7", "--out", str(p)])
    assert rc == 0
    return p


def test_sample_writes_frlp(loop_file):
    assert loop_file.read_bytes()[:4] == b"FRLP"
    ens, meta = io.load_ensemble(loop_file, with_meta=True)
    assert ens.paths.shape == (200, 128, 2)
    assert meta["config"]["seed"] == 7


def test_loctime_record(loop_file, tmp_path, capsys):
    out = tmp_path / "lt.json"
    per = tmp_path / "lt.csv"
    assert run(["loctime", "--in", str(loop_file), "--eps", "0.01", "--out", str(out),
                "--per-path", str(per)]) == 0
    doc = json.loads(out.read_text())
    rec = doc["estimates"][0]
    for key in ("quantity", "H", "d", "T", "eps", "delta", "n_samples", "grid_N", "mean",
                "std_error", "per_path_file"):
        assert key in rec
    assert rec["n_samples"] == 200 and rec["grid_N"] == 128
    assert doc["config"]["eps"] == "0.01"
    assert doc["config"]["source"]["seed"] == 7
    assert len(per.read_text().splitlines()) == 201


def test_verify_pd_passes_with_expected_failure(tmp_path):
    out = tmp_path / "pd.json"
    summary = tmp_path / "pd.csv"
    rc = run(["verify", "pd", "--T", "1", "--N", "64", "--H", "0.2,0.5,0.7", "--out", str(out),
              "--summary", str(summary)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["verdict"] == "pass"
    assert len(summary.read_text().splitlines()) == 4


def test_verify_failure_exit_code(tmp_path):
    # the lnd experiment cannot pass at H > 1/2: the construction is rejected outright
    assert run(["verify", "lnd", "--H", "0.7", "--out", str(tmp_path / "x.json")]) == 1


def test_unknown_flag_exit_one(capsys):
    assert run(["verify", "pd", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err


def test_missing_required(capsys):
    assert run(["loctime", "--eps", "0.01"]) == 1


def test_numeric_error_exit_two(tmp_path):
    assert run(["sample", "--H", "0.7", "--d", "1", "--N", "32", "--n", "2",
                "--out", str(tmp_path / "x.frlp")]) == 2
    assert not (tmp_path / "x.frlp").exists()
    assert run(["moments", "--H", "0.5", "--d", "2", "--eps", "0"]) == 2


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"H": "0.3", "d": 1, "N": 16, "n": 5, "seed": 3}))
    out = tmp_path / "a.frlp"
    assert run(["sample", "--config", str(cfg), "--seed", "4", "--out", str(out)]) == 0
    ens, meta = io.load_ensemble(out, with_meta=True)
    assert ens.spec.hurst == 0.3 and ens.seed.master_seed == 4 and ens.n_samples == 5


def test_threads_do_not_change_output(tmp_path, loop_file):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(["--threads", "1", "loctime", "--in", str(loop_file), "--eps", "0.01,0.1",
                "--out", str(a)]) == 0
    assert run(["--threads", "2", "loctime", "--in", str(loop_file), "--eps", "0.01,0.1",
                "--out", str(b)]) == 0
    ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
    assert ra["estimates"] == rb["estimates"]


def test_edwards_and_star(tmp_path, loop_file):
    out = tmp_path / "ed.json"
    assert run(["edwards", "--in", str(loop_file), "--eps", "0.01", "--g", "0,1",
                "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["edwards"][0]["normalizer"] == 1.0
    assert {"g", "normalizer", "normalizer_stderr", "ess", "observables"} <= set(doc["edwards"][1])
    sp = tmp_path / "star.frlp"
    assert run(["sample", "--geometry", "star", "--lengths", "1,1", "--H", "0.5", "--d", "2",
                "--N", "8", "--n", "50", "--out", str(sp)]) == 0
    so = tmp_path / "star.json"
    assert run(["star", "--in", str(sp), "--eps", "0.02", "--out", str(so)]) == 0
    quantities = [r["quantity"] for r in json.loads(so.read_text())["estimates"]]
    assert quantities == ["L_kl", "L_k,c", "L_k,c", "L(g)"]
    assert run(["star", "--in", str(loop_file), "--eps", "0.02"]) == 1


def test_moments(tmp_path):
    out = tmp_path / "m.json"
    assert run(["moments", "--H", "0.25", "--d", "2", "--eps", "0", "--out", str(out)]) == 0
    rec = json.loads(out.read_text())["moments"][0]
    assert rec["E_L"] == pytest.approx(0.225079, abs=5e-7)


def test_csv_sample(tmp_path):
    out = tmp_path / "p.csv"
    assert run(["sample", "--N", "8", "--n", "3", "--d", "2", "--out", str(out)]) == 0
    ens = io.load_ensemble(out)
    assert ens.paths.shape == (3, 8, 2) and np.all(ens.paths[:, 0] == 0)
