import csv
import io
import json
import math

import numpy as np
import pytest

from lfp import cli
from lfp import integer_forcing as itf


def run(argv, capsys=None):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def id3(tmp_path):
    p = tmp_path / "id3.json"
    p.write_text(json.dumps({"dim": 3, "rows": np.eye(3).tolist()}))
    return str(p)


# ---------------------------------------------------------------- worked examples

def test_min_identity(id3):
    code, out, _ = run(["min", "--matrix", id3, "--json"])
    assert code == 0
    rep = json.loads(out)
    assert rep["results"][0]["value"] == 1.0


def test_min_text_matrix(tmp_path):
    p = tmp_path / "q.txt"
    p.write_text("2 1\n1 2\n")
    code, out, _ = run(["min", "--matrix", str(p), "--csv"])
    assert code == 0 and float(csv_rows(out)[0]["value"]) == 2.0


def test_wishart_table_row():
    code, out, _ = run(["wishart-table", "--deltas", "0.01", "--csv"])
    assert code == 0
    row = csv_rows(out)[0]
    assert float(row["delta"]) == 0.01
    assert f"{float(row['J1']):.3g}" == "0.00499"
    assert f"{float(row['J2']):.3g}" == "0.0842"
    assert row["status"] == "PASS"


def test_snr_table_row():
    code, out, _ = run(["snr-table", "--c0", "30", "--snr", "5", "--s", "10", "--csv"])
    assert code == 0
    row = csv_rows(out)[0]
    assert float(row["s"]) == 10.0
    assert f"{float(row['delta_s']):.3g}" == "9.79e-06"
    assert float(row["lower_bound"]) == pytest.approx(0.223899, rel=1e-3)
    assert row["status"] == "PASS"


def test_human_format_rounds(id3):
    code, out, _ = run(["snr-table", "--s", "1"])
    assert code == 0
    assert "0.672" in out and "seed=0" in out


# ---------------------------------------------------------------- other commands

def test_kappa_command():
    code, out, _ = run(["kappa", "--gamma", "0.5", "--c0-direct", "4", "--json"])
    assert code == 0
    r = json.loads(out)["results"][0]
    assert r["value"] == pytest.approx(itf.kappa_d(itf.ChannelParams(0.5, 4.0)).value, rel=1e-9)


def test_spectral_bounds_command():
    code, out, _ = run(["spectral-bounds", "--delta", "0.2", "--axes", "0.5,2", "--mc-n", "4000", "--verify", "--csv"])
    assert code == 0
    rows = csv_rows(out)
    names = [r["quantity"] for r in rows]
    assert names[:3] == ["km_bounds", "cap_measure", "theorem2"]
    assert rows[-1]["status"] == "PASS"


def test_theorem3_command_exact_zero():
    code, out, _ = run(["theorem3", "--eps", "0.5", "--delta", "0.25", "--mc-n", "2000", "--json"])
    assert code == 0
    first = json.loads(out)["results"][0]
    assert first["exact_zero"] is True and first["lower"] == 0.0 and first["upper"] == 0.0


def test_chol_bounds_command(tmp_path):
    spec = tmp_path / "f.json"
    spec.write_text(json.dumps({"family": "wishart", "d": 2, "n": 2}))
    code, out, _ = run(["chol-bounds", "--density", str(spec), "--delta", "0.1", "--mc-n", "20000", "--verify", "--csv"])
    assert code == 0
    rows = csv_rows(out)
    assert float(rows[0]["lower"]) == pytest.approx(0.049, abs=6e-4)
    assert rows[1]["status"] == "PASS"


def test_if_and_mc_verify():
    code, out, _ = run(["if-verify", "--samples", "5000", "--csv"])
    assert code == 0 and all(r["status"] == "PASS" for r in csv_rows(out))
    code, out, _ = run(["mc-verify", "--samples", "5000", "--csv"])
    assert code == 0 and all(r["status"] == "PASS" for r in csv_rows(out))


# ---------------------------------------------------------------- exit codes

@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["min"],
    ["min", "--matrix", "/nonexistent/q.json"],
    ["wishart-table", "--deltas", "a,b"],
    ["snr-table", "--snr", "-1"],
    ["theorem3", "--eps", "1.5", "--delta", "0.2"],
    ["kappa", "--gamma", "0.5", "--c0-direct", "0.1"],
    ["chol-bounds", "--density", "{\"family\": \"beta\"}", "--delta", "0.1"],
    ["if-verify", "--samples", "10"],
    ["mc-verify", "--seed", "-3"],
])
def test_invalid_input_exit_code(argv, capsys):
    code, _, err = run(argv)
    assert code == 2


def test_malformed_matrix_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{\"dim\": 2, \"rows\": [[1, 2]]}")
    code, _, err = run(["min", "--matrix", str(p)])
    assert code == 2 and err.startswith("lfp: invalid input:") and err.count("\n") == 1


def test_not_positive_definite(tmp_path):
    p = tmp_path / "npd.txt"
    p.write_text("1 2\n2 1\n")
    code, _, err = run(["min", "--matrix", str(p)])
    assert code == 2 and "positive definite" in err


def test_non_convergence_exit_code(monkeypatch):
    real = itf.kappa_d

    def stalled(*a, **k):
        r = real(*a, **k)
        return itf.KappaResult(r.value, r.error_estimate, r.method, r.measure, False, r.other)

    monkeypatch.setattr(itf, "kappa_d", stalled)
    code, out, err = run(["kappa", "--gamma", "0.5", "--c0-direct", "4", "--method", "b", "--json"])
    assert code == 3
    assert "did not reach" in err
    assert json.loads(out)["converged"] is False


# ---------------------------------------------------------------- reports

def _values(rows, keys):
    return [[float(r[k]) for k in keys] for r in rows]


def test_json_and_csv_agree():
    argv = ["mc-verify", "--samples", "3000", "--seed", "11"]
    _, js, _ = run(argv + ["--json"])
    _, cs, _ = run(argv + ["--csv"])
    keys = ["delta", "J1", "J2", "frequency", "error"]
    a = _values(json.loads(js)["results"], keys)
    b = _values(csv_rows(cs), keys)
    assert a == b  # 17 significant digits round-trip exactly


def test_stochastic_replay_is_bit_identical():
    argv = ["if-verify", "--samples", "3000", "--seed", "5", "--json"]
    r1 = json.loads(run(argv)[1])
    r2 = json.loads(run(argv)[1])
    assert r1["results"] == r2["results"]
    r3 = json.loads(run(["if-verify", "--samples", "3000", "--seed", "6", "--json"])[1])
    assert r3["results"][0]["mc_estimate"] != r1["results"][0]["mc_estimate"]


def test_replay_from_report():
    _, js, _ = run(["spectral-bounds", "--delta", "0.2", "--axes", "0.5,2", "--mc-n", "2000", "--verify",
                    "--seed", "9", "--json"])
    rep = json.loads(js)
    again = json.loads(run(rep["argv"])[1])
    assert again["results"] == rep["results"] and again["seed"] == 9


def test_out_file(tmp_path):
    p = tmp_path / "rep.csv"
    code, out, _ = run(["wishart-table", "--csv", "--out", str(p)])
    assert code == 0
    assert p.read_text(encoding="utf-8") == out
    assert out.endswith("\n")


def test_threads_flag_and_env(monkeypatch):
    monkeypatch.delenv("LFP_THREADS", raising=False)
    a = json.loads(run(["mc-verify", "--samples", "2000", "--threads", "2", "--json"])[1])
    import os
    assert os.environ["LFP_THREADS"] == "2"
    monkeypatch.setenv("LFP_THREADS", "1")
    b = json.loads(run(["mc-verify", "--samples", "2000", "--json"])[1])
    assert a["results"] == b["results"]
    assert run(["mc-verify", "--threads", "0"])[0] == 2


def test_report_metadata():
    rep = cli.execute(["wishart-table", "--deltas", "0.2"])
    assert rep.command == "wishart-table" and rep.seed == 0 and rep.wall_time >= 0
    assert rep.rng["bit_generator"].startswith("Philox")
    lines = rep.to_csv().splitlines()
    assert lines[0].startswith("delta,")
    assert math.isfinite(json.loads(rep.to_json())["wall_time"])
