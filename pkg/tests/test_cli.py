import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from copmm.bilinear import save_tensor, strassen_tensor
from copmm.cli import BENCH_COLUMNS, main
from copmm.matrix import read_fqmx

DEMOS = Path(__file__).resolve().parents[1] / "demos"


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return path


def test_threshold_comparison_rows_T2(capsys):
    assert main(["threshold", "--table1", "--T", "2"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    row = rows[0]
    assert (row["m"], row["poly_V1"], row["poly_V3"], row["poly_min"], row["lagrange"]) == ("2", "17", "19", "17", "17")


def test_threshold_comparison_rows_all_T(capsys):
    assert main(["threshold", "--table1"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 9


def test_threshold_single(capsys):
    assert main(["threshold", "--family", "lagrange", "--m", "5", "--p", "5", "--n", "5", "--T", "1", "--R", "98", "--json"]) == 0
    assert json.loads(capsys.readouterr().out)[0]["K"] == 197
    assert main(["threshold", "--family", "poly", "--T", "1", "--json", "--N", "3"]) == 0
    out = json.loads(capsys.readouterr().out)[0]
    assert out["K"] == 3 and out["P_u"] == "3" and out["P_d"] == "3"


def test_threshold_missing_R(capsys):
    assert main(["threshold", "--family", "lagrange", "--m", "2", "--p", "2", "--n", "2"]) == 2
    assert "--R" in capsys.readouterr().err


def test_run_v1_222_with_oracle(tmp_path, capsys):
    out = tmp_path / "t.json"
    assert main(["run", str(DEMOS / "psmm_v1_222.json"), "--out", str(out), "--verify-oracle"]) == 0
    assert "oracle=match" in capsys.readouterr().out
    transcript = json.loads(out.read_text())
    assert transcript["K"] == 17
    cost = json.loads((tmp_path / "t.cost.json").read_text())
    assert cost["P_u"] == "17/4" and cost["P_d"] == "17/4"
    assert read_fqmx(tmp_path / "t.C.fqmx").shape == (64, 64)


def test_run_stragglers(tmp_path):
    assert main(["run", str(DEMOS / "stragglers.json"), "--out", str(tmp_path / "t.json"), "--verify-oracle"]) == 0


def test_run_insufficient(tmp_path, capsys):
    assert main(["run", str(DEMOS / "insufficient.json"), "--out", str(tmp_path / "t.json")]) == 3
    assert "insufficient responsive workers" in capsys.readouterr().err


def test_run_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["run", str(DEMOS / "fpmm.json"), "--out", str(tmp_path / name / "t.json")]) == 0
    assert (tmp_path / "a" / "t.json").read_bytes() == (tmp_path / "b" / "t.json").read_bytes()


def test_run_padding(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", {"problem": "PSMM", "m": 2, "p": 2, "n": 2, "lambda": 5, "omega": 3, "gamma": 7, "V": 2})
    assert main(["run", str(cfg), "--out", str(tmp_path / "t.json")]) == 2
    assert "does not divide" in capsys.readouterr().err
    assert main(["run", str(cfg), "--out", str(tmp_path / "t.json"), "--pad", "--verify-oracle"]) == 0
    assert read_fqmx(tmp_path / "t.C.fqmx").shape == (5, 7)


def test_run_rejects_unknown_field(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", {"problem": "PSMM", "threads": 4})
    assert main(["run", str(cfg)]) == 2
    assert "threads" in capsys.readouterr().err


def test_run_rejects_bad_theta(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", {"problem": "PSMM", "V": 2, "theta": 3})
    assert main(["run", str(cfg), "--out", str(tmp_path / "t.json")]) == 2
    assert "theta" in capsys.readouterr().err


def test_run_with_tensor_file(tmp_path):
    save_tensor(tmp_path / "s.json", strassen_tensor())
    cfg = write(tmp_path, "c.json", {"problem": "SMM", "family": "lagrange", "m": 2, "p": 2, "n": 2, "tensor": "s.json", "T": 2})
    assert main(["run", str(cfg), "--out", str(tmp_path / "t.json"), "--verify-oracle"]) == 0


def test_audit_pass_fail_refuse(tmp_path):
    report = tmp_path / "r.json"
    assert main(["audit", "--mode", "privacy", str(DEMOS / "audit_privacy.json"), "--report", str(report)]) == 0
    assert json.loads(report.read_text())["ok"] is True
    assert main(["audit", "--mode", "privacy", str(DEMOS / "audit_mutation.json"), "--report", str(report)]) == 4
    assert json.loads(report.read_text())["ok"] is False
    assert main(["audit", "--mode", "privacy", str(DEMOS / "audit_large.json"), "--report", str(report)]) == 2
    assert json.loads(report.read_text())["refused"] is True


def test_audit_security_and_structure(tmp_path):
    cfg = write(tmp_path, "s.json", {"problem": "PSMM", "modulus": 3, "N": 2, "V": 2, "colluders": [2]})
    assert main(["audit", "--mode", "security", str(cfg)]) == 0
    assert main(["audit", "--mode", "structure", "--report", str(tmp_path / "r.json")]) == 0
    bad = write(tmp_path, "b.json", {"alphas": [1, 2, 2, 4], "T": 2, "exponents": [4, 5]})
    assert main(["audit", "--mode", "structure", str(bad)]) == 4


def test_bench_header_and_rows(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["bench", "--sizes", "4,8", "--families", "poly,lagrange", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert tuple(rows[0]) == BENCH_COLUMNS
    assert len(rows) == 5
    by = {(r[1], int(r[2])): r for r in rows[1:]}
    col = BENCH_COLUMNS.index("encode_ops")
    for fam in ("poly", "lagrange"):
        assert int(by[fam, 8][col]) > int(by[fam, 4][col])


def test_bench_empty_sizes(capsys):
    assert main(["bench", "--sizes", ""]) == 2
    assert "--sizes" in capsys.readouterr().err


def test_verify_tensor(tmp_path, capsys):
    assert main(["verify-tensor", "strassen", "--trials", "20"]) == 0
    assert json.loads(capsys.readouterr().out)["passed"] is True
    path = tmp_path / "t.json"
    save_tensor(path, strassen_tensor())
    obj = json.loads(path.read_text())
    obj["c"][0][0][0] = 3
    path.write_text(json.dumps(obj))
    assert main(["verify-tensor", str(path), "--trials", "5"]) == 4


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "copmm", "threshold", "--m", "2", "--p", "2", "--n", "2", "--T", "2", "--R", "7"], capture_output=True, text=True)
    assert proc.returncode == 0 and "K=17" in proc.stdout
