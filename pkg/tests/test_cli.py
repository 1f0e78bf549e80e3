import json

import numpy as np
import pytest

from bld_kaporin.cli import run
from bld_kaporin.matio import SparseSymMatrix, write_matrix_market


@pytest.fixture
def mtx_path(tmp_path):
    A = SparseSymMatrix.from_dense(np.array([[4.0, 1.0, 0.0], [1.0, 3.0, 0.5], [0.0, 0.5, 2.0]]))
    path = tmp_path / "small.mtx"
    write_matrix_market(A, path)
    return path


class TestExitCodes:
    def test_unknown_subcommand(self, capsys):
        assert run(["frobnicate"]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_unknown_flag_writes_nothing(self, tmp_path, capsys):
        out = tmp_path / "x.csv"
        rc = run(["sweep-alpha", "--definitely-not-a-flag", "--out", str(out)])
        assert rc == 1
        assert not out.exists()

    def test_missing_matrix_source(self, capsys):
        assert run(["info"]) == 1

    def test_numerical_error_is_two(self, tmp_path):
        bad = tmp_path / "indef.mtx"
        bad.write_text(
            "%%MatrixMarket matrix coordinate real symmetric\n"
            "2 2 3\n1 1 1.0\n2 1 2.0\n2 2 1.0\n"
        )
        assert run(["precondition", "--matrix", str(bad), "--factor", "ic0"]) == 2

    def test_parse_error_is_two(self, tmp_path):
        bad = tmp_path / "broken.mtx"
        bad.write_text("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n9 9 1.0\n")
        assert run(["info", "--matrix", str(bad)]) == 2


class TestInfo:
    def test_reports_matrix_facts(self, mtx_path, capsys):
        assert run(["info", "--matrix", str(mtx_path)]) == 0
        out = capsys.readouterr().out
        assert "order            3" in out
        assert "nnz (lower)      5" in out
        assert "positive definite True" in out


class TestSweepAlpha:
    def test_writes_csv_and_json(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        rc = run([
            "sweep-alpha", "--synthetic", "network", "--n", "80", "--seed", "1",
            "--rank", "8", "--out", str(out),
        ])
        assert rc == 0
        header = out.read_text().splitlines()[0]
        assert header == "alpha,kappa2,d_ld,ln_k"
        summary = json.loads((tmp_path / "sweep.csv.json").read_text())
        assert summary["alpha_star_in_interval"]

    def test_seed_determinism(self, tmp_path):
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{tag}.csv"
            assert run([
                "sweep-alpha", "--synthetic", "network", "--n", "60", "--seed", "9",
                "--rank", "6", "--out", str(out),
            ]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestSolveVerifyEstimate:
    def test_solve_overlay(self, tmp_path, capsys):
        out = tmp_path / "ov.csv"
        rc = run([
            "solve", "--synthetic", "network", "--n", "90", "--seed", "2",
            "--rank", "9", "--out", str(out),
        ])
        assert rc == 0
        assert out.exists()
        assert "iterations" in capsys.readouterr().out

    def test_verify_all_pass(self, tmp_path, capsys):
        out = tmp_path / "verify.json"
        rc = run(["verify", "--trials", "4", "--seed", "7", "--out", str(out)])
        assert rc == 0
        report = json.loads(out.read_text())
        assert report["violations"] == []

    def test_estimate_prints_comparison(self, capsys):
        rc = run([
            "estimate", "--synthetic", "network", "--n", "70", "--seed", "3",
            "--rank", "7", "--m", "20", "--nv", "10",
        ])
        assert rc == 0
        assert "ln K exact" in capsys.readouterr().out

    def test_precondition_summary(self, mtx_path, capsys):
        rc = run(["precondition", "--matrix", str(mtx_path), "--factor", "exact", "--rank", "1"])
        assert rc == 0
        assert "alpha_star" in capsys.readouterr().out

    def test_precondition_tsvd_route(self, tmp_path, capsys):
        out = tmp_path / "p.json"
        rc = run([
            "precondition", "--synthetic", "network", "--n", "40", "--seed", "8",
            "--rank", "4", "--truncation", "tsvd", "--out", str(out),
        ])
        assert rc == 0
        assert json.loads(out.read_text())["truncation"] == "tsvd"

    def test_threads_env_fallback(self, monkeypatch, capsys):
        monkeypatch.setenv("BLD_KAPORIN_THREADS", "2")
        assert run(["verify", "--trials", "3", "--seed", "4"]) == 0

    def test_spec_json_overrides_flags(self, tmp_path, capsys):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"synthetic": "network", "n": 50, "seed": 6, "rank": 5}))
        rc = run(["sweep-alpha", "--spec", str(spec)])
        assert rc == 0
        assert "alpha*" in capsys.readouterr().out
