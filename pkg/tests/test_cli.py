"""Tests for the command-line interface."""

import numpy as np
import pytest

from simplel.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


CONFIG_TEXT = """
[tiny]
problem = diag:s=2,mu=0.25,n=80
noise_levels = 0.01, 0.1
runs_per_level = 2
rules = simple-l, qo
"""


class TestGen:
    def test_writes_and_echoes_once(self, capsys, tmp_path):
        target = tmp_path / "problem.txt"
        code, out, _ = run_cli(capsys, "gen", "--problem", "diag:s=1,p=1.5,n=6",
                               "--out", str(target))
        assert code == 0
        assert target.exists()
        assert out.splitlines().count(str(target)) == 1

    def test_generated_file_usable_as_input(self, capsys, tmp_path):
        target = tmp_path / "problem.txt"
        run_cli(capsys, "gen", "--problem", "diag:s=1,p=1.5,n=50",
                "--out", str(target))
        code, out, _ = run_cli(capsys, "select", "--problem", f"@{target}",
                               "--noise", "0.01", "--rule", "simple-l",
                               "--seed", "3")
        assert code == 0
        assert out.startswith("alpha_star=")


class TestSelect:
    def test_prints_alpha_and_ratio(self, capsys):
        code, out, _ = run_cli(capsys, "select", "--problem",
                               "diag:s=2,mu=0.25,n=100", "--noise", "0.01",
                               "--rule", "simple-l", "--seed", "7")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("alpha_star=")
        assert lines[1].startswith("J=")
        assert float(lines[1].split("=")[1]) >= 1.0

    def test_repeat_identical(self, capsys):
        args = ("select", "--problem", "diag:s=2,mu=0.25,n=100", "--noise",
                "0.01", "--rule", "qo", "--seed", "11")
        _, out1, _ = run_cli(capsys, *args)
        _, out2, _ = run_cli(capsys, *args)
        assert out1 == out2

    def test_missing_seed_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["select", "--problem", "diag:s=2,mu=0.25,n=100",
                  "--noise", "0.01", "--rule", "qo"])
        assert exc.value.code == 2
        assert "--seed" in capsys.readouterr().err

    def test_bad_problem_spec_exit_2(self, capsys):
        code, _, err = run_cli(capsys, "select", "--problem", "nope:n=3",
                               "--noise", "0.01", "--rule", "qo", "--seed", "1")
        assert code == 2
        assert "error" in err


class TestCurve:
    def test_writes_csvs(self, capsys, tmp_path):
        out_dir = tmp_path / "curves"
        code, out, _ = run_cli(capsys, "curve", "--problem",
                               "diag:s=2,mu=0.25,n=60", "--noise", "0.05",
                               "--seed", "2", "--rules", "simple-l,qo",
                               "--out", str(out_dir))
        assert code == 0
        emitted = out.strip().splitlines()
        assert str(out_dir / "path.csv") in emitted
        assert str(out_dir / "error.csv") in emitted
        assert str(out_dir / "rule_simple-l.csv") in emitted
        assert str(out_dir / "rule_qo.csv") in emitted
        assert len(emitted) == len(set(emitted))

    def test_grid_flag(self, capsys, tmp_path):
        out_dir = tmp_path / "curves"
        code, out, _ = run_cli(capsys, "curve", "--problem",
                               "diag:s=1,p=1.5,n=20", "--noise", "0.05",
                               "--seed", "2", "--grid", "1e-4,1,17",
                               "--rules", "simple-l", "--out", str(out_dir))
        assert code == 0
        lines = (out_dir / "path.csv").read_text().strip().splitlines()
        assert len(lines) == 18


class TestDiagnose:
    def test_prints_constants(self, capsys):
        code, out, _ = run_cli(capsys, "diagnose", "--problem",
                               "diag:s=2,mu=0.25,n=80", "--noise", "0.01",
                               "--seed", "5")
        assert code == 0
        keys = [line.split("=")[0] for line in out.strip().splitlines()]
        assert keys == ["mc1", "mc2", "reg1", "reg2"]

    def test_writes_csvs(self, capsys, tmp_path):
        out_dir = tmp_path / "diag"
        code, out, _ = run_cli(capsys, "diagnose", "--problem",
                               "diag:s=2,mu=0.25,n=80", "--noise", "0.01",
                               "--seed", "5", "--out", str(out_dir))
        assert code == 0
        assert (out_dir / "condition_mc2.csv").exists()


class TestBench:
    def test_end_to_end(self, capsys, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(CONFIG_TEXT)
        out_dir = tmp_path / "out"
        code, out, err = run_cli(capsys, "bench", "--config", str(cfg),
                                 "--seed", "42", "--out", str(out_dir))
        assert code == 0
        emitted = out.strip().splitlines()
        assert str(out_dir / "tiny_raw.csv") in emitted
        assert str(out_dir / "tiny_report.md") in emitted
        assert str(out_dir / "tiny_curves.svg") in emitted
        assert len(emitted) == len(set(emitted))
        assert "running experiment" in err

    def test_seed_flag_controls_output(self, capsys, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(CONFIG_TEXT)
        out_a, out_b, out_c = (tmp_path / x for x in ("a", "b", "c"))
        run_cli(capsys, "bench", "--config", str(cfg), "--seed", "1",
                "--out", str(out_a))
        run_cli(capsys, "bench", "--config", str(cfg), "--seed", "1",
                "--out", str(out_b))
        run_cli(capsys, "bench", "--config", str(cfg), "--seed", "2",
                "--out", str(out_c))
        raw_a = (out_a / "tiny_raw.csv").read_bytes()
        assert raw_a == (out_b / "tiny_raw.csv").read_bytes()
        assert raw_a != (out_c / "tiny_raw.csv").read_bytes()


class TestRate:
    def test_prints_slope(self, capsys):
        code, out, _ = run_cli(capsys, "rate", "--problem",
                               "diag:s=2,mu=0.25,n=300", "--rule", "simple-l",
                               "--levels", "1e-4,1e-3,1e-2,1e-1", "--runs", "2",
                               "--seed", "3")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("slope=")
        assert lines[1].startswith("intercept=")
        slope = float(lines[0].split("=")[1])
        assert 0.05 < slope < 1.0

    def test_too_few_levels_exit_2(self, capsys):
        code, _, err = run_cli(capsys, "rate", "--problem",
                               "diag:s=2,mu=0.25,n=100", "--rule", "simple-l",
                               "--levels", "1e-3,1e-2", "--seed", "3")
        assert code == 2
        assert "levels" in err


def test_unknown_command_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
