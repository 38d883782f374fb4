"""Tests for the experiment harness, aggregation, and report rendering."""

import numpy as np
import pytest

from simplel import (ExperimentConfig, NumericalError, ParameterError,
                     RateCheckSpec, add_noise, build_problem, efficiency_ratio,
                     error_curve, make_diagonal_problem, rate_regression,
                     render_report, run_experiment)
from simplel.bench import (aggregate_medians, load_experiment_configs,
                           lower_median, noise_class, parse_problem_spec,
                           read_records_csv, write_records_csv)
from simplel.tikhonov import AlphaGrid

SMALL_CONFIG = dict(problem="diag:s=2,mu=0.25,n=120",
                    noise_levels=(0.001, 0.05, 0.5),
                    runs_per_level=2,
                    rules=("simple-l", "qo", "l-curve"),
                    seed_base=42)


class TestSpecParsing:
    def test_diag_spec(self):
        spec = parse_problem_spec("diag:s=2,mu=0.25,n=1000")
        assert spec == {"kind": "diag", "s": "2", "mu": "0.25", "n": "1000"}

    def test_file_spec(self):
        assert parse_problem_spec("@foo.txt") == {"kind": "file", "path": "foo.txt"}

    def test_unknown_kind(self):
        with pytest.raises(ParameterError):
            parse_problem_spec("fourier:n=8")

    def test_build_diag_with_p(self):
        problem = build_problem("diag:s=1,p=1.5,n=12")
        assert problem.n == 12
        assert problem.singular_values[1] == 0.5

    def test_build_rejects_unknown_keys(self):
        with pytest.raises(ParameterError):
            build_problem("diag:s=1,p=1.5,n=12,bogus=3")

    def test_build_heat_and_radon(self):
        assert build_problem("heat:n=12").kind == "heat"
        assert build_problem("radon:n=4,angles=4,rays=4").kind == "radon"


class TestNoiseClasses:
    @pytest.mark.parametrize("level,expected", [
        (0.0001, "small"), (0.001, "small"), (0.01, "medium"), (0.05, "medium"),
        (0.1, "large"), (0.2, "large"), (0.5, "fifty")])
    def test_canonical_levels(self, level, expected):
        assert noise_class(level) == expected

    def test_lower_median(self):
        assert lower_median([3.0, 1.0, 2.0, 4.0]) == 2.0
        assert lower_median([5.0]) == 5.0


class TestEfficiencyRatio:
    def test_selected_is_minimum(self):
        problem = make_diagonal_problem(60, 1.0, 1.1)
        data = add_noise(problem, 0.01, 0.6, seed=1)
        errors = error_curve(data, AlphaGrid.default_for(problem, 50))
        assert efficiency_ratio(errors.min_total, errors) == 1.0

    def test_plain_division(self):
        assert efficiency_ratio(1.0, np.array([0.5, 0.7])) == 2.0

    def test_zero_minimum_flagged(self):
        with pytest.raises(NumericalError):
            efficiency_ratio(1.0, np.array([0.0, 1.0]))


class TestRunExperiment:
    def test_single_record_counting(self):
        config = ExperimentConfig(problem="diag:s=2,mu=0.25,n=60",
                                  noise_levels=(0.01,), runs_per_level=1,
                                  rules=("simple-l",), seed_base=3)
        report = run_experiment(config)
        assert len(report.records) == 1
        rec = report.records[0]
        assert rec.rule == "simple-l"
        assert rec.J >= 1.0

    def test_determinism_same_seed_base(self):
        config = ExperimentConfig(**SMALL_CONFIG)
        r1 = run_experiment(config)
        r2 = run_experiment(ExperimentConfig(**SMALL_CONFIG))
        assert r1.records == r2.records

    def test_all_ratios_at_least_one(self):
        report = run_experiment(ExperimentConfig(**SMALL_CONFIG))
        assert all(rec.J >= 1.0 for rec in report.records)

    def test_medians_permutation_invariant(self):
        report = run_experiment(ExperimentConfig(**SMALL_CONFIG))
        rng = np.random.default_rng(0)
        shuffled = list(report.records)
        rng.shuffle(shuffled)
        assert aggregate_medians(shuffled) == report.medians

    def test_parallel_equals_serial(self):
        config = ExperimentConfig(**SMALL_CONFIG)
        serial = run_experiment(config, jobs=1)
        parallel = run_experiment(config, jobs=2)
        assert serial.records == parallel.records
        assert serial.medians == parallel.medians

    def test_condition_records_present(self):
        report = run_experiment(ExperimentConfig(**SMALL_CONFIG))
        assert len(report.condition_records) == 6
        for rec in report.condition_records:
            assert rec.c1 <= rec.c2 + 1e-12

    def test_convex_experiment_small(self):
        config = ExperimentConfig(problem="diag:s=1,mu=0.25,n=12",
                                  noise_levels=(0.05,), runs_per_level=1,
                                  rules=("sl-bregman", "slr-bregman", "qo-right"),
                                  seed_base=5, metric="l1", penalty="l1",
                                  grid_count=12, fista_max_iter=4000)
        report = run_experiment(config)
        assert len(report.records) == 3
        assert all(rec.J >= 1.0 for rec in report.records)

    def test_linear_rules_rejected_for_convex(self):
        with pytest.raises(ParameterError):
            ExperimentConfig(problem="diag:s=1,mu=0.25,n=12",
                             noise_levels=(0.05,), runs_per_level=1,
                             rules=("simple-l",), penalty="l1", metric="l1")

    def test_strict_metric_requires_penalty(self):
        with pytest.raises(ParameterError):
            ExperimentConfig(problem="diag:s=1,mu=0.25,n=12",
                             noise_levels=(0.05,), runs_per_level=1,
                             rules=("simple-l",), metric="strict")


class TestRecordsCsv:
    def test_round_trip(self, tmp_path):
        report = run_experiment(ExperimentConfig(**SMALL_CONFIG))
        target = tmp_path / "raw.csv"
        write_records_csv(report.records, target)
        back = read_records_csv(target)
        assert tuple(back) == report.records

    def test_report_regeneration_from_csv(self, tmp_path):
        report = run_experiment(ExperimentConfig(**SMALL_CONFIG))
        target = tmp_path / "raw.csv"
        write_records_csv(report.records, target)
        assert aggregate_medians(read_records_csv(target)) == report.medians


@pytest.fixture(scope="module")
def report():
    return run_experiment(ExperimentConfig(**SMALL_CONFIG))


class TestRendering:
    def test_markdown_layout(self, report):
        text = render_report(report, "markdown")
        assert "| noise class | simple-l | qo | l-curve |" in text
        assert "| small |" in text
        assert "| 50% |" in text
        assert "Notes" in text

    def test_markdown_single_record(self):
        config = ExperimentConfig(problem="diag:s=2,mu=0.25,n=60",
                                  noise_levels=(0.01,), runs_per_level=1,
                                  rules=("simple-l",), seed_base=3)
        text = render_report(run_experiment(config), "markdown")
        ratio_section = text.split("## Measured condition constants")[0]
        data_rows = [line for line in ratio_section.splitlines()
                     if line.startswith("| medium")]
        assert len(data_rows) == 1

    def test_csv_format(self, report):
        text = render_report(report, "csv")
        lines = text.strip().splitlines()
        assert lines[0] == "level,seed,rule,alpha_star,interior,J,selected_error,min_error"
        assert len(lines) == 1 + len(report.records)

    def test_svg_renders_and_is_deterministic(self, report):
        svg1 = render_report(report, "svg")
        svg2 = render_report(report, "svg")
        assert svg1 == svg2
        assert svg1.startswith("<svg")
        assert "polyline" in svg1

    def test_unknown_format(self, report):
        with pytest.raises(ParameterError):
            render_report(report, "pdf")

    def test_empty_report_rejected(self, report):
        from dataclasses import replace
        with pytest.raises(ParameterError):
            render_report(replace(report, records=()), "markdown")

    def test_radon_note_flagged(self):
        config = ExperimentConfig(problem="radon:n=4,angles=6,rays=6",
                                  noise_levels=(0.05,), runs_per_level=1,
                                  rules=("simple-l",), seed_base=1,
                                  grid_count=40)
        text = render_report(run_experiment(config), "markdown")
        assert "analogue" in text


class TestConfigFile:
    def test_load_sections(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("""
[table1]
problem = diag:s=2,mu=0.25,n=120
noise_levels = 0.001, 0.05
runs_per_level = 2
rules = simple-l, qo
seed_base = 7

[convex1]
problem = diag:s=1,mu=0.25,n=12
noise_levels = 0.05
runs_per_level = 1
rules = sl-bregman
penalty = l1
metric = l1
grid_count = 8
fista_max_iter = 2000
""")
        configs = load_experiment_configs(cfg)
        assert [name for name, _ in configs] == ["table1", "convex1"]
        assert configs[0][1].rules == ("simple-l", "qo")
        assert configs[1][1].penalty == "l1"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParameterError):
            load_experiment_configs(tmp_path / "nope.cfg")


class TestRateRegression:
    def test_validation(self):
        with pytest.raises(ParameterError):
            RateCheckSpec(problem="diag:s=2,mu=0.25,n=100", rule="simple-l",
                          noise_levels=(0.01, 0.02, 0.04))
        with pytest.raises(ParameterError):
            RateCheckSpec(problem="diag:s=2,mu=0.25,n=100", rule="simple-l",
                          noise_levels=(0.01, 0.02, 0.04, 0.05))

    def test_oracle_slope_reasonable(self):
        spec = RateCheckSpec(problem="diag:s=2,mu=0.25,n=400", rule="oracle",
                             noise_levels=(1e-5, 1e-4, 1e-3, 1e-2),
                             runs_per_level=3, seed_base=1)
        result = rate_regression(spec)
        assert 0.2 < result.slope < 0.5
        assert len(result.per_seed_slopes) == 3
