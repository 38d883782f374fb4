"""Command-line interface.

Subcommands map one-to-one onto library operations: ``gen`` writes a
problem file, ``curve`` dumps the per-alpha curves of one noisy dataset,
``select`` runs a single rule, ``bench`` executes experiment configs,
``diagnose`` measures the noise/regularity condition constants, and
``rate`` fits convergence-rate slopes.

Machine-readable results go to standard output (each output file path is
echoed exactly once); progress messages go to standard error. All
randomness is controlled by the ``--seed`` flag, which is required for
every stochastic command.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .bench import (ExperimentConfig, RateCheckSpec, build_problem,
                    load_experiment_configs, rate_regression, run_experiment,
                    write_records_csv)
from .errors import NumericalError, ParameterError
from .noise import ConditionVariant, add_noise, condition_constant
from .problems import save_problem
from .reporting import render_report
from .rules import RuleId, rule_curve, select_alpha
from .tikhonov import AlphaGrid, error_curve, path_quantities


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def _echo_path(path: Path) -> None:
    print(str(path))


def _parse_grid(text: str | None, problem, count_default=None):
    if text is None:
        if count_default is None:
            return AlphaGrid.default_for(problem)
        return AlphaGrid.default_for(problem, count_default)
    parts = text.split(",")
    if len(parts) != 3:
        raise ParameterError("--grid expects min,max,count")
    return AlphaGrid(float(parts[0]), float(parts[1]), int(parts[2]))


def _dataset(args):
    problem = build_problem(args.problem)
    grid = _parse_grid(args.grid, problem)
    decay = args.decay if args.decay is not None else (
        0.6 if problem.kind == "diagonal" else 0.0)
    data = add_noise(problem, args.noise, decay, args.seed)
    return problem, grid, data


def _cmd_gen(args) -> int:
    problem = build_problem(args.problem)
    out = Path(args.out)
    save_problem(problem, out)
    _echo_path(out)
    return 0


def _cmd_curve(args) -> int:
    _, grid, data = _dataset(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = path_quantities(data, grid)
    errors = error_curve(data, grid)
    target = out_dir / "path.csv"
    path.write_csv(target)
    _echo_path(target)
    target = out_dir / "error.csv"
    errors.write_csv(target)
    _echo_path(target)
    rule_names = (args.rules.split(",") if args.rules
                  else [r.value for r in RuleId])
    for name in rule_names:
        curve = rule_curve(RuleId(name.strip()), data, path, grid)
        target = out_dir / f"rule_{curve.rule.value}.csv"
        curve.write_csv(target)
        _echo_path(target)
    return 0


def _cmd_select(args) -> int:
    _, grid, data = _dataset(args)
    path = path_quantities(data, grid)
    curve = rule_curve(RuleId(args.rule), data, path, grid)
    sel = select_alpha(curve)
    errors = error_curve(data, grid)
    ratio = errors.total[sel.grid_index] / errors.min_total
    print(f"alpha_star={sel.alpha_star:.17g}")
    print(f"J={ratio:.17g}")
    print(f"interior={int(sel.interior)}")
    return 0


def _cmd_diagnose(args) -> int:
    _, grid, data = _dataset(args)
    lam = data.problem.lambdas
    reports = {}
    for variant in ConditionVariant:
        coeffs = (data.noise_coeffs if variant in (ConditionVariant.MC1,
                                                   ConditionVariant.MC2)
                  else data.problem.xdag_coeffs)
        reports[variant] = condition_constant(coeffs, lam, grid, variant)
    for variant, rep in reports.items():
        print(f"{variant.value}={rep.constant:.17g} argmax_alpha={rep.argmax_alpha:.17g}")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for variant, rep in reports.items():
            target = out_dir / f"condition_{variant.value}.csv"
            rep.write_csv(target)
            _echo_path(target)
    return 0


def _cmd_bench(args) -> int:
    configs = load_experiment_configs(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, config in configs:
        config = dataclasses.replace(config, seed_base=args.seed)
        _progress(f"running experiment [{name}] "
                  f"({len(config.noise_levels)} levels x {config.runs_per_level} runs)")
        report = run_experiment(config, jobs=args.jobs)
        target = out_dir / f"{name}_raw.csv"
        write_records_csv(report.records, target)
        _echo_path(target)
        target = out_dir / f"{name}_report.md"
        target.write_text(render_report(report, "markdown"))
        _echo_path(target)
        target = out_dir / f"{name}_curves.svg"
        target.write_text(render_report(report, "svg"))
        _echo_path(target)
    return 0


def _cmd_rate(args) -> int:
    spec = RateCheckSpec(problem=args.problem, rule=args.rule,
                         noise_levels=tuple(float(x) for x in args.levels.split(",")),
                         runs_per_level=args.runs, seed_base=args.seed,
                         decay_q=args.decay)
    result = rate_regression(spec)
    print(f"slope={result.slope:.17g}")
    print(f"intercept={result.intercept:.17g}")
    return 0


def _add_dataset_flags(parser, with_rules=False):
    parser.add_argument("--problem", required=True,
                        help="inline spec (diag:s=2,mu=0.25,n=1000 | heat:n=64 | "
                             "radon:n=8,angles=12,rays=12) or @problem-file")
    parser.add_argument("--noise", type=float, required=True,
                        help="relative noise level in (0, 1]")
    parser.add_argument("--seed", type=int, required=True,
                        help="RNG seed (controls all randomness)")
    parser.add_argument("--decay", type=float, default=None,
                        help="noise decay exponent q (default 0.6 diagonal, 0 matrix)")
    parser.add_argument("--grid", default=None, help="alpha grid as min,max,count")
    if with_rules:
        parser.add_argument("--rules", default=None, help="comma list of rules")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simplel",
        description="Heuristic regularization-parameter choice: curves, "
                    "selections, diagnostics, and benchmark experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a problem and write it to a file")
    p.add_argument("--problem", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("curve", help="write path/error/rule CSVs for one dataset")
    _add_dataset_flags(p, with_rules=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_curve)

    p = sub.add_parser("select", help="run one rule and print alpha_star and J")
    _add_dataset_flags(p)
    p.add_argument("--rule", required=True,
                   choices=[r.value for r in RuleId])
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("diagnose", help="measure noise/regularity condition constants")
    _add_dataset_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("bench", help="run experiment config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("rate", help="fit error-vs-delta slope for one rule")
    p.add_argument("--problem", required=True)
    p.add_argument("--rule", required=True)
    p.add_argument("--levels", required=True, help="comma list of relative levels")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--decay", type=float, default=None)
    p.set_defaults(func=_cmd_rate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


def console_entry() -> None:
    sys.exit(main())
