"""Experiment protocol: noise sweeps, repeated seeds, efficiency ratios.

A single experiment fixes a test problem, a list of relative noise
levels, and a list of parameter-choice rules. For every (level, seed)
cell the harness draws noise, evaluates each rule, and records the
efficiency ratio J: the error at the selected parameter divided by the
best error attainable on the grid. Medians are aggregated per noise
class (small / medium / large, with the 50% level kept as its own row).

Cells are independent, embarrassingly parallel tasks; results are merged
in deterministic key order so serial and parallel runs produce identical
reports.
"""

from __future__ import annotations

import concurrent.futures
import configparser
import csv
from dataclasses import dataclass, field

import numpy as np

from . import convex as cvx
from .errors import NumericalError, ParameterError
from .noise import ConditionVariant, add_noise, condition_constant
from .problems import (SpectralProblem, load_problem, make_diagonal_problem,
                       make_heat_problem, make_radon_problem, mu_to_p)
from .rules import RuleId, rule_curve, select_alpha
from .tikhonov import (AlphaGrid, ErrorCurve, error_curve, interior_argbest,
                       path_quantities)

DEFAULT_GRID_COUNT_LINEAR = 200
DEFAULT_GRID_COUNT_CONVEX = 40
SEED_RUN_STRIDE = 1009

NOISE_CLASSES = ("small", "medium", "large", "fifty")

_METRICS = ("l2", "l1", "strict")


def noise_class(level: float) -> str:
    """Bucket a relative noise level into the reporting classes.

    The canonical protocol levels map to small {0.01%, 0.1%},
    medium {1%, 5%}, large {10%, 20%}, and a separate 50% row.
    """
    if level < 0.005:
        return "small"
    if level < 0.075:
        return "medium"
    if level < 0.35:
        return "large"
    return "fifty"


def lower_median(values) -> float:
    """Deterministic median: the lower of the two middle order statistics."""
    ordered = sorted(values)
    if not ordered:
        raise ParameterError("median of empty sample")
    return float(ordered[(len(ordered) - 1) // 2])


def parse_problem_spec(text: str) -> dict:
    """Parse an inline problem spec like ``diag:s=2,mu=0.25,n=1000``.

    Kinds: ``diag`` (keys n, s, and mu or p, optional margin, alt),
    ``heat`` (key n), ``radon`` (keys n, angles, rays). A leading ``@``
    refers to a problem file instead.
    """
    if text.startswith("@"):
        return {"kind": "file", "path": text[1:]}
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind not in ("diag", "heat", "radon"):
        raise ParameterError(f"unknown problem kind {kind!r}")
    params: dict = {"kind": kind}
    if rest:
        for item in rest.split(","):
            key, _, value = item.partition("=")
            if not _:
                raise ParameterError(f"malformed problem parameter {item!r}")
            params[key.strip()] = value.strip()
    return params


def build_problem(spec: str | dict) -> SpectralProblem:
    """Construct the problem described by an inline spec or parsed dict."""
    params = parse_problem_spec(spec) if isinstance(spec, str) else dict(spec)
    kind = params.pop("kind")
    try:
        if kind == "file":
            return load_problem(params["path"])
        if kind == "diag":
            n = int(params.pop("n"))
            s = float(params.pop("s"))
            if "p" in params:
                p = float(params.pop("p"))
            else:
                p = mu_to_p(s, float(params.pop("mu")),
                            float(params.pop("margin", 0.1)))
            alt = params.pop("alt", "1") not in ("0", "false", "no")
            if params:
                raise ParameterError(f"unknown diag parameters {sorted(params)}")
            return make_diagonal_problem(n, s, p, alternate_signs=alt)
        if kind == "heat":
            return make_heat_problem(int(params.pop("n")))
        if kind == "radon":
            return make_radon_problem(int(params.pop("n", params.pop("img_n", 8))),
                                      int(params.pop("angles", 12)),
                                      int(params.pop("rays", 12)))
    except KeyError as exc:
        raise ParameterError(f"problem spec missing required key {exc}") from exc
    raise ParameterError(f"unknown problem kind {kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment."""

    problem: str
    noise_levels: tuple
    runs_per_level: int
    rules: tuple
    seed_base: int = 0
    metric: str = "l2"
    decay_q: float | None = None
    grid_count: int | None = None
    grid_min: float | None = None
    grid_max: float | None = None
    penalty: str | None = None
    fista_max_iter: int = 20000
    fista_tol: float = 1e-10

    def __post_init__(self):
        if not self.noise_levels:
            raise ParameterError("noise_levels must be nonempty")
        for lv in self.noise_levels:
            if not (0.0 < lv <= 1.0):
                raise ParameterError("noise levels must lie in (0, 1]")
        if self.runs_per_level < 1:
            raise ParameterError("runs_per_level must be at least 1")
        if not self.rules:
            raise ParameterError("rule list must be nonempty")
        if self.metric not in _METRICS:
            raise ParameterError(f"metric must be one of {_METRICS}")
        if self.penalty is None:
            known = {r.value for r in RuleId}
            if self.metric != "l2":
                raise ParameterError("linear experiments use the l2 metric")
        else:
            if self.penalty not in cvx.PENALTIES:
                raise ParameterError(f"unknown penalty {self.penalty!r}")
            known = {r.value for r in cvx.ConvexRule}
        for name in self.rules:
            if name not in known:
                raise ParameterError(f"unknown rule {name!r} for this experiment type")

    @property
    def is_convex(self) -> bool:
        return self.penalty is not None

    def effective_decay_q(self, problem: SpectralProblem) -> float:
        if self.decay_q is not None:
            return self.decay_q
        return 0.6 if problem.kind == "diagonal" else 0.0

    def make_grid(self, problem: SpectralProblem) -> AlphaGrid:
        count = self.grid_count or (DEFAULT_GRID_COUNT_CONVEX if self.is_convex
                                    else DEFAULT_GRID_COUNT_LINEAR)
        base = AlphaGrid.default_for(problem, count)
        amin = self.grid_min if self.grid_min is not None else base.alpha_min
        amax = self.grid_max if self.grid_max is not None else base.alpha_max
        return AlphaGrid(amin, amax, count)

    def cell_seed(self, level_index: int, run_index: int) -> int:
        return self.seed_base + run_index * SEED_RUN_STRIDE + level_index


@dataclass(frozen=True)
class RunRecord:
    """One (level, seed, rule) outcome."""

    level: float
    seed: int
    rule: str
    alpha_star: float
    interior: bool
    J: float
    selected_error: float
    min_error: float


@dataclass(frozen=True)
class ConditionRecord:
    """Measured condition constants for one (level, seed) cell."""

    level: float
    seed: int
    c1: float
    c2: float
    d_reg: float


@dataclass(frozen=True)
class CurveSample:
    """One cell's curves, kept for plotting."""

    alphas: np.ndarray
    log_residual2: np.ndarray
    log_solution2: np.ndarray
    rule_names: tuple
    rule_values: np.ndarray
    selected_indices: tuple


@dataclass(frozen=True)
class ExperimentReport:
    """Raw records plus aggregated medians and provenance notes."""

    config: ExperimentConfig
    records: tuple
    condition_records: tuple
    medians: dict = field(default_factory=dict)
    curve_sample: CurveSample | None = None
    clamp_fraction: float = 0.0
    notes: tuple = ()


def efficiency_ratio(selected_error: float, curve) -> float:
    """Error at the selected parameter over the best error on the grid.

    ``curve`` is an :class:`ErrorCurve` or a plain array of per-alpha
    errors. At least 1 whenever the selection is a grid point.
    """
    errors = curve.total if isinstance(curve, ErrorCurve) else np.asarray(curve, float)
    best = float(np.min(errors))
    if best <= 0.0:
        raise NumericalError("exact recovery on the grid; efficiency ratio undefined")
    return float(selected_error) / best


def _measure_conditions(data, grid, level, seed) -> ConditionRecord:
    lam = data.problem.lambdas
    c1 = condition_constant(data.noise_coeffs, lam, grid, ConditionVariant.MC1).constant
    c2 = condition_constant(data.noise_coeffs, lam, grid, ConditionVariant.MC2).constant
    d = condition_constant(data.problem.xdag_coeffs, lam, grid, ConditionVariant.REG1).constant
    return ConditionRecord(level, seed, c1, c2, d)


def _linear_cell(problem, grid, config, level, seed):
    """All rule outcomes for one linear (level, seed) cell."""
    data = add_noise(problem, level, config.effective_decay_q(problem), seed)
    path = path_quantities(data, grid)
    errors = error_curve(data, grid)
    records = []
    for name in config.rules:
        curve = rule_curve(RuleId(name), data, path, grid)
        sel = select_alpha(curve)
        selected = float(errors.total[sel.grid_index])
        records.append(RunRecord(level, seed, name, sel.alpha_star, sel.interior,
                                 efficiency_ratio(selected, errors),
                                 selected, errors.min_total))
    return records, _measure_conditions(data, grid, level, seed), []


def _convex_cell(problem, grid, config, level, seed):
    """All rule outcomes for one convex (level, seed) cell."""
    data = add_noise(problem, level, config.effective_decay_q(problem), seed)
    penalty = cvx.PENALTIES[config.penalty]()
    options = cvx.FistaOptions(max_iter=config.fista_max_iter,
                               objective_tol=config.fista_tol)
    if problem.basis_v is not None:
        y_phys = problem.basis_v @ data.data_coeffs
    else:
        y_phys = data.data_coeffs
    xdag = problem.solution_vector()
    firsts, seconds = [], []
    for alpha in grid.values:
        first = cvx.fista_solve(problem, y_phys, float(alpha), penalty, options)
        firsts.append(first)
        seconds.append(cvx.bregman_second(problem, y_phys, float(alpha), penalty,
                                          first, options))
    if config.metric == "l1":
        errs = np.array([np.sum(np.abs(f.x - xdag)) for f in firsts])
    elif config.metric == "strict":
        errs = np.array([cvx.strict_metric(f.x, xdag, penalty) for f in firsts])
    else:
        errs = np.array([np.linalg.norm(f.x - xdag) for f in firsts])
    clamp_events: list = []
    records = []
    n_alpha = grid.values.size
    for name in config.rules:
        rule = cvx.ConvexRule(name)
        values = np.full(n_alpha, np.nan)
        for j in range(n_alpha):
            nxt = firsts[j + 1] if j + 1 < n_alpha else None
            if rule is cvx.ConvexRule.SL_DISCRETE and nxt is None:
                continue
            values[j] = cvx.convex_rule_value(rule, penalty, firsts[j], seconds[j],
                                              next_first=nxt,
                                              clamp_events=clamp_events)
        idx, interior = interior_argbest(values)
        records.append(RunRecord(level, seed, name, float(grid.values[idx]),
                                 interior, efficiency_ratio(errs[idx], errs),
                                 float(errs[idx]), float(np.min(errs))))
    return records, _measure_conditions(data, grid, level, seed), clamp_events


def _run_cell(problem, grid, config, level, seed):
    if config.is_convex:
        return _convex_cell(problem, grid, config, level, seed)
    return _linear_cell(problem, grid, config, level, seed)


def aggregate_medians(records) -> dict:
    """Per-rule, per-noise-class lower medians of J."""
    buckets: dict = {}
    for rec in records:
        buckets.setdefault(rec.rule, {}).setdefault(noise_class(rec.level), []).append(rec.J)
    return {rule: {cls: lower_median(vals) for cls, vals in classes.items()}
            for rule, classes in buckets.items()}


def _sample_curves(problem, grid, config) -> CurveSample:
    """Curves of the first (level, seed) cell, for the SVG panel."""
    level = config.noise_levels[0]
    seed = config.cell_seed(0, 0)
    data = add_noise(problem, level, config.effective_decay_q(problem), seed)
    if config.is_convex:
        penalty = cvx.PENALTIES[config.penalty]()
        options = cvx.FistaOptions(max_iter=config.fista_max_iter,
                                   objective_tol=config.fista_tol)
        y_phys = (problem.basis_v @ data.data_coeffs
                  if problem.basis_v is not None else data.data_coeffs)
        firsts = [cvx.fista_solve(problem, y_phys, float(a), penalty, options)
                  for a in grid.values]
        seconds = [cvx.bregman_second(problem, y_phys, float(a), penalty, f, options)
                   for a, f in zip(grid.values, firsts)]
        apply_a = (lambda x: problem.basis_v @ (problem.singular_values
                                                * (problem.basis_u.T @ x))) \
            if problem.basis_v is not None else (lambda x: problem.singular_values * x)
        res2 = np.array([np.sum((apply_a(f.x) - y_phys) ** 2) for f in firsts])
        rvals = np.array([max(penalty.evaluate(f.x), np.finfo(float).tiny)
                          for f in firsts])
        values = []
        indices = []
        for name in config.rules:
            rule = cvx.ConvexRule(name)
            vals = np.full(grid.values.size, np.nan)
            for j in range(grid.values.size):
                nxt = firsts[j + 1] if j + 1 < grid.values.size else None
                if rule is cvx.ConvexRule.SL_DISCRETE and nxt is None:
                    continue
                vals[j] = cvx.convex_rule_value(rule, penalty, firsts[j], seconds[j],
                                                next_first=nxt)
            values.append(vals)
            indices.append(interior_argbest(vals)[0])
        return CurveSample(grid.values, np.log10(np.maximum(res2, np.finfo(float).tiny)),
                           np.log10(rvals), tuple(config.rules),
                           np.array(values), tuple(indices))
    path = path_quantities(data, grid)
    values, indices = [], []
    for name in config.rules:
        curve = rule_curve(RuleId(name), data, path, grid)
        values.append(curve.values)
        indices.append(select_alpha(curve).grid_index)
    return CurveSample(grid.values, np.log10(path.rho), np.log10(path.eta),
                       tuple(config.rules), np.array(values), tuple(indices))


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    """Execute the full protocol of one experiment.

    Cells are keyed by (level_index, run_index); with ``jobs`` greater
    than one they are distributed over processes and merged in key
    order, so the report does not depend on ``jobs``.
    """
    problem = build_problem(config.problem)
    grid = config.make_grid(problem)
    keys = [(li, ri) for li in range(len(config.noise_levels))
            for ri in range(config.runs_per_level)]
    cells = {}
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {key: pool.submit(_run_cell, problem, grid, config,
                                        config.noise_levels[key[0]],
                                        config.cell_seed(*key))
                       for key in keys}
            for key in keys:
                cells[key] = futures[key].result()
    else:
        for key in keys:
            cells[key] = _run_cell(problem, grid, config,
                                   config.noise_levels[key[0]],
                                   config.cell_seed(*key))
    records, condition_records, clamps = [], [], []
    qo_evaluations = 0
    for key in keys:
        recs, cond, clamp_events = cells[key]
        records.extend(recs)
        condition_records.append(cond)
        clamps.extend(clamp_events)
        if config.is_convex and cvx.ConvexRule.QO_RIGHT.value in config.rules:
            qo_evaluations += len(grid.values)
    clamp_fraction = len(clamps) / qo_evaluations if qo_evaluations else 0.0
    notes = [
        "noise classes: small {0.01%, 0.1%}, medium {1%, 5%}, large {10%, 20%}; "
        "the 50% level is reported as its own row",
        f"alpha grid: {grid.count} geometric points on "
        f"[{grid.alpha_min:.3g}, {grid.alpha_max:.3g}]",
        "medians are lower medians over all (level, seed) pairs in a class",
    ]
    if problem.kind == "radon":
        notes.append("tomography operator is a ray-driven analogue, "
                     "not a port of any external toolbox matrix")
    return ExperimentReport(config=config, records=tuple(records),
                            condition_records=tuple(condition_records),
                            medians=aggregate_medians(records),
                            curve_sample=_sample_curves(problem, grid, config),
                            clamp_fraction=clamp_fraction, notes=tuple(notes))


RECORD_FIELDS = ("level", "seed", "rule", "alpha_star", "interior", "J",
                 "selected_error", "min_error")


def write_records_csv(records, path) -> None:
    """Raw records as CSV, formatted for byte-stable round trips."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_FIELDS)
        for r in records:
            writer.writerow([f"{r.level:.17g}", str(r.seed), r.rule,
                             f"{r.alpha_star:.17g}", str(int(r.interior)),
                             f"{r.J:.17g}", f"{r.selected_error:.17g}",
                             f"{r.min_error:.17g}"])


def read_records_csv(path):
    """Inverse of :func:`write_records_csv`."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RECORD_FIELDS:
            raise ParameterError(f"{path}: unexpected CSV header {header}")
        for row in reader:
            records.append(RunRecord(float(row[0]), int(row[1]), row[2],
                                     float(row[3]), bool(int(row[4])), float(row[5]),
                                     float(row[6]), float(row[7])))
    return records


def load_experiment_configs(path) -> list:
    """Read experiments from a flat key = value config file, one per section."""
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise ParameterError(f"config file {path} not found or unreadable")
    configs = []
    for section in parser.sections():
        sec = parser[section]
        kwargs = dict(
            problem=sec.get("problem"),
            noise_levels=tuple(float(x) for x in sec.get("noise_levels").split(",")),
            runs_per_level=sec.getint("runs_per_level", 10),
            rules=tuple(x.strip() for x in sec.get("rules").split(",")),
            seed_base=sec.getint("seed_base", 0),
            metric=sec.get("metric", "l2"),
            penalty=sec.get("penalty", None),
        )
        if sec.get("decay_q") is not None:
            kwargs["decay_q"] = sec.getfloat("decay_q")
        if sec.get("grid_count") is not None:
            kwargs["grid_count"] = sec.getint("grid_count")
        if sec.get("grid_min") is not None:
            kwargs["grid_min"] = sec.getfloat("grid_min")
        if sec.get("grid_max") is not None:
            kwargs["grid_max"] = sec.getfloat("grid_max")
        if sec.get("fista_max_iter") is not None:
            kwargs["fista_max_iter"] = sec.getint("fista_max_iter")
        if sec.get("fista_tol") is not None:
            kwargs["fista_tol"] = sec.getfloat("fista_tol")
        if kwargs["problem"] is None:
            raise ParameterError(f"section [{section}] is missing 'problem'")
        configs.append((section, ExperimentConfig(**kwargs)))
    if not configs:
        raise ParameterError(f"config file {path} defines no experiment sections")
    return configs


@dataclass(frozen=True)
class RateCheckSpec:
    """Configuration of a convergence-rate regression."""

    problem: str
    rule: str
    noise_levels: tuple
    runs_per_level: int = 10
    seed_base: int = 0
    decay_q: float | None = None
    grid_count: int = DEFAULT_GRID_COUNT_LINEAR

    def __post_init__(self):
        if len(self.noise_levels) < 4:
            raise ParameterError("need at least 4 noise levels")
        if max(self.noise_levels) / min(self.noise_levels) < 100.0:
            raise ParameterError("noise levels must span at least two decades")
        if self.rule != "oracle" and self.rule not in {r.value for r in RuleId}:
            raise ParameterError(f"unknown rule {self.rule!r}")


@dataclass(frozen=True)
class RateResult:
    slope: float
    intercept: float
    per_seed_slopes: tuple


def rate_regression(spec: RateCheckSpec) -> RateResult:
    """Slope of log(total error at the selected alpha) against log(delta).

    One least-squares line is fitted per seed across the noise levels;
    the reported slope and intercept are means over seeds. The rule
    name "oracle" selects the minimizer of the exact error curve.
    """
    problem = build_problem(spec.problem)
    grid = AlphaGrid.default_for(problem, spec.grid_count)
    decay = spec.decay_q if spec.decay_q is not None else (
        0.6 if problem.kind == "diagonal" else 0.0)
    slopes, intercepts = [], []
    for run in range(spec.runs_per_level):
        log_d, log_e = [], []
        for li, level in enumerate(sorted(spec.noise_levels)):
            seed = spec.seed_base + run * SEED_RUN_STRIDE + li
            data = add_noise(problem, level, decay, seed)
            errors = error_curve(data, grid)
            if spec.rule == "oracle":
                idx = errors.argmin_index
            else:
                path = path_quantities(data, grid)
                curve = rule_curve(RuleId(spec.rule), data, path, grid)
                idx = select_alpha(curve).grid_index
            err = errors.total[idx]
            if err <= 0.0:
                raise NumericalError("zero total error; rate regression degenerate")
            log_d.append(np.log(data.abs_delta))
            log_e.append(np.log(err))
        design = np.vstack([log_d, np.ones(len(log_d))]).T
        slope, intercept = np.linalg.lstsq(design, np.array(log_e), rcond=None)[0]
        slopes.append(float(slope))
        intercepts.append(float(intercept))
    return RateResult(float(np.mean(slopes)), float(np.mean(intercepts)),
                      tuple(slopes))
