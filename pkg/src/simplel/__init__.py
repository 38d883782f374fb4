"""Heuristic regularization-parameter choice for linear and convex
Tikhonov-type methods, built around derivative-based simplifications of
the L-curve criterion, together with noise-condition diagnostics and a
reproducible benchmark harness."""

from .bench import (ExperimentConfig, ExperimentReport, RateCheckSpec,
                    RateResult, RunRecord, build_problem, efficiency_ratio,
                    load_experiment_configs, rate_regression, run_experiment)
from .convex import (ConvexRule, ConvexSolveResult, FistaOptions, Penalty,
                     bregman_second, convex_rule_value, fista_solve,
                     l1_penalty, lp32_penalty, prox, strict_metric,
                     tv1d_penalty)
from .errors import NumericalError, ParameterError, SelectionError
from .noise import (ConditionReport, ConditionVariant, NoisySpectrum,
                    add_noise, condition_constant)
from .problems import (SmoothnessSpec, SpectralProblem, compute_svd,
                       load_problem, make_diagonal_problem, make_heat_problem,
                       make_radon_problem, mu_to_p, problem_from_matrix,
                       save_problem)
from .reporting import render_report
from .rules import (BoundCurves, RuleCurve, RuleId, SelectionResult,
                    bound_curves, rule_curve, select_alpha)
from .tikhonov import (AlphaGrid, ErrorCurve, LandweberRun, PathCurve,
                       curvature_tikhonov, discrete_curvature, error_curve,
                       landweber_run, path_quantities, residual_coeffs,
                       tikhonov_coeffs)

__version__ = "0.1.0"
