"""Parameter-choice functionals over an alpha grid and their minimizers.

Each rule maps the noisy spectral data to a per-alpha objective. All of
the quadratic-form rules share one closed form,

    psi(alpha)^2 = sum_i alpha^(n-k-1) lambda_i^k / (alpha+lambda_i)^n * d_i^2,

with rule-specific exponents (n, k); the remaining rules are ratios or
combinations of the path quantities. Every functional is minimized over
the grid except the L-graph curvature, which is maximized. Absolute
values are taken before square roots throughout so that cancellation
cannot produce NaNs from tiny negatives.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ParameterError
from .noise import NoisySpectrum
from .tikhonov import AlphaGrid, PathCurve, curvature_values, interior_argbest

_SL_CONSISTENCY_RTOL = 1e-10


class RuleId(enum.Enum):
    """Heuristic parameter-choice rules."""

    SIMPLE_L = "simple-l"
    SIMPLE_L_RATIO = "simple-l-ratio"
    QO = "qo"
    HD = "hd"
    HR = "hr"
    LCURVE_CURVATURE = "l-curve"
    VCURVE = "v-curve"
    CRESO = "creso"
    BRS = "brs"

    @property
    def maximize(self) -> bool:
        """Objective sense; only the curvature rule maximizes."""
        return self is RuleId.LCURVE_CURVATURE


# (n, k) exponents of the shared quadratic-form family.
_POWER_FORMS = {
    RuleId.SIMPLE_L: (3, 1),
    RuleId.QO: (4, 1),
    RuleId.HR: (3, 0),
    RuleId.HD: (2, 0),
}


@dataclass(frozen=True)
class RuleCurve:
    """Objective values of one rule along the grid."""

    rule: RuleId
    alphas: np.ndarray
    values: np.ndarray

    @property
    def maximize(self) -> bool:
        return self.rule.maximize

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["alpha", "value", "rule"])
            for a, v in zip(self.alphas, self.values):
                writer.writerow([f"{a:.17g}", f"{v:.17g}", self.rule.value])


@dataclass(frozen=True)
class SelectionResult:
    """A selected regularization parameter with its provenance on the grid."""

    alpha_star: float
    grid_index: int
    interior: bool
    value_at_star: float

    def record(self, rule: RuleId) -> str:
        return (f"{rule.value},{self.alpha_star:.17g},"
                f"{int(self.interior)},{self.value_at_star:.17g}")


@dataclass(frozen=True)
class BoundCurves:
    """Noise/solution split of the simple-L functional with its envelopes.

    ``b_approx`` bounds the solution part from above and is nondecreasing
    in alpha; ``v_stability`` is the stability error, nonincreasing in
    alpha, and bounds the noise part from above.
    """

    alphas: np.ndarray
    psi_sl_noise: np.ndarray
    psi_sl_sol: np.ndarray
    b_approx: np.ndarray
    v_stability: np.ndarray


def power_form_psi(lambdas: np.ndarray, coeffs: np.ndarray, alphas: np.ndarray,
                   n: int, k: int) -> np.ndarray:
    """Evaluate the shared quadratic form for exponents (n, k)."""
    lam = lambdas[None, :]
    c2 = (coeffs**2)[None, :]
    a = alphas[:, None]
    vals = np.sum(a ** (n - k - 1) * lam**k / (a + lam) ** n * c2, axis=1)
    return np.sqrt(np.abs(vals))


def rule_curve(rule: RuleId, data: NoisySpectrum, path: PathCurve,
               grid: AlphaGrid) -> RuleCurve:
    """Evaluate one rule's objective along the grid.

    The path must have been computed on the same grid. Ratio-type rules
    are flagged NaN wherever the solution norm vanishes.
    """
    alphas = grid.values
    if path.alphas.shape != alphas.shape or not np.array_equal(path.alphas, alphas):
        raise ParameterError("path was computed on a different grid")
    lam = data.problem.lambdas
    d = data.data_coeffs
    if rule in _POWER_FORMS:
        n, k = _POWER_FORMS[rule]
        values = power_form_psi(lam, d, alphas, n, k)
        if rule is RuleId.SIMPLE_L:
            alt = np.sqrt(np.abs(-0.5 * alphas * path.eta_prime))
            scale = np.maximum(values, alt)
            bad = np.abs(values - alt) > _SL_CONSISTENCY_RTOL * np.maximum(scale, 1e-300)
            if np.any(bad):
                raise NumericalError("simple-L closed form disagrees with -alpha*eta'/2")
        return RuleCurve(rule, alphas, values)

    norm_x = np.sqrt(path.eta)
    with np.errstate(divide="ignore", invalid="ignore"):
        if rule is RuleId.SIMPLE_L_RATIO:
            psi_sl = power_form_psi(lam, d, alphas, 3, 1)
            values = np.where(norm_x > 0.0, psi_sl / norm_x, np.nan)
        elif rule is RuleId.VCURVE:
            slr2 = np.where(path.eta > 0.0,
                            np.abs(-0.5 * alphas * path.eta_prime) / path.eta, np.nan)
            values = slr2 * np.sqrt(1.0 / path.zeta**2 + 1.0)
        elif rule is RuleId.CRESO:
            # minimize -C(alpha) with C = eta + 2 alpha eta'
            values = -(path.eta + 2.0 * alphas * path.eta_prime)
        elif rule is RuleId.BRS:
            values = np.where(norm_x > 0.0, path.rho / (alphas * norm_x), np.nan)
        elif rule is RuleId.LCURVE_CURVATURE:
            values = curvature_values(path)
        else:  # pragma: no cover - enum is exhaustive
            raise ParameterError(f"unknown rule {rule}")
    return RuleCurve(rule, alphas, values)


def select_alpha(curve: RuleCurve) -> SelectionResult:
    """Select alpha by the rule's objective sense.

    Among strict interior local extrema the one with the best objective
    value wins, with ties broken toward larger alpha; when no interior
    extremum exists the better boundary point is returned, flagged as
    non-interior.
    """
    idx, interior = interior_argbest(curve.values, maximize=curve.maximize)
    return SelectionResult(float(curve.alphas[idx]), int(idx), interior,
                           float(curve.values[idx]))


def bound_curves(data: NoisySpectrum, grid: AlphaGrid) -> BoundCurves:
    """Noise and solution parts of the simple-L functional with envelopes.

    Requires exact data, i.e. a synthetic problem carrying the true
    solution coefficients:

        psi_noise^2 = sum alpha lambda   / (lambda+alpha)^3 * noise^2
        psi_sol^2   = sum alpha lambda^2 / (lambda+alpha)^3 * xdag^2
        b_approx^2  = sum alpha / (lambda+alpha) * xdag^2
        v_stability = stability error
    """
    problem = data.problem
    lam = problem.lambdas[None, :]
    e2 = (data.noise_coeffs**2)[None, :]
    x2 = (problem.xdag_coeffs**2)[None, :]
    a = grid.values[:, None]
    denom = lam + a
    psi_noise = np.sqrt(np.sum(a * lam / denom**3 * e2, axis=1))
    psi_sol = np.sqrt(np.sum(a * lam**2 / denom**3 * x2, axis=1))
    b_approx = np.sqrt(np.sum(a / denom * x2, axis=1))
    v_stab = np.sqrt(np.sum(lam / denom**2 * e2, axis=1))
    return BoundCurves(grid.values, psi_noise, psi_sol, b_approx, v_stab)
