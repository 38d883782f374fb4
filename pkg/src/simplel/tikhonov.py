"""Tikhonov path quantities, error curves, curvature, and Landweber iteration.

Everything here is evaluated in spectral coordinates through the filter
factors of Tikhonov regularization. The path quantities are the squared
solution norm eta, the squared residual norm rho, their derivatives in
the regularization parameter, and the combination zeta = rho/(alpha*eta)
that drives the L-graph curvature. Summations run in ascending spectral
index so results are independent of evaluation order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import NumericalError, ParameterError, SelectionError
from .noise import NoisySpectrum

DEFAULT_GRID_COUNT = 200

# Fixed lower bound for fast-decaying spectra, relative to alpha_max.
GRID_FLOOR_RATIO = 1e-9


@dataclass(frozen=True)
class AlphaGrid:
    """Geometric grid of regularization parameters, stored descending."""

    alpha_min: float
    alpha_max: float
    count: int

    def __post_init__(self):
        if not (0.0 < self.alpha_min < self.alpha_max):
            raise ParameterError("need 0 < alpha_min < alpha_max")
        if self.count < 3:
            raise ParameterError("count must be at least 3")

    @cached_property
    def values(self) -> np.ndarray:
        q = (self.alpha_min / self.alpha_max) ** (1.0 / (self.count - 1))
        vals = self.alpha_max * q ** np.arange(self.count)
        # pin the endpoint so spectrum ties at alpha_min are split exactly
        vals[-1] = self.alpha_min
        return vals

    @classmethod
    def default_for(cls, problem, count: int = DEFAULT_GRID_COUNT) -> "AlphaGrid":
        """Search interval [sigma_min^2, ||A||^2], floored for fast decay."""
        amax = float(problem.singular_values[0] ** 2)
        amin = max(float(problem.singular_values[-1] ** 2), GRID_FLOOR_RATIO * amax)
        if amin >= amax:
            amin = GRID_FLOOR_RATIO * amax
        return cls(amin, amax, count)


@dataclass(frozen=True)
class PathCurve:
    """Per-alpha Tikhonov path quantities on a fixed grid."""

    alphas: np.ndarray
    eta: np.ndarray
    rho: np.ndarray
    eta_prime: np.ndarray
    rho_prime: np.ndarray
    zeta: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["alpha", "eta", "rho", "eta_prime", "rho_prime", "zeta"])
            for row in zip(self.alphas, self.eta, self.rho, self.eta_prime,
                           self.rho_prime, self.zeta):
                writer.writerow([f"{v:.17g}" for v in row])


@dataclass(frozen=True)
class ErrorCurve:
    """Stability / approximation / total error along the grid."""

    alphas: np.ndarray
    stability: np.ndarray
    approx: np.ndarray
    total: np.ndarray
    argmin_index: int
    min_total: float

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["alpha", "stability", "approx", "total"])
            for row in zip(self.alphas, self.stability, self.approx, self.total):
                writer.writerow([f"{v:.17g}" for v in row])


def tikhonov_coeffs(data: NoisySpectrum, alpha: float) -> np.ndarray:
    """Regularized solution coefficients sigma_i d_i / (lambda_i + alpha)."""
    if alpha <= 0.0:
        raise ParameterError("alpha must be positive")
    problem = data.problem
    return problem.singular_values * data.data_coeffs / (problem.lambdas + alpha)


def residual_coeffs(data: NoisySpectrum, alpha: float) -> np.ndarray:
    """Negative-residual coefficients alpha d_i / (lambda_i + alpha)."""
    if alpha <= 0.0:
        raise ParameterError("alpha must be positive")
    return alpha * data.data_coeffs / (data.problem.lambdas + alpha)


def path_quantities(data: NoisySpectrum, grid: AlphaGrid) -> PathCurve:
    """Evaluate eta, rho, their derivatives, and zeta over the grid.

    Closed filter-factor forms, with d the noisy data coefficients:

        eta       = sum lambda / (lambda+alpha)^2 * d^2
        rho       = sum alpha^2 / (lambda+alpha)^2 * d^2 + oor^2
        eta'      = -2 sum lambda / (lambda+alpha)^3 * d^2
        rho'      =  2 sum alpha lambda / (lambda+alpha)^3 * d^2

    The constant out-of-range term enters rho only; it differentiates
    to zero.
    """
    lam = data.problem.lambdas[None, :]
    d2 = (data.data_coeffs**2)[None, :]
    alphas = grid.values
    a = alphas[:, None]
    denom = lam + a
    eta = np.sum(lam / denom**2 * d2, axis=1)
    rho = np.sum(a**2 / denom**2 * d2, axis=1) + data.problem.out_of_range_norm**2
    eta_prime = -2.0 * np.sum(lam / denom**3 * d2, axis=1)
    rho_prime = 2.0 * np.sum(a * lam / denom**3 * d2, axis=1)
    zeta = rho / (alphas * eta)
    return PathCurve(alphas, eta, rho, eta_prime, rho_prime, zeta)


def c1(zeta):
    """Curvature coefficient zeta^2 / (zeta^2+1)^(3/2), maximal at sqrt(2)."""
    z = np.asarray(zeta, dtype=float)
    return z**2 / (z**2 + 1.0) ** 1.5


def c2(zeta):
    """Curvature coefficient zeta(1+zeta) / (zeta^2+1)^(3/2), maximal at 1."""
    z = np.asarray(zeta, dtype=float)
    return z * (1.0 + z) / (z**2 + 1.0) ** 1.5


def curvature_values(path: PathCurve) -> np.ndarray:
    """Signed L-graph curvature along the whole grid.

    Uses the first-derivative-only form
    gamma = eta/(alpha |eta'|) * c1(zeta) - c2(zeta), which is exact for
    Tikhonov regularization.
    """
    scale = path.eta / (path.alphas * np.abs(path.eta_prime))
    return scale * c1(path.zeta) - c2(path.zeta)


def curvature_tikhonov(path: PathCurve, at: int) -> float:
    """Signed curvature of the log-log L-graph at one grid index."""
    if path.eta_prime[at] == 0.0:
        raise NumericalError("curvature undefined where eta' vanishes")
    return float(curvature_values(path)[at])


def curvature_direct(path: PathCurve, at: int) -> float:
    """Curvature via the unreduced eta/rho expression (cross-check route)."""
    a = path.alphas[at]
    eta, rho, etap = path.eta[at], path.rho[at], path.eta_prime[at]
    if etap == 0.0:
        raise NumericalError("curvature undefined where eta' vanishes")
    num = rho * eta + a * etap * rho + a**2 * etap * eta
    return float(eta * rho / abs(etap) * num / (rho**2 + a**2 * eta**2) ** 1.5)


def discrete_curvature(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Menger curvature of consecutive point triples of a discrete graph.

    Endpoints have no triple and are returned as NaN; exactly collinear
    triples give zero.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3:
        raise ParameterError("need at least 3 points")
    dx = np.diff(xs)
    if not (np.all(dx > 0.0) or np.all(dx < 0.0)):
        raise ParameterError("xs must be strictly monotone")
    out = np.full(xs.size, np.nan)
    for j in range(1, xs.size - 1):
        ax, ay = xs[j] - xs[j - 1], ys[j] - ys[j - 1]
        bx, by = xs[j + 1] - xs[j - 1], ys[j + 1] - ys[j - 1]
        cross = ax * by - ay * bx
        d01 = np.hypot(ax, ay)
        d02 = np.hypot(bx, by)
        d12 = np.hypot(xs[j + 1] - xs[j], ys[j + 1] - ys[j])
        denom = d01 * d02 * d12
        out[j] = 0.0 if cross == 0.0 else 2.0 * abs(cross) / denom
    return out


def error_curve(data: NoisySpectrum, grid: AlphaGrid) -> ErrorCurve:
    """Stability, approximation, and total error along the grid.

    stability^2 = sum lambda/(lambda+alpha)^2 * noise^2 and
    approx^2 = sum alpha^2/(lambda+alpha)^2 * xdag^2; the total error is
    formed directly from the solution coefficients.
    """
    problem = data.problem
    lam = problem.lambdas[None, :]
    a = grid.values[:, None]
    denom = lam + a
    stability = np.sqrt(np.sum(lam / denom**2 * (data.noise_coeffs**2)[None, :], axis=1))
    approx = np.sqrt(np.sum(a**2 / denom**2 * (problem.xdag_coeffs**2)[None, :], axis=1))
    x_alpha = problem.singular_values[None, :] * data.data_coeffs[None, :] / denom
    total = np.sqrt(np.sum((x_alpha - problem.xdag_coeffs[None, :]) ** 2, axis=1))
    argmin = int(np.argmin(total))
    return ErrorCurve(grid.values, stability, approx, total, argmin, float(total[argmin]))


def interior_argbest(values: np.ndarray, maximize: bool = False) -> tuple[int, bool]:
    """Best strict interior local extremum, else the better boundary point.

    Returns (index, interior_flag). NaN entries never qualify; on value
    ties the smallest index wins, which on a descending alpha grid is
    the larger alpha.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        raise ParameterError("need at least 3 grid points")
    if np.all(np.isnan(v)):
        raise SelectionError("all values undefined")
    sign = -1.0 if maximize else 1.0
    w = sign * v
    candidates = [j for j in range(1, v.size - 1)
                  if w[j] < w[j - 1] and w[j] < w[j + 1]]
    if candidates:
        best = min(candidates, key=lambda j: (w[j], j))
        return best, True
    ends = [j for j in (0, v.size - 1) if not np.isnan(v[j])]
    if not ends:
        raise SelectionError("no interior extremum and both boundary values undefined")
    best = min(ends, key=lambda j: (w[j], j))
    return best, False


@dataclass(frozen=True)
class LandweberRun:
    """Landweber iterates in spectral coordinates with stopping functionals.

    ``psi_inner[k]`` is the inner product of the image of the k-th
    iterate with its residual; ``psi_filter[k]`` compares the k-th and
    2k-th iterates and is defined for k <= steps // 2.
    """

    stepsize: float
    iterates: np.ndarray = field(repr=False)
    residual_norms: np.ndarray
    psi_inner: np.ndarray
    psi_filter: np.ndarray
    selected_k_inner: int
    inner_interior: bool
    selected_k_filter: int
    filter_interior: bool


def landweber_run(data: NoisySpectrum, steps: int,
                  stepsize: float | None = None) -> LandweberRun:
    """Run Landweber iteration from zero and evaluate stopping functionals.

    The iteration x_{k+1} = x_k + stepsize * A^T (y_delta - A x_k) is
    carried out in spectral coordinates. The default stepsize is
    1/sigma_1^2; any value in (0, 2/sigma_1^2) is admissible.
    """
    if steps < 2:
        raise ParameterError("steps must be at least 2")
    problem = data.problem
    sig = problem.singular_values
    if stepsize is None:
        stepsize = 1.0 / float(sig[0] ** 2)
    if not (0.0 < stepsize < 2.0 / sig[0] ** 2):
        raise ParameterError("stepsize must lie in (0, 2/sigma_1^2)")
    d = data.data_coeffs
    iterates = np.zeros((steps + 1, problem.n))
    for k in range(steps):
        residual = d - sig * iterates[k]
        iterates[k + 1] = iterates[k] + stepsize * sig * residual
    images = iterates * sig[None, :]
    residuals = d[None, :] - images
    oor2 = problem.out_of_range_norm**2
    residual_norms = np.sqrt(np.sum(residuals**2, axis=1) + oor2)
    psi_inner = np.sum(images * residuals, axis=1)
    half = steps // 2
    psi_filter = np.array([np.sum(iterates[k] * (iterates[2 * k] - iterates[k]))
                           for k in range(half + 1)])
    k_inner, inner_int = interior_argbest(psi_inner)
    k_filter, filter_int = interior_argbest(psi_filter)
    return LandweberRun(stepsize, iterates, residual_norms, psi_inner, psi_filter,
                        int(k_inner), inner_int, int(k_filter), filter_int)
