"""Seeded noise generation and empirical noise / regularity diagnostics.

Noise is drawn componentwise in the singular basis as decaying Gaussian
coefficients and rescaled so the relative level is hit exactly. The
diagnostic routines measure, on a given alpha grid, the smallest
constants for which the spectral-split inequalities relating the upper
and lower parts of the spectrum hold; these constants govern when
noise-level-free parameter choice rules act as error estimators.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .problems import SpectralProblem

_REL_LEVEL_TOL = 1e-12


@dataclass(frozen=True)
class NoisySpectrum:
    """A noise realization attached to a problem, in spectral coordinates."""

    problem: SpectralProblem
    noise_coeffs: np.ndarray
    rel_level: float
    abs_delta: float
    seed: int

    def __post_init__(self):
        if self.noise_coeffs.shape != self.problem.ydata_coeffs.shape:
            raise ParameterError("noise_coeffs must match the problem size")
        achieved = np.linalg.norm(self.noise_coeffs) / np.linalg.norm(self.problem.ydata_coeffs)
        if abs(achieved - self.rel_level) > _REL_LEVEL_TOL * self.rel_level:
            raise ParameterError("noise_coeffs norm does not realize rel_level")

    @cached_property
    def data_coeffs(self) -> np.ndarray:
        """Noisy data coefficients ydata + noise."""
        return self.problem.ydata_coeffs + self.noise_coeffs


def add_noise(problem: SpectralProblem, rel_level: float, decay_q: float = 0.6,
              seed: int = 0) -> NoisySpectrum:
    """Draw decaying Gaussian noise at an exact relative level.

    Raw coefficients are i**(-decay_q) times standard normal draws from
    a generator seeded with ``seed``; the whole vector is then rescaled
    so that ||noise|| / ||ydata|| equals ``rel_level`` exactly. A zero
    draw (probability zero) is retried with an incremented seed.
    """
    if rel_level <= 0.0:
        raise ParameterError("rel_level must be positive")
    if problem.n < 1:
        raise ParameterError("problem must have at least one index")
    weights = np.arange(1, problem.n + 1, dtype=float) ** (-decay_q)
    attempt = seed
    while True:
        raw = weights * np.random.default_rng(attempt).standard_normal(problem.n)
        norm = np.linalg.norm(raw)
        if norm > 0.0:
            break
        attempt += 1
    target = rel_level * np.linalg.norm(problem.ydata_coeffs)
    coeffs = raw * (target / norm)
    return NoisySpectrum(problem, coeffs, rel_level, float(np.linalg.norm(coeffs)), seed)


class ConditionVariant(enum.Enum):
    """The four spectral-split diagnostics."""

    MC1 = "mc1"
    MC2 = "mc2"
    REG1 = "reg1"
    REG2 = "reg2"


@dataclass(frozen=True)
class ConditionReport:
    """Measured condition constant together with its per-alpha profile."""

    variant: ConditionVariant
    constant: float
    argmax_alpha: float
    alphas: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    ratios: np.ndarray

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["alpha", "lhs", "rhs", "ratio"])
            for a, l, r, q in zip(self.alphas, self.lhs, self.rhs, self.ratios):
                writer.writerow([f"{a:.17g}", f"{l:.17g}", f"{r:.17g}", f"{q:.17g}"])


def _split_sums(coeffs2, lambdas, alpha, variant):
    upper = lambdas >= alpha
    lower = lambdas <= alpha
    if variant is ConditionVariant.MC1:
        lhs = np.sum(alpha / lambdas[upper] * coeffs2[upper])
        rhs = np.sum(coeffs2[lower])
    elif variant is ConditionVariant.MC2:
        lhs = np.sum(alpha / lambdas[upper] * coeffs2[upper])
        rhs = np.sum(lambdas[lower] / alpha * coeffs2[lower])
    elif variant is ConditionVariant.REG1:
        lhs = np.sum(coeffs2[lower])
        rhs = np.sum(alpha / lambdas[upper] * coeffs2[upper])
    else:
        lhs = np.sum(coeffs2[lower])
        rhs = np.sum((alpha / lambdas[upper]) ** 2 * coeffs2[upper])
    return float(lhs), float(rhs)


def condition_constant(coeffs: np.ndarray, lambdas: np.ndarray, grid,
                       variant: ConditionVariant) -> ConditionReport:
    """Measure a spectral-split condition constant on a sampled alpha grid.

    For each grid alpha the spectrum is split at alpha (indices with
    lambda_i equal to alpha are counted on both sides) and the ratio
    LHS / RHS of the chosen inequality is formed. The constant is the
    maximum ratio over alphas with positive RHS; a positive LHS against
    a zero RHS marks the constant as unbounded (inf).
    """
    alphas = np.asarray(getattr(grid, "values", grid), dtype=float)
    if alphas.size == 0:
        raise ParameterError("alpha grid is empty")
    coeffs = np.asarray(coeffs, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    if coeffs.shape != lambdas.shape:
        raise ParameterError("coeffs and lambdas must have the same length")
    coeffs2 = coeffs**2
    lhs = np.empty(alphas.size)
    rhs = np.empty(alphas.size)
    ratios = np.empty(alphas.size)
    for j, alpha in enumerate(alphas):
        l, r = _split_sums(coeffs2, lambdas, alpha, variant)
        lhs[j], rhs[j] = l, r
        if r > 0.0:
            ratios[j] = l / r
        else:
            ratios[j] = np.inf if l > 0.0 else 0.0
    constant = float(np.max(ratios))
    argmax_alpha = float(alphas[int(np.argmax(ratios))])
    return ConditionReport(variant, constant, argmax_alpha, alphas, lhs, rhs, ratios)
