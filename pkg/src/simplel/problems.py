"""Ill-posed test problems in singular-value form.

A problem is stored through its spectral data: singular values sigma_i
(descending), the coefficients of the exact solution against the right
singular basis, and the induced exact data coefficients. Diagonal test
operators carry implicit identity bases; problems built from an explicit
matrix keep the dense orthonormal factors so vectors can be mapped back
to physical coordinates.

Constructors are provided for the three operator families used in the
experiments: a diagonal operator with polynomial decay, a Volterra
first-kind discretization of the 1-D inverse heat problem, and a small
ray-driven parallel-beam tomography analogue.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import NumericalError, ParameterError

# Singular values below RANK_THRESHOLD * sigma_1 are treated as zero when a
# matrix enters spectral form; they sit below what the double-precision
# filter-factor formulas can resolve.
RANK_THRESHOLD = 1e-13

_BASIS_ORTHO_TOL = 1e-10
_RECONSTRUCTION_TOL = 1e-8


@dataclass(frozen=True)
class SpectralProblem:
    """An operator equation A x = y reduced to spectral coordinates.

    Attributes
    ----------
    singular_values : ndarray
        Positive singular values, sorted in nonincreasing order.
    xdag_coeffs : ndarray
        Coefficients of the exact solution in the right singular basis.
    ydata_coeffs : ndarray
        Exact data coefficients, ``sigma_i * xdag_coeffs[i]``.
    out_of_range_norm : float
        Norm of any data component orthogonal to the operator range
        (zero for generated problems).
    basis_u, basis_v : ndarray or None
        Dense orthonormal factors (columns are singular vectors) for
        problems that originate from an explicit matrix, so that
        ``A = basis_v @ diag(sigma) @ basis_u.T``.
    kind : str
        Short tag used in reports ("diagonal", "heat", "radon", ...).
    """

    singular_values: np.ndarray
    xdag_coeffs: np.ndarray
    ydata_coeffs: np.ndarray
    out_of_range_norm: float = 0.0
    basis_u: np.ndarray | None = field(default=None, repr=False)
    basis_v: np.ndarray | None = field(default=None, repr=False)
    kind: str = "custom"

    def __post_init__(self):
        sig = np.asarray(self.singular_values, dtype=float)
        if sig.ndim != 1 or sig.size < 1:
            raise ParameterError("singular_values must be a nonempty 1-D array")
        if not np.all(sig > 0.0):
            raise ParameterError("singular values must be positive")
        if np.any(np.diff(sig) > 0.0):
            raise ParameterError("singular values must be nonincreasing")
        if self.xdag_coeffs.shape != sig.shape or self.ydata_coeffs.shape != sig.shape:
            raise ParameterError("coefficient arrays must match singular_values in length")
        if self.out_of_range_norm < 0.0:
            raise ParameterError("out_of_range_norm must be nonnegative")
        if (self.basis_u is None) != (self.basis_v is None):
            raise ParameterError("basis_u and basis_v must be given together")
        if self.basis_u is not None:
            for name, b in (("basis_u", self.basis_u), ("basis_v", self.basis_v)):
                gram = b.T @ b
                defect = np.max(np.abs(gram - np.eye(b.shape[1])))
                if defect > _BASIS_ORTHO_TOL:
                    raise NumericalError(f"{name} is not orthonormal (defect {defect:.2e})")

    @classmethod
    def from_coefficients(cls, singular_values, xdag_coeffs, **kwargs) -> "SpectralProblem":
        """Build a problem from sigma and solution coefficients; data is derived."""
        sig = np.asarray(singular_values, dtype=float)
        xdag = np.asarray(xdag_coeffs, dtype=float)
        return cls(sig, xdag, sig * xdag, **kwargs)

    @cached_property
    def lambdas(self) -> np.ndarray:
        """Eigenvalues of A*A, i.e. sigma_i**2."""
        return self.singular_values**2

    @property
    def n(self) -> int:
        return self.singular_values.size

    def apply_forward(self, x_coeffs: np.ndarray) -> np.ndarray:
        """Forward map in spectral coordinates: (A x)_i = sigma_i * x_i."""
        return self.singular_values * x_coeffs

    def apply_adjoint(self, y_coeffs: np.ndarray) -> np.ndarray:
        """Adjoint map in spectral coordinates: (A* y)_i = sigma_i * y_i."""
        return self.singular_values * y_coeffs

    def to_matrix(self) -> np.ndarray:
        """Dense operator matrix (identity bases for diagonal problems)."""
        if self.basis_u is None:
            return np.diag(self.singular_values)
        return self.basis_v @ (self.singular_values[:, None] * self.basis_u.T)

    def solution_vector(self) -> np.ndarray:
        """Exact solution in physical coordinates."""
        if self.basis_u is None:
            return self.xdag_coeffs.copy()
        return self.basis_u @ self.xdag_coeffs


@dataclass(frozen=True)
class SmoothnessSpec:
    """Decay exponents describing operator smoothing and solution regularity.

    ``s`` is the singular-value decay exponent, ``p`` the solution
    coefficient decay exponent, and ``mu`` the nominal Hoelder-type
    smoothness index the pair realizes.
    """

    s: float
    p: float
    mu: float

    def __post_init__(self):
        if self.s <= 0.0:
            raise ParameterError("s must be positive")
        if self.p <= 0.5:
            raise ParameterError("p must exceed 1/2 for a square-summable solution")
        if self.mu <= 0.0:
            raise ParameterError("mu must be positive")


def mu_to_p(s: float, mu: float, margin: float = 0.1) -> float:
    """Smallest solution-decay exponent realizing smoothness index mu.

    For sigma_i = i**-s the coefficient sum sum_i i**(-2p) * i**(4*s*mu)
    converges exactly when p > 2*s*mu + 1/2; the returned value adds
    ``margin`` on top of that threshold.
    """
    if s <= 0.0 or mu <= 0.0 or margin <= 0.0:
        raise ParameterError("s, mu, margin must all be positive")
    return 2.0 * s * mu + 0.5 + margin


def make_diagonal_problem(n: int, s: float, p: float,
                          alternate_signs: bool = True) -> SpectralProblem:
    """Diagonal operator with polynomial decay.

    sigma_i = i**-s and <xdag, u_i> = (-1)**i * i**-p (signs optional),
    for i = 1..n.

    Parameters
    ----------
    n : int
        Number of spectral components, n >= 1.
    s : float
        Singular value decay exponent, s > 0.
    p : float
        Solution decay exponent, p > 1/2.
    alternate_signs : bool
        Alternate the sign of consecutive solution coefficients.
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    if s <= 0.0:
        raise ParameterError("s must be positive")
    if p <= 0.5:
        raise ParameterError("p must exceed 1/2")
    i = np.arange(1, n + 1, dtype=float)
    sig = i ** (-s)
    xdag = i ** (-p)
    if alternate_signs:
        xdag = xdag * (-1.0) ** i
    return SpectralProblem.from_coefficients(sig, xdag, kind="diagonal")


def compute_svd(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense SVD in the convention A = V @ diag(sigma) @ U.T.

    Returns (U, sigma, V) with orthonormal columns and sigma sorted
    nonincreasing. Singular values below ``RANK_THRESHOLD * sigma_1``
    are dropped together with their singular vectors; any bookkeeping
    of the discarded data components is up to the caller.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2:
        raise ParameterError("matrix must be 2-D")
    if not np.all(np.isfinite(a)):
        raise ParameterError("matrix entries must be finite")
    try:
        w, sig, zh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    if sig.size == 0 or sig[0] <= 0.0:
        raise NumericalError("matrix is numerically zero")
    keep = sig >= RANK_THRESHOLD * sig[0]
    return zh[keep].T, sig[keep], w[:, keep]


def problem_from_matrix(matrix: np.ndarray, x_true: np.ndarray,
                        kind: str = "matrix") -> SpectralProblem:
    """Reduce an explicit matrix problem to normalized spectral form.

    The matrix is scaled so sigma_1 = 1 and the exact solution is
    projected onto the (rank-truncated) right singular basis and scaled
    to unit norm; the data coefficients are then derived, so the data is
    exactly in the operator range.
    """
    u, sig, v = compute_svd(matrix)
    xc = u.T @ np.asarray(x_true, dtype=float)
    norm = float(np.linalg.norm(xc))
    if norm == 0.0:
        raise ParameterError("exact solution has no component in the operator row space")
    sig_top = sig[0]
    sig = sig / sig_top
    xc = xc / norm
    reconstruction = v @ (sig[:, None] * u.T)
    defect = np.max(np.abs(np.asarray(matrix, float) / sig_top - reconstruction))
    if defect > _RECONSTRUCTION_TOL:
        raise NumericalError(f"SVD reconstruction defect {defect:.2e} exceeds tolerance")
    return SpectralProblem.from_coefficients(sig, xc, basis_u=u, basis_v=v, kind=kind)


def heat_matrix(n: int) -> np.ndarray:
    """Midpoint-quadrature Volterra matrix for the 1-D inverse heat problem.

    Kernel k(t) = t**-1.5 / (2 sqrt(pi)) * exp(-1/(4 t)) on [0, 1] with
    unit conductivity; the matrix is lower-triangular Toeplitz.
    """
    if n < 8:
        raise ParameterError("n must be at least 8")
    h = 1.0 / n
    t = (np.arange(n) + 0.5) * h
    col = h * t ** (-1.5) / (2.0 * np.sqrt(np.pi)) * np.exp(-1.0 / (4.0 * t))
    idx = np.subtract.outer(np.arange(n), np.arange(n))
    return np.where(idx >= 0, col[np.clip(idx, 0, n - 1)], 0.0)


def _heat_solution(n: int) -> np.ndarray:
    """Piecewise ramp / hump / decay profile on the first half of the grid."""
    x = np.zeros(n)
    for j in range(n // 2):
        tj = (j + 1) * 20.0 / n
        if tj < 2.0:
            x[j] = 0.75 * tj**2 / 4.0
        elif tj < 3.0:
            x[j] = 0.75 + (tj - 2.0) * (3.0 - tj)
        else:
            x[j] = 0.75 * np.exp(-(tj - 3.0) * 2.0)
    return x


def make_heat_problem(n: int) -> SpectralProblem:
    """Severely ill-posed inverse heat conduction test problem.

    Builds the Volterra first-kind midpoint discretization on [0, 1],
    takes its dense SVD, and normalizes so that sigma_1 = 1 and the
    projected exact solution has unit norm.
    """
    return problem_from_matrix(heat_matrix(n), _heat_solution(n), kind="heat")


def radon_matrix(img_n: int, n_angles: int, n_rays: int) -> np.ndarray:
    """Ray-driven parallel-beam system matrix on an img_n x img_n pixel grid.

    Pixels have unit side and the grid is centered at the origin. Each
    row holds the intersection lengths of one ray with every pixel;
    entries are nonnegative by construction. Ray offsets cover the grid
    diagonal, so corner rays clip the grid only barely and the matrix is
    ill-conditioned like a physical scan.
    """
    if img_n < 2:
        raise ParameterError("img_n must be at least 2")
    if n_angles < 1 or n_rays < 1:
        raise ParameterError("need at least one angle and one ray")
    half = img_n / 2.0
    edges = np.arange(img_n + 1, dtype=float) - half
    rows = []
    spacing = img_n * np.sqrt(2.0) / n_rays
    offsets = (np.arange(n_rays) + 0.5 - n_rays / 2.0) * spacing
    for a in range(n_angles):
        theta = np.pi * a / n_angles
        dx, dy = np.cos(theta), np.sin(theta)
        nx, ny = -dy, dx
        for t in offsets:
            px, py = t * nx, t * ny
            row = np.zeros(img_n * img_n)
            for iy in range(img_n):
                for ix in range(img_n):
                    length = _ray_box_length(px, py, dx, dy,
                                             edges[ix], edges[ix + 1],
                                             edges[iy], edges[iy + 1])
                    if length > 0.0:
                        row[iy * img_n + ix] = length
            rows.append(row)
    a_mat = np.array(rows)
    if not np.any(a_mat > 0.0):
        raise ParameterError("degenerate geometry: no ray intersects the pixel grid")
    return a_mat


def _ray_box_length(px, py, dx, dy, x0, x1, y0, y1) -> float:
    """Length of the segment of line (px,py) + s*(dx,dy) inside a box."""
    s_lo, s_hi = -np.inf, np.inf
    for p, d, lo, hi in ((px, dx, x0, x1), (py, dy, y0, y1)):
        if abs(d) < 1e-14:
            if p < lo or p > hi:
                return 0.0
        else:
            sa, sb = (lo - p) / d, (hi - p) / d
            if sa > sb:
                sa, sb = sb, sa
            s_lo, s_hi = max(s_lo, sa), min(s_hi, sb)
    return max(0.0, s_hi - s_lo)


def _radon_phantom(img_n: int) -> np.ndarray:
    """Sparse blocky phantom: a small unit-valued block plus isolated pixels."""
    img = np.zeros((img_n, img_n))
    c = img_n // 2
    img[c - 1:c + 1, c - 1:c + 1] = 1.0
    img[img_n // 4, (3 * img_n) // 4] = 1.0
    img[(3 * img_n) // 4, img_n // 4] = 1.0
    return img.ravel()


def make_radon_problem(img_n: int, n_angles: int, n_rays: int) -> SpectralProblem:
    """Mildly ill-posed tomography analogue with a sparse phantom.

    Assembles the ray-driven parallel-beam matrix, reduces it to
    normalized spectral form, and uses a blocky few-pixel phantom as
    exact solution. This generator is an analogue of classic toolbox
    tomography operators, not a bit-compatible port.
    """
    if img_n < 4:
        raise ParameterError("img_n must be at least 4")
    return problem_from_matrix(radon_matrix(img_n, n_angles, n_rays),
                               _radon_phantom(img_n), kind="radon")


def save_problem(problem: SpectralProblem, path: str | Path) -> None:
    """Write spectral data as columnar text, lossless for float64.

    One header line carries the out-of-range norm and kind; data lines
    hold index, sigma_i, xdag_i, ydata_i at 17 significant digits.
    Dense bases are not serialized.
    """
    lines = [f"# out_of_range_norm = {problem.out_of_range_norm:.17g} kind = {problem.kind}"]
    for i in range(problem.n):
        lines.append(f"{i + 1} {problem.singular_values[i]:.17g} "
                     f"{problem.xdag_coeffs[i]:.17g} {problem.ydata_coeffs[i]:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_problem(path: str | Path) -> SpectralProblem:
    """Read a problem written by :func:`save_problem`."""
    lines = Path(path).read_text().strip().splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ParameterError(f"{path}: missing header line")
    header = lines[0]
    try:
        oor = float(header.split("out_of_range_norm =")[1].split()[0])
        kind = header.split("kind =")[1].split()[0]
    except (IndexError, ValueError) as exc:
        raise ParameterError(f"{path}: malformed header: {header!r}") from exc
    rows = [line.split() for line in lines[1:]]
    sig = np.array([float(r[1]) for r in rows])
    xdag = np.array([float(r[2]) for r in rows])
    ydata = np.array([float(r[3]) for r in rows])
    return SpectralProblem(sig, xdag, ydata, out_of_range_norm=oor, kind=kind)
