"""
Periodic Fourier Machinery
Grids, discrete transforms, spectral multipliers and norms on [-L, L]
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import fft as sp_fft

logger = logging.getLogger(__name__)

# Hermitian symmetry tolerance, relative to the largest coefficient
HERMITIAN_RTOL = 1e-12


class ParameterError(ValueError):
    """Raised when a numerical parameter is outside its admissible range"""
    pass


class NumericalError(Exception):
    """Base class for failures raised while computing"""
    pass


class DimensionError(NumericalError):
    """Sample or coefficient arrays do not match the grid"""
    pass


class SymmetryError(NumericalError):
    """Coefficients do not describe a real-valued field"""
    pass


@dataclass(frozen=True)
class PeriodicGrid:
    """
    Uniform periodic grid on [-L, L] carrying the modes k = -N..N

    The default point count is 2(2N+1) rounded up to a fast FFT size, so
    quadratic products evaluated on the grid are alias-free once truncated
    back to N modes.
    """

    n_modes: int
    half_length: float = np.pi
    n_points: Optional[int] = None

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise ParameterError(f"n_modes must be a positive integer. Got: {self.n_modes}")
        if not self.half_length > 0:
            raise ParameterError(f"half_length must be positive. Got: {self.half_length}")

        object.__setattr__(self, 'n_modes', int(self.n_modes))
        object.__setattr__(self, 'half_length', float(self.half_length))

        minimum = 2 * self.n_modes + 1
        if self.n_points is None:
            object.__setattr__(self, 'n_points', sp_fft.next_fast_len(2 * minimum, real=True))
        elif self.n_points < minimum:
            raise ParameterError(
                f"n_points must be at least 2N+1 = {minimum}. Got: {self.n_points}"
            )
        else:
            object.__setattr__(self, 'n_points', int(self.n_points))

    @classmethod
    def for_modes(cls, n_modes: int, half_length: float = np.pi) -> 'PeriodicGrid':
        """Padded grid for N modes on [-L, L]"""
        return cls(n_modes=n_modes, half_length=half_length)

    @cached_property
    def modes(self) -> np.ndarray:
        return np.arange(-self.n_modes, self.n_modes + 1)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Effective wavenumbers kappa(k) = k pi / L, ordered k = -N..N"""
        return self.modes * (np.pi / self.half_length)

    @cached_property
    def points(self) -> np.ndarray:
        """Collocation points x_j = -L + 2Lj/n"""
        return -self.half_length + self.spacing * np.arange(self.n_points)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.n_points

    @property
    def length(self) -> float:
        return 2.0 * self.half_length


def _alternating(n_modes: int) -> np.ndarray:
    # (-1)^k shifts the first collocation point from 0 to -L
    return np.where(np.arange(n_modes + 1) % 2, -1.0, 1.0)


def to_physical(coefficients: np.ndarray, n_modes: int, n_points: int) -> np.ndarray:
    """Evaluate a Hermitian coefficient array (k = -N..N) on n_points points"""
    half = np.zeros(n_points // 2 + 1, dtype=complex)
    half[:n_modes + 1] = coefficients[n_modes:] * _alternating(n_modes)
    return sp_fft.irfft(half, n=n_points) * n_points


def from_physical(samples: np.ndarray, n_modes: int) -> np.ndarray:
    """Coefficients k = -N..N of real samples on a uniform grid starting at -L"""
    n_points = samples.shape[-1]
    half = sp_fft.rfft(samples)[:n_modes + 1] * (_alternating(n_modes) / n_points)
    return np.concatenate([np.conj(half[:0:-1]), half])


def hermitian_defect(coefficients: np.ndarray) -> float:
    """Largest |c(k) - conj(c(-k))| relative to the largest coefficient"""
    scale = np.max(np.abs(coefficients)) if coefficients.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(coefficients - np.conj(coefficients[::-1]))) / scale)


def symmetrize_coefficients(coefficients: np.ndarray) -> np.ndarray:
    """Project onto the Hermitian (real-field) subspace"""
    return 0.5 * (coefficients + np.conj(coefficients[::-1]))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """
    Fourier coefficients u(k), k = -N..N, of a real periodic function

    Attributes:
        coefficients (np.ndarray): Complex array of length 2N+1, index k+N
        grid (PeriodicGrid): Grid the field lives on
    """

    coefficients: np.ndarray
    grid: PeriodicGrid

    def __post_init__(self):
        coefficients = np.asarray(self.coefficients, dtype=complex)
        expected = 2 * self.grid.n_modes + 1
        if coefficients.shape != (expected,):
            raise DimensionError(
                f"Expected {expected} coefficients for N={self.grid.n_modes}. Got shape {coefficients.shape}"
            )
        object.__setattr__(self, 'coefficients', coefficients)

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> 'SpectralField':
        return cls(np.zeros(2 * grid.n_modes + 1, dtype=complex), grid)

    @classmethod
    def from_function(cls, func: Callable, grid: PeriodicGrid) -> 'SpectralField':
        """Project a callable onto the grid's modes (P_N through sampling)"""
        return analyze(func(grid.points), grid)

    @property
    def n_modes(self) -> int:
        return self.grid.n_modes

    def coefficient(self, k: int) -> complex:
        return complex(self.coefficients[k + self.n_modes])

    def _check_compatible(self, other: 'SpectralField'):
        if other.grid != self.grid:
            raise DimensionError(f"Fields live on different grids: {self.grid} vs {other.grid}")

    def __add__(self, other: 'SpectralField') -> 'SpectralField':
        self._check_compatible(other)
        return SpectralField(self.coefficients + other.coefficients, self.grid)

    def __sub__(self, other: 'SpectralField') -> 'SpectralField':
        self._check_compatible(other)
        return SpectralField(self.coefficients - other.coefficients, self.grid)

    def __mul__(self, scalar: float) -> 'SpectralField':
        return SpectralField(self.coefficients * scalar, self.grid)

    __rmul__ = __mul__

    def __neg__(self) -> 'SpectralField':
        return SpectralField(-self.coefficients, self.grid)

    def symmetrize(self) -> 'SpectralField':
        return SpectralField(symmetrize_coefficients(self.coefficients), self.grid)

    def is_hermitian(self, rtol: float = HERMITIAN_RTOL) -> bool:
        return hermitian_defect(self.coefficients) <= rtol

    def resample(self, grid: PeriodicGrid) -> 'SpectralField':
        """
        Move the field to another grid with the same half length

        Modes beyond the target N are dropped, missing modes are zero.
        """
        if grid.half_length != self.grid.half_length:
            raise DimensionError(
                f"Cannot resample from L={self.grid.half_length} to L={grid.half_length}"
            )
        shared = min(grid.n_modes, self.n_modes)
        out = np.zeros(2 * grid.n_modes + 1, dtype=complex)
        out[grid.n_modes - shared:grid.n_modes + shared + 1] = \
            self.coefficients[self.n_modes - shared:self.n_modes + shared + 1]
        return SpectralField(out, grid)

    def evaluate(self, x: Union[float, np.ndarray]) -> np.ndarray:
        """Direct summation of sum_k u(k) exp(i kappa(k) x) at arbitrary points"""
        x = np.asarray(x, dtype=float)
        phases = np.exp(1j * np.multiply.outer(x, self.grid.wavenumbers))
        return np.real(phases @ self.coefficients)


def analyze(samples: Sequence[float], grid: PeriodicGrid) -> SpectralField:
    """
    Truncated discrete Fourier coefficients of grid samples (realizes P_N)

    Args:
        samples (Sequence[float]): Real values at grid.points
        grid (PeriodicGrid): Target grid

    Returns:
        SpectralField: Coefficients for k = -N..N

    Raises:
        DimensionError: If the sample count differs from grid.n_points
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1 or samples.shape[0] != grid.n_points:
        raise DimensionError(
            f"Expected {grid.n_points} samples on the grid. Got shape {samples.shape}"
        )
    return SpectralField(from_physical(samples, grid.n_modes), grid)


def synthesize(field: SpectralField, n_points: Optional[int] = None) -> np.ndarray:
    """
    Real samples of a field on its collocation grid

    Args:
        field (SpectralField): Hermitian-symmetric coefficients
        n_points (int, optional): Evaluate on a uniform grid of this size instead

    Returns:
        np.ndarray: Real samples starting at x = -L

    Raises:
        SymmetryError: If the coefficients are not Hermitian within tolerance
    """
    defect = hermitian_defect(field.coefficients)
    if defect > HERMITIAN_RTOL:
        raise SymmetryError(f"Coefficients are not Hermitian (relative defect {defect:.3e})")

    n_points = field.grid.n_points if n_points is None else n_points
    if n_points < 2 * field.n_modes + 1:
        raise DimensionError(f"n_points must be at least {2 * field.n_modes + 1}. Got: {n_points}")
    return to_physical(field.coefficients, field.n_modes, n_points)


def frac_laplacian(field: SpectralField, alpha: float) -> SpectralField:
    """
    Fractional Laplacian D^alpha with multiplier |kappa(k)|^alpha

    Mode zero maps to 0 for alpha > 0 and is kept for alpha = 0.
    """
    if alpha < 0:
        raise ParameterError(f"alpha must be non-negative. Got: {alpha}")
    multiplier = np.abs(field.grid.wavenumbers) ** alpha
    return SpectralField(field.coefficients * multiplier, field.grid)


def derivative_x(field: SpectralField) -> SpectralField:
    return SpectralField(field.coefficients * (1j * field.grid.wavenumbers), field.grid)


def sobolev_weights(grid: PeriodicGrid, r: float) -> np.ndarray:
    if r < 0:
        raise ParameterError(f"Sobolev exponent must be non-negative. Got: {r}")
    return (1.0 + grid.wavenumbers ** 2) ** r


def sobolev_norm(field: SpectralField, r: float = 0.0) -> float:
    """
    Coefficient-space Sobolev norm (sum (1+|kappa|^2)^r |u(k)|^2)^(1/2)

    r = 0 gives the plain l2 norm of the coefficients.
    """
    weights = sobolev_weights(field.grid, r)
    return float(np.sqrt(np.sum(weights * np.abs(field.coefficients) ** 2)))


def dealias(field: SpectralField) -> SpectralField:
    """Two-thirds rule: zero every mode with |k| > floor(2N/3)"""
    cutoff = (2 * field.n_modes) // 3
    coefficients = np.where(np.abs(field.grid.modes) > cutoff, 0.0, field.coefficients)
    return SpectralField(coefficients, field.grid)


def product(f: SpectralField, g: SpectralField, dealiased: bool = True) -> SpectralField:
    """
    Pointwise product truncated to the fields' N modes

    Args:
        f (SpectralField): First factor
        g (SpectralField): Second factor, same grid
        dealiased (bool): Evaluate on at least 3N+1 points (exact truncated
            product); False evaluates on the minimal 2N+1 points and aliases

    Returns:
        SpectralField: P_N(f g)
    """
    f._check_compatible(g)
    n_modes = f.n_modes
    if dealiased:
        n_points = max(f.grid.n_points, 3 * n_modes + 1)
    else:
        n_points = 2 * n_modes + 1
    values = to_physical(f.coefficients, n_modes, n_points) * to_physical(g.coefficients, n_modes, n_points)
    return SpectralField(from_physical(values, n_modes), f.grid)


def inner_product(f: SpectralField, g: SpectralField) -> float:
    """Physical inner product (f, g) = integral of f conj(g) over [-L, L]"""
    f._check_compatible(g)
    return float(np.real(f.grid.length * np.vdot(g.coefficients, f.coefficients)))


def l2_norm(field: SpectralField) -> float:
    """Physical L2 norm via Parseval: sqrt(2L) times the coefficient l2 norm"""
    return float(np.sqrt(field.grid.length) * np.linalg.norm(field.coefficients))


def sup_norm(field: SpectralField) -> float:
    return float(np.max(np.abs(synthesize(field))))


def projection_error(f_samples: Sequence[float], n_small: int, r: float = 0.0,
                     half_length: float = np.pi) -> float:
    """
    Norm of f - P_N f for samples of f on a uniform grid

    The samples fix the resolution; the discarded tail is measured in the
    H^r coefficient norm.

    Args:
        f_samples (Sequence[float]): Samples on x_j = -L + 2Lj/n
        n_small (int): Truncation order N
        r (float): Sobolev index of the error norm
        half_length (float): L

    Returns:
        float: ||f - P_N f||_r
    """
    samples = np.asarray(f_samples, dtype=float)
    grid = PeriodicGrid(n_modes=(samples.size - 1) // 2, half_length=half_length, n_points=samples.size)
    if not 0 <= n_small < grid.n_modes:
        raise ParameterError(
            f"Truncation order must be below the sample resolution N={grid.n_modes}. Got: {n_small}"
        )

    field = analyze(samples, grid)
    tail = np.where(np.abs(grid.modes) <= n_small, 0.0, field.coefficients)
    return sobolev_norm(SpectralField(tail, grid), r)


def product_estimate_ratio(f: SpectralField, g: SpectralField, alpha: float) -> float:
    """
    Ratio ||D^a(fg)|| / (C (||f||_inf ||D^a g|| + ||g||_inf ||D^a f||)) with C = 2^a

    Values at most 1 mean the product estimate holds for the pair.
    """
    lhs = l2_norm(frac_laplacian(product(f, g), alpha))
    rhs = 2.0 ** alpha * (
        sup_norm(f) * l2_norm(frac_laplacian(g, alpha))
        + sup_norm(g) * l2_norm(frac_laplacian(f, alpha))
    )
    if rhs == 0.0:
        return 0.0
    return lhs / rhs
