"""
Reference Solutions
Solitons, break time, Hopf characteristics and elliptic asymptotics for checking the solver
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy import optimize, special

from .spectral import NumericalError, ParameterError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

BREAK_SCAN_POINTS = 100_000
HOPF_TOLERANCE = 1e-12
HOPF_MAX_ITERS = 100
THETA_TERM_CUTOFF = 1e-16
QUADRATURE_NODES = 64

BETA_COLUMNS = ['x', 'beta1', 'beta2', 'beta3']


class NoBreakingError(NumericalError):
    """Initial datum has no negative slope, characteristics never cross"""
    pass


class MultivaluedError(NumericalError):
    """Hopf solution requested at or after the break time"""

    def __init__(self, message: str, t_c: float):
        super().__init__(message)
        self.t_c = t_c


class RootFindError(NumericalError):
    pass


class DivergentSeriesError(NumericalError):
    """Theta series requested with Im(tau) <= 0"""
    pass


@dataclass(frozen=True)
class BreakPoint:
    """Gradient catastrophe point of the Hopf flow"""

    t_c: float
    x_c: float
    u_c: float
    xi: float


@dataclass(frozen=True)
class BetaTriple:
    """Whitham branch points beta1 >= beta2 >= beta3 at one (x, t)"""

    beta1: float
    beta2: float
    beta3: float

    def __post_init__(self):
        if not self.beta1 >= self.beta2 >= self.beta3:
            raise ParameterError(
                f"Branch points must satisfy beta1 >= beta2 >= beta3. "
                f"Got: ({self.beta1}, {self.beta2}, {self.beta3})"
            )

    @property
    def total(self) -> float:
        return self.beta1 + self.beta2 + self.beta3


@dataclass(frozen=True)
class EllipticData:
    """Complete elliptic integrals at modulus s and the theta parameter tau = iK'/K"""

    s: float
    K: float
    E: float
    tau: complex

    @property
    def nome(self) -> float:
        return float(np.exp(-np.pi * self.tau.imag))


# Exact solutions

def kdv_one_soliton(x: ArrayLike, t: ArrayLike) -> ArrayLike:
    """
    Soliton of u_t + u u_x + u_xxx = 0 with amplitude 9 and speed 3

    u = 9 sech^2((sqrt(3)/2)(x - 3t)). Amplitude 12B^2 and speed 4B^2 fix the
    width B = sqrt(3)/2.
    """
    return 9.0 / np.cosh(0.5 * np.sqrt(3.0) * (np.asarray(x) - 3.0 * np.asarray(t))) ** 2


def bo_soliton(x: ArrayLike, t: ArrayLike, c: float, half_length: float, lam: float = 1.0) -> ArrayLike:
    """
    Periodic travelling wave of u_t + lam u u_x - D u_x = 0 on [-L, L]

    Args:
        x: Positions
        t: Time
        c (float): Wave speed
        half_length (float): L, the wave is 2L-periodic
        lam (float): Nonlinearity coefficient

    Returns:
        u = 2 c delta^2 / (lam (1 - sqrt(1 - delta^2) cos(c delta (x - ct)))), delta = pi/(cL)

    Raises:
        ParameterError: If cL < pi (no real wave)
    """
    if not c > 0 or not half_length > 0:
        raise ParameterError(f"Wave speed and half length must be positive. Got: c={c}, L={half_length}")
    if not lam > 0:
        raise ParameterError(f"lambda must be positive for the travelling wave. Got: {lam}")
    delta = np.pi / (c * half_length)
    if delta > 1.0:
        raise ParameterError(f"Periodic wave needs c*L >= pi. Got: c*L = {c * half_length:.6g}")

    phase = c * delta * (np.asarray(x) - c * np.asarray(t))
    return 2.0 * c * delta ** 2 / (lam * (1.0 - np.sqrt(1.0 - delta ** 2) * np.cos(phase)))


def bo_soliton_mean(c: float, half_length: float, lam: float = 1.0) -> float:
    """Spatial mean 2 c delta / lam of the periodic wave"""
    return 2.0 * c * (np.pi / (c * half_length)) / lam


# Named initial data

def sech2(x: ArrayLike) -> ArrayLike:
    """u0 = -sech^2 x"""
    return -1.0 / np.cosh(x) ** 2


def sine(amplitude: float = 0.5, wavenumber: int = 1, half_length: float = np.pi) -> Callable:
    """u0 = a sin(k pi x / L)"""
    def u0(x):
        return amplitude * np.sin(wavenumber * np.pi * np.asarray(x) / half_length)
    return u0


def initial_datum(name: str, half_length: float = np.pi, **params) -> Callable:
    """
    Callable initial datum by name

    Args:
        name (str): 'sech2', 'sine', 'kdv-soliton' or 'bo-soliton'
        half_length (float): Domain half length
        **params: amplitude/wavenumber for 'sine', c/lam for 'bo-soliton'

    Returns:
        Callable: x -> u0(x)
    """
    if name == 'sech2':
        return sech2
    if name == 'sine':
        return sine(params.get('amplitude', 0.5), params.get('wavenumber', 1), half_length)
    if name == 'kdv-soliton':
        return lambda x: kdv_one_soliton(x, 0.0)
    if name == 'bo-soliton':
        c = params.get('c', 0.25)
        lam = params.get('lam', 1.0)
        bo_soliton(0.0, 0.0, c, half_length, lam)
        return lambda x: bo_soliton(x, 0.0, c, half_length, lam)
    raise ParameterError(f"Unknown initial datum '{name}'")


# Break time and Hopf characteristics

def _accepts_complex(u0: Callable, sample_at: float) -> bool:
    try:
        value = np.asarray(u0(np.array([sample_at + 1e-20j])))
    except (TypeError, ValueError):
        return False
    return np.iscomplexobj(value) and bool(np.all(np.isfinite(value))) and bool(np.any(value.imag != 0.0))


def derivative_of(u0: Callable, sample_at: float = 0.1234) -> Callable:
    """
    Numerical derivative of u0

    Complex-step differentiation when u0 evaluates on complex input,
    central differences otherwise.
    """
    if _accepts_complex(u0, sample_at):
        def complex_step(x):
            x = np.asarray(x, dtype=float)
            return np.imag(u0(x + 1e-20j)) / 1e-20
        return complex_step

    def central(x):
        x = np.asarray(x, dtype=float)
        h = 1e-6 * np.maximum(1.0, np.abs(x))
        return (u0(x + h) - u0(x - h)) / (2.0 * h)
    return central


def break_point(u0: Callable, lam: float, interval: Tuple[float, float] = (-np.pi, np.pi),
                du0: Optional[Callable] = None, n_scan: int = BREAK_SCAN_POINTS) -> BreakPoint:
    """
    Gradient catastrophe point t_c = 1 / max(-lam u0')

    Args:
        u0 (Callable): Vectorized initial datum
        lam (float): Nonlinearity coefficient
        interval (Tuple[float, float]): Where to search for the steepest descent
        du0 (Callable, optional): Exact derivative of u0
        n_scan (int): Points in the initial scan

    Returns:
        BreakPoint: t_c, x_c = xi + lam t_c u0(xi), u_c = u0(xi) and the argmax xi

    Raises:
        NoBreakingError: If -lam u0' is nowhere positive
    """
    a, b = interval
    if not b > a:
        raise ParameterError(f"Search interval must be increasing. Got: {interval}")
    derivative = du0 if du0 is not None else derivative_of(u0, sample_at=a + 0.3719 * (b - a))

    def steepness(x):
        return -lam * derivative(x)

    xs = np.linspace(a, b, n_scan)
    values = steepness(xs)
    i_max = int(np.argmax(values))
    if lam == 0.0 or not values[i_max] > 0.0:
        raise NoBreakingError(f"Initial datum has no breaking slope on {interval} (lambda={lam})")

    dx = xs[1] - xs[0]
    lo, hi = xs[i_max] - dx, xs[i_max] + dx
    result = optimize.minimize_scalar(
        lambda x: -float(steepness(np.array([x]))[0]),
        bounds=(lo, hi), method='bounded', options={'xatol': 1e-12},
    )
    xi = float(result.x)

    # Polish on the root of the slope of the steepness
    h = 1e-5

    def slope(x):
        return float((steepness(np.array([x + h])) - steepness(np.array([x - h])))[0] / (2.0 * h))

    left, right = xi - dx, xi + dx
    if slope(left) > 0.0 > slope(right):
        xi = optimize.brentq(slope, left, right, xtol=1e-14, rtol=4 * np.finfo(float).eps)

    peak = float(steepness(np.array([xi]))[0])
    t_c = 1.0 / peak
    u_c = float(np.real(u0(np.array([xi]))[0]))
    x_c = xi + lam * t_c * u_c
    logger.debug(f"Break point: t_c={t_c:.12g}, x_c={x_c:.12g}, u_c={u_c:.12g}")
    return BreakPoint(t_c=t_c, x_c=x_c, u_c=u_c, xi=xi)


def hopf_solution(u0: Callable, x: ArrayLike, t: float, lam: float,
                  interval: Tuple[float, float] = (-np.pi, np.pi),
                  du0: Optional[Callable] = None, t_c: Optional[float] = None) -> ArrayLike:
    """
    Solution of u_t + lam u u_x = 0 by characteristics, before breaking

    Solves xi + lam t u0(xi) = x for each x with safeguarded Newton inside the
    bracket [x - lam t max u0, x - lam t min u0] and returns u0(xi).

    Args:
        u0 (Callable): Vectorized initial datum
        x: Scalar or array of positions
        t (float): Time, before the break time
        lam (float): Nonlinearity coefficient
        interval (Tuple[float, float]): Range used to bound u0 and locate the break
        du0 (Callable, optional): Exact derivative of u0
        t_c (float, optional): Known break time, skips the break-point search

    Returns:
        Hopf solution at x (same shape as x)

    Raises:
        MultivaluedError: If t >= t_c
        RootFindError: If Newton does not reach the residual tolerance
    """
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if t == 0.0 or lam == 0.0:
        values = np.asarray(u0(x), dtype=float)
        return float(values[0]) if scalar else values

    derivative = du0 if du0 is not None else derivative_of(u0, sample_at=interval[0] + 0.3719 * (interval[1] - interval[0]))
    if t_c is None:
        try:
            t_c = break_point(u0, lam, interval, du0=derivative).t_c
        except NoBreakingError:
            t_c = float('inf')
    if t >= t_c:
        raise MultivaluedError(
            f"Hopf solution is multivalued for t={t} >= break time t_c={t_c:.12g}", t_c
        )

    samples = np.asarray(u0(np.linspace(interval[0], interval[1], 4097)), dtype=float)
    speed = lam * t
    lo = x - speed * samples.max()
    hi = x - speed * samples.min()

    def residual(xi):
        return xi + speed * np.asarray(u0(xi), dtype=float) - x

    # Bracket may need widening when u0 exceeds its sampled range
    width = np.maximum(hi - lo, 1.0)
    for _ in range(50):
        bad_lo = residual(lo) > 0.0
        bad_hi = residual(hi) < 0.0
        if not (bad_lo.any() or bad_hi.any()):
            break
        lo = np.where(bad_lo, lo - width, lo)
        hi = np.where(bad_hi, hi + width, hi)
        width = 2.0 * width
    else:
        raise RootFindError("Could not bracket the characteristic foot")

    xi = np.clip(x - speed * np.asarray(u0(x), dtype=float), lo, hi)
    for _ in range(HOPF_MAX_ITERS):
        g = residual(xi)
        if np.all(np.abs(g) <= HOPF_TOLERANCE):
            values = np.asarray(u0(xi), dtype=float)
            return float(values[0]) if scalar else values
        lo = np.where(g < 0.0, xi, lo)
        hi = np.where(g > 0.0, xi, hi)
        newton = xi - g / (1.0 + speed * derivative(xi))
        outside = ~np.isfinite(newton) | (newton <= lo) | (newton >= hi)
        xi = np.where(np.abs(g) <= HOPF_TOLERANCE, xi, np.where(outside, 0.5 * (lo + hi), newton))

    raise RootFindError(
        f"Characteristic equation residual {np.max(np.abs(residual(xi))):.3e} above {HOPF_TOLERANCE}"
    )


# Elliptic functions

def _agm(a: float, b: float) -> Tuple[float, float]:
    """Arithmetic-geometric mean of (a, b) and the sum sum_n 2^(n-1) c_n^2 for c_0 = sqrt(a^2 - b^2)"""
    c = np.sqrt(max(a * a - b * b, 0.0))
    total = 0.5 * c * c
    power = 0.5
    for _ in range(64):
        if abs(c) <= 1e-16 * a:
            break
        a, b, c = 0.5 * (a + b), np.sqrt(a * b), 0.5 * (a - b)
        power *= 2.0
        total += power * c * c
    return a, total


def elliptic_KE(s: float) -> EllipticData:
    """
    Complete elliptic integrals K(s), E(s) by the AGM, and tau = i K(s')/K(s)

    Args:
        s (float): Modulus in [0, 1)

    Returns:
        EllipticData: s, K, E and tau (Im tau = inf at s = 0)

    Raises:
        ParameterError: If s is outside [0, 1)
    """
    if not 0.0 <= s < 1.0:
        raise ParameterError(f"Elliptic modulus must be in [0, 1). Got: {s}")

    complement = np.sqrt((1.0 - s) * (1.0 + s))
    mean, total = _agm(1.0, complement)
    K = np.pi / (2.0 * mean)
    E = K * (1.0 - total)

    if s == 0.0:
        tau = complex(0.0, np.inf)
    else:
        K_prime = np.pi / (2.0 * _agm(1.0, s)[0])
        tau = complex(0.0, K_prime / K)
    return EllipticData(s=float(s), K=float(K), E=float(E), tau=tau)


def jacobi_theta3(xi: ArrayLike, tau: complex) -> ArrayLike:
    """
    Theta series mu(xi; tau) = sum_n exp(pi i n^2 tau + 2 pi i n xi)

    Terms are summed symmetrically until exp(-pi n^2 Im tau) drops below 1e-16.

    Raises:
        DivergentSeriesError: If Im(tau) <= 0
    """
    tau = complex(tau)
    if not tau.imag > 0:
        raise DivergentSeriesError(f"Theta series diverges for Im(tau) <= 0. Got: tau={tau}")

    xi = np.asarray(xi, dtype=float)
    if np.isinf(tau.imag):
        return np.ones_like(xi) if xi.ndim else 1.0

    n_max = max(1, int(np.ceil(np.sqrt(-np.log(THETA_TERM_CUTOFF) / (np.pi * tau.imag)))))
    n = np.arange(1, n_max + 1)
    weights = np.exp(1j * np.pi * n ** 2 * tau)
    total = 1.0 + 2.0 * np.real(np.cos(2.0 * np.pi * np.multiply.outer(xi, n)) @ weights)
    return total if xi.ndim else float(total)


def elliptic_modulus(beta: BetaTriple) -> float:
    """s = sqrt((beta2 - beta3) / (beta1 - beta3))"""
    spread = beta.beta1 - beta.beta3
    if not spread > 0:
        raise ParameterError(f"beta1 must exceed beta3. Got: {beta}")
    return float(np.sqrt((beta.beta2 - beta.beta3) / spread))


def weak_limit(beta: BetaTriple) -> float:
    """
    Weak limit u~ = beta1 + beta2 + beta3 + 2 beta_bar

    beta_bar = -beta1 + (beta1 - beta3) E(s)/K(s). The soliton edge s = 1 uses its
    limit u~ = beta3.
    """
    s = elliptic_modulus(beta)
    if s >= 1.0:
        return float(beta.beta3)
    data = elliptic_KE(s)
    beta_bar = -beta.beta1 + (beta.beta1 - beta.beta3) * data.E / data.K
    return float(beta.total + 2.0 * beta_bar)


def elliptic_argument(x: ArrayLike, t: float, eps: float, beta: BetaTriple, q: float,
                      data: Optional[EllipticData] = None) -> ArrayLike:
    """Theta argument sqrt(beta1 - beta3) / (2 eps K) (x - 2t(beta1+beta2+beta3) - q)"""
    data = data if data is not None else elliptic_KE(elliptic_modulus(beta))
    scale = np.sqrt(beta.beta1 - beta.beta3) / (2.0 * eps * data.K)
    return scale * (np.asarray(x, dtype=float) - 2.0 * t * beta.total - q)


def elliptic_period(eps: float, beta: BetaTriple) -> float:
    """Spatial period of the frozen-beta elliptic solution"""
    data = elliptic_KE(elliptic_modulus(beta))
    return float(2.0 * eps * data.K / np.sqrt(beta.beta1 - beta.beta3))


def elliptic_asymptotic_u(x: ArrayLike, t: float, eps: float, beta: BetaTriple, q: float) -> ArrayLike:
    """
    Small-dispersion elliptic solution with frozen branch points

    u = u~ + 2 eps^2 d^2/dx^2 log mu(argument; tau), the x-derivative taken by
    centred differences with step h = eps * 1e-3.

    Args:
        x: Positions
        t (float): Time
        eps (float): Dispersion parameter
        beta (BetaTriple): Branch points, treated as constant in x
        q (float): Phase shift

    Returns:
        Asymptotic solution at x
    """
    if not eps > 0:
        raise ParameterError(f"eps must be positive. Got: {eps}")
    data = elliptic_KE(elliptic_modulus(beta))
    h = eps * 1e-3
    x = np.asarray(x, dtype=float)

    def log_mu(points):
        return np.log(jacobi_theta3(elliptic_argument(points, t, eps, beta, q, data), data.tau))

    curvature = (log_mu(x + h) - 2.0 * log_mu(x) + log_mu(x - h)) / h ** 2
    return weak_limit(beta) + 2.0 * eps ** 2 * curvature


def q_phase(beta: BetaTriple, f_minus: Callable, n_nodes: int = QUADRATURE_NODES) -> float:
    """
    Phase q as a double integral over [-1, 1]^2

    q = 1/(2 sqrt(2) pi) int int f_minus(A) / (sqrt(1 - theta) sqrt(1 - gamma^2)) dtheta dgamma,
    A = ((1+theta)/2)(((1+gamma)/2) beta1 + ((1-gamma)/2) beta2) + ((1-theta)/2) beta3.
    Gauss-Chebyshev nodes in gamma, Gauss-Jacobi nodes for the weight (1-theta)^(-1/2) in theta.

    Args:
        beta (BetaTriple): Branch points
        f_minus (Callable): Vectorized function on the range of A
        n_nodes (int): Nodes per direction

    Returns:
        float: q
    """
    gamma, gamma_weights = special.roots_chebyt(n_nodes)
    theta, theta_weights = special.roots_jacobi(n_nodes, -0.5, 0.0)

    upper = 0.5 * (1.0 + gamma) * beta.beta1 + 0.5 * (1.0 - gamma) * beta.beta2
    A = np.outer(0.5 * (1.0 + theta), upper) + (0.5 * (1.0 - theta) * beta.beta3)[:, None]
    values = np.asarray(f_minus(A), dtype=float)
    if values.shape != A.shape:
        values = np.broadcast_to(values, A.shape)
    if not np.all(np.isfinite(values)):
        raise ParameterError("f_minus returned non-finite values on the quadrature nodes")

    return float(theta_weights @ values @ gamma_weights / (2.0 * np.sqrt(2.0) * np.pi))


# Branch point profiles

def read_beta_profile(path: Union[str, Path]) -> pd.DataFrame:
    """
    Load a CSV of branch points along a line at fixed t

    Columns x, beta1, beta2, beta3 are required; an optional q column sets the
    phase per row.

    Raises:
        ParameterError: If the file is missing or unreadable, columns are missing or a row is not ordered
    """
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError as exc:
        raise ParameterError(f"Beta profile does not exist: {path}") from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise ParameterError(f"Cannot parse beta profile {path}: {exc}") from exc
    missing = [column for column in BETA_COLUMNS if column not in frame.columns]
    if missing:
        raise ParameterError(f"Beta profile {path} is missing columns: {', '.join(missing)}")

    unordered = ~((frame['beta1'] >= frame['beta2']) & (frame['beta2'] >= frame['beta3']))
    if unordered.any():
        rows = frame.index[unordered].tolist()[:5]
        raise ParameterError(f"Beta profile {path} has unordered branch points in rows {rows}")
    return frame


def evaluate_beta_profile(profile: pd.DataFrame, t: float, eps: float, q: float = 0.0) -> np.ndarray:
    """
    Asymptotic solution at each row of a branch point profile

    Rows with beta1 = beta3 (no oscillation) return beta1; rows at the soliton
    edge beta1 = beta2 return the weak limit.
    """
    values = np.empty(len(profile))
    has_q = 'q' in profile.columns
    for i, row in enumerate(profile.itertuples(index=False)):
        beta = BetaTriple(row.beta1, row.beta2, row.beta3)
        phase = float(row.q) if has_q else q
        if beta.beta1 == beta.beta3:
            values[i] = beta.beta1
        elif beta.beta1 == beta.beta2:
            values[i] = weak_limit(beta)
        else:
            values[i] = float(elliptic_asymptotic_u(row.x, t, eps, beta, phase))
    return values
