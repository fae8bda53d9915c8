"""
Crank-Nicolson Fourier-Galerkin Solver
Time integration of u_t + lam u u_x - eps^2 D^alpha u_x = 0 on a periodic domain
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .spectral import (
    NumericalError, ParameterError, DimensionError, PeriodicGrid, SpectralField,
    analyze, derivative_x, frac_laplacian, l2_norm, product, sobolev_norm,
    sobolev_weights, symmetrize_coefficients, from_physical, to_physical,
)

logger = logging.getLogger(__name__)

# Explicit RK4 stability bound on |eps^2 kappa_max^(1+alpha) dt|
RK4_STABILITY_LIMIT = 2.8

# Increments below this multiple of machine epsilon are treated as round-off
ROUNDOFF_FACTOR = 1e3


class StepSizeError(NumericalError):
    """Time step violates a stability or contraction guard"""
    pass


class IterationDivergenceError(NumericalError):
    """The fixed-point iteration did not reach its tolerance"""

    def __init__(self, message: str, residual_history: Sequence[float]):
        super().__init__(message)
        self.residual_history = list(residual_history)


class SolverRunError(NumericalError):
    """A step failed during run(); the trajectory up to that point is attached"""

    def __init__(self, message: str, trajectory: 'Trajectory', cause: Exception):
        super().__init__(message)
        self.trajectory = trajectory
        self.cause = cause


@dataclass(frozen=True)
class ModelParams:
    """
    Equation parameters

    Attributes:
        alpha (float): Fractional order in [1, 2] (1: Benjamin-Ono, 2: KdV)
        eps (float): Dispersion coefficient, enters as eps^2
        lam (float): Nonlinearity coefficient lambda (6 or 1 in the usual scalings, 0 gives the linear flow)
        half_length (float): Domain is [-L, L]
    """

    alpha: float = 2.0
    eps: float = 1.0
    lam: float = 6.0
    half_length: float = np.pi

    def __post_init__(self):
        if not 1.0 <= self.alpha <= 2.0:
            raise ParameterError(f"alpha must be between 1 and 2. Got: {self.alpha}")
        if not self.eps > 0:
            raise ParameterError(f"eps must be positive. Got: {self.eps}")
        if not self.lam >= 0:
            raise ParameterError(f"lambda must be non-negative. Got: {self.lam}")
        if not self.half_length > 0:
            raise ParameterError(f"half_length must be positive. Got: {self.half_length}")


@dataclass(frozen=True)
class SolverConfig:
    """
    Discretization parameters

    Attributes:
        n_modes (int): N, modes k = -N..N
        dt (float): Time step
        t_final (float): Final time T
        fp_tolerance (float): Relative increment tolerance of the inner iteration
        fp_max_iters (int): Cap on inner sweeps
        zeta (float): Contraction factor in (0, 1) used by the CFL guard
        enforce_cfl (bool): Raise instead of warn when dt exceeds cfl_max_dt
    """

    n_modes: int
    dt: float
    t_final: float
    fp_tolerance: float = 1e-12
    fp_max_iters: int = 100
    zeta: float = 0.5
    enforce_cfl: bool = False

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise ParameterError(f"n_modes must be a positive integer. Got: {self.n_modes}")
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive. Got: {self.dt}")
        if not self.t_final >= 0:
            raise ParameterError(f"t_final must be non-negative. Got: {self.t_final}")
        if not self.fp_tolerance > 0:
            raise ParameterError(f"fp_tolerance must be positive. Got: {self.fp_tolerance}")
        if self.fp_max_iters < 1:
            raise ParameterError(f"fp_max_iters must be at least 1. Got: {self.fp_max_iters}")
        if not 0 < self.zeta < 1:
            raise ParameterError(f"zeta must be between 0 and 1 (exclusive). Got: {self.zeta}")

    @property
    def eta(self) -> float:
        return (8.0 - self.zeta) / (1.0 - self.zeta)


@dataclass(frozen=True)
class StepDiagnostics:
    """
    Inner-iteration record for one time step

    increments holds ||v^(l+1) - v^l|| in the H^(1+alpha) norm, one entry per sweep.
    """

    iterations: int
    residual: float
    increments: Tuple[float, ...] = ()
    contraction_ratio: float = 0.0

    @property
    def contraction_ratios(self) -> List[float]:
        return _consecutive_ratios(self.increments, floor=0.0)


@dataclass
class Trajectory:
    """Snapshots (time, field) in increasing time order plus per-step diagnostics"""

    snapshots: List[Tuple[float, SpectralField]] = field(default_factory=list)
    step_diagnostics: List[StepDiagnostics] = field(default_factory=list)

    @property
    def times(self) -> List[float]:
        return [t for t, _ in self.snapshots]

    @property
    def fields(self) -> List[SpectralField]:
        return [u for _, u in self.snapshots]

    @property
    def final(self) -> SpectralField:
        return self.snapshots[-1][1]

    @property
    def initial(self) -> SpectralField:
        return self.snapshots[0][1]


def _consecutive_ratios(increments: Sequence[float], floor: float) -> List[float]:
    ratios = []
    for previous, current in zip(increments[:-1], increments[1:]):
        if previous > floor:
            ratios.append(current / previous)
    return ratios


def _check_model_grid(grid: PeriodicGrid, p: ModelParams):
    if not np.isclose(grid.half_length, p.half_length, rtol=1e-14, atol=0.0):
        raise DimensionError(
            f"Field lives on L={grid.half_length} but the model uses L={p.half_length}"
        )


def linear_symbol(grid: PeriodicGrid, p: ModelParams) -> np.ndarray:
    """Per-mode linear multiplier i eps^2 kappa |kappa|^alpha"""
    kappa = grid.wavenumbers
    return 1j * p.eps ** 2 * kappa * np.abs(kappa) ** p.alpha


def cayley_multipliers(grid: PeriodicGrid, p: ModelParams, dt: float) -> np.ndarray:
    """Exact lambda = 0 Crank-Nicolson update (1 + z/2)/(1 - z/2), z = dt * linear_symbol"""
    z = dt * linear_symbol(grid, p)
    return (1.0 + 0.5 * z) / (1.0 - 0.5 * z)


class CrankNicolsonStepper:
    """
    Crank-Nicolson step with the dispersive part solved exactly per mode

    Each sweep solves (1 - z/2) v = (1 + z/2) u^n - dt F((u^n + v)/2) with
    F the coefficients of lam w w_x. Multipliers are precomputed once per (grid, dt).
    """

    def __init__(self, grid: PeriodicGrid, p: ModelParams, dt: float,
                 fp_tolerance: float = 1e-12, fp_max_iters: int = 100):
        self.grid = grid
        self.params = p
        self.dt = dt
        self.fp_tolerance = fp_tolerance
        self.fp_max_iters = fp_max_iters

        z = dt * linear_symbol(grid, p)
        self._explicit = 1.0 + 0.5 * z
        self._implicit = 1.0 - 0.5 * z
        self._flux_symbol = 0.5 * p.lam * 1j * grid.wavenumbers
        self._weights = sobolev_weights(grid, 1.0 + p.alpha)
        self._product_points = max(grid.n_points, 3 * grid.n_modes + 1)

    def flux(self, coefficients: np.ndarray) -> np.ndarray:
        """Coefficients of (lam/2) d/dx P_N(w^2)"""
        if self.params.lam == 0.0:
            return np.zeros_like(coefficients)
        values = to_physical(coefficients, self.grid.n_modes, self._product_points)
        return self._flux_symbol * from_physical(values * values, self.grid.n_modes)

    def _h_norm(self, coefficients: np.ndarray) -> float:
        return float(np.sqrt(np.sum(self._weights * np.abs(coefficients) ** 2)))

    def step(self, coefficients: np.ndarray) -> Tuple[np.ndarray, StepDiagnostics]:
        u_norm = float(np.linalg.norm(coefficients))
        threshold = self.fp_tolerance * u_norm
        floor = ROUNDOFF_FACTOR * np.finfo(float).eps * self._h_norm(coefficients)

        rhs = self._explicit * coefficients
        v = coefficients
        increments = []
        residuals = []

        for sweep in range(1, self.fp_max_iters + 1):
            v_next = (rhs - self.dt * self.flux(0.5 * (coefficients + v))) / self._implicit
            delta = v_next - v
            residual = float(np.linalg.norm(delta))
            residuals.append(residual)
            increments.append(self._h_norm(delta))
            v = v_next

            if not np.isfinite(residual):
                raise IterationDivergenceError(
                    f"Fixed-point iteration produced non-finite values at sweep {sweep}",
                    residuals,
                )
            if residual <= threshold:
                ratios = _consecutive_ratios(increments, floor)
                diagnostics = StepDiagnostics(
                    iterations=sweep,
                    residual=residual,
                    increments=tuple(increments),
                    contraction_ratio=max(ratios) if ratios else 0.0,
                )
                logger.debug(f"CN step converged in {sweep} sweeps (residual {residual:.3e})")
                return symmetrize_coefficients(v), diagnostics

        raise IterationDivergenceError(
            f"Fixed-point iteration did not converge in {self.fp_max_iters} sweeps "
            f"(last increment {residuals[-1]:.3e}, tolerance {threshold:.3e})",
            residuals,
        )


def nonlinear_flux(u: SpectralField, lam: float) -> SpectralField:
    """
    Coefficients of lam u u_x, computed as (lam/2) d/dx of the alias-free product u^2

    Args:
        u (SpectralField): Current state
        lam (float): Nonlinearity coefficient

    Returns:
        SpectralField: (lam/2) i kappa(m) sum_k u(k) u(m-k) on the retained modes
    """
    return derivative_x(product(u, u, dealiased=True)) * (0.5 * lam)


def semi_discrete_rhs(u: SpectralField, p: ModelParams) -> SpectralField:
    """Right-hand side of the Galerkin coefficient ODE"""
    _check_model_grid(u.grid, p)
    dispersive = derivative_x(frac_laplacian(u, p.alpha)) * p.eps ** 2
    return dispersive - nonlinear_flux(u, p.lam)


def cfl_max_dt(u: SpectralField, p: ModelParams, c: SolverConfig) -> float:
    """
    Largest step for which the inner iteration is a contraction

    Returns zeta / (lam N eta ||u||_{1+alpha}), or inf for a zero field or lam = 0.
    """
    norm = sobolev_norm(u, 1.0 + p.alpha)
    if norm == 0.0 or p.lam == 0.0:
        return float('inf')
    return c.zeta / (p.lam * c.n_modes * c.eta * norm)


def cn_step(u_n: SpectralField, p: ModelParams, c: SolverConfig) -> Tuple[SpectralField, StepDiagnostics]:
    """
    One fully discrete Crank-Nicolson step

    Args:
        u_n (SpectralField): State at t_n
        p (ModelParams): Equation parameters
        c (SolverConfig): Discretization (dt, tolerance, CFL enforcement)

    Returns:
        Tuple[SpectralField, StepDiagnostics]: State at t_n + dt and iteration record

    Raises:
        StepSizeError: If enforce_cfl is set and dt exceeds cfl_max_dt(u_n)
        IterationDivergenceError: If the inner iteration does not converge
    """
    _check_model_grid(u_n.grid, p)
    if u_n.n_modes != c.n_modes:
        raise DimensionError(f"Field has N={u_n.n_modes} but the solver is configured for N={c.n_modes}")

    if c.enforce_cfl:
        limit = cfl_max_dt(u_n, p, c)
        if c.dt > limit:
            raise StepSizeError(f"dt={c.dt:.6g} exceeds the CFL bound {limit:.6g}")

    stepper = CrankNicolsonStepper(u_n.grid, p, c.dt, c.fp_tolerance, c.fp_max_iters)
    coefficients, diagnostics = stepper.step(u_n.coefficients)
    return SpectralField(coefficients, u_n.grid), diagnostics


def rk4_step(u_n: SpectralField, p: ModelParams, dt: float) -> SpectralField:
    """
    Classical four-stage explicit step of the semi-discrete system

    Raises:
        StepSizeError: If |eps^2 kappa_max^(1+alpha) dt| exceeds the RK4 stability bound
    """
    kappa_max = float(np.max(np.abs(u_n.grid.wavenumbers)))
    stiffness = abs(p.eps ** 2 * kappa_max ** (1.0 + p.alpha) * dt)
    if stiffness > RK4_STABILITY_LIMIT:
        raise StepSizeError(
            f"RK4 step dt={dt:.6g} is unstable (eps^2 kappa_max^(1+alpha) dt = {stiffness:.3f} > {RK4_STABILITY_LIMIT})"
        )

    k1 = semi_discrete_rhs(u_n, p)
    k2 = semi_discrete_rhs(u_n + k1 * (0.5 * dt), p)
    k3 = semi_discrete_rhs(u_n + k2 * (0.5 * dt), p)
    k4 = semi_discrete_rhs(u_n + k3 * dt, p)
    update = (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
    return (u_n + update).symmetrize()


def _step_schedule(dt: float, t_final: float) -> Tuple[int, float]:
    """Number of steps and the length of the last one so that the run lands on T"""
    if t_final == 0.0:
        return 0, 0.0
    n_steps = max(1, int(np.ceil(t_final / dt - 1e-9)))
    last_dt = t_final - (n_steps - 1) * dt
    return n_steps, last_dt


def initial_field(u0: Union[Sequence[float], Callable], grid: PeriodicGrid) -> SpectralField:
    """P_N u0 from grid samples or a callable evaluated at the collocation points"""
    if callable(u0):
        return SpectralField.from_function(u0, grid)
    return analyze(u0, grid)


def run(u0_samples: Union[Sequence[float], Callable], p: ModelParams, c: SolverConfig,
        snapshot_times: Sequence[float] = ()) -> Trajectory:
    """
    Integrate from P_N u0 to T with Crank-Nicolson steps

    Args:
        u0_samples: Samples of u0 on PeriodicGrid.for_modes(N, L).points, or a callable
        p (ModelParams): Equation parameters
        c (SolverConfig): Discretization
        snapshot_times (Sequence[float]): Requested times in [0, T]; each snaps to
            the nearest completed step. t = 0 and t = T are always recorded.

    Returns:
        Trajectory: Snapshots and per-step diagnostics

    Raises:
        ParameterError: If a snapshot time is outside [0, T]
        SolverRunError: If a step fails; carries the partial trajectory
    """
    for t in snapshot_times:
        if not 0.0 <= t <= c.t_final:
            raise ParameterError(f"Snapshot time must be between 0 and {c.t_final}. Got: {t}")

    grid = PeriodicGrid.for_modes(c.n_modes, p.half_length)
    u = initial_field(u0_samples, grid)

    n_steps, last_dt = _step_schedule(c.dt, c.t_final)
    step_times = np.arange(n_steps + 1) * c.dt
    step_times[-1] = c.t_final
    recorded = {0, n_steps}
    for t in snapshot_times:
        recorded.add(int(np.argmin(np.abs(step_times - t))))

    trajectory = Trajectory(snapshots=[(0.0, u)])
    if n_steps == 0:
        return trajectory

    limit = cfl_max_dt(u, p, c)
    if c.dt > limit and not c.enforce_cfl:
        logger.warning(f"dt={c.dt:.6g} exceeds the CFL bound {limit:.6g}; the inner iteration may contract slowly")

    logger.info(
        f"Running N={c.n_modes}, dt={c.dt:.6g}, T={c.t_final} "
        f"(alpha={p.alpha}, eps={p.eps}, lambda={p.lam}, L={p.half_length:.6g}): {n_steps} steps"
    )

    stepper = CrankNicolsonStepper(grid, p, c.dt, c.fp_tolerance, c.fp_max_iters)
    if np.isclose(last_dt, c.dt, rtol=1e-12, atol=0.0):
        last_stepper = stepper
    else:
        last_stepper = CrankNicolsonStepper(grid, p, last_dt, c.fp_tolerance, c.fp_max_iters)

    coefficients = u.coefficients
    for k in range(1, n_steps + 1):
        active = last_stepper if k == n_steps else stepper
        try:
            if c.enforce_cfl:
                limit = cfl_max_dt(SpectralField(coefficients, grid), p, c)
                if active.dt > limit:
                    raise StepSizeError(f"dt={active.dt:.6g} exceeds the CFL bound {limit:.6g}")
            coefficients, diagnostics = active.step(coefficients)
        except NumericalError as exc:
            raise SolverRunError(
                f"Step {k} at t={step_times[k - 1]:.6g} failed: {exc}", trajectory, exc
            ) from exc

        trajectory.step_diagnostics.append(diagnostics)
        if k in recorded:
            trajectory.snapshots.append((float(step_times[k]), SpectralField(coefficients, grid)))

    iterations = [d.iterations for d in trajectory.step_diagnostics]
    logger.info(f"Run finished at t={c.t_final}: {sum(iterations)} sweeps, at most {max(iterations)} per step")
    return trajectory


def richardson_order(coarse: SpectralField, mid: SpectralField, fine: SpectralField) -> float:
    """Observed order log2(||u_4h - u_2h|| / ||u_2h - u_h||) from three step sizes"""
    numerator = l2_norm(coarse - mid)
    denominator = l2_norm(mid - fine)
    if numerator == 0.0 or denominator == 0.0:
        raise ParameterError("Richardson order is undefined for identical solutions")
    return float(np.log2(numerator / denominator))
