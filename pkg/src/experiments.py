"""
Convergence and Zero-Dispersion Studies
Error tables, convergence rates and eps sweeps built on the solver
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .constants import (
    CONVERGENCE_COLUMNS, EXAMPLE_SETUPS, REFERENCE_KINDS, SELF_REFERENCE_FACTOR, SWEEP_COLUMNS,
)
from .invariants import report
from .reference import (
    MultivaluedError, NoBreakingError, break_point, bo_soliton, evaluate_beta_profile,
    hopf_solution, initial_datum, kdv_one_soliton, read_beta_profile,
)
from .solver import ModelParams, SolverConfig, Trajectory, run
from .spectral import NumericalError, ParameterError, PeriodicGrid, SpectralField, sup_norm, synthesize

logger = logging.getLogger(__name__)

Reference = Union[Callable, SpectralField]


@dataclass
class ConvergenceRow:
    """One row of a convergence table; error is NaN and status holds the message when the run failed"""

    n_modes: int
    error: float
    rate: Optional[float] = None
    i1: float = float('nan')
    i2: float = float('nan')
    i3: float = float('nan')
    status: str = 'ok'

    def to_dict(self) -> Dict:
        return {
            'N': self.n_modes,
            'E': self.error,
            'R': self.rate,
            'I1': self.i1,
            'I2': self.i2,
            'I3': self.i3,
            'status': self.status,
        }


@dataclass
class EpsSweepRow:
    eps: float
    error: float
    t_eval: float
    reference_kind: str

    def to_dict(self) -> Dict:
        return {'eps': self.eps, 'E': self.error, 't': self.t_eval, 'reference_kind': self.reference_kind}


@dataclass
class ReferenceDescriptor:
    """
    What a zero-dispersion run is compared against

    Attributes:
        kind (str): 'hopf', 'elliptic-file' or 'exact'
        beta_path (str): Branch point CSV for 'elliptic-file'
        q (float): Phase for 'elliptic-file' when the CSV has no q column
        exact (Callable): (x, t, eps) -> u for 'exact'
        window (Tuple[float, float]): Optional sub-window for the sup error
    """

    kind: str = 'hopf'
    beta_path: Optional[str] = None
    q: float = 0.0
    exact: Optional[Callable] = None
    window: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.kind not in REFERENCE_KINDS:
            raise ParameterError(f"Unknown reference kind '{self.kind}'. Must be one of {REFERENCE_KINDS}")
        if self.kind == 'elliptic-file' and not self.beta_path:
            raise ParameterError("Reference kind 'elliptic-file' needs a beta profile path")
        if self.kind == 'exact' and self.exact is None:
            raise ParameterError("Reference kind 'exact' needs an exact solution callable")
        if self.window is not None:
            if len(self.window) != 2 or not self.window[0] < self.window[1]:
                raise ParameterError(f"Window must be two increasing positions a,b. Got: {list(self.window)}")
            self.window = (float(self.window[0]), float(self.window[1]))


@dataclass
class ExampleSetup:
    """A named example configuration, resolved to solver inputs"""

    name: str
    params: ModelParams
    u0: Callable
    t_final: float
    dt_divisor: float
    reference: str
    n_list: List[int] = field(default_factory=list)
    exact: Optional[Callable] = None


def example_setup(name: str) -> ExampleSetup:
    """
    Resolve one of the EXAMPLE_SETUPS entries

    Raises:
        ParameterError: If the name is unknown
    """
    if name not in EXAMPLE_SETUPS:
        raise ParameterError(f"Unknown setup '{name}'. Must be one of {sorted(EXAMPLE_SETUPS)}")
    entry = EXAMPLE_SETUPS[name]
    params = ModelParams(**entry['model'])
    initial = dict(entry['initial'])
    datum_name = initial.pop('name')
    if datum_name == 'bo-soliton':
        initial.setdefault('lam', params.lam)
    u0 = initial_datum(datum_name, half_length=params.half_length, **initial)

    exact = None
    if datum_name == 'kdv-soliton':
        exact = kdv_one_soliton
    elif datum_name == 'bo-soliton':
        c = initial.get('c', 0.25)
        exact = lambda x, t: bo_soliton(x, t, c, params.half_length, params.lam)

    return ExampleSetup(
        name=name,
        params=params,
        u0=u0,
        t_final=entry['t_final'],
        dt_divisor=entry['dt_divisor'],
        reference=entry['reference'],
        n_list=list(entry['n_list']),
        exact=exact,
    )


def rate(e1: float, e2: float, n1: int, n2: int) -> float:
    """
    Observed convergence rate R = (ln E(N1) - ln E(N2)) / (ln N2 - ln N1)

    Raises:
        ParameterError: If an error is not positive or n2 <= n1
    """
    if not (e1 > 0 and e2 > 0):
        raise ParameterError(f"Errors must be positive to compute a rate. Got: {e1}, {e2}")
    if not n2 > n1:
        raise ParameterError(f"Resolutions must increase. Got: {n1} -> {n2}")
    return float((np.log(e1) - np.log(e2)) / (np.log(n2) - np.log(n1)))


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log y against log x"""
    slope, _ = np.polyfit(np.log(np.asarray(xs, dtype=float)), np.log(np.asarray(ys, dtype=float)), 1)
    return float(slope)


def datum_dt(u0: SpectralField, divisor: float = 1.0) -> float:
    """dt = 1 / (divisor * N * ||P_N u0||_inf)"""
    peak = sup_norm(u0)
    if peak == 0.0:
        raise ParameterError("Cannot derive dt from a zero initial datum; set dt explicitly")
    return 1.0 / (divisor * u0.n_modes * peak)


def solver_config(u0: Callable, p: ModelParams, n_modes: int, t_final: float,
                  dt: Optional[float] = None, dt_divisor: float = 1.0, **options) -> SolverConfig:
    """SolverConfig with dt from the initial datum when not given"""
    if dt is None:
        grid = PeriodicGrid.for_modes(n_modes, p.half_length)
        dt = datum_dt(SpectralField.from_function(u0, grid), dt_divisor)
    return SolverConfig(n_modes=n_modes, dt=dt, t_final=t_final, **options)


def l2_error(u_num: SpectralField, u_ref: Reference) -> float:
    """
    L2 distance on [-L, L] to a callable or to a finer SpectralField

    A callable is sampled on the collocation grid (trapezoid rule, exact for
    the band-limited part); a field is compared in coefficient space on the
    finer of the two grids.
    """
    if isinstance(u_ref, SpectralField):
        grid = u_ref.grid if u_ref.n_modes >= u_num.n_modes else u_num.grid
        difference = u_num.resample(grid).coefficients - u_ref.resample(grid).coefficients
        return float(np.sqrt(grid.length) * np.linalg.norm(difference))

    grid = u_num.grid
    difference = synthesize(u_num) - np.asarray(u_ref(grid.points), dtype=float)
    return float(np.sqrt(grid.length * np.mean(difference ** 2)))


def sup_error(u_num: SpectralField, u_ref: Callable, window: Optional[Tuple[float, float]] = None) -> float:
    """
    Largest |u_num - u_ref| over collocation points inside the window

    Raises:
        ParameterError: If the window leaves [-L, L] or contains no grid point
    """
    grid = u_num.grid
    points = grid.points
    mask = np.ones(points.shape, dtype=bool)
    if window is not None:
        a, b = window
        if a < -grid.half_length or b > grid.half_length or not b >= a:
            raise ParameterError(f"Window must lie inside [-{grid.half_length}, {grid.half_length}]. Got: {window}")
        mask = (points >= a) & (points <= b)
        if not mask.any():
            raise ParameterError(f"Window {window} contains no collocation point")
    difference = synthesize(u_num)[mask] - np.asarray(u_ref(points[mask]), dtype=float)
    return float(np.max(np.abs(difference)))


def map_ordered(func: Callable, items: Iterable, jobs: int = 1) -> List:
    """Apply func to items on a thread pool; results keep input order"""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(jobs, len(items))) as executor:
        return list(executor.map(func, items))


def _run_final(u0: Callable, p: ModelParams, n_modes: int, t_final: float, dt_divisor: float,
               solver_options: Dict) -> Trajectory:
    config = solver_config(u0, p, n_modes, t_final, dt_divisor=dt_divisor, **solver_options)
    return run(u0, p, config)


def convergence_study(setup: Union[str, ExampleSetup], n_list: Sequence[int],
                      reference_n: Optional[int] = None, jobs: int = 1,
                      solver_options: Optional[Dict] = None) -> List[ConvergenceRow]:
    """
    Error, rate and final invariants for each N of a named setup

    Args:
        setup: Setup name ('example-5.1', 'example-5.2', 'example-5.3') or a resolved setup
        n_list (Sequence[int]): Increasing resolutions
        reference_n (int, optional): Self-reference resolution, default 8x the largest N
        jobs (int): Concurrent runs
        solver_options (Dict, optional): Extra SolverConfig fields (fp_tolerance, ...)

    Returns:
        List[ConvergenceRow]: One row per N in input order; failed runs are annotated
    """
    setup = example_setup(setup) if isinstance(setup, str) else setup
    n_list = [int(n) for n in n_list]
    if not n_list:
        raise ParameterError("n_list must contain at least one resolution")
    if any(b <= a for a, b in zip(n_list[:-1], n_list[1:])):
        raise ParameterError(f"n_list must be strictly increasing. Got: {n_list}")
    solver_options = dict(solver_options or {})
    p = setup.params

    if setup.reference == 'self':
        reference_n = reference_n or SELF_REFERENCE_FACTOR * max(n_list)
        logger.info(f"{setup.name}: computing self-reference at N={reference_n}")
        reference = _run_final(setup.u0, p, reference_n, setup.t_final, setup.dt_divisor, solver_options).final
    elif setup.exact is not None:
        reference = lambda x: setup.exact(x, setup.t_final)
    else:
        raise ParameterError(f"Setup {setup.name} has no convergence reference")

    def one_row(n_modes: int) -> ConvergenceRow:
        try:
            trajectory = _run_final(setup.u0, p, n_modes, setup.t_final, setup.dt_divisor, solver_options)
        except NumericalError as exc:
            logger.warning(f"{setup.name}: run at N={n_modes} failed: {exc}")
            return ConvergenceRow(n_modes=n_modes, error=float('nan'), status=str(exc))
        final = report(trajectory, p).final()
        return ConvergenceRow(
            n_modes=n_modes,
            error=l2_error(trajectory.final, reference),
            i1=final['I1'],
            i2=final['I2'],
            i3=final['I3'],
        )

    rows = map_ordered(one_row, n_list, jobs)
    for previous, current in zip(rows[:-1], rows[1:]):
        if previous.error > 0 and current.error > 0:
            current.rate = rate(previous.error, current.error, previous.n_modes, current.n_modes)

    for row in rows:
        logger.info(f"{setup.name}: N={row.n_modes} E={row.error:.3e} R={row.rate}")
    return rows


def reference_callable(reference: ReferenceDescriptor, u0: Callable, p: ModelParams,
                       t_eval: float) -> Callable:
    """
    Reference solution at t_eval as a function of x (eps is bound per run)

    Returns:
        Callable: (x, eps) -> u_ref(x)
    """
    if reference.kind == 'hopf':
        interval = (-p.half_length, p.half_length)
        try:
            t_c = break_point(u0, p.lam, interval).t_c
        except NoBreakingError:
            t_c = float('inf')
        if t_eval >= t_c:
            raise MultivaluedError(
                f"Hopf reference needs t < t_c = {t_c:.12g}; requested t={t_eval}", t_c
            )
        return lambda x, eps: hopf_solution(u0, x, t_eval, p.lam, interval=interval, t_c=t_c)

    if reference.kind == 'exact':
        return lambda x, eps: reference.exact(x, t_eval, eps)

    raise ParameterError("Branch point references are evaluated at the profile positions, not on the grid")


def _profile_error(u_num: SpectralField, profile: pd.DataFrame, reference: ReferenceDescriptor,
                   t_eval: float, eps: float) -> float:
    """Sup error at the branch point profile positions, the numerical field summed there directly"""
    positions = profile['x'].to_numpy(dtype=float)
    values = evaluate_beta_profile(profile, t_eval, eps, reference.q)
    if reference.window is not None:
        mask = (positions >= reference.window[0]) & (positions <= reference.window[1])
        positions, values = positions[mask], values[mask]
    return float(np.max(np.abs(u_num.evaluate(positions) - values)))


def zdl_sweep(u0: Callable, p_base: ModelParams, eps_list: Sequence[float], t_eval: float,
              reference: ReferenceDescriptor, n_modes: int, dt_divisor: float = 8.0,
              jobs: int = 1, solver_options: Optional[Dict] = None) -> List[EpsSweepRow]:
    """
    Sup error E(eps) at t_eval for a sequence of dispersion parameters

    Args:
        u0 (Callable): Initial datum
        p_base (ModelParams): Model parameters; eps is replaced per row
        eps_list (Sequence[float]): Dispersion parameters
        t_eval (float): Evaluation time
        reference (ReferenceDescriptor): Hopf, branch point file or exact solution
        n_modes (int): Resolution used for every eps
        dt_divisor (float): dt = 1 / (divisor N ||u0||_inf)
        jobs (int): Concurrent runs

    Returns:
        List[EpsSweepRow]: Rows in the order of eps_list

    Raises:
        MultivaluedError: If the Hopf reference is requested at or after the break time
    """
    solver_options = dict(solver_options or {})
    if reference.kind == 'elliptic-file':
        profile = read_beta_profile(reference.beta_path)
        reference_at = None
    else:
        profile = None
        reference_at = reference_callable(reference, u0, p_base, t_eval)
    logger.info(f"ZDL sweep: N={n_modes}, t={t_eval}, reference={reference.kind}, eps={list(eps_list)}")

    def one_row(eps: float) -> EpsSweepRow:
        p = replace(p_base, eps=eps)
        trajectory = _run_final(u0, p, n_modes, t_eval, dt_divisor, solver_options)
        if profile is not None:
            error = _profile_error(trajectory.final, profile, reference, t_eval, eps)
        else:
            error = sup_error(trajectory.final, lambda x: reference_at(x, eps), reference.window)
        logger.info(f"ZDL sweep: eps={eps:.3e} E={error:.3e}")
        return EpsSweepRow(eps=eps, error=error, t_eval=t_eval, reference_kind=reference.kind)

    return map_ordered(one_row, list(eps_list), jobs)


def alpha_sweep(u0: Callable, p_base: ModelParams, alphas: Sequence[float], t_eval: float,
                n_modes: int, dt_divisor: float = 1.0, jobs: int = 1,
                solver_options: Optional[Dict] = None) -> pd.DataFrame:
    """
    Final profiles for several fractional orders at fixed eps

    Returns:
        pd.DataFrame: Column x plus one column u_alpha=<value> per order
    """
    solver_options = dict(solver_options or {})

    def one_profile(alpha: float) -> np.ndarray:
        p = replace(p_base, alpha=alpha)
        return synthesize(_run_final(u0, p, n_modes, t_eval, dt_divisor, solver_options).final)

    profiles = map_ordered(one_profile, list(alphas), jobs)
    grid = PeriodicGrid.for_modes(n_modes, p_base.half_length)
    frame = pd.DataFrame({'x': grid.points})
    for alpha, values in zip(alphas, profiles):
        frame[f'u_alpha={alpha:g}'] = values
    return frame


def convergence_table(rows: Sequence[ConvergenceRow]) -> pd.DataFrame:
    return pd.DataFrame([row.to_dict() for row in rows], columns=CONVERGENCE_COLUMNS)


def sweep_table(rows: Sequence[EpsSweepRow]) -> pd.DataFrame:
    return pd.DataFrame([row.to_dict() for row in rows], columns=SWEEP_COLUMNS)
