"""
Command-Line Front End
Subcommands solve, converge, zdl, invariants and reference with CSV/manifest outputs
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .constants import (
    DIAGNOSTIC_COLUMNS, EXAMPLE_SETUPS, EXIT_CONFIG_ERROR, EXIT_NUMERICAL_ERROR, EXIT_OK, MODE_COLUMNS,
    OUTPUT_FORMATS, REFERENCE_OUTPUTS, SELF_REFERENCE_FACTOR, THREADS_ENV_VAR,
)
from .config import (
    RunSpec, load_config_file, load_converge_settings, load_reference_settings, load_run_spec, load_zdl_settings,
)
from .experiments import (
    ReferenceDescriptor, convergence_study, convergence_table, example_setup, loglog_slope,
    sweep_table, zdl_sweep,
)
from .exporters import build_manifest, write_dataframe, write_manifest
from .invariants import report
from .reference import (
    bo_soliton, evaluate_beta_profile, hopf_solution, initial_datum, kdv_one_soliton, read_beta_profile,
)
from .solver import ModelParams, Trajectory, run
from .spectral import NumericalError, ParameterError, PeriodicGrid, SpectralField, synthesize
from .validators import InputValidator, ValidationError

logger = logging.getLogger(__name__)


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(',') if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"Expected comma-separated numbers. Got: {text}") from exc


def _int_list(text: str) -> List[int]:
    try:
        return [int(item) for item in text.split(',') if item.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"Expected comma-separated integers. Got: {text}") from exc


def resolve_jobs(requested: Optional[int]) -> int:
    """
    Worker count: --jobs or the logical core count, capped by FKDV_NUM_THREADS

    Raises:
        ValidationError: If the environment cap is not a positive integer
    """
    jobs = requested or os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV_VAR)
    if cap:
        try:
            cap_value = int(cap)
        except ValueError as exc:
            raise ValidationError(f"{THREADS_ENV_VAR} must be a positive integer. Got: {cap}") from exc
        if cap_value < 1:
            raise ValidationError(f"{THREADS_ENV_VAR} must be a positive integer. Got: {cap}")
        jobs = min(jobs, cap_value)
    return max(1, jobs)


def _add_model_flags(parser: argparse.ArgumentParser, with_eps: bool = True):
    group = parser.add_argument_group('model')
    group.add_argument('--alpha', type=float, help='Fractional order in [1, 2]')
    if with_eps:
        group.add_argument('--eps', type=float, help='Dispersion coefficient (enters as eps^2)')
    group.add_argument('--lambda', dest='lam', type=float, help='Nonlinearity coefficient')
    group.add_argument('--half-length', type=float, help='Domain is [-L, L]')


def _add_common_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--config', help='TOML settings or the manifest.json of an earlier run')
    parser.add_argument('--out-dir', help='Output directory')
    parser.add_argument('--format', choices=OUTPUT_FORMATS, help='Table format')
    parser.add_argument('--jobs', type=int, help='Concurrent runs (default: logical cores)')
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    parser.add_argument('-q', '--quiet', action='store_true', help='Warnings and errors only')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='fkdv',
        description='Fourier-Galerkin Crank-Nicolson solver for the periodic fractional KdV equation',
    )
    subparsers = parser.add_subparsers(dest='command', required=True)

    solve = subparsers.add_parser('solve', help='Integrate one initial value problem')
    _add_model_flags(solve)
    group = solve.add_argument_group('solver')
    group.add_argument('--nmodes', dest='n_modes', type=int, help='Number of modes N')
    group.add_argument('--dt', type=float, help='Time step (default 1/(N ||u0||_inf))')
    group.add_argument('--dt-divisor', type=float, help='Divisor in the default time step')
    group.add_argument('--tfinal', dest='t_final', type=float, help='Final time T')
    group.add_argument('--zeta', type=float, help='Contraction factor in (0, 1)')
    group.add_argument('--fp-tol', dest='fp_tolerance', type=float, help='Inner iteration tolerance')
    group.add_argument('--fp-max-iters', type=int, help='Inner iteration cap')
    group.add_argument('--enforce-cfl', action='store_const', const=True, default=None,
                       help='Abort when dt exceeds the CFL bound')
    group = solve.add_argument_group('initial datum')
    group.add_argument('--initial', dest='initial_name', help='sech2, sine, kdv-soliton, bo-soliton or samples-file')
    group.add_argument('--amplitude', type=float, help='Sine amplitude')
    group.add_argument('--wavenumber', type=int, help='Sine wavenumber')
    group.add_argument('--speed', dest='c', type=float, help='Benjamin-Ono wave speed c')
    group.add_argument('--samples', dest='samples_path', help='CSV with columns x, u')
    solve.add_argument('--snapshot-times', type=_float_list, help='Comma-separated times in [0, T]')
    _add_common_flags(solve)
    solve.set_defaults(handler=_handle_solve)

    converge = subparsers.add_parser('converge', help='Convergence table for a named setup')
    converge.add_argument('setup', nargs='?', choices=sorted(EXAMPLE_SETUPS), help='Setup name')
    converge.add_argument('--nlist', dest='n_list', type=_int_list, help='Comma-separated N values')
    converge.add_argument('--reference-n', type=int, help='Self-reference resolution')
    _add_common_flags(converge)
    converge.set_defaults(handler=_handle_converge)

    zdl = subparsers.add_parser('zdl', help='Zero-dispersion error sweep E(eps)')
    _add_model_flags(zdl, with_eps=False)
    zdl.add_argument('--initial', dest='initial_name', help='Named initial datum (default sech2)')
    zdl.add_argument('--nmodes', dest='n_modes', type=int, help='Number of modes N')
    zdl.add_argument('--eps-list', type=_float_list, help='Comma-separated eps values')
    zdl.add_argument('--t-eval', type=float, help='Evaluation time')
    zdl.add_argument('--dt-divisor', type=float, help='Divisor in dt = 1/(divisor N ||u0||_inf)')
    zdl.add_argument('--reference', choices=['hopf', 'elliptic-file'], help='Reference solution (default hopf)')
    zdl.add_argument('--beta-file', help='Branch point CSV (x, beta1, beta2, beta3[, q])')
    zdl.add_argument('--q', type=float, help='Phase when the branch point CSV has no q column')
    zdl.add_argument('--window', type=_float_list, help='Sup-error window a,b')
    zdl.add_argument('--full', action='store_const', const=True, default=None,
                     help='Full resolution instead of desk scale')
    _add_common_flags(zdl)
    zdl.set_defaults(handler=_handle_zdl)

    invariants = subparsers.add_parser('invariants', help='Recompute invariants from a solve output directory')
    invariants.add_argument('directory', help='Output directory of a solve run')
    invariants.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    invariants.add_argument('-q', '--quiet', action='store_true', help='Warnings and errors only')
    invariants.set_defaults(handler=_handle_invariants)

    reference = subparsers.add_parser('reference', help='Evaluate an analytic solution on a line')
    reference.add_argument('kind', nargs='?', choices=REFERENCE_OUTPUTS)
    _add_model_flags(reference)
    reference.add_argument('--t', type=float, help='Time (default 0)')
    reference.add_argument('--speed', dest='c', type=float, help='Benjamin-Ono wave speed c (default 0.25)')
    reference.add_argument('--initial', dest='initial_name', help='Initial datum for hopf (default sech2)')
    reference.add_argument('--beta-file', help='Branch point CSV for elliptic')
    reference.add_argument('--q', type=float, help='Phase for elliptic')
    reference.add_argument('--points', type=int, help='Number of evaluation points (default 1001)')
    _add_common_flags(reference)
    reference.set_defaults(handler=_handle_reference)

    return parser


def configure_logging(args: argparse.Namespace):
    level = logging.INFO
    if getattr(args, 'verbose', False):
        level = logging.DEBUG
    elif getattr(args, 'quiet', False):
        level = logging.WARNING
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def _read_table(path: Path) -> pd.DataFrame:
    if path.suffix == '.parquet':
        return pd.read_parquet(path)
    if path.suffix == '.json':
        return pd.read_json(path, orient='records')
    return pd.read_csv(path, float_precision='round_trip')


def _output_settings(out_dir: Path, fmt: str) -> Dict:
    return {'out_dir': str(out_dir), 'format': fmt}


def modes_frame(field: SpectralField) -> pd.DataFrame:
    """Coefficient table k, re, im of a field"""
    return pd.DataFrame(
        {'k': field.grid.modes, 're': field.coefficients.real, 'im': field.coefficients.imag},
        columns=MODE_COLUMNS,
    )


def field_from_modes(frame: pd.DataFrame, grid: PeriodicGrid) -> SpectralField:
    """
    Inverse of modes_frame on a known grid

    Raises:
        ValidationError: If the table does not hold the grid's modes in order
    """
    if list(frame.columns) != MODE_COLUMNS or frame['k'].tolist() != grid.modes.tolist():
        raise ValidationError(f"Coefficient table does not match N={grid.n_modes}")
    coefficients = np.empty(len(frame), dtype=complex)
    coefficients.real = frame['re'].to_numpy(dtype=float)
    coefficients.imag = frame['im'].to_numpy(dtype=float)
    return SpectralField(coefficients, grid)


# Library-level commands

def cmd_solve(spec: RunSpec) -> int:
    """
    Run one solve and write snapshots, coefficients, invariants, diagnostics and a manifest

    Args:
        spec (RunSpec): Validated run spec

    Returns:
        int: Exit status (0 on success)
    """
    out_dir = Path(spec.output['out_dir'])
    fmt = spec.output['format']
    config = spec.solver_config()
    samples = spec.initial_samples()
    trajectory = run(samples, spec.model, config, spec.snapshot_times)

    outputs = []
    grid = trajectory.initial.grid
    for index, (t, field) in enumerate(trajectory.snapshots):
        frame = pd.DataFrame({'x': grid.points, 'u': synthesize(field)})
        outputs.append(write_dataframe(frame, out_dir, f'snapshot_{index}', fmt))
        outputs.append(write_dataframe(modes_frame(field), out_dir, f'modes_{index}', fmt))

    invariant_report = report(trajectory, spec.model)
    outputs.append(write_dataframe(invariant_report.to_dataframe(), out_dir, 'invariants', fmt))

    diagnostics = pd.DataFrame(
        [
            (step, d.iterations, d.residual, d.contraction_ratio)
            for step, d in enumerate(trajectory.step_diagnostics, start=1)
        ],
        columns=DIAGNOSTIC_COLUMNS,
    )
    outputs.append(write_dataframe(diagnostics, out_dir, 'diagnostics', fmt))

    manifest = build_manifest('solve', spec.to_settings(), outputs, extra={
        'snapshot_times': trajectory.times,
        'invariants': {
            'max_drift': invariant_report.max_drift,
            'unnormalized': invariant_report.unnormalized,
        },
    })
    write_manifest(out_dir, manifest)

    for channel, drift in invariant_report.max_drift.items():
        logger.info(f"{channel} max drift {drift:.3e}{' (unnormalized)' if invariant_report.unnormalized[channel] else ''}")
    return EXIT_OK


def _indexed(names: Sequence[str], prefix: str) -> List[str]:
    return sorted(
        (name for name in names if name.startswith(prefix)),
        key=lambda name: int(Path(name).stem.split('_')[1]),
    )


def cmd_invariants(directory: Path, fmt: Optional[str] = None) -> int:
    """
    Recompute the invariant report from a solve directory's coefficient tables

    Writes invariants_recomputed.<ext> next to the snapshots.
    """
    directory = Path(directory)
    manifest_path = directory / 'manifest.json'
    if not manifest_path.is_file():
        raise ValidationError(f"No manifest.json in {directory}")
    with open(manifest_path, 'r', encoding='utf-8') as handle:
        manifest = json.load(handle)
    if manifest.get('command') != 'solve':
        raise ValidationError(f"{manifest_path} was written by {manifest.get('command')}, not solve")

    spec = RunSpec.from_settings(load_config_file(manifest_path))
    grid = spec.grid
    mode_files = _indexed(manifest['outputs'], 'modes_')
    times = manifest['snapshot_times']
    if len(mode_files) != len(times):
        raise ValidationError(f"Manifest lists {len(mode_files)} coefficient tables for {len(times)} times")

    trajectory = Trajectory()
    for t, name in zip(times, mode_files):
        trajectory.snapshots.append((float(t), field_from_modes(_read_table(directory / name), grid)))

    invariant_report = report(trajectory, spec.model)
    fmt = fmt or spec.output['format']
    write_dataframe(invariant_report.to_dataframe(), directory, 'invariants_recomputed', fmt)
    for channel, drift in invariant_report.max_drift.items():
        logger.info(f"{channel} max drift {drift:.3e}")
    return EXIT_OK


def cmd_converge(setup_name: str, n_list: Optional[Sequence[int]], out_dir: Path, fmt: str = 'csv',
                 reference_n: Optional[int] = None, jobs: int = 1) -> int:
    setup = example_setup(setup_name)
    n_list = list(n_list) if n_list else setup.n_list
    is_valid, message = InputValidator.validate_n_list(n_list)
    if not is_valid:
        raise ValidationError(message)
    if setup.reference == 'self' and reference_n is None:
        reference_n = SELF_REFERENCE_FACTOR * max(n_list)

    rows = convergence_study(setup, n_list, reference_n=reference_n, jobs=jobs)
    table = convergence_table(rows)
    outputs = [write_dataframe(table, out_dir, 'convergence', fmt)]
    failed = {row.n_modes: row.status for row in rows if row.status != 'ok'}
    config = {
        'converge': {'setup': setup_name, 'n_list': n_list, 'reference_n': reference_n},
        'output': _output_settings(out_dir, fmt),
    }
    manifest = build_manifest('converge', config, outputs, extra={
        'setup': setup_name,
        'n_list': n_list,
        'reference_n': reference_n,
        'failed_rows': failed,
    })
    write_manifest(out_dir, manifest)
    return EXIT_OK


def cmd_zdl(u0_name: str, params: ModelParams, eps_list: Sequence[float], t_eval: float,
            reference: ReferenceDescriptor, n_modes: int, dt_divisor: float, out_dir: Path,
            fmt: str = 'csv', jobs: int = 1) -> int:
    u0 = initial_datum(u0_name, half_length=params.half_length)
    rows = zdl_sweep(u0, params, eps_list, t_eval, reference, n_modes, dt_divisor=dt_divisor, jobs=jobs)
    table = sweep_table(rows)
    outputs = [write_dataframe(table, out_dir, 'zdl', fmt)]

    extra = {}
    if len(rows) >= 2:
        smallest = sorted(rows, key=lambda row: row.eps)[:3]
        extra['loglog_slope'] = loglog_slope([row.eps for row in smallest], [row.error for row in smallest])
        logger.info(f"log-log slope over the smallest eps: {extra['loglog_slope']:.3f}")

    config = {
        'model': {'alpha': params.alpha, 'lam': params.lam, 'half_length': params.half_length},
        'zdl': {
            'initial': u0_name,
            'n_modes': n_modes,
            'eps_list': list(eps_list),
            't_eval': t_eval,
            'dt_divisor': dt_divisor,
            'reference': reference.kind,
            'beta_file': reference.beta_path,
            'q': reference.q,
            'window': list(reference.window) if reference.window else None,
        },
        'output': _output_settings(out_dir, fmt),
    }
    write_manifest(out_dir, build_manifest('zdl', config, outputs, extra=extra))
    return EXIT_OK


def cmd_reference(kind: str, params: ModelParams, t: float, out_dir: Path, fmt: str = 'csv',
                  points: int = 1001, c: float = 0.25, initial_name: str = 'sech2',
                  beta_path: Optional[str] = None, q: float = 0.0) -> int:
    """Evaluate a named analytic or asymptotic solution and write x, u"""
    L = params.half_length
    x = np.linspace(-L, L, points)
    if kind == 'kdv-soliton':
        u = kdv_one_soliton(x, t)
    elif kind == 'bo-soliton':
        u = bo_soliton(x, t, c, L, params.lam)
    elif kind == 'hopf':
        u0 = initial_datum(initial_name, half_length=L)
        u = hopf_solution(u0, x, t, params.lam, interval=(-L, L))
    else:
        if not beta_path:
            raise ValidationError("reference elliptic needs --beta-file")
        profile = read_beta_profile(beta_path)
        x = profile['x'].to_numpy(dtype=float)
        u = evaluate_beta_profile(profile, t, params.eps, q)

    outputs = [write_dataframe(pd.DataFrame({'x': x, 'u': u}), out_dir, 'reference', fmt)]
    config = {
        'model': {'alpha': params.alpha, 'eps': params.eps, 'lam': params.lam, 'half_length': L},
        'reference': {
            'kind': kind, 't': t, 'c': c, 'initial': initial_name, 'beta_file': beta_path, 'q': q, 'points': points,
        },
        'output': _output_settings(out_dir, fmt),
    }
    write_manifest(out_dir, build_manifest('reference', config, outputs))
    return EXIT_OK


# argparse handlers

def _solve_overrides(args: argparse.Namespace) -> Dict:
    return {
        'model': {'alpha': args.alpha, 'eps': args.eps, 'lam': args.lam, 'half_length': args.half_length},
        'solver': {
            'n_modes': args.n_modes, 'dt': args.dt, 'dt_divisor': args.dt_divisor, 't_final': args.t_final,
            'zeta': args.zeta, 'fp_tolerance': args.fp_tolerance, 'fp_max_iters': args.fp_max_iters,
            'enforce_cfl': args.enforce_cfl,
        },
        'initial': {
            'name': args.initial_name, 'amplitude': args.amplitude, 'wavenumber': args.wavenumber,
            'c': args.c, 'path': args.samples_path,
        },
        'output': {'out_dir': args.out_dir, 'format': args.format, 'snapshot_times': args.snapshot_times},
    }


def _handle_solve(args: argparse.Namespace) -> int:
    return cmd_solve(load_run_spec(args.config, _solve_overrides(args)))


def _handle_converge(args: argparse.Namespace) -> int:
    settings = load_converge_settings(args.config, {
        'converge': {'setup': args.setup, 'n_list': args.n_list, 'reference_n': args.reference_n},
        'output': {'out_dir': args.out_dir, 'format': args.format},
    })
    converge, output = settings['converge'], settings['output']
    return cmd_converge(
        converge['setup'], converge['n_list'], Path(output['out_dir']), output['format'],
        reference_n=converge['reference_n'], jobs=resolve_jobs(args.jobs),
    )


def _handle_zdl(args: argparse.Namespace) -> int:
    settings = load_zdl_settings(args.config, {
        'model': {'alpha': args.alpha, 'lam': args.lam, 'half_length': args.half_length},
        'zdl': {
            'initial': args.initial_name, 'n_modes': args.n_modes, 'eps_list': args.eps_list,
            't_eval': args.t_eval, 'dt_divisor': args.dt_divisor, 'reference': args.reference,
            'beta_file': args.beta_file, 'q': args.q, 'window': args.window, 'full': args.full,
        },
        'output': {'out_dir': args.out_dir, 'format': args.format},
    })
    model, zdl, output = settings['model'], settings['zdl'], settings['output']
    params = ModelParams(
        alpha=model['alpha'], eps=zdl['eps_list'][0], lam=model['lam'], half_length=model['half_length'],
    )
    reference = ReferenceDescriptor(kind=zdl['reference'], beta_path=zdl['beta_file'], q=zdl['q'], window=zdl['window'])
    return cmd_zdl(
        zdl['initial'], params, zdl['eps_list'], zdl['t_eval'], reference, zdl['n_modes'], zdl['dt_divisor'],
        Path(output['out_dir']), output['format'], jobs=resolve_jobs(args.jobs),
    )


def _handle_invariants(args: argparse.Namespace) -> int:
    return cmd_invariants(Path(args.directory))


def _handle_reference(args: argparse.Namespace) -> int:
    settings = load_reference_settings(args.config, {
        'model': {'alpha': args.alpha, 'eps': args.eps, 'lam': args.lam, 'half_length': args.half_length},
        'reference': {
            'kind': args.kind, 't': args.t, 'c': args.c, 'initial': args.initial_name,
            'beta_file': args.beta_file, 'q': args.q, 'points': args.points,
        },
        'output': {'out_dir': args.out_dir, 'format': args.format},
    })
    model, reference, output = settings['model'], settings['reference'], settings['output']
    params = ModelParams(alpha=model['alpha'], eps=model['eps'], lam=model['lam'], half_length=model['half_length'])
    return cmd_reference(
        reference['kind'], params, reference['t'], Path(output['out_dir']), output['format'],
        points=reference['points'], c=reference['c'], initial_name=reference['initial'],
        beta_path=reference['beta_file'], q=reference['q'],
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point

    Returns:
        int: 0 on success, 2 for configuration errors, 3 for numerical failures
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args)

    try:
        return args.handler(args)
    except ValidationError as exc:
        for message in exc.messages:
            logger.error(f"[{type(exc).__module__.split('.')[-1]}] {message}")
        return EXIT_CONFIG_ERROR
    except ParameterError as exc:
        logger.error(f"[{type(exc).__module__.split('.')[-1]}] {exc}")
        return EXIT_CONFIG_ERROR
    except NumericalError as exc:
        logger.error(f"[{type(exc).__module__.split('.')[-1]}] {exc}")
        return EXIT_NUMERICAL_ERROR


if __name__ == '__main__':
    sys.exit(main())
