"""
Run Configuration
Loads TOML/JSON run specs, merges them with defaults and command-line overrides
"""

import copy
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .constants import (
    DEFAULT_CONVERGE, DEFAULT_INITIAL, DEFAULT_MODEL, DEFAULT_OUTPUT, DEFAULT_REFERENCE, DEFAULT_SOLVER,
    DEFAULT_ZDL, EXAMPLE_SETUPS, REFERENCE_MODEL, SELF_REFERENCE_FACTOR, ZDL_DESK, ZDL_FULL, ZDL_MODEL,
)
from .experiments import datum_dt
from .reference import initial_datum
from .solver import ModelParams, SolverConfig
from .spectral import PeriodicGrid, SpectralField, analyze
from .validators import InputValidator, ValidationError

logger = logging.getLogger(__name__)

SOLVE_SECTIONS = ('model', 'solver', 'initial', 'output')
SECTIONS = SOLVE_SECTIONS + ('converge', 'zdl', 'reference')


def default_settings() -> Dict:
    return {
        'model': dict(DEFAULT_MODEL),
        'solver': dict(DEFAULT_SOLVER),
        'initial': dict(DEFAULT_INITIAL),
        'output': copy.deepcopy(DEFAULT_OUTPUT),
    }


def load_config_file(path: Union[str, Path]) -> Dict:
    """
    Read a run spec from TOML, or from a JSON manifest's config section

    Args:
        path: .toml file with any of the SECTIONS tables, or a .json manifest

    Returns:
        Dict: Nested settings (only the keys present in the file)

    Raises:
        ValidationError: If the file is missing, unreadable or has unknown tables
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"Config file does not exist: {path}")

    try:
        if path.suffix == '.json':
            with open(path, 'r', encoding='utf-8') as handle:
                data = json.load(handle)
            data = data.get('config', data)
        else:
            with open(path, 'rb') as handle:
                data = tomllib.load(handle)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"Cannot parse config file {path}: {exc}") from exc

    unknown = [key for key in data if key not in SECTIONS]
    if unknown:
        raise ValidationError([f"Unknown config table: {key}" for key in unknown])
    logger.debug(f"Loaded config from {path}")
    return data


def merge_settings(base: Dict, *layers: Dict) -> Dict:
    """Later layers win; None values in a layer leave the earlier value in place"""
    merged = copy.deepcopy(base)
    for layer in layers:
        for section, values in (layer or {}).items():
            target = merged.setdefault(section, {})
            for key, value in (values or {}).items():
                if value is not None:
                    target[key] = value
    return merged


def read_samples_file(path: Union[str, Path], grid: PeriodicGrid) -> np.ndarray:
    """
    Initial samples from a CSV with columns x, u

    Samples already on the collocation grid are used as they are; anything else is
    interpolated periodically onto grid.points.
    """
    frame = pd.read_csv(path)
    if 'u' not in frame.columns or 'x' not in frame.columns:
        raise ValidationError(f"Samples file {path} needs columns x and u")

    x = frame['x'].to_numpy(dtype=float)
    u = frame['u'].to_numpy(dtype=float)
    if x.size == grid.n_points and np.allclose(x, grid.points, rtol=0.0, atol=1e-12 * grid.length):
        return u
    return np.interp(grid.points, x, u, period=grid.length)


@dataclass
class RunSpec:
    """
    A validated solve request

    Attributes:
        model (ModelParams): Equation parameters
        solver (Dict): Solver table; dt may be None until the initial datum is known
        initial (Dict): Named datum and its parameters
        output (Dict): out_dir, format, snapshot_times
    """

    model: ModelParams
    solver: Dict
    initial: Dict
    output: Dict
    snapshot_times: List[float] = field(default_factory=list)

    @classmethod
    def from_settings(cls, settings: Dict) -> 'RunSpec':
        """
        Build from merged settings after validating all tables at once

        Raises:
            ValidationError: Listing every invalid field
        """
        InputValidator.validate_run_spec(settings)
        return cls(
            model=ModelParams(**settings['model']),
            solver=dict(settings['solver']),
            initial=dict(settings['initial']),
            output=dict(settings['output']),
            snapshot_times=[float(t) for t in settings['output'].get('snapshot_times', [])],
        )

    @property
    def grid(self) -> PeriodicGrid:
        return PeriodicGrid.for_modes(self.solver['n_modes'], self.model.half_length)

    def initial_callable(self) -> Optional[Callable]:
        """The named datum as a callable, or None for samples-file"""
        name = self.initial['name']
        if name == 'samples-file':
            return None
        params = {key: value for key, value in self.initial.items() if key in ('amplitude', 'wavenumber', 'c')}
        if name == 'bo-soliton':
            params['lam'] = self.model.lam
        return initial_datum(name, half_length=self.model.half_length, **params)

    def initial_samples(self) -> np.ndarray:
        """u0 sampled on the run's collocation grid"""
        grid = self.grid
        u0 = self.initial_callable()
        if u0 is None:
            return read_samples_file(self.initial['path'], grid)
        return np.asarray(u0(grid.points), dtype=float)

    def initial_field(self) -> SpectralField:
        return analyze(self.initial_samples(), self.grid)

    def resolved_dt(self) -> float:
        if self.solver.get('dt') is not None:
            return float(self.solver['dt'])
        return datum_dt(self.initial_field(), self.solver['dt_divisor'])

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            n_modes=self.solver['n_modes'],
            dt=self.resolved_dt(),
            t_final=float(self.solver['t_final']),
            fp_tolerance=self.solver['fp_tolerance'],
            fp_max_iters=self.solver['fp_max_iters'],
            zeta=self.solver['zeta'],
            enforce_cfl=self.solver['enforce_cfl'],
        )

    def to_settings(self) -> Dict:
        """Fully resolved settings (dt filled in), suitable for a manifest"""
        solver = dict(self.solver)
        solver['dt'] = self.resolved_dt()
        output = dict(self.output)
        output['snapshot_times'] = list(self.snapshot_times)
        return {
            'model': {
                'alpha': self.model.alpha,
                'eps': self.model.eps,
                'lam': self.model.lam,
                'half_length': self.model.half_length,
            },
            'solver': solver,
            'initial': {key: value for key, value in self.initial.items() if value is not None},
            'output': output,
        }


def load_run_spec(config_path: Optional[Union[str, Path]] = None, overrides: Optional[Dict] = None) -> RunSpec:
    """
    Defaults, then the config file, then command-line overrides

    Args:
        config_path: Optional TOML config or JSON manifest
        overrides (Dict, optional): Nested settings from command-line flags

    Returns:
        RunSpec: Validated spec
    """
    return RunSpec.from_settings(load_settings(config_path, SOLVE_SECTIONS, default_settings(), overrides))


def load_settings(config_path: Optional[Union[str, Path]], sections: Sequence[str], defaults: Dict,
                  overrides: Optional[Dict] = None) -> Dict:
    """
    Merge defaults, a config file restricted to sections, and command-line overrides

    Raises:
        ValidationError: If the file has tables another command reads
    """
    file_settings = load_config_file(config_path) if config_path else {}
    foreign = [key for key in file_settings if key not in sections]
    if foreign:
        raise ValidationError([
            f"Config table {key} belongs to another command; expected {', '.join(sections)}" for key in foreign
        ])
    return merge_settings(defaults, file_settings, overrides or {})


def _study_output(name: str) -> Dict:
    return {'out_dir': str(Path(DEFAULT_OUTPUT['out_dir']) / name), 'format': DEFAULT_OUTPUT['format']}


def load_converge_settings(config_path: Optional[Union[str, Path]] = None,
                           overrides: Optional[Dict] = None) -> Dict:
    """
    Resolved [converge] and [output] tables

    n_list falls back to the named setup's list, reference_n to 8x the largest N for
    self-referenced setups.

    Raises:
        ValidationError: Listing every invalid field
    """
    settings = load_settings(config_path, ('converge', 'output'), {'converge': dict(DEFAULT_CONVERGE)}, overrides)
    converge = settings['converge']
    setup = converge.get('setup')
    if setup in EXAMPLE_SETUPS:
        entry = EXAMPLE_SETUPS[setup]
        if not converge.get('n_list'):
            converge['n_list'] = list(entry['n_list'])
        if entry['reference'] == 'self' and converge.get('reference_n') is None and converge['n_list']:
            converge['reference_n'] = SELF_REFERENCE_FACTOR * max(converge['n_list'])
    settings = merge_settings({'output': _study_output(f'converge_{setup}')}, settings)

    errors = InputValidator.validate_converge(settings)
    if errors:
        raise ValidationError(errors)
    return settings


def load_zdl_settings(config_path: Optional[Union[str, Path]] = None, overrides: Optional[Dict] = None) -> Dict:
    """
    Resolved [model], [zdl] and [output] tables for an eps sweep

    Fields left unset take the desk scale, or the full scale when zdl.full is true.

    Raises:
        ValidationError: Listing every invalid field
    """
    settings = load_settings(config_path, ('model', 'zdl', 'output'), {'zdl': dict(DEFAULT_ZDL)}, overrides)
    scale = ZDL_FULL if settings['zdl'].get('full') else ZDL_DESK
    defaults = {
        'model': {**ZDL_MODEL, 'half_length': scale['half_length']},
        'zdl': {key: scale[key] for key in ('n_modes', 'eps_list', 't_eval', 'dt_divisor')},
        'output': _study_output('zdl'),
    }
    settings = merge_settings(defaults, settings)
    settings['model'].pop('eps', None)

    errors = InputValidator.validate_zdl(settings)
    if errors:
        raise ValidationError(errors)
    return settings


def load_reference_settings(config_path: Optional[Union[str, Path]] = None,
                            overrides: Optional[Dict] = None) -> Dict:
    """
    Resolved [model], [reference] and [output] tables for a reference evaluation

    lambda defaults to 6 for the Hopf solution and 1 for the solitons.

    Raises:
        ValidationError: Listing every invalid field
    """
    settings = load_settings(
        config_path, ('model', 'reference', 'output'), {'reference': dict(DEFAULT_REFERENCE)}, overrides
    )
    kind = settings['reference'].get('kind')
    defaults = {
        'model': {**REFERENCE_MODEL, 'lam': 6.0 if kind == 'hopf' else 1.0},
        'output': _study_output(f'reference_{kind}'),
    }
    settings = merge_settings(defaults, settings)

    errors = InputValidator.validate_reference(settings)
    if errors:
        raise ValidationError(errors)
    return settings
