"""
Conserved Quantities
Mass, momentum and energy of fractional KdV states and their drift over a run
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
import pandas as pd

from .spectral import SpectralField, to_physical
from .solver import ModelParams, Trajectory

logger = logging.getLogger(__name__)

CHANNELS = ('I1', 'I2', 'I3')

# A channel whose initial value is below this fraction of its scale is reported unnormalized
FLAG_RTOL = 1e-12


def mass(u: SpectralField) -> float:
    """Integral of u over [-L, L]: 2L Re u(0)"""
    return float(u.grid.length * np.real(u.coefficient(0)))


def momentum(u: SpectralField) -> float:
    """Integral of u^2 via Parseval"""
    return float(u.grid.length * np.sum(np.abs(u.coefficients) ** 2))


def _energy_parts(u: SpectralField, p: ModelParams):
    grid = u.grid
    dispersive = p.eps ** 2 * grid.length * np.sum(np.abs(grid.wavenumbers) ** p.alpha * np.abs(u.coefficients) ** 2)
    # u^3 has modes up to 3N, so 3N+1 points integrate it exactly
    n_points = max(grid.n_points, 3 * grid.n_modes + 1)
    values = to_physical(u.coefficients, grid.n_modes, n_points)
    cubic = grid.length * np.mean(values ** 3)
    cubic_scale = grid.length * np.mean(np.abs(values) ** 3)
    return float(dispersive), float(cubic), float(cubic_scale)


def energy(u: SpectralField, p: ModelParams) -> float:
    """
    Hamiltonian H = integral of eps^2 (D^(alpha/2) u)^2 - (lam/3) u^3

    The half-Laplacian term uses the multiplier |kappa|^(alpha/2) through
    Parseval; the cubic term is a quadrature on the padded grid.

    Args:
        u (SpectralField): State
        p (ModelParams): Supplies alpha, eps and lambda

    Returns:
        float: H(u)
    """
    dispersive, cubic, _ = _energy_parts(u, p)
    return dispersive - p.lam / 3.0 * cubic


@dataclass
class InvariantReport:
    """
    Normalized invariant series over a trajectory

    Attributes:
        times (List[float]): Snapshot times
        i1, i2, i3 (List[float]): Q(u(t)) / Q(u0), or raw Q(u(t)) for flagged channels
        raw (Dict[str, List[float]]): Unnormalized mass, momentum, energy
        unnormalized (Dict[str, bool]): Channels whose initial value is zero
        max_drift (Dict[str, float]): max |I - 1|, or max |Q - Q0| for flagged channels
    """

    times: List[float]
    i1: List[float]
    i2: List[float]
    i3: List[float]
    raw: Dict[str, List[float]] = field(default_factory=dict)
    unnormalized: Dict[str, bool] = field(default_factory=dict)
    max_drift: Dict[str, float] = field(default_factory=dict)

    def series(self, channel: str) -> List[float]:
        return {'I1': self.i1, 'I2': self.i2, 'I3': self.i3}[channel]

    def final(self) -> Dict[str, float]:
        return {channel: self.series(channel)[-1] for channel in CHANNELS}

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame({'t': self.times, 'I1': self.i1, 'I2': self.i2, 'I3': self.i3})


def _normalize(values: List[float], scale: float):
    q0 = values[0]
    if abs(q0) <= FLAG_RTOL * scale:
        return list(values), True, float(max(abs(q - q0) for q in values))
    normalized = [q / q0 for q in values]
    return normalized, False, float(max(abs(v - 1.0) for v in normalized))


def report(traj: Trajectory, p: ModelParams) -> InvariantReport:
    """
    Invariant report for every snapshot of a trajectory

    Args:
        traj (Trajectory): Non-empty trajectory
        p (ModelParams): Parameters entering the energy

    Returns:
        InvariantReport: Normalized series and drift statistics

    Raises:
        ValueError: If the trajectory has no snapshots
    """
    if not traj.snapshots:
        raise ValueError("Trajectory has no snapshots")

    u0 = traj.initial
    length = u0.grid.length
    masses = [mass(u) for u in traj.fields]
    momenta = [momentum(u) for u in traj.fields]
    energies = [energy(u, p) for u in traj.fields]

    dispersive0, _, cubic_scale0 = _energy_parts(u0, p)
    base = length * max(1.0, momenta[0] / length)
    scales = {
        'I1': base,
        'I2': base,
        'I3': max(base, dispersive0 + p.lam / 3.0 * cubic_scale0),
    }

    normalized = {}
    flags = {}
    drift = {}
    for channel, values in zip(CHANNELS, (masses, momenta, energies)):
        normalized[channel], flags[channel], drift[channel] = _normalize(values, scales[channel])
        if flags[channel]:
            logger.warning(f"{channel} has zero initial value; reporting it unnormalized")

    return InvariantReport(
        times=list(traj.times),
        i1=normalized['I1'],
        i2=normalized['I2'],
        i3=normalized['I3'],
        raw={'mass': masses, 'momentum': momenta, 'energy': energies},
        unnormalized=flags,
        max_drift=drift,
    )
