"""
Integration tests on the named example configurations
These tests integrate to the full final times and take tens of seconds each
"""

import numpy as np
import pytest

from src.experiments import (
    ReferenceDescriptor, convergence_study, example_setup, l2_error, loglog_slope, zdl_sweep,
)
from src.constants import ZDL_DESK
from src.invariants import report
from src.reference import kdv_one_soliton, sech2, sine
from src.solver import ModelParams, SolverConfig, cfl_max_dt, cn_step, rk4_step, richardson_order, run
from src.spectral import PeriodicGrid, SpectralField, l2_norm

pytestmark = [pytest.mark.integration, pytest.mark.slow]


@pytest.fixture(scope="module")
def fractional_sine():
    """Example 5.3: alpha = 1.5, eps = 1, lambda = 1, u0 = 0.5 sin x"""
    return ModelParams(alpha=1.5, eps=1.0, lam=1.0), sine(0.5, 1)


class TestConservation:
    """Invariant drift over a full Example 5.3 run"""

    def test_invariants_conserved(self, fractional_sine):
        p, u0 = fractional_sine
        c = SolverConfig(n_modes=128, dt=1.0 / (128 * 0.5), t_final=2.0)
        trajectory = run(u0, p, c, snapshot_times=np.linspace(0.0, 2.0, 21))
        result = report(trajectory, p)

        assert result.max_drift['I2'] <= 1e-10
        assert result.max_drift['I3'] <= 1e-3
        # 0.5 sin x has zero mean
        assert result.unnormalized['I1']
        assert result.max_drift['I1'] <= 1e-12


class TestTemporalOrder:
    """Second-order convergence in dt at fixed N"""

    def test_richardson_order(self, fractional_sine):
        p, u0 = fractional_sine
        h = 2.5e-4
        finals = []
        for dt in (4 * h, 2 * h, h):
            c = SolverConfig(n_modes=64, dt=dt, t_final=0.1)
            finals.append(run(u0, p, c).final)
        assert 1.8 <= richardson_order(*finals) <= 2.2


class TestSpatialConvergence:
    """Error trends on the named examples"""

    def test_error_ratio(self):
        rows = convergence_study('example-5.3', [128, 256], reference_n=1024)
        assert all(row.status == 'ok' for row in rows)
        assert rows[0].error / rows[1].error >= 3.0
        assert rows[1].rate > 1.5

    def test_periodic_wave_reference(self):
        rows = convergence_study('example-5.2', [64, 128], jobs=2)
        assert all(row.status == 'ok' for row in rows)
        assert all(np.isfinite(row.error) for row in rows)
        assert rows[1].rate is not None


class TestSolitonFidelity:
    """Example 5.1 against the exact soliton"""

    def _final(self, alpha: float) -> SpectralField:
        setup = example_setup('example-5.1')
        p = ModelParams(alpha=alpha, eps=1.0, lam=1.0, half_length=15.0)
        c = SolverConfig(n_modes=512, dt=1.0 / (512 * 9.0), t_final=setup.t_final)
        return run(setup.u0, p, c).final

    def test_kdv_limit(self):
        final = self._final(2.0)
        assert l2_error(final, lambda x: kdv_one_soliton(x, 2.0)) <= 1e-3

    def test_fractional_order(self):
        final = self._final(1.999)
        error = l2_error(final, lambda x: kdv_one_soliton(x, 2.0))
        scale = l2_error(SpectralField.zeros(final.grid), lambda x: kdv_one_soliton(x, 2.0))
        assert error / scale <= 2e-2


class TestZeroDispersion:
    """Pre-breaking sweep against the Hopf solution"""

    def test_desk_sweep(self):
        p = ModelParams(alpha=1.999, eps=ZDL_DESK['eps_list'][0], lam=6.0, half_length=ZDL_DESK['half_length'])
        rows = zdl_sweep(
            sech2, p, ZDL_DESK['eps_list'], ZDL_DESK['t_eval'], ReferenceDescriptor(kind='hopf'),
            n_modes=ZDL_DESK['n_modes'], dt_divisor=ZDL_DESK['dt_divisor'], jobs=2,
        )
        errors = [row.error for row in rows]
        assert all(later < earlier for earlier, later in zip(errors[:-1], errors[1:]))
        slope = loglog_slope([row.eps for row in rows], errors)
        assert 0.9 <= slope <= 2.3


class TestFixedPointContraction:
    """Inner iteration at half the contraction bound"""

    def test_ratios_bounded(self, fractional_sine):
        p, u0 = fractional_sine
        grid = PeriodicGrid.for_modes(64)
        initial = SpectralField.from_function(u0, grid)
        bound_config = SolverConfig(n_modes=64, dt=1.0, t_final=1.0, zeta=0.5)
        dt = cfl_max_dt(initial, p, bound_config) / 2

        c = SolverConfig(n_modes=64, dt=dt, t_final=25 * dt, zeta=0.5, enforce_cfl=True)
        trajectory = run(u0, p, c)
        assert len(trajectory.step_diagnostics) == 25
        for diagnostics in trajectory.step_diagnostics:
            assert diagnostics.contraction_ratio <= 0.5


class TestSchemeAgreement:
    """Crank-Nicolson against RK4 on the Example 5.3 datum"""

    def test_gap_shrinks_quadratically(self, fractional_sine):
        p, u0 = fractional_sine
        grid = PeriodicGrid.for_modes(16)
        h = 1e-3
        gaps = []
        for dt in (2 * h, h):
            c = SolverConfig(n_modes=16, dt=dt, t_final=0.1)
            cn = SpectralField.from_function(u0, grid)
            rk = cn
            for _ in range(int(round(0.1 / dt))):
                cn, _ = cn_step(cn, p, c)
                rk = rk4_step(rk, p, dt)
            gaps.append(l2_norm(cn - rk))
        assert gaps[0] / gaps[1] >= 3.5
