"""
Unit tests for convergence and zero-dispersion studies
"""

from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from src.constants import CONVERGENCE_COLUMNS, SWEEP_COLUMNS
from src.experiments import (
    ConvergenceRow, EpsSweepRow, ExampleSetup, ReferenceDescriptor, alpha_sweep, convergence_study,
    convergence_table, example_setup, l2_error, loglog_slope, map_ordered, datum_dt, rate,
    reference_callable, solver_config, sup_error, sweep_table, zdl_sweep,
)
from src.reference import MultivaluedError, sech2, sine
from src.solver import ModelParams, cayley_multipliers
from src.spectral import ParameterError, PeriodicGrid, SpectralField, analyze, synthesize


@pytest.fixture
def fractional():
    return ModelParams(alpha=1.5, eps=1.0, lam=1.0)


@pytest.fixture
def tiny_setup(fractional):
    """Example 5.3 data on a short horizon"""
    return ExampleSetup(
        name='tiny', params=fractional, u0=sine(0.5, 1), t_final=0.1, dt_divisor=1.0,
        reference='self', n_list=[8, 16],
    )


class TestRate:
    """Test the convergence rate formula"""

    def test_first_order(self):
        assert rate(1e-2, 5e-3, 64, 128) == pytest.approx(1.0)

    def test_tabulated_pairs(self):
        assert rate(8.15e-4, 1.40e-4, 128, 256) == pytest.approx(2.53, abs=0.02)
        assert rate(1.40e-4, 3.49e-5, 256, 512) == pytest.approx(2.00, abs=0.02)

    def test_sign(self):
        assert rate(1e-3, 1e-4, 16, 32) > 0
        assert rate(1e-4, 1e-3, 16, 32) == pytest.approx(-rate(1e-3, 1e-4, 16, 32))

    @pytest.mark.parametrize("e1,e2", [(0.0, 1e-3), (1e-3, -1e-4)])
    def test_non_positive_error(self, e1, e2):
        with pytest.raises(ParameterError):
            rate(e1, e2, 16, 32)

    def test_decreasing_resolution(self):
        with pytest.raises(ParameterError):
            rate(1e-3, 1e-4, 32, 16)

    def test_loglog_slope(self):
        xs = [0.1, 0.01, 0.001]
        assert loglog_slope(xs, [x ** 2 for x in xs]) == pytest.approx(2.0)


class TestTimeStep:
    """Test the initial-datum step rule"""

    def test_datum_dt(self):
        grid = PeriodicGrid.for_modes(16)
        u0 = analyze(0.5 * np.sin(grid.points), grid)
        assert datum_dt(u0) == pytest.approx(1.0 / (16 * 0.5))
        assert datum_dt(u0, divisor=8.0) == pytest.approx(1.0 / (8 * 16 * 0.5))

    def test_zero_datum(self):
        with pytest.raises(ParameterError):
            datum_dt(SpectralField.zeros(PeriodicGrid.for_modes(4)))

    def test_solver_config(self, fractional):
        c = solver_config(sine(0.5, 1), fractional, 16, 1.0, zeta=0.3)
        assert c.dt == pytest.approx(0.125)
        assert c.zeta == 0.3
        assert solver_config(sine(0.5, 1), fractional, 16, 1.0, dt=0.01).dt == 0.01


class TestErrors:
    """Test error norms"""

    @pytest.fixture
    def field(self):
        grid = PeriodicGrid.for_modes(16)
        return analyze(0.5 * np.sin(grid.points) + 0.1 * np.cos(3 * grid.points), grid)

    def test_l2_against_itself(self, field):
        assert l2_error(field, lambda x: synthesize(field)) < 1e-14
        finer = field.resample(PeriodicGrid.for_modes(32))
        assert l2_error(field, finer) == 0.0

    def test_l2_constant_offset(self, field):
        offset = l2_error(field, lambda x: field.evaluate(x) + 0.1)
        assert offset == pytest.approx(0.1 * np.sqrt(2 * np.pi), rel=1e-12)

    def test_sup_against_itself(self, field):
        assert sup_error(field, lambda x: field.evaluate(x)) < 1e-14

    def test_sup_constant_offset(self, field):
        assert sup_error(field, lambda x: field.evaluate(x) - 0.25) == pytest.approx(0.25, rel=1e-12)

    def test_sub_window(self, field):
        reference = lambda x: np.sin(x)
        assert sup_error(field, reference, window=(-1.0, 1.0)) <= sup_error(field, reference)

    @pytest.mark.parametrize("window", [(-4.0, 0.0), (1.0, -1.0), (0.01, 0.02)])
    def test_bad_window(self, field, window):
        with pytest.raises(ParameterError):
            sup_error(field, np.sin, window=window)


class TestMapOrdered:
    """Test the worker pool helper"""

    def test_keeps_input_order(self):
        assert map_ordered(lambda x: x * x, range(10), jobs=4) == [x * x for x in range(10)]

    def test_sequential(self):
        assert map_ordered(str, [1, 2], jobs=1) == ['1', '2']


class TestSetups:
    """Test named example setups"""

    def test_unknown(self):
        with pytest.raises(ParameterError):
            example_setup('example-9.9')

    def test_fractional_sine(self):
        setup = example_setup('example-5.3')
        assert setup.params == ModelParams(alpha=1.5, eps=1.0, lam=1.0)
        assert setup.reference == 'self'
        assert setup.u0(np.pi / 2) == pytest.approx(0.5)

    def test_kdv_soliton_has_exact_solution(self):
        setup = example_setup('example-5.1')
        assert setup.exact(0.0, 0.0) == pytest.approx(9.0)
        assert setup.params.half_length == 15.0

    def test_bo_soliton_carries_lambda(self):
        setup = example_setup('example-5.2')
        assert setup.exact(3.0, 4.0) == pytest.approx(setup.exact(2.0, 0.0))


class TestReferenceDescriptor:
    """Test reference validation"""

    def test_unknown_kind(self):
        with pytest.raises(ParameterError):
            ReferenceDescriptor(kind='whitham')

    def test_elliptic_needs_path(self):
        with pytest.raises(ParameterError):
            ReferenceDescriptor(kind='elliptic-file')

    def test_exact_needs_callable(self):
        with pytest.raises(ParameterError):
            ReferenceDescriptor(kind='exact')

    @pytest.mark.parametrize("window", [(1.0,), (1.0, -1.0), (0.5, 0.5), (-1.0, 0.0, 1.0)])
    def test_bad_window(self, window):
        with pytest.raises(ParameterError, match='Window'):
            ReferenceDescriptor(kind='hopf', window=window)

    def test_window_from_list(self):
        assert ReferenceDescriptor(kind='hopf', window=[-1, 2]).window == (-1.0, 2.0)

    def test_elliptic_not_callable(self, fractional):
        descriptor = ReferenceDescriptor(kind='elliptic-file', beta_path='beta.csv')
        with pytest.raises(ParameterError):
            reference_callable(descriptor, sine(), fractional, 0.1)


class TestConvergenceStudy:
    """Test convergence tables"""

    def test_self_reference(self, tiny_setup):
        rows = convergence_study(tiny_setup, [8, 16], reference_n=32)
        assert [row.n_modes for row in rows] == [8, 16]
        assert rows[0].rate is None
        assert rows[1].rate is not None
        assert all(row.error > 0 for row in rows)
        assert all(row.i2 == pytest.approx(1.0, abs=1e-10) for row in rows)

    def test_single_row(self, tiny_setup):
        rows = convergence_study(tiny_setup, [8], reference_n=16)
        assert len(rows) == 1
        assert rows[0].rate is None

    def test_deterministic(self, tiny_setup):
        first = convergence_table(convergence_study(tiny_setup, [8, 16], reference_n=32))
        second = convergence_table(convergence_study(tiny_setup, [8, 16], reference_n=32, jobs=2))
        pd.testing.assert_frame_equal(first, second)

    def test_increasing_resolutions_required(self, tiny_setup):
        with pytest.raises(ParameterError):
            convergence_study(tiny_setup, [16, 8])

    def test_failed_run_is_annotated(self, fractional):
        setup = ExampleSetup(
            name='exact-tiny', params=fractional, u0=sine(0.5, 1), t_final=0.1, dt_divisor=1.0,
            reference='exact', exact=lambda x, t: 0.5 * np.sin(x),
        )
        rows = convergence_study(setup, [8, 16], solver_options={'fp_max_iters': 1})
        assert all(np.isnan(row.error) for row in rows)
        assert all('did not converge' in row.status for row in rows)
        assert all(row.rate is None for row in rows)
        table = convergence_table(rows)
        assert table['status'].str.contains('did not converge').all()

    def test_table_columns(self):
        table = convergence_table([ConvergenceRow(n_modes=8, error=1e-3), ConvergenceRow(n_modes=16, error=2.5e-4, rate=2.0)])
        assert list(table.columns) == CONVERGENCE_COLUMNS
        assert table['R'].isna().tolist() == [True, False]
        assert table['status'].tolist() == ['ok', 'ok']

    @pytest.mark.parametrize("name,t_final,n_list", [
        ('example-5.1', 0.05, [32, 64]),
        ('example-5.2', 0.5, [16, 32]),
    ])
    def test_analytic_reference(self, name, t_final, n_list):
        setup = replace(example_setup(name), t_final=t_final)
        rows = convergence_study(setup, n_list)
        assert all(row.status == 'ok' for row in rows)
        assert all(np.isfinite(row.error) and row.error > 0 for row in rows)
        assert rows[0].rate is None
        assert np.isfinite(rows[1].rate)
        assert all(row.i2 == pytest.approx(1.0, abs=1e-8) for row in rows)

    @pytest.mark.parametrize("name,alpha,t_final,n_list", [
        ('example-5.1', 2.0, 0.05, [32, 64]),
        ('example-5.2', 1.0, 0.5, [16, 32]),
    ])
    def test_exact_solution_errors_decrease(self, name, alpha, t_final, n_list):
        named = example_setup(name)
        setup = replace(named, params=replace(named.params, alpha=alpha), t_final=t_final)
        rows = convergence_study(setup, n_list)
        assert rows[1].error < rows[0].error
        assert rows[1].rate > 1.0


class TestZdlSweep:
    """Test eps sweeps"""

    def test_linear_flow_matches_cayley_power(self):
        p = ModelParams(alpha=2.0, eps=1.0, lam=0.0)
        u0 = lambda x: 0.5 * np.sin(x) + 0.2 * np.cos(3 * x)
        grid = PeriodicGrid.for_modes(16)
        initial = analyze(u0(grid.points), grid)

        def exact(x, t, eps):
            multipliers = cayley_multipliers(grid, ModelParams(alpha=2.0, eps=eps, lam=0.0), 0.01) ** 30
            return SpectralField(initial.coefficients * multipliers, grid).evaluate(x)

        reference = ReferenceDescriptor(kind='exact', exact=exact)
        rows = zdl_sweep(u0, p, [0.5, 0.1], 0.3, reference, n_modes=16, solver_options={'dt': 0.01})
        assert [row.eps for row in rows] == [0.5, 0.1]
        assert all(row.error <= 1e-10 for row in rows)
        assert all(row.reference_kind == 'exact' for row in rows)

    def test_hopf_after_break(self):
        p = ModelParams(alpha=1.999, eps=0.1, lam=6.0, half_length=6.0)
        with pytest.raises(MultivaluedError) as excinfo:
            zdl_sweep(sech2, p, [0.1], 0.3, ReferenceDescriptor(kind='hopf'), n_modes=64)
        assert excinfo.value.t_c == pytest.approx(np.sqrt(3) / 8, abs=1e-6)

    def test_hopf_small_run(self):
        p = ModelParams(alpha=2.0, eps=0.1, lam=6.0, half_length=6.0)
        rows = zdl_sweep(sech2, p, [0.1], 0.05, ReferenceDescriptor(kind='hopf'), n_modes=128)
        assert rows[0].reference_kind == 'hopf'
        assert 0.0 < rows[0].error < 0.5

    def test_elliptic_file(self, tmp_path):
        path = tmp_path / 'beta.csv'
        pd.DataFrame({
            'x': [-1.0, 0.0, 1.0],
            'beta1': [1.0, 1.0, 0.0],
            'beta2': [0.5, 0.5, 0.0],
            'beta3': [-0.5, -0.5, 0.0],
        }).to_csv(path, index=False)
        p = ModelParams(alpha=2.0, eps=0.1, lam=6.0, half_length=6.0)
        reference = ReferenceDescriptor(kind='elliptic-file', beta_path=str(path), q=0.1)
        rows = zdl_sweep(sech2, p, [0.1], 0.02, reference, n_modes=64)
        assert rows[0].reference_kind == 'elliptic-file'
        assert np.isfinite(rows[0].error)

    def test_sweep_table(self):
        table = sweep_table([EpsSweepRow(eps=0.1, error=0.2, t_eval=0.2, reference_kind='hopf')])
        assert list(table.columns) == SWEEP_COLUMNS


class TestAlphaSweep:
    """Test fractional order sweeps"""

    def test_profiles(self, fractional):
        frame = alpha_sweep(sine(0.5, 1), fractional, [1.5, 2.0], 0.05, n_modes=16)
        grid = PeriodicGrid.for_modes(16)
        assert list(frame.columns) == ['x', 'u_alpha=1.5', 'u_alpha=2']
        assert len(frame) == grid.n_points
        assert not np.allclose(frame['u_alpha=1.5'], frame['u_alpha=2'])
