"""
Unit tests for the periodic Fourier machinery
"""

import numpy as np
import pytest

from src.spectral import (
    DimensionError, ParameterError, PeriodicGrid, SpectralField, SymmetryError,
    analyze, dealias, derivative_x, frac_laplacian, inner_product, l2_norm, product,
    product_estimate_ratio, projection_error, sobolev_norm, sup_norm, synthesize,
)


def random_field(grid, rng, support=None, decay=1.0):
    """Random real field with modes |k| <= support and amplitude ~ (1+|k|)^-decay"""
    support = grid.n_modes if support is None else support
    half = (rng.normal(size=support + 1) + 1j * rng.normal(size=support + 1)) / (1.0 + np.arange(support + 1)) ** decay
    half[0] = half[0].real
    coefficients = np.zeros(2 * grid.n_modes + 1, dtype=complex)
    coefficients[grid.n_modes:grid.n_modes + support + 1] = half
    coefficients[grid.n_modes - support:grid.n_modes] = np.conj(half[:0:-1])
    return SpectralField(coefficients, grid)



def constant_field(grid, value):
    field = SpectralField.zeros(grid)
    field.coefficients[grid.n_modes] = value
    return field

@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def grid8():
    return PeriodicGrid.for_modes(8)


@pytest.fixture
def grid16():
    return PeriodicGrid.for_modes(16)


class TestPeriodicGrid:
    """Test grid construction"""

    def test_default_padding(self):
        grid = PeriodicGrid.for_modes(8)
        assert grid.n_points >= 2 * (2 * 8 + 1)

    def test_points_start_at_minus_l(self):
        grid = PeriodicGrid.for_modes(4, half_length=15.0)
        assert grid.points[0] == -15.0
        assert grid.points[-1] < 15.0
        assert grid.spacing == pytest.approx(30.0 / grid.n_points)

    def test_wavenumbers_rescaled(self):
        grid = PeriodicGrid.for_modes(3, half_length=2.0 * np.pi)
        np.testing.assert_allclose(grid.wavenumbers, np.arange(-3, 4) / 2.0)

    def test_wavenumbers_on_standard_interval(self, grid8):
        np.testing.assert_array_equal(grid8.wavenumbers, np.arange(-8, 9))

    def test_too_few_points(self):
        with pytest.raises(ParameterError):
            PeriodicGrid(n_modes=8, n_points=16)

    def test_invalid_modes(self):
        with pytest.raises(ParameterError):
            PeriodicGrid.for_modes(0)

    def test_invalid_half_length(self):
        with pytest.raises(ParameterError):
            PeriodicGrid.for_modes(4, half_length=-1.0)


class TestAnalyze:
    """Test forward transform"""

    def test_cosine(self, grid8):
        field = analyze(np.cos(grid8.points), grid8)
        expected = np.zeros(17, dtype=complex)
        expected[8 + 1] = expected[8 - 1] = 0.5
        np.testing.assert_allclose(field.coefficients, expected, atol=1e-12)

    def test_constant(self, grid8):
        field = analyze(np.ones(grid8.n_points), grid8)
        assert field.coefficient(0) == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(np.delete(field.coefficients, 8))) < 1e-12

    def test_mixed_modes_against_quadrature(self, grid8):
        def f(x):
            return np.sin(3 * x) + 0.25 * np.cos(7 * x)

        field = analyze(f(grid8.points), grid8)

        # Trapezoid rule on a fine periodic grid
        x = -np.pi + 2 * np.pi * np.arange(10_000) / 10_000
        for k in range(-8, 9):
            quadrature = np.mean(f(x) * np.exp(-1j * k * x))
            assert abs(field.coefficient(k) - quadrature) < 1e-12

        assert field.coefficient(3) == pytest.approx(-0.5j, abs=1e-12)
        assert field.coefficient(-3) == pytest.approx(0.5j, abs=1e-12)
        assert field.coefficient(7) == pytest.approx(0.125, abs=1e-12)
        assert field.coefficient(-7) == pytest.approx(0.125, abs=1e-12)

    def test_length_mismatch(self, grid8):
        with pytest.raises(DimensionError):
            analyze(np.zeros(grid8.n_points + 1), grid8)

    def test_rescaled_domain(self):
        grid = PeriodicGrid.for_modes(8, half_length=15.0)
        field = analyze(np.cos(2 * np.pi * grid.points / 15.0), grid)
        assert field.coefficient(2) == pytest.approx(0.5, abs=1e-12)


class TestSynthesize:
    """Test inverse transform"""

    def test_constant(self, grid8):
        field = SpectralField.zeros(grid8)
        field.coefficients[8] = 2.5
        np.testing.assert_allclose(synthesize(field), 2.5, atol=1e-13)

    def test_cosine(self, grid8):
        coefficients = np.zeros(17, dtype=complex)
        coefficients[9] = coefficients[7] = 0.5
        np.testing.assert_allclose(synthesize(SpectralField(coefficients, grid8)), np.cos(grid8.points), atol=1e-13)

    def test_matches_direct_summation(self, grid16, rng):
        field = random_field(grid16, rng)
        direct = np.real(np.exp(1j * np.outer(grid16.points, grid16.wavenumbers)) @ field.coefficients)
        np.testing.assert_allclose(synthesize(field), direct, atol=1e-12)

    def test_evaluate_off_grid(self, grid16, rng):
        field = random_field(grid16, rng)
        x = rng.uniform(-np.pi, np.pi, size=20)
        direct = np.real(np.exp(1j * np.outer(x, grid16.wavenumbers)) @ field.coefficients)
        np.testing.assert_allclose(field.evaluate(x), direct, atol=1e-12)

    def test_broken_symmetry(self, grid8):
        coefficients = np.zeros(17, dtype=complex)
        coefficients[9] = 1.0
        coefficients[7] = 0.5
        with pytest.raises(SymmetryError):
            synthesize(SpectralField(coefficients, grid8))

    def test_round_trip_identity(self, grid16, rng):
        field = random_field(grid16, rng)
        back = analyze(synthesize(field), grid16)
        np.testing.assert_allclose(back.coefficients, field.coefficients, atol=1e-13)

    def test_round_trip_on_band_limited_samples(self, grid8):
        samples = np.sin(3 * grid8.points) + 0.25 * np.cos(7 * grid8.points) - 0.1
        np.testing.assert_allclose(synthesize(analyze(samples, grid8)), samples, atol=1e-13)

    def test_parseval(self, grid16, rng):
        field = random_field(grid16, rng)
        samples = synthesize(field)
        physical = np.sqrt(grid16.length * np.mean(samples ** 2))
        assert l2_norm(field) == pytest.approx(physical, rel=1e-10)


class TestFieldArithmetic:
    """Test SpectralField operators"""

    def test_add_subtract_scale(self, grid8, rng):
        f = random_field(grid8, rng)
        g = random_field(grid8, rng)
        np.testing.assert_allclose((f + g - g).coefficients, f.coefficients, atol=1e-14)
        np.testing.assert_allclose((2.0 * f).coefficients, (f * 2.0).coefficients)
        np.testing.assert_allclose((-f).coefficients, -f.coefficients)

    def test_grid_mismatch(self, grid8, grid16):
        with pytest.raises(DimensionError):
            SpectralField.zeros(grid8) + SpectralField.zeros(grid16)

    def test_wrong_length(self, grid8):
        with pytest.raises(DimensionError):
            SpectralField(np.zeros(5), grid8)

    def test_resample_pads_and_truncates(self, grid8, grid16, rng):
        f = random_field(grid8, rng)
        up = f.resample(grid16)
        assert up.coefficient(8) == f.coefficient(8)
        assert up.coefficient(12) == 0
        np.testing.assert_array_equal(up.resample(grid8).coefficients, f.coefficients)

    def test_symmetrize(self, grid8):
        coefficients = np.zeros(17, dtype=complex)
        coefficients[9] = 1.0
        field = SpectralField(coefficients, grid8).symmetrize()
        assert field.is_hermitian()
        assert field.coefficient(1) == field.coefficient(-1) == 0.5


class TestFracLaplacian:
    """Test the fractional Laplacian multiplier"""

    def test_classical_laplacian(self, grid8):
        field = analyze(np.sin(3 * grid8.points), grid8)
        result = synthesize(frac_laplacian(field, 2.0))
        np.testing.assert_allclose(result, 9 * np.sin(3 * grid8.points), atol=1e-12)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 2.0])
    def test_constant_to_zero(self, grid8, alpha):
        field = constant_field(grid8, 3.0)
        assert np.max(np.abs(frac_laplacian(field, alpha).coefficients)) == 0.0

    def test_alpha_zero_keeps_mean(self, grid8):
        field = constant_field(grid8, 3.0)
        assert frac_laplacian(field, 0.0).coefficient(0) == pytest.approx(3.0)

    def test_fractional_mode(self, grid8):
        field = analyze(np.cos(2 * grid8.points), grid8)
        result = frac_laplacian(field, 1.5)
        assert result.coefficient(2) == pytest.approx(2 ** 1.5 * 0.5, rel=1e-13)
        assert result.coefficient(-2) == pytest.approx(2 ** 1.5 * 0.5, rel=1e-13)

    def test_negative_alpha(self, grid8):
        with pytest.raises(ParameterError):
            frac_laplacian(SpectralField.zeros(grid8), -0.5)

    def test_commutes_with_projection(self, grid16, grid8, rng):
        f = random_field(grid16, rng)
        truncated_first = frac_laplacian(f.resample(grid8), 1.3)
        applied_first = frac_laplacian(f, 1.3).resample(grid8)
        np.testing.assert_array_equal(truncated_first.coefficients, applied_first.coefficients)

    @pytest.mark.parametrize("alpha1", [0.5, 1.0, 1.5])
    @pytest.mark.parametrize("alpha2", [0.5, 1.0, 1.5])
    def test_semigroup(self, grid16, rng, alpha1, alpha2):
        f = random_field(grid16, rng)
        composed = frac_laplacian(frac_laplacian(f, alpha1), alpha2)
        direct = frac_laplacian(f, alpha1 + alpha2)
        np.testing.assert_allclose(composed.coefficients, direct.coefficients, rtol=1e-12, atol=0)

    @pytest.mark.parametrize("alpha", [1.0, 1.5, 1.999])
    def test_symmetric(self, grid16, rng, alpha):
        f = random_field(grid16, rng)
        g = random_field(grid16, rng)
        left = inner_product(frac_laplacian(f, alpha), g)
        right = inner_product(f, frac_laplacian(g, alpha))
        assert left == pytest.approx(right, rel=1e-12)

    @pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0])
    def test_skew_orthogonal(self, grid16, rng, alpha):
        f = random_field(grid16, rng)
        value = inner_product(derivative_x(frac_laplacian(f, alpha)), f)
        assert abs(value) <= 1e-12 * l2_norm(frac_laplacian(f, alpha)) * l2_norm(f)


class TestDerivative:
    """Test the derivative multiplier"""

    def test_sine_to_cosine(self, grid8):
        result = synthesize(derivative_x(analyze(np.sin(grid8.points), grid8)))
        np.testing.assert_allclose(result, np.cos(grid8.points), atol=1e-13)

    def test_constant_to_zero(self, grid8):
        result = derivative_x(constant_field(grid8, 2.0))
        assert np.max(np.abs(result.coefficients)) == 0.0

    def test_against_finite_differences(self, rng):
        grid = PeriodicGrid.for_modes(6)
        field = random_field(grid, rng) * 0.1
        n = 2 ** 14
        h = 2 * np.pi / n
        values = synthesize(field, n_points=n)
        # Fourth-order centred difference
        fd = (8 * (np.roll(values, -1) - np.roll(values, 1)) - (np.roll(values, -2) - np.roll(values, 2))) / (12 * h)
        exact = synthesize(derivative_x(field), n_points=n)
        assert np.max(np.abs(fd - exact)) < 1e-6


class TestSobolevNorm:
    """Test Sobolev norms"""

    def test_zero_field(self, grid8):
        assert sobolev_norm(SpectralField.zeros(grid8), 2.5) == 0.0

    def test_cosine_l2(self, grid8):
        field = analyze(np.cos(grid8.points), grid8)
        assert sobolev_norm(field, 0) == pytest.approx(np.sqrt(0.5), rel=1e-13)

    @pytest.mark.parametrize("r", [1.0, 2.0])
    def test_direct_summation(self, grid8, r):
        field = analyze(np.sin(grid8.points) + np.sin(4 * grid8.points) / 16, grid8)
        expected = np.sqrt(2 * (2 ** r / 4 + 17 ** r / 32 ** 2))
        assert sobolev_norm(field, r) == pytest.approx(expected, rel=1e-12)

    def test_monotone_in_r(self, grid16, rng):
        field = random_field(grid16, rng)
        norms = [sobolev_norm(field, r) for r in (0.0, 0.5, 1.0, 2.5)]
        assert norms == sorted(norms)

    def test_negative_exponent(self, grid8):
        with pytest.raises(ParameterError):
            sobolev_norm(SpectralField.zeros(grid8), -1.0)


def convolution_oracle(f, g):
    """Truncated product of two coefficient sequences by direct convolution"""
    n = f.n_modes
    return np.convolve(f.coefficients, g.coefficients)[n:3 * n + 1]


class TestDealiasAndProduct:
    """Test the two-thirds rule and the padded product"""

    def test_supported_field_unchanged(self):
        grid = PeriodicGrid.for_modes(12)
        field = analyze(np.cos(8 * grid.points) + np.sin(3 * grid.points), grid)
        np.testing.assert_array_equal(dealias(field).coefficients, field.coefficients)

    def test_top_mode_removed(self):
        grid = PeriodicGrid.for_modes(12)
        field = SpectralField.zeros(grid)
        field.coefficients[0] = field.coefficients[-1] = 0.5
        assert np.max(np.abs(dealias(field).coefficients)) == 0.0

    def test_idempotent(self, grid16, rng):
        once = dealias(random_field(grid16, rng))
        np.testing.assert_array_equal(dealias(once).coefficients, once.coefficients)

    def test_square_of_top_mode(self):
        grid = PeriodicGrid.for_modes(4)
        u = analyze(np.cos(4 * grid.points), grid)
        exact = convolution_oracle(u, u)

        dealiased = product(u, u, dealiased=True)
        aliased = product(u, u, dealiased=False)

        np.testing.assert_allclose(dealiased.coefficients, exact, atol=1e-14)
        assert dealiased.coefficient(0) == pytest.approx(0.5)
        # cos(8x) folds onto |k| = 1 on the minimal 9-point grid
        assert abs(aliased.coefficient(1)) == pytest.approx(0.25, abs=1e-13)

    def test_random_product_matches_convolution(self, grid16, rng):
        f = random_field(grid16, rng)
        g = random_field(grid16, rng)
        np.testing.assert_allclose(product(f, g).coefficients, convolution_oracle(f, g), atol=1e-13)

    @pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0])
    def test_product_estimate(self, rng, alpha):
        grid = PeriodicGrid.for_modes(32)
        ratios = []
        for _ in range(100):
            f = random_field(grid, rng, support=16)
            g = random_field(grid, rng, support=16)
            ratios.append(product_estimate_ratio(f, g, alpha))
        assert max(ratios) <= 1.0

    def test_sup_norm(self, grid8):
        field = analyze(0.5 * np.sin(grid8.points), grid8)
        assert sup_norm(field) == pytest.approx(0.5, rel=1e-3)


class TestProjectionError:
    """Test truncation error decay"""

    def test_trig_polynomial_exact(self):
        n = 256
        x = -np.pi + 2 * np.pi * np.arange(n) / n
        samples = np.cos(3 * x) + 0.5 * np.sin(5 * x)
        assert projection_error(samples, 5) < 1e-12

    def test_analytic_geometric_decay(self):
        n = 1024
        x = -np.pi + 2 * np.pi * np.arange(n) / n
        samples = np.exp(np.cos(x))
        orders = [4, 8, 12]
        errors = [projection_error(samples, order) for order in orders]
        slope = np.polyfit(orders, np.log(errors), 1)[0]
        assert slope < -0.5

    def test_kink_algebraic_decay(self):
        n = 2 ** 14
        x = -np.pi + 2 * np.pi * np.arange(n) / n
        samples = np.abs(x)
        orders = [16, 32, 64, 128]
        errors = [projection_error(samples, order) for order in orders]
        exponent = -np.polyfit(np.log(orders), np.log(errors), 1)[0]
        assert 1.0 <= exponent <= 2.0

    def test_resolution_check(self):
        with pytest.raises(ParameterError):
            projection_error(np.zeros(17), 8)
