"""Transform conventions, multipliers, free evolution, space-time transforms."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dgbo.spectral import (
    SpatialGrid,
    SpaceTimeGrid,
    SpaceTimeSpectral,
    SpectralField,
    dispersion_symbol,
    fractional_derivative,
    free_evolution,
    from_spectral,
    hermitian_residual,
    l2_norm,
    mean_value,
    modulation_to_coeffs,
    modulation_transform,
    sobolev_norm,
    spacetime_from_spectral,
    spacetime_l2,
    spacetime_to_spectral,
    spatial_derivative,
    to_spectral,
)


def random_real_field(grid, rng, decay=2.0):
    """Smooth random real field via spectrally decaying coefficients."""
    n = grid.n_points
    c = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.exp(
        -decay * np.abs(grid.modes) / n * 8
    )
    c[0] = rng.standard_normal()
    # hermitian symmetrize
    idx = (-np.arange(n)) % n
    c = 0.5 * (c + np.conj(c[idx]))
    c[n // 2] = c[n // 2].real
    return SpectralField(grid, c, is_real=True)


class TestSpatialGrid:
    def test_validation(self):
        with pytest.raises(ValueError):
            SpatialGrid(100, 10.0)  # not a power of two
        with pytest.raises(ValueError):
            SpatialGrid(64, -1.0)

    def test_layout(self):
        g = SpatialGrid(8, 16.0)
        assert g.spacing == 2.0
        assert g.x[0] == -8.0
        np.testing.assert_allclose(g.frequencies[1], 2 * np.pi / 16.0)
        assert g.modes[4] == -4  # Nyquist stored negative
        assert g.max_frequency == np.pi * 8 / 16.0


class TestTransforms:
    def test_constant_maps_to_zero_mode(self):
        g = SpatialGrid(64, 32.0)
        f = to_spectral(np.full(64, 3.25), g)
        assert abs(f.coeffs[0] - 3.25) < 1e-14
        assert np.max(np.abs(f.coeffs[1:])) < 1e-14

    def test_cosine_splits_into_half_coefficients(self):
        g = SpatialGrid(128, 64.0)
        xi0 = g.frequencies[5]
        f = to_spectral(np.cos(xi0 * g.x), g)
        assert abs(f.coeffs[5] - 0.5) < 1e-12
        assert abs(f.coeffs[-5] - 0.5) < 1e-12
        rest = f.coeffs.copy()
        rest[5] = rest[-5] = 0.0
        assert np.max(np.abs(rest)) < 1e-12

    def test_round_trip_fixed(self):
        g = SpatialGrid(256, 100.0)
        rng = np.random.default_rng(7)
        h = rng.standard_normal(256)
        back = from_spectral(to_spectral(h, g))
        assert np.max(np.abs(back - h)) < 1e-12

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_round_trip_property(self, seed):
        g = SpatialGrid(64, 17.0)
        rng = np.random.default_rng(seed)
        h = rng.standard_normal(64) * 10.0
        back = from_spectral(to_spectral(h, g))
        assert np.max(np.abs(back - h)) < 1e-11

    def test_parseval(self):
        g = SpatialGrid(512, 256.0)
        rng = np.random.default_rng(3)
        h = rng.standard_normal(512)
        f = to_spectral(h, g)
        direct = np.sqrt(g.spacing * np.sum(h**2))
        assert abs(l2_norm(f) - direct) < 1e-10 * direct

    def test_hermitian_residual(self):
        g = SpatialGrid(64, 32.0)
        f = to_spectral(np.sin(g.frequencies[3] * g.x), g)
        assert hermitian_residual(f) < 1e-14
        f2 = SpectralField(g, np.ones(64) * 1j)
        assert hermitian_residual(f2) > 1.0

    def test_mean_value(self):
        g = SpatialGrid(64, 32.0)
        f = to_spectral(np.full(64, 0.5), g)
        assert abs(mean_value(f) - 0.5 * 32.0) < 1e-12


class TestMultipliers:
    def test_fractional_derivative_of_cosine(self):
        # |xi|^1.5 at |xi| = 1 is 1, so D^1.5 cos = cos on L = 2 pi
        g = SpatialGrid(64, 2 * np.pi)
        f = to_spectral(np.cos(g.x), g)
        out = from_spectral(fractional_derivative(f, 1.5))
        assert np.max(np.abs(out - np.cos(g.x))) < 1e-12

    def test_zero_frequency_convention(self):
        g = SpatialGrid(32, 8.0)
        const = to_spectral(np.ones(32), g)
        assert np.max(np.abs(fractional_derivative(const, 1.5).coeffs)) < 1e-14
        # alpha = 0 is the identity, including on the zero mode
        same = fractional_derivative(const, 0.0)
        np.testing.assert_allclose(same.coeffs, const.coeffs)

    def test_negative_alpha_rejected(self):
        g = SpatialGrid(32, 8.0)
        with pytest.raises(ValueError):
            fractional_derivative(to_spectral(np.ones(32), g), -0.5)

    def test_spatial_derivative(self):
        g = SpatialGrid(128, 2 * np.pi)
        f = to_spectral(np.sin(3 * g.x), g)
        out = from_spectral(spatial_derivative(f))
        assert np.max(np.abs(out - 3 * np.cos(3 * g.x))) < 1e-11


class TestDispersion:
    def test_symbol_values(self):
        assert dispersion_symbol(0.0, 1.5) == 0.0
        assert abs(dispersion_symbol(1.0, 1.5) + 1.0) < 1e-15
        assert abs(dispersion_symbol(-2.0, 1.5) - 2.0**2.5) < 1e-12

    def test_symbol_odd(self):
        rng = np.random.default_rng(0)
        xi = rng.uniform(0.0, 1000.0, 20001)
        w_plus = dispersion_symbol(xi, 1.5)
        w_minus = dispersion_symbol(-xi, 1.5)
        # |-(xi)| is bit-identical to |xi|, so oddness is exact in floats
        assert np.max(np.abs(w_plus + w_minus)) == 0.0

    def test_free_evolution_unitary(self):
        g = SpatialGrid(128, 64.0)
        f = random_real_field(g, np.random.default_rng(0))
        before = l2_norm(f)
        after = l2_norm(free_evolution(f, 2.7, 1.5))
        assert abs(after - before) < 1e-12 * before

    def test_group_law(self):
        g = SpatialGrid(128, 64.0)
        f = random_real_field(g, np.random.default_rng(1))
        a = free_evolution(free_evolution(f, 0.4, 1.5), 0.9, 1.5)
        b = free_evolution(f, 1.3, 1.5)
        assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-12

    def test_inverse(self):
        g = SpatialGrid(128, 64.0)
        f = random_real_field(g, np.random.default_rng(2))
        back = free_evolution(free_evolution(f, 1.0, 1.5), -1.0, 1.5)
        assert np.max(np.abs(back.coeffs - f.coeffs)) < 1e-13

    def test_commutes_with_fractional_derivative(self):
        g = SpatialGrid(128, 64.0)
        f = random_real_field(g, np.random.default_rng(3))
        a = fractional_derivative(free_evolution(f, 0.8, 1.5), 1.5)
        b = free_evolution(fractional_derivative(f, 1.5), 0.8, 1.5)
        assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-12


class TestSobolev:
    def test_sigma_zero_is_l2(self):
        g = SpatialGrid(128, 64.0)
        f = random_real_field(g, np.random.default_rng(4))
        assert abs(sobolev_norm(f, 0.0) - l2_norm(f)) < 1e-12

    def test_single_mode(self):
        g = SpatialGrid(64, 2 * np.pi)
        xi0 = g.frequencies[4]
        c = np.zeros(64, dtype=complex)
        c[4] = 1.0
        f = SpectralField(g, c)
        expected = np.sqrt(2 * np.pi) * (1 + xi0**2) ** 0.5
        assert abs(sobolev_norm(f, 1.0) - expected) < 1e-12

    def test_two_cosines_h1(self):
        # cos x + cos 2x on L = 2 pi: four coefficients of 1/2;
        # L * sum (1+xi^2)|c|^2 = 2 pi (2/4 * 2 + 5/4 * 2) = 7 pi
        g = SpatialGrid(64, 2 * np.pi)
        f = to_spectral(np.cos(g.x) + np.cos(2 * g.x), g)
        assert abs(sobolev_norm(f, 1.0) ** 2 - 7 * np.pi) < 1e-10


class TestSpaceTime:
    def make(self, nx=32, nt=64, L=40.0, T=16.0):
        return SpaceTimeGrid(SpatialGrid(nx, L), nt, T)

    def test_t_length_floor(self):
        with pytest.raises(ValueError):
            SpaceTimeGrid(SpatialGrid(32, 10.0), 32, 8.0)

    def test_round_trip(self):
        g = self.make()
        rng = np.random.default_rng(5)
        h = rng.standard_normal((32, 64))
        f = spacetime_to_spectral(h, g)
        assert np.max(np.abs(spacetime_from_spectral(f) - h)) < 1e-10

    def test_parseval(self):
        g = self.make()
        rng = np.random.default_rng(6)
        h = rng.standard_normal((32, 64))
        f = spacetime_to_spectral(h, g)
        direct = np.sqrt(g.spatial.spacing * g.t_spacing * np.sum(h**2))
        assert abs(spacetime_l2(f) - direct) < 1e-10 * direct

    def test_separable_mode(self):
        g = self.make()
        xi0 = g.spatial.frequencies[3]
        tau0 = g.tau[5]
        h = np.exp(1j * (np.outer(xi0 * g.spatial.x, np.ones(64)) + tau0 * g.t[None, :]))
        f = spacetime_to_spectral(h, g)
        assert abs(f.coeffs[3, 5] - 1.0) < 1e-12
        rest = f.coeffs.copy()
        rest[3, 5] = 0.0
        assert np.max(np.abs(rest)) < 1e-12

    def test_modulation_of_free_wave_concentrates_at_zero(self):
        g = self.make(nx=64, nt=64, L=64.0, T=16.0)
        rng = np.random.default_rng(8)
        phi_hat = rng.standard_normal(64) * np.exp(-np.abs(g.spatial.modes) / 4.0)
        # hybrid data u(xi, t) of a free wave; transform the t axis only
        u = phi_hat[:, None] * np.exp(
            1j * np.outer(dispersion_symbol(g.spatial.frequencies, 1.5), g.t)
        )
        coeffs = g.t_phase[None, :] * np.fft.fft(u, axis=1) / g.n_times
        f = SpaceTimeSpectral(g, coeffs)
        a = modulation_transform(f, 1.5)
        np.testing.assert_allclose(a[:, 0], phi_hat, atol=1e-12)
        off = a.copy()
        off[:, 0] = 0.0
        assert np.max(np.abs(off)) < 1e-12

    def test_modulation_unitary_and_invertible(self):
        g = self.make()
        rng = np.random.default_rng(9)
        f = spacetime_to_spectral(rng.standard_normal((32, 64)), g)
        a = modulation_transform(f, 1.5)
        assert abs(np.sum(np.abs(a) ** 2) - np.sum(np.abs(f.coeffs) ** 2)) < 1e-12
        back = modulation_to_coeffs(a, g, 1.5)
        assert np.max(np.abs(back - f.coeffs)) < 1e-12
