"""Gauge layer: splitting, antiderivative, block components, right sides."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dgbo.blocks import blocks_for_grid, project
from dgbo.gauge import (
    GaugeData,
    RenormalizedBlocks,
    antiderivative_Psi,
    apply_phase,
    gauge_coefficient,
    make_gauge_data,
    masked_product,
    renormalize,
    reconstruct,
    residual_check,
    rhs_R0,
    rhs_Rk,
    rhs_Rk_split,
    split_low_high,
)
from dgbo.spectral import (
    SpatialGrid,
    SpectralField,
    dealias_mask,
    fractional_derivative,
    from_spectral,
    l2_norm,
    spatial_derivative,
    to_spectral,
)

from helpers import band_limited

ALPHA = 1.5


@pytest.fixture(scope="module")
def grid():
    return SpatialGrid(n_points=256, length=64.0)


@pytest.fixture(scope="module")
def bs(grid):
    return blocks_for_grid(ALPHA, grid)


@pytest.fixture(scope="module")
def cf(bs):
    from dgbo.blocks import CutoffFamily

    return CutoffFamily(bs)


class TestSplit:
    def test_parts_sum_to_whole(self, grid):
        phi = band_limited(grid, 8.0, seed=1)
        lo, hi = split_low_high(phi)
        assert np.array_equal(lo.coeffs + hi.coeffs, phi.coeffs)

    def test_supports_disjoint(self, grid):
        phi = band_limited(grid, 8.0, seed=2)
        lo, hi = split_low_high(phi)
        xi = grid.frequencies
        assert np.all(lo.coeffs[np.abs(xi) > 0.5] == 0)
        assert np.all(hi.coeffs[np.abs(xi) <= 0.5] == 0)

    def test_coarse_grid_rejected(self):
        g = SpatialGrid(n_points=64, length=32.0)  # spacing ~0.196
        phi = SpectralField(g, np.zeros(64, dtype=np.complex128), is_real=True)
        with pytest.raises(ValueError, match="too coarse"):
            split_low_high(phi)


class TestPsi:
    def test_cosine_oracle(self, grid):
        xi0 = 4 * grid.freq_spacing  # well below the cut 1/2
        assert xi0 <= 0.5
        samples = np.cos(xi0 * grid.x)
        phi = to_spectral(samples, grid)
        psi = antiderivative_Psi(phi)
        expected = np.sin(xi0 * grid.x) / xi0
        assert np.max(np.abs(from_spectral(psi) - expected)) < 1e-12

    def test_sine_oracle(self, grid):
        xi0 = 3 * grid.freq_spacing
        phi = to_spectral(np.sin(xi0 * grid.x), grid)
        psi = antiderivative_Psi(phi)
        expected = (1.0 - np.cos(xi0 * grid.x)) / xi0
        assert np.max(np.abs(from_spectral(psi) - expected)) < 1e-12

    def test_derivative_recovers_input(self, grid):
        phi = band_limited(grid, 0.5, seed=3, mean_zero=True)
        psi = antiderivative_Psi(phi)
        back = spatial_derivative(psi, 1)
        assert np.max(np.abs(back.coeffs - phi.coeffs)) < 1e-15

    def test_vanishes_at_origin(self, grid):
        phi = band_limited(grid, 0.5, seed=4, mean_zero=True)
        psi = antiderivative_Psi(phi)
        i0 = int(np.argmin(np.abs(grid.x)))
        assert abs(from_spectral(psi)[i0]) < 1e-15

    def test_nonzero_mean_rejected(self, grid):
        c = np.zeros(grid.n_points, dtype=np.complex128)
        c[0] = 0.1
        phi = SpectralField(grid, c, is_real=True)
        with pytest.raises(ValueError, match="mean"):
            antiderivative_Psi(phi)

    def test_zero_field_allowed(self, grid):
        z = SpectralField(grid, np.zeros(grid.n_points, dtype=np.complex128), True)
        psi = antiderivative_Psi(z)
        assert np.all(psi.coeffs == 0)


class TestGaugeCoefficient:
    def test_reference_value(self, bs):
        # n_1 = 4 and alpha = 3/2 give -4 * 4^{-3/2} / (5/2) = -1/5 exactly.
        assert gauge_coefficient(bs, 1) == -0.2

    def test_zero_block(self, bs):
        assert gauge_coefficient(bs, 0) == 0.0

    def test_antisymmetry(self, bs):
        for k in range(1, bs.k_max + 1):
            assert gauge_coefficient(bs, -k) == -gauge_coefficient(bs, k)

    def test_decay_in_k(self, bs):
        mags = [abs(gauge_coefficient(bs, k)) for k in range(1, bs.k_max + 1)]
        assert all(a > b for a, b in zip(mags, mags[1:]))


class TestRenormalize:
    def test_round_trip(self, grid, bs, cf):
        phi = band_limited(grid, 8.0, seed=10)
        gd = make_gauge_data(phi, bs)
        rb = renormalize(phi, gd, bs, cf)
        back = reconstruct(rb, gd)
        err = l2_norm(SpectralField(grid, back.coeffs - phi.coeffs, is_real=False))
        assert err <= 1e-10 * l2_norm(phi)

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10**6))
    def test_round_trip_property(self, seed):
        g = SpatialGrid(n_points=128, length=64.0)
        bs_local = blocks_for_grid(ALPHA, g)
        from dgbo.blocks import CutoffFamily

        cf_local = CutoffFamily(bs_local)
        phi = band_limited(g, 5.0, seed=seed)
        gd = make_gauge_data(phi, bs_local)
        rb = renormalize(phi, gd, bs_local, cf_local)
        back = reconstruct(rb, gd)
        scale = max(l2_norm(phi), 1e-30)
        err = l2_norm(SpectralField(g, back.coeffs - phi.coeffs, is_real=False))
        assert err <= 1e-10 * scale

    def test_remainder_is_high_part_at_start(self, grid, bs, cf):
        phi = band_limited(grid, 8.0, seed=11)
        gd = make_gauge_data(phi, bs)
        rb = renormalize(phi, gd, bs, cf)
        assert np.array_equal(rb.v.coeffs, gd.phi_high.coeffs)

    def test_fixed_point_identity(self, grid, bs, cf):
        # v_k = e^{-ia Psi} sharp-projection of e^{+ia Psi} v_k.
        phi = band_limited(grid, 8.0, seed=12)
        gd = make_gauge_data(phi, bs)
        rb = renormalize(phi, gd, bs, cf)
        for k in (1, 2, -1):
            vk = rb.v_k[k]
            if l2_norm(vk) < 1e-14:
                continue
            undone = apply_phase(gd, k, +1, vk)
            fp = apply_phase(gd, k, -1, project(undone, k, cf, sharp=True))
            err = l2_norm(SpectralField(grid, fp.coeffs - vk.coeffs, is_real=False))
            assert err <= 1e-10 * l2_norm(vk)

    def test_empty_blocks_vanish(self, grid, bs, cf):
        phi = band_limited(grid, 3.0, seed=13)
        gd = make_gauge_data(phi, bs)
        rb = renormalize(phi, gd, bs, cf)
        far = [k for k in rb.v_k if abs(bs.n_of(k)) > 6.0]
        assert far
        for k in far:
            assert l2_norm(rb.v_k[k]) < 1e-13

    def test_phase_is_unimodular(self, grid, bs):
        phi = band_limited(grid, 8.0, seed=14)
        gd = make_gauge_data(phi, bs)
        ph = gd.phase(3, +1)
        assert np.max(np.abs(np.abs(ph) - 1.0)) < 1e-14


class TestMaskedProduct:
    def test_against_direct_convolution(self, grid):
        f = band_limited(grid, 6.0, seed=20, scale=1.0)
        g = band_limited(grid, 7.0, seed=21, scale=1.0)
        got = masked_product(f, g)
        n = grid.n_points
        conv = np.zeros(n, dtype=np.complex128)
        modes = grid.modes
        pos = {int(m): i for i, m in enumerate(modes)}
        fa, ga = f.coeffs, g.coeffs
        for i1, m1 in enumerate(modes):
            if fa[i1] == 0:
                continue
            for i2, m2 in enumerate(modes):
                if ga[i2] == 0:
                    continue
                m = int(m1 + m2)
                if m in pos:
                    conv[pos[m]] += fa[i1] * ga[i2]
        conv *= dealias_mask(grid)
        assert np.max(np.abs(got.coeffs - conv)) < 1e-13

    def test_masked_band(self, grid):
        f = band_limited(grid, 10.0, seed=22, scale=1.0)
        out = masked_product(f, f)
        cut = (2.0 / 3.0) * (grid.n_points // 2)
        assert np.all(out.coeffs[np.abs(grid.modes) >= cut] == 0)


def make_state(grid, bs, cf, seed, band=8.0):
    phi = band_limited(grid, band, seed=seed)
    gd = make_gauge_data(phi, bs)
    rb = renormalize(phi, gd, bs, cf)
    return phi, gd, rb


class TestRightSides:
    def test_split_sum_matches_compact(self, grid, bs, cf):
        # band 6 keeps every product strictly inside the dealias band, so
        # the two routes may only differ by roundoff
        phi, gd, rb = make_state(grid, bs, cf, seed=30, band=6.0)
        for k in (1, -1, 2):
            compact = rhs_Rk(k, rb, gd, bs, cf, ALPHA)
            parts = rhs_Rk_split(k, rb, gd, bs, cf, ALPHA)
            total = sum(p.coeffs for p in parts)
            scale = max(l2_norm(compact), 1e-30)
            err = l2_norm(SpectralField(grid, total - compact.coeffs, is_real=False))
            assert err <= 1e-12 * scale, f"block {k}: {err / scale}"

    def test_split_rejects_zero_block(self, grid, bs, cf):
        phi, gd, rb = make_state(grid, bs, cf, seed=31)
        with pytest.raises(ValueError):
            rhs_Rk_split(0, rb, gd, bs, cf, ALPHA)

    def test_manufactured_time_derivative(self, grid, bs, cf):
        """If dv/dt is forced to the flow's value, each block equation closes."""
        phi, gd, rb = make_state(grid, bs, cf, seed=32)
        v = rb.v
        pl = gd.phi_low
        vv = masked_product(v, v)
        lv = masked_product(pl, v)
        ll = masked_product(pl, pl)
        quad = SpectralField(
            grid, lv.coeffs + 0.5 * vv.coeffs + 0.5 * ll.coeffs, is_real=True
        )
        dtv_coeffs = -(
            spatial_derivative(fractional_derivative(v, ALPHA), 1).coeffs
            + spatial_derivative(quad, 1).coeffs
            + spatial_derivative(fractional_derivative(pl, ALPHA), 1).coeffs
        )
        dtv = SpectralField(grid, dtv_coeffs, is_real=False)
        for k in (0, 1, -1, 2):
            dt_vk = apply_phase(gd, k, -1, project(dtv, k, cf))
            vk = rb.v_k[k]
            disp = spatial_derivative(fractional_derivative(vk, ALPHA), 1)
            rk = rhs_Rk(k, rb, gd, bs, cf, ALPHA)
            defect = dt_vk.coeffs + disp.coeffs - rk.coeffs
            scale = max(l2_norm(disp), l2_norm(rk), 1e-30)
            err = l2_norm(SpectralField(grid, defect, is_real=False))
            assert err <= 1e-11 * scale, f"block {k}: {err / scale}"

    def test_r0_single_mode_oracle(self, grid, bs, cf):
        # phi_low = eps cos(xi0 x), v = 0: only the static source terms act.
        from dgbo.blocks import chi_eval

        xi0 = 4 * grid.freq_spacing
        eps = 0.01
        phi = to_spectral(eps * np.cos(xi0 * grid.x), grid)
        gd = make_gauge_data(phi, bs)
        zero = SpectralField(grid, np.zeros_like(phi.coeffs), is_real=True)
        r0 = rhs_R0(zero, gd, ALPHA, cf)
        # term: -D^alpha dx P_0 phi_low at +-xi0, coefficient -(i xi)|xi|^a * eps/2
        # term: -P_0 dx(phi_low^2/2): phi_low^2 = eps^2/2 (1 + cos(2 xi0 x))
        expected = np.zeros_like(phi.coeffs)
        i_p = np.nonzero(np.isclose(grid.frequencies, xi0))[0][0]
        i_m = np.nonzero(np.isclose(grid.frequencies, -xi0))[0][0]
        for idx, s in ((i_p, 1.0), (i_m, -1.0)):
            xi = s * xi0
            w = chi_eval(cf, 0, xi)
            expected[idx] += -(1j * xi) * abs(xi) ** ALPHA * w * (eps / 2.0)
        i2p = np.nonzero(np.isclose(grid.frequencies, 2 * xi0))[0][0]
        i2m = np.nonzero(np.isclose(grid.frequencies, -2 * xi0))[0][0]
        for idx, s in ((i2p, 1.0), (i2m, -1.0)):
            xi = s * 2 * xi0
            w = chi_eval(cf, 0, xi)
            expected[idx] += -(1j * xi) * w * 0.5 * (eps**2 / 4.0)
        assert np.max(np.abs(r0.coeffs - expected)) < 1e-14

    def test_no_low_part_reduces_to_projection(self, grid, bs, cf):
        rng_phi = band_limited(grid, 6.0, seed=33)
        c = rng_phi.coeffs * (np.abs(grid.frequencies) > 0.5)
        phi = SpectralField(grid, c, is_real=True)
        gd = make_gauge_data(phi, bs)
        assert l2_norm(gd.phi_low) == 0.0
        rb = renormalize(phi, gd, bs, cf)
        k = 1
        parts = rhs_Rk_split(k, rb, gd, bs, cf, ALPHA)
        # every mechanism that involves phi_low is off
        for p in parts[1:]:
            assert l2_norm(p) < 1e-13
        vv = masked_product(rb.v, rb.v)
        half = SpectralField(grid, 0.5 * vv.coeffs, is_real=True)
        direct = spatial_derivative(project(half, k, cf), 1)
        assert (
            l2_norm(SpectralField(grid, parts[0].coeffs + direct.coeffs, False))
            < 1e-13
        )

    def test_high_blocks_dormant_without_v(self, grid, bs, cf):
        phi = band_limited(grid, 0.5, seed=34)  # low content only
        gd = make_gauge_data(phi, bs)
        rb = renormalize(phi, gd, bs, cf)
        assert l2_norm(rb.v) < 1e-15
        for k in (1, 2, -1, -3):
            rk = rhs_Rk(k, rb, gd, bs, cf, ALPHA)
            assert l2_norm(rk) < 1e-13


def integrate_masked(u0, alpha, dt, n_steps, snapshot_stride):
    """Plain RK4 on the dealiased flow; independent of the solver module."""
    grid = u0.grid
    mask = dealias_mask(grid)
    xi = grid.frequencies
    sym = 1j * xi * np.abs(xi) ** alpha  # D^alpha dx

    def rhs(c):
        f = SpectralField(grid, c, is_real=False)
        s = from_spectral(f)
        quad = to_spectral(s * s, grid).coeffs * mask
        return -sym * c - 0.5 * 1j * xi * quad * mask

    times = [0.0]
    states = [u0]
    c = u0.coeffs.astype(np.complex128)
    for n in range(1, n_steps + 1):
        k1 = rhs(c)
        k2 = rhs(c + 0.5 * dt * k1)
        k3 = rhs(c + 0.5 * dt * k2)
        k4 = rhs(c + dt * k3)
        c = c + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if n % snapshot_stride == 0:
            times.append(n * dt)
            states.append(SpectralField(grid, c.copy(), is_real=False))
    return times, states


class _Traj:
    def __init__(self, times, states):
        self.times = times
        self.states = states


class TestResidualCheck:
    def test_needs_five_snapshots(self, grid, bs, cf):
        phi, gd, _ = make_state(grid, bs, cf, seed=40)
        tr = _Traj([0.0, 0.1, 0.2, 0.3], [phi] * 4)
        with pytest.raises(ValueError, match="at least 5"):
            residual_check(tr, gd, bs, cf, 1)

    def test_needs_uniform_spacing(self, grid, bs, cf):
        phi, gd, _ = make_state(grid, bs, cf, seed=41)
        tr = _Traj([0.0, 0.1, 0.2, 0.35, 0.4], [phi] * 5)
        with pytest.raises(ValueError, match="uniform"):
            residual_check(tr, gd, bs, cf, 1)

    def test_rejects_edge_block(self, grid, bs, cf):
        phi, gd, _ = make_state(grid, bs, cf, seed=42)
        tr = _Traj([0.0, 0.1, 0.2, 0.3, 0.4], [phi] * 5)
        edge_k = None
        cut = (2.0 / 3.0) * grid.max_frequency
        for k in range(1, bs.k_max + 1):
            lo, hi = bs.chi_support(k)
            if hi + 1.0 >= cut:
                edge_k = k
                break
        assert edge_k is not None
        with pytest.raises(ValueError, match="dealias"):
            residual_check(tr, gd, bs, cf, edge_k)

    def test_true_flow_has_tiny_residual(self, grid, bs, cf):
        phi = band_limited(grid, 3.0, seed=43, scale=0.01)
        gd = make_gauge_data(phi, bs)
        dt = 5e-4
        stride = 4  # snapshot spacing 2e-3
        times, states = integrate_masked(phi, ALPHA, dt, 32, stride)
        tr = _Traj(times, states)
        for k in (0, 1, -1):
            worst = residual_check(tr, gd, bs, cf, k)
            assert worst < 1e-6, f"block {k}: residual {worst:.3e}"

    def test_broken_flow_is_detected(self, grid, bs, cf):
        # freeze the state: d/dt v_k = 0 but R_k != 0, so the defect is
        # the full dispersive term
        phi = band_limited(grid, 3.0, seed=44, scale=0.01)
        gd = make_gauge_data(phi, bs)
        times = [i * 2e-3 for i in range(9)]
        tr = _Traj(times, [phi] * 9)
        worst = residual_check(tr, gd, bs, cf, 1)
        assert worst > 1e-6
