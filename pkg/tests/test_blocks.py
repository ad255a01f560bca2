"""Block lattice, cutoff partition, projections, cells, and the gap infimum."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dgbo.blocks import (
    CoverageError,
    CutoffFamily,
    FrequencyCell,
    blocks_for_grid,
    build_block_system,
    cell_measure,
    chi_eval,
    d_alpha,
    interval_I,
    project,
    smooth_step,
    u_cell,
)
from dgbo.spectral import SpatialGrid, SpectralField, to_spectral


@pytest.fixture(scope="module")
def bs():
    return build_block_system(1.5, 20)


@pytest.fixture(scope="module")
def cf(bs):
    return CutoffFamily(bs)


class TestBlockSystem:
    def test_validation(self):
        with pytest.raises(ValueError):
            build_block_system(1.5, 1)
        with pytest.raises(ValueError):
            build_block_system(2.5, 10)
        with pytest.raises(ValueError):
            build_block_system(1.0, 10)

    def test_sequence_values(self, bs):
        assert bs.n_of(0) == 0.0
        assert bs.n_of(1) == 4.0
        assert bs.n_of(2) == 6.0
        assert abs(bs.n_of(3) - (6 + math.sqrt(6))) < 1e-12
        assert bs.n_of(-2) == -6.0

    def test_monotone_and_antisymmetric(self, bs):
        ks = range(-bs.k_max - 1, bs.k_max + 2)
        vals = [bs.n_of(k) for k in ks]
        assert all(a < b for a, b in zip(vals, vals[1:]))
        for k in range(bs.k_max + 2):
            assert bs.n_of(-k) == -bs.n_of(k)

    def test_growth_band(self, bs):
        # n_k ~ k^2/4 asymptotically; the stated band holds from k = 3 on
        # (n_2/4 = 1.5 sits above it; recorded deviation).
        assert bs.n_of(2) / 4 == 1.5
        for k in range(3, bs.k_max + 1):
            ratio = bs.n_of(k) / k**2
            assert 0.2 <= ratio <= 1.1, (k, ratio)

    def test_interval_I_values(self, bs):
        a, b = interval_I(bs, 1)
        assert abs(a - 2.0 / 3.0) < 1e-12
        assert abs(b - 17.0 / 3.0) < 1e-12
        a2, b2 = interval_I(bs, 2)
        assert abs(a2 - 26.0 / 6.0) < 1e-12
        assert abs(b2 - (5 * (6 + math.sqrt(6)) + 6) / 6.0) < 1e-12

    def test_intervals_tile(self, bs):
        # consecutive I_k overlap, so their union is an interval
        for k in range(-5, 5):
            a1, b1 = interval_I(bs, k)
            a2, b2 = interval_I(bs, k + 1)
            assert a2 < b1 and a1 < a2 and b1 < b2

    def test_range_errors(self, bs):
        with pytest.raises(IndexError):
            interval_I(bs, bs.k_max + 1)
        with pytest.raises(IndexError):
            bs.chi_support(-(bs.k_max + 1) - 1)


class TestCutoffs:
    def test_smooth_step_endpoints(self):
        assert smooth_step(-1.0) == 0.0
        assert smooth_step(0.0) == 0.0
        assert smooth_step(1.0) == 1.0
        assert smooth_step(2.0) == 1.0
        s = smooth_step(np.array([0.5]))
        assert abs(s[0] - 0.5) < 1e-15  # symmetric construction

    def test_chi1_support(self, cf):
        # supp chi_1 = [4/3, 16/3]
        assert chi_eval(cf, 1, 4.0 / 3.0 - 1e-9) == 0.0
        assert chi_eval(cf, 1, 16.0 / 3.0 + 1e-9) == 0.0
        assert chi_eval(cf, 1, 4.0) == 1.0  # plateau contains n_1

    def test_support_inside_mandated_interval(self, cf, bs):
        for k in (-4, -1, 0, 1, 2, 7):
            a, b = bs.chi_support(k)
            xi = np.linspace(a - 2.0, b + 2.0, 4001)
            vals = cf.chi(k, xi)
            outside = (xi < a - 1e-12) | (xi > b + 1e-12)
            assert np.max(np.abs(vals[outside]), initial=0.0) == 0.0
            assert vals.min() >= 0.0 and vals.max() <= 1.0

    def test_partition_of_unity(self, cf, bs):
        lo, hi = bs.coverage()
        xi = np.linspace(lo, hi, 20001)
        total = np.zeros_like(xi)
        for k in range(-bs.k_max, bs.k_max + 1):
            total += cf.chi(k, xi)
        assert np.max(np.abs(total - 1.0)) <= 1e-12

    def test_partition_at_sample_point(self, cf, bs):
        total = sum(float(cf.chi(k, 5.0)[0]) for k in range(-3, 4))
        assert abs(total - 1.0) <= 1e-13

    def test_chi_inside_I_with_margin(self, cf, bs):
        for k in (1, 2, 5, -3):
            sa, sb = bs.chi_support(k)
            ia, ib = bs.interval_I(k)
            assert ia < sa and sb < ib

    def test_derivative_bound_constant(self, cf):
        c1 = cf.derivative_bound_constant(1)
        c2 = cf.derivative_bound_constant(2)
        assert np.isfinite(c1) and c1 > 0
        assert np.isfinite(c2) and c2 > 0

    def test_derivative_bound_stable_across_k(self, bs):
        # Per-block constants stay within +-20% of their median for sigma=1,
        # from k = 3 on. The k=1,2 transition-zone widths are pinned by the
        # mandated support endpoints ((n_2 - n_1)/3 = 2/3 is not yet in the
        # sqrt(n)/3 regime), so those blocks sit above the asymptotic band.
        cf = CutoffFamily(bs)
        consts = []
        for k in range(3, bs.k_max + 1):
            a, b = bs.chi_support(k)
            xi = np.linspace(a - 1.0, b + 1.0, 8000)
            d = np.gradient(cf.chi(k, xi), xi[1] - xi[0])
            consts.append(np.max(np.abs(d)) * (1 + bs.n_of(k)) ** 0.5)
        consts = np.array(consts)
        med = np.median(consts)
        assert np.all(consts >= 0.8 * med) and np.all(consts <= 1.2 * med)


class TestProjection:
    def grid_field(self):
        g = SpatialGrid(256, 64.0)
        rng = np.random.default_rng(11)
        c = rng.standard_normal(256) * np.exp(-np.abs(g.modes) / 20.0)
        return g, SpectralField(g, c)

    def test_partition_reconstruction(self):
        g, f = self.grid_field()
        bs = blocks_for_grid(1.5, g)
        cf = CutoffFamily(bs)
        total = np.zeros_like(f.coeffs)
        for k in range(-bs.k_max, bs.k_max + 1):
            total += project(f, k, cf).coeffs
        assert np.max(np.abs(total - f.coeffs)) <= 1e-12 * np.max(np.abs(f.coeffs))

    def test_sharp_absorbs_smooth(self):
        g, f = self.grid_field()
        bs = blocks_for_grid(1.5, g)
        cf = CutoffFamily(bs)
        for k in (0, 1, -2, 5):
            pk = project(f, k, cf)
            again = project(pk, k, cf, sharp=True)
            assert np.max(np.abs(again.coeffs - pk.coeffs)) < 1e-14

    def test_single_mode_scaling(self):
        g = SpatialGrid(256, 64.0)
        bs = blocks_for_grid(1.5, g)
        cf = CutoffFamily(bs)
        # place a mode at xi approximately 2.0 inside supp chi_1
        m = int(round(2.0 / g.freq_spacing))
        c = np.zeros(256, dtype=complex)
        c[m] = 1.0
        out = project(SpectralField(g, c), 1, cf)
        w = float(cf.chi(1, g.frequencies[m])[0])
        assert 0.0 < w <= 1.0
        assert abs(out.coeffs[m] - w) < 1e-14

    def test_coverage_error(self):
        g = SpatialGrid(256, 16.0)  # frequencies up to ~50
        c = np.zeros(256, dtype=complex)
        c[100] = 1.0  # xi ~ 39
        f = SpectralField(g, c)
        bs = build_block_system(1.5, 8)  # covers only |xi| <~ 30
        cf = CutoffFamily(bs)
        with pytest.raises(CoverageError):
            project(f, 1, cf)


class TestCells:
    def test_measures(self, bs):
        assert abs(cell_measure(bs, 0) - 12.0) < 1e-12
        assert abs(cell_measure(bs, 1) - 10.0) < 1e-12
        assert abs(cell_measure(bs, -2) - 3.0) < 1e-12

    def test_membership(self, bs):
        u0 = u_cell(bs, 0)
        assert u0.contains(3.0)[0] and u0.contains(-7.9)[0]
        assert not u0.contains(1.0)[0] and not u0.contains(9.0)[0]
        u1 = u_cell(bs, 1)
        assert u1.contains(1.0)[0]  # 1.0 in [2/3, 17/3]
        assert not u1.contains(0.5)[0]

    def test_cell_matches_interval(self, bs):
        a, b = interval_I(bs, 3)
        u3 = u_cell(bs, 3)
        assert u3.contains(0.5 * (a + b))[0]
        assert u3.contains(-0.5 * (a + b))[0]
        assert not u3.contains(b + 0.1)[0]


class TestDAlpha:
    def test_symmetric_diagonal_zero(self, bs):
        # xi1 = xi2 in U_1 with xi1+xi2 in U_2 is feasible -> infimum 0
        val = d_alpha(bs, 1, 1, 2)
        assert val < 1e-8

    def test_infeasible_sentinel(self, bs):
        # U_1 + U_1 sums lie within [-34/3, 34/3]; I_5 starts around 11.9
        val = d_alpha(bs, 1, 1, 5)
        assert val == math.inf

    def test_symmetry(self, bs):
        a = d_alpha(bs, 2, -1, 3)
        b = d_alpha(bs, -1, 2, 3)
        assert abs(a - b) <= 1e-9 * (1 + abs(a))

    def test_brute_force_oracle(self, bs):
        # dense independent sweep: exact-in-xi2 reduction on a fine xi1 grid
        val = d_alpha(bs, 3, 0, 4)
        alpha = bs.alpha
        cells = [u_cell(bs, k) for k in (3, 0, 4)]
        best = math.inf
        for a1, b1 in cells[0].intervals:
            for a2, b2 in cells[1].intervals:
                for a3, b3 in cells[2].intervals:
                    xi1 = np.linspace(a1, b1, 20001)
                    lo = np.maximum(a2, a3 - xi1)
                    hi = np.minimum(b2, b3 - xi1)
                    ok = lo <= hi
                    if not ok.any():
                        continue
                    x1, l, h = xi1[ok], lo[ok], hi[ok]
                    p1 = np.abs(x1) ** alpha
                    cand = np.minimum(
                        np.abs(np.abs(l) ** alpha - p1), np.abs(np.abs(h) ** alpha - p1)
                    )
                    hit = ((l <= x1) & (x1 <= h)) | ((l <= -x1) & (-x1 <= h))
                    cand = np.where(hit, 0.0, cand)
                    best = min(best, float(cand.min()))
        assert math.isfinite(val)
        assert abs(val - best) <= 1e-3 * max(best, 1e-6)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10**6))
    def test_infimum_property(self, seed):
        bs = build_block_system(1.5, 20)
        rng = np.random.default_rng(seed)
        k1, k2, k3 = 2, 1, 3
        val = d_alpha(bs, k1, k2, k3)
        cells = [u_cell(bs, k) for k in (k1, k2, k3)]
        # rejection-sample feasible points
        found = 0
        for _ in range(4000):
            (a1, b1) = cells[0].intervals[rng.integers(len(cells[0].intervals))]
            (a2, b2) = cells[1].intervals[rng.integers(len(cells[1].intervals))]
            x1 = rng.uniform(a1, b1)
            x2 = rng.uniform(a2, b2)
            if cells[2].contains(x1 + x2)[0]:
                sample = abs(abs(x1) ** 1.5 - abs(x2) ** 1.5)
                assert val <= sample + 1e-8 * (1 + sample)
                found += 1
                if found > 50:
                    break
        assert found > 0


class TestBlocksForGrid:
    def test_covers(self):
        g = SpatialGrid(2048, 256.0)
        bs = blocks_for_grid(1.5, g)
        assert bs.coverage()[1] >= g.max_frequency
        assert bs.coverage()[0] <= -g.max_frequency
