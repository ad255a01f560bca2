"""Frequency blocks, smooth cutoff partition, projections, and cell geometry.

The frequency axis is tiled by blocks centered at n_k where

    n_0 = 0, n_1 = 4, n_{k+1} = n_k + sqrt(n_k)  (k >= 1), n_{-k} = -n_k,

so block widths grow like sqrt(|n_k|) and |n_k| is comparable to k^2. Each
block carries a smooth cutoff chi_k supported in

    [(2 n_{k-1} + n_k)/3, (2 n_{k+1} + n_k)/3]

with Sum_k chi_k = 1 on the covered range, and a slightly larger sharp
interval I_k = [(5 n_{k-1} + n_k)/6, (5 n_{k+1} + n_k)/6] whose margin over
supp chi_k is what lets a gauge phase shift a block without escaping it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import SpatialGrid, SpectralField, SpaceTimeSpectral

__all__ = [
    "BlockSystem",
    "CutoffFamily",
    "FrequencyCell",
    "build_block_system",
    "interval_I",
    "chi_eval",
    "project",
    "u_cell",
    "cell_measure",
    "d_alpha",
    "smooth_step",
    "blocks_for_grid",
    "CoverageError",
]


class CoverageError(ValueError):
    """A field has active frequencies outside the block system's range."""


def smooth_step(y):
    """C-infinity step: 0 for y<=0, 1 for y>=1, strictly rising between.

    s(y) = sig(y)/(sig(y)+sig(1-y)) with sig(y)=exp(-1/y); s(y)+s(1-y)=1.
    """
    y = np.asarray(y, dtype=np.float64)
    out = np.zeros_like(y)
    out[y >= 1.0] = 1.0
    mid = (y > 0.0) & (y < 1.0)
    ym = y[mid]
    with np.errstate(divide="ignore", over="ignore"):
        a = np.exp(-1.0 / ym)
        b = np.exp(-1.0 / (1.0 - ym))
    out[mid] = a / (a + b)
    return out


@dataclass
class BlockSystem:
    alpha: float
    k_max: int
    # n[j + k_max + 1] = n_j for j in [-k_max-1, k_max+1]; one spare index on
    # each side so supports/intervals exist for |k| = k_max.
    n_seq: np.ndarray

    def n_of(self, k: int) -> float:
        if abs(k) > self.k_max + 1:
            raise IndexError(f"block index {k} outside extended range")
        return float(self.n_seq[k + self.k_max + 1])

    def in_range(self, k: int) -> bool:
        return abs(k) <= self.k_max

    def chi_support(self, k: int) -> tuple[float, float]:
        if not self.in_range(k):
            raise IndexError(f"block index {k} outside [-{self.k_max}, {self.k_max}]")
        nkm, nk, nkp = self.n_of(k - 1), self.n_of(k), self.n_of(k + 1)
        return ((2.0 * nkm + nk) / 3.0, (2.0 * nkp + nk) / 3.0)

    def interval_I(self, k: int) -> tuple[float, float]:
        if not self.in_range(k):
            raise IndexError(f"block index {k} outside [-{self.k_max}, {self.k_max}]")
        nkm, nk, nkp = self.n_of(k - 1), self.n_of(k), self.n_of(k + 1)
        return ((5.0 * nkm + nk) / 6.0, (5.0 * nkp + nk) / 6.0)

    def coverage(self) -> tuple[float, float]:
        """Frequency interval where Sum_k chi_k = 1 exactly."""
        K = self.k_max
        lo = (2.0 * self.n_of(-K) + self.n_of(-K - 1)) / 3.0
        hi = (2.0 * self.n_of(K) + self.n_of(K + 1)) / 3.0
        return (lo, hi)

    def block_of_frequency(self, xi: float) -> int:
        """Index k with xi in the plateau-or-transition region nearest n_k."""
        K = self.k_max
        for k in range(-K, K + 1):
            a, b = self.interval_I(k)
            if a <= xi <= b:
                return k
        raise CoverageError(f"frequency {xi} outside covered range {self.coverage()}")


def build_block_system(alpha: float, K: int) -> BlockSystem:
    if K < 2:
        raise ValueError(f"K must be at least 2, got {K}")
    if not (1.0 < alpha < 2.0):
        raise ValueError(f"alpha must lie in (1, 2), got {alpha}")
    pos = np.zeros(K + 2)
    pos[1] = 4.0
    for k in range(1, K + 1):
        pos[k + 1] = pos[k] + math.sqrt(pos[k])
    n_seq = np.concatenate([-pos[:0:-1], pos])
    return BlockSystem(alpha=alpha, k_max=K, n_seq=n_seq)


def blocks_for_grid(alpha: float, grid: SpatialGrid, margin: float = 1.0) -> BlockSystem:
    """Smallest block system whose coverage contains the grid's frequencies."""
    target = grid.max_frequency * margin
    K = 2
    bs = build_block_system(alpha, K)
    while bs.coverage()[1] < target:
        K += 4
        bs = build_block_system(alpha, K)
    return bs


def interval_I(bs: BlockSystem, k: int) -> tuple[float, float]:
    return bs.interval_I(k)


@dataclass
class CutoffFamily:
    """Smooth partition of unity subordinate to the block supports.

    chi_k = S_k - S_{k-1} where S_j falls 1 -> 0 across the transition zone
    Z_j = [(2 n_j + n_{j+1})/3, (2 n_{j+1} + n_j)/3]  (the overlap of the
    mandated supports of chi_j and chi_{j+1}).  Telescoping makes the
    partition exact, and zone widths ~ sqrt(n)/3 give the (1+|n_k|)^{-s/2}
    derivative decay.
    """

    bs: BlockSystem

    def _falling(self, j: int, xi: np.ndarray) -> np.ndarray:
        nj, njp = self.bs.n_of(j), self.bs.n_of(j + 1)
        z0 = (2.0 * nj + njp) / 3.0
        z1 = (2.0 * njp + nj) / 3.0
        return 1.0 - smooth_step((xi - z0) / (z1 - z0))

    def chi(self, k: int, xi) -> np.ndarray:
        if not self.bs.in_range(k):
            raise IndexError(f"block index {k} outside [-{self.bs.k_max}, {self.bs.k_max}]")
        xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
        return self._falling(k, xi) - self._falling(k - 1, xi)

    def derivative_bound_constant(self, sigma: int, points_per_block: int = 4000) -> float:
        """sup_k sup_xi |chi_k^(sigma)(xi)| * (1+|n_k|)^{sigma/2}, by central differences."""
        worst = 0.0
        for k in range(-self.bs.k_max, self.bs.k_max + 1):
            a, b = self.bs.chi_support(k)
            pad = 0.05 * (b - a)
            xi = np.linspace(a - pad, b + pad, points_per_block)
            h = xi[1] - xi[0]
            vals = self.chi(k, xi)
            d = vals
            for _ in range(sigma):
                d = np.gradient(d, h)
            c = np.max(np.abs(d)) * (1.0 + abs(self.bs.n_of(k))) ** (sigma / 2.0)
            worst = max(worst, float(c))
        return worst


def chi_eval(cf: CutoffFamily, k: int, xi):
    out = cf.chi(k, xi)
    if out.size == 1:
        return float(out[0])
    return out


def _active_out_of_coverage(frequencies: np.ndarray, amps: np.ndarray, bs: BlockSystem):
    lo, hi = bs.coverage()
    tol = 1e-13 * max(float(amps.max(initial=0.0)), 1e-300)
    bad = (amps > tol) & ((frequencies < lo) | (frequencies > hi))
    return frequencies[bad]


def project(f, k: int, cf: CutoffFamily, sharp: bool = False):
    """P_k (smooth cutoff) or the sharp companion on I_k.

    Works on SpectralField and on SpaceTimeSpectral (mask along the spatial
    frequency axis). Raises CoverageError if the field has active modes the
    block system cannot see.
    """
    bs = cf.bs
    if isinstance(f, SpectralField):
        freqs = f.grid.frequencies
        amps = np.abs(f.coeffs)
        offenders = _active_out_of_coverage(freqs, amps, bs)
        if offenders.size:
            raise CoverageError(
                f"{offenders.size} active modes outside coverage "
                f"{bs.coverage()}; first few: {np.sort(offenders)[:5]}"
            )
        if sharp:
            a, b = bs.interval_I(k)
            mask = ((freqs >= a) & (freqs <= b)).astype(np.float64)
        else:
            mask = cf.chi(k, freqs)
        return SpectralField(f.grid, f.coeffs * mask, is_real=False)
    if isinstance(f, SpaceTimeSpectral):
        freqs = f.grid.spatial.frequencies
        amps = np.abs(f.coeffs).max(axis=1)
        offenders = _active_out_of_coverage(freqs, amps, bs)
        if offenders.size:
            raise CoverageError(
                f"{offenders.size} active spatial modes outside coverage "
                f"{bs.coverage()}; first few: {np.sort(offenders)[:5]}"
            )
        if sharp:
            a, b = bs.interval_I(k)
            mask = ((freqs >= a) & (freqs <= b)).astype(np.float64)
        else:
            mask = cf.chi(k, freqs)
        return SpaceTimeSpectral(f.grid, f.coeffs * mask[:, None], is_real=False)
    raise TypeError(f"cannot project object of type {type(f).__name__}")


# ---------------------------------------------------------------------------
# frequency cells U_k and the symbol-separation infimum


@dataclass
class FrequencyCell:
    """U_k: I_k together with its mirror (k>=1), or a dyadic annulus (k<=0)."""

    k: int
    intervals: tuple[tuple[float, float], ...]

    def contains(self, nu) -> np.ndarray:
        nu = np.atleast_1d(np.asarray(nu, dtype=np.float64))
        out = np.zeros(nu.shape, dtype=bool)
        for a, b in self.intervals:
            out |= (nu >= a) & (nu <= b)
        return out

    @property
    def measure(self) -> float:
        return float(sum(b - a for a, b in self.intervals))


def u_cell(bs: BlockSystem, k: int) -> FrequencyCell:
    if k >= 1:
        a, b = bs.interval_I(k)
        return FrequencyCell(k, ((-b, -a), (a, b)))
    lo, hi = 2.0 ** (k + 1), 2.0 ** (k + 3)
    return FrequencyCell(k, ((-hi, -lo), (lo, hi)))


def cell_measure(bs: BlockSystem, k: int) -> float:
    return u_cell(bs, k).measure


def _min_abs_power_gap(xi1, lo, hi, alpha):
    """min over xi2 in [lo,hi] of | |xi1|^a - |xi2|^a |, exactly (per xi1).

    The integrand depends on |xi2| monotonically away from |xi2|=|xi1|, so
    the minimum sits at an endpoint or at a point with |xi2| = |xi1|.
    """
    p1 = np.abs(xi1) ** alpha
    best = np.minimum(np.abs(np.abs(lo) ** alpha - p1), np.abs(np.abs(hi) ** alpha - p1))
    hit = ((lo <= xi1) & (xi1 <= hi)) | ((lo <= -xi1) & (-xi1 <= hi))
    return np.where(hit, 0.0, best)


def d_alpha(
    bs: BlockSystem,
    k1: int,
    k2: int,
    k3: int,
    alpha: float | None = None,
    n_grid: int = 2001,
    refine_rounds: int = 3,
) -> float:
    """inf | |xi1|^alpha - |xi2|^alpha | over xi1 in U_{k1}, xi2 in U_{k2},
    xi1+xi2 in U_{k3}; +inf when the constraint set is empty.

    Grid search over xi1 (the xi2 minimization is exact per xi1), then local
    refinement around the best xi1.
    """
    if alpha is None:
        alpha = bs.alpha
    cells = [u_cell(bs, k) for k in (k1, k2, k3)]
    best = math.inf

    def sweep(a1, b1, A2, C, npts):
        xi1 = np.linspace(a1, b1, npts)
        lo = np.maximum(A2[0], C[0] - xi1)
        hi = np.minimum(A2[1], C[1] - xi1)
        ok = lo <= hi
        if not ok.any():
            return math.inf, None
        vals = np.full(xi1.shape, math.inf)
        vals[ok] = _min_abs_power_gap(xi1[ok], lo[ok], hi[ok], alpha)
        i = int(np.argmin(vals))
        return float(vals[i]), float(xi1[i])

    for A1 in cells[0].intervals:
        for A2 in cells[1].intervals:
            for C in cells[2].intervals:
                if A1[0] + A2[0] > C[1] or A1[1] + A2[1] < C[0]:
                    continue
                val, x_star = sweep(A1[0], A1[1], A2, C, n_grid)
                if x_star is not None:
                    h = (A1[1] - A1[0]) / (n_grid - 1)
                    for _ in range(refine_rounds):
                        a = max(A1[0], x_star - h)
                        b = min(A1[1], x_star + h)
                        v2, x2 = sweep(a, b, A2, C, 201)
                        if x2 is None:
                            break
                        if v2 < val:
                            val, x_star = v2, x2
                        h /= 100.0
                best = min(best, val)
    return best
