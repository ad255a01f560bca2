"""Gauge renormalization of the dispersive equation into block components.

The solution is split as u = phi_low + v, where phi_low carries the
frequencies |xi| <= 1/2 of the initial datum and v the remainder.  Each
frequency block P_k(v) is then conjugated by a phase e^{-i a_k Psi} built
from the antiderivative Psi of phi_low, with the block coefficient

    a_k = -n_k |n_k|^(-alpha) / (alpha + 1),      a_0 = 0.

The conjugated components v_k satisfy transport-free equations

    d/dt v_k + D^alpha d/dx v_k = R_k(v)

whose right sides are implemented here in two algebraically equivalent
forms: a compact one used by the solver diagnostics, and a five-term split
that isolates the individual error mechanisms (quadratic interaction,
residual transport, phase curvature, projector commutator, lower order).

All quadratic products of dynamical fields are dealiased with the strict
2/3 rule so that they agree with exact truncated convolutions; the phase
factors themselves are applied pointwise on the grid without masking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blocks import BlockSystem, CutoffFamily, project
from .spectral import (
    SpatialGrid,
    SpectralField,
    dealias_mask,
    fractional_derivative,
    from_spectral,
    l2_norm,
    spatial_derivative,
    to_spectral,
)

LOW_CUT = 0.5


def split_low_high(phi: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Sharp frequency splitting of phi at |xi| <= 1/2.

    The grid must resolve the cut: frequency spacing above 1/8 leaves too
    few modes below the threshold for the low part to act as a smooth
    coefficient, so such grids are rejected.
    """
    g = phi.grid
    if g.freq_spacing > 0.125 + 1e-15:
        raise ValueError(
            "frequency spacing %.4f too coarse for the low/high split; "
            "need at most 1/8" % g.freq_spacing
        )
    low = (np.abs(g.frequencies) <= LOW_CUT).astype(np.float64)
    phi_low = SpectralField(g, phi.coeffs * low, is_real=phi.is_real)
    phi_high = SpectralField(g, phi.coeffs * (1.0 - low), is_real=phi.is_real)
    return phi_low, phi_high


def antiderivative_Psi(phi_low: SpectralField) -> SpectralField:
    """Periodic antiderivative of phi_low, normalized so Psi(0) = 0.

    Requires mean-zero input: a nonzero average has no periodic
    antiderivative.  Away from the zero mode the coefficients divide by
    (i xi); the zero mode is then chosen as minus the sum of the others,
    which pins the value at the grid point x = 0 exactly.
    """
    g = phi_low.grid
    c = phi_low.coeffs
    mean = abs(c[0])
    if mean > 1e-10 * max(l2_norm(phi_low), 1e-300):
        raise ValueError(
            "phi_low has nonzero mean %.3e; no periodic antiderivative" % mean
        )
    xi = g.frequencies
    psi = np.zeros_like(c)
    nz = xi != 0.0
    psi[nz] = c[nz] / (1j * xi[nz])
    # The zero coefficient is a free constant; choose it so the sample at the
    # grid point x = 0 vanishes identically.
    samples = from_spectral(SpectralField(g, psi, is_real=phi_low.is_real))
    i0 = int(np.argmin(np.abs(g.x)))
    if abs(g.x[i0]) > 1e-12:
        raise ValueError("grid does not contain x = 0")
    psi[0] -= samples[i0]
    return SpectralField(g, psi, is_real=phi_low.is_real)


def gauge_coefficient(bs: BlockSystem, k: int) -> float:
    """Phase speed coefficient a_k = -n_k |n_k|^(-alpha) / (alpha + 1)."""
    if k == 0:
        return 0.0
    n = bs.n_of(k)
    return float(-n * abs(n) ** (-bs.alpha) / (bs.alpha + 1.0))


@dataclass
class GaugeData:
    """Frozen per-datum gauge objects shared by the block equations."""

    grid: SpatialGrid
    phi_low: SpectralField
    phi_high: SpectralField
    psi: SpectralField
    alpha: float
    a: dict[int, float]
    eps0_budget: float = 0.01
    _psi_samples: np.ndarray | None = field(default=None, repr=False)
    _phase_cache: dict[tuple[int, int], np.ndarray] = field(
        default_factory=dict, repr=False
    )

    @property
    def psi_samples(self) -> np.ndarray:
        if self._psi_samples is None:
            object.__setattr__(self, "_psi_samples", from_spectral(self.psi))
        return self._psi_samples

    def phase(self, k: int, sign: int) -> np.ndarray:
        """Pointwise samples of e^{sign * i a_k Psi}."""
        key = (k, sign)
        got = self._phase_cache.get(key)
        if got is None:
            got = np.exp(1j * sign * self.a[k] * self.psi_samples)
            self._phase_cache[key] = got
        return got


def make_gauge_data(
    phi: SpectralField, bs: BlockSystem, eps0_budget: float = 0.01
) -> GaugeData:
    phi_low, phi_high = split_low_high(phi)
    psi = antiderivative_Psi(phi_low)
    coeffs = {k: gauge_coefficient(bs, k) for k in range(-bs.k_max, bs.k_max + 1)}
    return GaugeData(
        grid=phi.grid,
        phi_low=phi_low,
        phi_high=phi_high,
        psi=psi,
        alpha=bs.alpha,
        a=coeffs,
        eps0_budget=eps0_budget,
    )


@dataclass
class RenormalizedBlocks:
    """Gauge components v_k together with the un-gauged remainder v."""

    v: SpectralField
    v_k: dict[int, SpectralField]


def apply_phase(gd: GaugeData, k: int, sign: int, f: SpectralField) -> SpectralField:
    """Multiply f pointwise by e^{sign * i a_k Psi}; no dealiasing."""
    return to_spectral(gd.phase(k, sign) * from_spectral(f), f.grid)


def masked_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Pointwise product followed by the strict 2/3 dealias truncation."""
    grid = f.grid
    if g.grid != grid:
        raise ValueError("masked_product requires a common grid")
    out = to_spectral(from_spectral(f) * from_spectral(g), grid)
    return SpectralField(
        grid, out.coeffs * dealias_mask(grid), is_real=f.is_real and g.is_real
    )


def renormalize(
    u: SpectralField, gd: GaugeData, bs: BlockSystem, cf: CutoffFamily
) -> RenormalizedBlocks:
    """Decompose u into gauge components: v_k = e^{-i a_k Psi} P_k(u - phi_low)."""
    v = SpectralField(u.grid, u.coeffs - gd.phi_low.coeffs, is_real=u.is_real)
    comps: dict[int, SpectralField] = {}
    for k in range(-bs.k_max, bs.k_max + 1):
        pk = project(v, k, cf)
        comps[k] = apply_phase(gd, k, -1, pk)
    return RenormalizedBlocks(v=v, v_k=comps)


def reconstruct(rb: RenormalizedBlocks, gd: GaugeData) -> SpectralField:
    """Invert the decomposition: u = phi_low + sum_k e^{i a_k Psi} v_k."""
    acc = from_spectral(gd.phi_low).astype(np.complex128)
    for k, comp in rb.v_k.items():
        acc = acc + gd.phase(k, +1) * from_spectral(comp)
    return to_spectral(acc, gd.grid)


def _dx(f: SpectralField) -> SpectralField:
    return spatial_derivative(f, 1)


def _dalpha(f: SpectralField, alpha: float) -> SpectralField:
    return fractional_derivative(f, alpha)


def rhs_R0(
    v: SpectralField, gd: GaugeData, alpha: float, cf: CutoffFamily
) -> SpectralField:
    """Right side of the k = 0 block equation.

    R_0 = -P_0 dx(phi_low v) - P_0 dx(v^2/2)
          - D^alpha dx P_0(phi_low) - P_0 dx(phi_low^2/2).
    """
    pl = gd.phi_low
    t1 = project(_dx(masked_product(pl, v)), 0, cf)
    vv = masked_product(v, v)
    t2 = project(_dx(SpectralField(v.grid, 0.5 * vv.coeffs, is_real=vv.is_real)), 0, cf)
    t3 = _dx(_dalpha(project(pl, 0, cf), alpha))
    ll = masked_product(pl, pl)
    t4 = project(_dx(SpectralField(v.grid, 0.5 * ll.coeffs, is_real=ll.is_real)), 0, cf)
    coeffs = -(t1.coeffs + t2.coeffs + t3.coeffs + t4.coeffs)
    return SpectralField(v.grid, coeffs, is_real=False)


def rhs_Rk(
    k: int,
    rb: RenormalizedBlocks,
    gd: GaugeData,
    bs: BlockSystem,
    cf: CutoffFamily,
    alpha: float,
) -> SpectralField:
    """Right side of the block-k equation, compact form.

    R_k = -e^{-i a_k Psi} P_k dx(phi_low v + v^2/2)
          - [e^{-i a_k Psi} D^alpha dx(e^{i a_k Psi} v_k) - D^alpha dx v_k].

    For k = 0 the phase is trivial and this reduces to rhs_R0 up to the
    source terms carried by phi_low alone, which P_k annihilates for k != 0.
    """
    if k == 0:
        return rhs_R0(rb.v, gd, alpha, cf)
    v = rb.v
    vk = rb.v_k[k]
    quad = masked_product(gd.phi_low, v).coeffs + 0.5 * masked_product(v, v).coeffs
    first = apply_phase(
        gd, k, -1, _dx(project(SpectralField(v.grid, quad), k, cf))
    )
    conj = apply_phase(gd, k, -1, _dx(_dalpha(apply_phase(gd, k, +1, vk), alpha)))
    plain = _dx(_dalpha(vk, alpha))
    coeffs = -first.coeffs - (conj.coeffs - plain.coeffs)
    return SpectralField(v.grid, coeffs, is_real=False)


def rhs_Rk_split(
    k: int,
    rb: RenormalizedBlocks,
    gd: GaugeData,
    bs: BlockSystem,
    cf: CutoffFamily,
    alpha: float,
) -> tuple[SpectralField, ...]:
    """Five-term split of the block-k right side, k != 0.

    Terms, in order:
      1. quadratic self-interaction  -e^{-ia Psi} P_k dx(v^2/2)
      2. residual transport          -phi_low (dx v_k - i n_k |n_k|^-alpha D^alpha v_k)
      3. phase curvature             -(e^{-ia Psi} D^alpha dx(e^{ia Psi} v_k)
                                        - D^alpha dx v_k
                                        - (alpha+1) i a_k Psi' D^alpha v_k)
      4. projector commutator        -e^{-ia Psi} (P_k(phi_low dx v) - phi_low dx P_k v)
      5. lower order                 -(i a_k phi_low^2 v_k + e^{-ia Psi} P_k(v dx phi_low))

    Their sum agrees with rhs_Rk to roundoff for blocks whose support stays
    clear of the dealias cut; the split exists to expose each mechanism
    separately.
    """
    if k == 0:
        raise ValueError("the split form is defined for k != 0")
    v = rb.v
    vk = rb.v_k[k]
    g = v.grid
    pl = gd.phi_low
    a_k = gd.a[k]
    n_k = bs.n_of(k)
    slope = n_k * abs(n_k) ** (-alpha)

    vv = masked_product(v, v)
    term1 = apply_phase(
        gd, k, -1,
        _dx(project(SpectralField(g, 0.5 * vv.coeffs, is_real=vv.is_real), k, cf)),
    )
    term1 = SpectralField(g, -term1.coeffs, is_real=False)

    inner2 = SpectralField(
        g,
        _dx(vk).coeffs - 1j * slope * _dalpha(vk, alpha).coeffs,
        is_real=False,
    )
    term2 = masked_product(pl, inner2)
    term2 = SpectralField(g, -term2.coeffs, is_real=False)

    conj = apply_phase(gd, k, -1, _dx(_dalpha(apply_phase(gd, k, +1, vk), alpha)))
    plain = _dx(_dalpha(vk, alpha))
    curv = masked_product(pl, _dalpha(vk, alpha))
    term3 = SpectralField(
        g,
        -(conj.coeffs - plain.coeffs - (alpha + 1.0) * 1j * a_k * curv.coeffs),
        is_real=False,
    )

    comm = project(masked_product(pl, _dx(v)), k, cf).coeffs - masked_product(
        pl, _dx(project(v, k, cf))
    ).coeffs
    term4 = apply_phase(gd, k, -1, SpectralField(g, comm, is_real=False))
    term4 = SpectralField(g, -term4.coeffs, is_real=False)

    ll = masked_product(pl, pl)
    low1 = masked_product(SpectralField(g, ll.coeffs, is_real=ll.is_real), vk)
    low2 = apply_phase(gd, k, -1, project(masked_product(v, _dx(pl)), k, cf))
    term5 = SpectralField(
        g, -(1j * a_k * low1.coeffs + low2.coeffs), is_real=False
    )

    return (term1, term2, term3, term4, term5)


def _edge_safe(bs: BlockSystem, cf: CutoffFamily, grid: SpatialGrid, k: int) -> bool:
    """Whether block k's support sits well inside the dealias-kept band.

    Products with phi_low widen spectra by at most 1/2 plus the (rapidly
    decaying) phase tail; one unit of margin keeps the truncation inert.
    """
    lo, hi = bs.chi_support(k)
    cut = (2.0 / 3.0) * grid.max_frequency
    return max(abs(lo), abs(hi)) + 1.0 < cut


def residual_check(
    trajectory,
    gd: GaugeData,
    bs: BlockSystem,
    cf: CutoffFamily,
    k: int,
    max_eval_points: int = 7,
) -> float:
    """Largest L2 defect of d/dt v_k + D^alpha dx v_k = R_k along a trajectory.

    The time derivative uses the five-point fourth-order central stencil on
    stored snapshots, so at least five are required.  Blocks whose support
    crosses the dealias margin are rejected: there the stored nonlinear flow
    and the block equation genuinely differ by truncated tails.
    """
    times = np.asarray(trajectory.times, dtype=np.float64)
    states = trajectory.states
    if len(times) < 5:
        raise ValueError("residual check needs at least 5 snapshots")
    dt = np.diff(times)
    if np.max(np.abs(dt - dt[0])) > 1e-9 * max(abs(dt[0]), 1e-300):
        raise ValueError("snapshots must be uniformly spaced in time")
    if not _edge_safe(bs, cf, gd.grid, k):
        raise ValueError(
            "block %d overlaps the dealias margin; residual undefined there" % k
        )
    h = float(dt[0])
    alpha = gd.alpha

    def component(i: int) -> SpectralField:
        u = states[i]
        vloc = SpectralField(u.grid, u.coeffs - gd.phi_low.coeffs, is_real=u.is_real)
        return apply_phase(gd, k, -1, project(vloc, k, cf))

    interior = list(range(2, len(times) - 2))
    if len(interior) > max_eval_points:
        idx = np.linspace(0, len(interior) - 1, max_eval_points).round().astype(int)
        interior = [interior[i] for i in sorted(set(idx.tolist()))]

    worst = 0.0
    for i in interior:
        vm2, vm1, vp1, vp2 = (component(i + s) for s in (-2, -1, 1, 2))
        dvdt = (
            -vp2.coeffs + 8.0 * vp1.coeffs - 8.0 * vm1.coeffs + vm2.coeffs
        ) / (12.0 * h)
        u = states[i]
        vloc = SpectralField(u.grid, u.coeffs - gd.phi_low.coeffs, is_real=u.is_real)
        vk = component(i)
        rb = RenormalizedBlocks(v=vloc, v_k={k: vk})
        rk = rhs_Rk(k, rb, gd, bs, cf, alpha)
        defect = dvdt + _dx(_dalpha(vk, alpha)).coeffs - rk.coeffs
        worst = max(worst, l2_norm(SpectralField(u.grid, defect, is_real=False)))
    return worst
