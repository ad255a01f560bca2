"""Weighted space-time norms measuring distance from the dispersive surface.

The norm system lives on 2D spectral tables f(xi, tau). Everything is
organized around the modulation variable mu = tau - omega(xi):

* high blocks |k| >= 1 carry Z_k, a sum over dyadic modulation shells
  eta_j weighted by 2^{j/2} beta_{k,j} with
  beta_{k,j} = 1 + (2^j / |n_k|^{alpha+1})^{1/2-delta},
* the low block carries X_0^rho (dyadic in both xi and modulation),
  Y_0 (an L^1_x L^2_t mixed norm per modulation shell), and
  Z_0 = X_0 + Y_0 realized as a minimum over a fixed finite family of
  low/high splittings (an upper bound for the true infimum),
* H~sigma weights block L^2 norms of a spatial profile, with a B_0
  infimum norm at the low block,
* F^sigma / N^sigma assemble block pieces of a space-time function,
  N^sigma carrying the extra resolvent weight (mu + i)^{-1}.

Discrete conventions: norms act on continuum-FT values (L*T*coeffs)
with cell measure dxi*dmu, so ||f||_{L^2_{xi,tau}} = 2*pi*||u||_{L^2_{x,t}}
matches the Plancherel constant of the whole-line transform. The exact
per-column twist of modulation_transform makes eta_j(tau - omega(xi))
act diagonally on the lattice.

delta = (alpha - 1)/100 throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .blocks import BlockSystem, CutoffFamily, project, smooth_step
from .reporting import EstimateReport, loglog_slope, ratio_stats
from .spectral import (
    SpaceTimeGrid,
    SpaceTimeSpectral,
    SpatialGrid,
    SpectralField,
    dispersion_symbol,
    from_spectral,
    modulation_to_coeffs,
    modulation_transform,
    spacetime_from_spectral,
    spacetime_to_spectral,
    to_spectral,
)

__all__ = [
    "SupportError",
    "WindowSystem",
    "WeightTable",
    "NormBundle",
    "SplitResult",
    "ModulationAtom",
    "z_norm",
    "x0_norm",
    "y0_norm",
    "z0_norm",
    "b0_norm",
    "htilde_norm",
    "f_sigma_norm",
    "n_sigma_norm",
    "resolvent_weight",
    "atomic_decompose",
    "collect_bundle",
    "free_evolution_field",
    "duhamel_integral",
    "linear_estimate_check",
]


class SupportError(ValueError):
    """A field carries significant mass outside the set a norm requires."""

    def __init__(self, message: str, cells=None):
        super().__init__(message)
        self.cells = cells or []


# ---------------------------------------------------------------------------
# windows and weights


class WindowSystem:
    """Dyadic partition windows on the modulation and frequency axes.

    eta0 is even, identically 1 on [-5/4, 5/4], supported in [-8/5, 8/5],
    built from the same canonical smooth step as the block cutoffs.
    eta_j (j >= 1) and eta_tilde_k are the telescoped dyadic differences;
    eta0 + sum_{j>=1} eta_j telescopes to eta0(nu / 2^J) so the partition
    is exact on any bounded sampled range once J is large enough.
    """

    PLATEAU = 1.25
    EDGE = 1.6

    def eta0(self, nu) -> np.ndarray:
        nu = np.asarray(nu, dtype=np.float64)
        y = (np.abs(nu) - self.PLATEAU) / (self.EDGE - self.PLATEAU)
        return 1.0 - smooth_step(y)

    def eta_j(self, j: int, nu) -> np.ndarray:
        if j < 0:
            raise ValueError(f"modulation index must be nonnegative, got {j}")
        nu = np.asarray(nu, dtype=np.float64)
        if j == 0:
            return self.eta0(nu)
        return self.eta0(nu / 2.0**j) - self.eta0(nu / 2.0 ** (j - 1))

    def eta_tilde(self, kp: int, nu) -> np.ndarray:
        """Frequency-side dyadic window, defined for every integer kp.

        Vanishes at nu = 0: the zero mode is invisible to every
        eta_tilde-based norm and must be routed to an L^1-type piece.
        """
        nu = np.asarray(nu, dtype=np.float64)
        return self.eta0(nu / 2.0**kp) - self.eta0(nu / 2.0 ** (kp - 1))

    def j_annulus(self, j: int) -> tuple[float, float]:
        """|nu| range containing supp eta_j (the annulus J_j)."""
        if j == 0:
            return (0.0, 2.0)
        return (2.0 ** (j - 1), 2.0 ** (j + 1))

    def tilde_annulus(self, kp: int) -> tuple[float, float]:
        return (2.0 ** (kp - 1), 2.0 ** (kp + 1))

    def j_max_for(self, mu_extent: float) -> int:
        """Largest shell index with support inside |mu| <= mu_extent."""
        if mu_extent <= 2.0:
            return 0
        return int(math.floor(math.log2(mu_extent))) + 1


@dataclass
class WeightTable:
    """beta_{k,j} weights tied to a block system; delta = (alpha-1)/100."""

    bs: BlockSystem

    def __post_init__(self):
        self.alpha = self.bs.alpha
        self.delta = (self.alpha - 1.0) / 100.0

    def beta(self, k: int, j: int) -> float:
        if k == 0:
            raise ValueError("beta is defined for high blocks only (k != 0)")
        # |n_k| >= 4 for every |k| >= 1, so |n_k|^(alpha+1) > 1 always and
        # the small-block degeneracy remarked on in the estimates never
        # arises for these block systems.
        n = abs(self.bs.n_of(k))
        return 1.0 + (2.0**j / n ** (self.alpha + 1.0)) ** (0.5 - self.delta)


@dataclass
class NormBundle:
    """Computed norm values plus the per-term contributions behind them."""

    entries: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def value(self, space: str) -> float:
        return self.entries[space]


@dataclass
class SplitResult:
    """Outcome of a finite-candidate infimum norm (Z_0 or B_0).

    value is a certified upper bound for the true infimum; theta is the
    frequency threshold of the minimizing splitting (math.inf when the
    whole field went to the first side, 0.0 for the second).
    """

    value: float
    theta: float
    candidates: list

    def __float__(self):
        return self.value


# ---------------------------------------------------------------------------
# shared plumbing


def _ft_cell(f: SpaceTimeSpectral) -> float:
    """Quadrature weight dxi * dmu for one lattice cell of FT values."""
    g = f.grid
    return g.spatial.freq_spacing * g.tau_spacing


def _check_interval_support(f: SpaceTimeSpectral, lo: float, hi: float, what: str):
    """Require all active spatial columns to sit in [lo, hi]."""
    freqs = f.grid.spatial.frequencies
    amps = np.abs(f.coeffs)
    tol = 1e-13 * max(float(amps.max(initial=0.0)), 1e-300)
    bad_cols = np.where((amps.max(axis=1) > tol) & ((freqs < lo) | (freqs > hi)))[0]
    if bad_cols.size:
        cells = []
        for m in bad_cols[:5]:
            l = int(np.argmax(amps[m]))
            cells.append((float(freqs[m]), float(f.grid.tau[l])))
        raise SupportError(
            f"{bad_cols.size} active columns outside {what} = [{lo:.6g}, {hi:.6g}]; "
            f"worst (xi, tau) cells: {cells}",
            cells=cells,
        )


def _check_dc_free(f: SpaceTimeSpectral, what: str):
    """The eta_tilde windows all vanish at xi = 0, so a zero-mode column
    would silently drop out of any X_0-type sum. Refuse it instead."""
    dc = float(np.sqrt(np.sum(np.abs(f.coeffs[0, :]) ** 2)))
    tot = float(np.sqrt(np.sum(np.abs(f.coeffs) ** 2)))
    if dc > 1e-13 * max(tot, 1e-300):
        raise SupportError(
            f"{what} cannot see the zero mode (the frequency windows vanish "
            f"at xi = 0) but the field carries {dc:.3e} of {tot:.3e} there; "
            "route the zero mode to the Y_0 / L^1 side"
        )


def _warn_tau_tail(a: np.ndarray, f: SpaceTimeSpectral, what: str):
    tau = f.grid.tau
    outer = np.abs(tau) >= 0.5 * f.grid.tau_nyquist
    tail = float(np.sum(np.abs(a[:, outer]) ** 2))
    total = float(np.sum(np.abs(a) ** 2))
    if total > 0.0 and tail > 1e-12 * total:
        warnings.warn(
            f"{what}: fraction {tail / total:.2e} of the modulation mass sits in "
            "the outer half of the tau grid; shells beyond the Nyquist are "
            "not resolved and their contribution is missing",
            stacklevel=3,
        )


def _shell_l2(a: np.ndarray, row_weights: np.ndarray, cell: float, lt: float) -> np.ndarray:
    """L^2(dxi dmu) of FT values row_weighted per shell.

    a holds coefficients; FT values are lt * a. Returns one value per row
    of row_weights (shape [n_shells, n_times])."""
    m2 = np.abs(a) ** 2
    per_shell = m2 @ (row_weights**2).T
    return lt * np.sqrt(np.maximum(per_shell.sum(axis=0), 0.0) * cell)


# ---------------------------------------------------------------------------
# the Z_k ladder (high blocks)


def z_norm(
    f: SpaceTimeSpectral,
    k: int,
    ws: WindowSystem,
    wt: WeightTable,
    return_terms: bool = False,
):
    """sum_j 2^{j/2} beta_{k,j} ||eta_j(tau - omega(xi)) f||, k != 0.

    The field must be supported in I_k x R. Shells are truncated at the
    tau-grid Nyquist; unresolved tail mass triggers a warning.
    """
    if k == 0:
        raise ValueError("z_norm covers high blocks only; use z0_norm for k = 0")
    if not wt.bs.in_range(k):
        raise IndexError(f"block index {k} outside the weight table's system")
    lo, hi = wt.bs.interval_I(k)
    _check_interval_support(f, lo, hi, f"I_{k}")

    a = modulation_transform(f, wt.alpha)
    _warn_tau_tail(a, f, f"z_norm(k={k})")
    mu = f.grid.tau
    j_max = ws.j_max_for(f.grid.tau_nyquist)
    rows = np.stack([ws.eta_j(j, mu) for j in range(j_max + 1)])
    lt = f.grid.spatial.length * f.grid.t_length
    l2s = _shell_l2(a, rows, _ft_cell(f), lt)
    terms = {
        j: 2.0 ** (j / 2.0) * wt.beta(k, j) * float(l2s[j]) for j in range(j_max + 1)
    }
    total = float(sum(terms.values()))
    if return_terms:
        return total, terms
    return total


# ---------------------------------------------------------------------------
# the low-block family


def _kprime_range(grid: SpatialGrid) -> range:
    """Frequency-window indices k' <= 2 that can see a nonzero grid mode."""
    dxi = grid.freq_spacing
    # window support is |nu| <= 1.6 * 2^kp; below the smallest positive
    # frequency the window is dead
    kp_min = int(math.floor(math.log2(dxi / 1.6)))
    return range(kp_min, 3)


def x0_norm(
    f: SpaceTimeSpectral,
    rho: float,
    ws: WindowSystem,
    wt: WeightTable,
    variant: str = "surface",
    return_terms: bool = False,
):
    """sum_{j, k'<=2} 2^{j(1-delta)} 2^{rho k'} ||eta_j eta_tilde_{k'} f||.

    variant selects the modulation argument: "surface" measures
    eta_j(tau - omega(xi)) and is the default; "flat" measures eta_j(tau),
    the form the low-block space is written in originally. On I_0 the two
    are equivalent norms (omega is bounded there) but not equal.
    """
    if not (-1.0 <= rho <= 1.0):
        raise ValueError(f"rho must lie in [-1, 1], got {rho}")
    if variant not in ("surface", "flat"):
        raise ValueError(f"unknown variant {variant!r}")
    bs = wt.bs
    lo, hi = bs.interval_I(0)
    _check_interval_support(f, lo, hi, "I_0")
    _check_dc_free(f, "x0_norm")

    if variant == "surface":
        a = modulation_transform(f, wt.alpha)
    else:
        a = f.coeffs
    _warn_tau_tail(a, f, "x0_norm")
    mu = f.grid.tau
    j_max = ws.j_max_for(f.grid.tau_nyquist)
    rows = np.stack([ws.eta_j(j, mu) for j in range(j_max + 1)])

    freqs = f.grid.spatial.frequencies
    lt = f.grid.spatial.length * f.grid.t_length
    cell = _ft_cell(f)
    m2 = np.abs(a) ** 2
    shell_matrix = m2 @ (rows**2).T  # [n_x, n_j]

    delta = wt.delta
    terms = {}
    total = 0.0
    for kp in _kprime_range(f.grid.spatial):
        col = ws.eta_tilde(kp, freqs) ** 2
        if not col.any():
            continue
        per_j = lt * np.sqrt(np.maximum(col @ shell_matrix, 0.0) * cell)
        for j in range(j_max + 1):
            val = 2.0 ** (j * (1.0 - delta)) * 2.0 ** (rho * kp) * float(per_j[j])
            if val != 0.0:
                terms[(j, kp)] = val
                total += val
    if return_terms:
        return total, terms
    return total


def y0_norm(
    f: SpaceTimeSpectral,
    ws: WindowSystem,
    wt: WeightTable,
    return_terms: bool = False,
):
    """sum_j 2^{j(1-delta)} || F^{-1}[eta_j(tau) f] ||_{L^1_x L^2_t}.

    The modulation window here is flat in tau by definition. The zero
    mode is welcome; this is the side of Z_0 that can hold it.
    """
    bs = wt.bs
    lo, hi = bs.interval_I(0)
    _check_interval_support(f, lo, hi, "I_0")

    g = f.grid
    mu = g.tau
    j_max = ws.j_max_for(g.tau_nyquist)
    _warn_tau_tail(f.coeffs, f, "y0_norm")
    dx = g.spatial.spacing
    dt = g.t_spacing
    delta = wt.delta
    terms = {}
    total = 0.0
    for j in range(j_max + 1):
        w = ws.eta_j(j, mu)
        if not w.any():
            continue
        piece = SpaceTimeSpectral(g, f.coeffs * w[None, :])
        u = spacetime_from_spectral(piece)
        mixed = dx * float(np.sum(np.sqrt(dt * np.sum(np.abs(u) ** 2, axis=1))))
        val = 2.0 ** (j * (1.0 - delta)) * mixed
        if val != 0.0:
            terms[j] = val
            total += val
    if return_terms:
        return total, terms
    return total


def _split_candidates(grid: SpatialGrid) -> list:
    """Thresholds theta for low/high splittings: the dyadic ladder over
    the resolvable window range plus the two trivial splits."""
    thetas = [0.0]
    for kp in _kprime_range(grid):
        thetas.append(2.0**kp)
    thetas.append(math.inf)
    return thetas


def z0_norm(f: SpaceTimeSpectral, ws: WindowSystem, wt: WeightTable) -> SplitResult:
    """Upper bound for ||f||_{Z_0} = inf_{f = g + h} ||g||_{X_0} + ||h||_{Y_0}.

    Candidates: g carries the modes 0 < |xi| <= theta, h the rest, theta
    sweeping the dyadic ladder, plus the two one-sided splits. The zero
    mode always travels with h (X_0 cannot see it). The X side is
    evaluated at rho = -1.
    """
    bs = wt.bs
    lo, hi = bs.interval_I(0)
    _check_interval_support(f, lo, hi, "I_0")

    freqs = np.abs(f.grid.spatial.frequencies)
    nonzero = freqs > 0.0
    candidates = []
    best = (math.inf, 0.0)
    for theta in _split_candidates(f.grid.spatial):
        g_mask = (nonzero & (freqs <= theta)).astype(np.float64)
        g_part = SpaceTimeSpectral(f.grid, f.coeffs * g_mask[:, None])
        h_part = SpaceTimeSpectral(f.grid, f.coeffs * (1.0 - g_mask)[:, None])
        value = x0_norm(g_part, -1.0, ws, wt) + y0_norm(h_part, ws, wt)
        candidates.append((theta, value))
        if value < best[0]:
            best = (value, theta)
    return SplitResult(value=best[0], theta=best[1], candidates=candidates)


def b0_norm(phi: SpectralField, ws: WindowSystem, wt: WeightTable) -> SplitResult:
    """Upper bound for the static low-block norm
    ||f||_{B_0} = inf_{f = g + h} ||F^{-1} g||_{L^1} + sum_{k'<=2} 2^{-k'} ||eta_tilde_{k'} h||_{L^2_xi}.

    Same candidate family as z0_norm; the zero mode always travels with
    the L^1 piece g.
    """
    grid = phi.grid
    freqs = np.abs(grid.frequencies)
    nonzero = freqs > 0.0
    # ||L c||_{L^2(dxi)} = L sqrt(dxi) ||c||_2 = sqrt(2 pi L) ||c||_2
    sqrt_meas = grid.length * math.sqrt(grid.freq_spacing)
    dx = grid.spacing

    def weighted_l2(coeffs: np.ndarray) -> float:
        total = 0.0
        for kp in _kprime_range(grid):
            w = ws.eta_tilde(kp, grid.frequencies)
            piece = float(np.sqrt(np.sum(np.abs(coeffs * w) ** 2)))
            total += 2.0 ** (-kp) * sqrt_meas * piece
        return total

    candidates = []
    best = (math.inf, math.inf)
    for theta in _split_candidates(grid):
        # g = zero mode plus |xi| <= theta, measured in L^1 after inversion
        g_mask = (~nonzero | (freqs <= theta)).astype(np.float64)
        g_field = SpectralField(grid, phi.coeffs * g_mask)
        l1 = dx * float(np.sum(np.abs(from_spectral(g_field))))
        value = l1 + weighted_l2(phi.coeffs * (1.0 - g_mask))
        candidates.append((theta, value))
        if value < best[0]:
            best = (value, theta)
    return SplitResult(value=best[0], theta=best[1], candidates=candidates)


def htilde_norm(
    phi: SpectralField,
    sigma: float,
    bs: BlockSystem,
    cf: CutoffFamily,
    ws: WindowSystem,
    wt: WeightTable,
) -> float:
    """(||chi_0 F(phi)||_{B_0}^2 + sum_{|k|>=1} (1+|n_k|)^{2 sigma} ||chi_k F(phi)||^2)^{1/2}."""
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    grid = phi.grid
    sqrt_meas = grid.length * math.sqrt(grid.freq_spacing)
    low = project(phi, 0, cf)
    total = b0_norm(low, ws, wt).value ** 2
    for k in range(-bs.k_max, bs.k_max + 1):
        if k == 0:
            continue
        piece = cf.chi(k, grid.frequencies) * phi.coeffs
        l2 = sqrt_meas * float(np.sqrt(np.sum(np.abs(piece) ** 2)))
        if l2 == 0.0:
            continue
        total += (1.0 + abs(bs.n_of(k))) ** (2.0 * sigma) * l2**2
    return float(np.sqrt(total))


# ---------------------------------------------------------------------------
# F^sigma / N^sigma assembly


def _windowed_samples(u: np.ndarray, grid: SpaceTimeGrid, what: str) -> np.ndarray:
    """Enforce time support in [-4, 4], smoothing with eta0(2t/5) if the
    field leaks outside (the window is 1 on |t| <= 25/8 and dies at 4)."""
    t = grid.t
    outside = np.abs(t) > 4.0
    mass_out = float(np.sum(np.abs(u[:, outside]) ** 2))
    mass = float(np.sum(np.abs(u) ** 2))
    if mass > 0.0 and mass_out > 1e-24 * mass:
        warnings.warn(
            f"{what}: time support leaks outside [-4, 4] "
            f"(fraction {mass_out / mass:.2e}); applying the smooth restriction window",
            stacklevel=3,
        )
        ws = WindowSystem()
        return u * ws.eta0(2.0 * t / 5.0)[None, :]
    return u


def resolvent_weight(f: SpaceTimeSpectral, alpha: float, power: float = -1.0) -> SpaceTimeSpectral:
    """Multiply by (tau - omega(xi) + i)^power, applied exactly in the
    modulation representation."""
    a = modulation_transform(f, alpha)
    mu = f.grid.tau
    a = a * ((mu + 1j) ** power)[None, :]
    return SpaceTimeSpectral(f.grid, modulation_to_coeffs(a, f.grid, alpha))


def _sigma_assembly(
    u_samples: np.ndarray,
    grid: SpaceTimeGrid,
    sigma: float,
    bs: BlockSystem,
    cf: CutoffFamily,
    ws: WindowSystem,
    wt: WeightTable,
    weighted: bool,
    what: str,
) -> float:
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    u = _windowed_samples(np.asarray(u_samples), grid, what)
    f = spacetime_to_spectral(u, grid)
    total = 0.0
    peak = float(np.abs(f.coeffs).max(initial=0.0))
    for k in range(-bs.k_max, bs.k_max + 1):
        piece = project(f, k, cf)  # raises CoverageError on unseen modes
        # fft round-trip noise seeds far columns at ~1e-17 relative; a block
        # holding only that is empty for norm purposes
        if float(np.abs(piece.coeffs).max(initial=0.0)) <= 1e-14 * peak:
            continue
        if weighted:
            piece = resolvent_weight(piece, wt.alpha)
        if k == 0:
            val = z0_norm(piece, ws, wt).value
        else:
            val = z_norm(piece, k, ws, wt)
        total += (1.0 + abs(bs.n_of(k))) ** (2.0 * sigma) * val**2
    return float(np.sqrt(total))


def f_sigma_norm(u_samples, grid: SpaceTimeGrid, sigma, bs, cf, ws, wt) -> float:
    """(sum_k (1+|n_k|)^{2 sigma} ||P_k u||_{F_k}^2)^{1/2}; the k = 0 piece
    is measured in Z_0."""
    return _sigma_assembly(u_samples, grid, sigma, bs, cf, ws, wt, False, "f_sigma_norm")


def n_sigma_norm(u_samples, grid: SpaceTimeGrid, sigma, bs, cf, ws, wt) -> float:
    """Like f_sigma_norm with the resolvent weight (tau - omega + i)^{-1}
    applied to each block piece before its Z norm."""
    return _sigma_assembly(u_samples, grid, sigma, bs, cf, ws, wt, True, "n_sigma_norm")


# ---------------------------------------------------------------------------
# atomic decomposition


@dataclass
class ModulationAtom:
    """One sharp piece of a field: modulation shell j, optional frequency
    shell k' (low block only), and the piece itself."""

    j: int
    kprime: int | None
    field: SpaceTimeSpectral


def _sharp_shell_index(mu: np.ndarray) -> np.ndarray:
    """Disjoint shells: j = 0 for |mu| < 2, else floor(log2 |mu|)."""
    out = np.zeros(mu.shape, dtype=np.int64)
    big = np.abs(mu) >= 2.0
    out[big] = np.floor(np.log2(np.abs(mu[big]))).astype(np.int64)
    return out


def atomic_decompose(
    f: SpaceTimeSpectral, k: int, ws: WindowSystem, wt: WeightTable
) -> list:
    """Split f into sharply supported atoms, exactly (the shells tile the
    lattice disjointly, so the atoms sum back to f).

    High blocks split over modulation shells D_k^j; the low block splits
    over (j, k') with sharp dyadic frequency shells |xi| in (2^{k'-1}, 2^{k'}].
    """
    bs = wt.bs
    lo, hi = bs.interval_I(k)
    _check_interval_support(f, lo, hi, f"I_{k}")
    a = modulation_transform(f, wt.alpha)
    mu = f.grid.tau
    j_idx = _sharp_shell_index(mu)

    def piece_from(mask_cols: np.ndarray, j: int, kp):
        sel = a * mask_cols[None, :] if mask_cols.ndim == 1 else a * mask_cols
        coeffs = modulation_to_coeffs(sel, f.grid, wt.alpha)
        return ModulationAtom(j=j, kprime=kp, field=SpaceTimeSpectral(f.grid, coeffs))

    atoms = []
    if k != 0:
        for j in np.unique(j_idx):
            mask = (j_idx == j).astype(np.float64)
            if not (np.abs(a[:, j_idx == j]) > 0).any():
                continue
            atoms.append(piece_from(mask, int(j), None))
        return atoms

    _check_dc_free(f, "atomic_decompose(k=0)")
    freqs = f.grid.spatial.frequencies
    kp_idx = np.zeros(freqs.shape, dtype=np.int64)
    nz = np.abs(freqs) > 0.0
    kp_idx[nz] = np.ceil(np.log2(np.abs(freqs[nz]))).astype(np.int64)
    for kp in np.unique(kp_idx[nz]):
        col_mask = (nz & (kp_idx == kp)).astype(np.float64)
        for j in np.unique(j_idx):
            full = np.outer(col_mask, (j_idx == j).astype(np.float64))
            if not (np.abs(a * full) > 0).any():
                continue
            atoms.append(piece_from(full, int(j), int(kp)))
    return atoms


def collect_bundle(
    f: SpaceTimeSpectral, k: int, ws: WindowSystem, wt: WeightTable
) -> NormBundle:
    """Norms relevant to a block-k field, with per-term provenance."""
    if k != 0:
        val, terms = z_norm(f, k, ws, wt, return_terms=True)
        return NormBundle(entries={"Z_k": val}, provenance={"Z_k": terms})
    x, xt = x0_norm(f, -1.0, ws, wt, return_terms=True)
    y, yt = y0_norm(f, ws, wt, return_terms=True)
    z = z0_norm(f, ws, wt)
    return NormBundle(
        entries={"X0^-1": x, "Y0": y, "Z0": z.value},
        provenance={"X0^-1": xt, "Y0": yt, "Z0": {"theta": z.theta}},
    )


# ---------------------------------------------------------------------------
# linear estimates


def free_evolution_field(phi: SpectralField, grid: SpaceTimeGrid, alpha: float) -> np.ndarray:
    """Samples of W(t) phi on the space-time grid."""
    if phi.grid != grid.spatial:
        raise ValueError("phi lives on a different spatial grid")
    omega = dispersion_symbol(grid.spatial.frequencies, alpha)
    coeffs = phi.coeffs[:, None] * np.exp(1j * np.outer(omega, grid.t))
    samples = np.fft.ifft(grid.spatial.phase[:, None] * coeffs, axis=0)
    return samples * grid.spatial.n_points


def duhamel_integral(u_samples: np.ndarray, grid: SpaceTimeGrid, alpha: float) -> np.ndarray:
    """Samples of t -> int_0^t W(t - s) u(s) ds (trapezoid in s).

    t = 0 is a grid point by construction, so the cumulative integral is
    anchored exactly there and runs with the correct sign both ways.
    """
    n = grid.spatial.n_points
    uhat = grid.spatial.phase[:, None] * np.fft.fft(np.asarray(u_samples), axis=0) / n
    omega = dispersion_symbol(grid.spatial.frequencies, alpha)
    phase = np.exp(1j * np.outer(omega, grid.t))
    g = uhat / phase
    dt = grid.t_spacing
    i0 = grid.n_times // 2  # index of t = 0
    G = np.zeros_like(g)
    steps = 0.5 * dt * (g[:, 1:] + g[:, :-1])
    fwd = np.cumsum(steps[:, i0:], axis=1)
    G[:, i0 + 1 :] = fwd
    back = np.cumsum(steps[:, :i0][:, ::-1], axis=1)[:, ::-1]
    G[:, :i0] = -back
    dhat = phase * G
    return np.fft.ifft(grid.spatial.phase[:, None] * dhat, axis=0) * n


def _random_block_datum(grid: SpatialGrid, bs, cf, k: int, rng) -> SpectralField:
    """Random complex field supported on the smooth block cutoff chi_k."""
    mask = cf.chi(k, grid.frequencies)
    coeffs = (rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points)) * mask
    norm = float(np.sqrt(grid.length * np.sum(np.abs(coeffs) ** 2)))
    if norm == 0.0:
        raise ValueError(f"block {k} has no support on this grid")
    return SpectralField(grid, coeffs / norm)


def linear_estimate_check(
    family: str,
    sigma: float,
    alpha: float,
    bs: BlockSystem,
    cf: CutoffFamily,
    n_x: int = 1024,
    x_length: float = 64.0,
    n_t: int = 512,
    t_length: float = 32.0,
    k_values=None,
    seed: int = 0,
    time_subsample: int = 8,
) -> EstimateReport:
    """Ratio study for one of the three linear estimates.

    family = "free_evolution": || window * W(t) phi ||_{F^sigma} / || phi ||_{H~sigma}
    family = "duhamel":        || window * int_0^t W(t-s) u ds ||_{F^sigma} / || u ||_{N^sigma}
    family = "embedding":      sup_t || u(t) ||_{H~sigma} / || u ||_{F^sigma}

    One ratio per block index in k_values (default 1..5 plus a mid and a
    top block); random per-block data with a fixed seed. The default tau
    grid resolves the dispersion surface over the low block (the flat-
    frequency norms need Nyquist well above the I_0 corner of |omega|,
    about 20 for alpha = 1.5).
    """
    if family not in ("free_evolution", "duhamel", "embedding"):
        raise ValueError(f"unknown family {family!r}")
    rng = np.random.default_rng(seed)
    grid = SpaceTimeGrid(SpatialGrid(n_x, x_length), n_t, t_length)
    ws = WindowSystem()
    wt = WeightTable(bs)
    # keep to blocks whose cutoff fits the dealias-free part of the grid
    k_fit = [
        k
        for k in range(1, bs.k_max + 1)
        if bs.chi_support(k)[1] < 0.9 * grid.spatial.max_frequency
    ]
    if not k_fit:
        raise ValueError("no block fits this grid")
    if k_values is None:
        top = k_fit[-1]
        k_values = sorted(set([1, 2, 3, 4, 5, max(1, top // 2), top]) & set(k_fit))

    eta_window = WindowSystem().eta0
    t_win = eta_window(2.0 * grid.t)  # supported in |t| <= 0.8, inside (-1, 1)
    ratios = []
    ks_used = []
    violations = []
    for k in k_values:
        phi = _random_block_datum(grid.spatial, bs, cf, k, rng)
        if family == "free_evolution":
            u = free_evolution_field(phi, grid, alpha) * t_win[None, :]
            num = f_sigma_norm(u, grid, sigma, bs, cf, ws, wt)
            den = htilde_norm(phi, sigma, bs, cf, ws, wt)
        elif family == "duhamel":
            ws5 = eta_window(2.0 * grid.t / 5.0)
            u_src = free_evolution_field(phi, grid, alpha) * ws5[None, :]
            d = duhamel_integral(u_src, grid, alpha) * ws5[None, :]
            num = f_sigma_norm(d, grid, sigma, bs, cf, ws, wt)
            den = n_sigma_norm(u_src, grid, sigma, bs, cf, ws, wt)
        else:
            ws5 = eta_window(2.0 * grid.t / 5.0)
            u = free_evolution_field(phi, grid, alpha) * ws5[None, :]
            den = f_sigma_norm(u, grid, sigma, bs, cf, ws, wt)
            num = 0.0
            for i in range(0, grid.n_times, max(1, time_subsample)):
                slice_field = to_spectral(u[:, i], grid.spatial)
                num = max(num, htilde_norm(slice_field, sigma, bs, cf, ws, wt))
        if den <= 0.0 or not np.isfinite(num / den):
            violations.append({"k": k, "num": num, "den": den})
            continue
        ratios.append(num / den)
        ks_used.append(k)

    report = EstimateReport(
        inequality_id=f"linear_{family}",
        samples=len(ratios),
        ratios=ratio_stats(np.asarray(ratios)),
        violations=violations,
    )
    if len(ratios) >= 3:
        ns = np.array([1.0 + abs(bs.n_of(k)) for k in ks_used])
        report.regression["block_size"] = loglog_slope(ns, np.asarray(ratios))
        report.regression["block_size"]["predicted_slope"] = 0.0
    return report
