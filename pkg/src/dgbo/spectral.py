"""Periodic grids, discrete Fourier transforms, and dispersive multipliers.

Conventions (used everywhere downstream):

* space grid: x_n = -L/2 + n*dx, n = 0..N-1, dx = L/N
* frequencies: xi_m = 2*pi*m/L with m in fftfreq order
* forward transform: c_m = (1/N) * sum_n h(x_n) e^{-i xi_m x_n}
  so a constant field maps to the zero mode and cos(xi0 x) splits into
  coefficients 1/2 at +-xi0.

Because x_n starts at -L/2 rather than 0, the forward transform equals
(-1)^m * FFT(h)_m / N.  The parity factor is computed from the integer
mode index, not from floating-point trig, so round trips and Hermitian
symmetry survive at machine precision.

* L2 norm: ||h||^2 = L * sum_m |c_m|^2  (Parseval for this normalization)
* continuum Fourier-transform value at xi_m: L * c_m   (1D)
  and L * T * c_{m,l} (2D), used by the norm modules.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpatialGrid",
    "SpectralField",
    "SpaceTimeGrid",
    "SpaceTimeSpectral",
    "to_spectral",
    "from_spectral",
    "hermitian_residual",
    "fractional_derivative",
    "spatial_derivative",
    "dispersion_symbol",
    "free_evolution",
    "l2_norm",
    "sobolev_norm",
    "mean_value",
    "spacetime_to_spectral",
    "spacetime_from_spectral",
    "spacetime_l2",
    "modulation_transform",
    "modulation_to_coeffs",
]


def _mode_indices(n: int) -> np.ndarray:
    m = np.arange(n, dtype=np.int64)
    m[m >= n // 2] -= n
    return m


@dataclass
class SpatialGrid:
    """Uniform periodic grid on [-L/2, L/2)."""

    n_points: int
    length: float

    def __post_init__(self):
        n = self.n_points
        if n <= 0 or (n & (n - 1)) != 0:
            raise ValueError(f"n_points must be a positive power of two, got {n}")
        if not (self.length > 0.0):
            raise ValueError(f"length must be positive, got {self.length}")
        self.spacing = self.length / n
        self.x = -self.length / 2.0 + self.spacing * np.arange(n)
        self.modes = _mode_indices(n)
        self.frequencies = 2.0 * np.pi * self.modes / self.length
        # (-1)^m from the integer mode index; exact, Hermitian-safe
        self.phase = 1.0 - 2.0 * (np.abs(self.modes) % 2).astype(np.float64)

    @property
    def freq_spacing(self) -> float:
        return 2.0 * np.pi / self.length

    @property
    def max_frequency(self) -> float:
        return np.pi * self.n_points / self.length

    def __eq__(self, other):
        return (
            isinstance(other, SpatialGrid)
            and self.n_points == other.n_points
            and self.length == other.length
        )


@dataclass
class SpectralField:
    """Fourier coefficients of a field on a SpatialGrid."""

    grid: SpatialGrid
    coeffs: np.ndarray
    is_real: bool = False

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if self.coeffs.shape != (self.grid.n_points,):
            raise ValueError(
                f"coefficient array has shape {self.coeffs.shape}, "
                f"grid expects ({self.grid.n_points},)"
            )

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy(), self.is_real)


def to_spectral(samples: np.ndarray, grid: SpatialGrid) -> SpectralField:
    """Forward transform of point samples taken on grid.x."""
    samples = np.asarray(samples)
    if samples.shape != (grid.n_points,):
        raise ValueError(
            f"sample array has shape {samples.shape}, "
            f"grid expects ({grid.n_points},)"
        )
    is_real = bool(np.isrealobj(samples))
    coeffs = grid.phase * np.fft.fft(samples) / grid.n_points
    return SpectralField(grid, coeffs, is_real=is_real)


def from_spectral(f: SpectralField) -> np.ndarray:
    """Point samples on f.grid.x. Real output for fields flagged real."""
    raw = np.fft.ifft(f.grid.phase * f.coeffs) * f.grid.n_points
    if f.is_real:
        return raw.real
    return raw


def hermitian_residual(f: SpectralField) -> float:
    """max |c(-xi) - conj(c(xi))|, the distance from representing a real field.

    The Nyquist mode has no mirror partner; realness there means a real
    coefficient, so its imaginary part is the residual contribution.
    """
    c = f.coeffs
    n = f.grid.n_points
    idx = (-np.arange(n)) % n
    res = np.abs(c[idx] - np.conj(c))
    res[n // 2] = abs(c[n // 2].imag)
    return float(res.max(initial=0.0))


def fractional_derivative(f: SpectralField, alpha: float) -> SpectralField:
    """Apply D^alpha = |xi|^alpha. alpha = 0 is the identity; |0|^alpha = 0 otherwise."""
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if alpha == 0.0:
        return f.copy()
    mult = np.abs(f.grid.frequencies) ** alpha
    return SpectralField(f.grid, f.coeffs * mult, f.is_real)


def spatial_derivative(f: SpectralField, order: int = 1) -> SpectralField:
    mult = (1j * f.grid.frequencies) ** order
    return SpectralField(f.grid, f.coeffs * mult, f.is_real)


def dispersion_symbol(xi, alpha: float):
    """omega(xi) = -xi * |xi|^alpha, the dispersion relation of the linear part."""
    xi = np.asarray(xi, dtype=np.float64)
    out = -xi * np.abs(xi) ** alpha
    if out.ndim == 0:
        return float(out)
    return out


def free_evolution(f: SpectralField, t: float, alpha: float) -> SpectralField:
    """Propagate under u_t + D^alpha u_x = 0 for time t: c -> e^{i t omega(xi)} c."""
    omega = dispersion_symbol(f.grid.frequencies, alpha)
    return SpectralField(f.grid, f.coeffs * np.exp(1j * t * omega), f.is_real)


def dealias_mask(grid: SpatialGrid, fraction: float = 2.0 / 3.0) -> np.ndarray:
    """0/1 multiplier keeping |m| strictly below fraction * Nyquist.

    With the default 2/3 rule, products of two mask-band-limited fields are
    exact truncated convolutions: aliased images of the true product land
    outside the kept band.
    """
    cut = fraction * (grid.n_points // 2)
    return (np.abs(grid.modes) < cut).astype(np.float64)


def l2_norm(f: SpectralField) -> float:
    return float(np.sqrt(f.grid.length * np.sum(np.abs(f.coeffs) ** 2)))


def sobolev_norm(f: SpectralField, sigma: float) -> float:
    """Inhomogeneous Sobolev norm sqrt(L * sum (1+xi^2)^sigma |c|^2)."""
    w = (1.0 + f.grid.frequencies**2) ** sigma
    return float(np.sqrt(f.grid.length * np.sum(w * np.abs(f.coeffs) ** 2)))


def mean_value(f: SpectralField) -> complex:
    """Integral of the field over the box: L * c_0."""
    return f.grid.length * complex(f.coeffs[0])


# ---------------------------------------------------------------------------
# space-time


@dataclass
class SpaceTimeGrid:
    """Tensor grid [-L/2,L/2) x [-T/2,T/2); T >= 16 so the unit-scale time
    windows used by the norm machinery fit with room to spare."""

    spatial: SpatialGrid
    n_times: int
    t_length: float

    def __post_init__(self):
        n = self.n_times
        if n <= 0 or (n & (n - 1)) != 0:
            raise ValueError(f"n_times must be a positive power of two, got {n}")
        if self.t_length < 16.0:
            raise ValueError(f"t_length must be at least 16, got {self.t_length}")
        self.t_spacing = self.t_length / n
        self.t = -self.t_length / 2.0 + self.t_spacing * np.arange(n)
        self.t_modes = _mode_indices(n)
        self.tau = 2.0 * np.pi * self.t_modes / self.t_length
        self.t_phase = 1.0 - 2.0 * (np.abs(self.t_modes) % 2).astype(np.float64)

    @property
    def tau_spacing(self) -> float:
        return 2.0 * np.pi / self.t_length

    @property
    def tau_nyquist(self) -> float:
        return np.pi * self.n_times / self.t_length


@dataclass
class SpaceTimeSpectral:
    """2D Fourier coefficients c[m_x, m_t] of a space-time field."""

    grid: SpaceTimeGrid
    coeffs: np.ndarray
    is_real: bool = False

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        shape = (self.grid.spatial.n_points, self.grid.n_times)
        if self.coeffs.shape != shape:
            raise ValueError(
                f"coefficient array has shape {self.coeffs.shape}, grid expects {shape}"
            )

    def ft_values(self) -> np.ndarray:
        """Continuum Fourier-transform values L*T*c at the (xi_m, tau_l) lattice."""
        return self.grid.spatial.length * self.grid.t_length * self.coeffs


def spacetime_to_spectral(samples: np.ndarray, grid: SpaceTimeGrid) -> SpaceTimeSpectral:
    samples = np.asarray(samples)
    shape = (grid.spatial.n_points, grid.n_times)
    if samples.shape != shape:
        raise ValueError(f"sample array has shape {samples.shape}, grid expects {shape}")
    is_real = bool(np.isrealobj(samples))
    c = np.fft.fft2(samples) / (shape[0] * shape[1])
    c *= grid.spatial.phase[:, None]
    c *= grid.t_phase[None, :]
    return SpaceTimeSpectral(grid, c, is_real=is_real)


def spacetime_from_spectral(f: SpaceTimeSpectral) -> np.ndarray:
    g = f.grid
    c = f.coeffs * g.spatial.phase[:, None] * g.t_phase[None, :]
    raw = np.fft.ifft2(c) * (g.spatial.n_points * g.n_times)
    if f.is_real:
        return raw.real
    return raw


def spacetime_l2(f: SpaceTimeSpectral) -> float:
    """L2 norm over the box: sqrt(L*T*sum|c|^2)."""
    g = f.grid
    return float(np.sqrt(g.spatial.length * g.t_length * np.sum(np.abs(f.coeffs) ** 2)))


def modulation_transform(f: SpaceTimeSpectral, alpha: float) -> np.ndarray:
    """Re-express f relative to the dispersive surface tau = omega(xi).

    Returns an array a[m_x, m_mu] with the same normalization as f.coeffs:
    a is the t-transform of u(xi, t) e^{-i t omega(xi)}, i.e. the exact
    discrete counterpart of f(xi, omega(xi) + mu) sampled at mu = tau_l.
    The twist is unitary per column, so sum|a|^2 == sum|coeffs|^2.
    """
    g = f.grid
    nt = g.n_times
    # inverse transform along tau only: u(xi, t)
    u = np.fft.ifft(f.coeffs * g.t_phase[None, :], axis=1) * nt
    omega = dispersion_symbol(g.spatial.frequencies, alpha)
    u *= np.exp(-1j * np.outer(omega, g.t))
    return g.t_phase[None, :] * np.fft.fft(u, axis=1) / nt


def modulation_to_coeffs(a: np.ndarray, grid: SpaceTimeGrid, alpha: float) -> np.ndarray:
    """Inverse of modulation_transform (exact; the twist is unitary)."""
    nt = grid.n_times
    u = np.fft.ifft(a * grid.t_phase[None, :], axis=1) * nt
    omega = dispersion_symbol(grid.spatial.frequencies, alpha)
    u *= np.exp(1j * np.outer(omega, grid.t))
    return grid.t_phase[None, :] * np.fft.fft(u, axis=1) / nt
