"""Shared test fixtures-by-hand: random band-limited fields."""

import numpy as np

from dgbo.spectral import SpectralField, l2_norm


def band_limited(grid, band, seed, scale=0.01, mean_zero=True):
    """Random real field with modes confined to |xi| <= band, L2 norm `scale`."""
    rng = np.random.default_rng(seed)
    c = np.zeros(grid.n_points, dtype=np.complex128)
    sel = np.nonzero((np.abs(grid.frequencies) <= band) & (grid.modes > 0))[0]
    draws = rng.normal(size=sel.size) + 1j * rng.normal(size=sel.size)
    full = np.zeros_like(c)
    for i, z in zip(sel, draws):
        m = grid.modes[i]
        j = np.nonzero(grid.modes == -m)[0][0]
        full[i] = z
        full[j] = np.conj(z)
    if not mean_zero:
        full[0] = rng.normal()
    f = SpectralField(grid, full, is_real=True)
    norm = l2_norm(f)
    if norm > 0:
        full = full * (scale / norm)
    return SpectralField(grid, full, is_real=True)
