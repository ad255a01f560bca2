"""Pseudo-spectral toolkit for a fractional-dispersion Benjamin-Ono type equation.

The equation is  u_t + D^alpha u_x + (u^2/2)_x = 0  on a periodic box,
with D^alpha the Fourier multiplier |xi|^alpha and alpha in (1, 2).

Modules:
    spectral   periodic grids, transforms, multipliers, free evolution
    blocks     frequency block lattice, smooth cutoff partition, projections
    gauge      low/high splitting, gauge phases, renormalized block system
    solver     integrating-factor RK4 / ETDRK4 time stepping + experiments
    norms      windowed space-time norms (block, low-band, mixed, composite)
    estimates  localized L2 / convolution estimate verification harness
    cli        command-line entry point
"""

__version__ = "0.1.0"
