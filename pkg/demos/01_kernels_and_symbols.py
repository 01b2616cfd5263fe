"""Tour of the log/Riesz kernel family and its Fourier symbols.

Evaluates the radial profile, its gradient, and the normalized symbol for a
few exponents, then cross-checks the symbol constant through band-limited
wave-packet energies on a grid.
"""

import numpy as np

from rieszlab import (
    GridField,
    GridSpec,
    RieszParams,
    energy_seminorm,
    riesz_admissible,
    riesz_fourier_symbol,
    riesz_gradient,
    riesz_potential,
)
from rieszlab.energy import diagonal_cell_average

print("=== kernel profiles ===")
for d, s in [(3, 1.0), (2, 0.0), (1, -1.0)]:
    params = RieszParams(d, s)
    r = np.array([0.5, 1.0, 2.0])
    print(f"d={d} s={s:+.1f}: g(r) = {riesz_potential(params, r)}  c_ds = {params.c_ds:.6f}")

print("\n=== gradients point toward/away from the singularity ===")
params = RieszParams(2, 0.5)
for x in ([1.0, 0.0], [0.3, 0.4]):
    print(f"grad g{tuple(x)} = {riesz_gradient(params, x)}")

print("\n=== symbol homogeneity ghat(2 rho)/ghat(rho) = 2^(s-d) ===")
for d, s in [(1, 0.5), (3, 1.0)]:
    params = RieszParams(d, s)
    ratio = riesz_fourier_symbol(params, 2.0) / riesz_fourier_symbol(params, 1.0)
    print(f"d={d} s={s}: ratio = {ratio:.6f} vs 2^(s-d) = {2.0**(s-d):.6f}")

print("\n=== symbol constant vs real-space energies (wave packet) ===")
spec = GridSpec(d=1, n=2048, length=8.0)
x = spec.axis()
f = np.cos(2 * np.pi * 6.0 * x) * np.exp(-(x**2) / 0.5)
f -= f.mean()
for s in (0.25, 0.5, 0.75):
    params = RieszParams(1, s)
    spectral = energy_seminorm(GridField(spec, f), riesz_admissible(params)) ** 2
    D = np.abs(x[:, None] - x[None, :])
    K = np.empty_like(D)
    mask = D > 0
    K[mask] = riesz_potential(params, D[mask])
    K[~mask] = diagonal_cell_average(params, spec.h)
    direct = float(f @ K @ f) * spec.h**2
    print(f"s={s}: spectral {spectral:.6f}  direct {direct:.6f}  rel {abs(spectral-direct)/spectral:.2e}")
