"""
Slowly oscillating diagonal
===========================

a_n = 1, b_n = cos(n^(1/2)) / log(n + 2).  The coefficients converge to the
free ones, but only logarithmically, so the density is not the free density.
The truncation ladder mu'_L approaches nu' as L grows.
"""

import numpy as np

from jacobi_stolz.density import density_profile
from jacobi_stolz.families import FamilySpec, make_family

model = make_family(FamilySpec(kind="intro_oscillation", gamma=0.5))
grid = np.linspace(-1.5, 1.5, 7)
prof = density_profile(model, 1, 0, grid, n_max=20_000, ladder=(16, 256, 4096, 16_384))

print(" x       g         h          nu'       free nu'")
for xv, g, h, nu in zip(grid, prof.g, prof.h, prof.nu_prime):
    print(f"{xv:+.2f}  {g:.6f}  {h:+.6f}  {nu:.6f}  {np.sqrt(4 - xv * xv) / (2 * np.pi):.6f}")

print("\nsup |nu' - mu'_L| along the ladder")
for L, gap in prof.ladder_gaps().items():
    print(f"L={L:6d}  {gap:.2e}")

# the trailing-window limit has not settled at tol 1e-6: b_n moves like 1/log n
print("\nconverged flags:", prof.converged)
