"""
Free Jacobi matrix
==================

a_n = 1, b_n = 0.  The orthonormal polynomials are U_n(x/2), every Turán
determinant equals 1 and the density is sqrt(4 - x^2) / (2 pi).
"""

import numpy as np

from jacobi_stolz.density import density_profile
from jacobi_stolz.families import FamilySpec, make_family
from jacobi_stolz.jacobi_core import eval_polynomials

free = make_family(FamilySpec())

# p_n at a few points
x = np.array([-1.0, 0.0, 0.5])
p = eval_polynomials(free, x, 6).values()
print("p_0..p_6 at", x)
print(p)

# Turán determinant p_n^2 - p_{n-1} p_{n+1}
n = np.arange(1, 6)
print("Turán:", p[n, 2] ** 2 - p[n - 1, 2] * p[n + 1, 2])

# g, h and the density on a grid
grid = np.linspace(-1.9, 1.9, 9)
prof = density_profile(free, 1, 0, grid, n_max=500)
for xv, g, h, nu in zip(grid, prof.g, prof.h, prof.nu_prime):
    print(f"x={xv:+.3f}  g={g:.12f}  h={h:+.6f}  nu'={nu:.9f}  "
          f"closed={np.sqrt(4 - xv * xv) / (2 * np.pi):.9f}")
