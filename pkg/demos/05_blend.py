"""
Blend family
============

Bounded slots interleaved with two growing slots c_k = (k+1)^(1/2).  Only
residue 1 has a convergent transfer matrix, yet the Turán limits of all three
residues agree and give the same density.
"""

import numpy as np

from jacobi_stolz.density import density_profile
from jacobi_stolz.families import FamilySpec, limit_matrix, make_family
from jacobi_stolz.jacobi_core import tr2

spec = FamilySpec(kind="blend", N=1, alpha=(1.0,), beta=(0.0,), tau=0.5)
model = make_family(spec)
print("a_0..a_11:", model.a_at(np.arange(12)))

x = np.linspace(-0.8, 0.8, 5)
print("|tr X_1| =", np.abs(tr2(limit_matrix(spec, 1, x))))
profs = [density_profile(model, spec.period, i, x, tol=1e-4, n_max=30_000) for i in range(3)]
for i, p in enumerate(profs):
    print(f"residue {i}: g = {np.round(p.g, 5)}  nu' = {np.round(p.nu_prime, 5)}")
