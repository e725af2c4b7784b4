"""
Sine-law asymptotics
====================

sqrt(a_{n-1}) p_n(x) against A(x) sin(Phi_n + eta) for the oscillating
family with three diagonalization levels.  eta is fitted on the first quarter
of the range and the rest is out of sample.
"""

import numpy as np

from jacobi_stolz.asymptotics import fit_sine_law, phase_limit_gap
from jacobi_stolz.density import density_profile
from jacobi_stolz.families import FamilySpec, limit_matrix, make_family
from jacobi_stolz.uniform_diag import build_chain, reconstruct_sweep

spec = FamilySpec(kind="intro_oscillation", gamma=0.5)
model = make_family(spec)
x = 0.5
prof = density_profile(model, 1, 0, [x], n_max=10_000)
chain = build_chain(model, 1, 0, 3, x, n_max=10_000)
print("chain starts at block M =", chain.M)
print("reconstruction deviation over 1000 blocks:",
      reconstruct_sweep(chain, model, chain.M + 1, chain.M + 1001))

X = limit_matrix(spec, 0, x)
fit = fit_sine_law(model, 1, 0, x, chain, prof.nu_prime[0], prof.h[0], X_limit=X)
print(f"A = {fit.amplitude:.6f}  eta = {fit.eta:.6f}  tail RMS / A = "
      f"{fit.tail_rms / fit.amplitude:.4f}")
for n in (100, 1000, 5000, 9999):
    j = n - fit.n[0]
    model_val = fit.amplitude * np.sin(fit.phases[j] + fit.eta)
    print(f"n={n:5d}  observed={fit.observed[j]:+.5f}  sine law={model_val:+.5f}")

# theta_j follows arccos((x - b_j)/2), not yet the limit arccos(x/2)
print("tail phase gap to the limit:", phase_limit_gap(chain, X))
