"""
Stolz class diagnostics
=======================

b_n = cos(n^gamma) / log(n + 2) sits in D_{r,0} for r > 1/(1 - gamma).  With
gamma = 1/2 the diagnostic should reject r = 1 and accept r = 3.
"""

from jacobi_stolz.families import FamilySpec, make_family
from jacobi_stolz.stolz import carleman_check, entrywise_sequences, stolz_diagnose

model = make_family(FamilySpec(kind="intro_oscillation", gamma=0.5))
b = entrywise_sequences(model, 1, 0, 20_000)["b_over_a"]
for r in (1, 2, 3):
    rep = stolz_diagnose(b, r, 0)
    slopes = ", ".join(f"j={j}: {s:+.2f}" for j, s in rep.tail_slopes.items())
    print(f"r={r}  {rep.verdict:12s}  tail slopes {slopes}")

rep = carleman_check(model, 20_000)
print(f"Carleman: sum 1/a_n = {rep.partial_sum:.0f}, divergent = {rep.divergent}")
