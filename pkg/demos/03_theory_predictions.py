"""Predicted variance V(f) and bias B(f) across scales, profiles and symmetry classes.

Run: python demos/03_theory_predictions.py
"""
from wigner_clt.ensemble import EnsembleSpec, fourth_cumulant_sum
from wigner_clt.profile import KERNELS, build_flat, build_from_kernel
from wigner_clt.spectral import bump
from wigner_clt.theory import ContourSpec, bulk_limit, edge_limit, predict

N = 1000
flat = build_flat(N)
cosine = build_from_kernel(N, KERNELS["cosine"]())

print("global scale (E0 = 0, eta0 = 1):")
tf = bump(0.0, 1.0)
contour = ContourSpec.for_function(tf, N)
for label, S in (("flat", flat), ("cosine", cosine)):
    for beta in (1, 2):
        for dist in ("gaussian", "rademacher"):
            k4 = fourth_cumulant_sum(EnsembleSpec(beta, dist, S))
            p = predict(tf, S, beta, k4, contour)
            print(f"  {label:<7} beta={beta} {dist:<10} k4={k4:+.3f}  V={p.variance:.5f}  B={p.bias:+.5f}")

# mesoscopic bulk: V approaches a scale-free limit as eta0 -> 0
print("\nbulk, flat profile, beta = 1:")
for a in (0.1, 0.2, 0.3):
    tf = bump(0.0, N**-a)
    p = predict(tf, flat, 1, 0.0, ContourSpec.for_function(tf, N), want=("V",))
    print(f"  eta0 = N^-{a}  V = {p.variance:.5f}")
print(f"  limit           {bulk_limit(bump(), 1):.5f}")

# edge: the mean tends to (2/beta - 1) g(0)/4, slowly
print("\nedge E0 = 2, flat profile, beta = 1:")
for a in (0.2, 0.4, 0.6):
    tf = bump(2.0, N**-a)
    p = predict(tf, flat, 1, 0.0, ContourSpec.for_function(tf, N))
    print(f"  eta0 = N^-{a}  V = {p.variance:.5f}  B = {p.bias:+.5f}")
mean, var = edge_limit(bump(), 1, 2)
print(f"  limit           V = {var:.5f}  B = {mean:+.5f}")
