"""The semicircle Stieltjes transform and its control quantities.

Run: python demos/01_semicircle.py
"""
import numpy as np

from wigner_clt.semicircle import control_params, density, kappa, stieltjes

# m(z) solves m^2 + z m + 1 = 0 on the branch with Im m * Im z > 0
for z in (1j, 0.5 + 0.01j, 2.0 + 1e-3j, 4.0 + 0.1j):
    m = stieltjes(z)
    print(f"z = {z!s:>14}  m = {m:.6f}  residual = {abs(m * m + z * m + 1):.1e}")

# Im m(E + i0) recovers pi * rho_sc(E)
E = np.linspace(-1.9, 1.9, 5)
print("\npi*rho_sc vs Im m(E + 1e-9 i):")
for e, r in zip(E, density(E)):
    print(f"  E = {e:+.2f}  {np.pi * r:.6f}  {stieltjes(complex(e, 1e-9)).imag:.6f}")

# near the edge, Im m and |1 - m^2| scale like sqrt(kappa + eta)
print("\nsquare-root behaviour at the edge (E = 2):")
for eta in (1e-1, 1e-2, 1e-3, 1e-4):
    z = complex(2.0, eta)
    m = stieltjes(z)
    root = np.sqrt(kappa(2.0) + eta)
    print(f"  eta = {eta:.0e}  Im m/root = {m.imag / root:.4f}  |1-m^2|/root = {abs(1 - m * m) / root:.4f}")

# for large eta both ratios decay like 1/sqrt(eta): the bands hold only on bounded heights
print("\nthe same ratios far from the axis (E = 0):")
for eta in (0.5, 1.0, 3.0, 10.0):
    m = stieltjes(complex(0.0, eta))
    root = np.sqrt(kappa(0.0) + eta)
    print(f"  eta = {eta:4.1f}  Im m/root = {m.imag / root:.4f}  |1-m^2|/root = {abs(1 - m * m) / root:.4f}")

# local-law error scales at N = 1000
print("\ncontrol parameters at N = 1000:")
for eta in (1000**-0.3, 1000**-0.5, 1000**-0.7):
    c = control_params(complex(0.0, eta), 1000)
    print(f"  eta = {eta:.4f}  Psi = {c.psi:.4f}  Theta = {c.theta:.4f}")
