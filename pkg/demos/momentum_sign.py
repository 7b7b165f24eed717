"""Which sign does the bilinear momentum term take?

The schedule has m_t -> -r, while the heavy-ball limit has a positive momentum r.
Both are consistent if the momentum multiplies (x_{t-1} - x_t).  This script
checks that reading against a brute-force least-squares oracle.
"""
import numpy as np

from avgcase.recurrence import (
    MPCoefficients,
    brute_force_optimal_polynomial,
    mp_coefficients,
    mp_polynomials,
)
from avgcase.spectra import MarchenkoPastur, horner, mp_quadrature

r = 0.25
coeffs = mp_coefficients(1.0, r, 10)
flipped = MPCoefficients(coeffs.sigma2, r, coeffs.rho, coeffs.delta, coeffs.h, -coeffs.m)
nodes, weights = mp_quadrature(MarchenkoPastur(1.0, r), 300)


def objective(c):
    return float(np.sum(weights * horner(c, nodes) ** 2))


print(" s   oracle      as built    flipped     max coeff gap")
for s in range(1, 9):
    oracle = brute_force_optimal_polynomial((nodes, weights), s).coeffs
    ours, other = mp_polynomials(coeffs, s)[s], mp_polynomials(flipped, s)[s]
    print(f"{s:2d}  {objective(oracle):.4e}  {objective(ours):.4e}  {objective(other):.4e}"
          f"  {np.abs(ours - oracle).max():.1e}")

# Heavy ball x_{t+1} = x_t - h lam x_t + m (x_t - x_{t-1}) has characteristic polynomial
# z^2 - (1 - h lam + m) z + m.  At the upper edge L = 2.25 with step h = 1, momentum +r
# gives a stable double root while -r gives a root below -1.
h, L = 1.0, 2.25
for m in (r, -r):
    roots = np.roots([1, -(1 - h * L + m), m])
    print(f"momentum {m:+.2f}: roots {np.round(roots, 4)}, spectral radius {np.abs(roots).max():.3f}")
