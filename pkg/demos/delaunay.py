"""Delaunay ends in hyperbolic space.

The constant Delaunay potential has monodromy -1 at lambda = +-1, so the
surface closes around z = 0. Along the real axis the Iwasawa pivot oscillates
with the period of the surface, and each sign change marks a band where the
surface crosses the ideal boundary.
"""

import numpy as np

from loopcmc.closing import check_closing
from loopcmc.frame import delaunay_nu, end_eigenvalue_check, monodromy
from loopcmc.loopalg import H3
from loopcmc.pipeline import pivot_profile
from loopcmc.potential import delaunay_potential_h3

N = 32
lam = np.exp(2j * np.pi * np.arange(64) / 64)

for q in (1.5, 2.0, 5.0):
    pot = delaunay_potential_h3(q)
    M = monodromy(pot, 0, 1.0, N, 1.0, tol=1e-12)
    nu_err = end_eigenvalue_check(M, lam=lam, nu=lambda x: delaunay_nu(q, x))
    rep = check_closing([M], H3, 1.0, -1.0)
    print(f"q = {q}: eigenvalue error {nu_err:.1e}, closes {rep.closes}")

    s = np.linspace(0.0, 12.0, 121)
    piv = pivot_profile(pot, np.exp(s), H3, basepoint=1.0)
    crossings = s[1:][piv[:-1] * piv[1:] < 0]
    print("  pivot sign changes at log r =", np.round(crossings, 1))
