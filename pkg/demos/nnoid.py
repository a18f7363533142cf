"""Minimal n-noids in hyperbolic space by continuation in t.

A balanced configuration of weights tau_k and points p_k gives the t = 0
initial data. Newton iterations in the series coefficients of a_k, b_k and
z_k then restore unitarity of the monodromy as t grows. The solved potential
is sampled on the unit disk with small holes around the ends.
"""

import numpy as np

from loopcmc.loopalg import H3
from loopcmc.pipeline import DomainSpec, sample_surface
from loopcmc.potential import nnoid_potential
from loopcmc.sym import sym_points_for
from loopcmc.traizet import (BalanceConfig, SolverDivergence, balance_residual, end_eigenvalue_residuals,
                             open_nnoid_domain, solve_nnoid, unitarity_residual)

tau, p = (21, 3, 32), (0.5, -0.5, 3)
print("balance residual:", np.max(np.abs(balance_residual(tau, p))))
cfg = BalanceConfig(tau, p)

for t in (1e-4, 1e-3):
    params, trace = solve_nnoid(cfg, t)
    print(f"t = {t}: unitarity {np.max(np.abs(unitarity_residual(params, cfg, tol=1e-12))):.1e}, "
          f"ends {np.max(end_eigenvalue_residuals(params, cfg)):.1e}, tau = {np.round(params.a[:, 0].real, 4)}")

dom = open_nnoid_domain(params, 0.1)
domain = DomainSpec("holed", (12, 24), r1=dom.radius, holes=dom.holes, delta=dom.delta)
mesh = sample_surface(nnoid_potential(params), domain, H3, sym_points_for(H3, 0.0), trunc=32)
print("mesh vertices valid:", int(mesh.valid.sum()), "of", mesh.validity.size, "(the rest lie in the holes)")

# the branch folds back before t = 0.01 for this configuration
try:
    solve_nnoid(cfg, 1e-2)
except SolverDivergence as err:
    print(f"continuation stopped at t = {err.trace.params.t:.4g} with residual {err.residual:.1e}")
