"""Dressing a de Sitter trinoid into a hyperbolic one.

At a real point mu where the dS3 monodromy is reducible, the generators share
an eigenvector. Dressing by the simple factor built from it turns the twisted
unitary frame into an untwisted one, so the dressed surface lives in H3 and
its monodromy is the original one conjugated by the simple factor.
"""

import numpy as np

from loopcmc.closing import (common_eigenvector, conjugate, conjugate_by_simple_factor, dress, reducible_lambda_set,
                             trinoid_unitarizer)
from loopcmc.factor import iwasawa
from loopcmc.frame import FramePath, integrate_samples, loop_around, monodromy_rep
from loopcmc.loopalg import MatrixLoop, eval_plus, grid, is_unitary
from loopcmc.potential import TrinoidParams, trinoid_potential

N = 32
a, lam0, z = 0.1, 1.0, 0.3 + 0.2j

pot = trinoid_potential(TrinoidParams(a, a, "dS3", lam0))
rep = monodromy_rep(pot, 0.0, N)
X = trinoid_unitarizer(rep.generators[0], rep.generators[1], "dS3").X
M0 = conjugate(X, rep.generators[0])
path = FramePath.polyline([0, z])
xphi = X @ MatrixLoop.from_samples(integrate_samples(pot, path, grid(N)), N)
phi_start, phi_end = iwasawa(xphi, "dS3"), iwasawa(M0 @ xphi, "dS3")

for mu in reducible_lambda_set(a, lam0, "dS3", window=(0.3, 1.0)):
    if abs(mu.imag) > 1e-12:
        continue
    xm = eval_plus(X, mu)
    mono = [xm @ integrate_samples(pot, loop_around(0.0, s, 0.5), np.array([mu]))[0] @ np.linalg.inv(xm)
            for s in (1.0, -1.0)]
    ell, col = common_eigenvector(mono)
    phi_mu = integrate_samples(pot, path, np.array([mu]))[0]
    frames = []
    for iw, pre_mu in ((phi_start, np.eye(2)), (phi_end, mono[0])):
        f_mu = pre_mu @ xm @ phi_mu @ np.linalg.inv(eval_plus(iw.positive, mu))
        frames.append(dress(mu, iw.unitary, ell, f_mu).dressed)
    moved = MatrixLoop.from_samples(frames[1].samples @ np.linalg.inv(frames[0].samples), N)
    print(f"mu = {mu.real:.5f}: shared eigenvector residual {col:.1e}")
    print(f"  dressed frame H3 unitarity {is_unitary(frames[0], 'H3')[1]:.1e}")
    print(f"  dressed monodromy vs conjugated original {moved.max_diff(conjugate_by_simple_factor(mu, M0)):.1e}")
