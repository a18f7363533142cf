"""Isosceles trinoids in all four space forms.

For each real form the monodromy group is conjugated into the twisted
unitary group by a positive loop X. The script reports the unitarity of the
conjugated generators, the closing residual at the Sym points and the local
geometry of the resulting surface. The last row has H = 1/2: its local
geometry is fine, but at these residues the ends do not close.
"""

from loopcmc.cli import sym_points_from_lambda0
from loopcmc.closing import check_closing, conjugate, trinoid_unitarizer
from loopcmc.frame import monodromy_rep
from loopcmc.loopalg import is_unitary
from loopcmc.pipeline import point_evaluator
from loopcmc.potential import TrinoidParams, trinoid_potential
from loopcmc.sym import geometry_check

N = 32
z0 = 0.3 + 0.2j

for form, a, b, lam0 in [("S3", 0.1, 0.1, 1j), ("AdS3", 0.1, 0.35, 1j), ("H3", 0.1, 0.35, 1.0),
                         ("dS3", 0.1, 0.1, 1.0), ("dS3", 0.05, 0.1, 3 ** -0.5)]:
    pot = trinoid_potential(TrinoidParams(a, b, form, lam0))
    rep = monodromy_rep(pot, 0.0, N, 1e-12)
    X = trinoid_unitarizer(rep.generators[0], rep.generators[1], form, extra=rep.generators[2:]).X
    gens = [conjugate(X, g) for g in rep.generators]
    unitary = max(is_unitary(g, form)[1] for g in gens)
    pts = sym_points_from_lambda0(form, lam0)
    closing = check_closing(gens, form, pts.lam0, pts.lam1, 1e-6)
    geo = geometry_check(point_evaluator(pot, form, pts, z0, unitarizer=X, trunc=N), z0, form)
    print(f"{form:5s} unitarity {unitary:.1e}  extrinsic {max(closing.extrinsic):.1e} closes {closing.closes}  "
          f"conformality {geo['conformality']:.1e}  H {abs(geo['H']):.6f} (table {abs(pts.H):.6f})")
