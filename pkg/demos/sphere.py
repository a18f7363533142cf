"""Round sphere in hyperbolic space from the nilpotent potential.

The potential has a single entry z in the lambda^-1 coefficient, so the
Iwasawa factor is known in closed form inside the unit disk. The script
compares the computed frame with it, then walks out along a ray and shows
where the factorization stops existing.
"""

import numpy as np

from loopcmc.factor import BigCellError, iwasawa
from loopcmc.loopalg import H3, MatrixLoop
from loopcmc.pipeline import DomainSpec, sample_surface
from loopcmc.potential import sphere_potential
from loopcmc.sym import SymPoints

N = 32

# inside the disk the frame is s [[1, z/lam], [conj(z) lam, 1]] with s = (1 - |z|^2)^(-1/2)
for z in (0.2, 0.5 + 0.3j, -0.8j):
    F = iwasawa(MatrixLoop.from_dict({0: np.eye(2), -1: [[0, z], [0, 0]]}, N), H3).unitary
    s = (1 - abs(z) ** 2) ** -0.5
    exact = MatrixLoop.from_dict({0: s * np.eye(2), -1: [[0, s * z], [0, 0]], 1: [[0, 0], [s * np.conj(z), 0]]}, N)
    print(f"z = {z}: frame error {F.max_diff(exact):.2e}")

# the unit circle is the ideal boundary: the factorization fails beyond it
for r in (0.95, 0.999, 1.001, 1.2):
    try:
        iwasawa(MatrixLoop.from_dict({0: np.eye(2), -1: [[0, r], [0, 0]]}, N), H3)
        print(f"|z| = {r}: in the big cell")
    except BigCellError:
        print(f"|z| = {r}: outside the big cell")

# a small mesh on the disk of radius 0.9
mesh = sample_surface(sphere_potential(), DomainSpec("disk", (8, 12), r1=0.9), H3, SymPoints(1.0, -1.0, H3, 0.0),
                      trunc=N)
print("valid vertices:", int(mesh.valid.sum()), "of", mesh.validity.size)
print("largest ball radius:", float(np.nanmax(np.linalg.norm(mesh.viz, axis=-1))))
