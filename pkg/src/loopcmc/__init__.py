"""Loop-group construction of constant mean curvature surfaces in the 3-dimensional space forms.

Modules
-------
loopalg    truncated Laurent loops, real forms and star involutions
factor     Birkhoff and Iwasawa factorizations, scalar sign map
potential  holomorphic potentials (sphere, Delaunay, Smyth, trinoid, n-noid)
frame      frame integration and monodromy
closing    closing conditions, unitarizers, trace polynomial, dressing
traizet    Newton solver for n-noid potentials with unitary monodromy
sym        evaluation formula, matrix models, geometry checks, charts
pipeline   meshing, export and reports
"""

__version__ = "0.1.0"
