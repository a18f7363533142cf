"""Holomorphic frames ``d Phi = Phi xi`` along paths, and monodromy.

All spectral values of the collocation grid are integrated together as one
complex ODE system, so the endpoint frame is a :class:`MatrixLoop` directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .loopalg import DEFAULT_TRUNC, MatrixLoop, get_form, grid
from .potential import Potential

TOL_ODE = 1e-10


class FrameError(RuntimeError):
    """ODE failure: step-size underflow near a puncture or determinant drift."""


@dataclass(frozen=True)
class Line:
    z0: complex
    z1: complex

    def point(self, s):
        return self.z0 + s * (self.z1 - self.z0)

    def speed(self, s):
        return self.z1 - self.z0 + 0 * s


@dataclass(frozen=True)
class Arc:
    """Circular arc ``center + radius * exp(i theta)``, theta from ``th0`` to ``th1``."""

    center: complex
    radius: float
    th0: float
    th1: float

    def point(self, s):
        return self.center + self.radius * np.exp(1j * (self.th0 + s * (self.th1 - self.th0)))

    def speed(self, s):
        return 1j * (self.th1 - self.th0) * (self.point(s) - self.center)

    @property
    def z0(self):
        return self.point(0.0)

    @property
    def z1(self):
        return self.point(1.0)


@dataclass
class FramePath:
    """Piecewise-smooth path; ``Phi0`` is the initial frame (identity if None)."""

    segments: list
    basepoint: complex = 0.0
    Phi0: MatrixLoop | None = None

    @classmethod
    def polyline(cls, points, Phi0=None):
        pts = [complex(p) for p in points]
        segs = [Line(a, b) for a, b in zip(pts[:-1], pts[1:]) if a != b]
        return cls(segs, pts[0], Phi0)

    @property
    def endpoint(self) -> complex:
        return self.segments[-1].z1 if self.segments else self.basepoint

    def clearance(self, punctures, n: int = 64) -> float:
        best = np.inf
        s = np.linspace(0, 1, n)
        for seg in self.segments:
            zs = seg.point(s)
            for p in punctures:
                if np.isfinite(p):
                    best = min(best, float(np.min(np.abs(zs - p))))
        return best


@dataclass
class MonodromyRep:
    generators: list
    basepoint: complex
    punctures: list = field(default_factory=list)

    def product(self) -> MatrixLoop:
        out = self.generators[0]
        for g in self.generators[1:]:
            out = out @ g
        return out


def _integrate_segment(pot: Potential, seg, lam, y0, tol, t_eval=None):
    m = lam.size

    def rhs(s, y):
        phi = y.reshape(m, 2, 2)
        xi = pot(seg.point(s), lam) * seg.speed(s)
        return (phi @ xi).ravel()

    sol = solve_ivp(rhs, (0.0, 1.0), y0.ravel(), method="DOP853", rtol=tol, atol=tol,
                    t_eval=t_eval)
    if not sol.success:
        raise FrameError(f"frame integration failed: {sol.message}")
    return sol


def integrate_samples(pot: Potential, path: FramePath, lam: np.ndarray,
                      phi0: np.ndarray | None = None, tol: float = TOL_ODE) -> np.ndarray:
    """Integrate the frame along ``path`` at spectral values ``lam``.

    Returns the endpoint values as an array of shape ``lam.shape + (2, 2)``.
    """
    lam = np.asarray(lam, dtype=complex).ravel()
    y = np.broadcast_to(np.eye(2, dtype=complex), (lam.size, 2, 2)).copy() if phi0 is None else \
        np.array(phi0, dtype=complex).reshape(lam.size, 2, 2)
    for seg in path.segments:
        sol = _integrate_segment(pot, seg, lam, y, tol)
        y = sol.y[:, -1].reshape(lam.size, 2, 2)
    return y


def integrate_frame(pot: Potential, path: FramePath, trunc: int = DEFAULT_TRUNC,
                    tol: float = TOL_ODE, det_tol: float = 1e-8) -> MatrixLoop:
    """Frame at the end of ``path`` as a loop, ``Phi(end) = Phi0 * (path-ordered solution)``.

    Parameters
    ----------
    pot : Potential
    path : FramePath
    trunc : int
        Loop truncation; the grid has ``4 (trunc + 1)`` points.
    tol : float
        Relative and absolute tolerance of the Runge-Kutta integrator.

    Raises
    ------
    FrameError
        On integrator failure or if ``det Phi`` drifts from 1 by more than ``det_tol``.
    """
    lam = grid(trunc)
    phi0 = None if path.Phi0 is None else path.Phi0.retrunc(trunc).samples
    y = integrate_samples(pot, path, lam, phi0, tol)
    drift = float(np.max(np.abs(np.linalg.det(y) - 1)))
    if drift > det_tol:
        raise FrameError(f"determinant drift {drift:.2e} along path")
    return MatrixLoop.from_samples(y, trunc)


def integrate_polyline_nodes(pot: Potential, nodes, lam, phi0=None, tol: float = TOL_ODE) -> np.ndarray:
    """Frame values at every node of a polyline, shape ``(len(nodes), M, 2, 2)``.

    Used for meshing: one integration per grid row instead of per vertex.
    """
    nodes = [complex(z) for z in nodes]
    lam = np.asarray(lam, dtype=complex).ravel()
    m = lam.size
    y = np.broadcast_to(np.eye(2, dtype=complex), (m, 2, 2)).copy() if phi0 is None else \
        np.array(phi0, dtype=complex).reshape(m, 2, 2)
    out = np.empty((len(nodes), m, 2, 2), dtype=complex)
    out[0] = y
    for i in range(1, len(nodes)):
        if nodes[i] == nodes[i - 1]:
            out[i] = y
            continue
        sol = _integrate_segment(pot, Line(nodes[i - 1], nodes[i]), lam, y, tol)
        y = sol.y[:, -1].reshape(m, 2, 2)
        out[i] = y
    return out


def loop_around(basepoint: complex, puncture: complex, radius: float, waypoints=(),
                orientation: int = 1) -> FramePath:
    """Simple closed path: to the circle around ``puncture`` via ``waypoints``, around it, back."""
    base = complex(basepoint)
    pts = [base] + [complex(w) for w in waypoints]
    if np.isinf(puncture):
        raise ValueError("use loop_around_infinity for the puncture at infinity")
    last = pts[-1]
    d = last - puncture
    if d == 0:
        raise ValueError("waypoint coincides with puncture")
    th = float(np.angle(d))
    entry = puncture + radius * np.exp(1j * th)
    segs = [Line(a, b) for a, b in zip(pts[:-1], pts[1:])]
    if abs(entry - last) > 0:
        segs.append(Line(last, entry))
    segs.append(Arc(puncture, radius, th, th + orientation * 2 * np.pi))
    back = [Line(s.z1, s.z0) for s in reversed(segs[:-1])]
    return FramePath(segs + back, base)


def loop_around_infinity(basepoint: complex, radius: float, start_angle: float = -np.pi / 2) -> FramePath:
    """Clockwise circle of given radius (positively oriented about infinity)."""
    base = complex(basepoint)
    entry = radius * np.exp(1j * start_angle)
    segs = [Line(base, entry), Arc(0.0, radius, start_angle, start_angle - 2 * np.pi), Line(entry, base)]
    return FramePath(segs, base)


def monodromy(pot: Potential, puncture_index: int, basepoint: complex = 0.0, trunc: int = DEFAULT_TRUNC,
              radius: float | None = None, waypoints=(), tol: float = TOL_ODE) -> MatrixLoop:
    """Monodromy ``M = Phi(gamma . z0) Phi(z0)^{-1}`` with ``Phi(z0) = 1``.

    ``gamma`` is a positively oriented loop around ``pot.punctures[puncture_index]``.
    """
    p = pot.punctures[puncture_index]
    others = [q for i, q in enumerate(pot.punctures) if i != puncture_index and np.isfinite(q)]
    if np.isinf(p):
        r = radius or (max([abs(q) for q in others] + [abs(basepoint)]) + 1.0)
        path = loop_around_infinity(basepoint, r)
    else:
        if radius is None:
            gaps = [abs(p - q) for q in others] + [abs(p - basepoint)]
            radius = 0.5 * min(gaps) if gaps else 1.0
            radius = min(radius, abs(p - basepoint)) if abs(p - basepoint) > 0 else radius
        if abs(basepoint - p) == radius and not waypoints:
            # basepoint on the circle: integrate the circle only
            th = float(np.angle(basepoint - p))
            path = FramePath([Arc(p, radius, th, th + 2 * np.pi)], basepoint)
        else:
            path = loop_around(basepoint, p, radius, waypoints)
    return integrate_frame(pot, path, trunc, tol)


def monodromy_rep(pot: Potential, basepoint: complex = 0.0, trunc: int = DEFAULT_TRUNC,
                  tol: float = TOL_ODE, radii=None, waypoints=None) -> MonodromyRep:
    """Monodromy generators for every listed puncture, in listed order."""
    gens = []
    for i in range(len(pot.punctures)):
        r = None if radii is None else radii[i]
        w = () if waypoints is None else waypoints[i]
        gens.append(monodromy(pot, i, basepoint, trunc, r, w, tol))
    return MonodromyRep(gens, basepoint, list(pot.punctures))


def _continuous_sqrt(x: np.ndarray) -> np.ndarray:
    r = np.sqrt(np.asarray(x, dtype=complex))
    if r.ndim == 0:
        return r
    flat = r.ravel().copy()
    for j in range(1, flat.size):
        if abs(flat[j] + flat[j - 1]) < abs(flat[j] - flat[j - 1]):
            flat[j] = -flat[j]
    return flat.reshape(r.shape)


def delaunay_nu(q: float, lam, form="H3"):
    """Monodromy exponent of a Delaunay cylinder; eigenvalues are ``exp(+-2 pi nu)``.

    H3: ``nu = (i/2) sqrt((lam - q)(-1/lam - q) / (q^2 - 1))``.
    AdS3: ``nu = sqrt(-det A)`` with ``det A = (q^2 + 1 - q (lam + 1/lam)) / (q^2 + 1)``.
    Principal branch; for arrays the sign follows the sample order continuously.
    """
    form = get_form(form)
    lam = np.asarray(lam, dtype=complex)
    if form.name == "AdS3":
        return _continuous_sqrt(-(q * q + 1 - q * (lam + 1 / lam)) / (q * q + 1))
    if q * q == 1:
        raise ValueError("q^2 = 1 is degenerate")
    return 0.5j * _continuous_sqrt((lam - q) * (-1 / lam - q) / (q * q - 1))


def fuchsian_nu(q_res: float, kappa):
    """End exponent ``1/2 - (1/2) sqrt(1 + q_res kappa)`` (continuous branch)."""
    return 0.5 - 0.5 * _continuous_sqrt(1 + q_res * np.asarray(kappa, dtype=complex))


def end_eigenvalue_check(M: MatrixLoop, q_res: float | None = None, kappa=None, lam=None,
                         nu=None) -> float:
    """Max deviation of the half-trace of ``M`` from its predicted value.

    With ``q_res`` and ``kappa`` (callable of ``lam`` or array on ``lam``) the
    prediction is ``cos(2 pi nu_k)``, ``nu_k = 1/2 - 1/2 sqrt(1 + q_res kappa)``.
    With ``nu`` (Delaunay exponent, callable or array) it is ``cosh(2 pi nu)``.
    """
    lam = M.points if lam is None else np.asarray(lam, dtype=complex)
    half = 0.5 * np.trace(M.eval(lam), axis1=-2, axis2=-1)
    if nu is not None:
        v = nu(lam) if callable(nu) else np.asarray(nu)
        pred = np.cosh(2 * np.pi * v)
    else:
        k = kappa(lam) if callable(kappa) else np.asarray(kappa)
        pred = np.cos(2 * np.pi * fuchsian_nu(q_res, k))
    return float(np.max(np.abs(half - pred)))
