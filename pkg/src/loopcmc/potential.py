"""Holomorphic potentials ``xi = A(z, lambda) dz`` used by the constructions.

Each :class:`Potential` is a closed-form callable ``pot(z, lam)`` returning
the ``dz`` coefficient as an array of shape ``lam.shape + (2, 2)``, together
with puncture data and parameters.  ``lam`` is usually the full collocation
grid so that a single ODE integration advances every spectral value at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .loopalg import ADS3, get_form, grid

NNOID_DEGREE = 16


@dataclass
class Potential:
    """Matrix 1-form ``func(z, lam) dz``.

    Attributes
    ----------
    name : str
    func : callable
        ``func(z, lam)`` with scalar ``z`` and array ``lam``.
    punctures : list of complex
        Finite punctures; ``inf`` is listed as ``np.inf`` when relevant.
    lambda_degrees : (int, int)
        Lowest and highest power of ``lambda``.
    params : dict
        Structured description (also used for reports and config files).
    """

    name: str
    func: Callable
    punctures: list = field(default_factory=list)
    lambda_degrees: tuple = (-1, -1)
    params: dict = field(default_factory=dict)

    def __call__(self, z, lam):
        lam = np.asarray(lam, dtype=complex)
        return self.func(complex(z), lam)

    def lambda_coeffs(self, z, trunc: int = 8) -> dict:
        """Laurent coefficients in ``lambda`` at fixed ``z`` (by sampling)."""
        lam = grid(trunc)
        vals = self(z, lam)
        m = lam.size
        k = np.arange(-trunc, trunc + 1)
        # direct DFT; the grids here are tiny
        basis = np.exp(-1j * np.outer(k, np.angle(lam)))
        co = np.tensordot(basis, vals, axes=([1], [0])) / m
        return {int(kk): co[i] for i, kk in enumerate(k)}

    def residue(self, z) -> np.ndarray:
        """The ``lambda**-1`` coefficient ``xi_{-1}`` at ``z``."""
        return self.lambda_coeffs(z)[-1]

    def finite_punctures(self) -> list:
        return [p for p in self.punctures if np.isfinite(p)]

    def check_gwr(self, zs, tol: float = 1e-10) -> float:
        """Largest violation of the potential conditions at sample points.

        Checks that only a simple pole in ``lambda`` occurs, that the
        residue is nilpotent (det 0) and that it does not vanish.
        """
        worst = 0.0
        for z in zs:
            co = self.lambda_coeffs(z)
            below = max(np.max(np.abs(co[k])) for k in co if k < -1)
            res = co[-1]
            worst = max(worst, float(below), abs(np.linalg.det(res)))
            if np.max(np.abs(res)) < tol:
                worst = max(worst, 1.0)
        return worst


def _stack(a, b, c, d):
    out = np.empty(np.broadcast(a, b, c, d).shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a
    out[..., 0, 1] = b
    out[..., 1, 0] = c
    out[..., 1, 1] = d
    return out


def sphere_potential() -> Potential:
    """Totally geodesic disk / round sphere: ``xi = [[0, 1/lam], [0, 0]] dz``."""

    def func(z, lam):
        zero = np.zeros_like(lam)
        return _stack(zero, 1 / lam, zero, zero)

    return Potential("sphere", func, [], (-1, -1), {})


def delaunay_matrix_h3(q: float, lam) -> np.ndarray:
    """``A(lam)`` of the hyperbolic Delaunay potential."""
    lam = np.asarray(lam, dtype=complex)
    s = 1.0 / (2.0 * np.sqrt(q * q - 1.0))
    zero = np.zeros_like(lam)
    return _stack(zero, s * (1 / lam + q), s * (lam - q), zero)


def delaunay_potential_h3(q: float) -> Potential:
    """``xi = i A dz / z`` with ``A = (1/(2 sqrt(q^2-1))) [[0, 1/lam + q], [lam - q, 0]]``.

    Raises
    ------
    ValueError
        If ``|q| <= 1``.
    """
    q = float(q)
    if abs(q) <= 1:
        raise ValueError(f"Delaunay parameter must satisfy |q| > 1, got {q}")

    def func(z, lam):
        return 1j * delaunay_matrix_h3(q, lam) / z

    return Potential("delaunay-h3", func, [0.0, np.inf], (-1, 1), {"q": q})


def _ads3_b(q: float, lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=complex)
    s = 1.0 / (2.0 * np.sqrt(q * q + 1.0))
    w = np.sqrt(2.0 * (q * q + 1.0))
    one = np.ones_like(lam)
    return _stack(1j * w * one, 1 / lam + q, lam + q, -1j * w * one) * s


def lie_star(func: Callable, lam, form) -> np.ndarray:
    """Lie-algebra star of a loop given as a callable, evaluated at ``lam``.

    ``X*(lam) = -eta X(delta / conj(lam))^dagger eta^-1``, the infinitesimal
    version of the group star.
    """
    form = get_form(form)
    lam = np.asarray(lam, dtype=complex)
    vals = func(form.delta / np.conj(lam))
    out = -np.conj(np.swapaxes(vals, -1, -2))
    if form.epsilon == -1:
        out = out.copy()
        out[..., 0, 1] *= -1
        out[..., 1, 0] *= -1
    return out


def delaunay_matrix_ads3(q: float, lam) -> np.ndarray:
    """``A = B + B*`` for the anti-de Sitter Delaunay potential."""
    return _ads3_b(q, lam) + lie_star(lambda mu: _ads3_b(q, mu), lam, ADS3)


def delaunay_potential_ads3(q: float) -> Potential:
    """``xi = A i dz / z`` with ``A = B + B*`` (AdS3 Delaunay cylinder)."""
    q = float(q)

    def func(z, lam):
        return 1j * delaunay_matrix_ads3(q, lam) / z

    return Potential("delaunay-ads3", func, [0.0, np.inf], (-1, 1), {"q": q})


def smyth_potential(n: int, c: float) -> Potential:
    """``xi = [[0, 1/lam], [c z**n, 0]] dz``."""
    n = int(n)
    if n < 1:
        raise ValueError("Smyth order n must be a positive integer")
    if c == 0:
        raise ValueError("Smyth constant c must be nonzero")

    def func(z, lam):
        zero = np.zeros_like(lam)
        return _stack(zero, 1 / lam, c * z ** n + zero, zero)

    return Potential("smyth", func, [np.inf], (-1, 0), {"n": n, "c": float(c)})


@dataclass
class TrinoidParams:
    """Isosceles trinoid data: quadratic residues ``a`` (at z = +-1), ``b`` (at inf)."""

    a: float
    b: float
    form: object = "H3"
    lambda0: complex = 1.0

    def __post_init__(self):
        self.form = get_form(self.form)
        lam0 = complex(self.lambda0)
        if self.a == 0:
            raise ValueError("trinoid residue a must be nonzero")
        if lam0 == 0:
            raise ValueError("lambda0 must be nonzero")
        if self.form.delta == 1 and abs(abs(lam0) - 1) > 1e-12:
            raise ValueError(f"lambda0 must be unimodular for {self.form}, got {lam0}")
        if self.form.delta == -1 and abs(lam0.imag) > 1e-12:
            raise ValueError(f"lambda0 must be real for {self.form}, got {lam0}")
        self.lambda0 = lam0 if self.form.delta == 1 else complex(lam0.real)


def trinoid_f(params: TrinoidParams, lam):
    lam = np.asarray(lam, dtype=complex)
    l0 = params.lambda0
    if params.form.delta == 1:
        return (lam - l0) * (lam - 1 / l0)
    return (lam - l0) * (lam + 1 / l0)


def trinoid_q(a: float, b: float, z):
    """``Q = (4a + b (z^2 - 1)) / (z^2 - 1)^2``."""
    w = z * z - 1
    return (4 * a + b * w) / (w * w)


def trinoid_potential(params: TrinoidParams) -> Potential:
    """``xi = [[0, 1/lam], [f(lam) Q(z), 0]] dz`` with ends at ``z = 1, -1, inf``."""

    def func(z, lam):
        zero = np.zeros_like(lam)
        return _stack(zero, 1 / lam, trinoid_f(params, lam) * trinoid_q(params.a, params.b, z), zero)

    meta = {"a": params.a, "b": params.b, "form": params.form.name, "lambda0": params.lambda0}
    return Potential("trinoid", func, [1.0, -1.0, np.inf], (-1, 2), meta)


def quadratic_residue(qfun, z0, radius: float = 1e-2, npts: int = 64) -> complex:
    """Coefficient of ``(z - z0)**-2`` of a meromorphic ``qfun`` by contour integral.

    For ``z0 = inf`` the residue in the coordinate ``w = 1/z`` is returned,
    i.e. the coefficient of ``w**-2`` in ``Q(1/w) w**-4``.
    """
    th = 2 * np.pi * np.arange(npts) / npts
    if np.isinf(z0):
        w = radius * np.exp(1j * th)
        vals = qfun(1 / w) * w ** -4
        return complex(np.mean(vals * w ** 2))
    zz = z0 + radius * np.exp(1j * th)
    return complex(np.mean(qfun(zz) * (zz - z0) ** 2))


@dataclass
class NnoidParams:
    """Parameters of the perturbed sphere potential for n-noids.

    ``a``, ``b``, ``z`` are arrays of shape ``(n, D + 1)`` holding power-series
    coefficients in ``lambda`` (constant term first).
    """

    tau: np.ndarray
    p: np.ndarray
    t: float = 0.0
    a: np.ndarray = None
    b: np.ndarray = None
    z: np.ndarray = None
    degree: int = NNOID_DEGREE

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.p = np.asarray(self.p, dtype=complex)
        n, d = self.tau.size, self.degree
        if self.a is None:
            self.a, self.b, self.z = initial_series(self.tau, self.p, d)
        self.a = np.asarray(self.a, dtype=complex).reshape(n, d + 1)
        self.b = np.asarray(self.b, dtype=complex).reshape(n, d + 1)
        self.z = np.asarray(self.z, dtype=complex).reshape(n, d + 1)

    @property
    def n(self) -> int:
        return self.tau.size

    def copy(self, **kw) -> "NnoidParams":
        base = dict(tau=self.tau.copy(), p=self.p.copy(), t=self.t, a=self.a.copy(),
                    b=self.b.copy(), z=self.z.copy(), degree=self.degree)
        base.update(kw)
        return NnoidParams(**base)

    def series(self, lam):
        """Evaluate ``a_k, b_k, z_k`` at ``lam``; each result has shape ``(n,) + lam.shape``."""
        lam = np.asarray(lam, dtype=complex)
        out = []
        for c in (self.a, self.b, self.z):
            acc = np.zeros((self.n,) + lam.shape, dtype=complex)
            for j in range(self.degree, -1, -1):
                acc = acc * lam + c[:, j].reshape((self.n,) + (1,) * lam.ndim)
            out.append(acc)
        return out


def initial_series(tau, p, degree: int = NNOID_DEGREE):
    """The t = 0 data: ``a_k = tau_k``, ``b_k = 2 tau_k conj(p_k)/(1 - |p_k|^2)``, ``z_k = p_k``."""
    tau = np.asarray(tau, dtype=float)
    p = np.asarray(p, dtype=complex)
    n = tau.size
    a = np.zeros((n, degree + 1), dtype=complex)
    b = np.zeros_like(a)
    z = np.zeros_like(a)
    a[:, 0] = tau
    b[:, 0] = 2 * tau * np.conj(p) / (1 - np.abs(p) ** 2)
    z[:, 0] = p
    return a, b, z


def nnoid_omega(params: NnoidParams, z, lam):
    """``omega = sum_k a_k/(z - z_k)^2 + b_k/(z - z_k)`` at fixed ``z`` over ``lam``."""
    a, b, zk = params.series(lam)
    d = z - zk
    return np.sum(a / d ** 2 + b / d, axis=0)


def nnoid_potential(params: NnoidParams) -> Potential:
    """Perturbed sphere potential ``[[0, 1/lam], [i t (lam^2 + 1) omega, 0]] dz``.

    The factor ``i`` makes the first-order monodromy unitary for real
    weights; at ``t = 0`` this is the sphere potential.
    """
    zk0 = params.z[:, 0]
    for i in range(params.n):
        for j in range(i):
            if abs(zk0[i] - zk0[j]) < 1e-12:
                raise ValueError("colliding n-noid punctures")
    t = float(params.t)

    def func(z, lam):
        zero = np.zeros_like(lam)
        low = 1j * t * (lam * lam + 1) * nnoid_omega(params, z, lam) if t else zero
        return _stack(zero, 1 / lam, low, zero)

    meta = {"n": params.n, "t": t, "tau": params.tau.tolist(), "p": params.p.tolist()}
    return Potential("nnoid", func, list(zk0), (-1, 2 + params.degree), meta)


def hopf_leading_term(pot: Potential):
    """Return ``z -> coefficient of lambda**-1 in det(xi / dz)``."""

    def h(z):
        lam = grid(8)
        det = np.linalg.det(pot(z, lam))
        k = -1
        return complex(np.mean(det * lam ** (-k)))

    return h
