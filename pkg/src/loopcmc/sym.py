"""Evaluation formula, matrix models of the space forms, and visualization charts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .loopalg import MatrixLoop, get_form

J = np.diag([1.0, -1.0]).astype(complex)
E0 = np.diag([1j, -1j])
SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)

# real bases of the 4-dimensional real span of each matrix model
MODEL_BASES = {
    "S3": [I2, 1j * SIGMA1, 1j * SIGMA2, 1j * SIGMA3],
    "AdS3": [I2, 1j * SIGMA3, SIGMA1, SIGMA2],
    "H3": [I2, SIGMA1, SIGMA2, SIGMA3],
    "dS3": [I2, SIGMA3, 1j * SIGMA2, 1j * SIGMA1],
}


class MembershipError(ValueError):
    pass


class ChartError(ValueError):
    """Point lies on the pole set of a visualization chart."""


@dataclass(frozen=True)
class SymPoints:
    """Evaluation points and the mean curvature they produce."""

    lam0: complex
    lam1: complex
    form: object
    H: float

    def __post_init__(self):
        object.__setattr__(self, "form", get_form(self.form))


def table_mean_curvature(lam0: complex, lam1: complex, form) -> float:
    """Mean curvature of the evaluation-point pair (defined up to sign).

    ``i (lam1 + lam0)/(lam1 - lam0)`` for S3/AdS3 and
    ``(lam1 + lam0)/(lam1 - lam0)`` for H3/dS3.
    """
    form = get_form(form)
    v = (lam1 + lam0) / (lam1 - lam0)
    if form.delta == 1:
        v = 1j * v
    return float(np.real(v))


def sym_points_for(form, H: float = 0.0) -> SymPoints:
    """Canonical evaluation points for a target mean curvature.

    S3/AdS3: ``(1, -1)`` for ``H = 0``, otherwise ``(e^{i theta}, e^{-i theta})``
    with ``H = -cot(theta)``.  H3/dS3: ``(i, -i)`` for ``H = 0``, otherwise
    ``lam0 = sqrt((1 - H)/(1 + H))`` real and ``lam1 = -1/lam0``.

    Raises
    ------
    ValueError
        If ``|H| >= 1`` for H3/dS3.
    """
    form = get_form(form)
    H = float(H)
    if form.delta == 1:
        if H == 0:
            return SymPoints(1.0 + 0j, -1.0 + 0j, form, 0.0)
        theta = np.arctan2(1.0, -H)  # cot(theta) = -H, theta in (0, pi)
        return SymPoints(np.exp(1j * theta), np.exp(-1j * theta), form, H)
    if abs(H) >= 1:
        raise ValueError(f"|H| must be < 1 for {form}, got {H}")
    if H == 0:
        return SymPoints(1j, -1j, form, 0.0)
    l0 = np.sqrt((1 - H) / (1 + H))
    return SymPoints(complex(l0), complex(-1 / l0), form, H)


def model_membership(X, form) -> float:
    """Residual of the defining relation of the matrix model plus ``|det X - 1|``."""
    form = get_form(form)
    X = np.asarray(X, dtype=complex)
    Xh = np.conj(np.swapaxes(X, -1, -2))
    if form.name == "S3":
        rel = Xh @ X - I2
    elif form.name == "AdS3":
        rel = Xh @ J @ X - J
    elif form.name == "H3":
        rel = Xh - X
    else:
        rel = Xh - E0 @ X @ np.linalg.inv(E0)
    return float(np.max(np.abs(rel)) + np.max(np.abs(np.linalg.det(X) - 1)))


@dataclass
class ModelPoint:
    matrix: np.ndarray
    form: object
    residual: float
    lightcone: np.ndarray | None = None
    viz: np.ndarray | None = None
    branch: int = 1


def frame_values(F: MatrixLoop, pts: SymPoints, F0=None):
    """``(F(lam0), F(lam1))``.

    For the reflection ``lam -> -1/conj(lam)`` forms ``F(lam1)`` follows from
    ``F(lam0)`` through the star relation, avoiding Laurent sums far off the
    circle: ``F(lam1) = (eta F(lam0) eta^-1)^{-dagger}``.
    """
    form = pts.form
    F0 = F.eval(pts.lam0) if F0 is None else np.asarray(F0, dtype=complex)
    if form.delta == -1 and abs(pts.lam1 + 1 / np.conj(pts.lam0)) < 1e-12:
        eta = form.eta
        F1 = np.linalg.inv(np.conj((eta @ F0 @ np.linalg.inv(eta)).T))
    else:
        F1 = F.eval(pts.lam1)
    return F0, F1


def sym_matrix(F0, F1) -> np.ndarray:
    return np.asarray(F0) @ np.linalg.inv(F1)


def sym_evaluate(F: MatrixLoop, pts: SymPoints, F0=None, tol: float = 1e-6,
                 crossed: bool = False) -> ModelPoint:
    """``f = F(lam0) F(lam1)^{-1}`` with its membership residual.

    Raises
    ------
    MembershipError
        If the residual exceeds ``tol`` (an upstream unitarity failure).
    """
    F0, F1 = frame_values(F, pts, F0)
    if crossed and pts.form.delta == -1:
        # F* = -F on the other sheet: F(lam1) changes sign
        F1 = -F1
    X = sym_matrix(F0, F1)
    res = model_membership(X, pts.form)
    if res > tol:
        raise MembershipError(f"evaluation left the {pts.form} model (residual {res:.3e})")
    return ModelPoint(X, pts.form, res)


# ------------------------------------------------------------------ metric

def hat(y: np.ndarray) -> np.ndarray:
    return np.array([[y[1, 1], -y[0, 1]], [-y[1, 0], y[0, 0]]])


def inner(x, y, form) -> complex:
    """``<x, y> = s/2 tr(x hat(y))`` with ``s = +1`` for S3/dS3, ``-1`` for AdS3/H3."""
    form = get_form(form)
    return form.inner_sign * 0.5 * np.trace(np.asarray(x) @ hat(np.asarray(y)))


def metric_from_residue(B0: np.ndarray, xi_m1: np.ndarray, pts: SymPoints) -> float:
    """``v^2 = 2 (1/lam0 - 1/lam1)(lam0 - lam1) <alpha, alpha*>``, ``alpha = B0 xi_{-1} B0^{-1}``."""
    form = pts.form
    alpha = B0 @ xi_m1 @ np.linalg.inv(B0)
    eta = form.eta
    astar = -form.delta * eta @ np.conj(alpha.T) @ np.linalg.inv(eta)
    l0, l1 = pts.lam0, pts.lam1
    v2 = 2 * (1 / l0 - 1 / l1) * (l0 - l1) * inner(alpha, astar, form)
    return float(np.real(v2))


def metric_factor(pot, B: MatrixLoop, pts: SymPoints, z, tol: float = 1e-9) -> float:
    """Conformal factor ``v^2`` at ``z`` from the positive Iwasawa factor ``B``.

    Raises
    ------
    ValueError
        If ``v^2`` is not positive (signature error).
    """
    v2 = metric_from_residue(B.coeff(0), pot.residue(z), pts)
    if v2 <= tol:
        raise ValueError(f"non-positive metric factor {v2:.3e}")
    return v2


# ------------------------------------------------------- finite differences

def _coords(X, basis_inv):
    v = np.concatenate([np.real(X).ravel(), np.imag(X).ravel()])
    return basis_inv @ v


def _basis_data(form):
    basis = MODEL_BASES[get_form(form).name]
    mat = np.stack([np.concatenate([np.real(b).ravel(), np.imag(b).ravel()]) for b in basis], axis=1)
    pinv = np.linalg.pinv(mat)
    gram = np.array([[np.real(inner(a, b, form)) for b in basis] for a in basis])
    return basis, pinv, gram


def geometry_check(fpoint, z0: complex, form, h1: float = 1e-4, h2: float = 1e-3):
    """Finite-difference conformality and mean curvature at ``z0``.

    Parameters
    ----------
    fpoint : callable
        ``fpoint(z) -> 2x2 matrix`` in the model of ``form``; or a precomputed
        dict with keys ``(i, j)`` for the offsets ``z0 + h*(i + 1j*j)``.
    h1 : float
        Step for first derivatives (conformality and metric).
    h2 : float
        Step for the Laplacian.

    Returns
    -------
    dict
        ``conformality = |<f_z, f_z>| / v^2``, ``v2`` and ``H`` (signed by
        the numeric normal).
    """
    form = get_form(form)
    _basis, pinv, G = _basis_data(form)

    def c(z):
        return _coords(fpoint(z), pinv)

    f0 = c(z0)
    fx = (c(z0 + h1) - c(z0 - h1)) / (2 * h1)
    fy = (c(z0 + 1j * h1) - c(z0 - 1j * h1)) / (2 * h1)
    lap = (c(z0 + h2) + c(z0 - h2) + c(z0 + 1j * h2) + c(z0 - 1j * h2) - 4 * f0) / h2 ** 2
    gxx, gyy, gxy = fx @ G @ fx, fy @ G @ fy, fx @ G @ fy
    v2 = 0.5 * (gxx + gyy)
    fzfz = 0.25 * abs(gxx - gyy - 2j * gxy)
    # normal: G-orthogonal to f, f_x, f_y
    A = np.stack([G @ f0, G @ fx, G @ fy])
    _u, _s, vh = np.linalg.svd(A)
    n = vh[-1]
    nn = n @ G @ n
    n = n / np.sqrt(abs(nn))
    H = (lap @ G @ n) / (2 * v2)
    return {"conformality": float(fzfz / abs(v2)), "v2": float(v2), "H": float(H)}


# ------------------------------------------------------------------ charts

def h3_lightcone(X) -> np.ndarray:
    """Lightcone coordinates ``(x0, x1, x2, x3, 1)`` of a Hermitian unimodular matrix."""
    X = np.asarray(X, dtype=complex)
    x0 = 0.5 * np.real(X[0, 0] + X[1, 1])
    x1 = 0.5 * np.real(X[0, 0] - X[1, 1])
    x2 = np.real(X[0, 1])
    x3 = np.imag(X[0, 1])
    return np.array([x0, x1, x2, x3, 1.0])


def h3_matrix_to_ball(X, boundary_tol: float = 1e-12):
    """Poincare-ball point and sheet (``+1`` positive definite, ``-1`` negative definite).

    Raises
    ------
    ChartError
        If ``x0`` vanishes (the ideal boundary).
    """
    x = h3_lightcone(X)
    if abs(x[0]) < boundary_tol:
        raise ChartError("point at the ideal boundary")
    branch = 1 if x[0] > 0 else -1
    return x[1:4] / (1 + abs(x[0])), branch


def h3_lightcone_chart(X) -> np.ndarray:
    """Chart of H3 u S2 u H3 onto R^3: ball for the positive sheet, its exterior for the negative one."""
    x = h3_lightcone(X)
    s = 1.0 if x[0] >= 0 else -1.0
    den = abs(x[0]) + s
    if abs(den) < 1e-14:
        raise ChartError("lightcone chart pole")
    return s * x[1:4] / den


def h3_halfspace(X) -> np.ndarray:
    """Upper half-space model ``(x1, x2, 1)/(x0 - x3)``."""
    x = h3_lightcone(X)
    den = x[0] - x[3]
    if abs(den) < 1e-14:
        raise ChartError("half-space chart pole")
    return np.array([x[1], x[2], 1.0]) / den


def ball_to_h3_matrix(b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    r2 = float(b @ b)
    x0 = (1 + r2) / (1 - r2)
    x = 2 * b / (1 - r2)
    return np.array([[x0 + x[0], x[1] + 1j * x[2]], [x[1] - 1j * x[2], x0 - x[0]]])


def ads3_lightcone(X) -> np.ndarray:
    """Lightcone coordinates of an SU(1,1) matrix ``[[x0 + i x1, x2 - i x3], [x2 + i x3, x0 - i x1]]``."""
    X = np.asarray(X, dtype=complex)
    return np.array([np.real(X[0, 0]), np.imag(X[0, 0]), np.real(X[0, 1]), -np.imag(X[0, 1]), 1.0])


def ads3_stereographic(X, pole_tol: float = 1e-12) -> np.ndarray:
    """Stereographic projection ``(x1, x2, x3)/(x0 + x4)`` into Minkowski space.

    Raises
    ------
    ChartError
        On the pole set ``x0 + x4 = 0``.
    """
    x = ads3_lightcone(X)
    den = x[0] + x[4]
    if abs(den) < pole_tol:
        raise ChartError("stereographic pole")
    return x[1:4] / den


def ds3_lightcone(X) -> np.ndarray:
    """Coordinates of ``[[x0 + x1, x2 + i x3], [-(x2 - i x3), x0 - x1]]`` (model ``X^dagger = e0 X e0^-1``)."""
    X = np.asarray(X, dtype=complex)
    x0 = 0.5 * np.real(X[0, 0] + X[1, 1])
    x1 = 0.5 * np.real(X[0, 0] - X[1, 1])
    return np.array([x0, x1, np.real(X[0, 1]), np.imag(X[0, 1]), 1.0])


def ds3_stereographic(X, pole_tol: float = 1e-12) -> np.ndarray:
    x = ds3_lightcone(X)
    den = x[0] + x[4]
    if abs(den) < pole_tol:
        raise ChartError("stereographic pole")
    return x[1:4] / den


def s3_stereographic(X, pole_tol: float = 1e-12) -> np.ndarray:
    """``SU2`` matrix ``[[x0 + i x1, x2 + i x3], [-x2 + i x3, x0 - i x1]]`` to ``(x1, x2, x3)/(1 + x0)``."""
    X = np.asarray(X, dtype=complex)
    x0, x1 = np.real(X[0, 0]), np.imag(X[0, 0])
    x2, x3 = np.real(X[0, 1]), np.imag(X[0, 1])
    if abs(1 + x0) < pole_tol:
        raise ChartError("stereographic pole")
    return np.array([x1, x2, x3]) / (1 + x0)


def lightcone(X, form) -> np.ndarray:
    name = get_form(form).name
    if name == "H3":
        return h3_lightcone(X)
    if name == "AdS3":
        return ads3_lightcone(X)
    if name == "dS3":
        return ds3_lightcone(X)
    X = np.asarray(X, dtype=complex)
    return np.array([np.real(X[0, 0]), np.imag(X[0, 0]), np.real(X[0, 1]), np.imag(X[0, 1]), 1.0])


def visualize(X, form, viz: str = "default", crossed: bool = False):
    """Map a model point to R^3 (or R^{1,2}); returns ``(coords, boundary_proximity)``.

    ``viz`` is ``ball``, ``halfspace``, ``stereo``, ``lightcone`` or
    ``default`` (ball for H3, stereographic otherwise).
    """
    name = get_form(form).name
    x = lightcone(X, form)
    if name == "H3":
        prox = abs(x[0]) ** -1 if x[0] != 0 else np.inf
        if viz == "halfspace":
            return h3_halfspace(X), prox
        if viz == "lightcone" or crossed:
            return h3_lightcone_chart(X), prox
        return h3_matrix_to_ball(X)[0], prox
    if name == "AdS3":
        return ads3_stereographic(X), abs(x[0] + x[4])
    if name == "dS3":
        return ds3_stereographic(X), abs(x[0] + x[4])
    return s3_stereographic(X), abs(1 + x[0])
