"""Closing conditions, trace polynomial, trinoid unitarization and dressing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .factor import DivisorError, scalar_sign, sqrt_plus
from .loopalg import MatrixLoop, ScalarLoop, get_form, grid, star_samples


class SignMismatchError(ValueError):
    """The sign of ``q/p*`` is not the one required by the real form."""

    def __init__(self, message: str, epsilon: int, required: int):
        super().__init__(message)
        self.epsilon = epsilon
        self.required = required


class DressingError(ValueError):
    pass


@dataclass
class ClosingReport:
    intrinsic: list
    extrinsic: list
    signs: list
    tol: float

    @property
    def closes(self) -> bool:
        return max(self.intrinsic, default=0.0) <= self.tol and max(self.extrinsic, default=0.0) <= self.tol

    def lines(self) -> list:
        out = [f"closes: {self.closes}",
               f"intrinsic_max: {max(self.intrinsic, default=0.0):.3e}",
               f"extrinsic_max: {max(self.extrinsic, default=0.0):.3e}"]
        for i, (a, b, s) in enumerate(zip(self.intrinsic, self.extrinsic, self.signs)):
            out.append(f"generator_{i}: intrinsic {a:.3e} extrinsic {b:.3e} value {s}")
        return out


def check_closing(M_list, form, lam0, lam1, tol: float = 1e-7) -> ClosingReport:
    """Intrinsic (``M* = M``) and extrinsic (``M(lam_i) = +-1``) residuals per generator.

    The extrinsic residual of a generator is the worse of the two evaluation
    points, each measured against the nearer of ``+1`` and ``-1``; the sign
    reported is the one at ``lam0``.
    """
    form = get_form(form)
    intr, extr, signs = [], [], []
    eye = np.eye(2)
    for M in M_list:
        s = M.samples
        intr.append(float(np.max(np.abs(star_samples(s, form) - s))))
        worst = 0.0
        sign0 = None
        for lam in (lam0, lam1):
            v = M.eval(complex(lam))
            dp, dm = np.max(np.abs(v - eye)), np.max(np.abs(v + eye))
            if sign0 is None:
                sign0 = "+1" if dp <= dm else "-1"
            worst = max(worst, float(min(dp, dm)))
        extr.append(worst)
        signs.append(sign0)
    return ClosingReport(intr, extr, signs, tol)


def trace_polynomial(t0, t1, t2):
    """``1 - t0^2 - t1^2 - t2^2 + 2 t0 t1 t2`` for arrays or :class:`ScalarLoop` values."""
    if isinstance(t0, ScalarLoop):
        n = max(t0.trunc, t1.trunc, t2.trunc)
        a, b, c = (t.retrunc(n).samples for t in (t0, t1, t2))
        return ScalarLoop.from_samples(1 - a * a - b * b - c * c + 2 * a * b * c, n)
    t0, t1, t2 = (np.asarray(t, dtype=complex) for t in (t0, t1, t2))
    return 1 - t0 ** 2 - t1 ** 2 - t2 ** 2 + 2 * t0 * t1 * t2


def kappa_values(f_vals, lam):
    """``kappa = 4 f(lam) / lam``."""
    return 4 * np.asarray(f_vals) / np.asarray(lam)


def halftrace_values(q_res: float, kappa):
    """``cos(2 pi nu)`` with ``nu = 1/2 - 1/2 sqrt(1 + q kappa)``; even in the root, so branch-free."""
    return -np.cos(np.pi * np.sqrt(1 + q_res * np.asarray(kappa, dtype=complex)))


def halftraces_from_residues(q0: float, q1: float, q2: float, f: ScalarLoop):
    """Half-trace loops of the three end monodromies predicted from the residues."""
    lam = f.points
    kap = kappa_values(f.samples, lam)
    return tuple(ScalarLoop.from_samples(halftrace_values(q, kap), f.trunc) for q in (q0, q1, q2))


def phi_leading_coefficient(q0: float, q1: float, q2: float) -> float:
    """Coefficient ``c`` of ``kappa^4`` in the expansion of the trace polynomial at ``kappa = 0``."""
    return (np.pi ** 4 / 64) * (q0 + q1 + q2) * (-q0 + q1 + q2) * (q0 - q1 + q2) * (q0 + q1 - q2)


@dataclass
class MonodromyEntries:
    """``M0 = [[r, p lam], [-q / lam, rstar]]`` read off a trinoid monodromy."""

    p: ScalarLoop
    q: ScalarLoop
    r: ScalarLoop
    rstar: ScalarLoop


def extract_pqr(M0: MatrixLoop) -> MonodromyEntries:
    s = M0.samples
    lam = M0.points
    n = M0.trunc
    return MonodromyEntries(
        ScalarLoop.from_samples(s[:, 0, 1] / lam, n),
        ScalarLoop.from_samples(-lam * s[:, 1, 0], n),
        ScalarLoop.from_samples(s[:, 0, 0], n),
        ScalarLoop.from_samples(s[:, 1, 1], n),
    )


def entries_at(m: np.ndarray, lam):
    """``(p, q, r, rstar)`` from monodromy values ``m`` (shape ``(..., 2, 2)``) at ``lam``."""
    return m[..., 0, 1] / lam, -lam * m[..., 1, 0], m[..., 0, 0], m[..., 1, 1]


def phi_from_entries(p, q, r, rstar):
    """``(i (r - r*))^2 p q``; free of the cancellation in the half-trace form."""
    return (1j * (r - rstar)) ** 2 * p * q


@dataclass
class UnitarizerResult:
    X: MatrixLoop
    x_plus: ScalarLoop
    epsilon: int
    residuals: list = field(default_factory=list)


def trinoid_unitarizer(M0: MatrixLoop, M1: MatrixLoop | None, form, circle_divisor=None,
                       extra=()) -> UnitarizerResult:
    """Diagonal interior unitarizer ``X = diag(sqrt(x+), 1/sqrt(x+))`` of trinoid monodromy.

    ``q/p*`` is factored as ``delta*epsilon * x+^* x+`` by the sign map.

    Parameters
    ----------
    M0, M1 : MatrixLoop
        Monodromies around the ends ``z = 1`` and ``z = -1``.  ``M1`` and any
        loops in ``extra`` only enter the reported residuals.
    form : RealForm or str
    circle_divisor : list, optional
        Circle zeros of ``q/p*`` if any (none for trinoids: ``p`` and ``q``
        vanish simultaneously).

    Raises
    ------
    SignMismatchError
        If the sign of ``q/p*`` differs from ``delta * epsilon``.
    """
    form = get_form(form)
    ent = extract_pqr(M0)
    n = M0.trunc
    pstar = ent.p.star(form.delta)
    ratio = ScalarLoop.from_samples(ent.q.samples / pstar.samples, n)
    sr = scalar_sign(ratio, circle_divisor or [], form)
    need = form.delta * form.epsilon
    if sr.epsilon != need:
        raise SignMismatchError(
            f"sign of q/p* is {sr.epsilon:+d} but {form} needs {need:+d}", sr.epsilon, need)
    x = sqrt_plus(sr.plus_factor)
    X = MatrixLoop.diag(x, ScalarLoop.from_samples(1 / x.samples, n))
    gens = [M0] + ([M1] if M1 is not None else []) + list(extra)
    res = [unitarized_residual(X, g, form) for g in gens]
    return UnitarizerResult(X, sr.plus_factor, sr.epsilon, res)


def conjugate(X: MatrixLoop, M: MatrixLoop) -> MatrixLoop:
    """``X M X^{-1}`` computed pointwise (``det X = 1``)."""
    xs = X.retrunc(M.trunc).samples
    inv = np.linalg.inv(xs)
    return MatrixLoop.from_samples(xs @ M.samples @ inv, M.trunc)


def unitarized_residual(X: MatrixLoop, M: MatrixLoop, form) -> float:
    s = conjugate(X, M).samples
    return float(np.max(np.abs(star_samples(s, form) - s)))


# ---------------------------------------------------------------- dressing

def simple_factor_p(mu: complex, lam):
    lam = np.asarray(lam, dtype=complex)
    return (lam - mu) / (np.conj(mu) * lam + 1)


def simple_factor(mu: complex, r: float, trunc: int = 64) -> MatrixLoop:
    """``g = diag(p^{1/2}, p^{-1/2})``, ``p = (lam - mu)/(conj(mu) lam + 1)`` on the circle ``|lam| = r``.

    The branch of the root is continuous from ``lam = 0`` where ``p(0) = -mu``.

    Raises
    ------
    ValueError
        If ``r >= |mu|`` or ``r >= 1/|mu|`` (the root would not be single valued).
    """
    mu = complex(mu)
    if r >= abs(mu) or r * abs(mu) >= 1:
        raise ValueError(f"simple factor needs r < |mu| and r < 1/|mu| (r={r}, |mu|={abs(mu)})")
    lam = grid(trunc, r)
    # p/(-mu) is 1 at lam = 0 and has no zeros or poles in |lam| <= r
    w = simple_factor_p(mu, lam) / (-mu)
    root = np.sqrt(-mu + 0j) * np.exp(0.5 * np.log(w))
    vals = np.zeros(lam.shape + (2, 2), dtype=complex)
    vals[:, 0, 0] = root
    vals[:, 1, 1] = 1 / root
    return MatrixLoop.from_samples(vals, trunc, r)


def conjugate_by_simple_factor(mu: complex, A: MatrixLoop) -> MatrixLoop:
    """``g A g^{-1}`` on the unit circle: scales the (1,2) entry by ``p`` and the (2,1) entry by ``1/p``.

    Single valued even where ``p^{1/2}`` is not.
    """
    lam = A.points
    p = simple_factor_p(mu, lam)
    s = A.samples.copy()
    s[:, 0, 1] *= p
    s[:, 1, 0] /= p
    return MatrixLoop.from_samples(s, A.trunc, A.radius)


@dataclass
class DressingData:
    mu: complex
    ell: np.ndarray
    k: np.ndarray
    dressed: MatrixLoop


def dressing_k(F_mu: np.ndarray, ell=(1.0, 0.0)) -> np.ndarray:
    """Constant ``k`` with first column proportional to ``F(mu)^{-1} ell``.

    ``k = [[u, conj(v)], [v, conj(u)]] / sqrt(|u|^2 - |v|^2)``, right-multiplied
    by a diagonal phase so that ``k[0, 0] > 0``; the phase makes ``k`` depend
    only on the line through ``(u, v)``.
    """
    uv = np.linalg.solve(F_mu, np.asarray(ell, dtype=complex))
    u, v = uv
    d = abs(u) ** 2 - abs(v) ** 2
    if abs(d) < 1e-12 * (abs(u) ** 2 + abs(v) ** 2):
        raise DressingError("|u| = |v|: dressing constant undefined")
    if d < 0:
        raise DressingError("|u| < |v|: line lies in the other component; use the reflected mu")
    k = np.array([[u, np.conj(v)], [v, np.conj(u)]]) / np.sqrt(d)
    ph = np.conj(u) / abs(u)
    return k @ np.diag([ph, np.conj(ph)])


def dress(mu: complex, F: MatrixLoop, ell=(1.0, 0.0), F_mu=None) -> DressingData:
    """Dress a unit-circle frame by the simple factor at ``mu``: ``g F k g^{-1}``.

    ``k`` is chosen so that ``F(mu) k`` maps ``e1`` to a multiple of ``ell``;
    with ``ell = e1`` the pole of ``g^{-1}`` at ``mu`` cancels.  A
    dS3-unitary ``F`` is mapped to an H3-unitary loop and vice versa.

    Parameters
    ----------
    F_mu : array, optional
        ``F`` evaluated at ``mu``.  Summing the truncated Laurent series off
        the unit circle amplifies noise by ``|mu|**-N``; callers that can
        evaluate the frame directly at ``mu`` (ODE at ``lam = mu`` times the
        interior factors) should pass the value here.
    """
    ell = np.asarray(ell, dtype=complex)
    F_mu = F.eval(complex(mu)) if F_mu is None else np.asarray(F_mu, dtype=complex)
    k = dressing_k(F_mu, ell)
    Fk = MatrixLoop.from_samples(F.samples @ k, F.trunc)
    return DressingData(complex(mu), ell, k, conjugate_by_simple_factor(mu, Fk))


def reducible_lambda_set(q_res: float, lambda0: float, form="dS3", window=(0.0, np.inf),
                         orders=range(-6, 7), exclude_tol: float = 1e-8) -> list:
    """Points ``mu`` with ``1/2 - 1/2 sqrt(1 + 4 q f(mu)/mu)`` in ``Z/3``, equilateral case.

    For ``kappa = 4 f(mu)/mu`` the condition reads
    ``kappa = ((1 - 2m/3)^2 - 1)/q`` for an integer ``m``, and each value
    of ``kappa`` gives a quadratic in ``mu`` solved in closed form.  ``m = 0``
    (``kappa = 0``, the evaluation points) is excluded.  ``window`` bounds
    ``|mu|``.  Results are sorted by modulus, then argument.
    """
    form = get_form(form)
    l0 = complex(lambda0)
    # f(mu) = mu^2 - s mu + c0
    if form.delta == 1:
        s, c0 = l0 + 1 / l0, 1.0
    else:
        s, c0 = l0 - 1 / l0, -1.0
    lam1 = form.delta / l0
    lo, hi = window
    out = []
    for m in orders:
        if m == 0:
            continue
        kap = ((1 - 2 * m / 3) ** 2 - 1) / q_res
        if abs(kap) < exclude_tol:
            continue
        # 4 mu^2 - (4 s + kap) mu + 4 c0 = 0
        for mu in np.roots([4.0, -(4 * s + kap), 4 * c0]):
            mu = complex(mu)
            if abs(mu - l0) < exclude_tol or abs(mu - lam1) < exclude_tol:
                continue
            if lo <= abs(mu) <= hi and all(abs(mu - o) > exclude_tol for o in out):
                out.append(mu)
    out.sort(key=lambda z: (round(abs(z), 12), np.angle(z)))
    return out


def reducibility_value(q_res: float, lambda0: float, form, mu: complex) -> complex:
    """``3 * (1/2 - 1/2 sqrt(1 + 4 q f(mu)/mu))``; an integer at reducible points (up to root sign)."""
    form = get_form(form)
    l0 = complex(lambda0)
    f = (mu - l0) * (mu - 1 / l0) if form.delta == 1 else (mu - l0) * (mu + 1 / l0)
    return 3 * (0.5 - 0.5 * np.sqrt(1 + 4 * q_res * f / mu + 0j))


def common_eigenvector(mats, tol: float = 1e-6):
    """Common eigenvector of 2x2 matrices and its collinearity residual."""
    best = None
    _w, vecs = np.linalg.eig(mats[0])
    for j in range(2):
        vec = vecs[:, j] / np.linalg.norm(vecs[:, j])
        res = 0.0
        for m in mats[1:]:
            mv = m @ vec
            res = max(res, abs(mv[0] * vec[1] - mv[1] * vec[0]) / max(np.linalg.norm(mv), 1e-300))
        if best is None or res < best[1]:
            best = (vec, res)
    return best


__all__ = [
    "ClosingReport", "DivisorError", "DressingData", "DressingError", "MonodromyEntries",
    "SignMismatchError", "UnitarizerResult", "check_closing", "common_eigenvector",
    "conjugate", "conjugate_by_simple_factor", "dress", "dressing_k", "entries_at",
    "extract_pqr", "halftrace_values", "halftraces_from_residues", "kappa_values",
    "phi_from_entries", "phi_leading_coefficient", "reducibility_value",
    "reducible_lambda_set", "simple_factor", "simple_factor_p", "trace_polynomial",
    "trinoid_unitarizer", "unitarized_residual",
]
