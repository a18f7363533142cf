"""Birkhoff and Iwasawa factorization of loops, and the scalar sign map.

Conventions
-----------
* ``birkhoff(G)`` returns ``G = G_minus @ G_plus`` with ``G_minus(inf) = 1``.
* ``iwasawa(Phi, form)`` returns ``Phi = F @ B`` with ``F`` fixed by the star
  of ``form`` and ``B`` holomorphic inside the circle, normalized so that
  ``B(0)`` is upper triangular with positive diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .loopalg import (
    MatrixLoop,
    ScalarLoop,
    adjugate,
    coeffs_from_samples,
    get_form,
    grid,
    star_samples,
)

BIRKHOFF_TOL = 1e-10
PIVOT_TOL = 1e-7


class BigCellError(ArithmeticError):
    """Factorization left the big cell.

    ``margin`` is the smallest singular value (Birkhoff) or the smallest
    Cholesky pivot (Iwasawa) at the point of failure.
    """

    def __init__(self, message: str, margin: float):
        super().__init__(message)
        self.margin = float(margin)


class DivisorError(ValueError):
    """Inconsistent circle divisor or a loop that is not star-symmetric."""


@dataclass
class BirkhoffResult:
    minus: MatrixLoop
    plus: MatrixLoop
    residual: float
    sigma_min: float


@dataclass
class IwasawaResult:
    unitary: MatrixLoop
    positive: MatrixLoop
    pivot: float
    crossed: bool = False
    hermitian_defect: float = 0.0


@dataclass
class SignResult:
    epsilon: int
    plus_factor: ScalarLoop
    circle_divisor: list = field(default_factory=list)
    constant: complex = 1.0


def _block_toeplitz(coeffs: np.ndarray, n: int) -> np.ndarray:
    """Rows m = 0..n, columns j = 0..n, block G_{m-j}."""
    size = 2 * (n + 1)
    t = np.zeros((size, size), dtype=complex)
    mid = (coeffs.shape[0] - 1) // 2
    for m in range(n + 1):
        for j in range(n + 1):
            k = m - j
            if abs(k) <= mid:
                t[2 * m: 2 * m + 2, 2 * j: 2 * j + 2] = coeffs[mid + k]
    return t


def birkhoff(G: MatrixLoop, tol: float = BIRKHOFF_TOL) -> BirkhoffResult:
    """Birkhoff factorization ``G = G_minus G_plus``, ``G_minus(inf) = 1``.

    Solves the finite section of the block-Toeplitz system for the
    coefficients of ``Y = G_plus^{-1}`` (exponents ``0..N``), i.e. the
    requirement that ``G Y`` have no positive exponents and constant term
    ``1``.

    Raises
    ------
    BigCellError
        If the smallest singular value of the section is below ``tol``
        (relative to the largest).
    """
    n = G.trunc
    t = _block_toeplitz(G.coeffs, n)
    u, s, vh = np.linalg.svd(t)
    smin = float(s[-1] / s[0])
    if smin < tol:
        raise BigCellError(f"Birkhoff section singular (sigma_min = {smin:.3e})", smin)
    rhs = np.zeros((2 * (n + 1), 2), dtype=complex)
    rhs[:2] = np.eye(2)
    y = vh.conj().T @ ((u.conj().T @ rhs) / s[:, None])
    ycoef = np.zeros_like(G.coeffs)
    ycoef[n:] = y.reshape(n + 1, 2, 2)
    ys = MatrixLoop(ycoef, G.radius).samples
    gs = G.samples
    plus_s = np.linalg.inv(ys)
    minus_s = gs @ ys
    plus = MatrixLoop.from_samples(plus_s, n, G.radius)
    minus = MatrixLoop.from_samples(minus_s, n, G.radius)
    # project onto the proper halves; what is cut is the residual
    pc = plus.coeffs.copy()
    mc = minus.coeffs.copy()
    spill = max(np.max(np.abs(pc[:n]), initial=0.0), np.max(np.abs(mc[n + 1:]), initial=0.0))
    pc[:n] = 0
    mc[n + 1:] = 0
    mc[n] = np.eye(2)
    plus = MatrixLoop(pc, G.radius, plus.tail)
    minus = MatrixLoop(mc, G.radius, minus.tail)
    recon = float(np.max(np.abs(minus.samples @ plus.samples - gs)))
    return BirkhoffResult(minus, plus, max(recon, float(spill)), smin)


def _twisted_cholesky(k: np.ndarray, sigma: int) -> tuple[np.ndarray, float]:
    """Solve ``R^dagger S R = K`` for upper-triangular ``R``, ``S = diag(1, sigma)``.

    Returns ``(R, pivot)``; ``R`` is None if a pivot is non-positive.
    """
    k11 = k[0, 0].real
    if k11 <= 0:
        return None, k11
    d1 = np.sqrt(k11)
    x = k[0, 1] / d1
    d2sq = sigma * (k[1, 1].real - abs(x) ** 2)
    pivot = min(k11, d2sq)
    if d2sq <= 0:
        return None, pivot
    return np.array([[d1, x], [0.0, np.sqrt(d2sq)]], dtype=complex), pivot


def iwasawa(
    Phi: MatrixLoop,
    form,
    pivot_tol: float = PIVOT_TOL,
    keep_crossing: bool = False,
    birkhoff_tol: float = BIRKHOFF_TOL,
) -> IwasawaResult:
    """Iwasawa factorization ``Phi = F B`` relative to a real form.

    Parameters
    ----------
    Phi : MatrixLoop
        Unimodular loop on the unit circle.
    form : RealForm or str
    pivot_tol : float
        Smallest admissible Cholesky pivot; below it the point is treated
        as lying outside the big cell.
    keep_crossing : bool
        If the ordinary factorization fails because the middle term has the
        opposite sign, factor its negative instead.  The resulting ``F``
        satisfies ``F* = -F`` (the other component of the matrix model) and
        the result is flagged ``crossed``.

    Raises
    ------
    BigCellError
    """
    form = get_form(form)
    n = Phi.trunc
    ps = Phi.samples
    h_s = adjugate(star_samples(ps, form)) @ ps
    H = MatrixLoop.from_samples(h_s, n)
    bk = birkhoff(H, birkhoff_tol)
    hp = bk.plus
    h0 = hp.coeff(0)
    sig = np.eye(2) if form.epsilon == 1 else np.diag([1.0, -1.0])
    kmat = sig @ h0
    defect = float(np.max(np.abs(kmat - kmat.conj().T)))
    kmat = 0.5 * (kmat + kmat.conj().T)
    sigma = int(sig[1, 1].real)
    r, pivot = _twisted_cholesky(kmat, sigma)
    crossed = False
    if r is None or pivot < pivot_tol:
        if keep_crossing:
            r2, pivot2 = _twisted_cholesky(-kmat, sigma)
            if r2 is not None and pivot2 >= pivot_tol:
                r, pivot, crossed = r2, pivot2, True
            else:
                raise BigCellError(f"Iwasawa pivot {max(pivot, pivot2):.3e} below tolerance", max(pivot, pivot2))
        else:
            raise BigCellError(f"Iwasawa pivot {pivot:.3e} below tolerance", pivot)
    c = r @ np.linalg.inv(h0)
    b_s = c[None] @ hp.samples
    f_s = ps @ adjugate(b_s)
    B = MatrixLoop.from_samples(b_s, n)
    bc = B.coeffs.copy()
    bc[:n] = 0
    B = MatrixLoop(bc, 1.0, B.tail)
    F = MatrixLoop.from_samples(f_s, n)
    return IwasawaResult(F, B, float(pivot), crossed, defect)


def _log_split(samples: np.ndarray, trunc: int, radius: float):
    """Continuous log and winding of a nonvanishing sampled scalar loop."""
    m = samples.shape[0]
    ang = np.unwrap(np.angle(samples))
    # closing the loop: the jump from last to first sample after unwrapping
    step = np.angle(samples[0] / samples[-1])
    total = ang[-1] + step - ang[0]
    wind = int(np.rint(total / (2 * np.pi)))
    if abs(total - 2 * np.pi * wind) > 1e-6:
        raise DivisorError("argument increment is not a multiple of 2 pi")
    theta = 2 * np.pi * (np.arange(m) + 0.5) / m
    logs = np.log(np.abs(samples)) + 1j * (ang - wind * theta) - wind * np.log(radius)
    return logs, wind


def scalar_birkhoff(f: ScalarLoop, delta: int = 1, zero_tol: float = 1e-12):
    """Factor ``f = c lambda**n f_minus f_plus`` with ``f_plus(0) = f_minus(inf) = 1``.

    Parameters
    ----------
    f : ScalarLoop
        Nonvanishing on its circle.
    delta : int
        Real-form reflection sign; recorded for symmetry with
        :func:`scalar_sign`, not needed for the factorization itself.

    Returns
    -------
    c : complex
    n : int
        Winding number of ``f`` about 0.
    minus, plus : ScalarLoop
    """
    s = f.samples
    if np.min(np.abs(s)) <= zero_tol * max(1.0, np.max(np.abs(s))):
        raise DivisorError("scalar loop vanishes on the circle; use scalar_sign with a divisor")
    n = f.trunc
    logs, wind = _log_split(s, n, f.radius)
    lc, _ = coeffs_from_samples(logs, n, f.radius)
    c = complex(np.exp(lc[n]))
    lp = np.zeros_like(lc)
    lp[n + 1:] = lc[n + 1:]
    lm = np.zeros_like(lc)
    lm[:n] = lc[:n]
    plus = ScalarLoop.from_samples(np.exp(ScalarLoop(lp, f.radius).samples), n, f.radius)
    minus = ScalarLoop.from_samples(np.exp(ScalarLoop(lm, f.radius).samples), n, f.radius)
    return c, wind, minus, plus


def divisor_loop(divisor, trunc: int) -> ScalarLoop:
    """``P = prod (1 - conj(a) lambda)**(m/2)`` for a circle divisor ``[(a, m), ...]``."""
    lam = grid(trunc, 1.0)
    vals = np.ones_like(lam)
    for a, m in divisor:
        a = complex(a)
        if abs(abs(a) - 1.0) > 1e-12:
            raise DivisorError(f"divisor point {a} is not on the unit circle")
        if int(m) != m or int(m) % 2:
            raise DivisorError(f"circle divisor order {m} at {a} is not even")
        vals = vals * (1 - np.conj(a) * lam) ** (int(m) // 2)
    return ScalarLoop.from_samples(vals, trunc, 1.0)


def scalar_sign(f: ScalarLoop, circle_divisor=None, form=None, delta: int | None = None,
                sym_tol: float = 1e-8) -> SignResult:
    """Sign homomorphism on star-symmetric scalar loops.

    Writes ``f = epsilon * f_plus^* f_plus`` with ``f_plus`` holomorphic
    inside the unit disk and carrying half of ``circle_divisor``.

    Parameters
    ----------
    f : ScalarLoop
        Satisfies ``f^* = f`` for the reflection ``lambda -> delta/conj(lambda)``.
    circle_divisor : list of (complex, int)
        Zeros of ``f`` on the unit circle with their (even) orders.  They are
        divided out analytically rather than detected.
    form : RealForm or str, optional
        Supplies ``delta`` if given.
    """
    if form is not None:
        delta = get_form(form).delta
    if delta is None:
        delta = 1
    divisor = list(circle_divisor or [])
    n = f.trunc
    sym = float(np.max(np.abs(f.star(delta).coeffs - f.coeffs)))
    if sym > sym_tol * max(1.0, float(np.max(np.abs(f.coeffs)))):
        raise DivisorError(f"loop is not star-symmetric (residual {sym:.3e})")
    P = divisor_loop(divisor, n)
    pp = P.star(delta).samples * P.samples
    g_s = f.samples / pp
    g = ScalarLoop.from_samples(g_s, n)
    c, wind, _minus, plus = scalar_birkhoff(g, delta)
    if wind != 0:
        raise DivisorError(f"deflated loop has winding {wind}; divisor incomplete or not symmetric")
    if abs(c.imag) > 1e-6 * abs(c):
        raise DivisorError(f"middle constant {c} is not real")
    eps = 1 if c.real > 0 else -1
    fp = ScalarLoop.from_samples(np.sqrt(abs(c.real)) * plus.samples * P.samples, n)
    return SignResult(eps, fp, divisor, c)


def sqrt_plus(f: ScalarLoop) -> ScalarLoop:
    """Square root of an interior-holomorphic, nonvanishing loop with ``Re f(0) > 0`` branch."""
    n = f.trunc
    logs, wind = _log_split(f.samples, n, f.radius)
    if wind != 0:
        raise DivisorError("square root needs winding 0")
    lc, _ = coeffs_from_samples(logs, n, f.radius)
    if np.max(np.abs(lc[:n]), initial=0.0) > 1e-8 * max(1.0, np.max(np.abs(lc))):
        raise DivisorError("loop is not interior-holomorphic")
    half = ScalarLoop(0.5 * lc, f.radius).samples
    return ScalarLoop.from_samples(np.exp(half), n, f.radius)
