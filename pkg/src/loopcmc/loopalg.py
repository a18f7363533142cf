"""Matrix- and scalar-valued loops on a circle in the spectral plane.

A loop is stored as truncated Laurent coefficients ``c[k]`` for
``k = -N..N`` together with the circle radius.  Pointwise work (products,
inverses, star involutions) happens on an equispaced collocation grid of
``M = 4(N + 1)`` points, offset by half a grid step so that the special
points ``+-1`` and ``+-i`` are never collocation nodes.  Because ``M`` is a
multiple of 4, the reflection ``lambda -> -lambda`` is an exact permutation
of the grid (shift by ``M/2``), which is what the four star involutions
need on the unit circle.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DEFAULT_TRUNC = 64

ETA_TWIST = np.diag([1j, -1j])


class LoopError(ValueError):
    """Raised for inconsistent loop arithmetic (radius mismatch, bad det)."""


@dataclass(frozen=True)
class RealForm:
    """One of the four real forms of the loop group.

    ``delta`` selects the reflection ``lambda -> delta / conj(lambda)`` and
    ``epsilon`` selects the twist ``eta`` (identity or ``diag(i, -i)``).
    """

    name: str
    delta: int
    epsilon: int

    @property
    def eta(self) -> np.ndarray:
        return np.eye(2, dtype=complex) if self.epsilon == 1 else ETA_TWIST.copy()

    @property
    def inner_sign(self) -> int:
        # sign s in <x, y> = s * tr(x adj(y)) / 2
        return 1 if self.name in ("S3", "dS3") else -1

    def __str__(self) -> str:
        return self.name


S3 = RealForm("S3", 1, 1)
ADS3 = RealForm("AdS3", 1, -1)
H3 = RealForm("H3", -1, 1)
DS3 = RealForm("dS3", -1, -1)
FORMS = {f.name: f for f in (S3, ADS3, H3, DS3)}
_ALIASES = {"s3": S3, "ads3": ADS3, "h3": H3, "ds3": DS3}


def get_form(form) -> RealForm:
    """Look up a real form by name (case-insensitive) or pass one through."""
    if isinstance(form, RealForm):
        return form
    try:
        return _ALIASES[str(form).lower()]
    except KeyError:
        raise ValueError(f"unknown real form {form!r}; expected one of S3, AdS3, H3, dS3") from None


@lru_cache(maxsize=64)
def grid(trunc: int, radius: float = 1.0) -> np.ndarray:
    """Collocation points for truncation ``trunc`` on the circle of given radius."""
    m = 4 * (trunc + 1)
    j = np.arange(m)
    return radius * np.exp(2j * np.pi * (j + 0.5) / m)


def _phase(trunc: int, radius: float) -> np.ndarray:
    m = 4 * (trunc + 1)
    k = np.arange(-trunc, trunc + 1)
    return radius ** k.astype(float) * np.exp(1j * np.pi * k / m)


def samples_from_coeffs(coeffs: np.ndarray, radius: float = 1.0) -> np.ndarray:
    """Evaluate Laurent coefficients (axis 0, exponents -N..N) on the grid."""
    coeffs = np.asarray(coeffs, dtype=complex)
    n = (coeffs.shape[0] - 1) // 2
    m = 4 * (n + 1)
    scaled = coeffs * _phase(n, radius).reshape((-1,) + (1,) * (coeffs.ndim - 1))
    full = np.zeros((m,) + coeffs.shape[1:], dtype=complex)
    full[: n + 1] = scaled[n:]
    full[m - n:] = scaled[:n]
    return np.fft.ifft(full, axis=0) * m


def coeffs_from_samples(samples: np.ndarray, trunc: int, radius: float = 1.0) -> tuple[np.ndarray, float]:
    """Inverse of :func:`samples_from_coeffs`.

    Returns the coefficients for exponents ``-trunc..trunc`` and the norm of
    the discarded aliased tail (a truncation quality metric).
    """
    samples = np.asarray(samples, dtype=complex)
    m = samples.shape[0]
    full = np.fft.fft(samples, axis=0) / m
    n = trunc
    if 2 * n + 1 > m:
        raise LoopError("grid too coarse for requested truncation")
    out = np.concatenate([full[m - n:], full[: n + 1]], axis=0)
    tail = float(np.sqrt(np.sum(np.abs(full[n + 1: m - n]) ** 2)))
    # undo grid phase; tail is measured on the unscaled modes
    out = out / _phase(n, radius).reshape((-1,) + (1,) * (samples.ndim - 1))
    return out, tail


class _LoopBase:
    __slots__ = ("coeffs", "radius", "tail")

    def __init__(self, coeffs, radius: float = 1.0, tail: float = 0.0):
        coeffs = np.array(coeffs, dtype=complex)
        if coeffs.shape[0] % 2 != 1:
            raise LoopError("coefficient array must have odd length 2N+1")
        coeffs.setflags(write=False)
        self.coeffs = coeffs
        self.radius = float(radius)
        self.tail = float(tail)

    @property
    def trunc(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def exponents(self) -> np.ndarray:
        return np.arange(-self.trunc, self.trunc + 1)

    @property
    def points(self) -> np.ndarray:
        return grid(self.trunc, self.radius)

    @property
    def samples(self) -> np.ndarray:
        return samples_from_coeffs(self.coeffs, self.radius)

    def coeff(self, k: int):
        """Coefficient of ``lambda**k`` (zero outside the truncation)."""
        if abs(k) > self.trunc:
            return np.zeros_like(self.coeffs[0])
        return self.coeffs[k + self.trunc]

    def negative_part_norm(self) -> float:
        return float(np.max(np.abs(self.coeffs[: self.trunc]), initial=0.0))

    def positive_part_norm(self) -> float:
        return float(np.max(np.abs(self.coeffs[self.trunc + 1:]), initial=0.0))

    def __call__(self, lam):
        return self.eval(lam)

    @classmethod
    def from_samples(cls, samples, trunc: int | None = None, radius: float = 1.0):
        samples = np.asarray(samples, dtype=complex)
        if trunc is None:
            trunc = samples.shape[0] // 4 - 1
        c, tail = coeffs_from_samples(samples, trunc, radius)
        return cls(c, radius, tail)

    @classmethod
    def from_function(cls, func, trunc: int = DEFAULT_TRUNC, radius: float = 1.0):
        """Sample a callable ``func(lam_array)`` on the grid and build the loop."""
        vals = np.asarray(func(grid(trunc, radius)), dtype=complex)
        return cls.from_samples(vals, trunc, radius)

    def _check(self, other):
        if not np.isclose(self.radius, other.radius):
            raise LoopError(f"radius mismatch: {self.radius} vs {other.radius}")
        return max(self.trunc, other.trunc)

    def retrunc(self, trunc: int):
        """Return a copy with a different truncation (zero-padding or cutting)."""
        n = self.trunc
        if trunc >= n:
            pad = [(trunc - n, trunc - n)] + [(0, 0)] * (self.coeffs.ndim - 1)
            return type(self)(np.pad(self.coeffs, pad), self.radius, self.tail)
        cut = self.coeffs[n - trunc: n + trunc + 1]
        dropped = np.sqrt(np.sum(np.abs(self.coeffs) ** 2) - np.sum(np.abs(cut) ** 2))
        return type(self)(cut, self.radius, self.tail + float(dropped))


class ScalarLoop(_LoopBase):
    """Scalar loop ``sum_k c_k lambda^k`` on a circle."""

    __slots__ = ()

    def eval(self, lam):
        lam = np.asarray(lam, dtype=complex)
        powers = lam[..., None] ** self.exponents
        return powers @ self.coeffs

    @classmethod
    def constant(cls, c, trunc: int = DEFAULT_TRUNC, radius: float = 1.0):
        coeffs = np.zeros(2 * trunc + 1, dtype=complex)
        coeffs[trunc] = c
        return cls(coeffs, radius)

    @classmethod
    def from_dict(cls, terms: dict, trunc: int = DEFAULT_TRUNC, radius: float = 1.0):
        """Build from ``{exponent: coefficient}``."""
        coeffs = np.zeros(2 * trunc + 1, dtype=complex)
        for k, v in terms.items():
            coeffs[k + trunc] = v
        return cls(coeffs, radius)

    def _binary(self, other, op):
        if np.isscalar(other):
            return ScalarLoop.from_samples(op(self.samples, other), self.trunc, self.radius)
        n = self._check(other)
        a, b = self.retrunc(n), other.retrunc(n)
        out = ScalarLoop.from_samples(op(a.samples, b.samples), n, self.radius)
        out.tail += a.tail + b.tail
        return out

    def __mul__(self, other):
        return self._binary(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, np.divide)

    def __add__(self, other):
        if np.isscalar(other):
            c = self.coeffs.copy()
            c[self.trunc] += other
            return ScalarLoop(c, self.radius, self.tail)
        n = self._check(other)
        return ScalarLoop(self.retrunc(n).coeffs + other.retrunc(n).coeffs, self.radius)

    __radd__ = __add__

    def __neg__(self):
        return ScalarLoop(-self.coeffs, self.radius, self.tail)

    def __sub__(self, other):
        return self + (-other)

    def star(self, delta: int) -> "ScalarLoop":
        """``f*(lambda) = conj(f(delta / conj(lambda)))``, coefficient-wise."""
        if not np.isclose(self.radius, 1.0):
            raise LoopError("scalar star is only defined on the unit circle here")
        k = self.exponents
        c = np.conj(self.coeffs[::-1]) * (float(delta) ** (-k))
        return ScalarLoop(c, self.radius, self.tail)


class MatrixLoop(_LoopBase):
    """2x2 matrix loop ``sum_k C_k lambda^k``; coefficient array shape (2N+1, 2, 2)."""

    __slots__ = ()

    def __init__(self, coeffs, radius: float = 1.0, tail: float = 0.0):
        super().__init__(coeffs, radius, tail)
        if self.coeffs.shape[1:] != (2, 2):
            raise LoopError("matrix loop coefficients must have shape (2N+1, 2, 2)")

    @classmethod
    def identity(cls, trunc: int = DEFAULT_TRUNC, radius: float = 1.0):
        return cls.constant(np.eye(2), trunc, radius)

    @classmethod
    def constant(cls, mat, trunc: int = DEFAULT_TRUNC, radius: float = 1.0):
        coeffs = np.zeros((2 * trunc + 1, 2, 2), dtype=complex)
        coeffs[trunc] = mat
        return cls(coeffs, radius)

    @classmethod
    def from_dict(cls, terms: dict, trunc: int = DEFAULT_TRUNC, radius: float = 1.0):
        """Build from ``{exponent: 2x2 matrix}``."""
        coeffs = np.zeros((2 * trunc + 1, 2, 2), dtype=complex)
        for k, v in terms.items():
            coeffs[k + trunc] = v
        return cls(coeffs, radius)

    @classmethod
    def diag(cls, a: ScalarLoop, b: ScalarLoop):
        n = a._check(b)
        c = np.zeros((2 * n + 1, 2, 2), dtype=complex)
        c[:, 0, 0] = a.retrunc(n).coeffs
        c[:, 1, 1] = b.retrunc(n).coeffs
        return cls(c, a.radius, a.tail + b.tail)

    def entry(self, i: int, j: int) -> ScalarLoop:
        return ScalarLoop(self.coeffs[:, i, j], self.radius, self.tail)

    def eval(self, lam):
        """Laurent sum at ``lam`` (scalar or array).

        Accurate inside the annulus where the coefficients decay; the growth
        factor ``max(|lam|/r, r/|lam|)**N`` bounds the amplification of
        truncation noise (see :meth:`eval_condition`).
        """
        lam = np.asarray(lam, dtype=complex)
        powers = lam[..., None] ** self.exponents
        return np.tensordot(powers, self.coeffs, axes=([-1], [0]))

    def eval_condition(self, lam) -> float:
        rho = abs(complex(lam)) / self.radius
        return float(max(rho, 1.0 / rho) ** self.trunc)

    def det(self) -> ScalarLoop:
        s = self.samples
        return ScalarLoop.from_samples(np.linalg.det(s), self.trunc, self.radius)

    def __matmul__(self, other):
        return loop_mul(self, other)

    def __mul__(self, other):
        if np.isscalar(other):
            return MatrixLoop(self.coeffs * other, self.radius, self.tail)
        return NotImplemented

    __rmul__ = __mul__

    def __add__(self, other):
        n = self._check(other)
        return MatrixLoop(self.retrunc(n).coeffs + other.retrunc(n).coeffs, self.radius)

    def __sub__(self, other):
        n = self._check(other)
        return MatrixLoop(self.retrunc(n).coeffs - other.retrunc(n).coeffs, self.radius)

    def inverse(self, det_tol: float = 1e-6):
        return loop_inverse(self, det_tol)

    def star(self, form) -> "MatrixLoop":
        return loop_star(self, form)

    def max_diff(self, other) -> float:
        """Max-norm distance of the collocation samples."""
        n = self._check(other)
        return float(np.max(np.abs(self.retrunc(n).samples - other.retrunc(n).samples)))


def loop_mul(a: MatrixLoop, b: MatrixLoop) -> MatrixLoop:
    """Pointwise product on the common grid, re-truncated to ``max(N_a, N_b)``.

    The grid has more than ``4N`` points, so the product of two degree-``N``
    Laurent polynomials is not aliased; the dropped band ``N < |k| <= 2N``
    is recorded in ``tail``.
    """
    n = a._check(b)
    a, b = a.retrunc(n), b.retrunc(n)
    out = MatrixLoop.from_samples(a.samples @ b.samples, n, a.radius)
    out.tail += a.tail + b.tail
    return out


def eval_plus(a: _LoopBase, lam: complex):
    """Sum of the nonnegative-exponent part of ``a`` at ``lam``.

    For interior-holomorphic loops evaluated inside the disk this avoids the
    ``|lam|**-N`` amplification of roundoff sitting in the negative
    coefficients.
    """
    n = a.trunc
    powers = complex(lam) ** np.arange(n + 1)
    return np.tensordot(powers, a.coeffs[n:], axes=([0], [0]))


def adjugate(x: np.ndarray) -> np.ndarray:
    """Adjugate of a stack of 2x2 matrices (the inverse when det = 1)."""
    out = np.empty_like(x)
    out[..., 0, 0] = x[..., 1, 1]
    out[..., 1, 1] = x[..., 0, 0]
    out[..., 0, 1] = -x[..., 0, 1]
    out[..., 1, 0] = -x[..., 1, 0]
    return out


def loop_inverse(a: MatrixLoop, det_tol: float = 1e-6) -> MatrixLoop:
    s = a.samples
    dev = float(np.max(np.abs(np.linalg.det(s) - 1.0)))
    if dev > det_tol:
        raise LoopError(f"loop is not unimodular (max |det - 1| = {dev:.3e})")
    out = MatrixLoop.from_samples(adjugate(s), a.trunc, a.radius)
    out.tail += a.tail
    return out


def star_samples(samples: np.ndarray, form) -> np.ndarray:
    """Apply the star involution to unit-circle grid samples.

    ``X*(lam) = (eta X(delta/conj(lam)) eta^-1)^{-dagger}``; on the unit
    circle ``delta / conj(lam) = delta * lam``, which for ``delta = -1`` is
    the grid shift by ``M/2``.  Inverse via adjugate (det 1 assumed).
    """
    form = get_form(form)
    s = samples
    if form.delta == -1:
        s = np.roll(s, -(s.shape[0] // 2), axis=0)
    if form.epsilon == -1:
        s = s.copy()
        s[..., 0, 1] *= -1
        s[..., 1, 0] *= -1
    return np.conj(np.swapaxes(adjugate(s), -1, -2))


def loop_star(a: MatrixLoop, form) -> MatrixLoop:
    """The star involution of ``form`` applied to ``a`` (unit circle only)."""
    if not np.isclose(a.radius, 1.0):
        raise LoopError("star involution requires radius 1; pass the paired radius explicitly")
    out = MatrixLoop.from_samples(star_samples(a.samples, form), a.trunc, 1.0)
    out.tail += a.tail
    return out


def unitarity_residual_samples(samples: np.ndarray, form) -> float:
    return float(np.max(np.abs(star_samples(samples, form) - samples)))


def is_unitary(a: MatrixLoop, form, tol: float = 1e-9) -> tuple[bool, float]:
    """Check ``A* = A`` at the collocation points; returns (flag, residual)."""
    if not np.isclose(a.radius, 1.0):
        raise LoopError("unitarity is only defined on the unit circle")
    res = unitarity_residual_samples(a.samples, form)
    return res <= tol, res


def lie_star_constant(x: np.ndarray, form) -> np.ndarray:
    """Star of a constant Lie-algebra coefficient multiplying ``lambda^-1``.

    For ``Y(lam) = x / lam`` the Lie-algebra star gives ``x' * lam`` with
    ``x' = -delta * eta x^dagger eta^-1``.
    """
    form = get_form(form)
    eta = form.eta
    return -form.delta * eta @ np.conj(x.T) @ np.linalg.inv(eta)
