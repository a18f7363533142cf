"""Finite-dimensional solver for n-noid potentials with unitary monodromy.

The perturbed sphere potential ``[[0, 1/lam], [i t (lam^2 + 1) omega, 0]] dz``
has weights ``a_k = tau_k`` (scalars), residues ``b_k`` and poles ``z_k``
given as truncated power series in ``lam``.  For small ``t`` the
coefficients are adjusted by Gauss-Newton so that every monodromy based at
``z = 0`` is fixed by the star involution of the chosen real form, and the
point at infinity stays regular.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from .frame import FrameError, FramePath, TOL_ODE, fuchsian_nu, integrate_samples, loop_around
from .loopalg import get_form, grid, star_samples
from .potential import NNOID_DEGREE, NnoidParams, nnoid_potential

BALANCE_TOL = 1e-10
FD_STEP = 1e-7
# relative singular-value cutoff; near-null gauge directions get no step
RCOND = 1e-5


class SolverDivergence(RuntimeError):
    """Newton iteration failed to reduce the residual; ``residual`` is the last norm."""

    def __init__(self, msg: str, residual: float):
        super().__init__(msg)
        self.residual = residual


@dataclass
class BalanceConfig:
    """Input of the n-noid solver.

    Parameters
    ----------
    tau : array_like
        Nonzero real weights.
    p : array_like
        Pole positions with ``|p_k|`` not in ``{0, 1}``.
    form : RealForm or str
        H3 (default) or AdS3.
    t_max : float
        Largest deformation parameter the solver accepts.
    degree : int
        Series degree ``D`` of ``b_k`` and ``z_k``.
    samples : int or None
        Number of ``lam`` pairs on the unit circle; ``2 D + 2`` if None.
    waypoints : list or None
        Optional per-puncture waypoints for the monodromy loops.
    """

    tau: np.ndarray
    p: np.ndarray
    form: object = "H3"
    t_max: float = 0.1
    degree: int = NNOID_DEGREE
    samples: int | None = None
    waypoints: list | None = None

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float).ravel()
        self.p = np.asarray(self.p, dtype=complex).ravel()
        self.form = get_form(self.form)
        if self.tau.size != self.p.size or self.tau.size < 2:
            raise ValueError("need at least two ends with matching tau and p")
        if np.any(self.tau == 0):
            raise ValueError("weights must be nonzero")
        m = np.abs(self.p)
        if np.any(m < 1e-12) or np.any(np.abs(m - 1) < 1e-12):
            raise ValueError("|p_k| must avoid 0 and 1")
        if self.form.name not in ("H3", "AdS3"):
            raise ValueError("n-noid solver supports H3 and AdS3")
        if self.samples is None:
            self.samples = 2 * self.degree + 2

    @property
    def n(self) -> int:
        return self.tau.size

    def initial(self, t: float = 0.0) -> NnoidParams:
        return NnoidParams(self.tau, self.p, t, degree=self.degree)

    def lam_samples(self) -> np.ndarray:
        # 2S points closed under lam -> -lam, so star pairs are grid shifts
        return grid(self.samples // 2) if self.samples % 2 == 0 else grid((self.samples - 1) // 2)


@dataclass
class SolveTrace:
    residuals: list = field(default_factory=list)
    params: NnoidParams | None = None
    converged: bool = False
    t_steps: list = field(default_factory=list)
    message: str = ""
    degrees: list = field(default_factory=list)
    config: BalanceConfig | None = None


def balance_residual(tau, p):
    """The three balancing sums.

    Returns
    -------
    tuple
        ``(sum 2 tau p̄/(1-|p|^2), sum tau (1+|p|^2)/(1-|p|^2), sum 2 tau p/(1-|p|^2))``.
    """
    tau = np.asarray(tau, dtype=float)
    p = np.asarray(p, dtype=complex)
    m2 = np.abs(p) ** 2
    if np.any(m2 == 0) or np.any(m2 == 1):
        raise ValueError("|p_k| must avoid 0 and 1")
    w = tau / (1 - m2)
    return (complex(np.sum(2 * w * np.conj(p))), float(np.sum(w * (1 + m2))), complex(np.sum(2 * w * p)))


def _route(base: complex, p: complex, radius: float, others) -> list:
    """Waypoints from ``base`` to the circle around ``p`` keeping clear of ``others``.

    ``others`` holds ``(center, reach)`` pairs; the path must stay outside
    each disk ``|z - center| <= reach`` with some margin.
    """
    d = p - base
    entry = p - radius * d / abs(d)
    need = [(q, e + 0.5 * min(radius, abs(q - p) - radius - e, abs(q - base) - e)) for q, e in others]

    def clear(pts):
        path = FramePath.polyline(pts)
        return all(path.clearance([q]) >= r for q, r in need)

    if clear([base, entry]):
        return []
    mid = 0.5 * (base + p)
    for s in (0.5, -0.5, 1.0, -1.0, 1.5, -1.5, 2.0, -2.0):
        w = mid + 1j * s * d
        e = p + radius * (w - p) / abs(w - p)
        if clear([base, w, e]):
            return [w]
    raise FrameError(f"no clear route to puncture {p}")


def pole_reach(params: NnoidParams, lam) -> np.ndarray:
    """``max |z_k(lam) - p_k|`` over the sample circle, per pole."""
    _a, _b, z = params.series(lam)
    return np.max(np.abs(z - params.p[:, None]), axis=1)


def _loops(cfg: BalanceConfig, params: NnoidParams | None = None) -> list:
    """Loops based at 0 around each pole, each enclosing the whole pole image ``z_k(S^1)``."""
    p = cfg.p
    reach = np.zeros(cfg.n) if params is None else 1.05 * pole_reach(params, cfg.lam_samples())
    paths = []
    for k in range(cfg.n):
        others = [(q, reach[j]) for j, q in enumerate(p) if j != k]
        gap = min([abs(p[k] - q) - e for q, e in others] + [abs(p[k])])
        if reach[k] >= gap:
            raise FrameError(f"pole image of end {k} meets another end or the basepoint")
        radius = 0.5 * (reach[k] + gap) if params is not None else 0.5 * gap
        wp = cfg.waypoints[k] if cfg.waypoints else _route(0.0, p[k], radius, others)
        paths.append(loop_around(0.0, p[k], radius, wp))
    return paths


def monodromies(params: NnoidParams, cfg: BalanceConfig, lam=None, tol: float = TOL_ODE) -> np.ndarray:
    """Monodromy samples based at 0, shape ``(n, len(lam), 2, 2)``."""
    lam = cfg.lam_samples() if lam is None else np.asarray(lam, dtype=complex)
    pot = nnoid_potential(params)
    return np.stack([integrate_samples(pot, path, lam, tol=tol) for path in _loops(cfg, params)])


def _series_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = a.shape[-1]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
    for j in range(d):
        out[..., j:] += a[..., j:j + 1] * b[..., :d - j]
    return out


def infinity_residual(params: NnoidParams) -> np.ndarray:
    """Coefficients of the three sums that make ``z = inf`` regular.

    ``sum b_k``, ``sum a_k + b_k z_k`` and ``sum 2 a_k z_k + b_k z_k^2`` as
    truncated series; all three vanish for a potential without pole at infinity.
    """
    a, b, z = params.a, params.b, params.z
    bz = _series_mul(b, z)
    s0 = b.sum(axis=0)
    s1 = (a + bz).sum(axis=0)
    s2 = (2 * _series_mul(a, z) + _series_mul(bz, z)).sum(axis=0)
    return np.concatenate([s0, s1, s2])


def unitarity_residual(params: NnoidParams, cfg: BalanceConfig | None = None, tol: float = TOL_ODE,
                       mono: np.ndarray | None = None) -> np.ndarray:
    """Stacked real and imaginary parts of ``M_k* - M_k`` on the sample circle."""
    if cfg is None:
        cfg = BalanceConfig(params.tau, params.p, degree=params.degree)
    if mono is None:
        mono = monodromies(params, cfg, tol=tol)
    diff = np.stack([star_samples(m, cfg.form) - m for m in mono])
    return np.concatenate([diff.real.ravel(), diff.imag.ravel()])


def first_order_monodromy(params: NnoidParams, lam) -> np.ndarray:
    """``1 + t P_k`` with ``P_k`` the residue formula for the first-order monodromy."""
    lam = np.asarray(lam, dtype=complex)
    a, b, z = params.series(lam)
    r0 = b
    r1 = a + b * z
    r2 = 2 * a * z + b * z * z
    s = 1j * 2j * np.pi * (lam * lam + 1) / lam
    P = np.empty((params.n, lam.size, 2, 2), dtype=complex)
    P[..., 0, 0] = s * r1
    P[..., 0, 1] = -s * r2 / lam
    P[..., 1, 0] = s * lam * r0
    P[..., 1, 1] = -s * r1
    return np.eye(2) + params.t * P


# -- unknown vector: complex a_k, b_km, z_km minus the pinned gauge entries.
# a_1 = tau_1 fixes the scale.  For n = 2 the balanced configuration is rigid
# and only z_1(0) = p_1 (rotation) is pinned; for n >= 3 the balanced
# configurations form a family, and pinning every z_k(0) = p_k selects it.

def _mask(n: int, d: int) -> np.ndarray:
    """Which of ``[Re c, Im c]`` are free, with ``c = (a_k, b_km, z_km)`` complex."""
    free = np.ones(n + 2 * n * (d + 1), dtype=bool)
    free[0] = False
    z0 = n + n * (d + 1) + np.arange(1 if n == 2 else n) * (d + 1)
    free[z0] = False
    return np.concatenate([free, free])


def _complex_vector(params: NnoidParams) -> np.ndarray:
    return np.concatenate([params.a[:, 0], params.b.ravel(), params.z.ravel()])


def _pack(params: NnoidParams) -> np.ndarray:
    c = _complex_vector(params)
    return np.concatenate([c.real, c.imag])[_mask(params.n, params.degree)]


def _unpack(x: np.ndarray, base: NnoidParams) -> NnoidParams:
    n, d = base.n, base.degree
    c = _complex_vector(base)
    full = np.concatenate([c.real, c.imag])
    full[_mask(n, d)] = x
    h = full.size // 2
    c = full[:h] + 1j * full[h:]
    a = np.zeros((n, d + 1), dtype=complex)
    a[:, 0] = c[:n]
    b = c[n:n + n * (d + 1)].reshape(n, d + 1)
    z = c[n + n * (d + 1):].reshape(n, d + 1)
    return base.copy(a=a, b=b, z=z)


def _scaled_residual(params: NnoidParams, cfg: BalanceConfig, mono: np.ndarray) -> np.ndarray:
    u = unitarity_residual(params, cfg, mono=mono) / params.t
    inf = infinity_residual(params)
    return np.concatenate([u, inf.real, inf.imag])


def _augmented_loop(params: NnoidParams, path: FramePath, lam: np.ndarray, tol: float):
    """Frame along ``path`` with the quadratures ``J_kp = int Phi E21 Phi^-1 (z - z_k)^-p dz``.

    Returns ``M`` of shape ``(L, 2, 2)`` and ``J`` of shape ``(n, 3, L, 2, 2)``.
    """
    n, m = params.n, lam.size
    a, b, zk = params.series(lam)
    c = 1j * params.t * (lam * lam + 1)
    nphi = 4 * m

    def rhs(s, y, seg):
        z = seg.point(s)
        v = seg.speed(s)
        phi = y[:nphi].reshape(m, 2, 2)
        d = z - zk
        om = np.sum(a / d ** 2 + b / d, axis=0)
        dphi = np.empty_like(phi)
        dphi[:, :, 0] = phi[:, :, 1] * (c * om)[:, None]
        dphi[:, :, 1] = phi[:, :, 0] / lam[:, None]
        # Phi E21 Phi^-1 = (second column of Phi) (first row of adj Phi)
        u = phi[:, :, 1]
        w = np.stack([phi[:, 1, 1], -phi[:, 0, 1]], axis=-1)
        core = u[:, :, None] * w[:, None, :]
        inv = 1 / d
        pw = np.stack([inv, inv ** 2, inv ** 3], axis=1)
        dj = pw[..., None, None] * core
        return np.concatenate([dphi.ravel(), dj.ravel()]) * v

    y = np.concatenate([np.broadcast_to(np.eye(2, dtype=complex), (m, 2, 2)).ravel(),
                        np.zeros(n * 3 * m * 4, dtype=complex)])
    for seg in path.segments:
        sol = solve_ivp(rhs, (0.0, 1.0), y, method="DOP853", rtol=tol, atol=tol, args=(seg,))
        if not sol.success:
            raise FrameError(f"frame integration failed: {sol.message}")
        y = sol.y[:, -1]
    return y[:nphi].reshape(m, 2, 2), y[nphi:].reshape(n, 3, m, 2, 2)


def _star_derivative(M: np.ndarray, dM: np.ndarray, form) -> np.ndarray:
    """Derivative of ``star_samples`` at ``M`` in the direction ``dM`` (last axes ``L, 2, 2``)."""
    ms = star_samples(M, form)
    d = dM
    if form.delta == -1:
        d = np.roll(d, -(d.shape[-3] // 2), axis=-3)
    if form.epsilon == -1:
        d = d.copy()
        d[..., 0, 1] *= -1
        d[..., 1, 0] *= -1
    return -ms @ np.conj(np.swapaxes(d, -1, -2)) @ ms


def _residual_and_jacobian(params: NnoidParams, cfg: BalanceConfig, tol: float):
    """Scaled residual ``[(M* - M)/t, infinity sums]`` and its exact real Jacobian."""
    lam = cfg.lam_samples()
    n, D, L = params.n, params.degree, lam.size
    a, b, _ = params.series(lam)
    c = 1j * params.t * (lam * lam + 1)
    powers = lam[None, :] ** np.arange(D + 1)[:, None]
    mono, cols = [], []
    for path in _loops(cfg, params):
        M, J = _augmented_loop(params, path, lam, tol)
        mono.append(M)
        # complex directions for a_k, b_km, z_km; each (L, 2, 2)
        dirs = []
        for k in range(n):
            dirs.append(J[k, 1])
        for k in range(n):
            for j in range(D + 1):
                dirs.append(powers[j][:, None, None] * J[k, 0])
        for k in range(n):
            dz = 2 * a[k][:, None, None] * J[k, 2] + b[k][:, None, None] * J[k, 1]
            for j in range(D + 1):
                dirs.append(powers[j][:, None, None] * dz)
        psi = np.stack(dirs) * c[None, :, None, None]
        dm = psi @ M
        cols.append(dm)
    mono = np.stack(mono)
    res = _scaled_residual(params, cfg, mono)
    nc = cols[0].shape[0]
    jac = np.empty((res.size, 2 * nc))
    for part, unit in ((0, 1.0), (1, 1j)):
        blocks = []
        for M, dm in zip(mono, cols):
            d = unit * dm
            blocks.append((_star_derivative(M, d, cfg.form) - d) / params.t)
        du = np.stack(blocks, axis=1).reshape(nc, -1)
        dinf = _infinity_jacobian(params, unit)
        jac[:, part * nc:(part + 1) * nc] = np.concatenate(
            [du.real, du.imag, dinf.real, dinf.imag], axis=1).T
    jac = jac[:, _mask(n, D)]
    return res, jac, mono


def _infinity_jacobian(params: NnoidParams, unit: complex) -> np.ndarray:
    """Rows: complex directions ``(a_k, b_km, z_km)``; columns: infinity-sum coefficients."""
    c = _complex_vector(params)
    n, d = params.n, params.degree
    base = infinity_residual(params)
    out = []
    for j in range(c.size):
        v = c.copy()
        v[j] += unit * FD_STEP
        a = np.zeros((n, d + 1), dtype=complex)
        a[:, 0] = v[:n]
        trial = params.copy(a=a, b=v[n:n + n * (d + 1)].reshape(n, d + 1), z=v[n + n * (d + 1):].reshape(n, d + 1))
        out.append((infinity_residual(trial) - base) / FD_STEP)
    return np.array(out)


def _norm(params: NnoidParams, res: np.ndarray) -> float:
    """Max of ``|M* - M|`` (unscaled) and of the infinity sums."""
    k = 6 * (params.degree + 1)
    return float(max(np.max(np.abs(res[:-k])) * params.t, np.max(np.abs(res[-k:]))))


def _anchored_step(jac: np.ndarray, res: np.ndarray, pull: np.ndarray) -> np.ndarray:
    """Truncated Gauss-Newton step; along the discarded weak directions move by ``pull``.

    The weak directions are the first-order moves along the family of
    balanced configurations, so the projection of ``pull`` keeps the
    solution on the branch through the initial data.
    """
    u, sv, vt = np.linalg.svd(jac, full_matrices=False)
    keep = sv > RCOND * sv[0]
    vk = vt[keep]
    step = vk.T @ ((u[:, keep].T @ -res) / sv[keep])
    return step + pull - vk.T @ (vk @ pull)


def _newton(params: NnoidParams, cfg: BalanceConfig, tol: float, max_iter: int, ode_tol: float,
            trace: SolveTrace) -> NnoidParams:
    x = _pack(params)
    anchor = _pack(pad_degree(cfg.initial(params.t), params.degree))
    res, jac, _ = _residual_and_jacobian(params, cfg, ode_tol)
    norms = [_norm(params, res)]
    try:
        for it in range(max_iter):
            if norms[-1] <= tol:
                return params
            step = _anchored_step(jac, res, anchor - x)
            x = x + step
            params = _unpack(x, params)
            res, jac, _ = _residual_and_jacobian(params, cfg, ode_tol)
            norms.append(_norm(params, res))
            if norms[-1] <= tol:
                return params
            # allow a transient rise while the weak directions settle
            if not np.isfinite(norms[-1]) or norms[-1] > 1e3 * norms[0] or (it > 2 and norms[-1] > 0.5 * norms[-2]):
                raise SolverDivergence(f"residual stalled at {norms[-1]:.3e} for t = {params.t:g}", norms[-1])
        if norms[-1] > tol:
            raise SolverDivergence(f"no convergence in {max_iter} steps (residual {norms[-1]:.3e})", norms[-1])
        return params
    finally:
        trace.residuals.append(norms)


def pad_degree(params: NnoidParams, degree: int) -> NnoidParams:
    """Same parameters with series stored up to a larger ``degree`` (zero padded)."""
    d0 = params.degree
    if degree < d0:
        raise ValueError("can only raise the series degree")

    def pad(c):
        out = np.zeros((params.n, degree + 1), dtype=complex)
        out[:, :d0 + 1] = c
        return out

    return NnoidParams(params.tau, params.p, params.t, pad(params.a), pad(params.b), pad(params.z), degree)


def series_tail(params: NnoidParams) -> float:
    """Largest coefficient of degree ``D - 1`` or ``D`` in ``b_k, z_k``, relative to ``max(1, |b(0)|)``."""
    ref = max(1.0, float(np.max(np.abs(params.b[:, 0]))))
    tail = max(np.max(np.abs(params.b[:, -2:])), np.max(np.abs(params.z[:, -2:])))
    return float(tail) / ref


def solve_nnoid(cfg: BalanceConfig, t: float, tol: float = 1e-7, t_start: float = 1e-4,
                step: float = 0.5, max_iter: int = 10, ode_tol: float = 1e-11,
                min_step: float = 0.01, tail_tol: float = 1e-9, max_degree: int = 64
                ) -> tuple[NnoidParams, SolveTrace]:
    """Continue from the sphere at ``t = 0`` to ``t`` with Newton corrections.

    Parameters
    ----------
    cfg : BalanceConfig
    t : float
        Target deformation parameter, ``0 <= t < cfg.t_max``.
    tol : float
        Target for the max-norm of ``M* - M`` and of the regularity sums.
    t_start : float
        First continuation value.
    step : float
        Initial relative step ``t_next / t - 1``; enlarged after quick
        convergence and halved after a failed correction.
    min_step : float
        Give up when the relative step falls below this.
    tail_tol : float
        When the series tail exceeds this, the degree grows by 8 (up to
        ``max_degree``) and the step is solved again.

    Returns
    -------
    params : NnoidParams
    trace : SolveTrace

    Raises
    ------
    SolverDivergence
        If the continuation step collapses without convergence.
    """
    trace = SolveTrace()
    bal = balance_residual(cfg.tau, cfg.p)
    scale = float(np.sum(np.abs(cfg.tau) * (1 + np.abs(cfg.p) ** 2) / np.abs(1 - np.abs(cfg.p) ** 2)))
    if max(abs(v) for v in bal) > BALANCE_TOL * max(scale, 1.0):
        raise ValueError(f"configuration is not balanced: {bal}")
    if not 0 <= t < cfg.t_max:
        raise ValueError(f"t must lie in [0, {cfg.t_max})")
    params = cfg.initial(0.0)
    if t == 0:
        trace.params, trace.converged = params, True
        return params, trace

    cur, prev = 0.0, None
    nxt = min(t, t_start)
    while True:
        guess = params.copy(t=nxt)
        if prev is not None:
            # secant predictor along the continuation path
            tp, pp = prev
            x = _pack(params) + (_pack(params) - _pack(pp)) * (nxt - cur) / (cur - tp)
            guess = _unpack(x, guess)
        try:
            trial = _newton(guess, cfg, tol, max_iter, ode_tol, trace)
        except (SolverDivergence, FrameError) as err:
            step *= 0.5
            if step < min_step or cur == 0.0:
                if cur == 0.0 and nxt > 1e-8:
                    nxt *= 0.1
                    continue
                trace.params, trace.message = params, str(err)
                err = err if isinstance(err, SolverDivergence) else SolverDivergence(str(err), np.inf)
                err.trace = trace
                raise err
            nxt = min(t, cur * (1 + step))
            continue
        if series_tail(trial) > tail_tol and trial.degree < max_degree:
            d = min(max_degree, trial.degree + 8)
            cfg = replace(cfg, degree=d, samples=None)
            params = pad_degree(params, d)
            if prev is not None:
                prev = (prev[0], pad_degree(prev[1], d))
            trace.degrees.append((nxt, d))
            continue
        if len(trace.residuals[-1]) <= 3:
            step = min(1.5 * step, 2.0)
        prev = (cur, params)
        params, cur = trial, nxt
        trace.t_steps.append(cur)
        if cur >= t:
            break
        nxt = min(t, cur * (1 + step))
    trace.params, trace.converged = params, True
    trace.config = cfg
    return params, trace


def end_exponents(params: NnoidParams, lam) -> np.ndarray:
    """Predicted end exponents ``nu_k`` with ``kappa = 4 i t (lam^2 + 1)/lam``, shape ``(n, len(lam))``."""
    lam = np.asarray(lam, dtype=complex)
    kappa = 4j * params.t * (lam * lam + 1) / lam
    return np.stack([fuchsian_nu(tk, kappa) for tk in params.a[:, 0]])


def end_eigenvalue_residuals(params: NnoidParams, cfg: BalanceConfig, mono: np.ndarray | None = None) -> np.ndarray:
    """Per end, max deviation of the half-trace of ``M_k`` from ``cos(2 pi nu_k)``."""
    lam = cfg.lam_samples()
    if mono is None:
        mono = monodromies(params, cfg)
    half = 0.5 * np.trace(mono, axis1=-2, axis2=-1)
    pred = np.cos(2 * np.pi * end_exponents(params, lam))
    return np.max(np.abs(half - pred), axis=1)


@dataclass
class HoledDomain:
    """``|z| < 1 - delta`` with disks of radius ``delta`` removed around in-disk poles."""

    radius: float
    holes: list
    delta: float

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        ok = np.abs(z) < self.radius
        for c in self.holes:
            ok &= np.abs(z - c) > self.delta
        return ok


def open_nnoid_domain(params: NnoidParams, delta: float, lam=None) -> HoledDomain:
    """The n-holed domain on which the solved potential is meshed.

    Each hole must contain the whole image ``z_k(lam)`` of its pole for
    ``|lam| = 1`` (hence for ``|lam| <= 1``), and poles outside the disk must
    stay clear of ``|z| < 1 - delta``.

    Raises
    ------
    ValueError
        If ``delta`` is not in ``(0, 1)``, two holes (or a hole and the outer
        circle) overlap, or a pole image leaves its hole.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    lam = grid(32) if lam is None else np.asarray(lam, dtype=complex)
    reach = pole_reach(params, lam) if params.t else np.zeros(params.n)
    r = 1 - delta
    centers = []
    for c, e in zip(params.p, reach):
        c = complex(c)
        if abs(c) >= 1:
            if abs(c) - e <= r:
                raise ValueError(f"image of the pole at {c} enters the domain")
            continue
        if e >= delta:
            raise ValueError(f"image of the pole at {c} (reach {e:.3g}) leaves the hole of radius {delta}")
        centers.append(c)
    for i, c in enumerate(centers):
        if abs(c) + delta >= r:
            raise ValueError(f"hole at {c} meets the outer boundary")
        if abs(c) <= delta:
            raise ValueError(f"hole at {c} contains the basepoint")
        for d in centers[:i]:
            if abs(c - d) <= 2 * delta:
                raise ValueError(f"holes at {d} and {c} overlap")
    return HoledDomain(r, centers, delta)


__all__ = [
    "BalanceConfig", "SolveTrace", "SolverDivergence", "HoledDomain", "balance_residual",
    "infinity_residual", "unitarity_residual", "first_order_monodromy", "monodromies", "solve_nnoid",
    "end_exponents", "end_eigenvalue_residuals", "open_nnoid_domain",
]
