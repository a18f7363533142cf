import numpy as np
import pytest

from loopcmc.closing import (DressingError, SignMismatchError, check_closing, common_eigenvector, conjugate,
                             conjugate_by_simple_factor, dress, dressing_k, entries_at, extract_pqr,
                             halftraces_from_residues, phi_from_entries, phi_leading_coefficient,
                             reducibility_value, reducible_lambda_set, simple_factor, simple_factor_p,
                             trace_polynomial, trinoid_unitarizer)
from loopcmc.factor import iwasawa
from loopcmc.frame import FramePath, integrate_samples, loop_around, monodromy, monodromy_rep
from loopcmc.loopalg import MatrixLoop, ScalarLoop, eval_plus, grid, is_unitary
from loopcmc.potential import TrinoidParams, delaunay_potential_h3, trinoid_f, trinoid_potential

N = 32


def test_check_closing_examples():
    minus = MatrixLoop.constant(-np.eye(2), N)
    rep = check_closing([minus, minus], "H3", 1.0, -1.0)
    assert rep.closes and max(rep.intrinsic) == 0 and max(rep.extrinsic) < 1e-15
    M = monodromy(delaunay_potential_h3(2.0), 0, 1.0, N, 1.0)
    assert check_closing([M], "H3", 1.0, -1.0).closes
    bad = MatrixLoop.from_dict({0: np.eye(2), -1: [[0, 1], [0, 0]]}, N)
    rep = check_closing([bad], "S3", 1.0, -1.0)
    assert not rep.closes and rep.intrinsic[0] > 0.5


def test_trace_polynomial_identities():
    assert trace_polynomial(1, 1, 1) == 0
    assert trace_polynomial(0, 0, 0) == 1
    t = np.linspace(-2, 2, 9)
    assert np.allclose(trace_polynomial(t, t, 1), 0)


def test_phi_leading_coefficient():
    assert phi_leading_coefficient(1, 1, 1) == pytest.approx(3 * np.pi ** 4 / 64)
    assert phi_leading_coefficient(1, 1, 1) == pytest.approx(4.5661, abs=1e-4)
    a, b = 0.1, 0.35
    assert phi_leading_coefficient(a, a, b) == pytest.approx(np.pi ** 4 / 64 * b ** 2 * (4 * a ** 2 - b ** 2))
    assert phi_leading_coefficient(1, 1, 2) == 0


def test_halftraces_trivial_cases():
    params = TrinoidParams(0.1, 0.15, "H3", 1.0)
    f = ScalarLoop.from_function(lambda lam: trinoid_f(params, lam), N)
    t0, t1, t2 = halftraces_from_residues(0.0, 0.0, 0.0, f)
    assert np.allclose(t0.samples, 1)
    # kappa vanishes at the evaluation points lam = 1, -1
    assert np.allclose(t2.eval(1.0), 1, atol=1e-10)


@pytest.fixture(scope="module")
def h3_trinoid():
    params = TrinoidParams(0.1, 0.15, "H3", 1.0)
    pot = trinoid_potential(params)
    return params, pot, monodromy_rep(pot, 0.0, N)


def test_halftraces_match_ode(h3_trinoid):
    params, pot, rep = h3_trinoid
    f = ScalarLoop.from_function(lambda lam: trinoid_f(params, lam), N)
    pred = halftraces_from_residues(0.1, 0.1, 0.15, f)
    for M, t in zip(rep.generators, pred):
        assert np.max(np.abs(0.5 * np.trace(M.samples, axis1=1, axis2=2) - t.samples)) < 1e-6


def test_phi_entries_formula(h3_trinoid):
    _params, _pot, rep = h3_trinoid
    halves = [0.5 * np.trace(M.samples, axis1=1, axis2=2) for M in rep.generators]
    ent = extract_pqr(rep.generators[0])
    phi_e = phi_from_entries(ent.p.samples, ent.q.samples, ent.r.samples, ent.rstar.samples)
    assert np.max(np.abs(trace_polynomial(*halves) - phi_e)) < 1e-7
    lam = grid(N)[:4]
    p, q, r, rs = entries_at(rep.generators[0].samples[:4], lam)
    assert np.allclose(phi_from_entries(p, q, r, rs), phi_e[:4])


def test_unitarizer_synthetic():
    # p = 1, q = delta*eps * (1 + lam/2)^* (1 + lam/2)
    for form, sign in (("S3", 1), ("H3", -1)):
        delta = 1 if form == "S3" else -1
        xp = ScalarLoop.from_dict({0: 1.0, 1: 0.5}, N)
        q = sign * (xp.star(delta) * xp)
        lam = grid(N)
        m0 = np.zeros((lam.size, 2, 2), dtype=complex)
        m0[:, 0, 0] = m0[:, 1, 1] = 1
        m0[:, 0, 1] = lam
        m0[:, 1, 0] = -q.samples / lam
        res = trinoid_unitarizer(MatrixLoop.from_samples(m0, N), None, form)
        assert np.allclose(res.x_plus.coeffs, xp.coeffs, atol=1e-10)


def test_unitarizer_h3_trinoid():
    rep = monodromy_rep(trinoid_potential(TrinoidParams(0.1, 0.35, "H3", 1.0)), 0.0, N)
    res = trinoid_unitarizer(rep.generators[0], rep.generators[1], "H3", extra=[rep.generators[2]])
    assert max(res.residuals) < 1e-6
    assert res.X.negative_part_norm() < 1e-9


def test_unitarizer_sign_mismatch(h3_trinoid):
    _params, _pot, rep = h3_trinoid
    with pytest.raises(SignMismatchError):
        trinoid_unitarizer(rep.generators[0], rep.generators[1], "H3")


def test_simple_factor():
    mu = 0.5 + 0.2j
    assert simple_factor_p(mu, 0.0) == pytest.approx(-mu)
    assert simple_factor_p(mu, mu) == 0
    lam = grid(N)
    p = simple_factor_p(mu, lam)
    pstar = np.conj(simple_factor_p(mu, -1 / np.conj(lam)))
    assert np.max(np.abs(pstar + 1 / p)) < 1e-10
    g = simple_factor(mu, 0.3, N)
    assert np.allclose(g.samples[:, 0, 0] ** 2, simple_factor_p(mu, grid(N, 0.3)))
    with pytest.raises(ValueError):
        simple_factor(mu, 0.7, N)


def test_dress_identity():
    one = MatrixLoop.identity(N)
    assert np.allclose(dressing_k(np.eye(2)), np.eye(2))
    d = dress(0.5, one)
    assert d.dressed.max_diff(one) < 1e-12
    with pytest.raises(DressingError):
        dressing_k(np.eye(2, dtype=complex), (1.0, 1.0))


def test_reducible_lambda_set():
    mus = reducible_lambda_set(0.1, 1.0, "dS3", window=(0.1, 10))
    assert mus
    for mu in mus:
        v = reducibility_value(0.1, 1.0, "dS3", mu)
        assert min(abs(v - np.round(v.real)), abs(-v + 3 - np.round(3 - v.real))) < 1e-8
    d = np.abs(np.subtract.outer(mus, mus)) + np.eye(len(mus))
    assert d.min() > 1e-8
    assert reducible_lambda_set(0.1, 1.0, "dS3", window=(100, 101)) == []


def dressing_swap(a=0.1, lam0=1.0, z=0.3 + 0.2j, n=N):
    """Dress a unitarized dS3 trinoid frame at a reducible point; return residuals."""
    pot = trinoid_potential(TrinoidParams(a, a, "dS3", lam0))
    rep = monodromy_rep(pot, 0.0, n)
    X = trinoid_unitarizer(rep.generators[0], rep.generators[1], "dS3").X
    M0 = conjugate(X, rep.generators[0])
    path = FramePath.polyline([0, z])
    xphi = X @ MatrixLoop.from_samples(integrate_samples(pot, path, grid(n)), n)
    mus = [m for m in reducible_lambda_set(a, lam0, "dS3", window=(0.3, 1.0)) if abs(m.imag) < 1e-12]
    out = []
    for mu in mus:
        xm = eval_plus(X, mu)
        mono = [xm @ integrate_samples(pot, loop_around(0.0, s, 0.5), np.array([mu]))[0] @ np.linalg.inv(xm)
                for s in (1.0, -1.0)]
        ell, col = common_eigenvector(mono)
        phi_mu = integrate_samples(pot, path, np.array([mu]))[0]
        fr = []
        for pre, pre_mu in ((xphi, np.eye(2)), (M0 @ xphi, mono[0])):
            iw = iwasawa(pre, "dS3")
            f_mu = pre_mu @ xm @ phi_mu @ np.linalg.inv(eval_plus(iw.positive, mu))
            fr.append(dress(mu, iw.unitary, ell, f_mu).dressed)
        dressed_mono = MatrixLoop.from_samples(fr[1].samples @ np.linalg.inv(fr[0].samples), n)
        out.append((mu, col, is_unitary(fr[0], "H3")[1], dressed_mono.max_diff(conjugate_by_simple_factor(mu, M0))))
    return out


def test_dressing_swaps_real_form():
    results = dressing_swap()
    assert results
    for _mu, col, h3_res, mono_res in results:
        assert col < 1e-8
        assert h3_res < 1e-7
        assert mono_res < 1e-7
