import numpy as np
import pytest

from zipkit import model
from zipkit.equilibrium import solve_steady_state

P = model.ModelParams()


def fd_jacobian(F, u, h=1e-7):
    u = np.asarray(u, dtype=float)
    cols = []
    for j in range(u.size):
        e = np.zeros_like(u)
        e[j] = h
        cols.append((F(u + e) - F(u - e)) / (2 * h))
    return np.array(cols).T


@pytest.mark.parametrize("mu", [0.0, 0.5, 12.0, 30.0])
def test_jacobian_matches_differences(mu):
    u = np.array([0.4, 0.3, 0.6, 0.2])
    J = model.jacobian(u, mu, P)
    assert np.allclose(J, fd_jacobian(lambda v: model.rhs(v, mu, P), u), rtol=1e-7, atol=1e-5)


def test_mu_derivatives():
    u = np.array([0.4, 0.3, 0.6, 0.2])
    mu, h = 2.0, 1e-6
    fd = (model.rhs(u, mu + h, P) - model.rhs(u, mu - h, P)) / (2 * h)
    assert np.allclose(model.dF_dmu(u, mu, P), fd, atol=1e-8)
    fdJ = (model.jacobian(u, mu + h, P) - model.jacobian(u, mu - h, P)) / (2 * h)
    assert np.allclose(model.d11F(mu, P), fdJ, atol=1e-8)


def test_second_and_third_derivatives():
    rng = np.random.default_rng(0)
    u = np.array([0.4, 0.3, 0.6, 0.2])
    x, y, z = rng.normal(size=(3, 4))
    h = 1e-4
    # directional second derivative of F equals d20F(x, x)
    F = lambda v: model.rhs(v, 1.0, P)
    fd2 = (F(u + h * x) - 2 * F(u) + F(u - h * x)) / h ** 2
    assert np.allclose(model.d20F(x, x, u, P), fd2, rtol=1e-5, atol=1e-3)
    # polarization gives the mixed form
    fdxy = (F(u + h * (x + y)) - F(u + h * x) - F(u + h * y) + F(u)) / h ** 2
    assert np.allclose(model.d20F(x, y, u, P), fdxy, rtol=1e-3, atol=1e-1)
    # third derivative: d/dt d20F(x, y; u + t z)
    fd3 = (model.d20F(x, y, u + h * z, P) - model.d20F(x, y, u - h * z, P)) / (2 * h)
    assert np.allclose(model.d30F(x, y, z, u, P), fd3, rtol=1e-8, atol=1e-8)
    # complex directions are accepted
    assert np.iscomplexobj(model.d20F(x + 1j * y, x, u, P))


def test_mu_zero_spectrum_exact():
    ss = solve_steady_state(0.0)
    assert np.allclose(sorted(np.linalg.eigvals(ss.jac).real), [-1673, -21, -1, -1], atol=1e-9)


@pytest.mark.parametrize("mu,bp", [(1.0, model.BufferParams(0.0, 0.0)),
                                   (1.0, model.BufferParams(1.0, 1.0)),
                                   (5.0, model.BufferParams(1000.0, 0.1))])
def test_characteristic_polynomial_vanishes_on_spectrum(mu, bp):
    ss = solve_steady_state(mu)
    Jb = model.jacobian_buffered(ss.u_star, mu, P, bp)
    s = model.shorthand(ss.u_star, mu, P)
    coeffs = model.char_poly_coeffs(s, bp.p1, bp.p2)
    ev = np.linalg.eigvals(Jb)
    scale = np.abs(coeffs).max() * max(1, np.abs(ev).max()) ** 5
    for lam in ev:
        assert abs(model.char_poly_buffered(lam, mu, P, bp, ss.u_star)) < 1e-10 * scale
    # det(Jb - lam I) agrees at an arbitrary point, coefficients agree with chi
    lam = 0.3 - 0.7j
    assert model.char_poly_buffered(lam, mu, P, bp, ss.u_star) == pytest.approx(
        np.linalg.det(Jb - lam * np.eye(5)), rel=1e-10)
    assert np.polynomial.polynomial.polyval(lam, coeffs) == pytest.approx(
        model._chi(lam, s, bp.p1, bp.p2), rel=1e-12)


def test_characteristic_polynomial_partials():
    ss = solve_steady_state(1.0)
    s = model.shorthand(ss.u_star, 1.0, P)
    lam, p1, p2, h = -0.4 + 1.1j, 2.0, 0.7, 1e-6
    d_lam, d_p1, d_p2 = model.char_poly_partials(lam, s, p1, p2)
    chi = lambda l, a, b: model._chi(l, s, a, b)
    assert d_lam == pytest.approx((chi(lam + h, p1, p2) - chi(lam - h, p1, p2)) / (2 * h), rel=1e-7)
    assert d_p1 == pytest.approx((chi(lam, p1 + h, p2) - chi(lam, p1 - h, p2)) / (2 * h), rel=1e-7)
    assert d_p2 == pytest.approx((chi(lam, p1, p2 + h) - chi(lam, p1, p2 - h)) / (2 * h), rel=1e-7)


def test_buffered_jacobian_and_decoupled_limit():
    bp = model.BufferParams(3.0, 0.5)
    ss = solve_steady_state(2.0)
    u5 = ss.buffered(bp)
    assert np.max(np.abs(model.rhs_buffered(u5, 2.0, P, bp))) < 1e-12
    J = model.jacobian_buffered(ss.u_star, 2.0, P, bp)
    assert np.allclose(J, fd_jacobian(lambda v: model.rhs_buffered(v, 2.0, P, bp), u5),
                       rtol=1e-7, atol=1e-5)
    # p2 = 0: unbuffered spectrum plus 0
    J0 = model.jacobian_buffered(ss.u_star, 2.0, P, model.BufferParams(3.0, 0.0))
    ev = sorted(np.linalg.eigvals(J0), key=lambda z: (z.real, z.imag))
    ref = sorted(list(np.linalg.eigvals(ss.jac)) + [0.0], key=lambda z: (z.real, z.imag))
    assert np.allclose(ev, ref, atol=1e-9)


def test_shifted_polynomial_roots_are_spectrum_plus_one():
    ss = solve_steady_state(4.0)
    s = model.shorthand(ss.u_star, 4.0, P)
    roots = np.polynomial.polynomial.polyroots(model.shifted_char_poly_coeffs(s)) - 1.0
    ev = np.linalg.eigvals(ss.jac)
    key = lambda z: (round(z.real, 6), z.imag)
    assert np.allclose(sorted(roots, key=key), sorted(ev, key=key), rtol=1e-8)


def test_parameter_validation():
    with pytest.raises(ValueError):
        model.ModelParams(kappa=-1.0)
    with pytest.raises(ValueError):
        model.ModelParams(gamma2=np.inf)
    with pytest.raises(ValueError):
        model.BufferParams(p1=-0.1)
    with pytest.raises(ValueError):
        model.check_mu(-1.0)
    with pytest.raises(ValueError):
        model.check_mu(31.0)
    model.check_mu(31.0, allow_outside=True)
