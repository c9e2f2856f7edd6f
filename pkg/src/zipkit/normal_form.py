"""Hopf normal-form coefficients.

On the center manifold the dynamics reduce to

    dA/dt = i*omega*A + a*(mu - mu_star)*A + b*A*|A|^2 + ...

``Re a`` is the crossing speed of the critical pair and ``sgn Re b`` decides
between a supercritical (stable orbits) and a subcritical bifurcation.
"""
from dataclasses import dataclass
import logging

import numpy as np

from . import model
from .equilibrium import d_mu_u_star, solve_steady_state
from .errors import DegenerateBifurcation, DegenerateEigenvalue, ResonantEigenvalue
from .numerics.linalg import eigenvalues, hermitian_inner, inf_norm, lu_factor, lu_substitute, lu_solve

log = logging.getLogger(__name__)

EIG_TOL = 1e-8
PSI001_TOL = 1e-8
DEGENERATE_B = 1e-10


@dataclass
class NormalFormResult:
    mu_star: float
    omega: float
    xi: np.ndarray
    xi_star: np.ndarray
    a: complex
    b: complex
    psi001: np.ndarray
    psi200: np.ndarray
    psi110: np.ndarray
    criticality: str
    orbit_side: str

    @property
    def amplitude_slope(self):
        """Predicted slope of |A|^2 against (mu - mu_star)."""
        return -self.a.real / self.b.real


def eigenvector(M, shift, iters=4):
    """Eigenvector of ``M`` for the simple eigenvalue ``shift`` by inverse
    iteration with a slightly perturbed shift."""
    n = M.shape[0]
    delta = 1e-8 * max(1.0, inf_norm(M))
    A = M.astype(complex) - (shift + delta) * np.eye(n)
    LU, perm = lu_factor(A)
    v = np.ones(n, dtype=complex) / np.sqrt(n)
    for _ in range(iters):
        v = lu_substitute(LU, perm, v)
        v /= np.linalg.norm(v)
    return v


def _fix_phase(v):
    """Unit 2-norm, largest-magnitude component real positive."""
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def critical_eigenvectors(J, omega):
    """Right eigenvector ``xi`` for ``i*omega`` and adjoint vector ``xi_star``.

    ``xi`` has unit 2-norm with its largest component real positive;
    ``xi_star`` solves ``J^T xi_star = -i omega xi_star`` and is scaled so that
    ``<xi, xi_star> = 1``.

    Raises
    ------
    DegenerateEigenvalue
        ``i*omega`` is not a simple eigenvalue of ``J``.
    """
    J = np.asarray(J, dtype=float)
    target = 1j * omega
    tol = EIG_TOL * max(1.0, inf_norm(J))
    near = [z for z in eigenvalues(J) if abs(z - target) < tol]
    if len(near) != 1:
        raise DegenerateEigenvalue(
            f"{len(near)} eigenvalues within {tol:.1e} of {target}; need exactly one")
    xi = _fix_phase(eigenvector(J, target))
    xs = eigenvector(J.T, -target)
    s = hermitian_inner(xi, xs)
    if abs(s) < 1e-14:
        raise DegenerateEigenvalue("right and adjoint eigenvectors are orthogonal")
    xs = xs / np.conj(s)
    return xi, xs


def solve_psi_001(J, d_mu_u, params, mu_star, u_star):
    """Solve ``-J psi = dF/dmu + J d_mu_u``.

    By the steady-state identity the right-hand side vanishes, so the result is
    zero up to rounding; a larger value signals an inconsistent ``d_mu_u``.
    """
    rhs = model.dF_dmu(u_star, mu_star, params) + J @ d_mu_u
    psi = lu_solve(-np.asarray(J, dtype=float), rhs)
    return psi


def coefficient_a(xi, xi_star, psi001, d_mu_u, u_star, mu_star, params):
    """Linear coefficient ``<D20F(xi, psi001 + d_mu u*) + D11F xi, xi_star>``."""
    shifted = psi001 + d_mu_u
    v = model.d20F(xi, shifted, u_star, params) + model.d11F(mu_star, params) @ xi
    return complex(hermitian_inner(v, xi_star))


def second_order_terms(xi, J, omega, u_star, params):
    """``psi200`` and ``psi110`` of the center-manifold expansion."""
    n = J.shape[0]
    Jc = np.asarray(J, dtype=complex)
    if any(abs(z - 2j * omega) < EIG_TOL * max(1.0, inf_norm(J)) for z in eigenvalues(J)):
        raise ResonantEigenvalue(f"2i*omega = {2j * omega} is an eigenvalue")
    xib = np.conj(xi)
    psi200 = lu_solve(2j * omega * np.eye(n) - Jc, 0.5 * model.d20F(xi, xi, u_star, params))
    psi110 = -lu_solve(Jc, model.d20F(xi, xib, u_star, params))
    return psi200, psi110


def coefficient_b(xi, xi_star, J, omega, u_star, params):
    """Cubic coefficient ``b``; returns ``(b, psi200, psi110)``."""
    psi200, psi110 = second_order_terms(xi, J, omega, u_star, params)
    xib = np.conj(xi)
    v = (model.d20F(xi, psi110, u_star, params)
         + model.d20F(xib, psi200, u_star, params)
         + 0.5 * model.d30F(xi, xi, xib, u_star, params))
    return complex(hermitian_inner(v, xi_star)), psi200, psi110


def classify(a, b, transversality_sign):
    """``(criticality, orbit_side)`` from ``Re b`` and the crossing direction.

    Orbits live on the side where the steady state is unstable: to the right
    of the critical value when the pair moves into the right half-plane with
    increasing mu.
    """
    if abs(b.real) < DEGENERATE_B:
        raise DegenerateBifurcation(f"|Re b| = {abs(b.real):.3e} too small to classify")
    criticality = "supercritical" if b.real < 0 else "subcritical"
    side = "right_of_mu_star" if transversality_sign > 0 else "left_of_mu_star"
    return criticality, side


def normal_form(mu_star, omega=None, params=None):
    """All normal-form data at a Hopf point located at ``mu_star``."""
    params = params or model.ModelParams()
    ss = solve_steady_state(mu_star, params, allow_outside=True)
    J = ss.jac
    if omega is None:
        omega = max(z.imag for z in eigenvalues(J))
    xi, xs = critical_eigenvectors(J, omega)
    dmu = d_mu_u_star(mu_star, params, allow_outside=True)
    psi001 = solve_psi_001(J, dmu, params, mu_star, ss.u_star)
    if np.max(np.abs(psi001)) >= PSI001_TOL:
        log.warning("psi001 = %s not zero at mu=%g", psi001, mu_star)
    a = coefficient_a(xi, xs, psi001, dmu, ss.u_star, mu_star, params)
    b, psi200, psi110 = coefficient_b(xi, xs, J, omega, ss.u_star, params)
    crit, side = classify(a, b, a.real)
    return NormalFormResult(mu_star=float(mu_star), omega=float(omega), xi=xi,
                            xi_star=xs, a=a, b=b, psi001=psi001, psi200=psi200,
                            psi110=psi110, criticality=crit, orbit_side=side)


def solvability_residuals(res, params=None):
    """Projections onto ``xi_star`` of the order-(1,0,1) and (2,1,0) equations
    after removing ``a*xi`` and ``b*xi``; both vanish by construction of
    ``a`` and ``b``."""
    params = params or model.ModelParams()
    ss = solve_steady_state(res.mu_star, params, allow_outside=True)
    dmu = d_mu_u_star(res.mu_star, params, allow_outside=True)
    xi, xib = res.xi, np.conj(res.xi)
    r101 = (model.d20F(xi, res.psi001 + dmu, ss.u_star, params)
            + model.d11F(res.mu_star, params) @ xi - res.a * xi)
    r210 = (model.d20F(xi, res.psi110, ss.u_star, params)
            + model.d20F(xib, res.psi200, ss.u_star, params)
            + 0.5 * model.d30F(xi, xi, xib, ss.u_star, params) - res.b * xi)
    return (complex(hermitian_inner(r101, res.xi_star)),
            complex(hermitian_inner(r210, res.xi_star)))
