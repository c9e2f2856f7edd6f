"""Steady states of the ZIP model.

Eliminating u1, u2 and u4 reduces the steady-state equations to a quartic in
the activator level u3, with exactly one root in ``(1/(1+gamma1), 1)`` for
any positive parameter set. The root is bracketed, bisected and polished by
Newton, then back-substituted.
"""
from dataclasses import dataclass
import logging

import numpy as np

from . import model
from .errors import (CertificationFailure, MultipleRoots, RootBracketFailure,
                     SteadyStateError)
from .numerics.linalg import det, lu_solve

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-12
BISECT_WIDTH = 1e-10
NEWTON_POLISH = 3
SCAN_POINTS = 10_000


@dataclass
class SteadyState:
    mu: float
    u_star: np.ndarray
    residual_norm: float
    jac: np.ndarray
    det_jac: float

    @property
    def trace_jac(self):
        return float(np.trace(self.jac))

    def buffered(self, bp):
        """Steady state of the buffered model (buffer level ``p1 * u2``)."""
        return np.append(self.u_star, bp.p1 * self.u_star[1])


def quartic_coeffs(f, params):
    """Coefficients ``(c4, c3, c2, c1, c0)`` of the steady-state quartic in u3."""
    k, _, g1, g2, g3 = params.as_tuple()
    return (
        g3 * k,
        (f * g2 * (1.0 + g1) + 1.0 - g3) * k,
        g3 - k - f * g2 * k,
        1.0 - g3,
        -1.0,
    )


def _poly(c, x):
    c4, c3, c2, c1, c0 = c
    return (((c4 * x + c3) * x + c2) * x + c1) * x + c0


def _dpoly(c, x):
    c4, c3, c2, c1, _ = c
    return ((4.0 * c4 * x + 3.0 * c3) * x + 2.0 * c2) * x + c1


def activator_interval(params):
    return 1.0 / (1.0 + params.gamma1), 1.0


def count_sign_changes(c, lo, hi, n=SCAN_POINTS):
    """Sign changes of the quartic on ``n + 2`` equispaced points of ``[lo, hi]``.

    The endpoints are included: roots often sit within one grid cell of
    ``u3 = 1``.
    """
    x = np.linspace(lo, hi, n + 2)
    v = _poly(c, x)
    s = np.sign(v)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def activator_root(f, params, check_unique=True):
    """The unique root of the quartic in the open activator interval."""
    c = quartic_coeffs(f, params)
    lo, hi = activator_interval(params)
    flo, fhi = _poly(c, lo), _poly(c, hi)
    if not (flo < 0.0 < fhi):
        raise RootBracketFailure(f"quartic has no sign change on ({lo}, {hi}): "
                                 f"phi(lo)={flo:.3e}, phi(hi)={fhi:.3e}")
    if check_unique:
        changes = count_sign_changes(c, lo, hi)
        if changes > 1:
            raise MultipleRoots(f"{changes} sign changes of the quartic on ({lo}, {hi})")
    a, b = lo, hi
    while b - a > BISECT_WIDTH:
        m = 0.5 * (a + b)
        if _poly(c, m) < 0.0:
            a = m
        else:
            b = m
    x = 0.5 * (a + b)
    for _ in range(NEWTON_POLISH):
        d = _dpoly(c, x)
        if d == 0.0:
            break
        xn = x - _poly(c, x) / d
        if not (lo < xn < hi):
            break
        x = xn
    return x


def back_substitute(u3, f, params):
    k, g1 = params.kappa, params.gamma1
    ku = k * u3 * u3
    u1 = ku / (1.0 + ku)
    return np.array([u1, f * u1, u3, (1.0 - u3) / (g1 * u3)])


def _polish(u, mu, params):
    """One Newton step on the full 4-D system; removes the error amplified by
    back-substitution. Kept only if the residual drops."""
    F = model.rhs(u, mu, params)
    try:
        un = u - lu_solve(model.jacobian(u, mu, params), F)
    except Exception:
        return u
    if np.max(np.abs(model.rhs(un, mu, params))) < np.max(np.abs(F)):
        return un
    return u


def solve_steady_state(mu, params=None, allow_outside=False):
    """Unique steady state of the ZIP model at external zinc ``mu``.

    At ``mu = 0`` the quartic root sits on the interval boundary ``u3 = 1``
    and the steady state ``(kappa/(1+kappa), 0, 1, 0)`` is used directly.

    Raises
    ------
    RootBracketFailure, MultipleRoots
        The quartic does not have exactly one root in the activator interval.
    CertificationFailure
        Residual above 1e-12 or non-positive Jacobian determinant.
    """
    params = params or model.ModelParams()
    model.check_mu(mu, allow_outside)
    f = model.f_influx(mu, params)
    if f == 0.0:
        k = params.kappa
        u = np.array([k / (1.0 + k), 0.0, 1.0, 0.0])
    else:
        u = back_substitute(activator_root(f, params), f, params)
        u = _polish(u, mu, params)
    res = float(np.max(np.abs(model.rhs(u, mu, params))))
    J = model.jacobian(u, mu, params)
    D = det(J)
    if not res < RESIDUAL_TOL:
        raise CertificationFailure(f"steady-state residual {res:.3e} at mu={mu}")
    if not D > 0.0:
        raise CertificationFailure(f"det J = {D:.3e} <= 0 at mu={mu}")
    return SteadyState(mu=float(mu), u_star=u, residual_norm=res, jac=J, det_jac=float(D))


def d_mu_u_star(mu, params=None, allow_outside=False):
    """Derivative of the steady state along ``mu`` from ``J du = -dF/dmu``."""
    params = params or model.ModelParams()
    ss = solve_steady_state(mu, params, allow_outside)
    return lu_solve(ss.jac, -model.dF_dmu(ss.u_star, mu, params))


def steady_branch(mu_grid, params=None, allow_outside=False, lipschitz_factor=10.0):
    """Steady states on an ascending ``mu`` grid.

    Each point is an independent quartic solve; consecutive points are only
    compared as a continuity diagnostic (logged, not raised).
    """
    params = params or model.ModelParams()
    mu_grid = np.asarray(mu_grid, dtype=float)
    if np.any(np.diff(mu_grid) <= 0):
        raise ValueError("mu grid must be strictly ascending")
    out = []
    slopes = []
    for mu in mu_grid:
        try:
            ss = solve_steady_state(float(mu), params, allow_outside)
            slopes.append(float(np.max(np.abs(
                lu_solve(ss.jac, -model.dF_dmu(ss.u_star, mu, params))))))
        except Exception as exc:
            raise SteadyStateError(float(mu), exc) from exc
        out.append(ss)
    for i in range(1, len(out)):
        dmu = out[i].mu - out[i - 1].mu
        jump = float(np.max(np.abs(out[i].u_star - out[i - 1].u_star)))
        bound = lipschitz_factor * max(slopes[i], slopes[i - 1]) * dmu + 1e-12
        if jump > bound:
            log.warning("steady branch jump %.3e exceeds %.3e between mu=%g and mu=%g",
                        jump, bound, out[i - 1].mu, out[i].mu)
    return out
