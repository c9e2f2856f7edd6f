"""The ZIP zinc-uptake regulatory model and its buffered extension.

State ``u = (u1, u2, u3, u4)`` is gene activity, internal zinc, activator and
inhibitor; the buffered model adds ``u5``, zinc bound to a chelator. The
bifurcation parameter ``mu`` is the external zinc concentration.
"""
from dataclasses import dataclass, fields

import numpy as np

MU_MAX = 30.0


@dataclass(frozen=True)
class ModelParams:
    kappa: float = 20.0
    K: float = 13.0
    gamma1: float = 380.0
    gamma2: float = 1000.0
    gamma3: float = 1672.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{f.name} must be a positive finite number, got {v!r}")

    def as_tuple(self):
        return (self.kappa, self.K, self.gamma1, self.gamma2, self.gamma3)


@dataclass(frozen=True)
class BufferParams:
    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be non-negative, got {v!r}")


def check_mu(mu, allow_outside=False):
    if not np.isfinite(mu) or mu < 0:
        raise ValueError(f"mu must be a non-negative number, got {mu!r}")
    if mu > MU_MAX and not allow_outside:
        raise ValueError(f"mu={mu} outside [0, {MU_MAX}]; pass allow_outside=True to override")


def f_influx(mu, params):
    """Zinc influx ``mu / (mu + K)``."""
    return mu / (mu + params.K)


def df_influx(mu, params):
    """Derivative of the influx with respect to ``mu``."""
    return params.K / (mu + params.K) ** 2


def rhs(u, mu, params):
    k, _, g1, g2, g3 = params.as_tuple()
    u1, u2, u3, u4 = u
    f = f_influx(mu, params)
    return np.array([
        k * u3 * u3 * (1.0 - u1) - u1,
        u1 * f - u2,
        1.0 - g1 * u3 * u4 - u3,
        g2 * u2 * (1.0 - u4) - (g3 * u3 + 1.0) * u4,
    ])


def jacobian(u, mu, params):
    k, _, g1, g2, g3 = params.as_tuple()
    u1, u2, u3, u4 = u
    f = f_influx(mu, params)
    return np.array([
        [-k * u3 * u3 - 1.0, 0.0, 2.0 * k * u3 * (1.0 - u1), 0.0],
        [f, -1.0, 0.0, 0.0],
        [0.0, 0.0, -g1 * u4 - 1.0, -g1 * u3],
        [0.0, g2 * (1.0 - u4), -g3 * u4, -g3 * u3 - 1.0 - g2 * u2],
    ])


def dF_dmu(u, mu, params):
    """Partial derivative of the vector field with respect to ``mu``."""
    return np.array([0.0, u[0] * df_influx(mu, params), 0.0, 0.0])


def d11F(mu, params):
    """Mixed derivative d/dmu of the Jacobian at fixed ``u``; only the
    (u2, u1) entry depends on ``mu``."""
    D = np.zeros((4, 4))
    D[1, 0] = df_influx(mu, params)
    return D


def d20F(x, y, u_star, params):
    """Second derivative of the vector field at ``u_star`` as a symmetric
    bilinear form; accepts complex directions."""
    k, _, g1, g2, g3 = params.as_tuple()
    u1, _, u3, _ = u_star
    x = np.asarray(x)
    y = np.asarray(y)
    s34 = x[2] * y[3] + x[3] * y[2]
    return np.array([
        -2.0 * k * u3 * (x[0] * y[2] + x[2] * y[0]) + 2.0 * k * (1.0 - u1) * x[2] * y[2],
        0.0 * x[0],
        -g1 * s34,
        -g2 * (x[1] * y[3] + x[3] * y[1]) - g3 * s34,
    ])


def d30F(x, y, z, u_star, params):
    """Third derivative as a symmetric trilinear form (constant in ``u``)."""
    k = params.kappa
    first = -2.0 * k * (x[0] * y[2] * z[2] + x[2] * y[0] * z[2] + x[2] * y[2] * z[0])
    zero = 0.0 * first
    return np.array([first, zero, zero, zero])


# ---------------------------------------------------------------------------
# buffered system


def rhs_buffered(u, mu, params, bp):
    u = np.asarray(u, dtype=float)
    out = np.empty(5)
    out[:4] = rhs(u[:4], mu, params)
    exchange = bp.p2 * (bp.p1 * u[1] - u[4])
    out[1] -= exchange
    out[4] = exchange
    return out


def shorthand(u_star, mu, params):
    """The positive constants a..h shared by the buffered Jacobian, its
    characteristic polynomial and the spectrum checks.

    Returns a dict with keys ``a`` .. ``h``. Note ``f`` here is
    ``gamma2 * (1 - u4)``, not the influx.
    """
    k, _, g1, g2, g3 = params.as_tuple()
    u1, u2, u3, u4 = u_star
    return {
        "a": k * u3 * u3,
        "b": 2.0 * k * u3 * (1.0 - u1),
        "c": f_influx(mu, params),
        "d": g1 * u4,
        "e": g1 * u3,
        "f": g2 * (1.0 - u4),
        "g": g3 * u4,
        "h": g3 * u3 + g2 * u2,
    }


def jacobian_buffered(u_star, mu, params, bp):
    s = shorthand(u_star, mu, params)
    p1, p2 = bp.p1, bp.p2
    M = np.array([
        [s["a"] + 1.0, 0.0, -s["b"], 0.0, 0.0],
        [-s["c"], p1 * p2 + 1.0, 0.0, 0.0, -p2],
        [0.0, 0.0, s["d"] + 1.0, s["e"], 0.0],
        [0.0, -s["f"], s["g"], s["h"] + 1.0, 0.0],
        [0.0, -p1 * p2, 0.0, 0.0, p2],
    ])
    return -M


def char_poly_buffered(lam, mu, params, bp, u_star):
    """``chi(lam) = det(J_b - lam I)``, leading coefficient ``-1``.

    The cross term carries the factor ``b c e f`` (not ``b c f``): only this
    form vanishes on the spectrum of the buffered Jacobian.
    """
    s = shorthand(u_star, mu, params)
    return _chi(lam, s, bp.p1, bp.p2)


def _chi(lam, s, p1, p2):
    bcef = s["b"] * s["c"] * s["e"] * s["f"]
    quad = -s["e"] * s["g"] + (s["d"] + 1.0 + lam) * (s["h"] + 1.0 + lam)
    buf = lam * lam + p2 + lam * (1.0 + p2 + p1 * p2)
    return -bcef * (lam + p2) - (s["a"] + 1.0 + lam) * quad * buf


def char_poly_partials(lam, s, p1, p2):
    """Analytic ``(dchi/dlam, dchi/dp1, dchi/dp2)`` of the characteristic
    polynomial, with ``s`` from :func:`shorthand`."""
    bcef = s["b"] * s["c"] * s["e"] * s["f"]
    A = s["a"] + 1.0 + lam
    D = s["d"] + 1.0 + lam
    H = s["h"] + 1.0 + lam
    quad = -s["e"] * s["g"] + D * H
    buf = lam * lam + p2 + lam * (1.0 + p2 + p1 * p2)
    dquad = D + H
    dbuf = 2.0 * lam + 1.0 + p2 + p1 * p2
    d_lam = -bcef - (quad * buf + A * dquad * buf + A * quad * dbuf)
    d_p1 = -A * quad * (lam * p2)
    d_p2 = -bcef - A * quad * (1.0 + lam * (1.0 + p1))
    return d_lam, d_p1, d_p2


def char_poly_coeffs(s, p1, p2):
    """Coefficients of ``chi`` in ascending powers of ``lam`` (length 6)."""
    bcef = s["b"] * s["c"] * s["e"] * s["f"]
    P = np.polynomial.polynomial
    A = [s["a"] + 1.0, 1.0]
    quad = P.polysub(P.polymul([s["d"] + 1.0, 1.0], [s["h"] + 1.0, 1.0]), [s["e"] * s["g"]])
    buf = [p2, 1.0 + p2 + p1 * p2, 1.0]
    prod = P.polymul(P.polymul(A, quad), buf)
    out = np.zeros(6)
    out[:len(prod)] -= prod
    out[0] -= bcef * p2
    out[1] -= bcef
    return out


def shifted_char_poly_coeffs(s):
    """Coefficients (ascending) of the unbuffered characteristic polynomial
    in the shifted variable ``lam + 1``:
    ``(x + a) x (x^2 + (d + h) x + (dh - eg)) + bcfe``."""
    P = np.polynomial.polynomial
    quad = [s["d"] * s["h"] - s["e"] * s["g"], s["d"] + s["h"], 1.0]
    c = P.polymul(P.polymul([s["a"], 1.0], [0.0, 1.0]), quad)
    c = np.array(c, dtype=float)
    c[0] += s["b"] * s["c"] * s["f"] * s["e"]
    return c
