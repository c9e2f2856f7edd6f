"""Adaptive ODE integration: a 4th-order Rosenbrock method for stiff problems
and the Dormand-Prince 5(4) pair for non-stiff ones.

Rosenbrock coefficients are Shampine's 4(3) parameter set (the one used by
the Kaps-Rentrop ``stiff`` driver): four stages, two right-hand-side
evaluations and one Jacobian/LU per step, embedded third-order error
estimate, A-stable. With ``W = I/(gamma*h) - J``::

    W g1 = f(y0)
    W g2 = f(y0 + a21 g1)                   + c21 g1 / h
    W g3 = f(y0 + a31 g1 + a32 g2)          + (c31 g1 + c32 g2) / h
    W g4 = f(y0 + a31 g1 + a32 g2)          + (c41 g1 + c42 g2 + c43 g3) / h
    y1   = y0 + b1 g1 + b2 g2 + b3 g3 + b4 g4
    err  =      e1 g1 + e2 g2 + e3 g3 + e4 g4

Non-autonomous systems additionally need ``df/dt`` (the ``c*x`` terms).
"""
from dataclasses import dataclass
import math

import numpy as np

from ..errors import MaxStepsExceeded, StepSizeUnderflow
from .linalg import lu_factor, lu_substitute

# Shampine (1982) parameters.
ROS_GAM = 1.0 / 2.0
ROS_A21 = 2.0
ROS_A31 = 48.0 / 25.0
ROS_A32 = 6.0 / 25.0
ROS_C21 = -8.0
ROS_C31 = 372.0 / 25.0
ROS_C32 = 12.0 / 5.0
ROS_C41 = -112.0 / 125.0
ROS_C42 = -54.0 / 125.0
ROS_C43 = -2.0 / 5.0
ROS_B = (19.0 / 9.0, 1.0 / 2.0, 25.0 / 108.0, 125.0 / 108.0)
ROS_E = (17.0 / 54.0, 7.0 / 36.0, 0.0, 125.0 / 108.0)
ROS_CX = (1.0 / 2.0, -3.0 / 2.0, 121.0 / 50.0, 29.0 / 250.0)
ROS_A2X = 1.0
ROS_A3X = 3.0 / 5.0

# Dormand-Prince 5(4), FSAL.
DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
DP_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 5.0

ORDERS = {"rosenbrock": 4, "dormand_prince": 5}


@dataclass(frozen=True)
class IntegratorConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    h_init: float = 1e-3
    h_min: float = 1e-13
    h_max: float = 10.0
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if not (0 < self.h_min <= self.h_init <= self.h_max):
            raise ValueError("need 0 < h_min <= h_init <= h_max")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")

    def scaled(self, factor):
        """Copy with both tolerances multiplied by ``factor``."""
        return IntegratorConfig(self.abs_tol * factor, self.rel_tol * factor,
                                self.h_init, self.h_min, self.h_max, self.max_steps)


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray
    t_end: float
    y_end: np.ndarray
    n_accepted: int = 0
    n_rejected: int = 0
    n_rhs: int = 0
    n_jac: int = 0
    mesh: np.ndarray = None

    @property
    def n_steps(self):
        return self.n_accepted + self.n_rejected


def error_norm(err, y0, y1, cfg):
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def rosenbrock_step(rhs, jac, t, y, f0, h, J=None, dfdt=None):
    """One Rosenbrock step of size ``h``; returns ``(y1, err, n_rhs)``."""
    n = y.size
    if J is None:
        J = np.asarray(jac(t, y), dtype=float)
    W = np.eye(n) / (ROS_GAM * h) - J
    LU, perm = lu_factor(W)
    dt = np.zeros(n) if dfdt is None else np.asarray(dfdt(t, y), dtype=float)
    cx = ROS_CX
    g1 = lu_substitute(LU, perm, f0 + h * cx[0] * dt)
    f2 = np.asarray(rhs(t + ROS_A2X * h, y + ROS_A21 * g1), dtype=float)
    g2 = lu_substitute(LU, perm, f2 + h * cx[1] * dt + ROS_C21 * g1 / h)
    f3 = np.asarray(rhs(t + ROS_A3X * h, y + ROS_A31 * g1 + ROS_A32 * g2), dtype=float)
    g3 = lu_substitute(LU, perm, f3 + h * cx[2] * dt + (ROS_C31 * g1 + ROS_C32 * g2) / h)
    g4 = lu_substitute(LU, perm, f3 + h * cx[3] * dt
                       + (ROS_C41 * g1 + ROS_C42 * g2 + ROS_C43 * g3) / h)
    b, e = ROS_B, ROS_E
    y1 = y + b[0] * g1 + b[1] * g2 + b[2] * g3 + b[3] * g4
    err = e[0] * g1 + e[1] * g2 + e[2] * g3 + e[3] * g4
    return y1, err, 2


def dopri_step(rhs, t, y, f0, h):
    """One Dormand-Prince step; returns ``(y1, err, f1, n_rhs)`` where ``f1``
    is the right-hand side at the new point (first-same-as-last)."""
    k = [f0]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(DP_A[i], k))
        k.append(np.asarray(rhs(t + DP_C[i] * h, yi), dtype=float))
    y1 = y + h * sum(a * kj for a, kj in zip(DP_A[6], k))
    err = h * sum(e * kj for e, kj in zip(DP_E, k))
    return y1, err, k[6], 6


def hermite(t0, y0, f0, t1, y1, f1, t):
    """Cubic Hermite interpolant between two accepted steps."""
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def integrate(rhs, u0, t_span, cfg=None, method="rosenbrock", jac=None,
              t_eval=None, mesh=None, record_mesh=False, dfdt=None):
    """Integrate ``du/dt = rhs(t, u)`` forward over ``t_span``.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, u) -> array``.
    u0 : array_like
        Initial state.
    t_span : (float, float)
        ``(t0, t1)`` with ``t1 >= t0``.
    cfg : IntegratorConfig, optional
    method : {"rosenbrock", "dormand_prince"}
    jac : callable, optional
        ``jac(t, u) -> (n, n)``; required by the Rosenbrock method.
    t_eval : array_like, optional
        Ascending output times inside ``t_span``; values are produced by
        cubic Hermite interpolation of the accepted steps. Without it the
        solution is reported at every accepted step.
    mesh : array_like, optional
        Take exactly these steps (ascending, starting at ``t0`` and ending at
        ``t1``) with no error control. The result is then a smooth function
        of ``u0``, which finite-difference Jacobians need.
    record_mesh : bool
        Store the accepted step times in ``Solution.mesh``.

    Raises
    ------
    StepSizeUnderflow
        The controller asked for a step below ``cfg.h_min``.
    MaxStepsExceeded
        More than ``cfg.max_steps`` step attempts.
    """
    if method not in ORDERS:
        raise ValueError(f"unknown method {method!r}")
    if method == "rosenbrock" and jac is None:
        raise ValueError("the Rosenbrock method needs the Jacobian")
    cfg = cfg or IntegratorConfig()
    t0, t1 = map(float, t_span)
    if t1 < t0:
        raise ValueError("only forward integration is supported")
    y = np.array(u0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state is not finite")
    f = np.asarray(rhs(t0, y), dtype=float)
    stats = {"n_accepted": 0, "n_rejected": 0, "n_rhs": 1, "n_jac": 0}

    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        if t_eval.size and (t_eval[0] < t0 or t_eval[-1] > t1 or np.any(np.diff(t_eval) < 0)):
            raise ValueError("t_eval must be ascending inside t_span")
        out_y = np.empty((t_eval.size, y.size))
        k_out = 0
        while k_out < t_eval.size and t_eval[k_out] <= t0:
            out_y[k_out] = y
            k_out += 1
    else:
        ts, ys = [t0], [y.copy()]
    steps = [t0] if record_mesh else None

    def take(t, y, f, h, J):
        if method == "rosenbrock":
            y1, err, nr = rosenbrock_step(rhs, jac, t, y, f, h, J=J, dfdt=dfdt)
            f1 = None
        else:
            y1, err, f1, nr = dopri_step(rhs, t, y, f, h)
        stats["n_rhs"] += nr
        return y1, err, f1

    t = t0
    if mesh is not None:
        mesh = np.asarray(mesh, dtype=float)
        if mesh[0] != t0 or mesh[-1] != t1 or np.any(np.diff(mesh) <= 0):
            raise ValueError("mesh must be strictly ascending from t0 to t1")
        i_mesh = 0
    h = min(cfg.h_init, cfg.h_max)
    J = None
    attempts = 0
    while t < t1:
        if mesh is not None:
            h = mesh[i_mesh + 1] - t
        else:
            h = min(h, t1 - t)
        if method == "rosenbrock" and J is None:
            J = np.asarray(jac(t, y), dtype=float)
            stats["n_jac"] += 1
        if t + h <= t:
            raise StepSizeUnderflow(f"step size {h:.3e} no longer advances t={t}")
        attempts += 1
        if attempts > cfg.max_steps:
            raise MaxStepsExceeded(f"more than {cfg.max_steps} steps at t={t}")
        y1, err, f1 = take(t, y, f, h, J)
        if mesh is None:
            en = error_norm(err, y, y1, cfg)
            if not math.isfinite(en):
                en = 1e10
            order = ORDERS[method]
            if en > 1.0:
                stats["n_rejected"] += 1
                h *= max(FAC_MIN, SAFETY * en ** (-1.0 / order))
                if h < cfg.h_min:
                    raise StepSizeUnderflow(f"step size {h:.3e} below h_min at t={t}")
                continue
            fac = FAC_MAX if en == 0.0 else min(FAC_MAX, max(FAC_MIN, SAFETY * en ** (-1.0 / order)))
        if mesh is not None:
            i_mesh += 1
            t_new = mesh[i_mesh]
        else:
            t_new = t1 if t + h >= t1 else t + h
        if f1 is None:
            f1 = np.asarray(rhs(t_new, y1), dtype=float)
            stats["n_rhs"] += 1
        stats["n_accepted"] += 1
        if t_eval is not None:
            while k_out < t_eval.size and t_eval[k_out] <= t_new:
                out_y[k_out] = hermite(t, y, f, t_new, y1, f1, t_eval[k_out])
                k_out += 1
        else:
            ts.append(t_new)
            ys.append(y1.copy())
        if record_mesh:
            steps.append(t_new)
        t, y, f = t_new, y1, f1
        J = None
        if mesh is None:
            h = min(h * fac, cfg.h_max)
            h = max(h, cfg.h_min)

    if t_eval is not None:
        sol = Solution(t=t_eval.copy(), y=out_y, t_end=t, y_end=y, **stats)
    else:
        sol = Solution(t=np.array(ts), y=np.array(ys), t_end=t, y_end=y, **stats)
    if record_mesh:
        sol.mesh = np.array(steps)
    return sol
