"""Time-t flow map of the ZIP model.

Uses the compiled Rosenbrock kernel when it is importable and falls back to
the pure-Python integrator otherwise. Setting ``ZIPKIT_PURE_PYTHON=1`` forces
the fallback. Both paths implement the same method and step control.
"""
import os

import numpy as np

from . import model
from .errors import MaxStepsExceeded, SingularMatrix, StepSizeUnderflow
from .numerics.integrate import IntegratorConfig, Solution, integrate

_kernels = None
if not os.environ.get("ZIPKIT_PURE_PYTHON"):
    try:
        from . import _kernels
    except ImportError:
        _kernels = None

BACKEND = "compiled" if _kernels is not None else "python"

# tolerances for orbit work; tighter than the integrator default
ORBIT_CONFIG = IntegratorConfig(abs_tol=1e-12, rel_tol=1e-10, h_init=1e-4, h_max=1.0)


def available_backends():
    return ["compiled", "python"] if _kernels is not None else ["python"]


def _python_flow(u0, t1, mu, params, cfg, t_eval, mesh, record_mesh):
    rhs = lambda t, u: model.rhs(u, mu, params)
    jac = lambda t, u: model.jacobian(u, mu, params)
    return integrate(rhs, u0, (0.0, t1), cfg, method="rosenbrock", jac=jac,
                     t_eval=t_eval, mesh=mesh, record_mesh=record_mesh)


def _compiled_flow(u0, t1, mu, params, cfg, t_eval, mesh, record_mesh):
    k, _, g1, g2, g3 = params.as_tuple()
    status, t_end, y_end, y_eval, mesh_out, n_acc, n_rej = _kernels.zip_flow(
        np.ascontiguousarray(u0, dtype=float), float(t1), k, model.f_influx(mu, params),
        g1, g2, g3, cfg.abs_tol, cfg.rel_tol, cfg.h_init, cfg.h_min, cfg.h_max,
        cfg.max_steps, t_eval, mesh, record_mesh)
    if status == _kernels.STATUS_UNDERFLOW:
        raise StepSizeUnderflow(f"step size below h_min at t={t_end}")
    if status == _kernels.STATUS_MAXSTEPS:
        raise MaxStepsExceeded(f"more than {cfg.max_steps} steps at t={t_end}")
    if status == _kernels.STATUS_SINGULAR:
        raise SingularMatrix(f"singular Rosenbrock matrix at t={t_end}")
    sol = Solution(t=np.asarray(t_eval, dtype=float) if t_eval is not None else np.array([0.0, t_end]),
                   y=y_eval if y_eval is not None else np.vstack([u0, y_end]),
                   t_end=t_end, y_end=y_end, n_accepted=n_acc, n_rejected=n_rej)
    sol.mesh = mesh_out
    return sol


def flow(u0, t1, mu, params=None, cfg=None, t_eval=None, mesh=None,
         record_mesh=False, backend=None):
    """Integrate the ZIP model from ``u0`` over ``[0, t1]``.

    Parameters
    ----------
    u0 : array_like, shape (4,)
    t1 : float
        Final time.
    mu : float
    params : ModelParams, optional
    cfg : IntegratorConfig, optional
    t_eval : array_like, optional
        Dense-output times in ``[0, t1]``.
    mesh : array_like, optional
        Fixed step times from 0 to ``t1``; no error control.
    record_mesh : bool
        Return the accepted step times in ``Solution.mesh``.
    backend : {"compiled", "python"}, optional
        Defaults to :data:`BACKEND`.

    Returns
    -------
    Solution
        Without ``t_eval`` the compiled backend reports only the endpoints.
    """
    params = params or model.ModelParams()
    cfg = cfg or IntegratorConfig()
    backend = backend or BACKEND
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (4,) or not np.all(np.isfinite(u0)):
        raise ValueError("u0 must be a finite 4-vector")
    if not t1 >= 0:
        raise ValueError("t1 must be non-negative")
    if mesh is not None:
        mesh = np.asarray(mesh, dtype=float)
        if mesh[0] != 0.0 or mesh[-1] != t1 or np.any(np.diff(mesh) <= 0):
            raise ValueError("mesh must be strictly ascending from 0 to t1")
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        if t_eval.size and (t_eval[0] < 0 or t_eval[-1] > t1 or np.any(np.diff(t_eval) < 0)):
            raise ValueError("t_eval must be ascending inside [0, t1]")
    if backend == "compiled":
        if _kernels is None:
            raise RuntimeError("compiled backend not available")
        return _compiled_flow(u0, t1, mu, params, cfg, t_eval, mesh, record_mesh)
    if backend == "python":
        return _python_flow(u0, t1, mu, params, cfg, t_eval, mesh, record_mesh)
    raise ValueError(f"unknown backend {backend!r}")


def flow_map(u0, t1, mu, params=None, cfg=None, mesh=None, backend=None):
    """Endpoint ``Phi_t1(u0)``."""
    return flow(u0, t1, mu, params, cfg, mesh=mesh, backend=backend).y_end
