"""Periodic orbits between the Hopf points: estimation by long integration,
single shooting, monodromy matrices, Floquet multipliers and branch
continuation."""
from dataclasses import dataclass, field
import logging

import numpy as np

from . import model
from .equilibrium import solve_steady_state
from .errors import (ConvergedToSteadyState, NewtonDivergence, NoOscillationDetected,
                     NumericalError)
from .flow import ORBIT_CONFIG, flow
from .normal_form import eigenvector
from .numerics.integrate import IntegratorConfig
from .numerics.linalg import eigenvalues, lu_solve
from .spectral import leading_pair

log = logging.getLogger(__name__)

EPS_START = 1e-3
TAU = 200.0
SHOOT_TOL = 1e-9
FD_SHOOT = 1e-6
FD_MONODROMY = 1e-6
MAX_NEWTON = 50
FREEZE_BELOW = 1e-6
UNIT_TOL = 1e-6
MAX_BRIDGE = 4


@dataclass
class PeriodicOrbit:
    mu: float
    u0: np.ndarray
    T: float
    shoot_residual: float
    anchor: float = float("nan")
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    mesh: np.ndarray = field(default=None, repr=False)

    def frozen_mesh(self, T=None):
        """Step times of the converged shooting map, rescaled to period ``T``."""
        T = self.T if T is None else T
        m = self.mesh * T
        m[-1] = T
        return m


@dataclass
class FloquetSet:
    multipliers: list
    unit_index: int
    stable: bool

    @property
    def nontrivial(self):
        return [z for i, z in enumerate(self.multipliers) if i != self.unit_index]

    @property
    def type0(self):
        """No multiplier outside the unit circle and none on the negative
        real axis beyond -1."""
        return all(abs(z) <= 1.0 for z in self.nontrivial) and not any(
            z.real < -1.0 and abs(z.imag) < 1e-12 for z in self.multipliers)


@dataclass
class BranchPoint:
    mu: float
    orbit: PeriodicOrbit = None
    floquet: FloquetSet = None
    amplitude_u2: float = float("nan")
    error: str = ""

    @property
    def ok(self):
        return self.orbit is not None and not self.error


# ---------------------------------------------------------------------------
# estimation


def find_peaks(t, y):
    """Local maxima of sampled ``y`` refined by a parabola through the three
    samples around each; returns ``(times, values)``."""
    y = np.asarray(y)
    i = np.nonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]))[0] + 1
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    den = y0 - 2.0 * y1 + y2
    with np.errstate(divide="ignore", invalid="ignore"):
        off = np.where(den != 0.0, 0.5 * (y0 - y2) / den, 0.0)
    dt = t[1] - t[0]
    return t[i] + off * dt, y1 - 0.25 * (y0 - y2) * off


def estimate_orbit(mu, params=None, eps=EPS_START, tau=TAU, samples_per_unit=100,
                   cfg=None):
    """Rough orbit point and period from a long integration.

    Starts at ``u* + eps * v`` with ``v`` the normalized real part of the
    leading eigenvector, integrates for ``tau`` time units and reads the
    period off successive maxima of ``u2`` in the final quarter.

    Returns
    -------
    u_tau : ndarray
        State at ``t = tau``.
    T_guess : float

    Raises
    ------
    NoOscillationDetected
        Stable steady state, or fewer than three maxima in the final quarter.
    """
    params = params or model.ModelParams()
    ss = solve_steady_state(mu, params)
    lam = leading_pair(eigenvalues(ss.jac))
    if lam is None or lam.real <= 0.0:
        raise NoOscillationDetected(f"steady state at mu={mu} is stable")
    v = eigenvector(ss.jac, lam).real
    v /= np.max(np.abs(v))
    t = np.linspace(0.0, tau, int(tau * samples_per_unit) + 1)
    sol = flow(ss.u_star + eps * v, tau, mu, params, cfg or IntegratorConfig(), t_eval=t)
    tail = t >= 0.75 * tau
    tp, yp = find_peaks(t[tail], sol.y[tail, 1])
    ptp = np.ptp(sol.y[tail, 1])
    if len(tp) < 3 or ptp < 1e-10:
        raise NoOscillationDetected(f"{len(tp)} maxima in the final quarter at mu={mu}")
    return sol.y_end.copy(), float(np.mean(np.diff(tp)))


# ---------------------------------------------------------------------------
# shooting


def _shoot_map(u0, T, mu, params, cfg, s_mesh):
    if s_mesh is None:
        sol = flow(u0, T, mu, params, cfg, record_mesh=True)
        return sol.y_end, sol.mesh / T
    m = s_mesh * T
    m[-1] = T
    return flow(u0, T, mu, params, cfg, mesh=m).y_end, s_mesh


def _newton_matrix(u0, T, phi, mu, params, cfg, s_mesh, h):
    A = np.zeros((5, 5))
    for j in range(4):
        up = u0.copy()
        up[j] += h
        pj, _ = _shoot_map(up, T, mu, params, cfg, s_mesh)
        A[:4, j] = (pj - phi) / h
        A[j, j] -= 1.0
    pT, _ = _shoot_map(u0, T + h, mu, params, cfg, s_mesh)
    A[:4, 4] = (pT - phi) / h
    A[4, 0] = 1.0
    return A


def shoot_orbit(mu, init, params=None, anchor=None, cfg=None, tol=SHOOT_TOL,
                max_iter=MAX_NEWTON, h=FD_SHOOT):
    """Periodic orbit through Newton's method on ``(u0, T)``.

    Solves ``Phi_T(u0) - u0 = 0`` together with the phase condition
    ``u0[0] = anchor``; ``anchor`` defaults to the first component of the
    initial point. The Jacobian is a forward difference of the flow map. The
    step mesh is re-recorded each iteration until the residual drops below
    1e-6 and frozen afterwards (in time normalized by ``T``), so the map being
    solved is smooth in ``(u0, T)`` near convergence.

    Raises
    ------
    NewtonDivergence
        No convergence within ``max_iter`` iterations or blow-up.
    ConvergedToSteadyState
        The iteration collapsed onto the steady state.
    """
    params = params or model.ModelParams()
    cfg = cfg or ORBIT_CONFIG
    u0 = np.array(init[0], dtype=float)
    T = float(init[1])
    if not T > 0:
        raise ValueError("initial period must be positive")
    anchor = u0[0] if anchor is None else float(anchor)
    u_star = solve_steady_state(mu, params).u_star
    s_mesh = None
    history = []
    for it in range(max_iter + 1):
        phi, mesh_used = _shoot_map(u0, T, mu, params, cfg, s_mesh)
        G = np.append(phi - u0, u0[0] - anchor)
        r = float(np.max(np.abs(G)))
        history.append(r)
        if not np.isfinite(r) or (len(history) > 3 and r > 1e3 * max(history[0], 1e-3)):
            raise NewtonDivergence(f"residual {r:.3e} at iteration {it}, mu={mu}")
        if r < tol and s_mesh is not None:
            # one more step sharpens small orbits, where 1e-9 is a large
            # fraction of the orbit size; kept only if it helps
            A = _newton_matrix(u0, T, phi, mu, params, cfg, s_mesh, h)
            dx = lu_solve(A, -G)
            phi2, _ = _shoot_map(u0 + dx[:4], T + dx[4], mu, params, cfg, s_mesh)
            G2 = np.append(phi2 - u0 - dx[:4], u0[0] + dx[0] - anchor)
            r2 = float(np.max(np.abs(G2)))
            if r2 < r:
                u0, T, r = u0 + dx[:4], T + dx[4], r2
                history.append(r)
            break
        if it == max_iter:
            raise NewtonDivergence(f"no convergence after {max_iter} iterations "
                                   f"(residual {r:.3e}) at mu={mu}")
        if s_mesh is None and r < FREEZE_BELOW:
            s_mesh = mesh_used
            continue
        A = _newton_matrix(u0, T, phi, mu, params, cfg, mesh_used, h)
        dx = lu_solve(A, -G)
        lam = 1.0
        while T + lam * dx[4] <= 0.0:
            lam *= 0.5
        u0 = u0 + lam * dx[:4]
        T = T + lam * dx[4]
        if np.max(np.abs(u0 - u_star)) < 1e-6:
            raise ConvergedToSteadyState(f"shooting collapsed onto u* at mu={mu}")
    orbit = PeriodicOrbit(mu=float(mu), u0=u0, T=T, shoot_residual=r, anchor=anchor,
                          iterations=it, residual_history=history, mesh=s_mesh)
    check_least_period(orbit, params, cfg)
    return orbit


def orbit_samples(orbit, params=None, n=2001, cfg=None):
    """``n`` points along one period, ``(t, u)``."""
    params = params or model.ModelParams()
    t = np.linspace(0.0, orbit.T, n)
    sol = flow(orbit.u0, orbit.T, orbit.mu, params, cfg or ORBIT_CONFIG, t_eval=t)
    return t, sol.y


def check_least_period(orbit, params=None, cfg=None, kmax=4):
    """Reject an orbit that already closes after ``T/k``, ``k = 2..kmax``.

    A sub-period gap counts as closed below ``min(1e-3, 0.1 * diameter)``,
    where the diameter is the largest distance of orbit points from ``u0``;
    the relative part keeps small orbits near the Hopf points admissible.
    """
    params = params or model.ModelParams()
    cfg = cfg or ORBIT_CONFIG
    _, y = orbit_samples(orbit, params, 401, cfg)
    diameter = float(np.max(np.abs(y - orbit.u0)))
    if diameter < 1e-6:
        raise ConvergedToSteadyState(f"orbit at mu={orbit.mu} has diameter {diameter:.2e}")
    thresh = min(1e-3, 0.1 * diameter)
    for k in range(2, kmax + 1):
        gap = float(np.max(np.abs(flow(orbit.u0, orbit.T / k, orbit.mu, params, cfg).y_end
                                  - orbit.u0)))
        if gap < thresh:
            raise NewtonDivergence(f"T={orbit.T} is not the least period (T/{k} closes "
                                   f"to {gap:.2e}) at mu={orbit.mu}")


# ---------------------------------------------------------------------------
# stability


def _central(orbit, params, cfg, mesh, h):
    M = np.zeros((4, 4))
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        fp = flow(orbit.u0 + e, orbit.T, orbit.mu, params, cfg, mesh=mesh).y_end
        fm = flow(orbit.u0 - e, orbit.T, orbit.mu, params, cfg, mesh=mesh).y_end
        M[:, j] = (fp - fm) / (2.0 * h)
    return M


def monodromy(orbit, params=None, cfg=None, h=FD_MONODROMY, richardson=True):
    """Derivative of the period map at ``u0`` by central differences on the
    orbit's frozen mesh.

    The stiff flow has large third derivatives, so the plain ``O(h^2)``
    difference leaves the trivial multiplier about 1e-6 off; by default the
    differences at ``h`` and ``h/2`` are Richardson-combined to ``O(h^4)``.
    """
    params = params or model.ModelParams()
    cfg = cfg or ORBIT_CONFIG
    mesh = orbit.frozen_mesh() if orbit.mesh is not None else None
    M = _central(orbit, params, cfg, mesh, h)
    if richardson:
        M = (4.0 * _central(orbit, params, cfg, mesh, 0.5 * h) - M) / 3.0
    return M


def floquet(orbit, params=None, cfg=None, M=None):
    """Floquet multipliers sorted by descending modulus."""
    M = monodromy(orbit, params, cfg) if M is None else M
    mults = sorted(eigenvalues(M), key=lambda z: (-abs(z), -z.real, -z.imag))
    unit = int(np.argmin([abs(z - 1.0) for z in mults]))
    if abs(mults[unit] - 1.0) > UNIT_TOL:
        log.warning("trivial multiplier off by %.2e at mu=%g", abs(mults[unit] - 1.0), orbit.mu)
    stable = all(abs(z) < 1.0 for i, z in enumerate(mults) if i != unit)
    return FloquetSet(multipliers=mults, unit_index=unit, stable=stable)


# ---------------------------------------------------------------------------
# continuation


def default_grid(mu1, mu2, n=50):
    """``n`` points in ``(mu1, mu2)``, geometric toward both ends, starting
    ``1e-3 * (mu2 - mu1)`` inside."""
    span = mu2 - mu1
    delta = 1e-3 * span
    n_left = (n + 1) // 2
    n_right = n - n_left
    left = mu1 + np.geomspace(delta, 0.5 * span, n_left)
    right = mu2 - np.geomspace(delta, 0.5 * span, n_right + 1)[::-1][1:] if n_right else []
    return np.concatenate([left, right])


def anchor_at_crossing(orbit, level, params=None, n=4001):
    """Move ``u0`` to the upward crossing of ``u1 = level`` along the orbit."""
    t, y = orbit_samples(orbit, params, n)
    u1 = y[:, 0]
    up = np.nonzero((u1[:-1] < level) & (u1[1:] >= level))[0]
    if up.size == 0:
        return orbit.u0.copy()
    i = up[0]
    w = (level - u1[i]) / (u1[i + 1] - u1[i])
    return (1.0 - w) * y[i] + w * y[i + 1]


def _u2_amplitude(orbit, params):
    _, y = orbit_samples(orbit, params)
    return float(0.5 * np.ptp(y[:, 1]))


def orbit_branch(mu_grid, params=None, mu1=None, mu2=None, cfg=None, seed_index=None):
    """Shoot orbits along ``mu_grid`` (strictly inside the Hopf interval).

    The branch is seeded by a cold start at the grid point where the
    steady state is most unstable and continued outward in both directions.
    Each new point starts from the previous orbit: ``u0`` is moved to the
    upward crossing of ``u1 = u1*``, shifted with the steady state and its
    offset scaled by ``sqrt(d_new / d_old)`` with ``d`` the distance to the
    Hopf point being approached. When that shot fails the gap is bridged
    by intermediate parameter values, and as a last resort the point is
    cold-started. Failures are recorded per point.

    Returns
    -------
    list of BranchPoint
        In grid order.
    """
    params = params or model.ModelParams()
    mu_grid = np.asarray(mu_grid, dtype=float)
    if np.any(np.diff(mu_grid) <= 0):
        raise ValueError("mu grid must be strictly ascending")
    if mu1 is not None and mu_grid[0] <= mu1 or mu2 is not None and mu_grid[-1] >= mu2:
        raise ValueError("grid must lie strictly inside (mu1, mu2)")
    states = [solve_steady_state(m, params) for m in mu_grid]
    if seed_index is None:
        growth = [leading_pair(eigenvalues(s.jac)) for s in states]
        seed_index = int(np.argmax([g.real if g is not None else -np.inf for g in growth]))
    out = [BranchPoint(mu=float(m)) for m in mu_grid]

    def seed_from(prev, mu_new, end):
        # move the previous orbit onto the new steady state, rescaled toward
        # the Hopf point being approached
        ss_old = solve_steady_state(prev.mu, params)
        ss_new = solve_steady_state(mu_new, params)
        base = anchor_at_crossing(prev, ss_old.u_star[0], params)
        scale = 1.0 if end is None else np.sqrt(abs(end - mu_new) / abs(end - prev.mu))
        return ss_new.u_star + scale * (base - ss_old.u_star), prev.T

    def continue_to(prev, mu, end, depth):
        """Shoot at ``mu`` from ``prev``; on failure bridge the gap with an
        intermediate point, up to ``depth`` halvings."""
        try:
            return shoot_orbit(mu, seed_from(prev, mu, end), params,
                               anchor=solve_steady_state(mu, params).u_star[0], cfg=cfg)
        except NumericalError:
            if depth == 0:
                raise
        mid = continue_to(prev, 0.5 * (prev.mu + mu), end, depth - 1)
        return continue_to(mid, mu, end, depth - 1)

    def solve_point(i, prev, end):
        mu = mu_grid[i]
        try:
            if prev is not None:
                try:
                    orbit = continue_to(prev, mu, end, MAX_BRIDGE)
                except NumericalError as exc:
                    log.info("continuation to mu=%g failed (%s); cold start", mu, exc)
                    prev = None
            if prev is None:
                u_tau, T0 = estimate_orbit(mu, params)
                orbit = shoot_orbit(mu, (u_tau, T0), params, cfg=cfg)
            fl = floquet(orbit, params, cfg)
            out[i] = BranchPoint(mu=float(mu), orbit=orbit, floquet=fl,
                                 amplitude_u2=_u2_amplitude(orbit, params))
            return orbit
        except NumericalError as exc:
            log.warning("orbit at mu=%g failed: %s", mu, exc)
            out[i] = BranchPoint(mu=float(mu), error=f"{type(exc).__name__}: {exc}")
            return None

    seed_orbit = solve_point(seed_index, None, None)
    for direction, end in ((-1, mu1), (1, mu2)):
        prev = seed_orbit
        i = seed_index + direction
        while 0 <= i < len(mu_grid):
            prev = solve_point(i, prev, end) or prev
            i += direction
    return out
