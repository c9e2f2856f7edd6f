"""The buffered five-variable model: eigenvalue continuation in the buffer
parameters, stability maps, critical buffer strength and the linear
frequency response from external to internal zinc."""
from dataclasses import dataclass, field
import logging
import math

import numpy as np

from . import model
from .equilibrium import solve_steady_state
from .errors import (FoldEncountered, InvalidInput, MaxStepsExceeded, NoBracket,
                     NumericalError, SingularMatrix, SingularShift,
                     StepSizeUnderflow, ValidationDrift)
from .numerics.integrate import IntegratorConfig, integrate
from .numerics.linalg import eigenvalues, lu_solve

log = logging.getLogger(__name__)

CHI_TOL = 1e-6
DRIFT_TOL = 1e-4
FOLD_TOL = 1e-12
VALIDATE_EVERY = 10
CONTINUATION_CONFIG = IntegratorConfig(abs_tol=1e-14, rel_tol=1e-13, h_init=1e-6,
                                       h_min=1e-14, h_max=10.0, max_steps=20_000)
# two eigenvalues closer than this (relative) count as a collision
COLLISION_TOL = 1e-2
DEFAULT_OMEGA = np.geomspace(1e-2, 1e3, 400)
RESONANCE_DB = 10.0


@dataclass
class EigenPath:
    mu: float
    varied: str
    fixed_value: float
    samples: list = field(default_factory=list)
    max_chi_residual: float = 0.0

    @property
    def p(self):
        return np.array([s[0] for s in self.samples])

    @property
    def lam(self):
        return np.array([s[1] for s in self.samples])

    def zero_crossings(self):
        """Parameter values where ``Re lambda`` changes sign (linear interpolation)."""
        p, re = self.p, self.lam.real
        out = []
        for i in range(len(p) - 1):
            if re[i] == 0.0:
                out.append(float(p[i]))
            elif re[i] * re[i + 1] < 0:
                out.append(float(p[i] - re[i] * (p[i + 1] - p[i]) / (re[i + 1] - re[i])))
        return out


@dataclass
class TransferSample:
    omega: float
    gain_db: float
    phase_accum: float
    phase_principal: float
    singular: bool = False


@dataclass
class StabilityMap:
    mu: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    max_re: np.ndarray
    failed: np.ndarray

    @property
    def boundary(self):
        """Cells whose sign of ``max_re`` differs from a neighbour on any axis."""
        s = np.sign(np.where(self.failed, np.nan, self.max_re))
        out = np.zeros(s.shape, dtype=bool)
        for ax in range(s.ndim):
            if s.shape[ax] < 2:
                continue
            lo = [slice(None)] * s.ndim
            hi = [slice(None)] * s.ndim
            lo[ax] = slice(0, -1)
            hi[ax] = slice(1, None)
            diff = s[tuple(lo)] * s[tuple(hi)] < 0
            out[tuple(lo)] |= diff
            out[tuple(hi)] |= diff
        return out


def _bp(varied, p, fixed):
    return model.BufferParams(p1=p, p2=fixed) if varied == "p1" else model.BufferParams(p1=fixed, p2=p)


def buffered_spectrum(mu, bp, params=None):
    """Eigenvalues of the 5x5 buffered Jacobian at the steady state."""
    params = params or model.ModelParams()
    ss = solve_steady_state(mu, params)
    return eigenvalues(model.jacobian_buffered(ss.u_star, mu, params, bp))


def max_re(mu, bp, params=None):
    return max(z.real for z in buffered_spectrum(mu, bp, params))


def chi_scale(lam, s, p1, p2):
    """Residual scale ``1 + |lam|^5 * max|coefficient|``."""
    return 1.0 + abs(lam) ** 5 * float(np.max(np.abs(model.char_poly_coeffs(s, p1, p2))))


def _near_collision(J, lam):
    """True if ``lam`` and a second eigenvalue of ``J`` nearly coincide."""
    direct = sorted(eigenvalues(J), key=lambda z: abs(z - lam))
    return abs(direct[1] - direct[0]) < COLLISION_TOL * max(1.0, abs(lam))


def _n_real(ss, mu, params, vary, fixed_other, p):
    J = model.jacobian_buffered(ss.u_star, mu, params, _bp(vary, p, fixed_other))
    return sum(abs(z.imag) <= 1e-12 * max(1.0, abs(z)) for z in eigenvalues(J))


def _fold_between(ss, mu, params, vary, fixed_other, a, b, rel=1e-4, probes=64):
    """First change in the number of real eigenvalues on ``[a, b]``, located
    by a probe scan and bisection; None if no change is seen."""
    grid = np.linspace(a, b, probes + 1)
    counts = [_n_real(ss, mu, params, vary, fixed_other, p) for p in grid]
    change = next((i for i in range(probes) if counts[i] != counts[i + 1]), None)
    if change is None:
        return None
    a, b, na = grid[change], grid[change + 1], counts[change]
    while b - a > rel * max(1.0, b):
        m = 0.5 * (a + b)
        if _n_real(ss, mu, params, vary, fixed_other, m) == na:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def _follow(ss, s, mu, vary, fixed_other, lam0, p_lo, p_hi, p_samples, params, cfg,
            validate_every):
    """Continue ``lam0`` from ``p_lo`` to ``p_hi``; samples at ``p_samples``."""
    last = [p_lo, lam0]

    def rhs(p, y):
        lam = complex(y[0], y[1])
        last[:] = [p, lam]
        bp = _bp(vary, p, fixed_other)
        d_lam, d_p1, d_p2 = model.char_poly_partials(lam, s, bp.p1, bp.p2)
        if abs(d_lam) < FOLD_TOL:
            raise FoldEncountered(f"dchi/dlam = {abs(d_lam):.2e} at {vary}={p}", p=p)
        dl = -(d_p1 if vary == "p1" else d_p2) / d_lam
        return np.array([dl.real, dl.imag])

    # integrate sample to sample so every sample is a step end; dense output
    # between steps is only cubic and spoils the residual on long paths
    grid = np.unique(np.concatenate([[p_lo], p_samples[(p_samples > p_lo) & (p_samples < p_hi)],
                                     [p_hi]]))
    ys = [np.array([lam0.real, lam0.imag])]
    try:
        for a, b in zip(grid[:-1], grid[1:]):
            ys.append(integrate(rhs, ys[-1], (a, b), cfg, method="dormand_prince").y_end)
    except (StepSizeUnderflow, MaxStepsExceeded) as exc:
        # the step size collapses near a square-root branch point well before
        # |dchi/dlam| reaches FOLD_TOL
        p, lam = last
        J = model.jacobian_buffered(ss.u_star, mu, params, _bp(vary, p, fixed_other))
        if _near_collision(J, lam):
            raise FoldEncountered(f"eigenvalue collision near {vary}={p:.6g} "
                                  f"(lambda={lam:.6g})", p=p) from exc
        raise

    path = EigenPath(mu=float(mu), varied=vary, fixed_value=float(fixed_other))
    for k, (p, y) in enumerate(zip(grid, ys)):
        lam = complex(y[0], y[1])
        bp = _bp(vary, p, fixed_other)
        res = abs(model._chi(lam, s, bp.p1, bp.p2)) / chi_scale(lam, s, bp.p1, bp.p2)
        path.max_chi_residual = max(path.max_chi_residual, res)
        if res > CHI_TOL:
            if k > 0:
                p_fold = _fold_between(ss, mu, params, vary, fixed_other, grid[k - 1], p)
                if p_fold is not None:
                    raise FoldEncountered(f"path stepped over a collision near {vary}={p_fold:.6g}",
                                          p=p_fold)
            raise ValidationDrift(f"|chi| residual {res:.2e} at {vary}={p}")
        if k % validate_every == 0 or k == len(grid) - 1:
            direct = eigenvalues(model.jacobian_buffered(ss.u_star, mu, params, bp))
            gap = min(abs(z - lam) for z in direct)
            if gap > DRIFT_TOL * max(1.0, abs(lam)):
                raise ValidationDrift(f"continued {lam} is {gap:.2e} from the spectrum at {vary}={p}")
        path.samples.append((float(p), lam))
    return path


def _check_args(vary, fixed_other, p_range):
    if vary not in ("p1", "p2"):
        raise InvalidInput(f"vary must be 'p1' or 'p2', got {vary!r}")
    p_lo, p_hi = map(float, p_range)
    if p_lo != 0.0 or not p_hi > 0:
        raise InvalidInput("p_range must be (0, P) with P > 0")
    if fixed_other < 0:
        raise InvalidInput("fixed buffer parameter must be non-negative")
    return p_hi


def eigen_continuation(mu, vary, fixed_other, p_range, lambda0, params=None,
                       p_samples=None, cfg=None, validate_every=VALIDATE_EVERY):
    """Follow one eigenvalue of the buffered Jacobian as ``p1`` or ``p2`` grows.

    Integrates ``dlam/dp = -chi_p / chi_lam`` with the Dormand-Prince
    method, using analytic partials of the characteristic polynomial.

    Parameters
    ----------
    mu : float
    vary : {"p1", "p2"}
    fixed_other : float
        Value of the other buffer parameter.
    p_range : (float, float)
        Must start at 0.
    lambda0 : complex
        Eigenvalue of the system at ``p = 0``.
    p_samples : array_like, optional
        Output parameter values; default 201 points spanning ``p_range``.

    Raises
    ------
    FoldEncountered
        ``|dchi/dlam|`` fell below 1e-12, or the integrator stalled next to
        an eigenvalue collision. ``exc.p`` holds the parameter value.
    ValidationDrift
        A direct eigensolve disagrees by more than 1e-4, or a sample's
        characteristic-polynomial residual exceeds its bound.
    """
    params = params or model.ModelParams()
    p_hi = _check_args(vary, fixed_other, p_range)
    ss = solve_steady_state(mu, params)
    s = model.shorthand(ss.u_star, mu, params)
    lam0 = complex(lambda0)
    bp0 = _bp(vary, 0.0, fixed_other)
    r0 = abs(model._chi(lam0, s, bp0.p1, bp0.p2))
    if r0 > CHI_TOL * chi_scale(lam0, s, bp0.p1, bp0.p2):
        raise InvalidInput(f"lambda0={lam0} is not an eigenvalue at {vary}=0 (|chi|={r0:.2e})")
    if p_samples is None:
        p_samples = np.linspace(0.0, p_hi, 201)
    return _follow(ss, s, mu, vary, fixed_other, lam0, 0.0, p_hi,
                   np.asarray(p_samples, dtype=float), params, cfg or CONTINUATION_CONFIG,
                   validate_every)


def spectrum_continuation(mu, vary, fixed_other, p_range, params=None, p_samples=None,
                          cfg=None, validate_every=VALIDATE_EVERY, fold_gap=1e-3,
                          max_restarts=20):
    """Continue the whole buffered spectrum over ``[0, P]``, stepping over folds.

    Each eigenvalue with ``Im >= 0`` is followed from a direct eigensolve.
    When any path meets a collision at ``p_f``, every path of the current
    segment is cut at ``p_f (1 - fold_gap)`` and a new segment is seeded
    from the direct spectrum at ``p_f (1 + fold_gap)``.

    Returns
    -------
    list of (float, float, list of EigenPath)
        ``(p_start, p_end, paths)`` per segment.
    """
    params = params or model.ModelParams()
    p_hi = _check_args(vary, fixed_other, p_range)
    cfg = cfg or CONTINUATION_CONFIG
    ss = solve_steady_state(mu, params)
    s = model.shorthand(ss.u_star, mu, params)
    if p_samples is None:
        p_samples = np.linspace(0.0, p_hi, 201)
    p_samples = np.asarray(p_samples, dtype=float)

    segments = []
    p_lo = 0.0
    for _ in range(max_restarts + 1):
        J = model.jacobian_buffered(ss.u_star, mu, params, _bp(vary, p_lo, fixed_other))
        seeds = [z for z in eigenvalues(J) if z.imag >= 0]
        seg_hi = p_hi
        while True:
            inside = p_samples[(p_samples > p_lo) & (p_samples < seg_hi)]
            grid = np.concatenate([[p_lo], inside, [seg_hi]])
            try:
                paths = [_follow(ss, s, mu, vary, fixed_other, z, p_lo, seg_hi, grid,
                                 params, cfg, validate_every) for z in seeds]
                break
            except FoldEncountered as exc:
                if exc.p is None or not p_lo < exc.p < seg_hi:
                    raise
                p_fold = exc.p
                seg_hi = max(p_lo + 0.5 * (p_fold - p_lo), p_fold * (1.0 - fold_gap))
                log.debug("fold near %s=%g; segment cut at %g", vary, p_fold, seg_hi)
        segments.append((p_lo, seg_hi, paths))
        if seg_hi == p_hi:
            return segments
        p_lo = p_fold * (1.0 + fold_gap)
        if p_lo >= p_hi:
            return segments
    raise FoldEncountered(f"more than {max_restarts} folds on {vary} in [0, {p_hi}]", p=p_lo)


def stability_map(mu_grid, p1_grid, p2_grid, params=None):
    """Largest real part of the buffered spectrum on a ``(mu, p1, p2)`` grid.

    Cells where the steady state or eigensolver fails are marked in
    ``failed`` (``max_re`` NaN) and the map continues.
    """
    params = params or model.ModelParams()
    mu_grid, p1_grid, p2_grid = (np.atleast_1d(np.asarray(g, dtype=float))
                                 for g in (mu_grid, p1_grid, p2_grid))
    for g in (mu_grid, p1_grid, p2_grid):
        if not np.all(np.isfinite(g)):
            raise InvalidInput("grids must be finite")
    out = np.full((mu_grid.size, p1_grid.size, p2_grid.size), np.nan)
    failed = np.zeros(out.shape, dtype=bool)
    for i, mu in enumerate(mu_grid):
        try:
            ss = solve_steady_state(mu, params)
        except NumericalError as exc:
            log.warning("steady state failed at mu=%g: %s", mu, exc)
            failed[i] = True
            continue
        for j, p1 in enumerate(p1_grid):
            for k, p2 in enumerate(p2_grid):
                try:
                    J = model.jacobian_buffered(ss.u_star, mu, params, model.BufferParams(p1, p2))
                    out[i, j, k] = max(z.real for z in eigenvalues(J))
                except NumericalError as exc:
                    log.warning("eigensolve failed at (%g, %g, %g): %s", mu, p1, p2, exc)
                    failed[i, j, k] = True
    return StabilityMap(mu=mu_grid, p1=p1_grid, p2=p2_grid, max_re=out, failed=failed)


def critical_parameter(mu, vary, fixed_other, params=None, p_max=100.0, tol=1e-8):
    """Smallest buffer parameter value that stabilizes the steady state.

    Bisects the largest real part of the buffered spectrum on ``[0, p_max]``
    until it is within ``tol`` of zero. Returns 0 when the steady state is
    already stable without buffering.

    Raises
    ------
    NoBracket
        Still unstable at ``p_max``.
    """
    params = params or model.ModelParams()

    def g(p):
        return max_re(mu, _bp(vary, p, fixed_other), params)

    g_lo = g(0.0)
    if g_lo <= 0.0:
        return 0.0
    g_hi = g(p_max)
    if g_hi >= 0.0:
        raise NoBracket(f"max Re = {g_hi:.3e} still >= 0 at {vary}={p_max}")
    a, b = 0.0, p_max
    while True:
        m = 0.5 * (a + b)
        gm = g(m)
        if abs(gm) < tol or m in (a, b):
            return m
        if gm > 0:
            a = m
        else:
            b = m


def critical_p1(mu, p2, params=None, p_max=100.0):
    """Critical equilibrium constant ``p1`` at fixed rate ``p2``."""
    return critical_parameter(mu, "p1", p2, params, p_max)


def critical_p2(mu, p1, params=None, p_max=100.0):
    """Critical rate ``p2`` at fixed equilibrium constant ``p1``."""
    return critical_parameter(mu, "p2", p1, params, p_max)


# ---------------------------------------------------------------------------
# frequency response


def transfer_value(s, mu0, bp, params=None, ss=None):
    """``G(s) = C (sI - J_b)^{-1} B`` at a complex frequency ``s``.

    ``B = mu0 * u1 * f'(mu0) * e2`` and ``C = e2 / u2``: relative change of
    internal zinc per relative change of external zinc.
    """
    params = params or model.ModelParams()
    if not mu0 > 0:
        raise InvalidInput("the transfer function needs mu0 > 0 (u2 > 0)")
    ss = ss or solve_steady_state(mu0, params)
    u = ss.u_star
    Jb = model.jacobian_buffered(u, mu0, params, bp)
    B = np.zeros(5, dtype=complex)
    B[1] = mu0 * u[0] * model.df_influx(mu0, params)
    try:
        x = lu_solve(s * np.eye(5) - Jb, B)
    except SingularMatrix as exc:
        raise SingularShift(f"s={s} is an eigenvalue of the buffered Jacobian") from exc
    return complex(x[1] / u[1])


def unwrap(phase):
    """Accumulated phase: add a -2pi (or +2pi) correction whenever adjacent
    principal values jump by more than pi."""
    phase = np.asarray(phase, dtype=float)
    out = phase.copy()
    offset = 0.0
    for k in range(1, phase.size):
        d = phase[k] - phase[k - 1]
        if d > math.pi:
            offset -= 2.0 * math.pi
        elif d < -math.pi:
            offset += 2.0 * math.pi
        out[k] = phase[k] + offset
    return out


def transfer_function(mu0, bp, omega_grid=None, params=None):
    """Bode data on an ascending frequency grid.

    A frequency hitting an eigenvalue of the buffered Jacobian is reported
    with ``singular=True`` and infinite gain instead of raising.
    """
    params = params or model.ModelParams()
    omega = DEFAULT_OMEGA if omega_grid is None else np.asarray(omega_grid, dtype=float)
    if np.any(omega <= 0) or np.any(np.diff(omega) <= 0):
        raise InvalidInput("omega grid must be positive and strictly ascending")
    ss = solve_steady_state(mu0, params)
    G = np.empty(omega.size, dtype=complex)
    sing = np.zeros(omega.size, dtype=bool)
    for k, w in enumerate(omega):
        try:
            G[k] = transfer_value(1j * w, mu0, bp, params, ss)
        except SingularShift as exc:
            log.warning("%s", exc)
            G[k] = np.nan
            sing[k] = True
    principal = np.angle(G)
    principal = np.where(principal == -math.pi, math.pi, principal)
    good = ~sing
    accum = np.full(omega.size, np.nan)
    accum[good] = unwrap(principal[good])
    with np.errstate(divide="ignore"):
        gain = np.where(sing, np.inf, 20.0 * np.log10(np.abs(G)))
    return [TransferSample(omega=float(w), gain_db=float(g), phase_accum=float(a),
                           phase_principal=float(p), singular=bool(si))
            for w, g, a, p, si in zip(omega, gain, accum, principal, sing)]


def resonance_peak(samples, threshold_db=RESONANCE_DB):
    """``(omega, gain_db)`` of an interior gain maximum at least
    ``threshold_db`` above the lowest-frequency gain, or None."""
    g = np.array([s.gain_db for s in samples if not s.singular])
    w = np.array([s.omega for s in samples if not s.singular])
    if g.size < 3:
        return None
    k = int(np.argmax(g))
    if 0 < k < g.size - 1 and g[k] - g[0] >= threshold_db:
        return float(w[k]), float(g[k])
    return None
