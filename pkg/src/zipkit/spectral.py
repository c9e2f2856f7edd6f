"""Spectrum of the Jacobian along the steady-state branch: Hopf point
location, transversality, crossing numbers, center indices and the
admissible eigenvalue configurations."""
from dataclasses import dataclass, field
import logging

import numpy as np

from . import model
from .equilibrium import solve_steady_state
from .errors import (BisectionStall, ClassificationViolation, InconsistentCount,
                     NoComplexPair, PairTrackingAmbiguous)
from .numerics.linalg import eigenvalues

log = logging.getLogger(__name__)

HOPF_RE_TOL = 1e-10
REAL_TOL = 1e-12
DEFAULT_SCAN_POINTS = 512


@dataclass
class HopfPoint:
    mu_star: float
    omega: float
    spectrum: list
    d_re_lambda_d_mu: float
    crossing_number: int
    center_index: int
    u_star: np.ndarray = field(repr=False, default=None)

    @property
    def remaining(self):
        """The two eigenvalues other than the critical pair."""
        return [z for z in self.spectrum if abs(z.imag) <= REAL_TOL * max(1.0, abs(z))]


@dataclass
class SpectrumClass:
    tag: str
    detail: tuple = ()
    boundary: bool = False


def spectrum_at(mu, params=None, allow_outside=False):
    """Eigenvalues of the Jacobian at the steady state, deterministic order."""
    params = params or model.ModelParams()
    ss = solve_steady_state(mu, params, allow_outside)
    return eigenvalues(ss.jac)


def is_real(z, tol=REAL_TOL):
    return abs(z.imag) <= tol * max(1.0, abs(z))


def leading_pair(spectrum):
    """The member with positive imaginary part of the complex pair with the
    largest real part, or None if the spectrum is real."""
    cands = [z for z in spectrum if z.imag > 0 and not is_real(z)]
    if not cands:
        return None
    return max(cands, key=lambda z: (z.real, z.imag))


def scan_grid(mu_lo, mu_hi, n=DEFAULT_SCAN_POINTS):
    """Linear grid on ``[mu_lo, mu_hi]`` densified logarithmically near the
    left end, ``n`` points in total."""
    span = mu_hi - mu_lo
    n_log = n // 4
    n_lin = n - n_log
    lin = np.linspace(mu_lo, mu_hi, n_lin)
    geo = mu_lo + np.geomspace(1e-4 * span, 0.05 * span, n_log)
    grid = np.unique(np.concatenate([lin, geo]))
    return grid


def _pair_re(mu, params, allow_outside):
    z = leading_pair(spectrum_at(mu, params, allow_outside))
    return None if z is None else z.real


def find_hopf_points(mu_lo=0.0, mu_hi=model.MU_MAX, params=None,
                     scan_points=DEFAULT_SCAN_POINTS, allow_outside=False):
    """Locate Hopf points on ``[mu_lo, mu_hi]``.

    Scans the real part of the leading complex pair, bisects every sign
    change down to ``|Re lambda| < 1e-10`` and fills in frequency,
    transversality, crossing number and center index. Subintervals where the
    spectrum is entirely real are skipped.
    """
    params = params or model.ModelParams()
    if not 0.0 <= mu_lo < mu_hi:
        raise ValueError("need 0 <= mu_lo < mu_hi")
    grid = scan_grid(mu_lo, mu_hi, scan_points)
    values = [_pair_re(mu, params, allow_outside) for mu in grid]
    points = []
    for i in range(len(grid) - 1):
        g0, g1 = values[i], values[i + 1]
        if g0 is None or g1 is None:
            continue
        if g0 == 0.0 or np.sign(g0) == np.sign(g1):
            continue
        try:
            mu_star = _bisect(grid[i], grid[i + 1], g0, params, allow_outside)
        except NoComplexPair:
            log.info("no complex pair inside [%g, %g]; skipped", grid[i], grid[i + 1])
            continue
        points.append(hopf_point(mu_star, params, allow_outside))
    return points


def _bisect(a, b, ga, params, allow_outside, max_iter=200):
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        gm = _pair_re(m, params, allow_outside)
        if gm is None:
            raise NoComplexPair(f"spectrum real at mu={m}")
        if abs(gm) < HOPF_RE_TOL:
            return m
        if m == a or m == b:
            break
        if np.sign(gm) == np.sign(ga):
            a, ga = m, gm
        else:
            b = m
    raise BisectionStall(f"bisection stalled on [{a}, {b}]")


def hopf_point(mu_star, params=None, allow_outside=False):
    """Assemble and check a :class:`HopfPoint` at a located critical value."""
    params = params or model.ModelParams()
    ss = solve_steady_state(mu_star, params, allow_outside)
    spec = eigenvalues(ss.jac)
    crit = leading_pair(spec)
    if crit is None:
        raise NoComplexPair(f"no complex pair at mu={mu_star}")
    omega = crit.imag
    rest = [z for z in spec if abs(z - crit) > 0 and abs(z - crit.conjugate()) > 0]
    # simple imaginary pair, remaining eigenvalues real and negative; hence no
    # multiple n*i*omega (n >= 2) is an eigenvalue
    if len(rest) != 2 or not all(is_real(z) and z.real < 0 for z in rest):
        raise ClassificationViolation(
            f"non-generic spectrum at Hopf point mu={mu_star}: {spec}")
    slope = transversality(mu_star, params, allow_outside)
    delta = 1e-3 * max(1.0, mu_star)
    before = spectrum_at(max(mu_star - delta, 0.0), params, True)
    after = spectrum_at(mu_star + delta, params, True)
    chi, index = crossing_and_index(before, after, spec)
    if chi != 0 and np.sign(chi) != np.sign(slope):
        log.warning("crossing number %d disagrees with transversality %g at mu=%g",
                    chi, slope, mu_star)
    return HopfPoint(mu_star=float(mu_star), omega=float(omega), spectrum=spec,
                     d_re_lambda_d_mu=float(slope), crossing_number=chi,
                     center_index=index, u_star=ss.u_star)


def track(reference, spectrum, others):
    """Eigenvalue in ``spectrum`` continuing ``reference``.

    ``others`` are the remaining eigenvalues at the reference parameter; the
    matching radius is half the distance from ``reference`` to the closest
    of them.
    """
    sep = min((abs(reference - z) for z in others), default=np.inf)
    radius = 0.5 * sep
    dist = sorted((abs(z - reference), k) for k, z in enumerate(spectrum))
    if dist[0][0] > radius or (len(dist) > 1 and dist[1][0] < radius):
        raise PairTrackingAmbiguous(
            f"cannot match {reference} within radius {radius:.3e}")
    return spectrum[dist[0][1]]


def transversality(mu_star, params=None, allow_outside=False, h=None):
    """Central difference of the critical pair's real part with respect to mu."""
    params = params or model.ModelParams()
    h = 1e-5 * max(1.0, mu_star) if h is None else h
    spec = spectrum_at(mu_star, params, True)
    crit = leading_pair(spec)
    if crit is None:
        raise NoComplexPair(f"no complex pair at mu={mu_star}")
    others = [z for z in spec if z != crit]
    lo = track(crit, spectrum_at(mu_star - h, params, True), others)
    hi = track(crit, spectrum_at(mu_star + h, params, True), others)
    return (hi.real - lo.real) / (2.0 * h)


def count_unstable(spectrum, exclude=(), tol=0.0):
    """Number of eigenvalues with real part strictly above ``tol``."""
    return sum(1 for z in spectrum if z.real > tol and z not in exclude)


def crossing_and_index(spectra_before, spectra_after, spectrum_at_star=None,
                       axis_tol=1e-8):
    """Crossing number and center index of a Hopf point.

    ``spectra_before``/``spectra_after`` are spectra just left and right of
    the critical value. Eigenvalues of ``spectrum_at_star`` within
    ``axis_tol`` of the imaginary axis (the critical pair) are not counted in
    the unstable dimension at the critical point.
    """
    e_minus = count_unstable(spectra_before)
    e_plus = count_unstable(spectra_after)
    if (e_plus - e_minus) % 2:
        raise InconsistentCount(f"unstable counts {e_minus} -> {e_plus} differ by an odd number")
    chi = (e_plus - e_minus) // 2
    if spectrum_at_star is None:
        e_star = min(e_minus, e_plus)
    else:
        e_star = count_unstable(spectrum_at_star, tol=axis_tol)
    return chi, chi * (-1) ** e_star


def classify_spectrum(spectrum, mu=None, tol=1e-9, axis_tol=1e-8):
    """Sort a 4-eigenvalue spectrum into one of the admissible configurations:

    * ``all_real_below_minus1``: four real eigenvalues,
    * ``two_real_one_pair``: two real eigenvalues and a complex pair,
    * ``two_pairs``: two complex pairs, at least one in the left half-plane.

    A real eigenvalue above ``-1`` or two pairs both on the imaginary axis
    raise :class:`ClassificationViolation`. A real eigenvalue equal to ``-1``
    (within ``tol``) is admissible; for ``mu > 0`` it is logged as a warning
    and flagged via ``boundary``.
    """
    spectrum = list(spectrum)
    if len(spectrum) != 4:
        raise ValueError("expected four eigenvalues")
    reals = [z.real for z in spectrum if is_real(z)]
    pairs = sorted({(z.real, abs(z.imag)) for z in spectrum if not is_real(z)})
    for r in reals:
        if r > -1.0 + tol:
            raise ClassificationViolation(f"real eigenvalue {r} above -1")
    boundary = any(abs(r + 1.0) <= tol for r in reals)
    if boundary and mu is not None and mu > 0:
        log.warning("real eigenvalue at -1 observed for mu=%g", mu)
    if len(reals) == 4:
        return SpectrumClass("all_real_below_minus1", (), boundary)
    if len(reals) == 2 and len(pairs) == 1:
        return SpectrumClass("two_real_one_pair", (pairs[0][0],), boundary)
    if len(reals) == 0 and len(pairs) in (1, 2):
        res = tuple(p[0] for p in pairs)
        if len(res) == 1:
            res = res * 2
        if all(abs(r) <= axis_tol for r in res):
            raise ClassificationViolation("two conjugate pairs on the imaginary axis")
        if min(res) >= 0:
            raise ClassificationViolation("no pair in the left half-plane")
        return SpectrumClass("two_pairs", res, boundary)
    raise ClassificationViolation(f"impossible eigenvalue configuration {spectrum}")
