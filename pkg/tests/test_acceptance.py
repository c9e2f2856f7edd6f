"""Acceptance criteria 1-11 at their stated tolerances.

Runs under pytest (one test per criterion, summary lines printed at the end
of the session) or directly::

    python3 tests/test_acceptance.py
"""
import math
import sys
import time

import numpy as np
import pytest

from zipkit import model
from zipkit.buffering import (critical_p1, critical_p2, buffered_spectrum, resonance_peak,
                              spectrum_continuation, transfer_function)
from zipkit.equilibrium import (activator_interval, count_sign_changes, quartic_coeffs,
                                solve_steady_state)
from zipkit.flow import flow
from zipkit.normal_form import coefficient_b
from zipkit.numerics.integrate import IntegratorConfig, integrate
from zipkit.numerics.linalg import det, eigenvalues
from zipkit.spectral import is_real, spectrum_at

from shared import branch, hopf_points, normal_forms, sig

RESULTS = {}


def _poly(c, x):
    return (((c[0] * x + c[1]) * x + c[2]) * x + c[3]) * x + c[4]


def check_1():
    """Hopf table at the default parameters."""
    hp = hopf_points()
    if len(hp) != 2:
        return False, f"{len(hp)} Hopf points"
    nf = normal_forms()
    want = [
        (0.1895, 1e-3, 1.983, (-3.474, -238.6), 1.83, 0.05),
        (12.643, 1e-2, 2.782, (-5.599, -84.43), -0.0126, 5e-4),
    ]
    fails = []
    for h, res, (mu, mu_tol, om, rem, tr, tr_tol) in zip(hp, nf, want):
        if abs(h.mu_star - mu) > mu_tol:
            fails.append(f"mu*={h.mu_star}")
        if abs(h.omega - om) > 1e-2:
            fails.append(f"omega={h.omega}")
        got = sorted((sig(z.real) for z in h.remaining), reverse=True)
        if got != sorted((sig(r) for r in rem), reverse=True):
            fails.append(f"remaining={got}")
        if abs(h.d_re_lambda_d_mu - tr) > tr_tol:
            fails.append(f"transversality={h.d_re_lambda_d_mu}")
        if np.sign(res.b.real) != -1:
            fails.append(f"Re b={res.b.real}")
    detail = "; ".join(f"mu*={h.mu_star:.6g} omega={h.omega:.6g} dRe/dmu={h.d_re_lambda_d_mu:.5g} "
                       f"Re b={r.b.real:.4g}" for h, r in zip(hp, nf))
    return not fails, detail + ("" if not fails else " | " + ", ".join(fails))


def check_2():
    """Exact spectrum at mu = 0."""
    got = sorted(z.real for z in spectrum_at(0.0))
    imag = max(abs(z.imag) for z in spectrum_at(0.0))
    err = max(max(abs(g - w) for g, w in zip(got, [-1673.0, -21.0, -1.0, -1.0])), imag)
    return err <= 1e-9, f"spectrum {got}, max error {err:.2e}"


def check_3():
    """Steady-state quartic with f = 1/2 and unit parameters."""
    p = model.ModelParams(1.0, 1.0, 1.0, 1.0, 1.0)
    c = quartic_coeffs(0.5, p)
    lo, hi = activator_interval(p)
    ok = (tuple(c) == (1.0, 1.0, -0.5, 0.0, -1.0) and _poly(c, 0.5) == -15 / 16
          and _poly(c, 1.0) == 0.5 and (lo, hi) == (0.5, 1.0)
          and count_sign_changes(c, lo, hi) == 1)
    return ok, f"coefficients {tuple(float(x) for x in c)}, phi(1/2)={_poly(c, 0.5)}, phi(1)={_poly(c, 1.0)}"


def random_params(rng):
    k, K, g1, g2, g3 = np.exp(rng.uniform(math.log(0.1), math.log(1e4), 5))
    return model.ModelParams(k, K, g1, g2, g3), float(rng.uniform(0.0, 30.0))


def check_4(n=500, seed=20261019):
    """Steady-state properties on random parameter sets."""
    rng = np.random.default_rng(seed)
    bad, worst = [], 0.0
    for _ in range(n):
        p, mu = random_params(rng)
        try:
            ss = solve_steady_state(mu, p)
            c = quartic_coeffs(model.f_influx(mu, p), p)
            ev = eigenvalues(ss.jac)
            real = [z.real for z in ev if abs(z.imag) <= 1e-12 * max(1.0, abs(z))]
            ok = (count_sign_changes(c, *activator_interval(p)) == 1
                  and np.all((ss.u_star > 0) & (ss.u_star < 1))
                  and ss.residual_norm < 1e-12 and det(ss.jac) > 0 and np.trace(ss.jac) < 0
                  and all(r <= -1.0 for r in real))
        except Exception as exc:  # any failure counts against the sample
            ok = False
            bad.append(f"{p}, mu={mu}: {exc}")
            continue
        worst = max(worst, ss.residual_norm)
        if not ok:
            bad.append(f"{p}, mu={mu}")
    return not bad, f"{n - len(bad)}/{n} samples pass, worst residual {worst:.2e}" + (
        f"; first failure {bad[0]}" if bad else "")


def check_5(n=100, seed=7):
    """Trajectories from random starts stay in the unit hypercube."""
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 100.0, 2001)
    lo, hi = np.inf, -np.inf
    for mu in (0.0, 1.0, 13.0, 30.0):
        for u0 in rng.uniform(0.0, 1.0, (n, 4)):
            y = flow(u0, 100.0, mu, t_eval=t).y
            lo, hi = min(lo, y.min()), max(hi, y.max())
    return lo >= -1e-9 and hi <= 1 + 1e-9, f"min component {lo:.3e}, max component {hi:.12f}"


def check_6():
    """Orbit family between the Hopf points."""
    h1, h2 = hopf_points()
    grid, pts = branch()
    fails = []
    if len(pts) != 50 or not all(p.ok for p in pts):
        fails.append(f"{sum(p.ok for p in pts)}/{len(pts)} orbits converged")
        return False, ", ".join(fails)
    res = max(p.orbit.shoot_residual for p in pts)
    T = np.array([p.orbit.T for p in pts])
    jump = float(np.max(np.abs(np.diff(T)) / T[:-1]))
    e1 = abs(T[0] / (2 * math.pi / h1.omega) - 1)
    e2 = abs(T[-1] / (2 * math.pi / h2.omega) - 1)
    unit = max(abs(p.floquet.multipliers[p.floquet.unit_index] - 1) for p in pts)
    other = max(max(abs(z) for z in p.floquet.nontrivial) for p in pts)
    span = h2.mu_star - h1.mu_star
    interior = [p for p in pts if h1.mu_star + 0.1 * span <= p.mu <= h2.mu_star - 0.1 * span]
    small = min(sum(abs(z) < 1e-2 for z in p.floquet.multipliers) for p in interior)
    if res >= 1e-9:
        fails.append("closure")
    if not (np.all(np.isfinite(T)) and T.min() > 0 and jump < 0.1):
        fails.append("period curve")
    if max(e1, e2) > 0.02:
        fails.append("endpoint periods")
    if unit >= 1e-6:
        fails.append("unit multiplier")
    if other >= 1:
        fails.append("stability")
    if small < 2:
        fails.append("small multipliers")
    detail = (f"max residual {res:.2e}; T in [{T.min():.5f}, {T.max():.5f}], max step jump {jump:.3f}; "
              f"endpoint period errors {e1:.2%}, {e2:.2%}; max |unit-1| {unit:.2e}; "
              f"max other |z| {other:.4f}; min #(|z|<1e-2) in interior {small}")
    return not fails, detail + ("" if not fails else " | " + ", ".join(fails))


def scaling_fit(mu1, pts, xi2):
    """Through-origin fit of |A|^2 against mu - mu1, with |A| read off the
    u2 amplitude: u ~ u* + 2 Re(A xi) gives ptp(u2) = 4 |A| |xi2|."""
    x = np.array([p.mu - mu1 for p in pts])
    y = np.array([(p.amplitude_u2 / (2.0 * abs(xi2))) ** 2 for p in pts])
    k = float(x @ y / (x @ x))
    r2 = 1.0 - float(np.sum((y - k * x) ** 2) / np.sum((y - y.mean()) ** 2))
    return k, r2


def check_7():
    """Supercritical amplitude scaling on the 10 branch points nearest mu1."""
    h1, _ = hopf_points()
    nf = normal_forms()[0]
    _, pts = branch()
    near = sorted((p for p in pts if p.ok), key=lambda p: p.mu - h1.mu_star)[:10]
    k, r2 = scaling_fit(h1.mu_star, near, nf.xi[1])
    pred = nf.amplitude_slope
    rel = abs(k / pred - 1)
    return r2 > 0.98 and rel <= 0.2, (
        f"mu-mu1 in [{near[0].mu - h1.mu_star:.4g}, {near[-1].mu - h1.mu_star:.4g}]: "
        f"slope {k:.4g} vs -Re a/Re b = {pred:.4g} ({rel:.0%} off), R^2 = {r2:.3f}")


def check_8():
    """Normal-form coefficient a against eigenvalue drift; b phase invariance."""
    out, ok = [], True
    for h, res in zip(hopf_points(), normal_forms()):
        rel = abs(res.a.real / h.d_re_lambda_d_mu - 1)
        ss = solve_steady_state(h.mu_star)
        worst = 0.0
        for theta in (0.3, 1.0, 2.5):
            rot = complex(math.cos(theta), math.sin(theta))
            b2, _, _ = coefficient_b(res.xi * rot, res.xi_star * rot, ss.jac, res.omega,
                                     ss.u_star, model.ModelParams())
            worst = max(worst, abs(b2 - res.b) / abs(res.b))
        ok &= rel <= 1e-3 and worst <= 1e-8
        out.append(f"mu*={h.mu_star:.5g}: Re a rel. err {rel:.1e}, b rotation change {worst:.1e}")
    return ok, "; ".join(out)


def check_9():
    """Buffering thresholds."""
    c1 = critical_p1(1.0, 1.0)
    c2 = critical_p2(1.0, 10.0)
    worst = -np.inf
    nonreal = 0
    for mu in np.linspace(0.0, 30.0, 61):
        sp = buffered_spectrum(mu, model.BufferParams(1000.0, 1.0))
        worst = max(worst, max(z.real for z in sp))
        nonreal += sum(not is_real(z) for z in sp)
    ok = abs(c1 - 1.1) <= 0.2 and abs(c2 - 0.09) <= 0.03 and worst < 0 and nonreal == 0
    return ok, (f"critical p1 {c1:.5f}; critical p2 (p1=10) {c2:.5f}; p1=1000: max Re {worst:.3e}, "
                f"{nonreal} non-real eigenvalues over 61 mu values")


def check_10():
    """Bode behavior at mu0 = 1, p2 = 1, and continuation residuals."""
    out, ok = [], True
    for p1, resonant in ((0.0, True), (0.5, True), (10.0, False), (1000.0, False)):
        tf = transfer_function(1.0, model.BufferParams(p1, 1.0))
        peak = resonance_peak(tf)
        phase = max(abs(s.phase_accum) for s in tf if not s.singular)
        ok &= (peak is not None) == resonant and (phase > math.pi) == resonant
        out.append(f"p1={p1:g}: peak {'%.3g dB' % peak[1] if peak else 'none'}, max |phase| {phase:.3f}")
        if p1 == 1000.0:
            band = [s.gain_db for s in tf if 2.0 <= s.omega <= 400.0]
            ok &= -70.0 <= min(band) and max(band) <= -50.0
            out.append(f"gain on [2,400] in [{min(band):.2f}, {max(band):.2f}] dB")
    samples = np.unique(np.concatenate([np.linspace(0.0, 1000.0, 201), [0.5, 1.1]]))
    segs = spectrum_continuation(1.0, "p1", 1.0, (0.0, 1000.0), p_samples=samples)
    chi = max(path.max_chi_residual for _, _, paths in segs for path in paths)
    n = sum(len(path.samples) for _, _, paths in segs for path in paths)
    ok &= chi <= 1e-6
    out.append(f"continuation over p1 in [0,1000]: {len(segs)} segments, {n} samples, "
               f"max chi residual {chi:.1e}")
    return ok, "; ".join(out)


def _logistic_slopes():
    def rhs(t, y):
        return y * (1.0 - y)

    def jac(t, y):
        return np.array([[1.0 - 2.0 * y[0]]])

    T = 3.0
    exact = 0.1 * math.exp(T) / (0.9 + 0.1 * math.exp(T))
    hs = np.array([T / 20, T / 40, T / 80, T / 160])
    slopes = {}
    for method in ("rosenbrock", "dormand_prince"):
        errs = [abs(integrate(rhs, [0.1], (0.0, T), method=method, jac=jac,
                              mesh=np.linspace(0.0, T, round(T / h) + 1)).y_end[0] - exact)
                for h in hs]
        slopes[method] = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    return slopes


def stiff_steps(t_end, cfg=None):
    lam = -1673.0
    cfg = cfg or IntegratorConfig()
    ros = integrate(lambda t, y: lam * y, [1.0], (0.0, t_end), cfg, "rosenbrock",
                    jac=lambda t, y: np.array([[lam]]))
    dp = integrate(lambda t, y: lam * y, [1.0], (0.0, t_end), cfg, "dormand_prince")
    return ros, dp


def check_11(seed=11):
    """Numerics self-tests."""
    rng = np.random.default_rng(seed)
    tr_err = det_err = 0.0
    for n in (2, 3, 4, 5, 8, 12):
        for _ in range(20):
            A = rng.normal(size=(n, n)) * rng.choice([1.0, 10.0, 1e3], size=(n, n))
            ev = eigenvalues(A)
            tr_err = max(tr_err, abs(sum(ev) - np.trace(A)) / max(1.0, np.abs(A).sum()))
            d = det(A)
            det_err = max(det_err, abs(np.prod(ev) - d) / max(1e-300, abs(d)))
    slopes = _logistic_slopes()
    ros, dp = stiff_steps(0.1)
    n_ros = ros.n_accepted + ros.n_rejected
    n_dp = dp.n_accepted + dp.n_rejected
    stiff_ok = abs(ros.y_end[0]) <= 1e-10 and n_dp >= 50 * n_ros
    ok = (tr_err <= 1e-8 and det_err <= 1e-6 and abs(slopes["rosenbrock"] - 4) <= 0.5
          and abs(slopes["dormand_prince"] - 5) <= 0.5 and stiff_ok)
    return ok, (f"trace err {tr_err:.1e}, det rel err {det_err:.1e}; order slopes "
                f"rosenbrock {slopes['rosenbrock']:.2f}, dormand_prince {slopes['dormand_prince']:.2f}; "
                f"stiff test to t=0.1: rosenbrock {n_ros} steps (u={ros.y_end[0]:.1e}), "
                f"dormand_prince {n_dp} steps, ratio {n_dp / n_ros:.2f}")


CHECKS = {
    1: ("Hopf table", check_1),
    2: ("mu = 0 spectrum", check_2),
    3: ("steady-state quartic", check_3),
    4: ("steady-state properties", check_4),
    5: ("invariant region", check_5),
    6: ("orbit family", check_6),
    7: ("supercritical scaling", check_7),
    8: ("normal-form cross-check", check_8),
    9: ("buffering thresholds", check_9),
    10: ("Bode behavior", check_10),
    11: ("numerics self-tests", check_11),
}


def run(n):
    name, fn = CHECKS[n]
    t = time.perf_counter()
    ok, detail = fn()
    RESULTS[n] = (bool(ok), name, detail, time.perf_counter() - t)
    return bool(ok), detail


def summary_lines():
    return [f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {name} ({sec:.1f} s): {detail}"
            for n, (ok, name, detail, sec) in sorted(RESULTS.items())]


@pytest.mark.parametrize("n", sorted(CHECKS), ids=[f"c{n:02d}-{CHECKS[n][0].replace(' ', '-')}"
                                                  for n in sorted(CHECKS)])
def test_criterion(n):
    ok, detail = run(n)
    assert ok, detail


if __name__ == "__main__":
    for n in sorted(CHECKS):
        run(n)
        print(summary_lines()[-1], flush=True)
    sys.exit(0 if all(r[0] for r in RESULTS.values()) else 1)
