import numpy as np
import pytest
from scipy.integrate import solve_ivp

from zipkit import model
from zipkit.errors import NoOscillationDetected
from zipkit.flow import ORBIT_CONFIG, flow
from zipkit.numerics.integrate import IntegratorConfig
from zipkit.orbits import (check_least_period, default_grid, estimate_orbit, find_peaks,
                           floquet, monodromy, orbit_branch, shoot_orbit)

from shared import branch, hopf_points, normal_forms

P = model.ModelParams()


@pytest.fixture(scope="module")
def orbit():
    u, T = estimate_orbit(1.0)
    return shoot_orbit(1.0, (u, T))


def test_shooting_converges_quadratically(orbit):
    assert orbit.T == pytest.approx(2.92225, abs=1e-4)
    assert orbit.shoot_residual < 1e-9
    far = shoot_orbit(1.0, (orbit.u0 + 3e-3, 1.02 * orbit.T))
    assert far.T == pytest.approx(orbit.T, rel=1e-8)
    # before the mesh is frozen the residual exponent roughly doubles per step
    h = [r for r in far.residual_history if r > 1e-6]
    assert len(h) >= 3
    for r0, r1 in zip(h, h[1:]):
        assert r1 < 10 * r0 ** 1.5


def test_estimate_is_close(orbit):
    _, T = estimate_orbit(1.0)
    assert abs(T - orbit.T) < 0.1 * orbit.T
    with pytest.raises(NoOscillationDetected):
        estimate_orbit(0.05)


def test_find_peaks_on_sine():
    t = np.linspace(0, 10, 1001)
    tp, yp = find_peaks(t, np.sin(2 * np.pi * t / 2.5))
    assert np.allclose(np.diff(tp), 2.5, atol=1e-4)
    assert np.allclose(yp, 1.0, atol=1e-4)


def test_monodromy_against_variational_equations(orbit):
    def rhs(t, z):
        u, Y = z[:4], z[4:].reshape(4, 4)
        return np.concatenate([model.rhs(u, 1.0, P), (model.jacobian(u, 1.0, P) @ Y).ravel()])

    z0 = np.concatenate([orbit.u0, np.eye(4).ravel()])
    ref = solve_ivp(rhs, (0, orbit.T), z0, method="Radau", rtol=1e-11, atol=1e-13).y[4:, -1]
    M = monodromy(orbit)
    assert np.max(np.abs(M - ref.reshape(4, 4))) < 1e-4 * max(1, np.abs(ref).max())
    F = model.rhs(orbit.u0, 1.0, P)
    assert np.linalg.norm((M - np.eye(4)) @ F) < 1e-4 * np.linalg.norm(F)


def test_floquet_at_mu_one(orbit):
    fl = floquet(orbit)
    assert abs(fl.multipliers[fl.unit_index] - 1) < 1e-6
    assert fl.stable and fl.type0
    assert sum(abs(z) < 1e-2 for z in fl.nontrivial) >= 2


def test_period_stable_under_tighter_tolerance(orbit):
    cfg = IntegratorConfig(abs_tol=0.5 * ORBIT_CONFIG.abs_tol, rel_tol=0.5 * ORBIT_CONFIG.rel_tol,
                           h_init=ORBIT_CONFIG.h_init, h_max=ORBIT_CONFIG.h_max)
    tight = shoot_orbit(1.0, (orbit.u0, orbit.T), cfg=cfg)
    assert tight.T == pytest.approx(orbit.T, rel=1e-6)


def test_orbit_attracts_nearby_start(orbit):
    u = orbit.u0 + 0.01 * np.array([1, -1, 1, -1]) / 2
    end = flow(u, 20 * orbit.T, 1.0, P, ORBIT_CONFIG).y_end
    # distance to the closed curve
    t = np.linspace(0, orbit.T, 4001)
    curve = flow(orbit.u0, orbit.T, 1.0, P, ORBIT_CONFIG, t_eval=t).y
    assert np.min(np.max(np.abs(curve - end), axis=1)) < 1e-4


def test_least_period_rejects_doubled_period(orbit):
    doubled = type(orbit)(mu=orbit.mu, u0=orbit.u0, T=2 * orbit.T, shoot_residual=0.0)
    with pytest.raises(Exception, match="least period"):
        check_least_period(doubled)
    check_least_period(orbit)


def test_default_grid():
    g = default_grid(1.0, 11.0)
    assert len(g) == 50 and np.all(np.diff(g) > 0)
    assert g[0] == pytest.approx(1.01) and g[-1] == pytest.approx(10.99)
    with pytest.raises(ValueError):
        orbit_branch([2.0, 1.0])
    with pytest.raises(ValueError):
        orbit_branch([1.0, 2.0], mu1=1.0)


def test_default_branch_is_complete_and_stable():
    grid, pts = branch()
    assert all(p.ok for p in pts)
    assert all(p.floquet.type0 for p in pts)
    assert all(abs(p.floquet.multipliers[p.floquet.unit_index] - 1) < 1e-6 for p in pts)


def test_supplementary_near_onset_amplitude():
    # close to onset the squared amplitude follows the normal-form slope
    h1, _ = hopf_points()
    nf = normal_forms()[0]
    d = np.array([5e-4, 1e-3, 2e-3])
    pts = orbit_branch(h1.mu_star + d, mu1=h1.mu_star)
    ratios = [(p.amplitude_u2 / (2 * abs(nf.xi[1]))) ** 2 / x / nf.amplitude_slope
              for p, x in zip(pts, d)]
    assert all(abs(r - 1) < 0.05 for r in ratios)
    # the deviation is first order in the distance from onset
    assert np.all(np.diff(ratios) < 0)
    extrapolated = ratios[0] - (ratios[1] - ratios[0]) / (d[1] - d[0]) * d[0]
    assert extrapolated == pytest.approx(1.0, abs=2e-3)
