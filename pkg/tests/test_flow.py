import os
import subprocess
import sys

import numpy as np
import pytest

from zipkit import flow as flow_mod
from zipkit.errors import MaxStepsExceeded
from zipkit.flow import ORBIT_CONFIG, available_backends, flow, flow_map
from zipkit.numerics.integrate import IntegratorConfig

compiled = pytest.mark.skipif("compiled" not in available_backends(),
                              reason="compiled kernel not built")
U0 = np.array([0.3, 0.2, 0.5, 0.1])


@compiled
@pytest.mark.parametrize("mu", [0.5, 1.0, 12.0])
def test_backends_agree(mu):
    a = flow(U0, 5.0, mu, cfg=ORBIT_CONFIG, backend="compiled", record_mesh=True)
    b = flow(U0, 5.0, mu, cfg=ORBIT_CONFIG, backend="python", record_mesh=True)
    assert np.allclose(a.y_end, b.y_end, rtol=0, atol=1e-12)
    assert a.n_accepted == b.n_accepted
    assert np.allclose(a.mesh, b.mesh, rtol=1e-12)


@compiled
def test_backends_agree_on_fixed_mesh_and_dense_output():
    mesh = np.linspace(0.0, 2.0, 401)
    t = np.linspace(0.0, 2.0, 21)
    a = flow(U0, 2.0, 1.0, mesh=mesh, backend="compiled")
    b = flow(U0, 2.0, 1.0, mesh=mesh, backend="python")
    assert np.allclose(a.y_end, b.y_end, atol=1e-13)
    a = flow(U0, 2.0, 1.0, t_eval=t, backend="compiled")
    b = flow(U0, 2.0, 1.0, t_eval=t, backend="python")
    assert np.allclose(a.y, b.y, atol=1e-12)


@compiled
def test_compiled_error_status():
    with pytest.raises(MaxStepsExceeded):
        flow(U0, 5.0, 1.0, cfg=IntegratorConfig(max_steps=3), backend="compiled")


def test_input_validation():
    with pytest.raises(ValueError):
        flow([0.1, 0.2], 1.0, 1.0)
    with pytest.raises(ValueError):
        flow(U0, -1.0, 1.0)
    with pytest.raises(ValueError):
        flow(U0, 1.0, 1.0, mesh=[0.0, 0.5])
    with pytest.raises(ValueError):
        flow(U0, 1.0, 1.0, t_eval=[0.5, 2.0])
    with pytest.raises(ValueError):
        flow(U0, 1.0, 1.0, backend="fortran")
    assert flow_map(U0, 0.5, 1.0).shape == (4,)


def test_environment_forces_fallback():
    env = dict(os.environ, ZIPKIT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import zipkit.flow as f; print(f.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert flow_mod.BACKEND in available_backends()
