import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strategies import params

from henonpucci import kernels
from henonpucci.ivp import IntegratorConfig, ShootingInput, integrate_ivp
from henonpucci.phase import PhaseConfig, integrate_phase
from henonpucci.pucci import ProblemParams

needs_compiled = pytest.mark.skipif(not kernels.compiled_available(), reason="compiled kernel not built")


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_integrator("fortran")


@needs_compiled
@pytest.mark.parametrize("variant", ["plus", "minus"])
@pytest.mark.parametrize("p", [3.0, 4.0, 6.0])
def test_radial_bitwise(variant, p):
    q = ProblemParams(1.0, 1.5, 4, p, 0.5, variant)
    out = []
    for b in ("compiled", "python"):
        prof = integrate_ivp(ShootingInput(q, 1.0, 0.7), IntegratorConfig(backend=b, r_max=1e3))
        out.append((prof.r, prof.u, prof.uprime, (prof.tau, prof.rho, prof.unbounded, prof.switch_indices)))
    for x, y in zip(out[0][:3], out[1][:3]):
        assert np.array_equal(x, y)
    assert out[0][3] == out[1][3]


@needs_compiled
def test_phase_bitwise():
    q = ProblemParams(1.0, 1.5, 4, 5.0, 0.0)
    a = integrate_phase(q, q.alpha, 0.25, 0.0, 60.0, PhaseConfig(backend="compiled"))
    b = integrate_phase(q, q.alpha, 0.25, 0.0, 60.0, PhaseConfig(backend="python"))
    assert np.array_equal(a.t, b.t) and np.array_equal(a.x, b.x) and np.array_equal(a.z, b.z)


def test_forced_fallback_matches():
    code = ("import json;from henonpucci import kernels;"
            "from henonpucci.ivp import ShootingInput,integrate_ivp;"
            "from henonpucci.pucci import ProblemParams;"
            "p=integrate_ivp(ShootingInput(ProblemParams(1,1.5,4,4.0,0.0),1.0,1.0));"
            "print(json.dumps([kernels.BACKEND,p.tau,p.rho]))")
    env = dict(os.environ, HENONPUCCI_PURE="1")
    res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, tau, rho = json.loads(res.stdout)
    assert backend == "python"
    prof = integrate_ivp(ShootingInput(ProblemParams(1, 1.5, 4, 4.0, 0.0), 1.0, 1.0))
    assert (tau, rho) == (prof.tau, prof.rho)


@needs_compiled
@settings(max_examples=25)
@given(q=params(), delta=st.floats(0.05, 20.0))
def test_radial_bitwise_property(q, delta):
    a = integrate_ivp(ShootingInput(q, 1.0, delta), IntegratorConfig(backend="compiled", r_max=1e3))
    b = integrate_ivp(ShootingInput(q, 1.0, delta), IntegratorConfig(backend="python", r_max=1e3))
    assert np.array_equal(a.r, b.r) and np.array_equal(a.u, b.u) and np.array_equal(a.uprime, b.uprime)
