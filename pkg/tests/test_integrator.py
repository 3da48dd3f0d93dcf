import math
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from lagtop import kernels
from lagtop.errors import ConfigError, StepFailure
from lagtop.integrator import (IntegratorConfig, integrate, integrate_coupled, integrate_ensemble, step,
                               step_coupled)
from lagtop.models import (CoupledConfig, CoupledState, ReducedTopState, TopParams, equilibrium_state,
                           project_to_constraints, reduced_hamiltonian)

from conftest import random_state

SCHEMES = ("implicit-midpoint", "splitting-2nd", "splitting-4th")


def _reference(state, c, t):
    def f(_, y):
        u, v = y[:3], y[3:]
        return np.concatenate([np.cross(u, v), c * np.cross(u, [0.0, 0.0, 1.0])])
    sol = solve_ivp(f, (0, t), state.as_array(), method="DOP853", rtol=1e-13, atol=1e-14)
    return sol.y[:, -1]


def _near_pa(a=3.0, r=0.05, theta=0.3):
    return project_to_constraints([r * math.cos(theta), r * math.sin(theta), 1.0], [0, 0, a], a)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_equilibrium_fixed(scheme):
    p = TopParams(c=1.0, a=2.5)
    out = step(equilibrium_state(2.5), p, IntegratorConfig(scheme, 0.01))
    np.testing.assert_allclose(out.as_array(), equilibrium_state(2.5).as_array(), atol=1e-13)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_reversibility(scheme, rng):
    worst = 0.0
    for _ in range(1000):
        s, a = random_state(rng, scale=1.0)
        p = TopParams(c=rng.uniform(0.2, 3), a=a)
        fwd = step(s, p, IntegratorConfig(scheme, 0.01))
        back = step(fwd, p, IntegratorConfig(scheme, -0.01), tol=1e-9)
        worst = max(worst, float(np.max(np.abs(back.as_array() - s.as_array()))))
    assert worst < 1e-12


def test_midpoint_preserves_quadratic_invariants(rng):
    cfg = IntegratorConfig("implicit-midpoint", 0.05)
    for _ in range(200):
        s, a = random_state(rng, scale=1.0)
        p = TopParams(c=1.0, a=a)
        out = step(s, p, cfg)
        assert abs(out.u @ out.u - 1) < 1e-13
        assert abs(out.u @ out.v - a) < 1e-12 * max(1, abs(a))
        assert abs(reduced_hamiltonian(out, p, 1e-9) - reduced_hamiltonian(s, p, 1e-9)) < 1e-12


@pytest.mark.parametrize("scheme,order", [("implicit-midpoint", 2), ("splitting-2nd", 2), ("splitting-4th", 4)])
def test_convergence_order(scheme, order):
    s = project_to_constraints([0.6, 0.1, 0.8], [0.3, 1.2, 0.5], 1.0)
    p = TopParams(c=1.0, a=float(s.u @ s.v))
    t_end = 2.0
    ref = _reference(s, p.c, t_end)
    dts = np.array([0.02, 0.01, 0.005])
    errs = [np.max(np.abs(integrate(s, p, IntegratorConfig(scheme, dt, 1e-15), t_end, 10_000).states[-1] - ref))
            for dt in dts]
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    assert abs(slope - order) <= 0.2


def test_local_error_third_order():
    theta = 0.7
    s = ReducedTopState([math.sin(theta), 0, math.cos(theta)], [0, 0.8, 0])
    p = TopParams(c=1.0, a=0.0)
    errs = []
    for dt in (0.04, 0.02, 0.01):
        one = step(s, p, IntegratorConfig("implicit-midpoint", dt, 1e-15)).as_array()
        errs.append(np.max(np.abs(one - _reference(s, 1.0, dt))))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(np.abs(np.log2(ratios) - 3) < 0.2)


def test_zero_length_run():
    tr = integrate(equilibrium_state(1.0), TopParams(c=1.0, a=1.0), IntegratorConfig(), 0.0)
    assert len(tr) == 1 and tr.times[0] == 0.0


def test_sampling_grid():
    tr = integrate(_near_pa(), TopParams(c=1.0, a=3.0), IntegratorConfig(dt=0.01), 1.005, sample_every=25)
    assert tr.meta["nsteps"] == 101
    np.testing.assert_allclose(tr.times, [0, 0.25, 0.5, 0.75, 1.0, 1.01])


def test_config_errors():
    with pytest.raises(ConfigError):
        IntegratorConfig(dt=0.0)
    with pytest.raises(ConfigError):
        IntegratorConfig(scheme="euler")
    with pytest.raises(ConfigError):
        integrate(_near_pa(), TopParams(c=1.0, a=3.0), IntegratorConfig(dt=-0.01), 1.0)
    with pytest.raises(ConfigError):
        integrate(_near_pa(), TopParams(c=1.0, a=3.0), IntegratorConfig(), 1.0, sample_every=0)


def test_step_failure_reports_step():
    p = TopParams(c=1.0, a=3.0)
    with pytest.raises(StepFailure) as info:
        integrate(_near_pa(r=0.5), p, IntegratorConfig(dt=5.0, newton_max_iter=2), 50.0)
    assert info.value.step_index == 1 and info.value.residual > 0


def test_coupled_eps0_matches_bare_and_linear_angles():
    p = TopParams(c=1.0, a=3.0)
    s = _near_pa()
    cfg = IntegratorConfig(dt=0.01)
    bare = integrate(s, p, cfg, 5.0, 10)
    om = np.array([2.255, 0.3])
    cp = integrate_coupled(CoupledState(s, [0.1, 6.0], [0.0, 0.0]), p, cfg, CoupledConfig(om, 0.0), 5.0, 10)
    np.testing.assert_allclose(cp.states[:, :6], bare.states, rtol=0, atol=1e-15)
    expect = np.mod(np.array([0.1, 6.0]) + np.outer(cp.times, om), 2 * np.pi)
    d = np.abs(cp.x_osc - expect)
    assert np.max(np.minimum(d, 2 * np.pi - d)) < 1e-11
    assert not np.any(cp.y_osc)


def test_coupled_energy_and_action_bounds():
    p = TopParams(c=1.0, a=3.0)
    eps, t_end = 1e-3, 1000.0
    cc = CoupledConfig([2.255], eps)
    tr = integrate_coupled(CoupledState(_near_pa(), [0.0], [0.0]), p, IntegratorConfig(dt=0.01), cc, t_end, 100)
    assert tr.max_drift()["dH"] < 1e-7
    bound = eps * tr.times * cc.coupling_fn.sup_grad_x()[0]
    assert np.all(np.abs(tr.y_osc[:, 0]) <= bound + 1e-15)


def test_step_coupled_and_ensemble_order_independent(rng):
    p = TopParams(c=1.0, a=3.0)
    cc = CoupledConfig([1.0], 1e-2)
    one = step_coupled(CoupledState(_near_pa(), [0.0], [0.0]), p, IntegratorConfig(), cc)
    assert one.x_osc[0] == pytest.approx(0.01, abs=1e-12)
    states = [_near_pa(r=r) for r in (0.01, 0.02, 0.03, 0.04)]
    a = integrate_ensemble(states, p, IntegratorConfig(), 2.0, 10, workers=1)
    b = integrate_ensemble(states, p, IntegratorConfig(), 2.0, 10, workers=3)
    assert all(np.array_equal(x.states, y.states) for x, y in zip(a, b))


@pytest.mark.parametrize("scheme", [kernels.MIDPOINT, kernels.STRANG, kernels.YOSHIDA4])
@pytest.mark.parametrize("n_osc", [0, 2])
def test_backends_agree(scheme, n_osc):
    compiled = kernels.compiled_run()
    if compiled is None:
        pytest.skip("compiled extension not built")
    s = np.concatenate([_near_pa().as_array(), np.linspace(0.1, 0.2, n_osc), np.zeros(n_osc)])
    om, w, ph = np.linspace(1, 2, n_osc), np.linspace(1, 0.5, n_osc), np.linspace(0, 1, n_osc)
    args = (scheme, s, 1.0, om, 1e-2 if n_osc else 0.0, w, ph, 0.01, 500, 50, 1e-13, 25)
    pa, pc = kernels.python_run(*args), compiled(*args)
    np.testing.assert_allclose(pa[0], pc[0], rtol=0, atol=1e-13)
    assert pa[1] == pc[1] == -1


def test_pure_python_switch():
    code = "from lagtop import BACKEND; print(BACKEND)"
    env = dict(os.environ, LAGTOP_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
