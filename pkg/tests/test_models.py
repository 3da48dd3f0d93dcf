import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lagtop.errors import ConfigError, DegenerateInputError, InvalidStateError
from lagtop.models import (CoupledConfig, CoupledState, ReducedTopState, TopParams, coupled_hamiltonian,
                           coupled_vector_field, equilibrium_state, make_coupling, project_to_constraints,
                           reduced_hamiltonian, reduced_vector_field, state_from_json, state_to_json)

from conftest import random_state


def test_hamiltonian_hand_values():
    s = ReducedTopState([0, 0, 1], [0, 0, 2])
    assert reduced_hamiltonian(s, TopParams(c=1.0, a=2.0)) == 3.0
    s = ReducedTopState([0, 0, 1], [0, 0, 0])
    assert reduced_hamiltonian(s, TopParams(c=0.7, a=0.0)) == 0.7
    s = ReducedTopState([1, 0, 0], [0.5, 0, 0])
    assert reduced_hamiltonian(s, TopParams(c=1.0, a=0.5, rho=2.0)) == pytest.approx(0.625, abs=1e-15)


def test_off_manifold_state_rejected():
    with pytest.raises(InvalidStateError):
        reduced_hamiltonian(ReducedTopState([0, 0, 1.1], [0, 0, 1]), TopParams(c=1.0, a=1.1))
    with pytest.raises(InvalidStateError):
        reduced_hamiltonian(ReducedTopState([0, 0, 1], [0, 0, 1]), TopParams(c=1.0, a=2.0))


def test_bad_params():
    with pytest.raises(ConfigError):
        TopParams(c=0.0, a=1.0)
    with pytest.raises(ConfigError):
        TopParams(c=1.0, a=math.nan)


def test_vector_field_examples():
    du, dv = reduced_vector_field(ReducedTopState([1, 0, 0], [2.5, 0, 0]), TopParams(c=1.0, a=2.5))
    np.testing.assert_array_equal(du, 0.0)
    np.testing.assert_allclose(dv, [0.0, -1.0, 0.0], atol=0)


@given(st.floats(-10, 10), st.floats(0.01, 10))
def test_equilibrium_is_exact(a, c):
    du, dv = reduced_vector_field(equilibrium_state(a), TopParams(c=c, a=a))
    assert not np.any(du) and not np.any(dv)


def test_conservation_oracle(rng):
    worst = 0.0
    for _ in range(10_000):
        s, a = random_state(rng)
        c = rng.uniform(0.1, 5)
        du, dv = reduced_vector_field(s, TopParams(c=c, a=a), tol=1e-9)
        u, v = s.u, s.v
        worst = max(worst, abs(2 * u @ du), abs(du @ v + u @ dv), abs(v @ dv + c * du[2]))
    assert worst < 1e-13


@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6), st.floats(-3, 3))
def test_projection_idempotent(vals, a):
    u = np.array(vals[:3])
    if np.linalg.norm(u) < 1e-3:
        u = u + np.array([0.0, 0.0, 1.0])
    p = project_to_constraints(u, vals[3:], a)
    assert abs(p.u @ p.u - 1) < 1e-14 and abs(p.u @ p.v - a) < 1e-13 * max(1, abs(a), np.linalg.norm(p.v))
    q = project_to_constraints(p.u, p.v, a)
    np.testing.assert_allclose(q.as_array(), p.as_array(), rtol=0, atol=1e-13 * max(1, np.abs(p.v).max()))


def test_projection_examples():
    p = project_to_constraints([0, 0, 2], [0, 0, 2], 1.0)
    np.testing.assert_array_equal(p.u, [0, 0, 1])
    assert p.u @ p.v == 1.0
    p = project_to_constraints([0, 0, 1 + 1e-12], [0, 0, 3.0], 3.0)
    assert abs(p.u @ p.u - 1) < 1e-15 and abs(p.u @ p.v - 3) < 1e-15
    with pytest.raises(DegenerateInputError):
        project_to_constraints([0, 0, 0], [1, 0, 0], 0.0)


def _coupled(eps, n=1, **kw):
    return CoupledConfig(np.linspace(1.0, 2.0, n), eps, **kw)


def test_coupled_decoupled_limit(rng):
    s, a = random_state(rng)
    p = TopParams(c=1.3, a=a)
    st_ = CoupledState(s, [0.4, 1.0], [0.2, -0.7])
    cfg = _coupled(0.0, 2)
    assert coupled_hamiltonian(st_, p, cfg) == reduced_hamiltonian(s, p) + float(cfg.omega_osc @ st_.y_osc)
    du, dv, dx, dy = coupled_vector_field(st_, p, cfg)
    du0, dv0 = reduced_vector_field(s, p)
    assert np.array_equal(du, du0) and np.array_equal(dv, dv0)
    assert not np.any(dy) and np.array_equal(dx, cfg.omega_osc)


def test_coupling_hand_values():
    s = equilibrium_state(1.0)
    p = TopParams(c=1.0, a=1.0)
    h0 = coupled_hamiltonian(CoupledState(s, [0.0], [0.0]), p, _coupled(0.0))
    h1 = coupled_hamiltonian(CoupledState(s, [0.0], [0.0]), p, _coupled(0.1))
    assert h1 - h0 == pytest.approx(0.1, abs=1e-15)
    _, _, _, dy = coupled_vector_field(CoupledState(s, [math.pi / 2], [0.0]), p, _coupled(0.1))
    assert dy[0] == pytest.approx(0.1, abs=1e-15)


def test_coupling_bound_and_gradient(rng):
    cfg = _coupled(1e-3, 3, coupling="u3_weighted_cos",
                   coupling_params={"weights": [1.0, -0.5, 0.25], "phases": [0.1, 0.2, 0.3]})
    f = cfg.coupling_fn
    for _ in range(200):
        s, a = random_state(rng)
        p = TopParams(c=1.0, a=a)
        x = rng.uniform(0, 2 * np.pi, 3)
        st_ = CoupledState(s, x, rng.normal(size=3))
        h_eps = coupled_hamiltonian(st_, p, cfg)
        h0 = coupled_hamiltonian(st_, p, _coupled(0.0, 3))
        assert abs(h_eps - h0) <= 1e-3 * f.sup_abs() + 1e-15
        _, _, _, dy = coupled_vector_field(st_, p, cfg)
        h = 1e-6
        num = [(f.value(s.u, x + h * e) - f.value(s.u, x - h * e)) / (2 * h) for e in np.eye(3)]
        np.testing.assert_allclose(dy, -1e-3 * np.array(num), atol=1e-12)


def test_coupling_config_errors():
    with pytest.raises(ConfigError):
        CoupledConfig([1.0], 0.1, "no_such_coupling")
    with pytest.raises(ConfigError):
        CoupledConfig([1.0], -0.1)
    with pytest.raises(ConfigError):
        make_coupling("u3_cos_sum", 1, {"weights": [1]})
    with pytest.raises(ConfigError):
        make_coupling("u3_weighted_cos", 2, {"weights": [1.0]})


def test_state_json_round_trip():
    s = project_to_constraints([0.1, 0.2, 0.9], [0.3, -0.1, 2.0], 1.5)
    back = state_from_json(state_to_json(s))
    assert np.array_equal(back.as_array(), s.as_array())
    with pytest.raises(ConfigError):
        state_from_json({"u": [1, 2]})
