"""Reduced Lagrange top on R_a and its coupling to a quasi-periodic oscillator.

The reduced phase space is the 4-manifold

    R_a = {(u, v) in R^3 x R^3 : u.u = 1, u.v = a}

with Hamiltonian H_a = 1/2 v.v + c u_3 + rho a^2.  The equations of motion
used throughout are

    du/dt = u x v,        dv/dt = c u x e_3,

which conserve u.u, u.v and H_a identically and have P_a = (e_3, a e_3) as an
equilibrium.  The coupled system adds n oscillator angle/action pairs
(x, y) with energy <omega_osc, y> and a coupling eps * F(u, x) drawn from a
small catalog.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DegenerateInputError, InvalidStateError

__all__ = [
    "TopParams",
    "ReducedTopState",
    "CoupledConfig",
    "CoupledState",
    "CosineCoupling",
    "COUPLING_CATALOG",
    "register_coupling",
    "make_coupling",
    "DEFAULT_CONSTRAINT_TOL",
    "equilibrium_state",
    "check_state",
    "reduced_hamiltonian",
    "reduced_vector_field",
    "reduced_jacobian",
    "coupled_hamiltonian",
    "coupled_vector_field",
    "project_to_constraints",
    "state_to_json",
    "state_from_json",
    "state_to_csv_row",
    "STATE_CSV_COLUMNS",
]

DEFAULT_CONSTRAINT_TOL = 1e-10
E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class TopParams:
    c: float
    a: float
    rho: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise ConfigError(f"gravity coefficient c must be finite and > 0, got {self.c!r}")
        if not (math.isfinite(self.a) and math.isfinite(self.rho)):
            raise ConfigError("a and rho must be finite")


@dataclass(frozen=True)
class ReducedTopState:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float).reshape(3))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(3))

    @property
    def momentum(self) -> float:
        """Figure-axis momentum u.v of this state."""
        return float(self.u @ self.v)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.u, self.v])

    @classmethod
    def from_array(cls, arr) -> "ReducedTopState":
        arr = np.asarray(arr, dtype=float)
        return cls(arr[:3].copy(), arr[3:6].copy())


def equilibrium_state(a: float) -> ReducedTopState:
    """The vertical rotation P_a = (0, 0, 1, 0, 0, a)."""
    return ReducedTopState(np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, float(a)]))


def check_state(state: ReducedTopState, params: TopParams, tol: float = DEFAULT_CONSTRAINT_TOL) -> None:
    """Raise InvalidStateError unless the state lies on R_a within ``tol``."""
    if not (np.all(np.isfinite(state.u)) and np.all(np.isfinite(state.v))):
        raise InvalidStateError("state has non-finite entries")
    duu = abs(float(state.u @ state.u) - 1.0)
    duv = abs(float(state.u @ state.v) - params.a)
    if duu > tol or duv > tol:
        raise InvalidStateError(
            f"state off R_a: |u.u - 1| = {duu:.3e}, |u.v - a| = {duv:.3e} (tol {tol:.1e})"
        )


def reduced_hamiltonian(state: ReducedTopState, params: TopParams,
                        tol: float = DEFAULT_CONSTRAINT_TOL) -> float:
    check_state(state, params, tol)
    return 0.5 * float(state.v @ state.v) + params.c * float(state.u[2]) + params.rho * params.a ** 2


def _field(u, v, c):
    return np.cross(u, v), c * np.cross(u, E3)


def reduced_vector_field(state: ReducedTopState, params: TopParams,
                         tol: float = DEFAULT_CONSTRAINT_TOL):
    """Tangent (du/dt, dv/dt) of the reduced flow at ``state``."""
    check_state(state, params, tol)
    return _field(state.u, state.v, params.c)


def _skew(w):
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def reduced_jacobian(u, v, c) -> np.ndarray:
    """6x6 Jacobian of (u x v, c u x e3) with respect to (u, v)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    jac = np.zeros((6, 6))
    jac[:3, :3] = -_skew(v)
    jac[:3, 3:] = _skew(u)
    jac[3:, :3] = -c * _skew(E3)
    return jac


def project_to_constraints(u, v, a: float) -> ReducedTopState:
    """Normalize u, then shift v along u so that u.v = a.

    States already on R_a are returned unchanged (to rounding).
    """
    u = np.asarray(u, dtype=float).reshape(3)
    v = np.asarray(v, dtype=float).reshape(3)
    norm = math.sqrt(float(u @ u))
    if norm == 0.0 or not math.isfinite(norm):
        raise DegenerateInputError("cannot project: u = 0")
    if norm != 1.0:
        u = u / norm
    v = v + (a - float(u @ v)) * u
    return ReducedTopState(u, v)


# -- coupling catalog -------------------------------------------------------

@dataclass(frozen=True)
class CosineCoupling:
    """F(u, x) = u_3 * sum_i w_i cos(x_i + phi_i).

    The compiled kernels integrate exactly this family; anything else in the
    catalog runs on the pure-Python path.
    """

    weights: np.ndarray
    phases: np.ndarray
    name: str = "u3_cos_sum"

    def value(self, u, x) -> float:
        return float(u[2] * np.sum(self.weights * np.cos(np.asarray(x) + self.phases)))

    def grad_u(self, u, x) -> np.ndarray:
        g = np.zeros(3)
        g[2] = np.sum(self.weights * np.cos(np.asarray(x) + self.phases))
        return g

    def grad_x(self, u, x) -> np.ndarray:
        return -u[2] * self.weights * np.sin(np.asarray(x) + self.phases)

    def sup_abs(self) -> float:
        """Bound on |F| over the phase space (|u_3| <= 1)."""
        return float(np.sum(np.abs(self.weights)))

    def sup_grad_x(self) -> np.ndarray:
        return np.abs(self.weights)


CouplingFactory = Callable[[int, Mapping], object]


def _u3_cos_sum(n: int, params: Mapping) -> CosineCoupling:
    if params:
        raise ConfigError(f"coupling 'u3_cos_sum' takes no parameters, got {sorted(params)}")
    return CosineCoupling(np.ones(n), np.zeros(n), "u3_cos_sum")


def _u3_weighted_cos(n: int, params: Mapping) -> CosineCoupling:
    unknown = set(params) - {"weights", "phases"}
    if unknown:
        raise ConfigError(f"unknown parameters for 'u3_weighted_cos': {sorted(unknown)}")
    w = np.asarray(params.get("weights", np.ones(n)), dtype=float)
    p = np.asarray(params.get("phases", np.zeros(n)), dtype=float)
    if w.shape != (n,) or p.shape != (n,):
        raise ConfigError(f"weights and phases must have length n={n}")
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(p))):
        raise ConfigError("weights and phases must be finite")
    return CosineCoupling(w, p, "u3_weighted_cos")


COUPLING_CATALOG: Dict[str, CouplingFactory] = {
    "u3_cos_sum": _u3_cos_sum,
    "u3_weighted_cos": _u3_weighted_cos,
}


def register_coupling(name: str, factory: CouplingFactory) -> None:
    """Add a coupling to the catalog.

    ``factory(n, params)`` must return an object with ``value``, ``grad_u``,
    ``grad_x`` and ``sup_abs`` methods.
    """
    COUPLING_CATALOG[name] = factory


def make_coupling(name: str, n: int, params: Mapping | None = None):
    try:
        factory = COUPLING_CATALOG[name]
    except KeyError:
        raise ConfigError(f"unknown coupling {name!r}; known: {sorted(COUPLING_CATALOG)}") from None
    return factory(n, dict(params or {}))


@dataclass(frozen=True)
class CoupledConfig:
    omega_osc: Sequence[float]
    epsilon: float = 0.0
    coupling: str = "u3_cos_sum"
    coupling_params: Mapping = field(default_factory=dict)

    def __post_init__(self):
        omega = np.atleast_1d(np.asarray(self.omega_osc, dtype=float))
        object.__setattr__(self, "omega_osc", omega)
        if omega.ndim != 1 or omega.size < 1:
            raise ConfigError("need at least one oscillator frequency")
        if not np.all(np.isfinite(omega)):
            raise ConfigError("oscillator frequencies must be finite")
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ConfigError(f"epsilon must be finite and >= 0, got {self.epsilon!r}")
        # fail early on unknown coupling identifiers
        object.__setattr__(self, "_coupling", make_coupling(self.coupling, omega.size, self.coupling_params))

    @property
    def n(self) -> int:
        return int(self.omega_osc.size)

    @property
    def coupling_fn(self):
        return self._coupling


@dataclass(frozen=True)
class CoupledState:
    top: ReducedTopState
    x_osc: np.ndarray
    y_osc: np.ndarray

    def __post_init__(self):
        x = np.mod(np.atleast_1d(np.asarray(self.x_osc, dtype=float)), 2 * np.pi)
        object.__setattr__(self, "x_osc", x)
        object.__setattr__(self, "y_osc", np.atleast_1d(np.asarray(self.y_osc, dtype=float)))
        if self.x_osc.shape != self.y_osc.shape:
            raise ConfigError("x_osc and y_osc must have equal length")

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.top.as_array(), self.x_osc, self.y_osc])

    @classmethod
    def from_array(cls, arr, n: int) -> "CoupledState":
        arr = np.asarray(arr, dtype=float)
        return cls(ReducedTopState.from_array(arr[:6]), arr[6:6 + n].copy(), arr[6 + n:6 + 2 * n].copy())


def _check_coupled(state: CoupledState, config: CoupledConfig) -> None:
    if state.x_osc.size != config.n:
        raise ConfigError(f"state has {state.x_osc.size} oscillators, config has {config.n}")


def coupled_hamiltonian(state: CoupledState, params: TopParams, config: CoupledConfig,
                        tol: float = DEFAULT_CONSTRAINT_TOL) -> float:
    """H_a(top) + <omega_osc, y> + eps * F(u, x)."""
    _check_coupled(state, config)
    energy = reduced_hamiltonian(state.top, params, tol) + float(config.omega_osc @ state.y_osc)
    if config.epsilon != 0.0:
        energy += config.epsilon * config.coupling_fn.value(state.top.u, state.x_osc)
    return energy


def coupled_vector_field(state: CoupledState, params: TopParams, config: CoupledConfig,
                         tol: float = DEFAULT_CONSTRAINT_TOL):
    """Returns (du, dv, dx, dy) for the coupled system.

    The top part follows the heavy-top bracket du = u x dH/dv,
    dv = v x dH/dv + u x dH/du; the oscillator pairs are canonical.
    """
    _check_coupled(state, config)
    check_state(state.top, params, tol)
    u, v = state.top.u, state.top.v
    du, dv = _field(u, v, params.c)
    dx = config.omega_osc.copy()
    dy = np.zeros(config.n)
    if config.epsilon != 0.0:
        eps = config.epsilon
        dv = dv + eps * np.cross(u, config.coupling_fn.grad_u(u, state.x_osc))
        dy = -eps * config.coupling_fn.grad_x(u, state.x_osc)
    return du, dv, dx, dy


# -- serialization ------------------------------------------------------------

STATE_CSV_COLUMNS = ("u1", "u2", "u3", "v1", "v2", "v3")


def state_to_json(state: ReducedTopState) -> dict:
    return {"u": [float(x) for x in state.u], "v": [float(x) for x in state.v], "a": state.momentum}


def state_from_json(obj: Mapping, tol: float = DEFAULT_CONSTRAINT_TOL) -> ReducedTopState:
    try:
        state = ReducedTopState(obj["u"], obj["v"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed state object: {exc}") from exc
    if "a" in obj and abs(state.momentum - float(obj["a"])) > tol:
        raise InvalidStateError("stored momentum a disagrees with u.v")
    return state


def state_to_csv_row(state: ReducedTopState) -> list:
    return [*map(float, state.u), *map(float, state.v)]
