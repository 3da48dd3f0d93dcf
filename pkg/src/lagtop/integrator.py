"""Structure-preserving integration of the reduced top and the coupled system.

Three fixed-step schemes are available:

``implicit-midpoint``
    Symmetric, preserves every quadratic first integral.  Since u.u, u.v and
    H_a are all quadratic (or linear) in (u, v), the bare top conserves them
    up to the Newton tolerance and rounding.
``splitting-2nd``
    Strang splitting into the kinetic flow (v frozen, u rotates about v) and
    the potential flow (u frozen, v shifts linearly).  Both are exact and
    constraint preserving.
``splitting-4th``
    Triple-jump composition of the Strang step.

The inner loops live in :mod:`lagtop.kernels` (compiled, with a pure-Python
fallback).  Couplings outside the cosine family run on a numpy path here.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import ConfigError, StepFailure
from .models import (CoupledConfig, CoupledState, CosineCoupling, ReducedTopState,
                     TopParams, check_state, DEFAULT_CONSTRAINT_TOL)

__all__ = ["SCHEMES", "IntegratorConfig", "Trajectory", "step", "step_coupled",
           "integrate", "integrate_coupled", "integrate_ensemble"]

SCHEMES = {"implicit-midpoint": kernels.MIDPOINT,
           "splitting-2nd": kernels.STRANG,
           "splitting-4th": kernels.YOSHIDA4}


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "implicit-midpoint"
    dt: float = 0.01
    newton_tol: float = 1e-13
    newton_max_iter: int = 25

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {sorted(SCHEMES)}")
        if not (math.isfinite(self.dt) and self.dt != 0.0):
            raise ConfigError("dt must be finite and non-zero")
        if not self.newton_tol > 0:
            raise ConfigError("newton_tol must be > 0")
        if int(self.newton_max_iter) < 1:
            raise ConfigError("newton_max_iter must be >= 1")


@dataclass
class Trajectory:
    """Sampled trajectory.

    ``states`` has one row per sample in the layout [u, v] or
    [u, v, x_osc, y_osc]; oscillator angles are reduced to [0, 2pi).
    ``drift`` columns are (dH, u.u - 1, u.v - a).
    """

    times: np.ndarray
    states: np.ndarray
    drift: np.ndarray
    n_osc: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def u(self):
        return self.states[:, 0:3]

    @property
    def v(self):
        return self.states[:, 3:6]

    @property
    def x_osc(self):
        return self.states[:, 6:6 + self.n_osc]

    @property
    def y_osc(self):
        return self.states[:, 6 + self.n_osc:6 + 2 * self.n_osc]

    def columns(self):
        cols = ["t", "u1", "u2", "u3", "v1", "v2", "v3"]
        cols += [f"x{i + 1}" for i in range(self.n_osc)]
        cols += [f"y{i + 1}" for i in range(self.n_osc)]
        return cols + ["dH", "d_uu", "d_uv"]

    def table(self) -> np.ndarray:
        return np.column_stack([self.times, self.states, self.drift])

    def max_drift(self) -> dict:
        return {"dH": float(np.max(np.abs(self.drift[:, 0]))) if len(self) else 0.0,
                "d_uu": float(np.max(np.abs(self.drift[:, 1]))) if len(self) else 0.0,
                "d_uv": float(np.max(np.abs(self.drift[:, 2]))) if len(self) else 0.0}


def _nsteps(t_end: float, dt: float) -> int:
    if dt <= 0:
        raise ConfigError("integration needs dt > 0 (negative steps are for single-step reversal)")
    if not (math.isfinite(t_end) and t_end >= 0):
        raise ConfigError(f"t_end must be finite and >= 0, got {t_end!r}")
    return int(math.ceil(t_end / dt - 1e-9)) if t_end > 0 else 0


def _energy(states, params: TopParams, coupled: Optional[CoupledConfig]):
    u, v = states[:, :3], states[:, 3:6]
    h = 0.5 * np.einsum("ij,ij->i", v, v) + params.c * u[:, 2] + params.rho * params.a ** 2
    if coupled is not None:
        n = coupled.n
        x, y = states[:, 6:6 + n], states[:, 6 + n:6 + 2 * n]
        h = h + y @ coupled.omega_osc
        if coupled.epsilon != 0.0:
            h = h + coupled.epsilon * np.array([coupled.coupling_fn.value(uu, xx) for uu, xx in zip(u, x)])
    return h


def _drift(states, params, coupled):
    h = _energy(states, params, coupled)
    u, v = states[:, :3], states[:, 3:6]
    return np.column_stack([h - h[0],
                            np.einsum("ij,ij->i", u, u) - 1.0,
                            np.einsum("ij,ij->i", u, v) - params.a])


# -- numpy path for couplings the kernels do not know -------------------------

def _generic_field(s, c, eps, n, omega, coupling):
    u, v, x = s[:3], s[3:6], s[6:6 + n]
    gu = np.array([0.0, 0.0, c]) + eps * coupling.grad_u(u, x)
    return np.concatenate([np.cross(u, v), np.cross(u, gu), omega, -eps * coupling.grad_x(u, x)])


def _generic_midpoint(s, c, eps, n, omega, coupling, dt, tol, maxit):
    X = s + dt * _generic_field(s, c, eps, n, omega, coupling)
    dim = s.size
    for it in range(maxit):
        g = X - s - dt * _generic_field(0.5 * (s + X), c, eps, n, omega, coupling)
        jac = np.empty((dim, dim))
        h = 1e-7
        for j in range(dim):
            e = np.zeros(dim)
            e[j] = h
            fp = _generic_field(0.5 * (s + X + e), c, eps, n, omega, coupling)
            fm = _generic_field(0.5 * (s + X - e), c, eps, n, omega, coupling)
            jac[:, j] = -dt * (fp - fm) / (2 * h)
        jac += np.eye(dim)
        d = np.linalg.solve(jac, g)
        X = X - d
        if np.max(np.abs(d)) <= tol * max(1.0, np.max(np.abs(X))):
            return X, it + 1
    raise StepFailure("Newton iteration did not converge", residual=float(np.max(np.abs(d))))


def _generic_strang(s, c, eps, n, omega, coupling, dt):
    def potential(s, t):
        u, x = s[:3], s[6:6 + n]
        gu = np.array([0.0, 0.0, c]) + eps * coupling.grad_u(u, x)
        s = s.copy()
        s[3:6] += t * np.cross(u, gu)
        s[6 + n:] += -t * eps * coupling.grad_x(u, x)
        return s

    s = potential(s, 0.5 * dt)
    s = s.copy()
    u, v = s[:3], s[3:6]
    nv = np.linalg.norm(v)
    if nv > 0:
        k = v / nv
        th = -nv * dt
        s[:3] = u * math.cos(th) + np.cross(k, u) * math.sin(th) + k * (k @ u) * (1 - math.cos(th))
    s[6:6 + n] += omega * dt
    return potential(s, 0.5 * dt)


def _generic_run(scheme, state, c, omega, eps, coupling, dt, nsteps, sample_every, tol, maxit):
    s = np.array(state, dtype=float)
    n = omega.size
    rows = [s.copy()]
    cr = 2.0 ** (1.0 / 3.0)
    w1, w0 = 1.0 / (2.0 - cr), -cr / (2.0 - cr)
    for k in range(1, nsteps + 1):
        if scheme == kernels.MIDPOINT:
            try:
                s, _ = _generic_midpoint(s, c, eps, n, omega, coupling, dt, tol, maxit)
            except StepFailure as exc:
                return np.array(rows), k, exc.residual, 0
        elif scheme == kernels.STRANG:
            s = _generic_strang(s, c, eps, n, omega, coupling, dt)
        else:
            for w in (w1, w0, w1):
                s = _generic_strang(s, c, eps, n, omega, coupling, w * dt)
        if k % sample_every == 0 or k == nsteps:
            rows.append(s.copy())
    return np.array(rows), -1, 0.0, 0


def _run(state_arr, params, config: IntegratorConfig, coupled: Optional[CoupledConfig],
         nsteps, sample_every):
    scheme = SCHEMES[config.scheme]
    if coupled is None:
        omega = weights = phases = np.zeros(0)
        eps = 0.0
        out = kernels.run(scheme, state_arr, params.c, omega, eps, weights, phases, config.dt,
                          nsteps, sample_every, config.newton_tol, config.newton_max_iter)
    elif isinstance(coupled.coupling_fn, CosineCoupling):
        cf = coupled.coupling_fn
        out = kernels.run(scheme, state_arr, params.c, coupled.omega_osc, coupled.epsilon,
                          cf.weights, cf.phases, config.dt, nsteps, sample_every,
                          config.newton_tol, config.newton_max_iter)
    else:
        out = _generic_run(scheme, state_arr, params.c, coupled.omega_osc, coupled.epsilon,
                           coupled.coupling_fn, config.dt, nsteps, sample_every,
                           config.newton_tol, config.newton_max_iter)
    samples, fail, resid, iters = out
    if fail >= 0:
        raise StepFailure(
            f"implicit-midpoint Newton failed at step {fail} (dt={config.dt}, "
            f"last correction {resid:.3e}, tol {config.newton_tol:.1e}, "
            f"max_iter {config.newton_max_iter})",
            step_index=int(fail), residual=float(resid))
    return samples, iters


def step(state: ReducedTopState, params: TopParams, config: IntegratorConfig,
         tol: float = DEFAULT_CONSTRAINT_TOL) -> ReducedTopState:
    """Advance the reduced top by one step of ``config.scheme``."""
    check_state(state, params, tol)
    samples, _ = _run(state.as_array(), params, config, None, 1, 1)
    return ReducedTopState.from_array(samples[-1])


def step_coupled(state: CoupledState, params: TopParams, config: IntegratorConfig,
                 coupled: CoupledConfig) -> CoupledState:
    samples, _ = _run(state.as_array(), params, config, coupled, 1, 1)
    return CoupledState.from_array(samples[-1], coupled.n)


def _sample_times(nsteps, sample_every, dt):
    ks = list(range(0, nsteps + 1, sample_every))
    if ks[-1] != nsteps:
        ks.append(nsteps)
    return np.asarray(ks, dtype=float) * dt


def integrate(state: ReducedTopState, params: TopParams, config: IntegratorConfig,
              t_end: float, sample_every: int = 1,
              tol: float = DEFAULT_CONSTRAINT_TOL) -> Trajectory:
    """Integrate the reduced top for ceil(t_end/dt) steps."""
    check_state(state, params, tol)
    if int(sample_every) < 1:
        raise ConfigError("sample_every must be >= 1")
    nsteps = _nsteps(t_end, config.dt)
    samples, iters = _run(state.as_array(), params, config, None, nsteps, int(sample_every))
    times = _sample_times(nsteps, int(sample_every), config.dt)
    return Trajectory(times, samples, _drift(samples, params, None), 0,
                      {"nsteps": nsteps, "newton_iterations": int(iters), "backend": kernels.BACKEND})


def integrate_coupled(state: CoupledState, params: TopParams, config: IntegratorConfig,
                      coupled: CoupledConfig, t_end: float, sample_every: int = 1,
                      tol: float = DEFAULT_CONSTRAINT_TOL) -> Trajectory:
    """Integrate the top coupled to the oscillator, H_eps = H_a + <omega, y> + eps F."""
    check_state(state.top, params, tol)
    if state.x_osc.size != coupled.n:
        raise ConfigError(f"state has {state.x_osc.size} oscillators, config has {coupled.n}")
    if int(sample_every) < 1:
        raise ConfigError("sample_every must be >= 1")
    nsteps = _nsteps(t_end, config.dt)
    samples, iters = _run(state.as_array(), params, config, coupled, nsteps, int(sample_every))
    drift = _drift(samples, params, coupled)
    n = coupled.n
    samples = samples.copy()
    samples[:, 6:6 + n] = np.mod(samples[:, 6:6 + n], 2 * np.pi)
    times = _sample_times(nsteps, int(sample_every), config.dt)
    return Trajectory(times, samples, drift, n,
                      {"nsteps": nsteps, "newton_iterations": int(iters), "backend": kernels.BACKEND})


def integrate_ensemble(states: Sequence, params: TopParams, config: IntegratorConfig,
                       t_end: float, sample_every: int = 1, coupled: Optional[CoupledConfig] = None,
                       workers: int = 1):
    """Integrate many initial states; results come back in input order.

    The compiled kernel releases the GIL, so threads give real parallelism
    there.  Each trajectory is computed independently, so the output does
    not depend on ``workers``.
    """
    if coupled is None:
        job = lambda s: integrate(s, params, config, t_end, sample_every)
    else:
        job = lambda s: integrate_coupled(s, params, config, coupled, t_end, sample_every)
    if workers <= 1:
        return [job(s) for s in states]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, states))
