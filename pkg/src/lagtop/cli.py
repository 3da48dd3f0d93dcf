"""Command-line frontend: ``lagtop <command> [--config PATH] [--out DIR] [--workers N] [--seed N]``.

Each command reads one JSON document, validates it against a schema, fills
in defaults and writes CSV/JSON files whose first lines record the version,
the sha256 of the effective configuration, the seed and the configuration
itself.  Output directory precedence: --out, then LAGTOP_OUT, then the
config's "out" field, then the working directory.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from typing import Callable

import numpy as np
import jsonschema

from . import __version__
from .errors import (BracketError, ContinuationError, EstimationError, LagtopError,
                     NumericError, SmallDivisorError, StepFailure)
from .io import Provenance, read_csv, write_csv, write_json

__all__ = ["main", "COMMANDS", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERIC", "effective_config"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# errors that mean the computation itself broke down, not the input
_NUMERIC = (StepFailure, NumericError, SmallDivisorError, ContinuationError, BracketError,
            EstimationError, FloatingPointError, np.linalg.LinAlgError)


# -- schema building blocks ---------------------------------------------------------------

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_INT1 = {"type": "integer", "minimum": 1}
_NUMS = {"type": "array", "items": _NUM, "minItems": 1}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


_GRID = _obj({"start": _NUM, "stop": _NUM, "num": _INT1})
_TOP = _obj({"c": _POS, "a": _NUM, "rho": _NUM})
_COEFFS = _obj({"lambda0": _POS, "mu1": _NUM, "mu2": _NUM, "b": _NUM, "c1": _NUM, "c2": _NUM})
_COMMON = {"seed": {"type": "integer", "minimum": 0}, "out": {"type": "string"}, "workers": _INT1}


def _schema(props: dict, required=()) -> dict:
    return _obj({**_COMMON, **props}, required)


def _grid(g: dict) -> np.ndarray:
    return np.linspace(float(g["start"]), float(g["stop"]), int(g["num"]))


SCHEMAS = {
    "simulate": _schema({
        "top": _obj({"c": _POS, "a": _NUM, "rho": _NUM}, required=("c", "a")),
        "integrator": _obj({"scheme": {"enum": ["implicit-midpoint", "splitting-2nd", "splitting-4th"]},
                            "dt": _POS, "newton_tol": _POS, "newton_max_iter": _INT1}),
        "initial": _obj({"displacement": _NONNEG, "angle": _NUM, "random_angle": {"type": "boolean"}}),
        "t_end": _NONNEG,
        "sample_every": _INT1,
        "oscillators": _obj({"omega_osc": {"type": "array", "items": _NUM},
                             "epsilon": _NUM, "coupling": {"type": "string"},
                             "coupling_params": {"type": "object"}}),
    }, required=("top",)),
    "scan-spectrum": _schema({"a_grid": _GRID, "c_values": _NUMS, "tol": _POS}),
    "normal-form": _schema({
        "truth": _COEFFS,
        "generator": _obj({"degree": {"enum": [3]}, "scale": _NONNEG}),
        "max_degree": {"type": "integer", "minimum": 4, "maximum": 8},
        "tolerance": _POS,
    }),
    "strata": _schema({
        "coeffs": _COEFFS, "mu2_values": _NUMS, "M_grid": _GRID,
        "top": _obj({"c": _POS, "u3_values": {"type": "array", "items": {"type": "number", "minimum": -1,
                                                                         "maximum": 1}, "minItems": 1},
                     "Omega_grid": _GRID, "rho": _NUM, "a_grid": _GRID}),
    }),
    "dioph-scan": _schema({
        "model": {"enum": ["unfolding", "top"]},
        "lambda0": _POS,
        "omega_osc": _NUMS,
        "box": {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                "minItems": 2, "maxItems": 2},
        "resolution": {"type": "array", "items": _INT1, "minItems": 2, "maxItems": 2},
        "tau": _POS, "gamma": _POS, "K": _INT1,
    }),
    "naff": _schema({
        "signal": {"oneOf": [
            _obj({"kind": {"const": "synthetic"}, "frequencies": _NUMS, "amplitudes": _NUMS,
                  "phases": _NUMS, "n": {"type": "integer", "minimum": 16}, "dt": _POS,
                  "noise": _NONNEG}, required=("kind",)),
            _obj({"kind": {"const": "csv"}, "path": {"type": "string"}, "re": {"type": "string"},
                  "im": {"type": "string"}, "time": {"type": "string"}}, required=("kind", "path", "re")),
        ]},
        "max_terms": _INT1, "refine_tol": _POS, "residual_tol": _POS, "K_rel": _INT1, "relation_tol": _POS,
    }),
    "persistence": _schema({
        "top": _TOP, "omega_osc": _NUMS, "coupling": {"type": "string"},
        "coupling_params": {"type": "object"},
        "dt": _POS, "sample_every": _INT1, "window_time": _POS,
        "windows": {"type": "integer", "minimum": 2},
        "r_grid": _GRID, "theta": _NUMS, "random_theta": {"type": "boolean"},
        "epsilons": _NUMS, "max_terms": _INT1, "amp_tol": _POS, "relation_tol": _POS, "track_tol": _POS,
        "select": {"oneOf": [{"type": "null"}, _obj({"tau": _POS, "gamma": _POS, "K": _INT1})]},
    }),
    "monodromy": _schema({
        "coeffs": _COEFFS,
        "loop": _obj({"center": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                      "radius": _POS, "steps": {"type": "integer", "minimum": 8}, "turns": _INT1,
                      "clockwise": {"type": "boolean"}, "margin": _POS}),
    }),
}

_FOCUS = {"lambda0": 1.0, "mu1": 0.0, "mu2": -0.5, "b": 1.0, "c1": 0.1, "c2": 0.05}

DEFAULTS = {
    "simulate": {
        "top": {"rho": 0.0},
        "integrator": {"scheme": "implicit-midpoint", "dt": 0.01, "newton_tol": 1e-13, "newton_max_iter": 25},
        "initial": {"displacement": 0.0, "angle": 0.0, "random_angle": False},
        "t_end": 10.0, "sample_every": 10,
        "oscillators": {"omega_osc": [], "epsilon": 0.0, "coupling": "u3_cos_sum", "coupling_params": {}},
    },
    "scan-spectrum": {"a_grid": {"start": 1.5, "stop": 2.5, "num": 101}, "c_values": [1.0], "tol": 1e-9},
    "normal-form": {
        "truth": {"lambda0": 1.0, "mu1": 0.05, "mu2": 0.2, "b": 0.7, "c1": -0.3, "c2": 0.25},
        "generator": {"degree": 3, "scale": 0.2}, "max_degree": 6, "tolerance": 1e-6,
    },
    "strata": {
        "coeffs": dict(_FOCUS), "mu2_values": [-0.5, 0.0, 0.5],
        "M_grid": {"start": 0.0, "stop": 1.0, "num": 101},
        "top": {"c": 1.0, "u3_values": [1.0, 0.9, 0.5, -0.5], "Omega_grid": {"start": 0.25, "stop": 3.0, "num": 12},
                "rho": 0.0, "a_grid": {"start": 0.0, "stop": 4.0, "num": 41}},
    },
    "dioph-scan": {
        "model": "unfolding", "lambda0": math.sqrt(2.0), "omega_osc": [math.sqrt(2.0) - 1.0],
        # the pi/1000 shift keeps omega2 off rational grid values
        "box": [[0.2 + math.pi / 1000.0, 0.8 + math.pi / 1000.0], [-0.5, 0.5]], "resolution": [41, 40],
        "tau": 2.0, "gamma": 1e-2, "K": 100,
    },
    "naff": {
        "signal": {"kind": "synthetic", "frequencies": [1.0, math.sqrt(2.0), math.pi / 4.0],
                   "amplitudes": [1.0, 0.5, 0.25], "phases": [0.0, 0.3, -1.1], "n": 4096, "dt": 0.1,
                   "noise": 0.0},
        "max_terms": 8, "refine_tol": 1e-12, "residual_tol": 1e-10, "K_rel": 10, "relation_tol": 1e-9,
    },
    "persistence": {
        "top": {"c": 1.0, "a": 3.0, "rho": 0.0}, "omega_osc": [2.255], "coupling": "u3_cos_sum",
        "coupling_params": {}, "dt": 0.01, "sample_every": 20, "window_time": 1500.0, "windows": 2,
        "r_grid": {"start": 0.01, "stop": 0.12, "num": 12}, "theta": [0.0], "random_theta": False,
        "epsilons": [0.0, 1e-4, 1e-3, 1e-2], "max_terms": 4, "amp_tol": 1e-3, "relation_tol": 1e-7,
        "track_tol": 1e-2, "select": None,
    },
    "monodromy": {
        "coeffs": dict(_FOCUS),
        "loop": {"center": [0.0, 0.0], "radius": 0.01, "steps": 16, "turns": 1, "clockwise": False,
                 "margin": 1e-4},
    },
}

COMMANDS = tuple(SCHEMAS)


class ConfigProblem(Exception):
    """Invalid configuration; carries the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path or '<root>'}: {message}")
        self.path = path


def _error_path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = [p for p in err.validator_value if p not in (err.instance or {})]
        if missing:
            parts.append(str(missing[0]))
    elif err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        if extra:
            parts.append(str(extra[0]))
    return ".".join(parts)


def validate(command: str, config) -> None:
    validator = jsonschema.Draft7Validator(SCHEMAS[command])
    errors = sorted(validator.iter_errors(config), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        err = errors[0]
        raise ConfigProblem(_error_path(err), err.message)


# blocks taken whole from the user when present (their shape depends on a "kind")
_ATOMIC = {"signal", "coupling_params"}


def _merge(defaults: dict, user: dict, prefix: str, applied: list) -> dict:
    out = copy.deepcopy(user)
    for key, val in defaults.items():
        path = f"{prefix}{key}"
        if key not in user:
            out[key] = copy.deepcopy(val)
            applied.append(path)
        elif isinstance(val, dict) and val and isinstance(user[key], dict) and key not in _ATOMIC:
            out[key] = _merge(val, user[key], path + ".", applied)
    return out


def effective_config(command: str, user: dict, seed: int | None = None):
    """Validate ``user`` and fill in defaults; returns (config, seed, defaults_applied)."""
    validate(command, user)
    applied: list = []
    cfg = _merge(DEFAULTS[command], user, "", applied)
    if seed is not None:
        cfg["seed"] = int(seed)
    elif "seed" not in cfg:
        cfg["seed"] = 0
        applied.append("seed")
    cfg.pop("out", None)
    cfg.pop("workers", None)
    return cfg, int(cfg["seed"]), tuple(sorted(applied))


def _coeffs(d: dict):
    from .normalform import NormalFormCoefficients
    return NormalFormCoefficients(d["lambda0"], d["mu1"], d["mu2"], d["b"], d["c1"], d["c2"])


# -- commands ------------------------------------------------------------------------------

def cmd_simulate(cfg, seed, workers, out, prov):
    from .freqmap import initial_torus
    from .integrator import IntegratorConfig, integrate, integrate_coupled
    from .models import CoupledConfig, TopParams, reduced_hamiltonian

    params = TopParams(**cfg["top"])
    icfg = IntegratorConfig(**cfg["integrator"])
    ini = cfg["initial"]
    theta = float(ini["angle"])
    if ini["random_angle"]:
        theta = float(np.random.default_rng(seed).uniform(0.0, 2.0 * math.pi))
    osc = cfg["oscillators"]
    n = len(osc["omega_osc"])
    state = initial_torus(params, float(ini["displacement"]), theta, n)
    if n:
        cc = CoupledConfig(np.asarray(osc["omega_osc"], dtype=float), float(osc["epsilon"]), osc["coupling"],
                           dict(osc["coupling_params"]))
        traj = integrate_coupled(state, params, icfg, cc, cfg["t_end"], cfg["sample_every"])
    else:
        traj = integrate(state.top, params, icfg, cfg["t_end"], cfg["sample_every"])
    h0 = reduced_hamiltonian(state.top, params)
    drift = traj.max_drift()
    summary = {"max_drift": drift, "relative_energy_drift": drift["dH"] / abs(h0) if h0 else drift["dH"],
               "initial_energy": h0, "initial_angle": theta, "samples": len(traj),
               "nsteps": traj.meta["nsteps"], "newton_iterations": traj.meta["newton_iterations"],
               "final_state": traj.states[-1].tolist()}
    return [write_csv(os.path.join(out, "trajectory.csv"), traj.columns(), traj.table(), prov),
            write_json(os.path.join(out, "drift.json"), summary, prov)]


def cmd_scan_spectrum(cfg, seed, workers, out, prov):
    from .linstab import SPECTRUM_CSV_COLUMNS, spectrum_scan

    a_values = _grid(cfg["a_grid"])
    rows = spectrum_scan(a_values, cfg["c_values"], cfg["tol"])
    summary = []
    for c in cfg["c_values"]:
        sel = [r for r in rows if r[1] == float(c)]
        unstable = [r[0] for r in sel if r[3] == "HyperbolicQuartet"]
        stable = [r[0] for r in sel if r[3] == "EllipticPairs"]
        changes = sum(1 for p, q in zip(sel, sel[1:]) if p[3] != q[3])
        summary.append({"c": float(c), "a0": sel[0][4],
                        "last_unstable_a": max(unstable) if unstable else None,
                        "first_stable_a": min(stable) if stable else None,
                        "class_changes": changes})
    return [write_csv(os.path.join(out, "spectrum.csv"), SPECTRUM_CSV_COLUMNS, rows, prov),
            write_json(os.path.join(out, "spectrum_summary.json"), {"per_c": summary}, prov)]


def random_generator(rng: np.random.Generator, scale: float, max_degree: int):
    """Degree-3 polynomial with independent normal coefficients times ``scale``."""
    from .normalform import PolyHamiltonian, monomials
    mons = monomials(3)
    return PolyHamiltonian.from_vector(3, scale * rng.standard_normal(len(mons)), max_degree)


def normal_form_round_trip(truth, scale: float, seed: int, max_degree: int = 6):
    """Push G_int through a random generator's time-1 map, renormalize; returns (found, W)."""
    from .linstab import UnfoldingParams
    from .normalform import birkhoff_normalize, gint_polynomial, lie_transform

    w = random_generator(np.random.default_rng(seed), scale, max_degree)
    h = lie_transform(gint_polynomial(truth, max_degree), w, max_degree)
    found, _ = birkhoff_normalize(h, UnfoldingParams(truth.lambda0, truth.mu1, truth.mu2))
    return found, w


def cmd_normal_form(cfg, seed, workers, out, prov):
    truth = _coeffs(cfg["truth"])
    found, w = normal_form_round_trip(truth, cfg["generator"]["scale"], seed, cfg["max_degree"])
    keys = ("mu2", "b", "c1", "c2")
    errors = {k: abs(getattr(found, k) - getattr(truth, k)) for k in keys}
    worst = max(errors.values())
    payload = {"truth": truth.to_json(), "recovered": found.to_json(), "abs_error": errors,
               "max_abs_error": worst, "within_tolerance": worst <= cfg["tolerance"],
               "generator_max_coefficient": w.max_abs(), "extras": dict(found.extras)}
    return [write_json(os.path.join(out, "normal_form.json"), payload, prov)]


def cmd_strata(cfg, seed, workers, out, prov):
    from .strata import (SURFACE_CSV_COLUMNS, TOP_CSV_COLUMNS, critical_surface, thread_values,
                         top_relative_equilibria)

    coeffs = _coeffs(cfg["coeffs"])
    rows = []
    for mu2 in cfg["mu2_values"]:
        for p in critical_surface(coeffs, _grid(cfg["M_grid"]), mu2):
            rows.append([p.mu2, p.M, p.s, p.g, p.label.value])
    top = cfg["top"]
    em = top_relative_equilibria(top["c"], top["u3_values"], _grid(top["Omega_grid"]), top["rho"])
    top_rows = [[e.u3, e.Omega, e.a, e.b, e.h, e.cls] for e in em]
    thread = thread_values(top["c"], _grid(top["a_grid"]), top["rho"])
    thread_rows = [[e.u3, e.Omega, e.a, e.b, e.h, e.cls] for e in thread]
    return [write_csv(os.path.join(out, "strata.csv"), SURFACE_CSV_COLUMNS, rows, prov),
            write_csv(os.path.join(out, "top_relative_equilibria.csv"), TOP_CSV_COLUMNS, top_rows, prov),
            write_csv(os.path.join(out, "thread.csv"), TOP_CSV_COLUMNS, thread_rows, prov)]


def dioph_model(cfg):
    from .dioph import top_model, unfolding_model
    if cfg["model"] == "unfolding":
        return unfolding_model(cfg["lambda0"]), ("omega2", "mu2"), lambda q: q[1]
    return top_model(cfg["omega_osc"]), ("a", "c"), lambda q: 0.25 * q[0] ** 2 - q[1]


def cmd_dioph_scan(cfg, seed, workers, out, prov):
    from .dioph import DiophParams, cantor_scan

    model, names, mu2_of = dioph_model(cfg)
    res = cantor_scan(model, cfg["box"], cfg["resolution"], DiophParams(cfg["tau"], cfg["gamma"], cfg["K"]),
                      workers)
    rows = res.rows()
    neg = [r[2] for r in rows if mu2_of(r[:2]) < 0]
    pos = [r[2] for r in rows if mu2_of(r[:2]) > 0]
    summary = {"fraction": res.fraction,
               "fraction_mu2_negative": float(np.mean(neg)) if neg else None,
               "fraction_mu2_positive": float(np.mean(pos)) if pos else None,
               "points": len(rows)}
    cols = (*names, "pass", "worst_k", "worst_l", "margin")
    return [write_csv(os.path.join(out, "dioph.csv"), cols, rows, prov),
            write_json(os.path.join(out, "dioph_summary.json"), summary, prov)]


def _load_signal(sig, seed):
    if sig["kind"] == "synthetic":
        f, a = sig.get("frequencies", []), sig.get("amplitudes", [])
        ph = sig.get("phases", [0.0] * len(f))
        if not (len(f) == len(a) == len(ph)):
            raise ConfigProblem("signal", "frequencies, amplitudes and phases need equal lengths")
        t = sig.get("dt", 0.1) * np.arange(sig.get("n", 4096))
        z = sum(A * np.exp(1j * (w * t + p)) for w, A, p in zip(f, a, ph))
        z = np.asarray(z, dtype=complex) + 0j * t
        if sig.get("noise", 0.0):
            rng = np.random.default_rng(seed)
            z = z + sig["noise"] * (rng.standard_normal(t.size) + 1j * rng.standard_normal(t.size))
        return z, float(sig.get("dt", 0.1))
    try:
        _, cols, rows = read_csv(sig["path"])
    except (OSError, UnicodeDecodeError, IndexError) as exc:
        raise ConfigProblem("signal.path", f"cannot read {sig['path']!r}: {exc}") from exc
    index = {c: i for i, c in enumerate(cols)}
    for key in ("re", "im", "time"):
        if key in sig and sig[key] not in index:
            raise ConfigProblem(f"signal.{key}", f"column {sig[key]!r} not in {cols}")
    data = np.array([[float(x) for x in r] for r in rows if r]) if rows else np.zeros((0, len(cols)))
    z = data[:, index[sig["re"]]] + (1j * data[:, index[sig["im"]]] if "im" in sig else 0.0)
    tcol = data[:, index[sig.get("time", "t")]] if sig.get("time", "t") in index else None
    if tcol is None or tcol.size < 2:
        raise ConfigProblem("signal.time", "need a time column with at least two samples")
    return z, float(tcol[1] - tcol[0])


def cmd_naff(cfg, seed, workers, out, prov):
    from .freqmap import TimeSeries, naff_extract, torus_dimension

    z, dt = _load_signal(cfg["signal"], seed)
    dec = naff_extract(TimeSeries(z, dt), cfg["max_terms"], cfg["refine_tol"], cfg["residual_tol"])
    rows = [[k + 1, t.frequency, t.amplitude, t.phase] for k, t in enumerate(dec.terms)]
    tor = torus_dimension([t.frequency for t in dec.terms], cfg["K_rel"], cfg["relation_tol"])
    summary = {"residual_rms": dec.residual_norm, "terms": len(rows), "torus_dimension": tor["dim"],
               "basis": tor["basis"], "samples": int(z.size), "dt": dt}
    return [write_csv(os.path.join(out, "naff.csv"), ("k", "frequency", "amplitude", "phase"), rows, prov),
            write_json(os.path.join(out, "naff_summary.json"), summary, prov)]


def persistence_setup(cfg, seed):
    """PersistenceConfig, tori and optional DiophParams from a persistence config block."""
    from .dioph import DiophParams
    from .freqmap import PersistenceConfig
    from .models import TopParams

    pc = PersistenceConfig(params=TopParams(**cfg["top"]), omega_osc=tuple(cfg["omega_osc"]),
                           coupling=cfg["coupling"], coupling_params=dict(cfg["coupling_params"]),
                           dt=cfg["dt"], sample_every=cfg["sample_every"], window_time=cfg["window_time"],
                           windows=cfg["windows"], max_terms=cfg["max_terms"], amp_tol=cfg["amp_tol"],
                           relation_tol=cfg["relation_tol"], track_tol=cfg["track_tol"])
    radii = _grid(cfg["r_grid"])
    if cfg["random_theta"]:
        thetas = np.random.default_rng(seed).uniform(0.0, 2.0 * math.pi, radii.size)
        tori = list(zip(radii.tolist(), thetas.tolist()))
    else:
        tori = [(float(r), float(th)) for th in cfg["theta"] for r in radii]
    sel = cfg["select"]
    select = DiophParams(sel["tau"], sel["gamma"], sel["K"]) if sel else None
    return pc, tori, select


def cmd_persistence(cfg, seed, workers, out, prov):
    from .freqmap import persistence_scan

    pc, tori, select = persistence_setup(cfg, seed)
    res = persistence_scan(pc, tori, cfg["epsilons"], workers, select)
    nf = pc.n_track
    cols = ("index", "r", "theta", "epsilon", "class", *[f"f{i + 1}" for i in range(nf)], "drift", "detail")
    rows = []
    for r in res.records:
        f = list(r.frequencies) + [math.nan] * (nf - len(r.frequencies))
        rows.append([r.index, r.r, r.theta, r.epsilon, r.cls.value, *f[:nf], r.drift, r.detail])
    fr = res.fractions()
    vals = [fr[e] for e in res.epsilons]
    summary = {"epsilons": list(res.epsilons), "survival_fraction": vals, "tori": res.n_tori,
               "monotone_non_increasing": all(b <= a for a, b in zip(vals, vals[1:]))}
    return [write_csv(os.path.join(out, "persistence.csv"), cols, rows, prov),
            write_json(os.path.join(out, "persistence_summary.json"), summary, prov)]


def cmd_monodromy(cfg, seed, workers, out, prov):
    from .monodromy import circle_loop, monodromy_around_thread

    coeffs = _coeffs(cfg["coeffs"])
    lp = cfg["loop"]
    loop = circle_loop(lp["center"], lp["radius"], lp["steps"], coeffs.mu2, lp["turns"], lp["clockwise"],
                       margin=lp["margin"])
    res = monodromy_around_thread(loop, coeffs, workers)
    payload = res.to_json()
    payload["det"] = int(round(np.linalg.det(res.matrix)))
    return [write_json(os.path.join(out, "monodromy.json"), payload, prov),
            write_csv(os.path.join(out, "theta_branch.csv"), ("s", "g", "theta"), res.continuation_log, prov)]


RUNNERS: dict[str, Callable] = {
    "simulate": cmd_simulate, "scan-spectrum": cmd_scan_spectrum, "normal-form": cmd_normal_form,
    "strata": cmd_strata, "dioph-scan": cmd_dioph_scan, "naff": cmd_naff,
    "persistence": cmd_persistence, "monodromy": cmd_monodromy,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lagtop", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lagtop {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON configuration file (defaults are used when omitted)")
        s.add_argument("--out", help="output directory")
        s.add_argument("--workers", type=int, default=None, help="worker threads (default 1)")
        s.add_argument("--seed", type=int, default=None, help="seed for randomized choices (default 0)")
    return p


def _fail(code: int, message: str) -> int:
    print(f"lagtop: {message}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        user = {}
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    user = json.load(fh)
            except OSError as exc:
                raise ConfigProblem("--config", str(exc)) from exc
            except json.JSONDecodeError as exc:
                raise ConfigProblem("--config", f"invalid JSON: {exc}") from exc
        if args.seed is not None and args.seed < 0:
            raise ConfigProblem("--seed", "must be >= 0")
        cfg, seed, applied = effective_config(args.command, user, args.seed)
        workers = args.workers if args.workers is not None else int(user.get("workers", 1))
        if workers < 1:
            raise ConfigProblem("--workers", "must be >= 1")
        out = args.out or os.environ.get("LAGTOP_OUT") or user.get("out") or "."
        prov = Provenance(args.command, cfg, seed, applied)
        files = RUNNERS[args.command](cfg, seed, workers, out, prov)
    except ConfigProblem as exc:
        return _fail(EXIT_CONFIG, f"config error: {exc}")
    except _NUMERIC as exc:
        detail = ""
        if isinstance(exc, StepFailure):
            detail = f" (step {exc.step_index}, residual {exc.residual})"
        return _fail(EXIT_NUMERIC, f"numeric failure: {type(exc).__name__}: {exc}{detail}")
    except (LagtopError, ValueError) as exc:
        return _fail(EXIT_CONFIG, f"config error: {type(exc).__name__}: {exc}")
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
