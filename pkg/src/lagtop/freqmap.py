"""Frequency analysis of trajectories and persistence scans.

``naff_extract`` follows Laskar's scheme: locate the maximum of the
Hann-windowed correlation |<r, e^{i w t}>| from an FFT, refine it by
golden-section search, fit amplitudes by least squares, subtract and
repeat.  Each accepted frequency is polished by re-refining it against the
signal with all other terms removed.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .dioph import DiophParams, FrequencyData, diophantine_check, integer_vectors
from .errors import DataError, StepFailure
from .integrator import IntegratorConfig, integrate_coupled
from .models import CoupledConfig, CoupledState, TopParams, project_to_constraints

__all__ = [
    "TimeSeries", "FrequencyTerm", "FrequencyDecomposition", "naff_extract", "torus_dimension",
    "TorusClass", "PersistenceConfig", "PersistenceRecord", "PersistenceResult",
    "initial_torus", "persistence_scan", "PERSISTENCE_CSV_COLUMNS",
]

_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TimeSeries:
    samples: np.ndarray
    dt: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex).ravel()
        if s.size < 16:
            raise DataError(f"time series needs >= 16 samples, got {s.size}")
        if not np.all(np.isfinite(s)):
            raise DataError("time series contains non-finite samples")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise DataError("dt must be finite and > 0")
        object.__setattr__(self, "samples", s)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.samples.size)


@dataclass(frozen=True)
class FrequencyTerm:
    frequency: float
    amplitude: float
    phase: float


@dataclass(frozen=True)
class FrequencyDecomposition:
    terms: tuple
    residual_norm: float

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([t.frequency for t in self.terms])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([t.amplitude for t in self.terms])


class _Correlator:
    def __init__(self, t: np.ndarray):
        n = t.size
        self.t = t
        self.window = 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / (n - 1)))
        self.wsum = float(self.window.sum())

    def __call__(self, signal: np.ndarray, w: float) -> float:
        return abs(np.dot(self.window * signal, np.exp(-1j * w * self.t))) / self.wsum

    def npad(self, pad: int = 4) -> int:
        return 1 << int(math.ceil(math.log2(self.t.size * pad)))

    def bin_width(self, dt: float) -> float:
        return 2.0 * np.pi / (self.npad() * dt)

    def coarse(self, signal: np.ndarray, dt: float):
        npad = self.npad()
        power = np.abs(np.fft.fft(self.window * signal, npad))
        k = int(np.argmax(power))
        freqs = 2.0 * np.pi * np.fft.fftfreq(npad, d=dt)
        return float(freqs[k]), self.bin_width(dt)

    def refine(self, signal: np.ndarray, w0: float, half_width: float, tol: float, snap: bool = False) -> float:
        lo, hi = w0 - half_width, w0 + half_width
        x1 = hi - _GOLD * (hi - lo)
        x2 = lo + _GOLD * (hi - lo)
        f1, f2 = self(signal, x1), self(signal, x2)
        while hi - lo > tol:
            if f1 >= f2:
                hi, x2, f2 = x2, x1, f1
                x1 = hi - _GOLD * (hi - lo)
                f1 = self(signal, x1)
            else:
                lo, x1, f1 = x1, x2, f2
                x2 = lo + _GOLD * (hi - lo)
                f2 = self(signal, x2)
        best = 0.5 * (lo + hi)
        # the peak is flat to rounding; finish on the zero of d|phi|^2/dw
        a, b = best - 1e-3 * half_width, best + 1e-3 * half_width
        da, db = self.slope(signal, a), self.slope(signal, b)
        if da > 0 > db:
            best = brentq(lambda w: self.slope(signal, w), a, b, xtol=min(tol, 1e-15 * max(1.0, abs(best))),
                          rtol=4 * np.finfo(float).eps)
        # keep an exactly representable FFT bin (e.g. 0) when it is at least as good
        if snap and abs(best - w0) <= tol and self(signal, w0) >= self(signal, best) * (1 - 1e-14):
            return w0
        return best

    def slope(self, signal: np.ndarray, w: float) -> float:
        e = self.window * signal * np.exp(-1j * w * self.t)
        phi = e.sum()
        dphi = (-1j * self.t * e).sum()
        return float((np.conj(phi) * dphi).real)


def _fit(signal, t, freqs):
    basis = np.exp(1j * np.outer(t, freqs))
    amps, *_ = np.linalg.lstsq(basis, signal, rcond=None)
    return amps, signal - basis @ amps


def _polish(sig, t, freqs, corr, dt, tol, passes):
    # re-refine each frequency against the signal with the other terms removed
    for _ in range(passes if len(freqs) > 1 else 0):
        amps, _ = _fit(sig, t, np.array(freqs))
        for j in range(len(freqs)):
            others = [k for k in range(len(freqs)) if k != j]
            partial = sig - np.exp(1j * np.outer(t, [freqs[k] for k in others])) @ amps[others]
            freqs[j] = corr.refine(partial, freqs[j], 0.25 * corr.bin_width(dt), tol)


def naff_extract(ts: TimeSeries, max_terms: int = 8, refine_tol: float = 1e-12,
                 residual_tol: float = 1e-10, polish_passes: int = 2) -> FrequencyDecomposition:
    """Leading quasi-periodic terms sum_k A_k e^{i(w_k t + phi_k)} of a complex signal.

    Stops after ``max_terms`` terms or when the residual rms falls below
    ``residual_tol`` times the rms of the input.
    """
    if max_terms < 1:
        raise ValueError("max_terms must be >= 1")
    sig = ts.samples
    t = ts.times
    corr = _Correlator(t)
    scale = float(np.sqrt(np.mean(np.abs(sig) ** 2)))
    freqs: list = []
    resid = sig
    if scale == 0.0:
        return FrequencyDecomposition((), 0.0)
    while len(freqs) < max_terms:
        w0, bin_w = corr.coarse(resid, ts.dt)
        w = corr.refine(resid, w0, bin_w, refine_tol, snap=True)
        if any(abs(w - f) < bin_w for f in freqs):
            break
        freqs.append(w)
        _polish(sig, t, freqs, corr, ts.dt, refine_tol, polish_passes)
        amps, resid = _fit(sig, t, np.array(freqs))
        if float(np.sqrt(np.mean(np.abs(resid) ** 2))) <= residual_tol * scale:
            break
    amps, resid = _fit(sig, t, np.array(freqs))
    terms = sorted((FrequencyTerm(float(f), float(abs(a)), float(np.angle(a))) for f, a in zip(freqs, amps)),
                   key=lambda term: -term.amplitude)
    return FrequencyDecomposition(tuple(terms), float(np.sqrt(np.mean(np.abs(resid) ** 2))))


def torus_dimension(freqs: Sequence[float], K_rel: int = 20, tol: float = 1e-9) -> dict:
    """Size of a maximal subset of ``freqs`` free of integer relations |k|_1 <= K_rel.

    Frequencies are processed in ascending order, so the result does not
    depend on the input order.
    """
    vals = sorted(float(f) for f in freqs)
    if not all(math.isfinite(f) for f in vals):
        raise DataError("frequencies must be finite")
    basis: list = []
    for f in vals:
        cand = np.array(basis + [f])
        ks = integer_vectors(len(cand), int(K_rel))
        ks = ks[ks[:, -1] != 0]
        scale = max(1.0, float(np.max(np.abs(cand))))
        if ks.size and np.min(np.abs(ks @ cand)) <= tol * scale:
            continue
        basis.append(f)
    return {"dim": len(basis), "basis": basis}


# -- persistence -------------------------------------------------------------------------

class TorusClass(str, enum.Enum):
    SURVIVED = "Survived"
    RESONANT = "Resonant"
    ESCAPED = "Escaped"


@dataclass(frozen=True)
class PersistenceConfig:
    params: TopParams = field(default_factory=lambda: TopParams(c=1.0, a=3.0))
    omega_osc: tuple = (2.255,)
    coupling: str = "u3_cos_sum"
    coupling_params: dict = field(default_factory=dict)
    dt: float = 0.01
    sample_every: int = 20
    window_time: float = 1500.0
    windows: int = 2
    escape_radius: float = 0.5
    n_track: int = 2
    max_terms: int = 4
    refine_tol: float = 1e-12
    amp_tol: float = 1e-3
    K_rel: int = 4
    relation_tol: float = 1e-7
    track_tol: float = 1e-2

    def __post_init__(self):
        if self.windows < 2:
            raise ValueError("need at least 2 windows")
        if self.window_time <= 0 or self.dt <= 0:
            raise ValueError("window_time and dt must be > 0")

    @property
    def sample_dt(self) -> float:
        return self.dt * self.sample_every

    def drift_tol(self, w: float) -> float:
        return max(10.0 * self.refine_tol, 1e-7 * abs(w))


@dataclass(frozen=True)
class PersistenceRecord:
    index: int
    r: float
    theta: float
    epsilon: float
    cls: TorusClass
    frequencies: tuple
    drift: float
    detail: str = ""


@dataclass
class PersistenceResult:
    records: list
    epsilons: tuple
    n_tori: int

    def fraction(self, eps: float, cls: TorusClass = TorusClass.SURVIVED) -> float:
        sel = [r for r in self.records if r.epsilon == eps]
        return sum(r.cls == cls for r in sel) / len(sel) if sel else math.nan

    def fractions(self) -> dict:
        return {e: self.fraction(e) for e in self.epsilons}


def initial_torus(params: TopParams, r: float, theta: float, n_osc: int, x0=None) -> CoupledState:
    """Displace P_a by r (cos theta, sin theta) in (u1, u2) and project onto the constraints."""
    u = np.array([r * math.cos(theta), r * math.sin(theta), 1.0])
    v = np.array([0.0, 0.0, params.a])
    top = project_to_constraints(u, v, params.a)
    x = np.zeros(n_osc) if x0 is None else np.asarray(x0, dtype=float)
    return CoupledState(top, x, np.zeros(n_osc))


def _match(ref: Sequence[FrequencyTerm], other: FrequencyDecomposition):
    freqs = other.frequencies
    drift, amp_change = 0.0, 0.0
    for term in ref:
        if freqs.size == 0:
            return math.inf, math.inf
        j = int(np.argmin(np.abs(freqs - term.frequency)))
        drift = max(drift, abs(freqs[j] - term.frequency))
        amp_change = max(amp_change, abs(other.terms[j].amplitude - term.amplitude) / max(term.amplitude, 1e-300))
    return drift, amp_change


def _relation(freqs: Sequence[float], omega_osc: Sequence[float], K: int, tol: float):
    """A low-order k with k_f != 0 and |<k, (f, omega_osc)>| <= tol, or None."""
    vec = np.array(list(freqs) + list(omega_osc))
    nf = len(freqs)
    ks = integer_vectors(vec.size, K)
    ks = ks[np.any(ks[:, :nf] != 0, axis=1)]
    vals = np.abs(ks @ vec)
    i = int(np.argmin(vals))
    if vals[i] <= tol * max(1.0, float(np.max(np.abs(vec)))):
        return tuple(int(x) for x in ks[i])
    return None


def _classify(traj, cfg: PersistenceConfig, omega_osc, reference=None):
    u = traj.states[:, :3]
    if np.max(np.hypot(u[:, 0], u[:, 1])) > cfg.escape_radius:
        return TorusClass.ESCAPED, (), math.inf, "left the neighbourhood"
    signal = u[:, 0] + 1j * u[:, 1]
    per = (signal.size - 1) // cfg.windows
    decomps = [naff_extract(TimeSeries(signal[k * per:(k + 1) * per], cfg.sample_dt),
                            cfg.max_terms, cfg.refine_tol) for k in range(cfg.windows)]
    if reference is None:
        ref = decomps[0].terms[: cfg.n_track]
    else:
        # follow the lines of the unperturbed torus, not forced responses
        first = decomps[0]
        ref = []
        for f in reference:
            j = int(np.argmin(np.abs(first.frequencies - f)))
            if abs(first.frequencies[j] - f) > cfg.track_tol:
                return TorusClass.RESONANT, (), math.inf, f"line near {f:.6g} lost"
            ref.append(first.terms[j])
    freqs = tuple(t.frequency for t in ref)
    drift, amp = 0.0, 0.0
    for d in decomps[1:]:
        dd, aa = _match(ref, d)
        drift, amp = max(drift, dd), max(amp, aa)
    tol = max(cfg.drift_tol(f) for f in freqs) if freqs else cfg.drift_tol(0.0)
    rel = _relation(freqs, omega_osc, cfg.K_rel, cfg.relation_tol) if freqs else None
    if rel is not None:
        return TorusClass.RESONANT, freqs, float(drift), f"relation k={rel}"
    if drift >= tol or amp >= cfg.amp_tol:
        return TorusClass.RESONANT, freqs, float(drift), f"drift {drift:.3g}, amplitude change {amp:.3g}"
    return TorusClass.SURVIVED, freqs, float(drift), ""


def persistence_scan(cfg: PersistenceConfig, tori: Sequence[tuple], epsilons: Sequence[float],
                     workers: int = 1, select: DiophParams | None = None) -> PersistenceResult:
    """Classify each initial torus (r, theta) under each coupling strength.

    With ``select`` set, tori whose eps = 0 frequencies together with
    omega_osc fail the Diophantine check are dropped before the scan.
    Records come back ordered by (epsilon, torus index) whatever ``workers`` is.
    """
    n = len(cfg.omega_osc)
    omega = np.asarray(cfg.omega_osc, dtype=float)
    icfg = IntegratorConfig(scheme="implicit-midpoint", dt=cfg.dt)
    t_end = cfg.window_time * cfg.windows
    states = {i: initial_torus(cfg.params, r, th, n) for i, (r, th) in enumerate(tori)}
    eps_list = sorted(set(float(e) for e in epsilons))

    def job(item):
        i, eps, ref = item
        cc = CoupledConfig(omega, eps, cfg.coupling, dict(cfg.coupling_params))
        try:
            tr = integrate_coupled(states[i], cfg.params, icfg, cc, t_end, cfg.sample_every)
        except StepFailure as exc:
            raise StepFailure(f"torus {i}, epsilon={eps}: {exc}", exc.step_index, exc.residual) from exc
        return _classify(tr, cfg, omega, ref)

    def run(items):
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(job, items))
        return [job(it) for it in items]

    # the eps = 0 run gives each torus its reference lines
    index = list(range(len(tori)))
    base = run([(i, 0.0, None) for i in index])
    reference = {i: b[1] for i, b in zip(index, base)}
    if select is not None:
        index = [i for i in index if reference[i]
                 and diophantine_check(FrequencyData(tuple(omega) + tuple(reference[i])), select).passed]
    items = [(i, eps, reference[i]) for eps in eps_list for i in index]
    todo = [it for it in items if it[1] != 0.0]
    done = dict(zip([(i, e) for i, e, _ in todo], run(todo)))
    done.update({(i, 0.0): base[i] for i in index})
    records = []
    for i, eps, _ in items:
        cls, freqs, drift, detail = done[(i, eps)]
        r, th = tori[i]
        records.append(PersistenceRecord(i, float(r), float(th), eps, cls, freqs, drift, detail))
    return PersistenceResult(records, tuple(eps_list), len(index))


PERSISTENCE_CSV_COLUMNS = ("index", "r", "theta", "epsilon", "class", "f1", "f2", "drift")
