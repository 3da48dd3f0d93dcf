"""Truncated Diophantine conditions and Cantor-set parameter scans.

A frequency vector (omega, omegaN) passes when

    |<omega, k> + <omegaN, l>| >= gamma |k|_1^(-tau)

for all 0 < |k|_1 <= K and all l with |l|_1 <= 2.  Hyperbolic tori have no
normal frequencies, so only l = 0 is checked for them.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError

__all__ = [
    "FrequencyData", "DiophParams", "DiophReport", "diophantine_check", "shrink_domain",
    "ScanResult", "cantor_scan", "unfolding_model", "top_model", "integer_vectors",
]


@dataclass(frozen=True)
class FrequencyData:
    omega: tuple
    omegaN: tuple = ()

    def __post_init__(self):
        om = tuple(float(x) for x in np.atleast_1d(self.omega))
        on = tuple(sorted(float(x) for x in np.atleast_1d(self.omegaN))) if len(np.atleast_1d(self.omegaN)) else ()
        if not om:
            raise ValueError("need at least one internal frequency")
        if not all(math.isfinite(x) for x in om + on):
            raise ValueError("frequencies must be finite")
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "omegaN", on)


@dataclass(frozen=True)
class DiophParams:
    tau: float
    gamma: float
    K: int = 100

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if int(self.K) != self.K or self.K < 1:
            raise ValueError("K must be an integer >= 1")
        object.__setattr__(self, "K", int(self.K))


@dataclass(frozen=True)
class DiophReport:
    passed: bool
    worst_k: tuple
    worst_l: tuple
    margin: float
    K: int


@lru_cache(maxsize=32)
def integer_vectors(m: int, K: int) -> np.ndarray:
    """k in Z^m with 0 < |k|_1 <= K, one of each pair {k, -k} (first nonzero entry positive)."""
    rng = range(-K, K + 1)
    if m == 1:
        return np.arange(1, K + 1, dtype=np.int64)[:, None]
    rows = []
    for head in itertools.product(rng, repeat=m - 1):
        used = sum(abs(h) for h in head)
        if used > K:
            continue
        first = next((h for h in head if h != 0), 0)
        rest = K - used
        if first > 0:
            last = range(-rest, rest + 1)
        elif first < 0:
            continue
        else:
            last = range(1, rest + 1)
        for t in last:
            rows.append(head + (t,))
    return np.asarray(rows, dtype=np.int64).reshape(-1, m)


@lru_cache(maxsize=8)
def _normal_vectors(r: int) -> np.ndarray:
    if r == 0:
        return np.zeros((1, 0), dtype=np.int64)
    out = [l for l in itertools.product(range(-2, 3), repeat=r) if sum(abs(x) for x in l) <= 2]
    out.sort(key=lambda l: sum(abs(x) for x in l))  # l = 0 first, so ties report it
    return np.asarray(out, dtype=np.int64)


def diophantine_check(f: FrequencyData, p: DiophParams) -> DiophReport:
    """Exhaustive check of the truncated condition; reports the worst (k, l)."""
    m = len(f.omega)
    if not p.tau > m - 1:
        raise ValueError(f"tau must exceed m - 1 = {m - 1}")
    ks = integer_vectors(m, p.K)
    ls = _normal_vectors(len(f.omegaN))
    dk = ks @ np.asarray(f.omega)
    dl = ls @ np.asarray(f.omegaN) if f.omegaN else np.zeros(1)
    bound = p.gamma * np.abs(ks).sum(axis=1).astype(float) ** (-p.tau)
    margin = np.abs(dk[:, None] + dl[None, :]) - bound[:, None]
    i, j = np.unravel_index(int(np.argmin(margin)), margin.shape)
    worst = float(margin[i, j])
    return DiophReport(worst >= 0.0, tuple(int(x) for x in ks[i]), tuple(int(x) for x in ls[j]), worst, p.K)


def _box_boundary(box: Sequence[Sequence[float]], n: int) -> np.ndarray:
    box = np.asarray(box, dtype=float)
    p = box.shape[0]
    axes = [np.linspace(lo, hi, n) for lo, hi in box]
    pts = []
    for d in range(p):
        others = [axes[j] for j in range(p) if j != d]
        for side in box[d]:
            for rest in itertools.product(*others) if others else [()]:
                q = list(rest)
                q.insert(d, side)
                pts.append(q)
    return np.unique(np.asarray(pts), axis=0)


def shrink_domain(F_map: Callable, U_box: Sequence[Sequence[float]], gamma: float,
                  boundary_grid: int) -> Callable:
    """Predicate nu -> dist(F(nu), F(boundary of U)) > gamma.

    The image of the boundary is sampled on ``boundary_grid`` points per
    edge, so distances are accurate to about the image of one grid cell.
    """
    if int(boundary_grid) < 2:
        raise ConfigError("boundary_grid needs at least 2 points per edge")
    if gamma < 0:
        raise ConfigError("gamma must be >= 0")
    bpts = _box_boundary(U_box, int(boundary_grid))
    images = np.array([np.atleast_1d(np.asarray(F_map(q), dtype=float)) for q in bpts])
    tree = cKDTree(images)

    def predicate(nu) -> bool:
        d, _ = tree.query(np.atleast_1d(np.asarray(F_map(np.asarray(nu, dtype=float)), dtype=float)))
        return bool(d > gamma)

    predicate.boundary_images = images
    return predicate


@dataclass
class ScanResult:
    axes: list
    passed: np.ndarray
    reports: list
    fraction: float

    def rows(self):
        """(coords..., pass, worst_k, worst_l, margin) in grid order."""
        out = []
        for idx, rep in zip(itertools.product(*[range(len(a)) for a in self.axes]), self.reports):
            coords = [float(self.axes[d][i]) for d, i in enumerate(idx)]
            out.append(coords + [int(rep.passed), " ".join(map(str, rep.worst_k)),
                                 " ".join(map(str, rep.worst_l)), rep.margin])
        return out


def cantor_scan(model: Callable, box: Sequence[Sequence[float]], grid_resolution, p: DiophParams,
                workers: int = 1) -> ScanResult:
    """Diophantine check at every point of a regular grid over ``box``."""
    box = np.asarray(box, dtype=float)
    res = np.broadcast_to(np.asarray(grid_resolution, dtype=int), (box.shape[0],))
    axes = [np.linspace(lo, hi, int(n)) for (lo, hi), n in zip(box, res)]
    pts = [np.array(q) for q in itertools.product(*axes)]
    job = lambda q: diophantine_check(model(q), p)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(job, pts))
    else:
        reports = [job(q) for q in pts]
    passed = np.array([r.passed for r in reports]).reshape([len(a) for a in axes])
    return ScanResult(axes, passed, reports, float(passed.mean()))


def unfolding_model(lambda0: float = math.sqrt(2.0)) -> Callable:
    """nu = (omega2, mu2) -> omega = (1, omega2), normal frequencies lambda0 +- sqrt(mu2).

    The two normal frequencies always sum to 2 lambda0, so lambda0 should be
    non-resonant with omega; the default is sqrt(2).
    """
    def model(nu):
        w2, mu2 = float(nu[0]), float(nu[1])
        if mu2 < 0:
            return FrequencyData((1.0, w2), ())
        r = math.sqrt(mu2)
        return FrequencyData((1.0, w2), (lambda0 - r, lambda0 + r))
    return model


def top_model(omega_osc: Sequence[float]) -> Callable:
    """nu = (a, c) -> omega = (omega_osc..., a), normal frequencies a/2 +- sqrt(a^2/4 - c)."""
    om = tuple(float(x) for x in omega_osc)

    def model(nu):
        a, c = float(nu[0]), float(nu[1])
        mu2 = 0.25 * a * a - c
        if mu2 < 0:
            return FrequencyData(om + (a,), ())
        r = math.sqrt(mu2)
        return FrequencyData(om + (a,), (0.5 * a - r, 0.5 * a + r))
    return model
