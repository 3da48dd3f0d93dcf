"""Rotation numbers of G_int, monodromy around the thread, Kolmogorov Hessian.

At fixed S = s the reduced motion on {Z^2 + S^2 = 4MN} obeys

    (dM/dt)^2 = P(M) = -8b M^3 - 4(mu2 + 2 c1 s) M^2 + 4(g - lam s - c2 s^2) M - s^2,

and the angle conjugate to S advances at rate G_S + s/(2M), with
G_S = lam + 2 c1 M + 2 c2 s.  Over one period the advance is

    Theta = 2 int_{M-}^{M+} (lam + 2 c1 M + 2 c2 s + s/(2M)) dM / sqrt(P).

Theta jumps by 2 pi across s = 0 above the thread; continuing it around a
loop that encircles the thread once leaves an integer winding, which is
the off-diagonal entry of the monodromy matrix.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import ContinuationError, NumericError, PrecisionWarning, StratumError
from .normalform import NormalFormCoefficients
from .strata import StratumLabel, classify_value

__all__ = [
    "LoopSpec", "circle_loop", "MonodromyResult", "orbit_polynomial", "rotation_number",
    "period", "monodromy_around_thread", "KolmogorovReport", "kolmogorov_hessian",
]


def orbit_polynomial(s: float, g: float, coeffs: NormalFormCoefficients, mu2: float | None = None) -> np.ndarray:
    """Coefficients (highest first) of P(M)."""
    mu2 = coeffs.mu2 if mu2 is None else mu2
    b, c1, c2, lam = coeffs.b, coeffs.c1, coeffs.c2, coeffs.frequency
    return np.array([-8.0 * b, -4.0 * (mu2 + 2.0 * c1 * s), 4.0 * (g - lam * s - c2 * s * s), -s * s])


def _interval(s, g, coeffs, mu2):
    roots = np.roots(orbit_polynomial(s, g, coeffs, mu2))
    real = np.sort(roots[np.abs(roots.imag) <= 1e-12 * np.maximum(1.0, np.abs(roots))].real)
    if real.size != 3:
        raise StratumError(f"value (s={s}, g={g}) is not a regular value with a closed orbit")
    m0, m_lo, m_hi = real
    if s == 0.0 and abs(m_lo) < 1e-14:
        m_lo = 0.0
    elif m0 != 0.0 and m_hi != 0.0:
        # the small root loses relative accuracy in np.roots; the product of the roots does not
        m_lo = -s * s / (8.0 * coeffs.b * m0 * m_hi)
    if m_lo < 0.0 or m_hi <= m_lo:
        raise StratumError(f"no admissible orbit interval at (s={s}, g={g})")
    return m0, m_lo, m_hi


def _integrate(s, g, coeffs, mu2, weight: Callable):
    m0, m_lo, m_hi = _interval(s, g, coeffs, mu2)
    width = m_hi - m_lo
    k = math.sqrt(8.0 * coeffs.b)

    # M = m_lo + width sin^2(psi) removes both square-root endpoints
    def integrand(psi):
        m = m_lo + width * math.sin(psi) ** 2
        return 2.0 * weight(m) / (k * math.sqrt(m - m0))

    val, err = quad(integrand, 0.0, 0.5 * math.pi, epsabs=1e-13, epsrel=1e-12, limit=400)
    if not math.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
        raise NumericError(f"quadrature did not converge at (s={s}, g={g}): error {err:.3g}")
    return 2.0 * val


def _integrate_inverse(s, g, coeffs, mu2):
    """Same as _integrate with weight s / 2M, whose peak near M = m_lo is split off.

    With M = m_lo + w sin^2(psi) the singular part integrates in closed form,
    int_0^{pi/2} dpsi / M = pi / (2 sqrt(m_lo (m_lo + w))); the rest is smooth.
    """
    m0, m_lo, m_hi = _interval(s, g, coeffs, mu2)
    width = m_hi - m_lo
    k = math.sqrt(8.0 * coeffs.b)
    r_lo = 1.0 / math.sqrt(m_lo - m0)

    def integrand(psi):
        sn = math.sin(psi) ** 2
        m = m_lo + width * sn
        # (1/sqrt(m - m0) - r_lo) / m without cancellation
        return -width * sn * r_lo / (math.sqrt(m - m0) * (math.sqrt(m - m0) + math.sqrt(m_lo - m0)) * m)

    val, err = quad(integrand, 0.0, 0.5 * math.pi, epsabs=1e-13, epsrel=1e-12, limit=400)
    if not math.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
        raise NumericError(f"quadrature did not converge at (s={s}, g={g}): error {err:.3g}")
    exact = r_lo * 0.5 * math.pi / math.sqrt(m_lo * (m_lo + width))
    return 2.0 * 2.0 * (0.5 * s) * (val + exact) / k


def period(value: Sequence[float], coeffs: NormalFormCoefficients, mu2: float | None = None) -> float:
    s, g = (float(x) for x in value)
    return _integrate(s, g, coeffs, mu2, lambda m: 1.0)


def rotation_number(value: Sequence[float], coeffs: NormalFormCoefficients, mu2: float | None = None,
                    check_regular: bool = True) -> float:
    """Advance Theta of the S-angle over one period of the reduced orbit at (s, g)."""
    s, g = (float(x) for x in value)
    mu2 = coeffs.mu2 if mu2 is None else float(mu2)
    if check_regular:
        label = classify_value((mu2, s, g), coeffs).label
        if label is not StratumLabel.OPEN:
            raise StratumError(f"(s={s}, g={g}) is {label.value}, not a regular value")
    lam, c1, c2 = coeffs.frequency, coeffs.c1, coeffs.c2
    base = _integrate(s, g, coeffs, mu2, lambda m: lam + 2.0 * c1 * m + 2.0 * c2 * s)
    if s == 0.0:
        return base
    return base + _integrate_inverse(s, g, coeffs, mu2)


@dataclass(frozen=True)
class LoopSpec:
    """Closed polygon of (s, g) values; the last node connects back to the first."""
    nodes: tuple
    mu2: float
    margin: float = 1e-4

    def __post_init__(self):
        pts = tuple((float(a), float(b)) for a, b in self.nodes)
        if len(pts) < 8:
            raise ValueError("a loop needs at least 8 nodes")
        object.__setattr__(self, "nodes", pts)

    def validate(self, coeffs: NormalFormCoefficients):
        for s, g in self.nodes:
            if abs(s) < self.margin and g > 0:
                raise StratumError(f"loop node ({s}, {g}) lies on the cut s = 0 above the thread, "
                                   "where Theta jumps by 2 pi")
            if math.hypot(s, g) < self.margin:
                raise StratumError(f"loop node ({s}, {g}) is within {self.margin} of the thread")
            for ds, dg in ((0, 0), (self.margin, 0), (-self.margin, 0), (0, self.margin), (0, -self.margin)):
                lab = classify_value((self.mu2, s + ds, g + dg), coeffs).label
                if lab is not StratumLabel.OPEN:
                    raise StratumError(f"loop node ({s}, {g}) is within {self.margin} of a critical value")


def circle_loop(center: Sequence[float], radius: float, steps: int, mu2: float, turns: int = 1,
                clockwise: bool = False, start_angle: float | None = None, margin: float = 1e-4) -> LoopSpec:
    """Circle of ``steps`` nodes per turn around ``center`` in the (s, g) plane.

    The default start angle is half a step, which keeps nodes off the axes.
    """
    if steps < 8:
        raise ValueError("steps must be >= 8")
    if start_angle is None:
        start_angle = math.pi / steps
    sign = -1.0 if clockwise else 1.0
    ang = start_angle + sign * 2.0 * np.pi * np.arange(steps * turns) / steps
    nodes = [(center[0] + radius * math.cos(a), center[1] + radius * math.sin(a)) for a in ang]
    return LoopSpec(tuple(nodes), mu2, margin)


@dataclass
class MonodromyResult:
    matrix: np.ndarray
    winding: int
    continuation_log: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"matrix": self.matrix.tolist(), "winding": self.winding,
                "nodes": [list(x) for x in self.continuation_log]}


def _wrap(d: float) -> float:
    return d - 2.0 * math.pi * round(d / (2.0 * math.pi))


def monodromy_around_thread(loop: LoopSpec, coeffs: NormalFormCoefficients, workers: int = 1,
                            max_halvings: int = 12) -> MonodromyResult:
    """Continue Theta around the loop and read off the integer monodromy.

    Consecutive nodes are joined by nearest-value continuation (Theta is
    defined mod 2 pi); segments whose increment exceeds pi/2 are halved
    until it does not.  The total increment is 2 pi k and the matrix is
    [[1, k], [0, 1]] in the basis (S-cycle, reduced cycle).
    """
    loop.validate(coeffs)
    nodes = list(loop.nodes)
    theta = lambda p: rotation_number(p, coeffs, loop.mu2)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(theta, nodes))
    else:
        values = [theta(p) for p in nodes]
    log = []
    total = 0.0
    closed = nodes + [nodes[0]]
    vals = values + [values[0]]
    for i in range(len(nodes)):
        total += _segment(closed[i], closed[i + 1], vals[i], vals[i + 1], theta, max_halvings, log)
    k = total / (2.0 * math.pi)
    kr = int(round(k))
    if abs(k - kr) > 1e-6:
        raise ContinuationError(f"non-integer winding {k:.9f}; use more loop nodes")
    return MonodromyResult(np.array([[1, kr], [0, 1]], dtype=np.int64), kr, log)


def _segment(p0, p1, t0, t1, theta, depth, log):
    d = _wrap(t1 - t0)
    if abs(d) <= 0.5 * math.pi:
        log.append((p0[0], p0[1], t0))
        return d
    if depth == 0:
        raise ContinuationError(f"branch ambiguous between {p0} and {p1}; increase loop steps")
    frac = 0.5
    if abs(0.5 * (p0[0] + p1[0])) < 1e-12 * max(abs(p0[0]), abs(p1[0]), 1e-300):
        frac = 0.5 + 1e-3  # stay off the cut s = 0
    mid = (p0[0] + frac * (p1[0] - p0[0]), p0[1] + frac * (p1[1] - p0[1]))
    tm = theta(mid)
    return (_segment(p0, mid, t0, tm, theta, depth - 1, log)
            + _segment(mid, p1, tm, t1, theta, depth - 1, log))


# -- Kolmogorov non-degeneracy ----------------------------------------------------------

@dataclass(frozen=True)
class KolmogorovReport:
    det: float
    hessian: np.ndarray
    condition: float
    degenerate: bool


def kolmogorov_hessian(F_eval: Callable, nu0, h_fd: float = 1e-4, *, m: int,
                       z_dim: int = 4, noise_threshold: float = 1e-6) -> KolmogorovReport:
    """Central-difference Hessian of F(y, z, nu) in y at y = 0, z = 0, nu = nu0.

    ``condition`` estimates the relative rounding error of the difference
    quotients, eps |F| / (h^2 |H|); above ``noise_threshold`` a
    PrecisionWarning is issued.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    z = np.zeros(z_dim)
    f = lambda y: float(F_eval(y, z, nu0))
    y0 = np.zeros(m)
    f0 = f(y0)
    hess = np.empty((m, m))
    fmax = abs(f0)
    e = np.eye(m) * h_fd
    for i in range(m):
        fp, fm = f(y0 + e[i]), f(y0 - e[i])
        fmax = max(fmax, abs(fp), abs(fm))
        hess[i, i] = (fp - 2.0 * f0 + fm) / h_fd ** 2
        for j in range(i + 1, m):
            vals = [f(y0 + e[i] + e[j]), f(y0 + e[i] - e[j]), f(y0 - e[i] + e[j]), f(y0 - e[i] - e[j])]
            fmax = max(fmax, *map(abs, vals))
            hess[i, j] = hess[j, i] = (vals[0] - vals[1] - vals[2] + vals[3]) / (4.0 * h_fd ** 2)
    noise = np.finfo(float).eps * max(fmax, 1e-300) / h_fd ** 2
    hnorm = float(np.max(np.abs(hess)))
    condition = noise / hnorm if hnorm > 0 else math.inf
    if condition > noise_threshold:
        warnings.warn(f"finite-difference Hessian dominated by rounding (estimate {condition:.3g}); "
                      "adjust h_fd", PrecisionWarning, stacklevel=2)
    det = float(np.linalg.det(hess))
    degenerate = hnorm <= 1e3 * noise or abs(det) <= 1e-8 * max(hnorm, 1.0) ** m
    if degenerate and hnorm <= 1e3 * noise:
        det = 0.0
    return KolmogorovReport(det, hess, condition, bool(degenerate))
