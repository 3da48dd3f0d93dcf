"""Swallowtail stratification of the energy-momentum values.

Two coordinate systems are exposed.  In the normal form the values are
(mu2, S, G) with G = G_int; in the top they are (a, b, h).  The bridge
between them near the thread is mu2 = a^2/4 - c.

On the reduced space {Z^2 + S^2 = 4MN} the critical points of G_int at
fixed S have Z = 0, N = S^2 / (4M) and satisfy

    S^2 = 16 b M^3 + 4 mu2 M^2 + 8 c1 S M^2,

which is the elliptic-family cubic with (b, c1) replaced by (4b, 2c1).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateInputError, UnsupportedCaseError
from .linstab import classify_spectrum, linearize_at_Pa
from .models import TopParams, reduced_jacobian, reduced_vector_field, ReducedTopState
from .normalform import NormalFormCoefficients

__all__ = [
    "StratumLabel", "StratumPoint", "TopEMValue", "elliptic_family", "gint_on_slice",
    "critical_M", "critical_values", "critical_surface", "classify_value", "realize_point",
    "top_relative_equilibria", "thread_values", "SURFACE_CSV_COLUMNS", "TOP_CSV_COLUMNS",
]


class StratumLabel(str, enum.Enum):
    THREAD = "Thread"
    SURFACE = "SurfaceEven"
    OPEN = "OpenRegion"
    OUTSIDE = "Outside"


@dataclass(frozen=True)
class StratumPoint:
    mu2: float
    s: float
    g: float
    label: StratumLabel
    M: float = math.nan


@dataclass(frozen=True)
class TopEMValue:
    a: float
    b: float
    h: float
    u3: float = math.nan
    Omega: float = math.nan
    cls: str = ""
    residual: float = 0.0


def elliptic_family(b: float, c1: float, mu2: float, M: float) -> tuple:
    """Real roots S of S^2 - 4bM^3 - 4mu2 M^2 - 4c1 S M^2 = 0, ascending."""
    if M < 0:
        raise ValueError("M must be >= 0")
    if M == 0:
        return (0.0,)
    rad = c1 * c1 * M * M + b * M + mu2
    if rad < 0:
        return ()
    r = 2.0 * M * math.sqrt(rad)
    centre = 2.0 * c1 * M * M
    if r == 0.0:
        return (centre,)
    return (centre - r, centre + r)


def gint_on_slice(coeffs: NormalFormCoefficients, mu2: float, M, s):
    """G_int at the Z = 0, N = s^2/(4M) point of the reduced space."""
    M = np.asarray(M, dtype=float)
    return (coeffs.frequency * s + s * s / (4.0 * M) + mu2 * M + 2 * coeffs.b * M * M
            + 2 * coeffs.c1 * s * M + coeffs.c2 * s * s)


def realize_point(M: float, s: float) -> np.ndarray:
    """A z in R^4 with invariants (S, M, N, Z) = (s, M, s^2/(4M), 0)."""
    r = math.sqrt(2.0 * M)
    return np.array([r, 0.0, 0.0, s / r])


def _check_super(coeffs: NormalFormCoefficients):
    if not coeffs.b > 0:
        raise UnsupportedCaseError("only the supercritical case b > 0 is supported")


def critical_M(coeffs: NormalFormCoefficients, mu2: float, s: float) -> np.ndarray:
    """Positive M of critical points of G_int on the slice S = s (M = 0 excluded)."""
    b, c1 = coeffs.b, coeffs.c1
    roots = np.roots([16.0 * b, 4.0 * (mu2 + 2.0 * c1 * s), 0.0, -s * s])
    out = []
    for r in roots:
        if abs(r.imag) <= 1e-10 * max(1.0, abs(r)) and r.real > 0:
            m = r.real
            # one Newton polish on the cubic
            f = 16 * b * m ** 3 + 4 * (mu2 + 2 * c1 * s) * m * m - s * s
            df = 48 * b * m * m + 8 * (mu2 + 2 * c1 * s) * m
            if df != 0:
                m -= f / df
            if m > 0:
                out.append(m)
    return np.array(sorted(out))


def critical_values(coeffs: NormalFormCoefficients, mu2: float, s: float, s_tol: float = 0.0) -> np.ndarray:
    """Critical values of G_int on the fiber S = s; includes the thread value 0 at s = 0."""
    ms = critical_M(coeffs, mu2, s)
    vals = list(gint_on_slice(coeffs, mu2, ms, s)) if ms.size else []
    if abs(s) <= s_tol:
        vals.append(coeffs.frequency * s + coeffs.c2 * s * s)
    return np.array(sorted(vals))


def critical_surface(coeffs: NormalFormCoefficients, M_grid: Iterable[float], mu2: float | None = None):
    """Critical values (mu2, S, G) of (G_int, S), one point per M and S branch.

    The M = 0 row is the thread point (mu2, 0, 0).
    """
    _check_super(coeffs)
    mu2 = coeffs.mu2 if mu2 is None else float(mu2)
    pts = []
    for M in M_grid:
        M = float(M)
        if M == 0.0:
            pts.append(StratumPoint(mu2, 0.0, 0.0, StratumLabel.THREAD, 0.0))
            continue
        for s in elliptic_family(4.0 * coeffs.b, 2.0 * coeffs.c1, mu2, M):
            g = float(gint_on_slice(coeffs, mu2, M, s))
            pts.append(StratumPoint(mu2, s, g, StratumLabel.SURFACE, M))
    return pts


def classify_value(p: Sequence[float], coeffs: NormalFormCoefficients, tol: float = 1e-9) -> StratumPoint:
    """Stratum of the value (mu2, s, g) of (G_int, S).

    The thread is the value of the origin z = 0.  It is a corner of the
    image for mu2 > 0 and an interior focus-focus value for mu2 < 0; both
    are labelled Thread.
    """
    _check_super(coeffs)
    mu2, s, g = (float(x) for x in p)
    if abs(s) <= tol and abs(g) <= tol:
        return StratumPoint(mu2, s, g, StratumLabel.THREAD)
    vals = critical_values(coeffs, mu2, s, s_tol=tol)
    scale = max(1.0, abs(g))
    if vals.size and np.min(np.abs(vals - g)) <= tol * scale:
        return StratumPoint(mu2, s, g, StratumLabel.SURFACE)
    if vals.size and g > vals[0]:
        return StratumPoint(mu2, s, g, StratumLabel.OPEN)
    return StratumPoint(mu2, s, g, StratumLabel.OUTSIDE)


# -- the top's relative equilibria ------------------------------------------------------

def _rotation_generator(u, v):
    e3 = np.array([0.0, 0.0, 1.0])
    return np.cross(e3, u), np.cross(e3, v)


def _rotation_matrix6():
    r = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    out = np.zeros((6, 6))
    out[:3, :3] = r
    out[3:, 3:] = r
    return out


def top_relative_equilibria(c: float, u3_grid: Iterable[float], Omega_grid: Iterable[float],
                            rho: float = 0.0, tol: float = 1e-9):
    """Steady precessions v = kappa u - Omega e3, kappa Omega = -c, over the grid.

    Rows come out in grid order (u3 outer, Omega inner).  Vertical states
    (u3 = 1) are classified by the Floquet matrix of P_a; there a = -c/Omega - Omega,
    so only |a| >= 2 sqrt(c) is reached (see ``thread_values``).  The others by the
    largest real part in the spectrum of the linearization in the frame
    rotating with the precession.
    """
    if not c > 0:
        raise ValueError("c must be > 0")
    out = []
    for u3 in u3_grid:
        u3 = float(u3)
        if not -1.0 <= u3 <= 1.0:
            raise ValueError(f"u3 must lie in [-1, 1], got {u3}")
        for om in Omega_grid:
            om = float(om)
            if om == 0.0:
                raise DegenerateInputError("Omega = 0 is a singularity of the steady-precession parametrization")
            kappa = -c / om
            a = kappa - om * u3
            b = kappa * u3 - om
            h = 0.5 * (kappa * kappa + om * om) + 2.0 * c * u3 + rho * a * a
            u = np.array([math.sqrt(max(0.0, 1.0 - u3 * u3)), 0.0, u3])
            v = kappa * u - om * np.array([0.0, 0.0, 1.0])
            du, dv = reduced_vector_field(ReducedTopState(u, v), TopParams(c=c, a=float(u @ v)))
            ru, rv = _rotation_generator(u, v)
            resid = float(max(np.max(np.abs(du - om * ru)), np.max(np.abs(dv - om * rv))))
            if u3 == 1.0:
                cls = classify_spectrum(linearize_at_Pa(TopParams(c=c, a=a)), tol).cls.value
            else:
                jac = reduced_jacobian(u, v, c) - om * _rotation_matrix6()
                ev = np.linalg.eigvals(jac)
                scale = max(1.0, float(np.max(np.abs(ev))))
                cls = "Hyperbolic" if np.max(np.abs(ev.real)) > 1e-6 * scale else "Elliptic"
            out.append(TopEMValue(a, b, h, u3, om, cls, resid))
    return out


def thread_values(c: float, a_values: Iterable[float], rho: float = 0.0, tol: float = 1e-9):
    """The vertical states P_a as TopEMValue rows, (b, h) = (a, a^2/2 + c + rho a^2).

    At u3 = 1 the steady-precession parametrization reaches only
    |a| >= 2 sqrt(c); this covers the whole thread, including the unstable
    part.
    """
    out = []
    for a in a_values:
        a = float(a)
        cls = classify_spectrum(linearize_at_Pa(TopParams(c=c, a=a)), tol).cls.value
        out.append(TopEMValue(a, a, 0.5 * a * a + c + rho * a * a, 1.0, math.nan, cls, 0.0))
    return out


SURFACE_CSV_COLUMNS = ("mu2", "M", "S", "G", "label")
TOP_CSV_COLUMNS = ("u3", "Omega", "a", "b", "h", "class")
