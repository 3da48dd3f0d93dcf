"""Linear stability of the vertical rotation and of the 1:-1 unfolding.

Coordinates on R^4 are z = (z1, z2, z3, z4) with symplectic form
dz1^dz3 + dz2^dz4, so J = [[0, I], [-I, 0]] and a matrix is
infinitesimally symplectic when J @ Omega is symmetric.

The linearization of the reduced top at P_a is returned in Darboux
coordinates built from the tangent displacements (du1, du2, dv1, dv2):

    z1 = du1,  z2 = -du2,  z3 = a/2 du2 - dv2,  z4 = a/2 du1 - dv1.

In these coordinates it coincides with the centralizer unfolding at
lambda0 + mu1 = a/2, mu2 = a^2/4 - c.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (BracketError, DimensionError, EstimationError, StructuralError)
from .models import TopParams, reduced_jacobian

__all__ = [
    "J4", "S_GENERATOR", "FloquetMatrix", "SpectrumClass", "SpectrumReport", "UnfoldingParams",
    "pa_tangent_jacobian", "darboux_transform", "linearize_at_Pa", "versal_unfolding",
    "spectrum", "classify_spectrum", "stabilization_threshold", "top_to_unfolding",
    "NondegeneracyReport", "nondegeneracy_check", "holder_exponent_estimate",
    "spectrum_scan", "SPECTRUM_CSV_COLUMNS",
]

J4 = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])

# Hamiltonian vector field of S = z1 z4 - z2 z3: rotates (z1, z2) and (z3, z4) together.
S_GENERATOR = np.array([[0.0, -1.0, 0.0, 0.0],
                        [1.0, 0.0, 0.0, 0.0],
                        [0.0, 0.0, 0.0, -1.0],
                        [0.0, 0.0, 1.0, 0.0]])

DEFAULT_TOL = 1e-9


def _symplectic_defect(m: np.ndarray) -> float:
    jm = J4 @ m
    return float(np.max(np.abs(jm - jm.T)))


@dataclass(frozen=True)
class FloquetMatrix:
    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.shape != (4, 4):
            raise StructuralError(f"Floquet matrix must be 4x4, got {m.shape}")
        scale = max(1.0, float(np.max(np.abs(m))))
        if _symplectic_defect(m) > 1e-12 * scale:
            raise StructuralError("matrix is not infinitesimally symplectic (J @ M not symmetric)")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


class SpectrumClass(str, enum.Enum):
    HYPERBOLIC_QUARTET = "HyperbolicQuartet"
    RESONANT_11 = "Resonant11"
    ELLIPTIC_PAIRS = "EllipticPairs"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: tuple
    cls: SpectrumClass
    normal_frequencies: tuple
    nilpotent: bool
    splitting: float  # min squared half-distance between eigenvalues


@dataclass(frozen=True)
class UnfoldingParams:
    lambda0: float
    mu1: float = 0.0
    mu2: float = 0.0

    def __post_init__(self):
        if not self.lambda0 + self.mu1 > 0:
            raise ValueError("need lambda0 + mu1 > 0")

    @property
    def frequency(self) -> float:
        return self.lambda0 + self.mu1


# -- matrices -------------------------------------------------------------------

def pa_tangent_jacobian(params: TopParams) -> np.ndarray:
    """Linearized reduced flow at P_a in the raw coordinates (du1, du2, dv1, dv2)."""
    u = np.array([0.0, 0.0, 1.0])
    v = np.array([0.0, 0.0, params.a])
    full = reduced_jacobian(u, v, params.c)
    idx = [0, 1, 3, 4]
    return full[np.ix_(idx, idx)]


def darboux_transform(a: float) -> np.ndarray:
    h = 0.5 * a
    return np.array([[1.0, 0.0, 0.0, 0.0],
                     [0.0, -1.0, 0.0, 0.0],
                     [0.0, h, 0.0, -1.0],
                     [h, 0.0, -1.0, 0.0]])


def linearize_at_Pa(params: TopParams) -> FloquetMatrix:
    """Floquet matrix of P_a in Darboux coordinates (see module docstring)."""
    t = darboux_transform(params.a)
    raw = pa_tangent_jacobian(params)
    return FloquetMatrix(t @ raw @ np.linalg.inv(t))


def versal_unfolding(p: UnfoldingParams) -> FloquetMatrix:
    w = p.lambda0 + p.mu1
    m2 = p.mu2
    return FloquetMatrix(np.array([[0.0, -w, 1.0, 0.0],
                                   [w, 0.0, 0.0, 1.0],
                                   [-m2, 0.0, 0.0, -w],
                                   [0.0, -m2, w, 0.0]]))


def top_to_unfolding(a: float, c: float) -> UnfoldingParams:
    """(lambda0, mu1, mu2) = (sqrt(c), a/2 - sqrt(c), a^2/4 - c).

    lambda0 is the frequency at the collision a = 2 sqrt(c), so mu1 and mu2
    both vanish there.
    """
    if not a > 0:
        raise ValueError("need a > 0")
    lam0 = math.sqrt(c)
    return UnfoldingParams(lam0, 0.5 * a - lam0, 0.25 * a * a - c)


# -- spectra --------------------------------------------------------------------

def _as_matrix(m) -> np.ndarray:
    if isinstance(m, FloquetMatrix):
        return m.entries
    return FloquetMatrix(m).entries


def _char_coeffs(m: np.ndarray):
    # Newton identities: lambda^4 + c1 lambda^3 + c2 lambda^2 + c3 lambda + c4
    p1 = np.trace(m)
    m2 = m @ m
    p2 = np.trace(m2)
    p3 = np.trace(m2 @ m)
    p4 = np.trace(m2 @ m2)
    e1 = p1
    e2 = (e1 * p1 - p2) / 2
    e3 = (e2 * p1 - e1 * p2 + p3) / 3
    e4 = (e3 * p1 - e2 * p2 + e1 * p3 - p4) / 4
    return -e1, e2, -e3, e4


def spectrum(m) -> np.ndarray:
    """Eigenvalues of a 4x4 infinitesimally symplectic matrix.

    Matrices commuting with the S-rotation are reduced to a complex 2x2
    problem and solved in closed form; otherwise the even characteristic
    polynomial lambda^4 + p lambda^2 + q is solved as a quadratic in
    lambda^2, with a companion-matrix root finder when odd coefficients do
    not vanish.  Both closed forms stay accurate at a 1:-1 collision, where
    a generic eigensolver loses half the digits.
    """
    m = np.asarray(m, dtype=float)
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m @ S_GENERATOR - S_GENERATOR @ m)) <= 1e-13 * scale:
        c = np.array([[m[0, 0] + 1j * m[1, 0], m[0, 2] + 1j * m[1, 2]],
                      [m[2, 0] + 1j * m[3, 0], m[2, 2] + 1j * m[3, 2]]])
        half = 0.5 * (c[0, 0] + c[1, 1])
        disc = (0.5 * (c[0, 0] - c[1, 1])) ** 2 + c[0, 1] * c[1, 0]
        r = cmath.sqrt(disc)
        s1, s2 = half + r, half - r
        eig = np.array([s1, s2, s1.conjugate(), s2.conjugate()])
    else:
        c1, c2, c3, c4 = _char_coeffs(m)
        if abs(c1) <= 1e-13 * scale and abs(c3) <= 1e-13 * scale ** 3:
            d = cmath.sqrt(c2 * c2 - 4 * c4)
            w1, w2 = (-c2 + d) / 2, (-c2 - d) / 2
            r1, r2 = cmath.sqrt(w1), cmath.sqrt(w2)
            eig = np.array([r1, -r1, r2, -r2])
        else:
            eig = np.roots([1.0, c1, c2, c3, c4]).astype(complex)
    return eig[np.lexsort((eig.real, eig.imag))]


def classify_spectrum(m, tol: float = DEFAULT_TOL) -> SpectrumReport:
    """Classify the eigenvalue configuration of a Floquet matrix.

    ``tol`` acts on the squared half-distance between eigenvalues (which for
    the unfolding equals |mu2|), on |Re lambda| for the imaginary-axis test
    and on |lambda|^2 for the zero test.
    """
    mat = _as_matrix(m)
    eig = spectrum(mat)
    diffs = [abs(eig[i] - eig[j]) ** 2 / 4 for i in range(4) for j in range(i + 1, 4)]
    splitting = float(min(diffs))
    on_axis = np.abs(eig.real) <= tol
    nilpotent = False
    if np.min(np.abs(eig)) ** 2 <= tol:
        cls = SpectrumClass.DEGENERATE
        freqs = ()
    elif splitting <= tol:
        i, j = min(((i, j) for i in range(4) for j in range(i + 1, 4)),
                   key=lambda ij: abs(eig[ij[0]] - eig[ij[1]]))
        lam = 0.5 * (eig[i] + eig[j])
        if abs(lam.real) <= tol:
            om = abs(lam.imag)
            prod = mat @ mat + om * om * np.eye(4)
            sv = np.linalg.svd(prod, compute_uv=False)
            nilpotent = bool(sv[0] > 1e-8 * np.linalg.norm(mat, 2) ** 2)
            cls = SpectrumClass.RESONANT_11 if nilpotent else SpectrumClass.DEGENERATE
            freqs = (om, om)
        else:
            cls = SpectrumClass.DEGENERATE
            freqs = ()
    elif np.all(on_axis):
        cls = SpectrumClass.ELLIPTIC_PAIRS
        freqs = tuple(sorted(float(x) for x in eig.imag if x > 0))
    elif np.all(~on_axis) and np.all(np.abs(eig.imag) > tol):
        cls = SpectrumClass.HYPERBOLIC_QUARTET
        freqs = ()
    else:
        cls = SpectrumClass.DEGENERATE
        freqs = ()
    return SpectrumReport(tuple(complex(x) for x in eig), cls, freqs, nilpotent, splitting)


def _collision_discriminant(a: float, c: float) -> float:
    """a^2 - 4c read off the complexified Floquet matrix of P_a."""
    m = linearize_at_Pa(TopParams(c=c, a=a)).entries
    c00 = m[0, 0] + 1j * m[1, 0]
    c11 = m[2, 2] + 1j * m[3, 2]
    disc = (0.5 * (c00 - c11)) ** 2 + (m[0, 2] + 1j * m[1, 2]) * (m[2, 0] + 1j * m[3, 0])
    return -4.0 * disc.real


def stabilization_threshold(c: float, bracket: Sequence[float] = None, tol: float = 1e-12) -> float:
    """Gyroscopic stabilization momentum a0, by bisection on the collision discriminant."""
    if bracket is None:
        bracket = (1e-6, 4.0 * math.sqrt(c) + 1.0)
    lo, hi = float(bracket[0]), float(bracket[1])
    if not 0 < lo < hi:
        raise BracketError(f"bracket must satisfy 0 < lo < hi, got {bracket!r}")
    dlo, dhi = _collision_discriminant(lo, c), _collision_discriminant(hi, c)
    if dlo == 0.0:
        return lo
    if dhi == 0.0:
        return hi
    if (dlo > 0) == (dhi > 0):
        raise BracketError(f"no hyperbolic/elliptic transition in [{lo}, {hi}] for c={c}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        dm = _collision_discriminant(mid, c)
        if dm == 0.0:
            return mid
        if (dm > 0) == (dhi > 0):
            hi, dhi = mid, dm
        else:
            lo, dlo = mid, dm
    return 0.5 * (lo + hi)


# -- non-degeneracy and Hoelder diagnostics ----------------------------------------

def _sp4_coords(m: np.ndarray) -> np.ndarray:
    a = -J4 @ m  # symmetric for m in sp(4)
    iu = np.triu_indices(4)
    return a[iu]


def _sp4_basis():
    basis = []
    for i in range(4):
        for j in range(i, 4):
            a = np.zeros((4, 4))
            a[i, j] = a[j, i] = 1.0
            basis.append(J4 @ a)
    return basis


@dataclass(frozen=True)
class NondegeneracyReport:
    submersive: bool
    versal: bool
    det_Omega: float
    orbit_codim: int
    rank_omega: int
    rank_combined: int


def _numerical_rank(mat: np.ndarray, rel: float) -> int:
    if mat.size == 0:
        return 0
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rel * max(sv[0], 1.0)))


def nondegeneracy_check(omega_map: Callable, Omega_map: Callable, nu0, probe_radius: float = 1e-4,
                        rank_tol: float = 1e-6) -> NondegeneracyReport:
    """Submersivity of the internal-frequency map and versality of the Floquet family.

    Derivatives are central differences with step ``probe_radius``.  The
    Floquet derivative is projected onto a complement of the tangent space
    of the similarity orbit {[X, Omega0] : X in sp(4)}.
    """
    nu0 = np.atleast_1d(np.asarray(nu0, dtype=float))
    p = nu0.size
    w0 = np.atleast_1d(np.asarray(omega_map(nu0), dtype=float))
    m = w0.size
    if p < m + 2:
        raise DimensionError(f"need at least m + 2 = {m + 2} parameters, got p = {p}")
    om0 = _as_matrix(Omega_map(nu0))
    d_omega = np.empty((m, p))
    d_floq = np.empty((10, p))
    for k in range(p):
        e = np.zeros(p)
        e[k] = probe_radius
        d_omega[:, k] = (np.atleast_1d(omega_map(nu0 + e)) - np.atleast_1d(omega_map(nu0 - e))) / (2 * probe_radius)
        d_floq[:, k] = (_sp4_coords(np.asarray(Omega_map(nu0 + e), dtype=float))
                        - _sp4_coords(np.asarray(Omega_map(nu0 - e), dtype=float))) / (2 * probe_radius)
    tangent = np.column_stack([_sp4_coords(x @ om0 - om0 @ x) for x in _sp4_basis()])
    u, sv, _ = np.linalg.svd(tangent)
    r = int(np.sum(sv > 1e-10 * max(sv[0], 1.0))) if sv.size else 0
    complement = u[:, r:]
    codim = complement.shape[1]
    projected = complement.T @ d_floq
    rank_omega = _numerical_rank(d_omega, rank_tol)
    combined = np.vstack([d_omega, projected])
    rank_combined = _numerical_rank(combined, rank_tol)
    return NondegeneracyReport(
        submersive=rank_omega == m,
        versal=rank_combined == m + codim,
        det_Omega=float(np.linalg.det(om0)),
        orbit_codim=codim,
        rank_omega=rank_omega,
        rank_combined=rank_combined,
    )


def _im_distance(spec_a, spec_b) -> float:
    ia = np.imag(spec_a)
    ib = np.imag(spec_b)
    return float(max(np.min(np.abs(ib - x)) for x in ia))


def holder_exponent_estimate(matrix_family: Callable, nu0, radii: Sequence[float]) -> float:
    """Least-squares exponent theta in  max |Im lambda - Im lambda~| ~ r^theta.

    For each radius the family is probed at nu0 +- r along every coordinate
    axis.  Returns ``math.inf`` when the spectrum does not move at all.
    """
    radii = np.asarray(sorted(radii, reverse=True), dtype=float)
    if radii.size < 4 or np.any(radii <= 0) or radii[0] / radii[-1] < 100:
        raise EstimationError("need >= 4 positive radii spanning >= 2 decades")
    nu0 = np.atleast_1d(np.asarray(nu0, dtype=float))
    base = spectrum(np.asarray(matrix_family(nu0 if nu0.size > 1 else nu0[0]), dtype=float))
    dists = []
    for r in radii:
        worst = 0.0
        for k in range(nu0.size):
            for sign in (1.0, -1.0):
                nu = nu0.copy()
                nu[k] += sign * r
                sp = spectrum(np.asarray(matrix_family(nu if nu.size > 1 else nu[0]), dtype=float))
                worst = max(worst, _im_distance(sp, base))
        dists.append(worst)
    dists = np.asarray(dists)
    if np.all(dists == 0.0):
        return math.inf
    if np.any(dists == 0.0):
        raise EstimationError("spectral distance vanishes at some radii but not others")
    slope, _ = np.polyfit(np.log(radii), np.log(dists), 1)
    return float(slope)


# -- scans ----------------------------------------------------------------------

SPECTRUM_CSV_COLUMNS = ("a", "c", "mu2", "class", "a0",
                        "re1", "re2", "re3", "re4", "im1", "im2", "im3", "im4")


def spectrum_scan(a_values, c_values, tol: float = DEFAULT_TOL):
    """Rows (a, c, mu2, class, a0, re1..re4, im1..im4) over the (a, c) grid."""
    rows = []
    for c in c_values:
        a0 = stabilization_threshold(float(c))
        for a in a_values:
            rep = classify_spectrum(linearize_at_Pa(TopParams(c=float(c), a=float(a))), tol)
            ev = np.asarray(rep.eigenvalues)
            rows.append([float(a), float(c), 0.25 * a * a - c, rep.cls.value, a0,
                         *map(float, ev.real), *map(float, ev.imag)])
    return rows
