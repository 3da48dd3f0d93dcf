"""Polynomial Hamiltonians in 1:-1 resonance and their S^1-normalization.

Polynomials live on R^4 with the Poisson bracket

    {F, G} = sum_j F_{z_j} G_{z_{j+2}} - F_{z_{j+2}} G_{z_j},

so that F o phi^t_W = exp(t ad_W) F with ad_W F = {F, W}.  The quadratic
invariants are

    S = z1 z4 - z2 z3,  M = (z1^2 + z2^2)/2,  N = (z3^2 + z4^2)/2,
    Z = z1 z3 + z2 z4,  with  S^2 + Z^2 = 4 M N.

The flow of S rotates w1 = z1 + i z2 and w2 = z3 + i z4 by the same phase,
so averaging keeps the monomials w1^a conj(w1)^b w2^c conj(w2)^d with
a - b + c - d = 0.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import CapacityError, NumericError, SmallDivisorError, StructuralError
from .linstab import J4, UnfoldingParams

__all__ = [
    "DEFAULT_MAX_DEGREE", "PolyHamiltonian", "poisson_bracket", "lie_transform",
    "S_POLY", "M_POLY", "N_POLY", "Z_POLY", "QuadraticInvariants", "invariants", "z_invariant",
    "s1_average", "NormalFormCoefficients", "Criticality", "birkhoff_normalize",
    "supercriticality_test", "evaluate_Gint", "gint_polynomial", "quadratic_part",
    "generator_flow", "monomials",
]

DEFAULT_MAX_DEGREE = 6
_CHOP = 1e-15


def monomials(degree: int):
    """Exponent tuples of total degree ``degree`` on four variables, in a fixed order."""
    out = []
    for combo in itertools.combinations_with_replacement(range(4), degree):
        e = [0, 0, 0, 0]
        for j in combo:
            e[j] += 1
        out.append(tuple(e))
    return out


class PolyHamiltonian:
    """Sparse real polynomial in z1..z4 with a total-degree cap."""

    __slots__ = ("_terms", "max_degree", "_compiled")

    def __init__(self, terms: Mapping | None = None, max_degree: int = DEFAULT_MAX_DEGREE):
        self.max_degree = int(max_degree)
        clean = {}
        for k, c in (terms or {}).items():
            k = tuple(int(e) for e in k)
            if len(k) != 4 or min(k) < 0:
                raise ValueError(f"bad exponent {k!r}")
            if sum(k) > self.max_degree:
                raise CapacityError(f"monomial {k} exceeds degree cap {self.max_degree}")
            c = float(c)
            if c != 0.0:
                clean[k] = clean.get(k, 0.0) + c
        self._terms = {k: c for k, c in clean.items() if c != 0.0}
        self._compiled = None

    # construction helpers
    @classmethod
    def monomial(cls, exps, coeff: float = 1.0, max_degree: int = DEFAULT_MAX_DEGREE):
        return cls({tuple(exps): coeff}, max_degree)

    @classmethod
    def from_vector(cls, degree: int, vec, max_degree: int = DEFAULT_MAX_DEGREE):
        return cls({k: c for k, c in zip(monomials(degree), vec)}, max_degree)

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    @property
    def degree(self) -> int:
        return max((sum(k) for k in self._terms), default=-1)

    def __len__(self):
        return len(self._terms)

    def __repr__(self):
        return f"PolyHamiltonian({len(self._terms)} terms, degree {self.degree})"

    def _new(self, terms):
        return PolyHamiltonian(terms, self.max_degree)

    def homogeneous(self, d: int) -> "PolyHamiltonian":
        return self._new({k: c for k, c in self._terms.items() if sum(k) == d})

    def truncate(self, d: int) -> "PolyHamiltonian":
        return self._new({k: c for k, c in self._terms.items() if sum(k) <= d})

    def vector(self, d: int) -> np.ndarray:
        """Coefficients of the degree-``d`` part in the order of ``monomials(d)``."""
        return np.array([self._terms.get(k, 0.0) for k in monomials(d)])

    def chop(self, tol: float = _CHOP) -> "PolyHamiltonian":
        scale = max((abs(c) for c in self._terms.values()), default=0.0)
        return self._new({k: c for k, c in self._terms.items() if abs(c) > tol * max(scale, 1.0)})

    def max_abs(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    # arithmetic
    def __add__(self, other):
        if not isinstance(other, PolyHamiltonian):
            return NotImplemented
        t = dict(self._terms)
        for k, c in other._terms.items():
            t[k] = t.get(k, 0.0) + c
        return PolyHamiltonian(t, max(self.max_degree, other.max_degree))

    def __neg__(self):
        return self._new({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, PolyHamiltonian):
            return self.multiply(other)
        return self._new({k: float(other) * c for k, c in self._terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self * (1.0 / float(s))

    def multiply(self, other: "PolyHamiltonian", truncate: int | None = None) -> "PolyHamiltonian":
        cap = max(self.max_degree, other.max_degree)
        t = {}
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                k = (k1[0] + k2[0], k1[1] + k2[1], k1[2] + k2[2], k1[3] + k2[3])
                if truncate is not None and sum(k) > truncate:
                    continue
                t[k] = t.get(k, 0.0) + c1 * c2
        return PolyHamiltonian(t, cap)

    def diff(self, j: int) -> "PolyHamiltonian":
        t = {}
        for k, c in self._terms.items():
            if k[j]:
                kk = list(k)
                kk[j] -= 1
                t[tuple(kk)] = c * k[j]
        return self._new(t)

    def scale_variables(self, s: float) -> "PolyHamiltonian":
        """The polynomial z -> P(s z)."""
        return self._new({k: c * s ** sum(k) for k, c in self._terms.items()})

    # evaluation
    def _compile(self):
        if self._compiled is None:
            if self._terms:
                e = np.array(list(self._terms.keys()), dtype=np.int64)
                c = np.array(list(self._terms.values()))
            else:
                e = np.zeros((0, 4), dtype=np.int64)
                c = np.zeros(0)
            self._compiled = (e, c)
        return self._compiled

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        e, c = self._compile()
        if c.size == 0:
            return np.zeros(z.shape[:-1]) if z.ndim > 1 else 0.0
        mons = np.prod(z[..., None, :] ** e, axis=-1)
        out = mons @ c
        return float(out) if z.ndim == 1 else out

    def gradient(self, z):
        z = np.asarray(z, dtype=float)
        return np.stack([np.asarray(self.diff(j)(z)) for j in range(4)], axis=-1)

    def hessian(self, z):
        z = np.asarray(z, dtype=float)
        d = [self.diff(j) for j in range(4)]
        rows = [np.stack([np.asarray(d[i].diff(j)(z)) for j in range(4)], axis=-1) for i in range(4)]
        return np.stack(rows, axis=-2)


def poisson_bracket(f: PolyHamiltonian, g: PolyHamiltonian, truncate: int | None = None) -> PolyHamiltonian:
    out = PolyHamiltonian({}, max(f.max_degree, g.max_degree))
    for j in range(2):
        out = out + f.diff(j).multiply(g.diff(j + 2), truncate)
        out = out - f.diff(j + 2).multiply(g.diff(j), truncate)
    return out


def lie_transform(h: PolyHamiltonian, w: PolyHamiltonian, max_degree: int | None = None) -> PolyHamiltonian:
    """exp(ad_W) H = H o phi^1_W, truncated at ``max_degree``.

    ``w`` must have no terms of degree below 3, so the series terminates.
    """
    if w.terms and min(sum(k) for k in w.terms) < 3:
        raise ValueError("generator must start at degree >= 3")
    cap = h.max_degree if max_degree is None else int(max_degree)
    result = h.truncate(cap)
    term = result
    k = 1
    while True:
        term = poisson_bracket(term, w, truncate=cap) / k
        if not len(term):
            break
        result = result + term
        k += 1
    return result


# -- invariants -------------------------------------------------------------------

S_POLY = PolyHamiltonian({(1, 0, 0, 1): 1.0, (0, 1, 1, 0): -1.0})
M_POLY = PolyHamiltonian({(2, 0, 0, 0): 0.5, (0, 2, 0, 0): 0.5})
N_POLY = PolyHamiltonian({(0, 0, 2, 0): 0.5, (0, 0, 0, 2): 0.5})
Z_POLY = PolyHamiltonian({(1, 0, 1, 0): 1.0, (0, 1, 0, 1): 1.0})


@dataclass(frozen=True)
class QuadraticInvariants:
    S: float
    M: float
    N: float


def _split(z):
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != 4:
        raise ValueError("points must have 4 coordinates")
    return z[..., 0], z[..., 1], z[..., 2], z[..., 3]


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def invariants(z) -> QuadraticInvariants:
    """(S, M, N) at a point, or arrays of them for z of shape (..., 4)."""
    z1, z2, z3, z4 = _split(z)
    return QuadraticInvariants(_out(z1 * z4 - z2 * z3), _out(0.5 * (z1 * z1 + z2 * z2)),
                               _out(0.5 * (z3 * z3 + z4 * z4)))


def z_invariant(z):
    z1, z2, z3, z4 = _split(z)
    return _out(z1 * z3 + z2 * z4)


# -- S^1 averaging ------------------------------------------------------------------

@lru_cache(maxsize=None)
def _to_w(k1: int, k2: int) -> tuple:
    """z1^k1 z2^k2 as {(p, q): coeff} over w^p conj(w)^q."""
    out = {}
    for a in range(k1 + 1):
        ca = math.comb(k1, a) / 2.0 ** k1
        for b in range(k2 + 1):
            cb = math.comb(k2, b) * (-1) ** (k2 - b) / (2j) ** k2
            key = (a + b, k1 + k2 - a - b)
            out[key] = out.get(key, 0.0) + ca * cb
    return tuple(out.items())


@lru_cache(maxsize=None)
def _from_w(p: int, q: int) -> tuple:
    """w^p conj(w)^q as {(e1, e2): coeff} over z1^e1 z2^e2."""
    out = {}
    for a in range(p + 1):
        for b in range(q + 1):
            c = math.comb(p, a) * math.comb(q, b) * (1j) ** (p - a) * (-1j) ** (q - b)
            key = (a + b, p + q - a - b)
            out[key] = out.get(key, 0.0) + c
    return tuple(out.items())


@lru_cache(maxsize=None)
def _average_monomial(k: tuple) -> tuple:
    acc = {}
    for (p1, q1), c1 in _to_w(k[0], k[1]):
        for (p2, q2), c2 in _to_w(k[2], k[3]):
            if p1 - q1 + p2 - q2 != 0:
                continue
            c = c1 * c2
            for (e1, e2), d1 in _from_w(p1, q1):
                for (e3, e4), d2 in _from_w(p2, q2):
                    key = (e1, e2, e3, e4)
                    acc[key] = acc.get(key, 0.0) + c * d1 * d2
    return tuple((kk, v.real) for kk, v in acc.items() if abs(v) > 1e-15)


def s1_average(h: PolyHamiltonian) -> PolyHamiltonian:
    """Average of H over the flow of S; a projection onto {F : {F, S} = 0}."""
    if h.degree > h.max_degree:
        raise CapacityError(f"degree {h.degree} exceeds cap {h.max_degree}")
    acc = {}
    for k, c in h.terms.items():
        for kk, v in _average_monomial(k):
            acc[kk] = acc.get(kk, 0.0) + c * v
    return PolyHamiltonian(acc, h.max_degree).chop()


@lru_cache(maxsize=None)
def _average_matrix(d: int) -> np.ndarray:
    mons = monomials(d)
    idx = {k: i for i, k in enumerate(mons)}
    a = np.zeros((len(mons), len(mons)))
    for j, k in enumerate(mons):
        for kk, v in _average_monomial(k):
            a[idx[kk], j] += v
    return a


# -- normal form ----------------------------------------------------------------------

class Criticality(str, enum.Enum):
    SUPERCRITICAL = "Supercritical"
    SUBCRITICAL = "Subcritical"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class NormalFormCoefficients:
    lambda0: float
    mu1: float
    mu2: float
    b: float
    c1: float
    c2: float
    omega: tuple = ()
    extras: Mapping = field(default_factory=dict)

    @property
    def frequency(self) -> float:
        return self.lambda0 + self.mu1

    @property
    def supercritical(self) -> bool:
        return self.b > 0

    def to_json(self) -> dict:
        return {"lambda0": self.lambda0, "mu1": self.mu1, "mu2": self.mu2, "b": self.b,
                "c1": self.c1, "c2": self.c2, "omega": list(self.omega),
                "supercritical": self.supercritical}


def quadratic_part(p: UnfoldingParams, max_degree: int = DEFAULT_MAX_DEGREE) -> PolyHamiltonian:
    """Hamiltonian (lambda0 + mu1) S + N + mu2 M of the unfolding matrix."""
    h = p.frequency * S_POLY + N_POLY + p.mu2 * M_POLY
    return PolyHamiltonian(h.terms, max_degree)


def gint_polynomial(c: NormalFormCoefficients, max_degree: int = DEFAULT_MAX_DEGREE) -> PolyHamiltonian:
    s, m, n = S_POLY, M_POLY, N_POLY
    h = (c.frequency * s + n + c.mu2 * m + 2 * c.b * m.multiply(m)
         + 2 * c.c1 * s.multiply(m) + c.c2 * s.multiply(s))
    return PolyHamiltonian(h.terms, max_degree)


def _quartic_basis():
    s, m, n, z = S_POLY, M_POLY, N_POLY, Z_POLY
    names = ("SS", "SM", "MM", "SN", "MN", "NN", "SZ", "MZ", "NZ")
    polys = (s.multiply(s), s.multiply(m), m.multiply(m), s.multiply(n), m.multiply(n),
             n.multiply(n), s.multiply(z), m.multiply(z), n.multiply(z))
    return names, np.column_stack([p.vector(4) for p in polys])


def _ad_matrix(h2: PolyHamiltonian, d: int) -> np.ndarray:
    """Matrix of W -> {H2, W} on homogeneous degree-d polynomials."""
    mons = monomials(d)
    return np.column_stack([poisson_bracket(h2, PolyHamiltonian.monomial(k, 1.0, h2.max_degree)).vector(d)
                            for k in mons])


def _solve_homological(h2: PolyHamiltonian, rhs: np.ndarray, d: int, cond_max: float) -> np.ndarray:
    # {H2, W} = rhs on the non-invariant subspace (ad_H2 commutes with averaging)
    proj = np.eye(len(rhs)) - _average_matrix(d)
    u, sv, _ = np.linalg.svd(proj)
    q = u[:, : int(np.sum(sv > 1e-10))]
    a = _ad_matrix(h2, d) @ q
    sa = np.linalg.svd(a, compute_uv=False)
    if sa[-1] <= 0 or sa[0] / sa[-1] > cond_max:
        raise SmallDivisorError(f"homological operator ill-conditioned at degree {d} "
                                f"(cond {sa[0] / max(sa[-1], 1e-300):.3g})")
    y, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    return q @ y


def birkhoff_normalize(h: PolyHamiltonian, p: UnfoldingParams, order: int = 4, omega: Sequence = (),
                       quad_tol: float = 1e-10, cond_max: float = 1e10):
    """Normalize H through degree 4 with respect to the S^1 action of S.

    Returns ``(coeffs, generator)``.  The time-1 flow of ``generator`` (see
    ``generator_flow``) takes H to a Hamiltonian whose degree <= 4 part is
    S-invariant; its quartic part is expanded in the invariants, and
    ``coeffs`` holds the G_int coefficients.  The remaining invariant
    quartics (SN, MN, N^2, SZ, MZ, NZ) are reported in ``coeffs.extras``.
    """
    if order != 4:
        raise ValueError("only order 4 is supported")
    h2_expected = quadratic_part(p, h.max_degree)
    h2 = h.homogeneous(2)
    if (h2 - h2_expected).max_abs() > quad_tol * max(1.0, h2_expected.max_abs()):
        raise StructuralError("quadratic part does not match the unfolding (lambda0 + mu1) S + N + mu2 M")
    if h.homogeneous(0).max_abs() or h.homogeneous(1).max_abs():
        raise StructuralError("H must start at degree 2")
    cap = h.max_degree
    current = h
    generator = PolyHamiltonian({}, cap)
    for d in (3, 4):
        part = current.homogeneous(d)
        noninv = part.vector(d) - _average_matrix(d) @ part.vector(d)
        if np.max(np.abs(noninv), initial=0.0) <= 1e-14 * max(1.0, part.max_abs()):
            continue
        wd = PolyHamiltonian.from_vector(d, _solve_homological(h2, -noninv, d, cond_max), cap).chop()
        current = lie_transform(current, wd, cap)
        generator = generator + wd
    quartic = s1_average(current.homogeneous(4)).vector(4)
    names, basis = _quartic_basis()
    coef, *_ = np.linalg.lstsq(basis, quartic, rcond=None)
    resid = float(np.max(np.abs(basis @ coef - quartic), initial=0.0))
    cmap = dict(zip(names, map(float, coef)))
    extras = {k: v for k, v in cmap.items() if k not in ("SS", "SM", "MM")}
    extras["fit_residual"] = resid
    coeffs = NormalFormCoefficients(
        lambda0=p.lambda0, mu1=p.mu1, mu2=p.mu2,
        b=0.5 * cmap["MM"], c1=0.5 * cmap["SM"], c2=cmap["SS"],
        omega=tuple(float(x) for x in omega), extras=extras)
    return coeffs, generator


def supercriticality_test(c: NormalFormCoefficients, tol: float = 1e-12) -> Criticality:
    if c.b > tol:
        return Criticality.SUPERCRITICAL
    if c.b < -tol:
        return Criticality.SUBCRITICAL
    return Criticality.DEGENERATE


def evaluate_Gint(y, z, c: NormalFormCoefficients):
    """<omega, y> + (lambda0 + mu1) S + N + mu2 M + 2b M^2 + 2c1 S M + c2 S^2.

    ``z`` may be a single 4-vector or an array of shape (..., 4).
    """
    z = np.asarray(z, dtype=float)
    z1, z2, z3, z4 = z[..., 0], z[..., 1], z[..., 2], z[..., 3]
    s = z1 * z4 - z2 * z3
    m = 0.5 * (z1 * z1 + z2 * z2)
    n = 0.5 * (z3 * z3 + z4 * z4)
    val = c.frequency * s + n + c.mu2 * m + 2 * c.b * m * m + 2 * c.c1 * s * m + c.c2 * s * s
    om = np.asarray(c.omega, dtype=float)
    if om.size:
        val = val + np.asarray(y, dtype=float) @ om
    return float(val) if np.ndim(val) == 0 else val


def generator_flow(w: PolyHamiltonian, z0, t: float = 1.0, jacobian: bool = False,
                   rtol: float = 1e-13, atol: float = 1e-15):
    """Time-t flow of the Hamiltonian W at the points ``z0`` (shape (K, 4)).

    With ``jacobian=True`` also integrates the variational equations and
    returns ``(z, D)`` with D of shape (K, 4, 4).
    """
    z0 = np.atleast_2d(np.asarray(z0, dtype=float))
    k = z0.shape[0]
    dw = [w.diff(j) for j in range(4)]
    hw = [[dw[i].diff(j) for j in range(4)] for i in range(4)]

    def rhs(_t, y):
        z = y[: 4 * k].reshape(k, 4)
        g = np.stack([np.atleast_1d(d(z)) for d in dw], axis=-1)
        dz = g @ J4.T
        if not jacobian:
            return dz.ravel()
        hess = np.stack([np.stack([np.atleast_1d(hw[i][j](z)) for j in range(4)], -1) for i in range(4)], -2)
        y_mat = y[4 * k:].reshape(k, 4, 4)
        dy = np.einsum("ab,kbc,kcd->kad", J4, hess, y_mat)
        return np.concatenate([dz.ravel(), dy.ravel()])

    y0 = z0.ravel()
    if jacobian:
        y0 = np.concatenate([y0, np.tile(np.eye(4), (k, 1, 1)).ravel()])
    sol = solve_ivp(rhs, (0.0, t), y0, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise NumericError(f"generator flow failed: {sol.message}")
    yt = sol.y[:, -1]
    z = yt[: 4 * k].reshape(k, 4)
    if jacobian:
        return z, yt[4 * k:].reshape(k, 4, 4)
    return z
