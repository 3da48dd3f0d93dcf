import math

import numpy as np
import pytest

from lagtop.errors import DegenerateInputError, UnsupportedCaseError
from lagtop.linstab import top_to_unfolding
from lagtop.normalform import NormalFormCoefficients, evaluate_Gint
from lagtop.strata import (StratumLabel, classify_value, critical_surface, critical_values, elliptic_family,
                           gint_on_slice, realize_point, thread_values, top_relative_equilibria)

from oracles import lagrange_critical_S


def C(mu2=0.0, b=1.0, c1=0.0, c2=0.0, lam=1.0):
    return NormalFormCoefficients(lam, 0.0, mu2, b, c1, c2)


def test_elliptic_family_examples():
    assert elliptic_family(1, 0, 0, 1) == pytest.approx((-2.0, 2.0), abs=1e-15)
    assert elliptic_family(1, 0, 0, 0) == (0.0,)
    assert elliptic_family(1, 0, 1, 1) == pytest.approx((-2 * math.sqrt(2), 2 * math.sqrt(2)), abs=1e-15)
    assert elliptic_family(1, 0, -2, 1) == ()
    with pytest.raises(ValueError):
        elliptic_family(1, 0, 0, -1)


def test_elliptic_family_residual(rng):
    for _ in range(1000):
        b, c1, mu2, M = rng.uniform(0.05, 2), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0, 2)
        for S in elliptic_family(b, c1, mu2, M):
            res = S * S - 4 * b * M ** 3 - 4 * mu2 * M * M - 4 * c1 * S * M * M
            assert abs(res) < 1e-10 * max(1.0, S * S)


def test_swallowtail_sheet():
    # mu2 < 0: just above the radicand root both S roots share a sign
    b, c1, mu2 = 1.0, 0.3, -0.2
    M = next(M for M in np.linspace(1e-3, 1, 100000) if c1 * c1 * M * M + b * M + mu2 > 0)
    lo, hi = elliptic_family(b, c1, mu2, M)
    assert lo * hi > 0


def test_surface_thread_row():
    pts = critical_surface(C(mu2=0.3), [0.0, 0.5])
    assert pts[0].label is StratumLabel.THREAD and (pts[0].s, pts[0].g) == (0.0, 0.0)
    assert all(p.label is StratumLabel.SURFACE for p in pts[1:])


def test_surface_matches_lagrange_oracle(rng):
    for _ in range(100):
        co = C(mu2=rng.uniform(0.01, 1), b=rng.uniform(0.1, 2), c1=rng.uniform(-1, 1), c2=rng.uniform(-1, 1))
        M = rng.uniform(0.05, 2)
        found = sorted(p.s for p in critical_surface(co, [M]))
        expect, rank = lagrange_critical_S(co, M)
        assert rank < 1e-8
        np.testing.assert_allclose(found, expect, atol=1e-8)


def test_surface_values_are_gint(rng):
    co = C(mu2=0.4, b=0.8, c1=0.2, c2=-0.1)
    for p in critical_surface(co, np.linspace(0.1, 1, 10)):
        z = realize_point(p.M, p.s)
        assert evaluate_Gint(None, z, co) == pytest.approx(p.g, abs=1e-12)
        assert gint_on_slice(co, co.mu2, p.M, p.s) == pytest.approx(p.g, abs=1e-15)


def test_subcritical_rejected():
    with pytest.raises(UnsupportedCaseError):
        critical_surface(C(b=-1.0), [0.5])
    with pytest.raises(UnsupportedCaseError):
        classify_value((0.0, 0.1, 0.1), C(b=-1.0))


def test_classify_examples():
    co = C(mu2=1.0)
    assert classify_value((1.0, 0.0, 0.0), co).label is StratumLabel.THREAD
    p = [q for q in critical_surface(co, [1.0]) if q.s > 0][0]
    assert p.s == pytest.approx(4 * math.sqrt(1.25), abs=1e-12)
    assert classify_value((1.0, p.s, p.g), co).label is StratumLabel.SURFACE
    assert classify_value((1.0, 0.0, 10.0), co).label is StratumLabel.OPEN
    assert classify_value((1.0, 0.0, -1.0), co).label is StratumLabel.OUTSIDE


@pytest.mark.parametrize("mu2", [-0.5, 0.5])
def test_image_points_never_outside(mu2, rng):
    # values actually attained by (S, G_int), including points near the thread
    co = C(mu2=mu2, b=1.0, c1=0.1, c2=0.05)
    labels = set()
    for scale in (1e-4, 1e-2, 0.3):
        z = scale * rng.normal(size=(300, 4))
        s = z[:, 0] * z[:, 3] - z[:, 1] * z[:, 2]
        g = evaluate_Gint(None, z, co)
        for si, gi in zip(s, g):
            lab = classify_value((mu2, si, gi), co, tol=1e-12).label
            labels.add(lab)
            assert lab is not StratumLabel.OUTSIDE


def test_critical_values_include_thread():
    vals = critical_values(C(mu2=-0.5, c1=0.1), -0.5, 0.0, s_tol=1e-9)
    assert 0.0 in vals


def test_top_thread_identity():
    for c in (0.25, 1.0, 4.0):
        a0 = 2 * math.sqrt(c)
        om = np.linspace(-3, 3, 13)
        om = om[om != 0]
        for e in top_relative_equilibria(c, [1.0], om):
            assert abs(e.b - e.a) <= 1e-12 * max(1, abs(e.a))
            assert abs(e.h - (0.5 * e.a ** 2 + c)) <= 1e-12 * max(1, e.h)
            if abs(abs(e.a) - a0) > 1e-9:
                assert e.cls == ("EllipticPairs" if abs(e.a) > a0 else "HyperbolicQuartet")


def test_top_residual_and_errors():
    em = top_relative_equilibria(1.0, np.linspace(-0.9, 1, 8), [-2.0, -0.7, 0.4, 1.5])
    assert max(e.residual for e in em) < 1e-9
    with pytest.raises(DegenerateInputError):
        top_relative_equilibria(1.0, [0.5], [0.0])


def test_thread_values_flip():
    c = 1.0
    rows = thread_values(c, [1.0, 1.5, 2.5, 3.0])
    assert [r.cls for r in rows] == ["HyperbolicQuartet"] * 2 + ["EllipticPairs"] * 2
    assert all(r.b == r.a and r.h == 0.5 * r.a ** 2 + c for r in rows)


def test_precession_family_reaches_thread_only_when_stable():
    c = 1.0
    om = np.linspace(-4, -0.25, 16)
    a = np.array([e.a for e in top_relative_equilibria(c, [1.0], om)])
    assert np.all(np.abs(a) >= 2 * math.sqrt(c) - 1e-12)


def test_strata_flip_matches_top_flip():
    # the top's class at P_a and whether the normal-form surface reaches the
    # thread (radicand positive as M -> 0+) change at the same a
    c = 1.3

    def top_stable(a):
        return thread_values(c, [a])[0].cls == "EllipticPairs"

    def surface_touches_thread(a):
        return len(elliptic_family(1.0, 0.1, top_to_unfolding(a, c).mu2, 1e-300)) > 0

    def flip(pred, lo, hi):
        plo = pred(lo)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if pred(mid) == plo:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    a_top = flip(top_stable, 1.0, 4.0)
    a_surf = flip(surface_touches_thread, 1.0, 4.0)
    assert abs(a_top - a_surf) < 1e-6
    assert abs(a_top - 2 * math.sqrt(c)) < 1e-6
