import math
import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lagtop.errors import BracketError, DimensionError, EstimationError, StructuralError
from lagtop.linstab import (FloquetMatrix, SpectrumClass, UnfoldingParams, classify_spectrum,
                            holder_exponent_estimate, linearize_at_Pa, nondegeneracy_check, spectrum,
                            spectrum_scan, stabilization_threshold, top_to_unfolding, versal_unfolding)
from lagtop.models import TopParams

H, R, E, D = (SpectrumClass.HYPERBOLIC_QUARTET, SpectrumClass.RESONANT_11, SpectrumClass.ELLIPTIC_PAIRS,
              SpectrumClass.DEGENERATE)


def _sorted(ev):
    return np.sort_complex(np.round(np.asarray(ev), 14))


def test_top_examples():
    ev = spectrum(linearize_at_Pa(TopParams(c=1.0, a=1.0)))
    expect = [s1 * math.sqrt(3) / 2 + s2 * 0.5j for s1 in (1, -1) for s2 in (1, -1)]
    np.testing.assert_allclose(_sorted(ev), _sorted(expect), atol=1e-12)
    assert classify_spectrum(linearize_at_Pa(TopParams(c=1.0, a=1.0))).cls is H

    rep = classify_spectrum(linearize_at_Pa(TopParams(c=1.0, a=2.0)))
    assert rep.cls is R and rep.nilpotent
    np.testing.assert_allclose(_sorted(rep.eigenvalues), _sorted([1j, 1j, -1j, -1j]), atol=1e-7)

    ev = spectrum(linearize_at_Pa(TopParams(c=1.0, a=3.0)))
    w = [(3 - math.sqrt(5)) / 2, (3 + math.sqrt(5)) / 2]
    np.testing.assert_allclose(_sorted(ev), _sorted([s * 1j * x for x in w for s in (1, -1)]), atol=1e-12)


def test_versal_examples():
    m = np.asarray(versal_unfolding(UnfoldingParams(1.0)))
    np.testing.assert_array_equal(m, [[0, -1, 1, 0], [1, 0, 0, 1], [0, 0, 0, -1], [0, 0, 1, 0]])
    ev = spectrum(versal_unfolding(UnfoldingParams(1.0, 0.0, 0.25)))
    np.testing.assert_allclose(_sorted(ev), _sorted([0.5j, -0.5j, 1.5j, -1.5j]), atol=1e-14)
    ev = spectrum(versal_unfolding(UnfoldingParams(1.0, 0.0, -0.25)))
    np.testing.assert_allclose(_sorted(ev), _sorted([0.5 + 1j, 0.5 - 1j, -0.5 + 1j, -0.5 - 1j]), atol=1e-14)


def test_classify_examples():
    rep = classify_spectrum(versal_unfolding(UnfoldingParams(1.0, 0.0, 0.25)))
    assert rep.cls is E and rep.normal_frequencies == pytest.approx((0.5, 1.5), abs=1e-14)
    rep = classify_spectrum(versal_unfolding(UnfoldingParams(1.0)))
    assert rep.cls is R and rep.nilpotent
    assert classify_spectrum(np.zeros((4, 4))).cls is D


def test_structure_checks():
    with pytest.raises(StructuralError):
        FloquetMatrix(np.eye(3))
    with pytest.raises(StructuralError):
        FloquetMatrix(np.eye(4))


@given(st.floats(-3, 3), st.floats(0.05, 3), st.floats(-2, 2))
def test_spectral_symmetry(mu1, lam0, mu2):
    if lam0 + mu1 <= 0.01:
        return
    ev = spectrum(versal_unfolding(UnfoldingParams(lam0, mu1, mu2)))
    for image in (-ev, np.conj(ev)):
        assert max(np.min(np.abs(ev - x)) for x in image) < 1e-10


@given(st.floats(0.1, 6), st.floats(0.05, 4))
def test_top_spectrum_symmetry(a, c):
    ev = spectrum(linearize_at_Pa(TopParams(c=c, a=a)))
    tol = 1e-10 if abs(a * a / 4 - c) > 1e-6 else 1e-6
    for image in (-ev, np.conj(ev)):
        assert max(np.min(np.abs(ev - x)) for x in image) < tol


def test_conjugacy_of_models(rng):
    for _ in range(100):
        c = rng.uniform(0.1, 4)
        a = rng.uniform(0.1, 3) * 2 * math.sqrt(c)
        if abs(a - 2 * math.sqrt(c)) < 1e-3:
            continue
        e1 = spectrum(linearize_at_Pa(TopParams(c=c, a=a)))
        e2 = spectrum(versal_unfolding(top_to_unfolding(a, c)))
        assert np.max(np.abs(e1 - e2)) < 1e-10


@given(st.floats(-1, 0.99))
def test_trichotomy(mu2):
    # mu2 = lambda0^2 would put a frequency at zero
    tol = 1e-9
    cls = classify_spectrum(versal_unfolding(UnfoldingParams(1.0, 0.0, mu2)), tol).cls
    if mu2 < -tol:
        assert cls is H
    elif mu2 > tol:
        assert cls is E
    else:
        assert cls is R


def test_zero_frequency_is_degenerate():
    assert classify_spectrum(versal_unfolding(UnfoldingParams(1.0, 0.0, 1.0))).cls is D


def test_trichotomy_at_the_tolerance_edge():
    tol = 1e-6
    cls = lambda m2: classify_spectrum(versal_unfolding(UnfoldingParams(1.0, 0.0, m2)), tol).cls
    assert cls(0.5e-6) is R and cls(-0.5e-6) is R
    assert cls(2e-6) is E and cls(-2e-6) is H


def test_threshold_values_and_speed():
    t0 = time.perf_counter()
    for c in (0.25, 1.0, 4.0):
        assert abs(stabilization_threshold(c) - 2 * math.sqrt(c)) < 1e-8
    assert time.perf_counter() - t0 < 1.0


def test_threshold_monotone():
    cs = np.linspace(0.1, 5, 25)
    a0 = [stabilization_threshold(c) for c in cs]
    assert np.all(np.diff(a0) > 0)


def test_threshold_bad_bracket():
    with pytest.raises(BracketError):
        stabilization_threshold(1.0, bracket=(3.0, 4.0))


def test_top_to_unfolding_examples():
    assert top_to_unfolding(2.0, 1.0).mu2 == 0.0
    assert top_to_unfolding(3.0, 1.0).mu2 == 1.25
    rep = classify_spectrum(versal_unfolding(top_to_unfolding(2 * math.sqrt(2.0), 2.0)))
    assert rep.cls is R


def test_nondegeneracy_examples():
    m = 2
    omega = lambda nu: np.asarray(nu[:m])
    family = lambda nu: versal_unfolding(UnfoldingParams(1.0, nu[m], nu[m + 1]))
    rep = nondegeneracy_check(omega, family, np.zeros(m + 2))
    assert rep.submersive and rep.versal and rep.orbit_codim == 2
    rep = nondegeneracy_check(lambda nu: np.ones(m), family, np.zeros(m + 2))
    assert not rep.submersive
    rep = nondegeneracy_check(omega, lambda nu: versal_unfolding(UnfoldingParams(1.0)), np.zeros(m + 2))
    assert not rep.versal
    with pytest.raises(DimensionError):
        nondegeneracy_check(omega, family, np.zeros(m + 1))


def test_holder_exponent():
    radii = np.logspace(-2, -6, 9)
    fam = lambda mu2: versal_unfolding(UnfoldingParams(1.0, 0.0, mu2))
    assert holder_exponent_estimate(fam, 0.0, radii) == pytest.approx(0.5, abs=0.05)
    assert holder_exponent_estimate(fam, 1.0, radii) == pytest.approx(1.0, abs=0.05)
    assert holder_exponent_estimate(lambda nu: versal_unfolding(UnfoldingParams(1.0)), 0.0, radii) == math.inf
    with pytest.raises(EstimationError):
        holder_exponent_estimate(fam, 0.0, [1e-2, 1e-3])


def test_spectrum_scan_flip():
    a = np.linspace(1.5, 2.5, 101)
    rows = spectrum_scan(a, [1.0])
    cls = [r[3] for r in rows]
    last_h = max(r[0] for r in rows if r[3] == "HyperbolicQuartet")
    first_e = min(r[0] for r in rows if r[3] == "EllipticPairs")
    assert last_h == pytest.approx(1.99) and first_e == pytest.approx(2.01)
    assert cls == sorted(cls, key=["HyperbolicQuartet", "Resonant11", "EllipticPairs"].index)
    assert len({r[4] for r in rows}) == 1 and abs(rows[0][4] - 2.0) < 1e-8
