import math
import warnings

import numpy as np
import pytest

from lagtop.errors import PrecisionWarning, StratumError
from lagtop.monodromy import (LoopSpec, circle_loop, kolmogorov_hessian, monodromy_around_thread,
                              period, rotation_number)
from lagtop.normalform import NormalFormCoefficients

FF = NormalFormCoefficients(1.0, 0.0, -0.5, 1.0, 0.1, 0.05)
MU2 = FF.mu2


def _matrix(**kw):
    kw.setdefault("steps", 16)
    return monodromy_around_thread(circle_loop(kw.pop("center", (0.0, 0.0)), kw.pop("radius", 0.01),
                                               mu2=MU2, **kw), FF).matrix


def test_single_loop_is_unipotent():
    m = _matrix()
    np.testing.assert_array_equal(m, [[1, 1], [0, 1]])
    assert round(np.linalg.det(m)) == 1


def test_double_loop_squares():
    np.testing.assert_array_equal(_matrix(turns=2), np.linalg.matrix_power(_matrix(), 2))


def test_reversed_loop_inverts():
    np.testing.assert_array_equal(_matrix(clockwise=True), [[1, -1], [0, 1]])


def test_contractible_loop_is_identity():
    np.testing.assert_array_equal(_matrix(center=(0.0, 0.01), radius=0.004), np.eye(2, dtype=int))


@pytest.mark.parametrize("start", [0.3, 1.0, 2.5, 4.0])
def test_base_point_and_size_independence(start):
    np.testing.assert_array_equal(_matrix(start_angle=start), [[1, 1], [0, 1]])
    np.testing.assert_array_equal(_matrix(radius=0.02, steps=24, start_angle=start), [[1, 1], [0, 1]])


def test_workers_invariant():
    loop = circle_loop((0.0, 0.0), 0.01, 16, MU2)
    a = monodromy_around_thread(loop, FF, workers=1)
    b = monodromy_around_thread(loop, FF, workers=3)
    np.testing.assert_array_equal(a.matrix, b.matrix)
    assert a.continuation_log == b.continuation_log


def test_theta_grows_logarithmically_toward_thread():
    th = [rotation_number((r, r), FF) for r in (1e-2, 1e-3, 1e-4, 1e-5)]
    steps = np.diff(th)
    assert np.all(steps > 0)
    assert np.ptp(steps) < 0.05 * steps.mean()
    per = [period((r, r), FF) for r in (1e-3, 1e-4, 1e-5)]
    assert np.diff(per)[1] == pytest.approx(np.diff(per)[0], rel=0.05)


@pytest.mark.parametrize("d", [1e-6, 1e-9, 1e-12])
def test_theta_jump_across_cut(d):
    assert rotation_number((d, 0.01), FF) - rotation_number((-d, 0.01), FF) == pytest.approx(2 * math.pi, abs=1e-3)
    assert abs(rotation_number((d, -0.01), FF) - rotation_number((-d, -0.01), FF)) < 1e-3


def test_loop_validation():
    with pytest.raises(ValueError):
        LoopSpec(((1.0, 1.0),) * 4, MU2)
    with pytest.raises(ValueError):
        circle_loop((0.0, 0.0), 0.01, 4, MU2)
    nodes = circle_loop((0.0, 0.0), 0.01, 16, MU2, start_angle=math.pi / 2).nodes
    with pytest.raises(StratumError, match="cut"):
        monodromy_around_thread(LoopSpec(nodes, MU2), FF)
    with pytest.raises(StratumError):
        monodromy_around_thread(circle_loop((0.0, 0.0), 5e-5, 16, MU2), FF)
    with pytest.raises(StratumError):
        rotation_number((0.0, 0.0), FF)


def test_kolmogorov_quadratic_forms():
    f1 = lambda y, z, nu: 0.5 * (y[0] ** 2 + y[1] ** 2)
    assert kolmogorov_hessian(f1, 0.0, m=2).det == pytest.approx(1.0, abs=1e-6)
    f2 = lambda y, z, nu: y[0] * y[1]
    assert kolmogorov_hessian(f2, 0.0, m=2).det == pytest.approx(-1.0, abs=1e-6)


def test_kolmogorov_linear_is_degenerate():
    lin = lambda y, z, nu: 1e6 + 3.0 * y[0] - y[1]
    with pytest.warns(PrecisionWarning):
        rep = kolmogorov_hessian(lin, 0.0, m=2)
    assert rep.degenerate


def test_kolmogorov_matches_analytic():
    rng = np.random.default_rng(7)
    for _ in range(20):
        a = rng.normal(size=(3, 3))
        A = a + a.T
        g = rng.normal(size=3)
        cub = rng.normal(size=3)
        F = lambda y, z, nu: g @ y + 0.5 * y @ A @ y + nu * cub @ y ** 3
        with warnings.catch_warnings():
            warnings.simplefilter("error", PrecisionWarning)
            rep = kolmogorov_hessian(F, 0.3, m=3)
        np.testing.assert_allclose(rep.hessian, A, atol=1e-6)
        assert rep.det == pytest.approx(np.linalg.det(A), abs=1e-5)
    with pytest.raises(ValueError):
        kolmogorov_hessian(lambda y, z, nu: 0.0, 0.0, m=0)
