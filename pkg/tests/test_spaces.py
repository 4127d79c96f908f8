import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from coapprox.errors import NotSmooth, ZeroVector
from coapprox.spaces import (
    INF, NormSpec, approximating_norms, complex_norm, complexify, dual_norm, norm,
    parse_exponent, realify, realify_functional, realify_norm, sphere_points,
    supporting_functional,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
exponents = st.sampled_from([1.0, 1.5, 2.0, 3.0, "inf"])


def test_norm_examples():
    assert norm(NormSpec.lp(2, "inf"), [1, 2]) == 2
    assert norm(NormSpec.lp(3, 1), [1, -1, 1]) == 3
    assert norm(NormSpec.lp(2, 2), [3, 4]) == 5


def test_dual_norm_examples():
    assert dual_norm(NormSpec.lp(3, 1), [1, -1, 1]) == 1
    assert dual_norm(NormSpec.lp(4, "inf"), [1 / 2, 1 / 6, 1 / 6, 1 / 6]) == pytest.approx(1, abs=1e-15)
    assert dual_norm(NormSpec.lp(2, 2), [3, 4]) == 5


def test_infinity_is_an_enum():
    assert parse_exponent("inf") is INF
    assert parse_exponent(math.inf) is INF
    with pytest.raises(ValueError):
        parse_exponent(0.5)


def test_supporting_functional_examples():
    np.testing.assert_allclose(supporting_functional(NormSpec.lp(2, 2), [3, 4]), [0.6, 0.8])
    np.testing.assert_allclose(supporting_functional(NormSpec.lp(2, 4), [1, 1]), [2 ** -0.75] * 2,
                               rtol=1e-12)
    with pytest.raises(NotSmooth):
        supporting_functional(NormSpec.lp(2, 1), [1, 0])
    with pytest.raises(ZeroVector):
        supporting_functional(NormSpec.lp(2, 2), [0, 0])


def test_l4_finite_difference_agrees_with_closed_form():
    from coapprox.spaces import one_sided_gradient
    sp = NormSpec.lp(2, 4)
    g = one_sided_gradient(lambda X: norm(sp, X), np.array([1.0, 1.0]))
    np.testing.assert_allclose(g, [2 ** -0.75] * 2, atol=1e-8)


@given(exponents, arrays(float, 3, elements=finite), arrays(float, 3, elements=finite),
       st.floats(-50, 50, allow_nan=False))
def test_norm_homogeneous_and_subadditive(p, x, y, a):
    sp = NormSpec.lp(3, p)
    assert norm(sp, a * x) == pytest.approx(abs(a) * norm(sp, x), rel=1e-12, abs=1e-300)
    assert norm(sp, x + y) <= norm(sp, x) + norm(sp, y) + 1e-12 * (1 + norm(sp, x) + norm(sp, y))


@given(st.sampled_from([1.5, 2.0, 3.0, 4.0]), arrays(float, 3, elements=st.floats(-10, 10)))
def test_supporting_functional_norms_x(p, x):
    sp = NormSpec.lp(3, p)
    if norm(sp, x) < 1e-3:
        return
    f = supporting_functional(sp, x)
    assert abs(f @ x - norm(sp, x)) <= 1e-8 * max(1, norm(sp, x))
    assert abs(dual_norm(sp, f) - 1) <= 1e-6


def test_supporting_functional_linf_smooth_point():
    sp = NormSpec.lp(3, "inf")
    f = supporting_functional(sp, [0.2, -3.0, 1.0])
    np.testing.assert_allclose(f, [0, -1, 0], atol=1e-8)


def test_approximating_norms_constant():
    sp_l, s = approximating_norms(NormSpec.lp(4, 1), 100)
    assert sp_l.p == pytest.approx(1.01)
    assert s == pytest.approx(4 ** (1 - 1 / 1.01) - 1)
    assert s == pytest.approx(0.0138, abs=1e-4)
    assert sp_l.is_strictly_convex


def test_approximating_norms_vanish():
    vals = [approximating_norms(NormSpec.lp(2, "inf"), l)[1] for l in (1, 10, 100, 10_000)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-3


@pytest.mark.parametrize("p", [1, "inf"])
@pytest.mark.parametrize("l", [1, 5, 50])
def test_approximating_norms_equivalence(p, l, rng):
    sp = NormSpec.lp(5, p)
    sp_l, s = approximating_norms(sp, l)
    X = rng.standard_normal((10_000, 5)) * rng.uniform(0.01, 100, (10_000, 1))
    a, b = norm(sp, X), norm(sp_l, X)
    assert np.all((1 - s) * b <= a * (1 + 1e-12))
    assert np.all(a <= (1 + s) * b * (1 + 1e-12))


def test_realify_example():
    v = realify([3 + 4j])
    np.testing.assert_array_equal(v, [3, 4])
    assert realify_norm(NormSpec.lp(1, 1), v) == 5


@given(exponents, arrays(float, 6, elements=finite))
def test_realify_isometry(p, v):
    sp = NormSpec.lp(3, p)
    z = complexify(v)
    np.testing.assert_array_equal(realify(z), v)
    assert realify_norm(sp, v) == pytest.approx(complex_norm(sp, z), rel=1e-14, abs=1e-300)


def test_realify_functional_is_real_part(rng):
    c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    z = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    assert realify_functional(c) @ realify(z) == pytest.approx((c @ z).real)


@pytest.mark.parametrize("p", [1, 2, 3, "inf"])
def test_sphere_points_on_unit_sphere(p):
    sp = NormSpec.lp(4, p)
    U = sphere_points(sp, 500, seed=3)
    np.testing.assert_allclose(norm(sp, U), 1.0, rtol=1e-12)
    np.testing.assert_array_equal(U, sphere_points(sp, 500, seed=3))
