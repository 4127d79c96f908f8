import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from coapprox.errors import NotCertified, NotFound, SelectionInvalid, ZeroFunctional
from coapprox.gauge import HalfSpace
from coapprox.halfspace import (
    KernelProjection, contractive_projection, dominated_coordinate, find_norm_one_projection,
    halfspace_projection, homogeneous_extension, is_one_complemented_hyperplane_l1,
    is_one_complemented_hyperplane_linf, kernel_retraction, operator_norm_estimate,
)
from coapprox.oracle import random_pairs
from coapprox.spaces import NormSpec, norm
from coapprox.suites import certified_projection, random_admissible_functional

LINF2 = NormSpec.lp(2, "inf")


def test_l1_predicate_examples():
    assert is_one_complemented_hyperplane_l1([1, 1, 0])
    assert not is_one_complemented_hyperplane_l1([1, 1, 1])
    with pytest.raises(ZeroFunctional):
        is_one_complemented_hyperplane_l1([0, 0, 0])


def test_linf_predicate_examples():
    assert is_one_complemented_hyperplane_linf([1 / 2, 1 / 6, 1 / 6, 1 / 6])
    assert is_one_complemented_hyperplane_linf([1, 0, 0, 0])
    assert not is_one_complemented_hyperplane_linf([1 / 4] * 4)
    with pytest.raises(ZeroFunctional):
        is_one_complemented_hyperplane_linf([0, 0])


def test_dominated_tie_breaks_to_smallest_index():
    assert dominated_coordinate([0.5, 0.5]) == 0
    assert dominated_coordinate([0.1, -0.6, 0.5]) == 1


def test_linf_projection_examples():
    sp = NormSpec.lp(4, "inf")
    np.testing.assert_allclose(find_norm_one_projection(sp, [1, 0, 0, 0]).y, [1, 0, 0, 0])
    kp = find_norm_one_projection(sp, [1 / 2, 1 / 6, 1 / 6, 1 / 6])
    np.testing.assert_allclose(kp.y, [2, 0, 0, 0])
    assert kp.norm_estimate <= 1 + 1e-12


def test_l2_projection_is_orthogonal():
    kp = find_norm_one_projection(NormSpec.lp(3, 2), [1, 2, 2])
    np.testing.assert_allclose(kp.y, np.array([1, 2, 2]) / 9)


def test_dense_l3_functional_not_found():
    f = np.ones(4) / np.linalg.norm(np.ones(4), 1.5)
    with pytest.raises(NotFound) as info:
        find_norm_one_projection(NormSpec.lp(4, 3), f, budget=400)
    assert info.value.estimate > 1


def test_l1_two_sparse_certified():
    kp = find_norm_one_projection(NormSpec.lp(3, 1), [0.3, -1.2, 0])
    assert kp.norm_estimate <= 1 + 1e-9
    with pytest.raises(NotFound):
        find_norm_one_projection(NormSpec.lp(3, 1), [1, 1, 1])


def test_linf_non_dominated_estimate_exceeds_one():
    with pytest.raises(NotFound) as info:
        find_norm_one_projection(NormSpec.lp(4, "inf"), [1, 1, 1, 1])
    assert info.value.estimate == pytest.approx(1.5, rel=1e-9)


def test_contractive_projection_examples():
    hp = halfspace_projection(HalfSpace(np.array([1.0, 0.0]), 0.0, LINF2))
    np.testing.assert_allclose(hp.y, [1, 0])
    np.testing.assert_allclose(contractive_projection(hp, [2, 3]), [0, 3])
    np.testing.assert_array_equal(hp([-1, 5]), [-1, 5])
    np.testing.assert_array_equal(hp([0, 5]), [0, 5])


def test_halfspace_projection_rejects_bad_kernel():
    sp = NormSpec.lp(3, "inf")
    f = np.ones(3) / 3
    bad = KernelProjection(f, np.array([3.0, 0, 0]), sp)
    with pytest.raises(NotCertified):
        halfspace_projection(HalfSpace(f, 0.0, sp), kernel=bad)
    with pytest.raises(NotCertified):
        halfspace_projection(HalfSpace(f, 0.0, sp))


def test_kernel_retraction_examples():
    f = np.array([1.0, 0.0])
    x = np.array([0.0, 3.0])
    np.testing.assert_array_equal(kernel_retraction(f, lambda v: v, x), x)
    x = np.array([2.0, 1.0])
    out = kernel_retraction(f, lambda v: np.array([-1.0, 4.0]), x)
    np.testing.assert_allclose(out, x / 3 + 2 / 3 * np.array([-1.0, 4.0]))
    assert out @ f == 0
    with pytest.raises(SelectionInvalid):
        kernel_retraction(f, lambda v: v, x)


def test_kernel_retraction_of_contractive_projection_is_kernel_projection(rng):
    sp = NormSpec.lp(3, "inf")
    hp = halfspace_projection(HalfSpace.normalized([1, 0.5, -0.25], 0.0, sp))
    for x in rng.standard_normal((50, 3)):
        np.testing.assert_allclose(kernel_retraction(hp.f, hp, x), hp.kernel(x), atol=1e-12)


def test_homogeneous_extension():
    sp = NormSpec.lp(3, 2)
    np.testing.assert_array_equal(homogeneous_extension(lambda u: u, np.zeros(3), sp), np.zeros(3))
    x = np.array([1.0, -2.0, 0.5])
    np.testing.assert_allclose(homogeneous_extension(lambda u: u, x, sp), x)


@pytest.mark.parametrize("p", [1, 2, "inf", 1.5])
def test_kernel_projection_norm_one(p, rng):
    sp = NormSpec.lp(5, p)
    if p == 1.5:
        f = np.zeros(5)
        f[[1, 3]] = [0.7, -0.4]
    else:
        f = random_admissible_functional(sp, rng)
    kp = find_norm_one_projection(sp, f)
    W = rng.standard_normal((100_000, 5))
    assert np.max(norm(sp, kp(W)) - norm(sp, W)) <= 1e-9


@pytest.mark.parametrize("p", [1, 2, "inf"])
def test_halfspace_projection_nonexpansive_all_cases(p, rng):
    sp = NormSpec.lp(4, p)
    hp = certified_projection(sp, rng, d=0.3)
    X, Z = random_pairs(4, 100_000, seed=7)
    inside = hp.contains(X), hp.contains(Z)
    assert np.any(inside[0] & inside[1]) and np.any(~inside[0] & ~inside[1])
    assert np.any(inside[0] ^ inside[1])
    gap = norm(sp, hp(X) - hp(Z)) - norm(sp, X - Z)
    assert gap.max() <= 1e-9


@pytest.mark.parametrize("p", [1, 2, "inf"])
def test_monotone_sections(p, rng):
    sp = NormSpec.lp(4, p)
    hp = certified_projection(sp, rng, d=0.0)
    for _ in range(200):
        v = hp.kernel(rng.standard_normal(4))
        t1, t2 = np.sort(rng.uniform(0, 5, 2))
        assert norm(sp, t1 * hp.y + v) <= norm(sp, t2 * hp.y + v) + 1e-9


@given(arrays(float, 4, elements=st.floats(-5, 5, allow_nan=False)))
def test_linf_predicate_matches_search(f):
    if np.abs(f).max() < 1e-3:
        return
    sp = NormSpec.lp(4, "inf")
    if is_one_complemented_hyperplane_linf(f):
        j = dominated_coordinate(f)
        kp = find_norm_one_projection(sp, f)
        assert kp.norm_estimate <= 1 + 1e-6
        np.testing.assert_allclose(kp.y, np.eye(4)[j] / f[j])
    else:
        a = np.sort(np.abs(f))
        if a[-1] < a[:-1].sum() - 1e-3 * a.sum():
            with pytest.raises(NotFound) as info:
                find_norm_one_projection(sp, f)
            assert info.value.estimate > 1


def test_operator_norm_exact_for_linf():
    sp = NormSpec.lp(3, "inf")
    M = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.5, -0.5, 0.5]])
    assert operator_norm_estimate(sp, M) == pytest.approx(3.0)
