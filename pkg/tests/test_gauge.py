import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from coapprox.errors import InvalidBody, NotOnBoundary, NotSmooth
from coapprox.gauge import (
    HalfSpace, HalfSpaceBody, NormBall, OracleBody, Polytope, boundary_point, contains, decompose,
    gauge, hausdorff_estimate, intersection_body, lp_gauge, scale, supporting_halfspace, translate,
)
from coapprox.spaces import NormSpec

LINF2 = NormSpec.lp(2, "inf")
coords = st.floats(-5, 5, allow_nan=False)


def unit_box():
    return Polytope.box([-1, -1], [1, 1], LINF2)


def test_contains_examples():
    ball = NormBall(LINF2)
    assert contains(ball, [0.5, -0.5])
    assert not contains(ball, [1.5, 0])
    diamond = Polytope([[1, 0], [-1, 0], [0, 1], [0, -1]])
    assert contains(diamond, [0.4, 0.4])
    assert not contains(diamond, [0.6, 0.6])


def test_gauge_examples():
    assert gauge(NormBall(LINF2), [2, 0]) == pytest.approx(2, abs=1e-9)
    assert gauge(Polytope.box([-1, -1], [3, 3]), [3, 0]) == pytest.approx(1, abs=1e-9)
    assert gauge(unit_box(), [0, 0]) == 0


def test_gauge_matches_lp_oracle(rng):
    V = rng.standard_normal((5, 3))
    V = np.vstack([V, -0.7 * V])
    P = Polytope(V / np.linalg.norm(V, axis=1, keepdims=True) * rng.uniform(0.5, 1.5, (10, 1)))
    for x in rng.standard_normal((20, 3)):
        assert gauge(P, x) == pytest.approx(lp_gauge(P.vertices, x), abs=2e-10)


def test_boundary_point_examples():
    np.testing.assert_allclose(boundary_point(NormBall(NormSpec.lp(2, 2)), [3, 4]), [0.6, 0.8], atol=1e-9)
    np.testing.assert_allclose(boundary_point(unit_box(), [2, 1]), [1, 0.5], atol=1e-9)


def test_supporting_halfspace_examples():
    h = supporting_halfspace(NormBall(NormSpec.lp(2, 2)), [0.6, 0.8])
    np.testing.assert_allclose(h.f, [0.6, 0.8], atol=1e-6)
    assert h.d == pytest.approx(1, abs=1e-6)
    h = supporting_halfspace(unit_box(), [1, 0.5])
    np.testing.assert_allclose(h.f, [1, 0], atol=1e-6)
    assert h.d == pytest.approx(1, abs=1e-6)
    with pytest.raises(NotSmooth):
        supporting_halfspace(unit_box(), [1, 1])
    with pytest.raises(NotOnBoundary):
        supporting_halfspace(unit_box(), [0.5, 0])


def test_decompose_box_recovers_box():
    box = unit_box()
    dirs = [[1, 0], [-1, 0], [0, 1], [0, -1]]
    hs = decompose(box, 4, direction_sampler=dirs)
    assert len(hs) == 4
    F = np.array(sorted(np.round(h.f, 9).tolist() for h in hs))
    np.testing.assert_allclose(F, [[-1, 0], [0, -1], [0, 1], [1, 0]], atol=1e-9)
    assert hausdorff_estimate(box, intersection_body(hs)) <= 1e-6


@pytest.mark.parametrize("N", [8, 16, 32])
def test_decompose_disc_circumscribed_polygon(N):
    disc = NormBall(NormSpec.lp(2, 2))
    err = hausdorff_estimate(disc, intersection_body(decompose(disc, N)))
    assert err <= 1 / math.cos(math.pi / N) - 1 + 1e-9


def test_decompose_rejects_zero():
    with pytest.raises(ValueError):
        decompose(unit_box(), 0)


def test_decompose_halfspaces_contain_body(rng):
    body = NormBall(NormSpec.lp(3, 3.0), 1.5)
    S = 1.5 * rng.uniform(-1, 1, (10_000, 3))
    members = S[body.member(S)]
    for h in decompose(body, 12):
        assert np.max(members @ h.f - h.d) <= 1e-6


def test_decompose_monotone_in_N():
    disc = NormBall(NormSpec.lp(2, 2))
    hs = decompose(disc, 32)
    errs = [hausdorff_estimate(disc, intersection_body(hs[:N])) for N in (4, 8, 16, 32)]
    assert all(b <= a + 1e-3 for a, b in zip(errs, errs[1:]))


def test_hausdorff_examples():
    box = unit_box()
    assert hausdorff_estimate(box, box) == 0
    assert hausdorff_estimate(NormBall(LINF2), NormBall(LINF2, 2.0)) == pytest.approx(1, rel=0.05)


def test_translate_and_scale():
    moved = translate(unit_box(), [1, 0])
    np.testing.assert_allclose(np.sort(moved.vertices, axis=0), np.sort(
        Polytope.box([0, -1], [2, 1]).vertices, axis=0))
    big = scale(NormBall(NormSpec.lp(2, 2)), 2.0)
    assert gauge(big, [2, 0]) == pytest.approx(1, abs=1e-9)


def test_degenerate_body_rejected():
    with pytest.raises(InvalidBody):
        gauge(Polytope([[1, 0], [-1, 0]]), [0.5, 0])


def test_oracle_body_gauge():
    body = OracleBody(lambda X: np.abs(X).sum(axis=-1) <= 1, 2, inner_radius=0.5, outer_radius=1.0)
    assert gauge(body, [0.25, 0.25]) == pytest.approx(0.5, abs=1e-9)


def test_halfspace_body_bounded():
    hs = [HalfSpace.normalized(f, 1.0, NormSpec.lp(2, 2)) for f in ([1, 0], [-1, 0], [0, 1], [0, -1])]
    body = HalfSpaceBody.from_halfspaces(hs)
    assert body.bounded
    assert gauge(body, [2, 1]) == pytest.approx(2, abs=1e-9)


@given(arrays(float, 2, elements=coords), arrays(float, 2, elements=coords), st.floats(0, 1))
def test_gauge_convex(x, y, lam):
    C = Polytope.box([-1, -2], [3, 1])
    lhs = gauge(C, lam * x + (1 - lam) * y)
    assert lhs <= lam * gauge(C, x) + (1 - lam) * gauge(C, y) + 1e-6


@given(arrays(float, 3, elements=coords), st.floats(0.01, 100))
def test_gauge_positively_homogeneous(x, a):
    C = NormBall(NormSpec.lp(3, 1.5), 1.0, center=[0.1, 0.0, -0.2])
    assert gauge(C, a * x) == pytest.approx(a * gauge(C, x), abs=1e-8 * max(1, a))
