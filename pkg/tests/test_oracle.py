import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from coapprox.gauge import HalfSpace, NormBall
from coapprox.halfspace import halfspace_projection
from coapprox.oracle import (
    F1, F2, SampledSet, control_single_kernel, find_coapprox, is_coapprox, is_optimal_point,
    kernel_basis, nonconvex_projection_linf2, nonexpansiveness_sweep, verify_counterexample_linf4,
)
from coapprox.spaces import NormSpec, norm, sphere_points
from coapprox.suites import certified_projection

GOLDEN = Path(__file__).parent / "golden" / "counterexample_linf4.json"
L22 = NormSpec.lp(2, 2)
LINF2 = NormSpec.lp(2, "inf")
LINF4 = NormSpec.lp(4, "inf")


def segment(h=0.01):
    return SampledSet.parametrized_grid(lambda T: np.c_[T[:, 0], 0 * T[:, 0]], [-2], [2], h, L22)


def left_half(space, h=0.05, R=4.0):
    return SampledSet.parametrized_grid(lambda T: T, [-R, -R], [0, R], h, space)


def test_sampled_set_invariants():
    with pytest.raises(ValueError):
        SampledSet(np.empty((0, 2)))
    with pytest.raises(ValueError):
        SampledSet([[0, 0], [0.001, 0]], h=0.1)
    S = segment()
    assert len(S) == 401 and S.h == 0.01 and S.R == 2


def test_is_coapprox_examples():
    F = segment()
    assert is_coapprox(L22, F, [0, 0], [0, 1])
    assert not is_coapprox(L22, F, [2, 0], [0, 0.1])


@pytest.mark.parametrize("p", [1, 2, "inf"])
def test_contractive_selection_is_coapprox(p, rng):
    sp = NormSpec.lp(3, p)
    hp = certified_projection(sp, rng, d=0.2)
    X = 3 * rng.standard_normal((1000, 3))
    F = SampledSet(hp(4 * rng.standard_normal((1500, 3))), check=False)
    assert all(is_coapprox(sp, F, d, x) for d, x in zip(hp(X), X))


def test_find_coapprox_on_f():
    F = segment(0.05)
    x = F.points[17]
    rep = find_coapprox(L22, F, x)
    np.testing.assert_array_equal(rep.candidate, x)
    assert rep.margin <= 0 and rep.passed and rep.d is not None


@pytest.mark.parametrize("space", [LINF2, L22], ids=["linf", "l2"])
def test_find_coapprox_halfspace_against_closed_form(space, rng):
    F = left_half(space, h=0.1, R=3.0)
    hp = halfspace_projection(HalfSpace(np.array([1.0, 0.0]), 0.0, space))
    for x in rng.uniform([0.1, -1], [1, 1], (10, 2)):
        rep = find_coapprox(space, F, x)
        assert rep.margin <= F.fill
        assert is_coapprox(space, F, hp(x), x)
        # R_F(x) is not a singleton: the mirror image (-x1, x2) qualifies as well
        assert is_coapprox(space, F, np.array([-x[0], x[1]]), x)


def test_find_coapprox_grid_aligned_halfspace_passes():
    F = left_half(LINF2)
    rep = find_coapprox(LINF2, F, np.array([1.0, 0.3]))
    assert rep.margin <= 1e-12


def test_optimal_point_examples(rng):
    ball = NormBall(L22)
    S = 1.2 * rng.uniform(-1, 1, (3000, 2))
    F = SampledSet(S[ball.member(S)], h=0.02, fill=0.05, check=False)
    assert is_optimal_point(L22, F, np.array([0.1, -0.2]), trial_budget=300)
    flat = SampledSet.parametrized_grid(lambda T: np.c_[T[:, 0], 0 * T[:, 0]], [-5], [5], 0.05, L22)
    res = is_optimal_point(L22, flat, np.array([0.3, 1.0]))
    assert not res
    assert norm(L22, res.witness - np.array([0.3, 1.0])) >= res.separation
    foot_check = is_optimal_point(L22, flat, np.array([0.3, 1.0]), start=np.array([0.3, 0.0]))
    np.testing.assert_allclose(foot_check.witness, [0.3, 0.0])
    single = SampledSet([[0.5, 0.5]])
    assert is_optimal_point(L22, single, np.array([0.5, 0.5]), trial_budget=200)


def test_kernel_basis_reduced():
    B = kernel_basis([F1, F2])
    assert B.shape == (4, 2)
    np.testing.assert_allclose(np.vstack([F1, F2]) @ B, 0, atol=1e-12)


def test_counterexample_matches_golden():
    gold = json.loads(GOLDEN.read_text())
    rep = verify_counterexample_linf4(gold["h"], gold["R"], gold["seed"])
    assert rep.delta > 0 and rep.delta > rep.fill
    np.testing.assert_array_equal(rep.x, gold["x"])
    assert rep.delta == gold["delta"]
    assert rep.samples == gold["samples"]
    assert norm(LINF4, rep.x) == pytest.approx(1)


def test_control_single_kernel():
    aligned = control_single_kernel(aligned=True)
    assert aligned.max_margin <= 0
    loose = control_single_kernel(queries=4)
    assert loose.max_margin <= loose.fill


def test_counterexample_margin_is_genuine():
    """The witness fails on a finer local grid too: the margin is not an artifact."""
    gold = json.loads(GOLDEN.read_text())
    x = np.array(gold["x"])
    B = kernel_basis([F1, F2])
    F = SampledSet.subspace_grid(B, 0.025, 3.0, LINF4)
    assert find_coapprox(LINF4, F, x).margin > F.fill


def test_nonconvex_projection_examples():
    np.testing.assert_array_equal(nonconvex_projection_linf2([1, 2]), [1, 1])
    np.testing.assert_array_equal(nonconvex_projection_linf2([-1, 2]), [-1, 1])
    np.testing.assert_array_equal(nonconvex_projection_linf2([0.5, 0.3]), [0.5, 0.3])
    np.testing.assert_array_equal(nonconvex_projection_linf2([1, -2]), [1, -1])
    np.testing.assert_array_equal(nonconvex_projection_linf2([0, 3]), [0, 0])


@given(arrays(float, 2, elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_nonconvex_projection_idempotent_into_cone(x):
    p = nonconvex_projection_linf2(x)
    assert abs(p[1]) <= abs(p[0])
    np.testing.assert_array_equal(nonconvex_projection_linf2(p), p)


def test_sweep_examples():
    assert nonexpansiveness_sweep(lambda X: X, LINF2, 10_000).max_ratio == 1.0
    assert nonexpansiveness_sweep(lambda X: np.zeros_like(X), LINF2, 10_000).max_ratio == 0.0
    rep = nonexpansiveness_sweep(nonconvex_projection_linf2, LINF2, 100_000)
    assert rep.max_ratio <= 1 + 1e-9 and rep.pairs > 90_000
    assert nonexpansiveness_sweep(lambda X: 2 * X, LINF2, 1000).max_ratio == pytest.approx(2)


def test_nonconvex_not_nonexpansive_in_l2():
    # the retraction is special to the l_inf geometry
    assert nonexpansiveness_sweep(nonconvex_projection_linf2, L22, 100_000).max_ratio > 1.01


def test_scan_independent_of_threads(monkeypatch):
    F = SampledSet.subspace_grid(kernel_basis([F1]), 0.25, 1.5, LINF4)
    x = sphere_points(LINF4, 3, seed=5)[2]
    base = find_coapprox(LINF4, F, x)
    monkeypatch.setenv("COAPPROX_THREADS", "4")
    again = find_coapprox(LINF4, F, x)
    assert again.margin == base.margin
    np.testing.assert_array_equal(again.candidate, base.candidate)
