"""Batch verification suites, one per acceptance criterion.

Each runner returns a :class:`SuiteResult`; the CLI ``verify`` command and
the acceptance tests both go through here so the numbers agree.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import MaxIterExceeded, NotCertified, NotFound
from .gauge import HalfSpace, NormBall, Polytope, decompose, gauge, hausdorff_estimate, lp_gauge
from .halfspace import (
    HalfSpaceProjection, dominated_coordinate, find_norm_one_projection, halfspace_projection,
    is_one_complemented_hyperplane_l1, is_one_complemented_hyperplane_linf,
)
from .intersect import (
    IterationConfig, averaged_map, fixed_point, intersection_violation, zero_in_hull,
)
from .oracle import (
    SampledSet, control_single_kernel, expansion_ratios, is_coapprox, is_optimal_point,
    nonconvex_projection_linf2, nonexpansiveness_sweep, random_pairs,
    verify_counterexample_linf4,
)
from .spaces import (
    NormSpec, complex_dual_norm, complex_norm, norm, phase_sampled_norm, realify, realify_norm,
)

SPACE_KINDS = (1.0, "inf", 2.0)
DIMENSIONS = (2, 3, 4, 6)


@dataclass
class SuiteResult:
    name: str
    passed: bool
    value: float
    threshold: float
    runtime: float
    budget: float
    details: dict = field(default_factory=dict)

    @property
    def within_budget(self) -> bool:
        return self.runtime <= self.budget

    def line(self) -> str:
        status = "PASS" if self.passed and self.within_budget else "FAIL"
        return (f"{status} {self.name}: value={self.value:.12g} threshold={self.threshold:.12g} "
                f"runtime={self.runtime:.1f}s/{self.budget:.0f}s")


def _timed(name: str, budget: float, body: Callable[[], tuple[bool, float, float, dict]]) -> SuiteResult:
    t0 = time.perf_counter()
    ok, value, threshold, details = body()
    return SuiteResult(name, bool(ok), float(value), float(threshold),
                       time.perf_counter() - t0, budget, details)


# ---------------------------------------------------------------------------
# random certified functionals


def random_admissible_functional(space: NormSpec, rng: np.random.Generator) -> np.ndarray:
    """Random f whose kernel is one-complemented in ``space`` (l_1, l_inf or l_2)."""
    n = space.dimension
    if space.p == 2.0:
        f = rng.standard_normal(n)
    elif space.p == 1.0:
        f = np.zeros(n)
        k = 1 if n == 1 or rng.random() < 0.25 else 2
        idx = rng.choice(n, size=k, replace=False)
        f[idx] = rng.standard_normal(k)
    else:
        f = rng.standard_normal(n)
        j = rng.integers(n)
        rest = np.abs(np.delete(f, j)).sum()
        f[j] = np.sign(f[j] or 1.0) * rest * (1.0 + rng.exponential(0.5))
    return f


def certified_projection(space: NormSpec, rng: np.random.Generator, d=None) -> HalfSpaceProjection:
    f = random_admissible_functional(space, rng)
    if d is None:
        d = float(rng.normal())
    return halfspace_projection(HalfSpace.normalized(f, d, space))


def selection_configurations(seed: int = 0, per_space: int = 20):
    """(space, projection) pairs used by the half-space and implication suites."""
    rng = np.random.default_rng(seed)
    out = []
    for p in SPACE_KINDS:
        for n in DIMENSIONS:
            space = NormSpec.lp(n, p)
            for _ in range(per_space):
                out.append((space, certified_projection(space, rng)))
    return out


# ---------------------------------------------------------------------------
# 1. contractive half-spaces


def suite_halfspace(seed: int = 0, configs_per_space: int = 20, pairs: int = 100_000,
                    tol: float = 1e-9) -> SuiteResult:
    def body():
        worst, count = 0.0, 0
        for i, (space, hp) in enumerate(selection_configurations(seed, configs_per_space)):
            rep = nonexpansiveness_sweep(hp, space, pairs, seed + i)
            worst = max(worst, rep.max_ratio)
            count += 1
        return worst <= 1 + tol, worst, 1 + tol, {"configurations": count, "pairs": pairs}

    return _timed("1 contractive half-spaces", 60, body)


# ---------------------------------------------------------------------------
# 2. gauge


def random_polytope(n: int, rng: np.random.Generator) -> Polytope:
    m = n + 4 + int(rng.integers(0, 6))
    while True:
        V = rng.standard_normal((m, n))
        V *= rng.uniform(0.5, 1.5, (m, 1)) / np.linalg.norm(V, axis=1, keepdims=True)
        P = Polytope(V)
        try:
            if P.inner_radius > 0.05:
                return P
        except Exception:  # degenerate hull, draw again
            pass


def gauge_bodies(rng: np.random.Generator):
    yield NormBall(NormSpec.lp(3, 1.0))
    yield NormBall(NormSpec.lp(3, "inf"), 2.0)
    yield NormBall(NormSpec.lp(4, 3.0), 1.0, center=[0.2, -0.1, 0.0, 0.1])
    yield Polytope.box([-1, -2], [3, 1])
    yield random_polytope(3, rng)


def suite_gauge(seed: int = 0, samples: int = 10_000, polytopes: int = 20,
                queries: int = 50, tol: float = 1e-10) -> SuiteResult:
    def body():
        rng = np.random.default_rng(seed)
        worst_convex = worst_homog = 0.0
        per = samples // 5
        for C in gauge_bodies(rng):
            n = C.dimension
            X = 2.0 * rng.standard_normal((per, n))
            Y = 2.0 * rng.standard_normal((per, n))
            lam = rng.random((per, 1))
            t = rng.uniform(0.0, 10.0, (per, 1))
            gx, gy = gauge(C, X, tol), gauge(C, Y, tol)
            gm = gauge(C, lam * X + (1 - lam) * Y, tol)
            worst_convex = max(worst_convex, float(np.max(gm - (lam[:, 0] * gx + (1 - lam[:, 0]) * gy))))
            worst_homog = max(worst_homog, float(np.max(np.abs(gauge(C, t * X, tol) - t[:, 0] * gx))))
        worst_lp = 0.0
        for k in range(polytopes):
            n = 2 + k % 3
            P = random_polytope(n, rng)
            X = rng.standard_normal((queries, n))
            g = gauge(P, X, tol)
            ref = np.array([lp_gauge(P.vertices, x) for x in X])
            worst_lp = max(worst_lp, float(np.max(np.abs(g - ref))))
        ok = worst_convex <= 1e-6 and worst_homog <= 1e-6 and worst_lp <= 2 * tol
        value = max(worst_convex, worst_homog)
        return ok, value, 1e-6, {"convexity": worst_convex, "homogeneity": worst_homog,
                                 "lp_gap": worst_lp, "lp_threshold": 2 * tol}

    return _timed("2 gauge", 30, body)


# ---------------------------------------------------------------------------
# 3. decomposition


def suite_decompose(seed: int = 0) -> SuiteResult:
    def body():
        box = Polytope.box([-1, -1], [1, 1], NormSpec.lp(2, "inf"))
        hs = decompose(box, 4, seed=seed)
        from .gauge import intersection_body
        box_err = hausdorff_estimate(box, intersection_body(hs), seed=seed)
        disc = NormBall(NormSpec.lp(2, 2.0))
        excess = {}
        for N in (8, 16, 32):
            approx = intersection_body(decompose(disc, N, seed=seed))
            err = hausdorff_estimate(disc, approx, seed=seed)
            excess[N] = err - (1 / math.cos(math.pi / N) - 1)
        worst = max(excess.values())
        ok = len(hs) == 4 and box_err <= 1e-6 and worst <= 1e-3
        return ok, box_err, 1e-6, {"halfspaces": len(hs), "disc_excess": excess}

    return _timed("3 decomposition", 30, body)


# ---------------------------------------------------------------------------
# 4. intersections


def intersection_families(seed: int = 0, count: int = 10, max_size: int = 8):
    """Families of certified projections with 0 outside conv{y_k} and 0 in F."""
    rng = np.random.default_rng(seed)
    kinds = [(2, 2.0), (3, "inf"), (3, 1.0), (4, 2.0), (4, "inf"), (2, 1.0), (3, 2.0),
             (2, "inf"), (4, 1.0), (3, "inf")]
    out = []
    i = 0
    while len(out) < count:
        n, p = kinds[i % len(kinds)]
        i += 1
        space = NormSpec.lp(n, p)
        k = int(rng.integers(2, max_size + 1))
        hps = [certified_projection(space, rng, d=float(rng.uniform(0.0, 1.0))) for _ in range(k)]
        if not zero_in_hull([h.y for h in hps]):
            out.append((space, hps))
    return out


def equal_weights(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


@dataclass
class Selection:
    """x -> limit of the relaxed averaged iteration started at x."""

    space: NormSpec
    projections: list
    cfg: IterationConfig
    weights: np.ndarray | None = None

    def __call__(self, X):
        Q = averaged_map(self.projections, self.weights, self.space)
        return fixed_point(Q, X, self.cfg, self.space).point


def suite_intersection(seed: int = 0, families: int = 10, pairs: int = 1000,
                       cfg: IterationConfig = IterationConfig(max_iter=10_000, tol=1e-10),
                       weighting: str = "equal") -> SuiteResult:
    """Families use equal weights 1/K by default: with 2^-k weights the last
    constraint of a large family gets weight ~1/255 and the iteration needs
    more than 10^4 steps whenever that constraint is active at the limit.
    The default-weight outcome is reported alongside."""

    def weights_for(k, kind):
        return equal_weights(k) if kind == "equal" else None

    def body():
        worst_res = worst_viol = worst_ratio = 0.0
        max_its = 0
        ok = True
        default_converged = 0
        fams = intersection_families(seed, families)
        for j, (space, hps) in enumerate(fams):
            X, Z = random_pairs(space.dimension, pairs, seed + j)
            start = np.vstack([X, Z])
            try:
                fixed_point(averaged_map(hps, space=space), start, cfg, space)
                default_converged += 1
            except MaxIterExceeded:
                pass
            Q = averaged_map(hps, weights_for(len(hps), weighting), space)
            try:
                res = fixed_point(Q, start, cfg, space)
            except MaxIterExceeded as exc:
                ok = False
                worst_res = max(worst_res, exc.residual)
                continue
            max_its = max(max_its, res.iterations)
            worst_res = max(worst_res, res.residual)
            worst_viol = max(worst_viol, float(intersection_violation(hps, res.point).max()))
            rep = expansion_ratios(space, X, Z, res.point[:pairs], res.point[pairs:])
            worst_ratio = max(worst_ratio, rep.max_ratio)
        ok = ok and worst_res <= 1e-8 and max_its <= 10_000 and worst_viol <= 1e-6 \
            and worst_ratio <= 1 + 1e-4
        return ok, worst_ratio, 1 + 1e-4, {"weights": weighting, "residual": worst_res,
                                           "iterations": max_its, "violation": worst_viol,
                                           "default_weights_converged": f"{default_converged}/{len(fams)}"}

    return _timed("4 intersections", 60, body)


# ---------------------------------------------------------------------------
# 5. one-complementedness predicates


CURATED_LINF_FALSE = (
    (1, 1, 1), (1, 1, 1, 1), (1, 1, 1, 0), (3, 2, 2), (2, 1, 1, 1), (1, -1, 1),
    (1, 2, 3, 4, 5), (1, 1, 1, 1, 1), (2, 2, 1, 0, 0), (0.3, 0.3, 0.3, 0.1),
)


def random_predicate_true(space: NormSpec, rng: np.random.Generator) -> np.ndarray:
    f = random_admissible_functional(space, rng)
    check = is_one_complemented_hyperplane_l1 if space.p == 1.0 else is_one_complemented_hyperplane_linf
    assert check(f)
    return f


def suite_predicates(seed: int = 0, per_space: int = 1000) -> SuiteResult:
    def body():
        rng = np.random.default_rng(seed)
        worst = 0.0
        failures = 0
        for p in (1.0, "inf"):
            for k in range(per_space):
                space = NormSpec.lp(2 + k % 4, p)
                f = random_predicate_true(space, rng)
                try:
                    worst = max(worst, find_norm_one_projection(space, f).norm_estimate)
                except NotFound:
                    failures += 1
        lowest = math.inf
        for f in CURATED_LINF_FALSE:
            f = np.asarray(f, dtype=float)
            assert dominated_coordinate(f) is None
            try:
                find_norm_one_projection(NormSpec.lp(len(f), "inf"), f)
                lowest = -math.inf
            except NotFound as exc:
                lowest = min(lowest, exc.estimate)
        ok = failures == 0 and worst <= 1 + 1e-6 and lowest > 1 + 1e-3
        return ok, worst, 1 + 1e-6, {"failures": failures, "false_min_estimate": lowest}

    return _timed("5 one-complemented predicates", 60, body)


# ---------------------------------------------------------------------------
# 6. counterexample


def suite_counterexample(seed: int = 0, h: float = 0.05, R: float = 10.0,
                         control_tol: float = 1e-12) -> SuiteResult:
    def body():
        rep = verify_counterexample_linf4(h, R, seed)
        control = control_single_kernel(seed=seed, aligned=True)
        ok = rep.delta > 0 and control.max_margin <= control_tol
        return ok, rep.delta, 0.0, {"x": rep.x.tolist(), "delta": rep.delta, "fill": rep.fill,
                                    "samples": rep.samples, "h": h, "R": R, "seed": seed,
                                    "control_margin": control.max_margin}

    return _timed("6 counterexample", 120, body)


# ---------------------------------------------------------------------------
# 7. nonconvex contractive set


def suite_nonconvex(seed: int = 0, pairs: int = 100_000, members: int = 10_000) -> SuiteResult:
    def body():
        space = NormSpec.lp(2, "inf")
        rng = np.random.default_rng(seed)
        X = 3.0 * rng.standard_normal((members, 2))
        PX = nonconvex_projection_linf2(X)
        idempotent = bool(np.array_equal(nonconvex_projection_linf2(PX), PX))
        inside = bool(np.all(np.abs(PX[:, 1]) <= np.abs(PX[:, 0])))
        F = X[np.abs(X[:, 1]) <= np.abs(X[:, 0])]
        onto = bool(np.array_equal(nonconvex_projection_linf2(F), F))
        rep = nonexpansiveness_sweep(nonconvex_projection_linf2, space, pairs, seed)
        ok = idempotent and inside and onto and rep.max_ratio <= 1 + 1e-9
        return ok, rep.max_ratio, 1 + 1e-9, {"idempotent": idempotent, "image_in_F": inside,
                                             "fixes_F": onto}

    return _timed("7 nonconvex contractive set", 10, body)


# ---------------------------------------------------------------------------
# 8. realification


def norming_point(space: NormSpec, c) -> np.ndarray:
    """Complex z with |z| = 1 and sum c_j z_j = |c|_q."""
    c = np.asarray(c, dtype=complex)
    a = np.abs(c)
    phase = np.where(a > 0, np.conj(c) / np.where(a > 0, a, 1.0), 1.0)
    if space.p == 1.0:
        z = np.zeros_like(c)
        j = int(np.argmax(a))
        z[j] = phase[j]
    elif space.p == 2.0:
        z = phase * a
    else:
        z = phase + 0j
    return z / complex_norm(space, z)


def suite_realification(seed: int = 0, vectors: int = 10_000, functionals: int = 20) -> SuiteResult:
    def body():
        rng = np.random.default_rng(seed)
        worst_iso = worst_dual = 0.0
        for p in (1.0, 2.0, "inf"):
            space = NormSpec.lp(4, p)
            Z = rng.standard_normal((vectors, 4)) + 1j * rng.standard_normal((vectors, 4))
            a, b = complex_norm(space, Z), realify_norm(space, realify(Z))
            worst_iso = max(worst_iso, float(np.max(np.abs(a - b) / a)))
            for _ in range(functionals):
                c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
                pts = np.vstack([norming_point(space, c),
                                 rng.standard_normal((64, 4)) + 1j * rng.standard_normal((64, 4))])
                est = phase_sampled_norm(space, c, pts)
                worst_dual = max(worst_dual, abs(est - complex_dual_norm(space, c)))
        ok = worst_iso <= 1e-12 and worst_dual <= 1e-3
        return ok, worst_dual, 1e-3, {"isometry_rel_gap": worst_iso}

    return _timed("8 realification", 10, body)


# ---------------------------------------------------------------------------
# 9. contractive => existence => optimal


def _implication_check(space, S, rng, queries, samples, optimal_queries, budget, tol):
    n = space.dimension
    base = rng.standard_normal((samples, n)) * np.array([0.3, 1.0, 3.0])[rng.integers(0, 3, samples)][:, None]
    X = 2.0 * rng.standard_normal((queries, n))
    SX = S(X)
    F = SampledSet(np.vstack([S(base), SX]), "explicit", check=False)
    coapprox_fail = sum(not is_coapprox(space, F, d, x, tol) for d, x in zip(SX, X))
    dominated_inside = dominated_outside = tested_outside = 0
    for d, x in list(zip(SX, X))[:optimal_queries]:
        if not is_optimal_point(space, F, d, trial_budget=budget, start=x, separation=1e-6):
            dominated_inside += 1
        if norm(space, x - d) > 1e-6:
            tested_outside += 1
            if not is_optimal_point(space, F, x, trial_budget=budget, start=d, separation=1e-6,
                                    tol=tol):
                dominated_outside += 1
    return coapprox_fail, dominated_inside, dominated_outside, tested_outside


def suite_implication(seed: int = 0, queries: int = 100, samples: int = 400,
                      optimal_queries: int = 5, budget: int = 200) -> SuiteResult:
    """For each certified selection S and query x: S(x) is a best coapproximation
    to x from the sampled F, no point dominates S(x), and x itself (when
    outside F) is dominated, so x is not in Min(F)."""

    def body():
        rng = np.random.default_rng(seed)
        fails = inside = outside = tested = 0
        selections = [(sp, hp, 1e-9) for sp, hp in selection_configurations(seed)]
        cfg = IterationConfig(max_iter=10_000, tol=1e-10)
        for sp, hps in intersection_families(seed):
            selections.append((sp, Selection(sp, hps, cfg, equal_weights(len(hps))), 1e-6))
        for space, S, tol in selections:
            a, b, c, t = _implication_check(space, S, rng, queries, samples, optimal_queries,
                                            budget, tol)
            fails, inside, outside, tested = fails + a, inside + b, outside + c, tested + t
        ok = fails == 0 and inside == 0 and outside == tested
        return ok, fails + inside, 0, {"selections": len(selections), "coapprox_failures": fails,
                                       "dominated_selection_points": inside,
                                       "outside_queries": tested, "outside_dominated": outside}

    return _timed("9 implication chain", 60, body)


SUITES = {
    "halfspace": suite_halfspace,
    "gauge": suite_gauge,
    "decompose": suite_decompose,
    "intersection": suite_intersection,
    "predicates": suite_predicates,
    "counterexample": suite_counterexample,
    "nonconvex": suite_nonconvex,
    "realification": suite_realification,
    "implication": suite_implication,
}


def run_all(seed: int = 0) -> list[SuiteResult]:
    return [fn(seed=seed) for fn in SUITES.values()]


__all__ = ["SUITES", "SuiteResult", "run_all", "selection_configurations",
           "intersection_families", "random_admissible_functional", "certified_projection",
           "norming_point", "CURATED_LINF_FALSE", "Selection"] + [f"suite_{k}" for k in SUITES]
