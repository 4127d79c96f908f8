"""Convex bodies, their gauge functionals and half-space decompositions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from .errors import (
    DimensionMismatch,
    InvalidBody,
    NoSmoothPoints,
    NotOnBoundary,
    NotSmooth,
    ZeroVector,
)
from .spaces import (
    INF,
    NormSpec,
    check_dimension,
    dual_norm,
    norm,
    one_sided_gradient,
    sphere_points,
)

BISECTION_STEPS = 60
MEMBERSHIP_SLACK = 1e-9
# bisection only needs rounding-level slack; 1e-9 R would bias the gauge
BISECTION_SLACK = 1e-13
BRACKET_EPS = 1e-6
HALFSPACE_NORM_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class HalfSpace:
    """{x : f(x) <= d} with f normalized in the dual norm of ``space``."""

    f: np.ndarray
    d: float
    space: NormSpec

    def __post_init__(self):
        f = check_dimension(self.space, self.f).astype(float)
        f.setflags(write=False)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "d", float(self.d))
        fn = dual_norm(self.space, f)
        if abs(fn - 1.0) > HALFSPACE_NORM_TOL:
            raise ValueError(f"half-space functional must have dual norm 1, got {fn:.9g}")

    @classmethod
    def normalized(cls, f, d, space: NormSpec) -> HalfSpace:
        """Rescale (f, d) so that f has dual norm one."""
        f = np.asarray(f, dtype=float)
        s = dual_norm(space, f)
        if not s > 0:
            from .errors import ZeroFunctional

            raise ZeroFunctional("half-space functional is zero")
        return cls(f / s, float(d) / s, space)

    def value(self, x):
        return np.asarray(x, dtype=float) @ self.f

    def contains(self, x, tol: float = 0.0):
        return self.value(x) <= self.d + tol


class ConvexBody:
    """Bounded convex set with 0 in its interior.

    Subclasses provide batched membership, the support function and the
    certified radii ``inner_radius`` (B(0, r) inside the body) and
    ``outer_radius`` (body inside B(0, R)), both Euclidean.
    """

    dimension: int
    space: NormSpec | None = None

    @property
    def ambient(self) -> NormSpec:
        return self.space if self.space is not None else NormSpec.lp(self.dimension, 2.0)

    @property
    def inner_radius(self) -> float:
        raise NotImplementedError

    @property
    def outer_radius(self) -> float:
        raise NotImplementedError

    @property
    def degenerate(self) -> bool:
        return not self.inner_radius > 0

    def member(self, X, slack: float = 0.0) -> np.ndarray:
        """Batched membership test with additive slack."""
        raise NotImplementedError

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise DimensionMismatch(f"expected a point of dimension {self.dimension}")
        try:
            slack = MEMBERSHIP_SLACK * self.outer_radius
        except InvalidBody:
            slack = MEMBERSHIP_SLACK * max(1.0, float(np.abs(x).max()))
        return bool(self.member(x[None, :], slack)[0])

    def support(self, u):
        """sup over the body of u . x, reduced over the last axis of ``u``."""
        raise NotImplementedError

    def translate(self, v, inner_radius: float | None = None) -> ConvexBody:
        raise NotImplementedError

    def scale(self, t: float) -> ConvexBody:
        raise NotImplementedError


def _scalar_or_array(r):
    r = np.asarray(r, dtype=float)
    return float(r) if r.ndim == 0 else r


class Polytope(ConvexBody):
    """Convex hull of finitely many vertices."""

    def __init__(self, vertices, space: NormSpec | None = None):
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        if V.size == 0:
            raise InvalidBody("a polytope needs at least one vertex")
        self.vertices = V
        self.dimension = V.shape[1]
        if space is not None and space.dimension != self.dimension:
            raise DimensionMismatch("space and vertices disagree on dimension")
        self.space = space

    @classmethod
    def box(cls, lower, upper, space: NormSpec | None = None) -> Polytope:
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        n = lower.shape[0]
        corners = (np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1
        return cls(np.where(corners == 1, upper, lower), space)

    @cached_property
    def facets(self) -> tuple[np.ndarray, np.ndarray]:
        """(A, b) with the body equal to {x : A x <= b}; rows of A are unit."""
        V = self.vertices
        if self.dimension == 1:
            lo, hi = V.min(), V.max()
            if hi <= lo:
                raise InvalidBody("degenerate interval")
            return np.array([[1.0], [-1.0]]), np.array([hi, -lo])
        try:
            hull = ConvexHull(V)
        except QhullError as exc:
            raise InvalidBody(f"vertices do not span a full-dimensional hull: {exc}") from None
        A = hull.equations[:, :-1]
        b = -hull.equations[:, -1]
        return A, b

    @cached_property
    def inner_radius(self) -> float:
        if len(self.vertices) <= self.dimension:
            return 0.0
        try:
            _, b = self.facets
        except InvalidBody:
            return 0.0
        return max(0.0, float(b.min()))

    @cached_property
    def outer_radius(self) -> float:
        return float(np.linalg.norm(self.vertices, axis=1).max())

    def member(self, X, slack=0.0):
        A, b = self.facets
        X = np.asarray(X, dtype=float)
        return np.all(X @ A.T <= b + slack, axis=-1)

    def contains(self, x) -> bool:
        """Decide x in conv(vertices) with a small feasibility LP."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise DimensionMismatch(f"expected a point of dimension {self.dimension}")
        return convex_combination(self.vertices, x) is not None

    def support(self, u):
        u = np.asarray(u, dtype=float)
        return _scalar_or_array((u @ self.vertices.T).max(axis=-1))

    def translate(self, v, inner_radius=None):
        return Polytope(self.vertices + np.asarray(v, dtype=float), self.space)

    def scale(self, t):
        return Polytope(self.vertices * float(t), self.space)


def convex_combination(points, x, tol: float = 1e-9):
    """Convex weights expressing ``x`` from ``points``, or None."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    m = P.shape[0]
    A_eq = np.vstack([P.T, np.ones((1, m))])
    b_eq = np.append(np.asarray(x, dtype=float), 1.0)
    res = linprog(np.zeros(m), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        return None
    w = res.x
    if np.abs(A_eq @ w - b_eq).max() > tol * max(1.0, np.abs(b_eq).max()):
        return None
    return w


class NormBall(ConvexBody):
    """{x : |x - center| <= radius} in the norm ``ball_space``."""

    def __init__(self, ball_space: NormSpec, radius: float = 1.0, center=None,
                 space: NormSpec | None = None):
        self.ball_space = ball_space
        self.dimension = ball_space.dimension
        self.radius = float(radius)
        if not self.radius > 0:
            raise InvalidBody("ball radius must be positive")
        c = np.zeros(self.dimension) if center is None else np.asarray(center, dtype=float)
        self.center = check_dimension(ball_space, c)
        self.space = ball_space if space is None else space

    def _euclid_constants(self) -> tuple[float, float]:
        """(a, b) with |x|_2 <= a |x| and |x| <= b |x|_2."""
        bs = self.ball_space
        if bs.body is not None:
            return bs.body.outer_radius, 1.0 / bs.body.inner_radius
        n = bs.dimension
        inv_p = 0.0 if bs.p is INF else 1.0 / bs.p
        return n ** max(0.0, 0.5 - inv_p), n ** max(0.0, inv_p - 0.5)

    @cached_property
    def inner_radius(self) -> float:
        _, b = self._euclid_constants()
        return max(0.0, (self.radius - norm(self.ball_space, self.center)) / b)

    @cached_property
    def outer_radius(self) -> float:
        a, _ = self._euclid_constants()
        return float(np.linalg.norm(self.center)) + a * self.radius

    def member(self, X, slack=0.0):
        X = np.asarray(X, dtype=float)
        return np.asarray(norm(self.ball_space, X - self.center)) <= self.radius + slack

    def support(self, u):
        u = np.asarray(u, dtype=float)
        return _scalar_or_array(u @ self.center + self.radius * np.asarray(dual_norm(self.ball_space, u)))

    def translate(self, v, inner_radius=None):
        return NormBall(self.ball_space, self.radius, self.center + np.asarray(v, dtype=float), self.space)

    def scale(self, t):
        t = float(t)
        if t == 0:
            return Polytope(np.zeros((1, self.dimension)), self.space)
        return NormBall(self.ball_space, abs(t) * self.radius, t * self.center, self.space)


class HalfSpaceBody(ConvexBody):
    """Intersection of finitely many half-spaces {x : a_k . x <= b_k}."""

    def __init__(self, A, b, space: NormSpec | None = None):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.b = np.asarray(b, dtype=float).reshape(-1)
        if self.A.shape[0] != self.b.shape[0]:
            raise ValueError("A and b must have the same number of rows")
        self.dimension = self.A.shape[1]
        self.space = space

    @classmethod
    def from_halfspaces(cls, halfspaces: Sequence[HalfSpace], space: NormSpec | None = None):
        if not halfspaces:
            raise ValueError("need at least one half-space")
        space = space if space is not None else halfspaces[0].space
        return cls([h.f for h in halfspaces], [h.d for h in halfspaces], space)

    @cached_property
    def bounded(self) -> bool:
        n = self.dimension
        for c in np.vstack([np.eye(n), -np.eye(n)]):
            res = linprog(-c, A_ub=self.A, b_ub=self.b, bounds=(None, None), method="highs")
            if res.status == 3:
                return False
            if res.status == 2:
                raise InvalidBody("half-spaces have empty intersection")
        return True

    @cached_property
    def vertices(self) -> np.ndarray:
        if not self.bounded:
            raise InvalidBody("half-space intersection is unbounded")
        if self.dimension == 1:
            a = self.A[:, 0]
            hi = np.min(self.b[a > 0] / a[a > 0])
            lo = np.max(self.b[a < 0] / a[a < 0])
            return np.array([[lo], [hi]])
        interior = np.zeros(self.dimension)
        if not np.all(self.b > 0):
            interior = self._chebyshev_center()
        H = np.hstack([self.A, -self.b[:, None]])
        return HalfspaceIntersection(H, interior).intersections

    def _chebyshev_center(self) -> np.ndarray:
        n = self.dimension
        rn = np.linalg.norm(self.A, axis=1)
        c = np.zeros(n + 1)
        c[-1] = -1.0
        res = linprog(c, A_ub=np.hstack([self.A, rn[:, None]]), b_ub=self.b,
                      bounds=[(None, None)] * n + [(0, None)], method="highs")
        if res.status != 0 or res.x[-1] <= 0:
            raise InvalidBody("half-space intersection has empty interior")
        return res.x[:n]

    @cached_property
    def inner_radius(self) -> float:
        return max(0.0, float((self.b / np.linalg.norm(self.A, axis=1)).min()))

    @cached_property
    def outer_radius(self) -> float:
        return float(np.linalg.norm(self.vertices, axis=1).max())

    def member(self, X, slack=0.0):
        X = np.asarray(X, dtype=float)
        return np.all(X @ self.A.T <= self.b + slack, axis=-1)

    def support(self, u):
        u = np.asarray(u, dtype=float)
        if not self.bounded:
            return _scalar_or_array(np.full(u.shape[:-1], np.inf))
        return _scalar_or_array((u @ self.vertices.T).max(axis=-1))

    def translate(self, v, inner_radius=None):
        return HalfSpaceBody(self.A, self.b + self.A @ np.asarray(v, dtype=float), self.space)

    def scale(self, t):
        t = float(t)
        if t == 0:
            return Polytope(np.zeros((1, self.dimension)), self.space)
        return HalfSpaceBody(np.sign(t) * self.A, abs(t) * self.b, self.space)


class OracleBody(ConvexBody):
    """Body known only through a membership predicate and certified radii.

    ``predicate`` takes one point and must be free of side effects.
    Convexity is trusted.
    """

    BOUNDARY_SAMPLES = 4096

    def __init__(self, predicate: Callable[[np.ndarray], bool], dimension: int,
                 inner_radius: float, outer_radius: float, space: NormSpec | None = None):
        self.predicate = predicate
        self.dimension = int(dimension)
        self._r = float(inner_radius)
        self._R = float(outer_radius)
        if self._R <= 0 or self._r > self._R:
            raise InvalidBody("need 0 <= inner_radius <= outer_radius, outer_radius > 0")
        self.space = space

    @property
    def inner_radius(self):
        return self._r

    @property
    def outer_radius(self):
        return self._R

    def member(self, X, slack=0.0):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        # slack is realized by testing a slightly shrunk copy of the point
        shrink = 1.0 / (1.0 + slack / self._R) if slack > 0 else 1.0
        return np.array([bool(self.predicate(x * shrink)) for x in X])

    @cached_property
    def _boundary_samples(self) -> np.ndarray:
        dirs = sphere_points(self.dimension, self.BOUNDARY_SAMPLES, seed=7)
        return boundary_point(self, dirs)

    def support(self, u):
        """Sampled lower estimate from a fixed set of boundary points."""
        u = np.asarray(u, dtype=float)
        return _scalar_or_array((u @ self._boundary_samples.T).max(axis=-1))

    def translate(self, v, inner_radius=None):
        v = np.asarray(v, dtype=float)
        shift = float(np.linalg.norm(v))
        r = max(0.0, self._r - shift) if inner_radius is None else float(inner_radius)
        pred = self.predicate
        return OracleBody(lambda x: pred(x - v), self.dimension, r, self._R + shift, self.space)

    def scale(self, t):
        t = float(t)
        if t == 0:
            return Polytope(np.zeros((1, self.dimension)), self.space)
        pred = self.predicate
        return OracleBody(lambda x: pred(x / t), self.dimension, abs(t) * self._r,
                          abs(t) * self._R, self.space)


def contains(body: ConvexBody, x) -> bool:
    return body.contains(x)


def translate(body: ConvexBody, v, inner_radius: float | None = None) -> ConvexBody:
    """Translated copy of ``body``.

    The interior certificate is recomputed (or taken from ``inner_radius``
    for oracle bodies); check ``degenerate`` before computing gauges.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (body.dimension,):
        raise DimensionMismatch("translation vector has the wrong dimension")
    return body.translate(v, inner_radius)


def scale(body: ConvexBody, t: float) -> ConvexBody:
    """t * body.  ``t = 0`` gives the degenerate body {0}."""
    return body.scale(t)


def gauge(body: ConvexBody, x, tol: float = 1e-10):
    """inf{t > 0 : x / t in body}, by bisection on the membership oracle.

    Accepts a single point or a batch of shape ``(m, n)``.
    """
    if body.degenerate:
        raise InvalidBody("body has no interior certificate around 0")
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[-1] != body.dimension:
        raise DimensionMismatch(f"expected points of dimension {body.dimension}")
    r, R = body.inner_radius, body.outer_radius
    e = np.linalg.norm(X, axis=1)
    out = np.zeros(len(X))
    live = e > 0
    if np.any(live):
        Y = X[live]
        lo = e[live] / R * (1.0 - BRACKET_EPS)
        hi = e[live] / r * (1.0 + BRACKET_EPS)
        steps = BISECTION_STEPS
        width = float((hi - lo).max())
        if width > 0 and tol > 0:
            steps = max(steps, math.ceil(math.log2(width / tol)))
        slack = BISECTION_SLACK * R
        for _ in range(steps):
            mid = 0.5 * (lo + hi)
            inside = body.member(Y / mid[:, None], slack)
            hi = np.where(inside, mid, hi)
            lo = np.where(inside, lo, mid)
        out[live] = 0.5 * (lo + hi)
    return float(out[0]) if single else out


def boundary_point(body: ConvexBody, direction):
    """direction / gauge(direction); batched over rows."""
    D = np.asarray(direction, dtype=float)
    g = np.asarray(gauge(body, D))
    if np.any(g == 0):
        raise ZeroVector("boundary_point needs a nonzero direction")
    return D / g[..., None] if D.ndim == 2 else D / float(g)


def supporting_halfspace(body: ConvexBody, z) -> HalfSpace:
    """Supporting half-space at a smooth boundary point ``z``.

    The functional is the normalized numerical gradient of the gauge, so
    the result is unique exactly when the gauge is differentiable at ``z``.
    """
    z = np.asarray(z, dtype=float)
    gz = gauge(body, z)
    if abs(gz - 1.0) > 1e-4:
        raise NotOnBoundary(f"gauge at z is {gz:.9g}, not 1")
    grad = one_sided_gradient(lambda X: gauge(body, X), z)
    space = body.ambient
    f = grad / dual_norm(space, grad)
    return HalfSpace(f, float(f @ z), space)


def default_directions(n: int, count: int, seed: int = 0) -> np.ndarray:
    return np.array(sphere_points(n, count, seed))


def decompose(body: ConvexBody, N: int, direction_sampler=None, seed: int = 0,
              retries: int = 5, perturbation: float = 1e-3) -> list[HalfSpace]:
    """Supporting half-spaces at up to ``N`` smooth boundary points.

    ``direction_sampler`` is either an array of directions or a callable
    ``(n, N, seed) -> array``; the default is the low-discrepancy sphere
    sequence.  Directions that land on a kink are perturbed and retried.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    N = int(N)
    if direction_sampler is None:
        dirs = default_directions(body.dimension, N, seed)
    elif callable(direction_sampler):
        dirs = np.asarray(direction_sampler(body.dimension, N, seed), dtype=float)
    else:
        dirs = np.asarray(direction_sampler, dtype=float)[:N]
    rng = np.random.default_rng(seed)
    out = []
    for v in dirs:
        v = np.asarray(v, dtype=float)
        for attempt in range(retries + 1):
            try:
                out.append(supporting_halfspace(body, boundary_point(body, v)))
                break
            except NotSmooth:
                if attempt == retries:
                    break
                step = rng.standard_normal(body.dimension)
                v = v / np.linalg.norm(v) + perturbation * step / np.linalg.norm(step)
    if not out:
        raise NoSmoothPoints(f"none of the {len(dirs)} sampled boundary points is smooth")
    return out


def _dual_unit_directions(space: NormSpec, samples: int, seed: int) -> np.ndarray:
    U = np.array(sphere_points(space.dimension, samples, seed))
    if space.body is None and space.p is INF:
        n = space.dimension
        U = np.vstack([U, np.eye(n), -np.eye(n)])
    return U / np.asarray(dual_norm(space, U))[:, None]


def hausdorff_estimate(A: ConvexBody, B: ConvexBody, samples: int = 4096, seed: int = 0) -> float:
    """Sampled Hausdorff distance in the ambient norm of ``A``.

    Uses the support-function identity d_H = sup |h_A(u) - h_B(u)| over
    dual-unit functionals u.  Sampling gives a lower estimate whose gap
    shrinks like O(1/samples) for convex bodies.  Unbounded half-space
    intersections give ``inf``.
    """
    if A.dimension != B.dimension:
        raise DimensionMismatch("bodies have different dimensions")
    U = _dual_unit_directions(A.ambient, samples, seed)
    ha = np.asarray(A.support(U))
    hb = np.asarray(B.support(U))
    if np.any(np.isinf(ha)) or np.any(np.isinf(hb)):
        return math.inf
    return float(np.abs(ha - hb).max())


def intersection_body(halfspaces: Sequence[HalfSpace]) -> HalfSpaceBody:
    return HalfSpaceBody.from_halfspaces(halfspaces)


def lp_gauge(vertices, x) -> float:
    """Gauge of conv(vertices) at x from the LP min t s.t. x = V^T lam, sum lam = t."""
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    m = V.shape[0]
    A_eq = V.T
    res = linprog(np.ones(m), A_eq=A_eq, b_eq=np.asarray(x, dtype=float),
                  bounds=(0, None), method="highs")
    if res.status != 0:
        raise InvalidBody("LP gauge oracle failed; is 0 interior to the hull?")
    return float(res.fun)


__all__ = [
    "ConvexBody", "HalfSpace", "HalfSpaceBody", "NormBall", "OracleBody", "Polytope",
    "boundary_point", "contains", "convex_combination", "decompose", "gauge",
    "hausdorff_estimate", "intersection_body", "lp_gauge", "scale", "supporting_halfspace",
    "translate",
]
