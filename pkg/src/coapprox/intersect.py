"""Averaged nonexpansive maps and projections onto intersections of
contractive half-spaces."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import MaxIterExceeded
from .gauge import HalfSpace
from .halfspace import HalfSpaceProjection, halfspace_projection
from .spaces import NormSpec, norm

WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class AveragedMap:
    """x -> sum_k a_k M_k(x) with positive weights summing to one."""

    weights: np.ndarray
    maps: tuple[Callable[[np.ndarray], np.ndarray], ...]
    space: NormSpec

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(self.maps) or len(w) == 0:
            raise ValueError("need one positive weight per map")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError("weights must be positive and sum to 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "maps", tuple(self.maps))

    @property
    def components(self):
        return list(zip(self.weights, self.maps))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a, m in zip(self.weights, self.maps):
            out += a * np.asarray(m(x))
        return out


def default_weights(k: int) -> np.ndarray:
    """2^-1, 2^-2, ..., 2^-k renormalized to sum to one."""
    w = 0.5 ** np.arange(1, k + 1)
    return w / w.sum()


def averaged_map(projections: Sequence[HalfSpaceProjection], weights=None,
                 space: NormSpec | None = None) -> AveragedMap:
    if not projections:
        raise ValueError("averaged_map needs at least one projection")
    if weights is None:
        weights = default_weights(len(projections))
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(projections),):
        raise ValueError(f"got {weights.shape[0]} weights for {len(projections)} maps")
    if space is None:
        space = projections[0].space
    return AveragedMap(weights, tuple(projections), space)


def zero_in_hull(ys) -> bool:
    """Whether 0 is a convex combination of the given points (feasibility LP)."""
    Y = np.atleast_2d(np.asarray(ys, dtype=float))
    if Y.size == 0:
        raise ValueError("zero_in_hull needs at least one point")
    m, n = Y.shape
    A_eq = np.vstack([Y.T, np.ones((1, m))])
    b_eq = np.append(np.zeros(n), 1.0)
    res = linprog(np.zeros(m), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return res.status == 0


@dataclass(frozen=True)
class IterationConfig:
    max_iter: int = 10_000
    tol: float = 1e-10
    relaxation: float = 0.5

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.relaxation <= 1:
            raise ValueError("relaxation must lie in (0, 1]")


class FixedPointResult(NamedTuple):
    point: np.ndarray
    iterations: int
    residual: float


def fixed_point(Q: Callable, x0, cfg: IterationConfig = IterationConfig(),
                space: NormSpec | None = None) -> FixedPointResult:
    """Relaxed iteration x <- (1 - lam) x + lam Q(x).

    Works on one point or a batch of rows; the residual is the largest
    step length in the batch, measured in ``space`` (default: the map's
    own space).  Raises :class:`MaxIterExceeded` with the last iterate when
    the budget runs out.
    """
    space = space or getattr(Q, "space", None)
    x = np.array(x0, dtype=float)
    lam = cfg.relaxation
    residual = np.inf
    for it in range(1, cfg.max_iter + 1):
        nxt = (1.0 - lam) * x + lam * np.asarray(Q(x))
        step = nxt - x
        residual = float(np.max(norm(space, step))) if space is not None else float(np.abs(step).max())
        x = nxt
        if residual <= cfg.tol:
            return FixedPointResult(x, it, residual)
    raise MaxIterExceeded(
        f"no convergence in {cfg.max_iter} iterations (residual {residual:.3g})",
        point=x, iterations=cfg.max_iter, residual=residual,
    )


def _as_projections(halfspaces) -> list[HalfSpaceProjection]:
    out = []
    for h in halfspaces:
        if isinstance(h, HalfSpaceProjection):
            out.append(h)
        elif isinstance(h, HalfSpace):
            out.append(halfspace_projection(h))
        else:
            raise TypeError(f"expected HalfSpace or HalfSpaceProjection, got {type(h).__name__}")
    return out


def project_onto_intersection(halfspaces, x, cfg: IterationConfig = IterationConfig(),
                              weights=None) -> np.ndarray:
    """Fixed point of the averaged projection map started at ``x``."""
    projections = _as_projections(halfspaces)
    Q = averaged_map(projections, weights)
    return fixed_point(Q, x, cfg).point


def intersection_violation(projections: Sequence[HalfSpaceProjection], x) -> np.ndarray:
    """max_k (f_k(x) - d_k)^+ per point."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = np.stack([p.f @ x.T - p.d for p in projections], axis=0)
    return np.maximum(v.max(axis=0), 0.0)


@dataclass
class FixCheckReport:
    trials: int
    converged: int
    max_violation: float
    violators: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violators


def strictly_convex_fix_check(projections: Sequence[HalfSpaceProjection], space: NormSpec,
                              trials: int = 1000, seed: int = 0, weights=None,
                              cfg: IterationConfig = IterationConfig(max_iter=20_000, tol=1e-10),
                              member_tol: float = 1e-6, scale: float = 3.0) -> FixCheckReport:
    """Check by sampling that fixed points of the averaged map lie in every F_k.

    Only meaningful for strictly convex norms, where the averaged map's
    fixed-point set equals the intersection.
    """
    if not space.is_strictly_convex:
        raise ValueError(f"{space.label()} is not strictly convex")
    Q = averaged_map(list(projections), weights, space)
    rng = np.random.default_rng(seed)
    X0 = scale * rng.standard_normal((trials, space.dimension))
    try:
        res = fixed_point(Q, X0, cfg, space)
        X, converged = res.point, trials
    except MaxIterExceeded as exc:
        X = exc.point
        last = X - ((1 - cfg.relaxation) * X + cfg.relaxation * Q(X))
        converged = int(np.sum(np.asarray(norm(space, last)) <= 1e-8))
    viol = intersection_violation(projections, X)
    bad = np.flatnonzero(viol > member_tol)
    return FixCheckReport(trials, converged, float(viol.max()), [X[i] for i in bad])
