"""Brute-force ground truth: best coapproximation on sampled sets,
optimality search, nonexpansiveness sweeps and the two classical examples
(a codimension-two subspace of l_inf^4 that is not an existence set, and a
nonconvex contractive cone in l_inf^2)."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import null_space, qr
from scipy.spatial import cKDTree

from .errors import SearchExhausted
from .spaces import NormSpec, norm, sphere_points

CHUNK_ELEMENTS = 4_000_000


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("COAPPROX_THREADS", "1")))
    except ValueError:
        return 1


def _map_chunks(fn, chunks):
    """Ordered map so reductions do not depend on the thread count."""
    workers = worker_count()
    if workers == 1 or len(chunks) < 2:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))


def kernel_basis(A) -> np.ndarray:
    """Basis of ker(A) in reduced form: identity on a set of pivot coordinates."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    N = null_space(A)
    k = N.shape[1]
    if k == 0:
        return N
    _, _, piv = qr(N.T, pivoting=True)
    rows = np.sort(piv[:k])
    B = N @ np.linalg.inv(N[rows])
    return np.round(B, 12) + 0.0


@dataclass(frozen=True, eq=False)
class SampledSet:
    """Finite discretization of a set F.

    ``h`` is the resolution, ``R`` the truncation radius and ``fill`` an
    upper bound (in the ambient norm) on the distance from a point of F
    with norm <= R - fill to the nearest sample.
    """

    points: np.ndarray
    provenance: str = "explicit"
    h: float = 0.0
    R: float = np.inf
    fill: float | None = None
    check: bool = True

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.points, dtype=float))
        if P.size == 0:
            raise ValueError("a sampled set needs at least one point")
        P.setflags(write=False)
        object.__setattr__(self, "points", P)
        if self.fill is None:
            object.__setattr__(self, "fill", float(self.h))
        if self.check and self.h > 0 and len(P) > 1:
            pairs = cKDTree(P).query_pairs(self.h / 10.0, output_type="ndarray")
            if len(pairs):
                raise ValueError(f"{len(pairs)} sample pairs closer than h/10")

    def __len__(self):
        return len(self.points)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @classmethod
    def subspace_grid(cls, basis, h: float, R: float, space: NormSpec) -> SampledSet:
        """Grid of spacing ``h`` in the coordinates of ``basis``, truncated to |x| <= R."""
        B = np.atleast_2d(np.asarray(basis, dtype=float))
        k = B.shape[1]
        # |coef|_inf <= |B^+|_{inf->inf} |x|_inf <= |B^+|_{inf->inf} |x|
        pinv = np.linalg.pinv(B)
        reach = R * np.abs(pinv).sum(axis=1).max()
        if space.body is not None:
            reach *= space.body.outer_radius
        steps = int(np.ceil(reach / h))
        axis = np.arange(-steps, steps + 1) * h
        coef = np.stack(np.meshgrid(*([axis] * k), indexing="ij"), axis=-1).reshape(-1, k)
        pts = coef @ B.T
        keep = np.asarray(norm(space, pts)) <= R * (1 + 1e-12)
        fill = 0.5 * h * float(np.sum(np.asarray(norm(space, B.T))))
        return cls(pts[keep], "grid", h, R, fill, check=False)

    @classmethod
    def parametrized_grid(cls, fn: Callable[[np.ndarray], np.ndarray], lower, upper, h: float,
                          space: NormSpec) -> SampledSet:
        """Images under ``fn`` of a parameter grid with spacing ``h``."""
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        axes = [np.linspace(a, b, int(round((b - a) / h)) + 1) for a, b in zip(lower, upper)]
        T = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
        pts = np.asarray(fn(T), dtype=float)
        R = float(np.max(norm(space, pts)))
        return cls(pts, "grid", h, R)


@dataclass
class CoapproxReport:
    x: np.ndarray
    d: np.ndarray | None
    candidate: np.ndarray
    margin: float
    samples: int
    h: float
    R: float
    tol: float = 0.0
    exact_evaluations: int = 0

    @property
    def passed(self) -> bool:
        return self.margin <= self.tol


def coapprox_margins(space: NormSpec, C, D, x) -> np.ndarray:
    """max over c in C of |d - c| - |x - c|, for every row d of D."""
    C = np.atleast_2d(np.asarray(C, dtype=float))
    D = np.atleast_2d(np.asarray(D, dtype=float))
    x = np.asarray(x, dtype=float)
    xc = np.asarray(norm(space, x - C))
    rows = max(1, CHUNK_ELEMENTS // (C.shape[0] * C.shape[1]))
    chunks = [D[i : i + rows] for i in range(0, len(D), rows)]

    def work(block):
        dist = np.asarray(norm(space, block[:, None, :] - C[None, :, :]))
        return (dist - xc[None, :]).max(axis=1)

    return np.concatenate(_map_chunks(work, chunks)) if chunks else np.empty(0)


def is_coapprox(space: NormSpec, F: SampledSet, d, x, tol: float = 1e-9) -> bool:
    """|d - c| <= |x - c| + tol for every sample c of F."""
    return bool(coapprox_margins(space, F.points, np.asarray(d)[None, :], x)[0] <= tol)


def _probe_indices(F: SampledSet, space: NormSpec, x, count: int = 1024) -> np.ndarray:
    n = len(F)
    stride = max(1, n // count)
    idx = set(range(0, n, stride))
    dx = np.asarray(norm(space, F.points - np.asarray(x)))
    idx.update(np.argsort(dx, kind="stable")[:16].tolist())
    d0 = np.asarray(norm(space, F.points))
    idx.add(int(np.argmin(d0)))
    return np.array(sorted(idx))


def find_coapprox(space: NormSpec, F: SampledSet, x, tol: float = 0.0,
                  candidates=None) -> CoapproxReport:
    """Candidate d in F minimizing the worst-case margin against all samples.

    Exhaustive over the candidates (default: all samples), made fast by a
    branch-and-bound pass: margins against a probe subset are lower bounds
    on the true margins, so candidates are visited in increasing
    lower-bound order and the scan stops once no remaining bound can beat
    the best exact margin.
    """
    x = np.asarray(x, dtype=float)
    C = F.points
    D = C if candidates is None else np.atleast_2d(np.asarray(candidates, dtype=float))
    probes = C[_probe_indices(F, space, x)]
    lower = coapprox_margins(space, probes, D, x)
    order = np.argsort(lower, kind="stable")
    best, best_i, evaluated = np.inf, -1, 0
    block = 64
    for start in range(0, len(order), block):
        idx = order[start : start + block]
        if lower[idx[0]] >= best:
            break
        exact = coapprox_margins(space, C, D[idx], x)
        evaluated += len(idx)
        j = int(np.argmin(exact))
        if exact[j] < best:
            best, best_i = float(exact[j]), int(idx[j])
    cand = D[best_i].copy()
    return CoapproxReport(x, cand if best <= tol else None, cand, best, len(C), F.h, F.R,
                          tol, evaluated)


@dataclass
class OptimalityCheck:
    optimal: bool
    witness: np.ndarray | None
    evaluations: int
    separation: float

    def __bool__(self):
        return self.optimal


def is_optimal_point(space: NormSpec, F: SampledSet, z, trial_budget: int = 2000, seed: int = 0,
                     start=None, separation: float | None = None,
                     tol: float = 1e-12) -> OptimalityCheck:
    """Search for x != z with |x - c| <= |z - c| for every sample c.

    Finding such an x shows z is not in Min(F).  Candidates closer to z
    than ``separation`` (default: twice the sample fill distance) are
    ignored, since sampling cannot tell them apart from z; ``tol``
    absorbs rounding in the inequalities.  One-sided: a failed search is
    reported as optimal.
    """
    z = np.asarray(z, dtype=float)
    C = F.points
    sep = 2.0 * F.fill * (1 + 1e-9) + 1e-12 if separation is None else float(separation)
    zc = np.asarray(norm(space, z - C))
    rng = np.random.default_rng(seed)
    evals = 0

    def phi(X):
        nonlocal evals
        X = np.atleast_2d(X)
        evals += len(X)
        rows = max(1, CHUNK_ELEMENTS // (C.shape[0] * C.shape[1]))
        out = []
        for i in range(0, len(X), rows):
            dist = np.asarray(norm(space, X[i : i + rows, None, :] - C[None, :, :]))
            out.append((dist - zc[None, :]).max(axis=1))
        return np.concatenate(out)

    def far(X):
        return np.asarray(norm(space, np.atleast_2d(X) - z)) >= sep

    dz = np.asarray(norm(space, C - z))
    scale = max(float(dz.min()), F.h, 1e-3)
    cands = []
    if start is not None:
        cands.append(np.asarray(start, dtype=float))
    cands.extend(C[np.argsort(dz, kind="stable")[:32]])
    U = sphere_points(space, 64, seed)
    for r in (0.5, 1.0, 2.0, 4.0):
        cands.extend(z + r * scale * U)
    X = np.array(cands)
    X = X[far(X)]
    if len(X):
        vals = phi(X)
        hit = np.flatnonzero(vals <= tol)
        if hit.size:
            return OptimalityCheck(False, X[hit[0]].copy(), evals, sep)
        starts = X[np.argsort(vals, kind="stable")[:3]]
    else:
        starts = z + sep * 2.0 * U[:3]
    n = z.shape[0]
    for x in starts:
        x = x.copy()
        val = float(phi(x)[0])
        step = 0.5 * scale
        while evals < trial_budget and step > 1e-7 * scale:
            improved = False
            trials = np.vstack([x + step * e for e in np.vstack([np.eye(n), -np.eye(n)])])
            trials = np.vstack([trials, x + step * rng.standard_normal((2, n))])
            ok = far(trials)
            if np.any(ok):
                tv = np.full(len(trials), np.inf)
                tv[ok] = phi(trials[ok])
                k = int(np.argmin(tv))
                if tv[k] < val:
                    x, val, improved = trials[k], float(tv[k]), True
                    if val <= tol:
                        return OptimalityCheck(False, x, evals, sep)
            if not improved:
                step *= 0.5
        if evals >= trial_budget:
            break
    return OptimalityCheck(True, None, evals, sep)


# ---------------------------------------------------------------------------
# l_inf^4: ker(f1) and ker(f1) & ker(f2)

F1 = np.array([1.0, 0.0, 0.0, 0.0])
F2 = np.array([0.5, 1 / 6, 1 / 6, 1 / 6])


@dataclass
class CounterexampleReport:
    x: np.ndarray
    delta: float
    candidate: np.ndarray
    h: float
    R: float
    seed: int
    fill: float
    samples: int
    queries_tried: int
    certified: bool = True


def verify_counterexample_linf4(h: float = 0.05, R: float = 10.0, seed: int = 0,
                                max_queries: int = 64) -> CounterexampleReport:
    """Find a unit x in l_inf^4 with R_F(x) empty for F = ker f1 & ker f2.

    A query is certified when the best grid candidate still fails by more
    than the grid fill distance: the margin is 1-Lipschitz in d, so every
    d in F near the grid fails too, and the violated inequality only
    involves sampled (hence genuine) points c of F.
    """
    space = NormSpec.lp(4, "inf")
    F = SampledSet.subspace_grid(kernel_basis([F1, F2]), h, R, space)
    queries = sphere_points(space, max_queries, seed)
    for i, x in enumerate(queries):
        rep = find_coapprox(space, F, x)
        if rep.margin > F.fill:
            return CounterexampleReport(x.copy(), rep.margin, rep.candidate, h, R, seed, F.fill,
                                        len(F), i + 1)
    raise SearchExhausted(
        f"no query among {max_queries} fails by more than the fill distance {F.fill:g}"
    )


@dataclass
class ControlReport:
    margins: list = field(default_factory=list)
    queries: list = field(default_factory=list)
    fill: float = 0.0
    h: float = 0.0
    R: float = 0.0

    @property
    def max_margin(self) -> float:
        return max(self.margins)


def control_single_kernel(h: float = 0.2, R: float = 2.0, queries: int = 8, seed: int = 0,
                          aligned: bool = False) -> ControlReport:
    """The same scan for F = ker f1, which is one-complemented in l_inf^4.

    Margins should not exceed the fill distance.  With ``aligned`` the
    queries are snapped so their coordinate projection is a grid point,
    in which case the margin is exactly <= 0.
    """
    space = NormSpec.lp(4, "inf")
    F = SampledSet.subspace_grid(kernel_basis([F1]), h, R, space)
    X = np.array(sphere_points(space, queries, seed))
    if aligned:
        X[:, 1:] = np.round(X[:, 1:] / h) * h
    out = ControlReport(fill=F.fill, h=h, R=R)
    for x in X:
        rep = find_coapprox(space, F, x)
        out.margins.append(rep.margin)
        out.queries.append(x)
    return out


# ---------------------------------------------------------------------------
# nonconvex contractive set in l_inf^2


def nonconvex_projection_linf2(x) -> np.ndarray:
    """Retraction of l_inf^2 onto {(x, y) : |y| <= |x|}; sgn(0) = +1."""
    X = np.asarray(x, dtype=float)
    a, b = X[..., 0], X[..., 1]
    s = np.where(b >= 0, 1.0, -1.0)
    outside = np.abs(b) > np.abs(a)
    new_b = np.where(outside, np.where(a >= 0, s * a, -s * a), b)
    return np.stack([a, new_b], axis=-1)


@dataclass
class SweepReport:
    max_ratio: float
    pairs: int
    worst: tuple | None = None


def random_pairs(n: int, pairs: int, seed: int = 0, scale: float = 3.0):
    """Mix of far pairs at several scales and near pairs."""
    rng = np.random.default_rng(seed)
    scales = scale * np.array([0.1, 1.0, 10.0])[rng.integers(0, 3, pairs)][:, None]
    X = scales * rng.standard_normal((pairs, n))
    Z = scales * rng.standard_normal((pairs, n))
    near = rng.random(pairs) < 1 / 3
    Z[near] = X[near] + 1e-2 * scales[near] * rng.standard_normal((int(near.sum()), n))
    return X, Z


def expansion_ratios(space: NormSpec, X, Z, MX, MZ, min_sep: float = 1e-6) -> SweepReport:
    """Worst |Mx - Mz| / |x - z| from precomputed images, skipping near-coincident pairs."""
    X, Z = np.asarray(X, dtype=float), np.asarray(Z, dtype=float)
    den = np.asarray(norm(space, X - Z))
    keep = np.flatnonzero(den >= min_sep)
    num = np.asarray(norm(space, np.asarray(MX)[keep] - np.asarray(MZ)[keep]))
    ratio = num / den[keep]
    k = int(np.argmax(ratio))
    return SweepReport(float(ratio[k]), int(len(ratio)), (X[keep[k]].copy(), Z[keep[k]].copy()))


def nonexpansiveness_sweep(M: Callable, space: NormSpec, pairs: int = 100_000, seed: int = 0,
                           X=None, Z=None, min_sep: float = 1e-6) -> SweepReport:
    """max |Mx - Mz| / |x - z| over sampled pairs with |x - z| >= min_sep."""
    if X is None or Z is None:
        X, Z = random_pairs(space.dimension, pairs, seed)
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    return expansion_ratios(space, X, Z, M(X), M(Z), min_sep)
