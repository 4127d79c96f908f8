"""Norm-one projections onto hyperplanes and contractive projections onto
half-spaces.

A kernel projection has the form ``P w = w - f(w) y`` with ``f(y) = 1``.
The half-space retraction ``Q`` is the identity on ``{f <= d}`` and
``x - f(x - z) y`` outside it, where ``f(z) = d``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog, minimize_scalar

from .errors import NotCertified, NotFound, SelectionInvalid, ZeroFunctional
from .gauge import HalfSpace
from .spaces import (
    INF,
    NormSpec,
    check_dimension,
    extreme_points,
    norm,
    sphere_points,
    supporting_functional,
)

SPARSITY_TOL = 1e-12
CERTIFY_TOL = 1e-6
OPNORM_SAMPLES = 20_000
SEARCH_SAMPLES = 2048
SEARCH_RESTARTS = 200


def _nonzero(f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    scale = np.abs(f).max() if f.size else 0.0
    if not scale > 0:
        raise ZeroFunctional("functional is identically zero")
    return np.abs(f) > SPARSITY_TOL * scale


def is_one_complemented_hyperplane_l1(f) -> bool:
    """ker(f) is one-complemented in l_1^n iff f has at most two nonzeros."""
    return int(_nonzero(f).sum()) <= 2


def dominated_coordinate(f) -> int | None:
    """Smallest j with |f_j| >= sum_{i != j} |f_i|, or None."""
    _nonzero(f)
    a = np.abs(np.asarray(f, dtype=float))
    total = a.sum()
    ok = a >= (total - a) - SPARSITY_TOL * total
    hits = np.flatnonzero(ok)
    return int(hits[0]) if hits.size else None


def is_one_complemented_hyperplane_linf(f) -> bool:
    """ker(f) is one-complemented in l_inf^n iff some coordinate dominates."""
    return dominated_coordinate(f) is not None


def kernel_matrix(f, y) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.eye(f.shape[0]) - np.outer(y, f)


def operator_norm_estimate(space: NormSpec, M, samples: int = OPNORM_SAMPLES, seed: int = 0) -> float:
    """Sampled sup of |M w| over the unit sphere of ``space``.

    Always a lower bound.  The extreme points of the unit ball are added
    for l_1 (+-e_i) and l_inf (sign vectors), which makes the value exact
    for those norms.
    """
    M = np.asarray(M, dtype=float)
    W = sphere_points(space, samples, seed)
    ext = extreme_points(space)
    if ext is not None:
        W = np.vstack([W, ext])
    return float(np.max(norm(space, W @ M.T)))


@dataclass(frozen=True, eq=False)
class KernelProjection:
    """Linear projection ``w -> w - f(w) y`` onto ker(f)."""

    f: np.ndarray
    y: np.ndarray
    space: NormSpec | None = None
    norm_estimate: float | None = None

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if f.shape != y.shape:
            raise ValueError("f and y must have the same length")
        if abs(float(f @ y) - 1.0) > 1e-10:
            raise ValueError(f"need f(y) = 1, got {float(f @ y)!r}")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "y", y)

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        return w - (w @ self.f)[..., None] * self.y

    @property
    def matrix(self) -> np.ndarray:
        return kernel_matrix(self.f, self.y)

    def estimate_norm(self, space: NormSpec | None = None, samples: int = OPNORM_SAMPLES) -> float:
        space = space or self.space
        return operator_norm_estimate(space, self.matrix, samples)


# ---------------------------------------------------------------------------
# search for y


def _two_sparse_l1(f, i, j) -> np.ndarray:
    """Exact minimizer of the l_1 operator norm over y in span(e_i, e_j).

    On the line {f(y) = 1} inside the span the operator norm is convex and
    piecewise linear, so it suffices to compare its kink points.
    """
    a, b = f[i], f[j]
    y0 = np.array([a, b]) / (a * a + b * b)
    w = np.array([-b, a])
    fb = np.array([a, b])
    kinks = [0.0]
    for r in range(2):
        for k in range(2):
            slope = w[r] * fb[k]
            if slope != 0:
                kinks.append(((1.0 if r == k else 0.0) - y0[r] * fb[k]) / slope)

    def block_norm(s):
        yb = y0 + s * w
        Mb = np.eye(2) - np.outer(yb, fb)
        return np.abs(Mb).sum(axis=0).max()

    s = min(kinks, key=block_norm)
    y = np.zeros_like(f)
    y[[i, j]] = y0 + s * w
    return y


def _two_sparse_support(space: NormSpec, f, i, j) -> np.ndarray | None:
    """y from the supporting functional of the kernel direction in the
    (i, j) coordinate block; norm one for any l_p because the block splits
    off as an l_p-sum."""
    v = np.array([-f[j], f[i]])
    try:
        phi = supporting_functional(NormSpec.lp(2, space.p), v)
    except Exception:
        return None
    A = np.array([[f[i], f[j]], [phi[0], phi[1]]])
    if abs(np.linalg.det(A)) < 1e-14:
        return None
    y = np.zeros_like(f)
    y[[i, j]] = np.linalg.solve(A, [1.0, 0.0])
    return y


def closed_form_candidates(space: NormSpec, f) -> list[tuple[str, np.ndarray]]:
    """Directions y known to give norm-one projections, by case."""
    f = np.asarray(f, dtype=float)
    nz = np.flatnonzero(_nonzero(f))
    out = []
    if space.body is not None:
        return out
    if space.p == 2.0:
        out.append(("l2-orthogonal", f / (f @ f)))
    if space.p is INF:
        j = dominated_coordinate(f)
        if j is not None:
            y = np.zeros_like(f)
            y[j] = 1.0 / f[j]
            out.append(("linf-dominated", y))
    if nz.size == 1:
        y = np.zeros_like(f)
        y[nz[0]] = 1.0 / f[nz[0]]
        out.append(("coordinate", y))
    elif nz.size == 2:
        i, j = int(nz[0]), int(nz[1])
        fz = np.where(_nonzero(f), f, 0.0)
        if space.p == 1.0:
            out.append(("l1-two-sparse", _two_sparse_l1(fz, i, j)))
        else:
            y = _two_sparse_support(space, fz, i, j)
            if y is not None:
                out.append(("lp-two-sparse", y))
    return out


def _polyhedral_lp(space: NormSpec, f) -> np.ndarray | None:
    """Exact minimum of the l_1 or l_inf operator norm of I - y f^T."""
    n = f.shape[0]
    nv = n + n * n + 1
    t = lambda i, k: n + i * n + k  # noqa: E731
    rows, rhs = [], []
    for i in range(n):
        for k in range(n):
            delta = 1.0 if i == k else 0.0
            r = np.zeros(nv)
            r[t(i, k)] = -1.0
            r[i] = -f[k]
            rows.append(r)
            rhs.append(-delta)
            r = np.zeros(nv)
            r[t(i, k)] = -1.0
            r[i] = f[k]
            rows.append(r)
            rhs.append(delta)
    for a in range(n):
        r = np.zeros(nv)
        for b in range(n):
            r[t(a, b) if space.p is INF else t(b, a)] = 1.0
        r[-1] = -1.0
        rows.append(r)
        rhs.append(0.0)
    A_eq = np.zeros((1, nv))
    A_eq[0, :n] = f
    c = np.zeros(nv)
    c[-1] = 1.0
    bounds = [(None, None)] * n + [(0, None)] * (n * n) + [(0, None)]
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), A_eq=A_eq, b_eq=[1.0],
                  bounds=bounds, method="highs")
    if res.status != 0:
        return None
    y = res.x[:n]
    return y / (f @ y)


def _coordinate_descent(space: NormSpec, f, budget: int, seed: int) -> np.ndarray:
    """Minimize the sampled operator norm over the affine slice {f(y) = 1}."""
    rng = np.random.default_rng(seed)
    y0 = f / (f @ f)
    K = null_space(f[None, :])
    W = sphere_points(space, SEARCH_SAMPLES, seed)
    ext = extreme_points(space)
    if ext is not None:
        W = np.vstack([W, ext])
    evals = 0

    def objective(c):
        nonlocal evals
        evals += 1
        y = y0 + K @ c
        P = W - np.outer(W @ f, y)
        return float(np.max(norm(space, P)))

    best_c = np.zeros(K.shape[1])
    best = objective(best_c)
    scale = float(np.linalg.norm(y0))
    for restart in range(SEARCH_RESTARTS):
        if evals >= budget:
            break
        c = best_c.copy() if restart == 0 else best_c + scale * rng.standard_normal(K.shape[1])
        val = objective(c)
        for _sweep in range(4):
            before = val
            for k in range(K.shape[1]):
                if evals >= budget:
                    break

                def line(s, k=k, c=c):
                    trial = c.copy()
                    trial[k] = s
                    return objective(trial)

                r = minimize_scalar(line, bracket=(c[k] - scale, c[k] + scale),
                                    options={"maxiter": 40})
                if r.fun < val:
                    c[k] = r.x
                    val = r.fun
            if before - val < 1e-9 or evals >= budget:
                break
        if val < best:
            best, best_c = val, c.copy()
    return y0 + K @ best_c


def find_norm_one_projection(space: NormSpec, f, budget: int = 3000, seed: int = 0,
                             samples: int = OPNORM_SAMPLES) -> KernelProjection:
    """Search for y with f(y) = 1 making ``w -> w - f(w) y`` norm one.

    Closed forms are tried first (l_2, dominated l_inf coordinate, at most
    two nonzero coefficients).  Otherwise l_1 / l_inf use an exact linear
    program and other norms a budgeted coordinate descent.  Raises
    :class:`NotFound` carrying the best sampled estimate when no candidate
    certifies at 1 + 1e-6.
    """
    f = check_dimension(space, f).astype(float)
    _nonzero(f)
    best_est, best_y = np.inf, None
    for _label, y in closed_form_candidates(space, f):
        est = operator_norm_estimate(space, kernel_matrix(f, y), samples, seed)
        if est <= 1.0 + CERTIFY_TOL:
            return KernelProjection(f, y, space, est)
        if est < best_est:
            best_est, best_y = est, y
    if space.is_polyhedral:
        y = _polyhedral_lp(space, f)
    else:
        y = _coordinate_descent(space, f, budget, seed)
    if y is not None:
        est = operator_norm_estimate(space, kernel_matrix(f, y), samples, seed)
        if est <= 1.0 + CERTIFY_TOL:
            return KernelProjection(f, y, space, est)
        if est < best_est:
            best_est, best_y = est, y
    raise NotFound(
        f"no norm-one projection onto ker(f) in {space.label()}; best estimate {best_est:.9g}",
        estimate=float(best_est), y=best_y,
    )


# ---------------------------------------------------------------------------
# half-space retraction


@dataclass(frozen=True, eq=False)
class HalfSpaceProjection:
    """Contractive retraction onto {f <= d}.

    Build it with :func:`halfspace_projection`, which certifies that the
    underlying kernel projection has norm one.
    """

    halfspace: HalfSpace
    y: np.ndarray
    anchor: np.ndarray | None = None
    norm_estimate: float | None = None
    _fz: float = field(init=False, repr=False, default=0.0)

    def __post_init__(self):
        f = self.halfspace.f
        y = np.asarray(self.y, dtype=float)
        z = self.halfspace.d * y if self.anchor is None else np.asarray(self.anchor, dtype=float)
        if abs(float(f @ y) - 1.0) > 1e-10:
            raise ValueError("need f(y) = 1")
        if abs(float(f @ z) - self.halfspace.d) > 1e-10 * max(1.0, abs(self.halfspace.d)):
            raise ValueError("anchor must satisfy f(z) = d")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "anchor", z)
        object.__setattr__(self, "_fz", float(f @ z))

    @property
    def f(self) -> np.ndarray:
        return self.halfspace.f

    @property
    def d(self) -> float:
        return self.halfspace.d

    @property
    def space(self) -> NormSpec:
        return self.halfspace.space

    @property
    def kernel(self) -> KernelProjection:
        return KernelProjection(self.f, self.y, self.space, self.norm_estimate)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        fx = x @ self.f
        excess = np.where(fx <= self.d, 0.0, fx - self._fz)
        return x - excess[..., None] * self.y

    def contains(self, x, tol: float = 0.0):
        return self.halfspace.contains(x, tol)


def halfspace_projection(halfspace: HalfSpace, kernel: KernelProjection | None = None,
                         anchor=None, budget: int = 3000, seed: int = 0) -> HalfSpaceProjection:
    """Certified contractive projection onto ``halfspace``.

    Raises :class:`NotCertified` if the kernel projection's sampled norm
    exceeds 1 + 1e-6 (or none can be found).
    """
    space = halfspace.space
    if kernel is None:
        try:
            kernel = find_norm_one_projection(space, halfspace.f, budget=budget, seed=seed)
        except NotFound as exc:
            raise NotCertified(str(exc), estimate=exc.estimate) from None
    est = kernel.norm_estimate
    if est is None or kernel.space != space:
        est = operator_norm_estimate(space, kernel.matrix)
    if est > 1.0 + CERTIFY_TOL:
        raise NotCertified(f"kernel projection has norm estimate {est:.9g} > 1", estimate=est)
    if not np.allclose(kernel.f, halfspace.f, rtol=0, atol=1e-12):
        raise ValueError("kernel projection belongs to a different functional")
    return HalfSpaceProjection(halfspace, kernel.y, anchor, est)


def contractive_projection(hp: HalfSpaceProjection, x):
    return hp(x)


def kernel_retraction(f, P: Callable[[np.ndarray], np.ndarray], x) -> np.ndarray:
    """Map ``x`` into ker(f) using a selection ``P`` into {f <= 0}.

    Interpolates between ``x`` and ``P x`` (or the mirrored selection
    ``-P(-x)`` when f(x) < 0) at the zero crossing of f.
    """
    f = np.asarray(f, dtype=float)
    x = np.asarray(x, dtype=float)
    fx = float(x @ f)
    if fx == 0.0:
        return x.copy()
    if fx > 0:
        p = np.asarray(P(x), dtype=float)
    else:
        p = -np.asarray(P(-x), dtype=float)
    fp = float(p @ f)
    # selections onto the boundary land there only up to rounding
    slack = 1e-12 * max(1.0, float(np.abs(f) @ np.abs(p)))
    if fx > 0 and fp > slack:
        raise SelectionInvalid(f"selection left the half-space: f(Px) = {fp:.3g} > 0")
    if fx < 0 and fp < -slack:
        raise SelectionInvalid(f"mirrored selection has f(P1 x) = {fp:.3g} < 0")
    if fx == fp:
        return p
    alpha = -fp / (fx - fp)
    out = alpha * x + (1.0 - alpha) * p
    # remove the rounding residue along the interpolation segment
    r = float(out @ f)
    if r != 0.0 and fx != fp:
        out = out - r / (fx - fp) * (x - p)
    return out


def homogeneous_extension(P0: Callable[[np.ndarray], np.ndarray], x, space: NormSpec) -> np.ndarray:
    """Extend a selection defined on the unit sphere: x -> |x| P0(x / |x|)."""
    x = check_dimension(space, x)
    nx = norm(space, x)
    if nx == 0:
        return np.zeros_like(x)
    return nx * np.asarray(P0(x / nx), dtype=float)
