"""Finite-dimensional normed spaces: l_p norms, gauge norms, duality and
complex-to-real coordinate splitting.

Points are plain numpy arrays.  Every norm routine reduces over the last
axis, so a batch of points of shape ``(m, n)`` is evaluated in one call.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING, Callable

import numpy as np
from scipy.stats import norm as _gaussian, qmc

from .errors import DimensionMismatch, NotSmooth, ZeroVector

if TYPE_CHECKING:
    from .gauge import ConvexBody

FD_STEP = 1e-6
SMOOTHNESS_JUMP = 1e-4


class Exponent(enum.Enum):
    INF = "inf"

    def __repr__(self):
        return "INF"


INF = Exponent.INF


def parse_exponent(p) -> float | Exponent:
    """Accept ``"inf"``, ``math.inf`` or a real number >= 1."""
    if p is INF:
        return INF
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "oo"):
            return INF
        p = float(p)
    p = float(p)
    if math.isinf(p) and p > 0:
        return INF
    if not p >= 1.0:
        raise ValueError(f"norm exponent must be >= 1 or 'inf', got {p!r}")
    return p


def conjugate_exponent(p: float | Exponent) -> float | Exponent:
    if p is INF:
        return 1.0
    if p == 1.0:
        return INF
    return p / (p - 1.0)


@dataclass(frozen=True)
class NormSpec:
    """Which norm the ambient space carries.

    Either an l_p norm (``p`` a float >= 1 or :data:`INF`) or the gauge of a
    convex body (``body`` set, ``p`` ignored).
    """

    dimension: int
    p: float | Exponent = 2.0
    body: ConvexBody | None = None

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dimension!r}")
        object.__setattr__(self, "dimension", int(self.dimension))
        if self.body is None:
            object.__setattr__(self, "p", parse_exponent(self.p))
        elif self.body.dimension != self.dimension:
            raise DimensionMismatch(
                f"body has dimension {self.body.dimension}, space has {self.dimension}"
            )

    @classmethod
    def lp(cls, dimension: int, p=2.0) -> NormSpec:
        return cls(dimension, p)

    @classmethod
    def gauge_of(cls, body: ConvexBody) -> NormSpec:
        return cls(body.dimension, 2.0, body)

    @property
    def is_gauge(self) -> bool:
        return self.body is not None

    @property
    def is_polyhedral(self) -> bool:
        return self.body is None and (self.p is INF or self.p == 1.0)

    @property
    def is_strictly_convex(self) -> bool:
        return self.body is None and self.p is not INF and self.p > 1.0

    def label(self) -> str:
        if self.body is not None:
            return f"gauge({type(self.body).__name__})^{self.dimension}"
        p = "inf" if self.p is INF else f"{self.p:g}"
        return f"l_{p}^{self.dimension}"


def check_dimension(space: NormSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != space.dimension:
        raise DimensionMismatch(
            f"expected points of dimension {space.dimension}, got shape {x.shape}"
        )
    return x


def lp_norm(x: np.ndarray, p: float | Exponent) -> np.ndarray:
    a = np.abs(x)
    if p is INF:
        return a.max(axis=-1)
    if p == 1.0:
        return a.sum(axis=-1)
    if p == 2.0:
        return np.sqrt((a * a).sum(axis=-1))
    # rescale by the max entry so large p cannot overflow
    m = a.max(axis=-1, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    return (((a / safe) ** p).sum(axis=-1) ** (1.0 / p)) * safe[..., 0]


def norm(space: NormSpec, x):
    """Norm of ``x`` (reduced over the last axis)."""
    x = check_dimension(space, x)
    if space.body is not None:
        from .gauge import gauge

        return gauge(space.body, x)
    r = lp_norm(x, space.p)
    return float(r) if np.ndim(r) == 0 else r


def dual_norm(space: NormSpec, f):
    """Dual norm of the functional with coefficient vector ``f``.

    For l_p spaces this is the l_q norm with 1/p + 1/q = 1.  For gauge
    spaces it is the support function of the body, which is exact for
    polyhedral bodies and norm balls and a sampled lower bound for
    membership-oracle bodies.
    """
    f = check_dimension(space, f)
    if space.body is not None:
        r = space.body.support(f)
    else:
        r = lp_norm(f, conjugate_exponent(space.p))
    return float(r) if np.ndim(r) == 0 else r


def one_sided_gradient(func: Callable[[np.ndarray], np.ndarray], x: np.ndarray,
                       step: float | None = None, jump: float = SMOOTHNESS_JUMP):
    """Central-difference gradient of a convex function with a kink test.

    ``func`` must accept a batch of points.  Raises :class:`NotSmooth` when
    the left and right derivatives along some coordinate differ by more
    than ``jump``.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if step is None:
        step = FD_STEP * max(1.0, float(np.abs(x).max()))
    E = np.eye(n) * step
    batch = np.vstack([x[None, :], x + E, x - E])
    vals = np.asarray(func(batch), dtype=float)
    f0, fp, fm = vals[0], vals[1 : n + 1], vals[n + 1 :]
    right = (fp - f0) / step
    left = (f0 - fm) / step
    gap = np.abs(right - left)
    if gap.max() > jump:
        i = int(gap.argmax())
        raise NotSmooth(
            f"one-sided derivatives differ by {gap[i]:.3g} along coordinate {i}",
            point=x, jump=float(gap[i]),
        )
    return (fp - fm) / (2.0 * step)


def supporting_functional(space: NormSpec, x) -> np.ndarray:
    """The unique norm-one functional f with f(x) = ||x||.

    Closed form for 1 < p < inf, otherwise a normalized finite-difference
    gradient of the norm.
    """
    x = check_dimension(space, x)
    if x.ndim != 1:
        raise DimensionMismatch("supporting_functional takes a single point")
    nx = norm(space, x)
    if not nx > 0:
        raise ZeroVector("the zero vector has no unique supporting functional")
    if space.body is None and space.p is not INF and space.p > 1.0:
        p = space.p
        return np.sign(x) * (np.abs(x) / nx) ** (p - 1.0)
    g = one_sided_gradient(lambda X: norm(space, X), x)
    return g / dual_norm(space, g)


def approximating_norms(space: NormSpec, l: int):
    """Strictly convex l_p norm close to an l_1 or l_inf norm.

    Returns ``(NormSpec, s)`` such that
    ``(1 - s)|x|_approx <= |x| <= (1 + s)|x|_approx`` for every x, with
    ``s -> 0`` as ``l`` grows.
    """
    if l < 1 or int(l) != l:
        raise ValueError(f"l must be a positive integer, got {l!r}")
    if space.body is not None or not space.is_polyhedral:
        raise ValueError(f"approximating norms need an l_1 or l_inf base space, got {space.label()}")
    n = space.dimension
    if space.p == 1.0:
        p = 1.0 + 1.0 / l
        s = n ** (1.0 - 1.0 / p) - 1.0
    else:
        p = float(l + 1)
        s = 1.0 - n ** (-1.0 / p)
    return NormSpec.lp(n, p), s


# ---------------------------------------------------------------------------
# complex spaces


def realify(z) -> np.ndarray:
    """Interleave real and imaginary parts: (a1 + i b1, ...) -> (a1, b1, ...)."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def complexify(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape[-1] % 2:
        raise DimensionMismatch("realified vectors have even length")
    return v[..., 0::2] + 1j * v[..., 1::2]


def complex_norm(space: NormSpec, z):
    """l_p norm of a complex vector; ``space`` describes the complex space."""
    z = np.asarray(z, dtype=complex)
    if z.shape[-1] != space.dimension:
        raise DimensionMismatch(f"expected complex dimension {space.dimension}")
    r = lp_norm(np.abs(z), space.p)
    return float(r) if np.ndim(r) == 0 else r


def realify_norm(space: NormSpec, v):
    """Norm induced on realified vectors by the complex l_p norm of ``space``."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != 2 * space.dimension:
        raise DimensionMismatch(f"expected real dimension {2 * space.dimension}")
    r = lp_norm(np.hypot(v[..., 0::2], v[..., 1::2]), space.p)
    return float(r) if np.ndim(r) == 0 else r


def realify_functional(c) -> np.ndarray:
    """Real coefficients g with g . realify(z) = Re(sum c_j z_j)."""
    c = np.asarray(c, dtype=complex)
    g = np.empty(2 * c.shape[-1])
    g[0::2] = c.real
    g[1::2] = -c.imag
    return g


def complex_dual_norm(space: NormSpec, c) -> float:
    c = np.asarray(c, dtype=complex)
    return float(lp_norm(np.abs(c), conjugate_exponent(space.p)))


def phase_sampled_norm(space: NormSpec, c, points, phases: int = 2048) -> float:
    """Lower estimate of the dual norm of Re(f), f(z) = sum c_j z_j.

    Evaluates the real part of f on ``exp(i t) x / |x|`` for every given
    complex point x and ``phases`` equally spaced angles t.
    """
    c = np.asarray(c, dtype=complex)
    g = realify_functional(c)
    pts = np.atleast_2d(np.asarray(points, dtype=complex))
    pts = pts / np.asarray(complex_norm(space, pts)).reshape(-1, 1)
    t = 2.0 * np.pi * np.arange(phases) / phases
    rotated = np.exp(1j * t)[:, None, None] * pts[None, :, :]
    return float((realify(rotated) @ g).max())


# ---------------------------------------------------------------------------
# deterministic sphere samples


def van_der_corput(k: np.ndarray, base: int = 2) -> np.ndarray:
    k = np.asarray(k, dtype=np.int64).copy()
    out = np.zeros(k.shape)
    denom = 1.0
    while np.any(k > 0):
        denom *= base
        out += (k % base) / denom
        k //= base
    return out


@lru_cache(maxsize=64)
def _euclidean_sphere(n: int, m: int, seed: int) -> np.ndarray:
    if n == 1:
        pts = np.where(np.arange(m) % 2 == 0, 1.0, -1.0)[:, None]
    elif n == 2:
        # nested and equiangular at every power of two
        theta = 2.0 * np.pi * van_der_corput(np.arange(m))
        pts = np.column_stack([np.cos(theta), np.sin(theta)])
    else:
        u = qmc.Halton(d=n, scramble=True, seed=seed).random(m)
        g = _gaussian.ppf(np.clip(u, 1e-12, 1 - 1e-12))
        pts = g / np.linalg.norm(g, axis=1, keepdims=True)
    pts.setflags(write=False)
    return pts


def sphere_points(space: NormSpec | int, m: int, seed: int = 0) -> np.ndarray:
    """``m`` low-discrepancy points on the unit sphere of ``space``.

    In dimension 2 the angles follow the base-2 van der Corput sequence,
    so the first 2^k points are exactly equiangular.  Higher dimensions map
    a scrambled Halton sequence through the Gaussian quantile function.
    """
    if isinstance(space, int):
        space = NormSpec.lp(space, 2.0)
    pts = _euclidean_sphere(space.dimension, int(m), int(seed))
    if space.body is None and space.p == 2.0:
        return pts
    return pts / np.asarray(norm(space, pts))[:, None]


def sign_vectors(n: int) -> np.ndarray:
    """All 2^n vectors with entries +-1."""
    grid = ((np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1).astype(float)
    return 1.0 - 2.0 * grid


def extreme_points(space: NormSpec, max_dim: int = 12) -> np.ndarray | None:
    """Extreme points of the unit ball for l_1 and l_inf, else None."""
    if space.body is not None:
        return None
    n = space.dimension
    if space.p == 1.0:
        return np.vstack([np.eye(n), -np.eye(n)])
    if space.p is INF and n <= max_dim:
        return sign_vectors(n)
    return None
