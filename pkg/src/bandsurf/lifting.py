"""Exponential feature maps and the kernels they induce.

The feature of a point x for a support Gamma is the vector of
exp(j 2 pi k^T x), k in Gamma.  Inner products of features only depend on
the displacement y - x, which gives the Dirichlet-type kernels used by
the recovery, denoising and function-representation code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .cloud import as_points
from .errors import DomainError, EmptyCloud
from .support import SupportSet, lq_ball_support, rect_support

__all__ = [
    "KernelConfig",
    "as_support",
    "lift",
    "feature_matrix",
    "kernel",
    "kernel_gram",
    "kernel_cross",
    "kernel_grad_gram",
    "dirichlet_q",
    "RadialProfile",
    "radial_profile",
    "numerical_rank",
]

TWO_PI_J = 2j * np.pi
RANK_TOL = 1e-9
# entries in one (N, M, chunk) block of the generic kernel sum
_BLOCK = 1 << 22


@dataclass(frozen=True)
class KernelConfig:
    """Which frequency support the lifting uses.

    ``kind="rect"`` takes ``lo``/``hi``; ``kind="ball"`` takes ``dims``,
    ``d`` and ``q``; ``kind="explicit"`` wraps an arbitrary SupportSet.
    ``materialize_below`` switches Gram assembly to Phi^H Phi when the
    support has fewer frequencies than the threshold (0 = never).
    """

    kind: str
    lo: tuple | None = None
    hi: tuple | None = None
    dims: int | None = None
    d: float | None = None
    q: float | None = None
    explicit: SupportSet | None = None
    materialize_below: int = 0

    def __post_init__(self):
        if self.kind == "rect":
            if self.lo is None or self.hi is None or len(self.lo) != len(self.hi):
                raise DomainError("rect kernel config needs lo and hi of equal length")
            object.__setattr__(self, "lo", tuple(int(v) for v in self.lo))
            object.__setattr__(self, "hi", tuple(int(v) for v in self.hi))
        elif self.kind == "ball":
            if self.dims is None or self.d is None or self.q is None:
                raise DomainError("ball kernel config needs dims, d and q")
            q = np.inf if self.q in ("inf", np.inf, float("inf")) else self.q
            if q not in (1, 2, np.inf):
                raise DomainError(f"unsupported q={self.q!r}")
            object.__setattr__(self, "q", q)
        elif self.kind == "explicit":
            if not isinstance(self.explicit, SupportSet):
                raise DomainError("explicit kernel config needs a SupportSet")
        else:
            raise DomainError(f"unknown kernel kind {self.kind!r}")

    @classmethod
    def rect(cls, lo, hi, **kw):
        return cls("rect", lo=tuple(lo), hi=tuple(hi), **kw)

    @classmethod
    def shape(cls, sizes, **kw):
        """Centered rectangle from odd side lengths, e.g. (7, 7, 7)."""
        half = [int(s) // 2 for s in sizes]
        if any(int(s) % 2 == 0 for s in sizes):
            raise DomainError("centered kernel shapes need odd sizes")
        return cls.rect([-h for h in half], half, **kw)

    @classmethod
    def ball(cls, dims, d, q, **kw):
        return cls("ball", dims=int(dims), d=d, q=q, **kw)

    @cached_property
    def support(self) -> SupportSet:
        if self.kind == "rect":
            return rect_support(self.lo, self.hi)
        if self.kind == "ball":
            return lq_ball_support(self.dims, self.d, self.q)
        return self.explicit

    def to_dict(self) -> dict:
        if self.kind == "rect":
            out = {"kind": "rect", "lo": list(self.lo), "hi": list(self.hi)}
        elif self.kind == "ball":
            out = {"kind": "ball", "dims": self.dims, "d": self.d,
                   "q": "inf" if self.q == np.inf else self.q}
        else:
            out = {"kind": "explicit", "support": self.explicit.to_dict()}
        if self.materialize_below:
            out["materialize_below"] = self.materialize_below
        return out

    @classmethod
    def from_dict(cls, data) -> "KernelConfig":
        kind = data.get("kind")
        extra = {"materialize_below": int(data.get("materialize_below", 0))}
        if kind == "rect":
            return cls.rect(data["lo"], data["hi"], **extra)
        if kind == "ball":
            dims = data.get("dims", data.get("n"))
            if dims is None:
                raise DomainError("ball kernel config needs 'dims'")
            return cls.ball(dims, data["d"], data["q"], **extra)
        if kind == "explicit":
            return cls("explicit", explicit=SupportSet.from_dict(data["support"]), **extra)
        if "shape" in data:
            return cls.shape(data["shape"], **extra)
        raise DomainError(f"unknown kernel kind {kind!r}")

    @classmethod
    def from_json(cls, text) -> "KernelConfig":
        return cls.from_dict(json.loads(text))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def as_support(gamma) -> SupportSet:
    if isinstance(gamma, SupportSet):
        return gamma
    if isinstance(gamma, KernelConfig):
        return gamma.support
    raise DomainError(f"expected a SupportSet or KernelConfig, got {type(gamma).__name__}")


def _as_config(gamma) -> KernelConfig:
    if isinstance(gamma, KernelConfig):
        return gamma
    return KernelConfig("explicit", explicit=as_support(gamma))


def lift(x, gamma) -> np.ndarray:
    """Feature vector Phi_Gamma(x) in canonical frequency order."""
    sup = as_support(gamma)
    x = np.asarray(x, dtype=float)
    if x.shape != (sup.dims,):
        raise DomainError(f"point must have shape ({sup.dims},), got {x.shape}")
    return np.exp(TWO_PI_J * np.mod(sup.freqs @ x, 1.0))


def feature_matrix(X, gamma) -> np.ndarray:
    """|Gamma| x N matrix whose columns are the lifted points."""
    sup = as_support(gamma)
    pts = as_points(X, sup.dims)
    if len(pts) == 0:
        raise EmptyCloud("feature matrix of an empty cloud")
    return np.exp(TWO_PI_J * np.mod(sup.freqs @ pts.T, 1.0))


def _axis_gram(p, q, lo, hi, deriv=False):
    """sum_{k=lo..hi} exp(j 2 pi k (q_j - p_i)) as a len(p) x len(q) matrix.

    The 1-D Dirichlet sum factors as E(p)^H E(q) with E(x)_{k,i} =
    exp(j 2 pi k x_i), so it is a single small matrix product.  With
    ``deriv`` the result is the derivative with respect to p_i.
    ``q=None`` means q = p.
    """
    k = np.arange(lo, hi + 1, dtype=float)
    Ep = np.exp(TWO_PI_J * np.mod(np.outer(k, p), 1.0))
    Eq = Ep if q is None else np.exp(TWO_PI_J * np.mod(np.outer(k, q), 1.0))
    if deriv:
        Ep = (TWO_PI_J * k)[:, None] * Ep
    return Ep.conj().T @ Eq


def _rect_bounds(sup: SupportSet):
    if sup.is_rect:
        lo, hi = sup.bounds()
        return [int(v) for v in lo], [int(v) for v in hi]
    return None


def _block(P, Q, sup: SupportSet) -> np.ndarray:
    """kappa(p_i, q_j) = sum_k exp(j 2 pi k^T (q_j - p_i))."""
    bounds = _rect_bounds(sup)
    if bounds is not None:
        out = np.ones((len(P), len(Q)), dtype=complex)
        for dim, (lo, hi) in enumerate(zip(*bounds)):
            q = None if Q is P else Q[:, dim]
            out *= _axis_gram(P[:, dim], q, lo, hi)
        return out
    delta = Q[None, :, :] - P[:, None, :]
    freqs = sup.freqs.astype(float)
    out = np.zeros(delta.shape[:2], dtype=complex)
    step = max(1, _BLOCK // max(1, delta.shape[0] * delta.shape[1]))
    for s in range(0, len(freqs), step):
        ph = np.mod(delta @ freqs[s:s + step].T, 1.0)
        out += np.exp(TWO_PI_J * ph).sum(axis=-1)
    return out


def kernel(x, y, gamma) -> complex:
    """kappa(x, y) = Phi(x)^H Phi(y)."""
    sup = as_support(gamma)
    x = as_points(x, sup.dims)
    y = as_points(y, sup.dims)
    val = _block(x, y, sup)[0, 0]
    return val.real if sup.is_symmetric else val


def kernel_cross(P, Q, gamma) -> np.ndarray:
    """Matrix of kappa(p_i, q_j), shape (len(P), len(Q))."""
    sup = as_support(gamma)
    return _block(as_points(P, sup.dims), as_points(Q, sup.dims), sup)


def kernel_gram(X, config) -> np.ndarray:
    """Hermitian N x N matrix K(X) with entries kappa(x_i, x_j)."""
    cfg = _as_config(config)
    sup = cfg.support
    pts = as_points(X, sup.dims)
    if len(pts) == 0:
        raise EmptyCloud("Gram matrix of an empty cloud")
    if len(sup) < cfg.materialize_below:
        phi = feature_matrix(pts, sup)
        K = phi.conj().T @ phi
    else:
        K = _block(pts, pts, sup)
    K = 0.5 * (K + K.conj().T)
    np.fill_diagonal(K, float(len(sup)))
    return K


def kernel_grad_gram(X, gamma) -> np.ndarray:
    """Derivative of kappa(x_i, x_j) with respect to x_i, shape (n, N, N).

    Entry [d, i, j] = sum_k (-j 2 pi k_d) exp(j 2 pi k^T (x_j - x_i)).
    """
    sup = as_support(gamma)
    pts = as_points(X, sup.dims)
    n = sup.dims
    N = len(pts)
    out = np.empty((n, N, N), dtype=complex)
    bounds = _rect_bounds(sup)
    if bounds is not None:
        lo, hi = bounds
        base = [_axis_gram(pts[:, d], None, lo[d], hi[d]) for d in range(n)]
        for d in range(n):
            g = _axis_gram(pts[:, d], None, lo[d], hi[d], deriv=True)
            for e in range(n):
                if e != d:
                    g *= base[e]
            out[d] = g
        return out
    delta = pts[None, :, :] - pts[:, None, :]
    freqs = sup.freqs.astype(float)
    out[:] = 0
    step = max(1, _BLOCK // max(1, delta.shape[0] * delta.shape[1]))
    for s in range(0, len(freqs), step):
        f = freqs[s:s + step]
        e = np.exp(TWO_PI_J * np.mod(delta @ f.T, 1.0))
        for d in range(n):
            out[d] += e @ (-TWO_PI_J * f[:, d])
    return out


def dirichlet_q(x, d, q) -> np.ndarray | float:
    """Ball Dirichlet kernel: sum over ||k||_q <= d of exp(j 2 pi k^T x).

    ``x`` is a displacement vector or an array of them; the result is real
    because the ball is symmetric.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    sup = lq_ball_support(pts.shape[1], d, q)
    val = np.cos(2 * np.pi * np.mod(pts @ sup.freqs.T.astype(float), 1.0)).sum(axis=1)
    return float(val[0]) if single else val


def numerical_rank(M, tol=RANK_TOL) -> int:
    """Number of singular values above tol * sigma_max."""
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


class RadialProfile:
    """Tabulated radial approximation g(r^2) of the circular Dirichlet kernel.

    g(r^2) is the average of the q=2 ball kernel over ``directions`` unit
    vectors at radius r; queries are linearly interpolated in r^2.
    """

    def __init__(self, dims, d, resolution=512, directions=64, r2_max=None, seed=0):
        if dims < 1 or d < 0 or resolution < 2 or directions < 1:
            raise DomainError("invalid radial profile configuration")
        self.dims = int(dims)
        self.d = d
        self.size = len(lq_ball_support(dims, d, 2))
        self.r2_max = 0.25 * dims if r2_max is None else float(r2_max)
        self.r2 = np.linspace(0.0, self.r2_max, resolution)
        if dims == 1:
            dirs = np.array([[1.0]])
        elif dims == 2:
            ang = (np.arange(directions) + 0.5) * (2 * np.pi / directions)
            dirs = np.column_stack([np.cos(ang), np.sin(ang)])
        else:
            rng = np.random.default_rng(seed)
            dirs = rng.standard_normal((directions, dims))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        r = np.sqrt(self.r2)
        disp = (r[:, None, None] * dirs[None, :, :]).reshape(-1, dims)
        vals = dirichlet_q(disp, d, 2).reshape(len(r), len(dirs))
        self.table = vals.mean(axis=1)
        self.table[0] = float(self.size)

    def __call__(self, r2):
        return np.interp(r2, self.r2, self.table)

    def approx_kernel(self, x, y):
        """g(||y - x||^2) with the displacement wrapped to the nearest image."""
        delta = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
        delta = delta - np.round(delta)
        return self(np.sum(delta ** 2, axis=-1))

    def activation(self, s):
        """Activation in the inner-product variable: g(2 - 2 s).

        For unit-norm x and y, activation(<x, y>) equals g(||x - y||^2).
        """
        return self(2.0 - 2.0 * np.asarray(s, dtype=float))

    def deviation(self, n_pairs=1000, seed=0):
        """Relative deviation |kappa - g| / |Gamma| over random pairs."""
        rng = np.random.default_rng(seed)
        x = rng.random((n_pairs, self.dims))
        y = rng.random((n_pairs, self.dims))
        delta = y - x
        delta = delta - np.round(delta)
        exact = dirichlet_q(delta, self.d, 2)
        approx = self(np.sum(delta ** 2, axis=1))
        return np.abs(exact - approx) / self.size


def radial_profile(config, **kw) -> RadialProfile:
    """Build the radial lookup table for a q=2 ball kernel config."""
    cfg = config if isinstance(config, KernelConfig) else KernelConfig.from_dict(config)
    if cfg.kind != "ball" or cfg.q != 2:
        raise DomainError("radial_profile needs a q=2 ball kernel config")
    return RadialProfile(cfg.dims, cfg.d, **kw)
