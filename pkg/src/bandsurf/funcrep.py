"""Band-limited functions restricted to a surface, represented by anchors.

Features of points on a band-limited surface span a subspace of dimension
r = |Gamma| - |Gamma (-) Lambda|.  Once the lifted anchors span it, any
band-limited f(x) = beta^T Phi(x) agrees on the surface with

    f(x) = F K(A)^+ k_A(x),

where F holds f at the anchors, K(A) is the anchor Gram matrix and k_A(x)
the vector of kernel values kappa(a_i, x).  The representation is only
exact on the surface; off the surface it decays.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .cloud import PointCloud, as_points, fmt
from .errors import DegenerateSystem, DomainError, InsufficientCandidates
from .lifting import KernelConfig, feature_matrix, kernel_cross, kernel_gram
from .trigpoly import TrigPolynomial, sample_zero_set

__all__ = [
    "PINV_CUTOFF",
    "AnchorModel",
    "hermitian_pinv",
    "select_anchors",
    "alpha",
    "eval_model",
    "fit_outputs",
    "anchor_autoencoder",
    "projection_error",
    "projection_error_grid",
]

PINV_CUTOFF = 1e-10


def hermitian_pinv(K, cutoff=PINV_CUTOFF, ridge=0.0):
    """Pseudo-inverse of a Hermitian PSD matrix by eigendecomposition.

    Eigenvalues below ``cutoff * max`` are dropped; the rest are inverted
    as 1 / (w + ridge).
    """
    w, V = np.linalg.eigh(K)
    top = max(w.max(initial=0.0), 0.0)
    keep = w > cutoff * top
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / (w[keep] + ridge)
    P = (V * inv) @ V.conj().T
    return 0.5 * (P + P.conj().T), int(keep.sum())


def _kernel_config(kernel) -> KernelConfig:
    if isinstance(kernel, KernelConfig):
        return kernel
    if isinstance(kernel, dict):
        return KernelConfig.from_dict(kernel)
    return KernelConfig("explicit", explicit=kernel)


class AnchorModel:
    """Anchors, kernel, output matrix F and a cached factorisation of K(A).

    Parameters
    ----------
    anchors : PointCloud or array, shape (N, n)
    kernel : KernelConfig or SupportSet
    F : array, shape (M, N)
        Output value at each anchor (column i is f(a_i)).
    ridge : float
        Added to the retained eigenvalues of K(A) before inversion.
    method : {"features", "kernel"}
        ``features`` (default) factors the lifted anchors Phi(A) by SVD, so
        K(A)^+ k_A(x) is applied without ever forming K(A); its eigenvalues
        are the squared singular values and forming it would square the
        condition number.  ``kernel`` uses only kernel evaluations and an
        eigendecomposition of K(A).
    cutoff : float, optional
        Relative cut below which directions are dropped: on singular values
        of Phi(A) for ``features`` (default max(N, |Gamma|) * eps), on
        eigenvalues of K(A) for ``kernel`` (default 1e-10).
    """

    def __init__(self, anchors, kernel, F=None, ridge=0.0, cutoff=None, method="features"):
        self.kernel = _kernel_config(kernel)
        sup = self.kernel.support
        self.anchors = as_points(anchors, sup.dims).copy()
        self.anchors.setflags(write=False)
        N = len(self.anchors)
        if N == 0:
            raise DomainError("an anchor model needs at least one anchor")
        if F is None:
            F = np.zeros((0, N))
        F = np.atleast_2d(np.asarray(F))
        if F.shape[1] != N and F.size:
            raise DomainError(f"F has {F.shape[1]} columns for {N} anchors")
        self.F = F.reshape(-1, N)
        self.ridge = float(ridge)
        self.method = method
        self._real = sup.is_symmetric
        if method == "features":
            if cutoff is None:
                cutoff = max(N, len(sup)) * np.finfo(float).eps
            U, s, Vh = np.linalg.svd(feature_matrix(self.anchors, sup), full_matrices=False)
            keep = s > cutoff * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
            s = s[keep]
            self._U = U[:, keep]
            # alpha = V diag(s / (s^2 + ridge)) U^H Phi(x)
            self._right = Vh[keep].conj().T * (s / (s * s + self.ridge))
            self.gram_rank = int(keep.sum())
        elif method == "kernel":
            if cutoff is None:
                cutoff = PINV_CUTOFF
            K = kernel_gram(self.anchors, self.kernel)
            K = K.real.copy() if self._real else K
            self._pinv, self.gram_rank = hermitian_pinv(K, cutoff, self.ridge)
        else:
            raise DomainError(f"unknown anchor model method {method!r}")
        self.cutoff = float(cutoff)

    @property
    def support(self):
        return self.kernel.support

    @property
    def n_anchors(self) -> int:
        return len(self.anchors)

    def with_outputs(self, F) -> "AnchorModel":
        """Same anchors and cached inverse, different output matrix."""
        new = object.__new__(AnchorModel)
        new.__dict__.update(self.__dict__)
        F = np.atleast_2d(np.asarray(F))
        new.F = F.reshape(-1, self.n_anchors)
        return new

    @property
    def gram(self) -> np.ndarray:
        """K(A), evaluated through the kernel."""
        K = kernel_gram(self.anchors, self.kernel)
        return K.real.copy() if self._real else K

    def kvec(self, x) -> np.ndarray:
        """k_A(x) for each query point, shape (N, Q)."""
        kx = kernel_cross(self.anchors, as_points(x, self.support.dims), self.support)
        return kx.real if self._real else kx

    def alpha(self, x) -> np.ndarray:
        """Interpolation coefficients K(A)^+ k_A(x), shape (N, Q)."""
        pts = as_points(x, self.support.dims)
        if self.method == "kernel":
            return self._pinv @ self.kvec(pts)
        a = self._right @ (self._U.conj().T @ feature_matrix(pts, self.support))
        return a.real if self._real else a

    def __call__(self, x):
        return eval_model(self, x)

    def to_dict(self) -> dict:
        F = np.asarray(self.F)
        out = {
            "anchors": self.anchors.tolist(),
            "kernel": self.kernel.to_dict(),
            "F": F.real.tolist(),
            "ridge": self.ridge,
            "method": self.method,
            "cutoff": self.cutoff,
        }
        if np.iscomplexobj(F):
            out["F_imag"] = F.imag.tolist()
        return out

    @classmethod
    def from_dict(cls, data) -> "AnchorModel":
        F = np.asarray(data["F"], dtype=float)
        if "F_imag" in data:
            F = F + 1j * np.asarray(data["F_imag"], dtype=float)
        anchors = np.asarray(data["anchors"], dtype=float)
        return cls(anchors, KernelConfig.from_dict(data["kernel"]), F.reshape(-1, len(anchors)),
                   ridge=data.get("ridge", 0.0), cutoff=data.get("cutoff"),
                   method=data.get("method", "features"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text) -> "AnchorModel":
        return cls.from_dict(json.loads(text))


def alpha(x, model: AnchorModel) -> np.ndarray:
    """Coefficients of x's feature in the lifted anchors (vector for one point)."""
    a = model.alpha(x)
    return a[:, 0] if np.ndim(x) == 1 else a


def eval_model(model: AnchorModel, x) -> np.ndarray:
    """F alpha(x): shape (M,) for one point, (M, Q) for many."""
    single = not isinstance(x, PointCloud) and np.ndim(x) == 1
    out = model.F @ model.alpha(x)
    return out[:, 0] if single else out


def select_anchors(source, count: int, strategy: str = "random", seed=None,
                   kernel=None, pool_factor: int = 20) -> PointCloud:
    """Choose anchor points from a cloud or from the zero set of a polynomial.

    ``random`` draws ``count`` points (a random subset of a cloud, or fresh
    zero-set samples).  ``greedy`` builds a candidate pool of
    ``pool_factor * count`` points and adds, one at a time, the candidate
    that maximises the smallest eigenvalue of the growing anchor Gram
    matrix; it needs ``kernel``.
    """
    if count < 1:
        raise DomainError("need at least one anchor")
    rng = np.random.default_rng(seed)
    if strategy == "random":
        if isinstance(source, TrigPolynomial):
            return sample_zero_set(source, count, rng)
        pts = as_points(source)
        if len(pts) < count:
            raise InsufficientCandidates(f"{len(pts)} candidates for {count} anchors")
        return PointCloud(pts[np.sort(rng.choice(len(pts), count, replace=False))])
    if strategy != "greedy":
        raise DomainError(f"unknown anchor strategy {strategy!r}")
    if kernel is None:
        raise DomainError("greedy anchor selection needs a kernel")
    if isinstance(source, TrigPolynomial):
        pool = sample_zero_set(source, pool_factor * count, rng).points
    else:
        pool = as_points(source)
    if len(pool) < count:
        raise InsufficientCandidates(f"{len(pool)} candidates for {count} anchors")
    return PointCloud(pool[greedy_indices(pool, count, kernel)])


def greedy_indices(pool, count, kernel) -> np.ndarray:
    """Indices chosen by max-min-eigenvalue pivoting over the pool Gram."""
    cfg = _kernel_config(kernel)
    G = kernel_gram(pool, cfg)
    chosen = [0]  # every diagonal entry is |Gamma|, so the first pick is arbitrary
    free = np.ones(len(pool), dtype=bool)
    free[0] = False
    for _ in range(1, count):
        cand = np.flatnonzero(free)
        k = len(chosen)
        sub = np.empty((len(cand), k + 1, k + 1), dtype=G.dtype)
        sub[:, :k, :k] = G[np.ix_(chosen, chosen)]
        sub[:, :k, k] = G[np.ix_(chosen, cand)].T
        sub[:, k, :k] = G[np.ix_(cand, chosen)]
        sub[:, k, k] = G[cand, cand]
        mins = np.linalg.eigvalsh(sub)[:, 0]
        best = cand[int(np.argmax(mins))]
        chosen.append(best)
        free[best] = False
    return np.array(chosen)


def fit_outputs(X, Y, anchors, kernel, ridge=0.0, cutoff=None, method="features",
                z_cutoff=PINV_CUTOFF) -> AnchorModel:
    """Least-squares output matrix from training pairs (x_p, y_p).

    Solves Y = F Z with Z = [alpha(x_1) ... alpha(x_P)].  Without a ridge
    F = Y Z^+, the minimum-norm solution of the normal equations
    F = Y Z^H (Z Z^H)^+, computed by SVD of Z to avoid squaring its
    condition number.  With ``ridge > 0`` the regularised normal equations
    are solved.  ``z_cutoff`` is the relative singular-value cut on Z.
    """
    model = AnchorModel(anchors, kernel, None, cutoff=cutoff, method=method)
    pts = as_points(X, model.support.dims)
    Y = np.asarray(Y)
    if Y.ndim == 1:
        Y = Y[None, :]
    if Y.shape[1] != len(pts):
        if Y.shape[0] == len(pts):
            Y = Y.T
        else:
            raise DomainError("Y must hold one output column per training point")
    if len(pts) == 0:
        raise DomainError("need at least one training pair")
    Z = model.alpha(pts)
    if not np.all(np.isfinite(Z)):
        raise DegenerateSystem("non-finite interpolation coefficients")
    if ridge > 0:
        G = Z @ Z.conj().T
        F = np.linalg.solve((G + ridge * np.eye(len(G))).T, (Y @ Z.conj().T).T).T
    else:
        U, s, Vh = np.linalg.svd(Z, full_matrices=False)
        if s.size == 0 or s[0] == 0 or not np.isfinite(s[0]):
            raise DegenerateSystem("interpolation matrix Z Z^H is numerically zero")
        keep = s > z_cutoff * s[0]
        F = ((Y @ Vh[keep].conj().T) / s[keep]) @ U[:, keep].conj().T
    if not np.all(np.isfinite(F)):
        raise DegenerateSystem("non-finite output matrix")
    return model.with_outputs(F)


def anchor_autoencoder(anchors, kernel, **kw) -> AnchorModel:
    """Model whose outputs are the anchor coordinates: x ~ A alpha(x)."""
    A = as_points(anchors)
    return AnchorModel(A, kernel, A.T, **kw)


def projection_error(model: AnchorModel, x) -> np.ndarray | float:
    """||x - F alpha(x)||^2 for a model whose outputs are anchor coordinates."""
    single = not isinstance(x, PointCloud) and np.ndim(x) == 1
    pts = as_points(x, model.support.dims)
    if model.F.shape[0] != pts.shape[1]:
        raise DomainError("projection error needs F = anchor coordinates (M == n)")
    rec = model.F @ model.alpha(pts)
    err = np.sum(np.abs(pts.T - rec) ** 2, axis=0)
    return float(err[0]) if single else err


def projection_error_grid(model: AnchorModel, resolution: int, path_or_buf=None):
    """Projection error on a regular grid of [0, 1)^n, optionally written as CSV."""
    n = model.support.dims
    axes = [np.arange(resolution) / resolution] * n
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    err = projection_error(model, grid)
    if path_or_buf is not None:
        own = isinstance(path_or_buf, str) or hasattr(path_or_buf, "__fspath__")
        fh = open(path_or_buf, "w", newline="") if own else path_or_buf
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"x{i + 1}" for i in range(n)] + ["error"])
            for p, e in zip(grid, err):
                w.writerow([fmt(v) for v in p] + [fmt(e)])
        finally:
            if own:
                fh.close()
    return grid, err
