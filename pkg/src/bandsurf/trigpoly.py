"""Trigonometric polynomials on [0, 1)^n and sampling of their zero sets."""

from __future__ import annotations

import json

import numpy as np

from .cloud import PointCloud, as_points, wrap
from .errors import DimensionMismatch, DomainError, NoZeroSetFound
from .support import SupportSet, minkowski_sum

__all__ = [
    "TrigPolynomial",
    "evaluate",
    "multiply",
    "random_real_poly",
    "random_poly_with_zero_set",
    "has_zero_set",
    "sample_zero_set",
    "sample_union",
]

TWO_PI_J = 2j * np.pi


def _phase(freqs, pts):
    """exp(j 2 pi k^T x) for every (point, frequency) pair, shape (N, K)."""
    t = pts @ freqs.T.astype(float)
    # reducing mod 1 keeps the exponent small for large frequencies
    return np.exp(TWO_PI_J * np.mod(t, 1.0))


class TrigPolynomial:
    """psi(x) = sum_k c_k exp(j 2 pi k^T x) over a finite support.

    ``coeffs[i]`` belongs to ``support.freqs[i]``, i.e. the support's
    canonical (lexicographic) order, not the order the frequencies were
    originally listed in.
    """

    __slots__ = ("support", "coeffs")

    def __init__(self, support: SupportSet, coeffs):
        c = np.asarray(coeffs, dtype=complex).ravel()
        if c.shape[0] != len(support):
            raise DomainError(f"{c.shape[0]} coefficients for a support of size {len(support)}")
        c = c.copy()
        c.setflags(write=False)
        self.support = support
        self.coeffs = c

    @property
    def dims(self) -> int:
        return self.support.dims

    def __repr__(self):
        return f"TrigPolynomial({self.support!r}, norm={np.linalg.norm(self.coeffs):.3g})"

    def __call__(self, x):
        return evaluate(self, x)

    def is_real_valued(self, rtol=1e-12) -> bool:
        if not self.support.is_symmetric:
            return False
        mirror = self.support.mirror_indices()
        scale = max(np.linalg.norm(self.coeffs), 1e-300)
        return bool(np.max(np.abs(self.coeffs[mirror] - np.conj(self.coeffs))) <= rtol * scale)

    def conj(self) -> "TrigPolynomial":
        """The polynomial x -> conj(psi(x)), supported on -support."""
        neg = self.support.negate()
        pos = neg.locate(-self.support.freqs)
        c = np.empty(len(neg), dtype=complex)
        c[pos] = np.conj(self.coeffs)
        return TrigPolynomial(neg, c)

    def scaled(self, s) -> "TrigPolynomial":
        return TrigPolynomial(self.support, self.coeffs * s)

    def zero_filled(self, gamma: SupportSet) -> np.ndarray:
        """Coefficient vector re-indexed on a larger support."""
        out = np.zeros(len(gamma), dtype=complex)
        out[self.support.positions_in(gamma)] = self.coeffs
        return out

    def real_aligned(self) -> "TrigPolynomial":
        """Rotate the global phase so that a conjugate-symmetric polynomial
        becomes real-valued.  The sign is fixed by the largest coefficient."""
        if not self.support.is_symmetric:
            return self
        mirror = self.support.mirror_indices()
        s = np.sum(self.coeffs * self.coeffs[mirror])
        rot = np.exp(-0.5j * np.angle(s)) if abs(s) > 0 else 1.0
        c = self.coeffs * rot
        big = np.argmax(np.abs(c))
        if c[big].real < 0:
            c = -c
        return TrigPolynomial(self.support, c)

    def to_dict(self) -> dict:
        inter = np.column_stack([self.coeffs.real, self.coeffs.imag]).ravel()
        return {"support": self.support.to_dict(), "coeffs": inter.tolist()}

    @classmethod
    def from_dict(cls, data) -> "TrigPolynomial":
        sup = SupportSet.from_dict(data["support"])
        raw = np.asarray(data["coeffs"], dtype=float).reshape(-1, 2)
        return cls(sup, raw[:, 0] + 1j * raw[:, 1])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text) -> "TrigPolynomial":
        return cls.from_dict(json.loads(text))


def evaluate(poly: TrigPolynomial, x):
    """Evaluate at a point (returns a complex scalar) or at rows of an array."""
    single = not isinstance(x, PointCloud) and np.ndim(x) == 1
    pts = as_points(x, poly.dims)
    val = _phase(poly.support.freqs, pts) @ poly.coeffs
    return val[0] if single else val


def multiply(p1: TrigPolynomial, p2: TrigPolynomial) -> TrigPolynomial:
    """Product polynomial; coefficients are the discrete convolution."""
    if p1.dims != p2.dims:
        raise DimensionMismatch(f"polynomials have dimensions {p1.dims} and {p2.dims}")
    sup = minkowski_sum(p1.support, p2.support)
    sums = (p1.support.freqs[:, None, :] + p2.support.freqs[None, :, :]).reshape(-1, p1.dims)
    prods = np.outer(p1.coeffs, p2.coeffs).ravel()
    target = sup.locate(sums)
    c = np.zeros(len(sup), dtype=complex)
    np.add.at(c, target, prods)
    return TrigPolynomial(sup, c)


def random_real_poly(support: SupportSet, seed=None) -> TrigPolynomial:
    """Unit-norm conjugate-symmetric polynomial with Gaussian coefficients."""
    if not support.is_symmetric:
        raise DomainError("random_real_poly needs a support symmetric about the origin")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(len(support)) + 1j * rng.standard_normal(len(support))
    mirror = support.mirror_indices()
    idx = np.arange(len(support))
    # canonical order is lexicographic, so -k sits at the mirrored position;
    # the upper half keeps its draw and the lower half becomes its conjugate
    lower = mirror > idx
    c = z.copy()
    c[lower] = np.conj(z[mirror[lower]])
    zero = idx == mirror
    c[zero] = c[zero].real
    c /= np.linalg.norm(c)
    return TrigPolynomial(support, c)


def _grid(dims, res):
    axes = [np.arange(res) / res] * dims
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dims)


def has_zero_set(poly: TrigPolynomial, res: int | None = None) -> bool:
    """Sign change of Re(psi) on a regular grid."""
    if res is None:
        res = max(16, int(np.ceil(8 * poly.support.max_radius)) + 1)
        if poly.dims >= 3:
            res = min(res, 24)
    v = evaluate(poly, _grid(poly.dims, res)).real
    return bool(v.min() < 0 < v.max())


def random_poly_with_zero_set(support: SupportSet, rng, max_tries: int = 1000) -> TrigPolynomial:
    """Draw random real polynomials until one has a nonempty zero set."""
    for _ in range(max_tries):
        p = random_real_poly(support, rng.integers(2**63))
        if has_zero_set(p):
            return p
    raise NoZeroSetFound(f"no random polynomial with a zero set after {max_tries} draws")


def sample_zero_set(poly: TrigPolynomial, count: int, seed=None, *,
                    max_draws: int = 10_000, batch: int | None = None) -> PointCloud:
    """Random points on the zero set of a real-valued polynomial.

    Each draw picks a uniform point p and a uniform direction u, scans
    t in [0, 1] along p + t u (mod 1) at resolution 1 / (8 * max |k|),
    picks one sign change uniformly at random and bisects it to machine
    precision.  Lines with no sign change are discarded; ``max_draws``
    consecutive misses raise NoZeroSetFound.
    """
    n = poly.dims
    if count < 0:
        raise DomainError("count must be non-negative")
    if count == 0:
        return PointCloud(np.zeros((0, n)))
    rng = np.random.default_rng(seed)
    maxfreq = max(poly.support.max_radius, 1.0)
    steps = int(np.ceil(8 * maxfreq))
    ts = np.linspace(0.0, 1.0, steps + 1)
    freqs = poly.support.freqs
    coeffs = poly.coeffs

    def f(p, u, t):
        pts = wrap(p + t[..., None] * u)
        shape = pts.shape[:-1]
        return (_phase(freqs, pts.reshape(-1, n)) @ coeffs).real.reshape(shape)

    out = []
    misses = 0
    batch = batch or max(32, 2 * count)
    while len(out) < count:
        p = rng.random((batch, n))
        u = rng.standard_normal((batch, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        pick = rng.random(batch)
        vals = f(p[:, None, :], u[:, None, :], np.broadcast_to(ts, (batch, len(ts))))
        s = np.signbit(vals)
        change = s[:, 1:] != s[:, :-1]
        nchg = change.sum(axis=1)
        # consecutive-miss accounting in draw order
        hit = nchg > 0
        for b in range(batch):
            if hit[b]:
                misses = 0
            else:
                misses += 1
                if misses >= max_draws:
                    raise NoZeroSetFound(
                        f"no sign change found along {max_draws} consecutive random lines")
        rows = np.flatnonzero(hit)[: count - len(out)]
        if rows.size == 0:
            continue
        which = np.minimum((pick[rows] * nchg[rows]).astype(int), nchg[rows] - 1)
        cum = np.cumsum(change[rows], axis=1) - 1
        j = np.argmax(cum == which[:, None], axis=1)
        pts = _bisect(f, p[rows], u[rows], ts[j], ts[j + 1], s[rows, j])
        out.extend(pts)
    return PointCloud(np.array(out))


def _bisect(f, p, u, a, b, sign_a):
    """Vectorised bisection of f(p, u, t) on [a, b] down to float resolution."""
    for _ in range(64):
        m = 0.5 * (a + b)
        gm = f(p, u, m)
        same = np.signbit(gm) == sign_a
        a = np.where(same, m, a)
        b = np.where(same, b, m)
    ga = np.abs(f(p, u, a))
    gb = np.abs(f(p, u, b))
    t = np.where(ga <= gb, a, b)
    return wrap(p + t[:, None] * u)


def sample_union(factors, counts, seed=None, **kw) -> PointCloud:
    """Sample each factor's zero set separately and label points by factor."""
    if len(factors) != len(counts):
        raise DomainError("need one count per factor")
    ss = np.random.SeedSequence(seed)
    parts = []
    for i, (poly, n_i) in enumerate(zip(factors, counts)):
        sub = sample_zero_set(poly, n_i, np.random.default_rng(ss.spawn(1)[0]), **kw)
        parts.append(PointCloud(sub.points.reshape(-1, poly.dims), np.full(len(sub), i)))
    return PointCloud.concat(parts)
