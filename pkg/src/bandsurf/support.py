"""Integer frequency supports and the lattice arithmetic on them.

A support is a finite set of integer vectors in Z^n.  Frequencies are kept
in lexicographic order; that order fixes the coefficient layout of every
polynomial, feature matrix and serialized model in the package.
"""

from __future__ import annotations

import itertools
import json

import numpy as np

from .errors import DimensionMismatch, DomainError

__all__ = [
    "SupportSet",
    "rect_support",
    "centered_rect",
    "lq_ball_support",
    "shift_complement",
    "translations_within",
    "minkowski_sum",
    "parse_shape",
]


def _lex_sort(freqs):
    freqs = np.unique(freqs, axis=0)  # np.unique sorts rows lexicographically
    return freqs


def _isin(query, ref):
    """Row-wise membership of integer vectors ``query`` in ``ref``."""
    lo = np.minimum(query.min(axis=0), ref.min(axis=0))
    span = np.maximum(query.max(axis=0), ref.max(axis=0)) - lo + 1
    return np.isin(_keys(query, lo, span), _keys(ref, lo, span))


def _keys(freqs, lo, span):
    """Mixed-radix integer key of each row, given a common bounding box."""
    shifted = freqs - lo
    key = np.zeros(len(freqs), dtype=np.int64)
    for d in range(freqs.shape[1]):
        key = key * span[d] + shifted[:, d]
    return key


class SupportSet:
    """Finite, lexicographically ordered set of integer frequency vectors.

    Parameters
    ----------
    freqs : array_like of int, shape (K, n)
        Frequency vectors.  Duplicates are removed.
    dims : int, optional
        Ambient dimension; inferred from ``freqs`` when omitted.
    """

    __slots__ = ("_freqs", "_dims", "_index")

    def __init__(self, freqs, dims=None):
        arr = np.asarray(freqs, dtype=np.int64)
        if arr.ndim == 1 and dims is not None and arr.size == dims:
            arr = arr.reshape(1, dims)
        if arr.ndim != 2:
            raise DomainError("freqs must be a 2-D array of integer vectors")
        if dims is not None and arr.shape[1] != dims:
            raise DimensionMismatch(f"freqs have dimension {arr.shape[1]}, expected {dims}")
        if arr.shape[0] == 0:
            raise DomainError("a support must contain at least one frequency")
        if arr.shape[1] < 1:
            raise DomainError("dimension must be positive")
        arr = _lex_sort(arr)
        arr.setflags(write=False)
        self._freqs = arr
        self._dims = int(arr.shape[1])
        self._index = None

    @property
    def freqs(self) -> np.ndarray:
        return self._freqs

    @property
    def dims(self) -> int:
        return self._dims

    def __len__(self):
        return self._freqs.shape[0]

    def __iter__(self):
        return (tuple(int(v) for v in row) for row in self._freqs)

    def __contains__(self, k):
        return tuple(int(v) for v in k) in self._lookup()

    def __eq__(self, other):
        if not isinstance(other, SupportSet):
            return NotImplemented
        return self._dims == other._dims and np.array_equal(self._freqs, other._freqs)

    def __hash__(self):
        return hash((self._dims, self._freqs.tobytes()))

    def __repr__(self):
        lo, hi = self.bounds()
        return f"SupportSet(dims={self._dims}, size={len(self)}, box={lo.tolist()}..{hi.tolist()})"

    def _lookup(self):
        if self._index is None:
            self._index = {k: i for i, k in enumerate(self)}
        return self._index

    def index_of(self, k) -> int:
        """Position of frequency ``k`` in canonical order (KeyError if absent)."""
        return self._lookup()[tuple(int(v) for v in k)]

    def bounds(self):
        return self._freqs.min(axis=0), self._freqs.max(axis=0)

    @property
    def is_rect(self) -> bool:
        lo, hi = self.bounds()
        return int(np.prod(hi - lo + 1)) == len(self)

    @property
    def is_symmetric(self) -> bool:
        return self == self.negate()

    @property
    def max_radius(self) -> float:
        """Largest Euclidean norm of a frequency in the set."""
        return float(np.sqrt((self._freqs.astype(float) ** 2).sum(axis=1).max()))

    def negate(self) -> "SupportSet":
        return SupportSet(-self._freqs)

    def mirror_indices(self) -> np.ndarray:
        """For a symmetric support, index of -k for every k."""
        if not self.is_symmetric:
            raise DomainError("support is not symmetric about the origin")
        lo, hi = self.bounds()
        span = hi - lo + 1
        keys = _keys(self._freqs, lo, span)
        return np.searchsorted(keys, _keys(-self._freqs, lo, span))

    def locate(self, rows) -> np.ndarray:
        """Canonical index of each row of ``rows`` (all must be members)."""
        rows = np.asarray(rows, dtype=np.int64).reshape(-1, self._dims)
        lo = np.minimum(rows.min(axis=0), self._freqs.min(axis=0))
        span = np.maximum(rows.max(axis=0), self._freqs.max(axis=0)) - lo + 1
        okeys = _keys(self._freqs, lo, span)
        qkeys = _keys(rows, lo, span)
        pos = np.searchsorted(okeys, qkeys)
        pos_c = np.minimum(pos, len(okeys) - 1)
        if not np.all(okeys[pos_c] == qkeys):
            raise DomainError("frequency not contained in the target support")
        return pos

    def positions_in(self, other: "SupportSet") -> np.ndarray:
        """Indices of this set's frequencies inside ``other`` (must be a subset)."""
        _check_dims(self, other)
        return other.locate(self._freqs)

    def to_dict(self) -> dict:
        return {"dims": self._dims, "freqs": self._freqs.tolist()}

    @classmethod
    def from_dict(cls, data) -> "SupportSet":
        return cls(np.asarray(data["freqs"], dtype=np.int64).reshape(-1, int(data["dims"])),
                   dims=int(data["dims"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text) -> "SupportSet":
        return cls.from_dict(json.loads(text))


def _check_dims(a: SupportSet, b: SupportSet):
    if a.dims != b.dims:
        raise DimensionMismatch(f"supports have dimensions {a.dims} and {b.dims}")


def rect_support(lo, hi) -> SupportSet:
    """All integer vectors k with lo <= k <= hi componentwise."""
    lo = [int(v) for v in np.atleast_1d(lo)]
    hi = [int(v) for v in np.atleast_1d(hi)]
    if len(lo) != len(hi):
        raise DimensionMismatch(f"lo has {len(lo)} entries, hi has {len(hi)}")
    if any(a > b for a, b in zip(lo, hi)):
        raise DomainError("rect_support requires lo <= hi in every coordinate")
    grid = itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi)))
    return SupportSet(np.array(list(grid), dtype=np.int64).reshape(-1, len(lo)))


def centered_rect(sizes) -> SupportSet:
    """Centered rectangle with odd side lengths, e.g. ``(3, 3)`` -> {-1,0,1}^2."""
    sizes = [int(s) for s in np.atleast_1d(sizes)]
    if any(s < 1 or s % 2 == 0 for s in sizes):
        raise DomainError(f"centered supports need odd positive sizes, got {sizes}")
    half = [s // 2 for s in sizes]
    return rect_support([-h for h in half], half)


def parse_shape(text: str) -> SupportSet:
    """Parse ``"3x3"`` / ``"5x5x5"`` into a centered rectangular support."""
    try:
        sizes = [int(p) for p in text.lower().split("x")]
    except ValueError:
        raise DomainError(f"cannot parse support shape {text!r}") from None
    return centered_rect(sizes)


def lq_ball_support(n: int, d, q) -> SupportSet:
    """Integer vectors with ||k||_q <= d, for q in {1, 2, inf}."""
    if d < 0:
        raise DomainError("ball radius must be non-negative")
    if q in ("inf", "Infinity", float("inf")):
        q = np.inf
    if q not in (1, 2, np.inf):
        raise DomainError(f"unsupported q={q!r}; expected 1, 2 or inf")
    r = int(np.floor(d))
    box = rect_support([-r] * n, [r] * n).freqs
    if q == 1:
        keep = np.abs(box).sum(axis=1) <= d
    elif q == 2:
        keep = (box ** 2).sum(axis=1) <= d * d
    else:
        keep = np.ones(len(box), dtype=bool)
    return SupportSet(box[keep], dims=n)


def shift_complement(gamma: SupportSet, lam: SupportSet) -> SupportSet | None:
    """Gamma minus-shift Lambda: {l in Gamma : l - k in Gamma for all k in Lambda}.

    Returns ``None`` when the set is empty.
    """
    _check_dims(gamma, lam)
    keep = np.ones(len(gamma), dtype=bool)
    for k in lam.freqs:
        keep &= _isin(gamma.freqs - k, gamma.freqs)
    if not keep.any():
        return None
    return SupportSet(gamma.freqs[keep], dims=gamma.dims)


def translations_within(gamma: SupportSet, lam: SupportSet) -> np.ndarray:
    """All integer shifts t with Lambda + t contained in Gamma, shape (T, n).

    Coincides with :func:`shift_complement` when Lambda is symmetric and
    contains the origin.
    """
    _check_dims(gamma, lam)
    glo, ghi = gamma.bounds()
    llo, lhi = lam.bounds()
    cand = rect_support(glo - llo, ghi - lhi).freqs if np.all(ghi - lhi >= glo - llo) else None
    if cand is None:
        return np.zeros((0, gamma.dims), dtype=np.int64)
    keep = np.ones(len(cand), dtype=bool)
    for k in lam.freqs:
        keep &= _isin(cand + k, gamma.freqs)
    return cand[keep]


def minkowski_sum(a: SupportSet, b: SupportSet) -> SupportSet:
    """{k + l : k in a, l in b}."""
    _check_dims(a, b)
    sums = (a.freqs[:, None, :] + b.freqs[None, :, :]).reshape(-1, a.dims)
    return SupportSet(sums, dims=a.dims)
