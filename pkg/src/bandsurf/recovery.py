"""Surface recovery from point samples.

Every point of a zero set annihilates the coefficient vector of its
level-set polynomial after lifting, so the coefficients live in the left
null space of the feature matrix.  With the minimal support the null space
is one-dimensional and gives the polynomial directly; with an oversized
support the null space is spanned by shifted copies of the coefficients
and the surface is the common zero set, read off from the sum of squares
of the null-space polynomials.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cloud import PointCloud, as_points
from .errors import AmbiguousRecovery, DomainError, EmptyCloud, NoAnnihilator
from .lifting import feature_matrix
from .support import SupportSet, centered_rect, minkowski_sum, shift_complement, translations_within
from .trigpoly import (
    TrigPolynomial,
    multiply,
    random_poly_with_zero_set,
    sample_zero_set,
)

__all__ = [
    "DEFAULT_TOL",
    "NullSpaceBasis",
    "SosSurface",
    "nullspace",
    "recover_minimal",
    "recover_sos",
    "sos_as_polynomial",
    "shifted_coefficients",
    "PhaseConfig",
    "phase_transition",
    "write_phase_table",
    "minimal_config",
]

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class NullSpaceBasis:
    """Orthonormal basis of the left null space of a feature matrix.

    ``vectors`` has one coefficient vector per row; each row n satisfies
    n^T Phi(X) ~ 0.  ``sigma`` holds the singular values of Phi(X) padded
    with zeros to length |Gamma|.
    """

    support: SupportSet
    vectors: np.ndarray
    sigma: np.ndarray
    tol: float

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def rank(self) -> int:
        return len(self.support) - self.dim

    def polynomials(self):
        return [TrigPolynomial(self.support, v) for v in self.vectors]

    def residual(self, X) -> np.ndarray:
        """||n_i^T Phi(X)|| for every basis vector."""
        return np.linalg.norm(self.vectors @ feature_matrix(X, self.support), axis=1)

    def project_out(self, c) -> np.ndarray:
        """Component of coefficient vector(s) ``c`` orthogonal to the null space."""
        c = np.atleast_2d(c)
        coef = c @ self.vectors.conj().T
        return c - coef @ self.vectors

    def to_dict(self) -> dict:
        vec = np.stack([self.vectors.real, self.vectors.imag], axis=-1).reshape(self.dim, -1)
        return {"support": self.support.to_dict(), "vectors": vec.tolist(),
                "sigma": self.sigma.tolist(), "tol": self.tol}

    @classmethod
    def from_dict(cls, data) -> "NullSpaceBasis":
        sup = SupportSet.from_dict(data["support"])
        raw = np.asarray(data["vectors"], dtype=float).reshape(-1, len(sup), 2)
        return cls(sup, raw[..., 0] + 1j * raw[..., 1], np.asarray(data["sigma"], dtype=float),
                   float(data["tol"]))


@dataclass(frozen=True)
class SosSurface:
    """gamma(x) = sum_i |mu_i(x)|^2 over the null-space polynomials."""

    basis: NullSpaceBasis

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        single = not isinstance(x, PointCloud) and np.ndim(x) == 1
        pts = as_points(x, self.basis.support.dims)
        vals = np.sum(np.abs(self.basis.vectors @ feature_matrix(pts, self.basis.support)) ** 2,
                      axis=0)
        return float(vals[0]) if single else vals


def nullspace(X, gamma: SupportSet, tol: float = DEFAULT_TOL) -> NullSpaceBasis:
    """Left null space of Phi_Gamma(X) with a relative singular-value cut.

    Directions with sigma <= tol * sigma_max are kept, together with all
    directions beyond the N columns when N < |Gamma|.
    """
    pts = as_points(X, gamma.dims)
    if len(pts) == 0:
        raise EmptyCloud("cannot estimate a null space from zero samples")
    phi = feature_matrix(pts, gamma)
    # SVD of Phi itself: the Gram route squares the condition number and
    # pushes exact null directions up to ~1e-8 * sigma_max
    U, s, _ = np.linalg.svd(phi, full_matrices=True)
    sigma = np.zeros(len(gamma))
    sigma[: len(s)] = s
    keep = sigma <= tol * sigma[0]
    # c^T Phi = 0  <=>  conj(c) is a left singular vector with sigma = 0
    vectors = np.conj(U[:, keep]).T.copy()
    return NullSpaceBasis(gamma, vectors, sigma, tol)


def recover_minimal(X, lam: SupportSet, tol: float = DEFAULT_TOL) -> TrigPolynomial:
    """Polynomial on the minimal support whose zero set passes through X."""
    basis = nullspace(X, lam, tol)
    if basis.dim == 0:
        raise NoAnnihilator("feature matrix has full row rank; support too small "
                            "or samples off the surface")
    if basis.dim > 1:
        raise AmbiguousRecovery(f"null space has dimension {basis.dim}; the surface is "
                                f"under-sampled", null_dim=basis.dim)
    c = basis.vectors[0]
    big = np.argmax(np.abs(c))
    c = c * (np.conj(c[big]) / abs(c[big]))
    return TrigPolynomial(lam, c / np.linalg.norm(c))


def recover_sos(X, gamma: SupportSet, tol: float = DEFAULT_TOL) -> SosSurface:
    basis = nullspace(X, gamma, tol)
    if basis.dim == 0:
        raise NoAnnihilator("feature matrix has no null space at this tolerance")
    return SosSurface(basis)


def sos_as_polynomial(s: SosSurface) -> TrigPolynomial:
    """Coefficient form of gamma on Gamma + (-Gamma)."""
    sup = s.basis.support
    out_sup = minkowski_sum(sup, sup.negate())
    total = np.zeros(len(out_sup), dtype=complex)
    for mu in s.basis.polynomials():
        sq = multiply(mu, mu.conj())
        total[sq.support.positions_in(out_sup)] += sq.coeffs
    return TrigPolynomial(out_sup, total)


def shifted_coefficients(poly: TrigPolynomial, gamma: SupportSet) -> np.ndarray:
    """Coefficients of exp(j 2 pi t^T x) * psi(x) on Gamma, one row per valid shift t."""
    shifts = translations_within(gamma, poly.support)
    rows = np.zeros((len(shifts), len(gamma)), dtype=complex)
    for r, t in enumerate(shifts):
        rows[r, gamma.locate(poly.support.freqs + t)] = poly.coeffs
    return rows


# ---------------------------------------------------------------------------
# phase-transition harness


@dataclass
class PhaseConfig:
    """Recovery experiment over a range of sample counts.

    ``factors`` lists the supports of independent irreducible factors; a
    single factor is the irreducible case.  When ``per_component`` is given
    each entry fixes the number of samples drawn on every factor and
    ``counts`` is ignored; otherwise ``counts`` are total sample counts
    split as evenly as possible across factors.
    """

    factors: list
    gamma: SupportSet | None = None
    counts: list = field(default_factory=list)
    per_component: list | None = None
    trials: int = 100
    seed: int = 0
    tol: float = DEFAULT_TOL
    heldout: int = 200
    residual_tol: float = 1e-8
    workers: int = 1

    def __post_init__(self):
        if not self.factors:
            raise DomainError("at least one factor support is required")
        dims = {f.dims for f in self.factors}
        if len(dims) != 1:
            raise DomainError("factor supports must share a dimension")
        if self.trials < 1:
            raise DomainError("trials must be positive")
        if self.per_component is not None:
            if any(len(pc) != len(self.factors) for pc in self.per_component):
                raise DomainError("per_component entries need one count per factor")
        elif not self.counts:
            raise DomainError("either counts or per_component must be given")

    @property
    def lam(self) -> SupportSet:
        sup = self.factors[0]
        for f in self.factors[1:]:
            sup = minkowski_sum(sup, f)
        return sup

    @property
    def lifting(self) -> SupportSet:
        return self.gamma if self.gamma is not None else self.lam

    def expected_null_dim(self) -> int:
        comp = shift_complement(self.lifting, self.lam)
        return 0 if comp is None else len(comp)

    def rows(self):
        """(label, per-factor counts) for every table row."""
        if self.per_component is not None:
            return [("+".join(map(str, pc)), [int(v) for v in pc]) for pc in self.per_component]
        m = len(self.factors)
        return [(str(n), [n // m + (i < n % m) for i in range(m)]) for n in self.counts]

    def to_dict(self) -> dict:
        return {
            "factors": [f.to_dict() for f in self.factors],
            "gamma": None if self.gamma is None else self.gamma.to_dict(),
            "counts": list(self.counts),
            "per_component": self.per_component,
            "trials": self.trials, "seed": self.seed, "tol": self.tol,
            "heldout": self.heldout, "residual_tol": self.residual_tol,
        }


def _trial(cfg: PhaseConfig, counts, seed_seq) -> tuple[bool, int]:
    rng = np.random.default_rng(seed_seq)
    polys = [random_poly_with_zero_set(f, rng) for f in cfg.factors]
    clouds = [sample_zero_set(p, n, rng) for p, n in zip(polys, counts)]
    if sum(counts) == 0:
        return False, -1
    X = np.concatenate([c.points for c in clouds], axis=0)
    basis = nullspace(X, cfg.lifting, cfg.tol)
    if basis.dim != cfg.expected_null_dim():
        return False, basis.dim
    held = np.concatenate([sample_zero_set(p, cfg.heldout, rng).points for p in polys])
    resid = np.sqrt(SosSurface(basis).evaluate(held)).max()
    return bool(resid <= cfg.residual_tol), basis.dim


def _row_seeds(cfg: PhaseConfig, row: int):
    return np.random.SeedSequence([cfg.seed, row]).spawn(cfg.trials)


def phase_transition(cfg: PhaseConfig) -> list[dict]:
    """Success fraction of recovery for each sample-count row.

    A trial succeeds when the null-space dimension equals the theoretical
    |Gamma (-) Lambda| and every held-out sample of the true surface has
    annihilation residual sqrt(gamma(x)) <= ``residual_tol``.  Per-trial
    seeds are derived from (seed, row, trial) so results do not depend on
    execution order or worker count.
    """
    table = []
    for r, (label, counts) in enumerate(cfg.rows()):
        seeds = _row_seeds(cfg, r)
        if cfg.workers > 1:
            with ProcessPoolExecutor(cfg.workers) as ex:
                results = list(ex.map(_trial, [cfg] * cfg.trials, [counts] * cfg.trials, seeds))
        else:
            results = [_trial(cfg, counts, s) for s in seeds]
        wins = sum(ok for ok, _ in results)
        dims = [d for _, d in results]
        log.info("row %s: %d/%d successes, null dims %s", label, wins, cfg.trials,
                 sorted(set(dims)))
        table.append({"N": sum(counts), "counts": label, "trials": cfg.trials,
                      "successes": wins, "fraction": wins / cfg.trials})
    return table


def write_phase_table(table, path_or_buf, per_component: bool = False):
    """CSV with columns N, trials, successes, fraction (+ per_component)."""
    cols = ["N", "trials", "successes", "fraction"] + (["per_component"] if per_component else [])
    own = isinstance(path_or_buf, str) or hasattr(path_or_buf, "__fspath__")
    fh = open(path_or_buf, "w", newline="") if own else path_or_buf
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in table:
            out = [row["N"], row["trials"], row["successes"], repr(float(row["fraction"]))]
            if per_component:
                out.append(row["counts"])
            w.writerow(out)
    finally:
        if own:
            fh.close()


def minimal_config(shape, counts, **kw) -> PhaseConfig:
    """Convenience: irreducible experiment on a centered support shape."""
    return PhaseConfig(factors=[centered_rect(shape)], counts=list(counts), **kw)
