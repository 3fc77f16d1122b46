"""Random linear combinations of fixed sparse symmetric matrices.

The ensemble is ``X = sum_l psi_l * Q_l`` where the ``psi_l`` are
independent zero-mean unit-variance scalars and the ``Q_l`` are a fixed
family of symmetric matrices with entries in ``{0, +-(2*N*p)**-0.5}``,
realized once from sparse Rademacher(p) draws (P(-1) = P(+1) = p,
P(0) = 1 - 2p).  Because the psi are independent with unit variance, the
entry covariance of X is exactly the Gram matrix of the per-entry
coefficient vectors ``v_ij = ((Q_1)_ij, ..., (Q_N)_ij)``:

    Cov(X_ij, X_kl) = <v_ij, v_kl>,   Var(X_ij) = ||v_ij||^2.

At the sizes where the family makes the covariance decay like
``n**-(1+eps)``, N is far too large to store, so the family is a pure
function of ``(q_seed, l)``: matrix l is regenerated on demand from its own
counter-based substream and never kept.

The spectral-universality parameters of the normalized ensemble
``Z = n**-0.5 * X`` are computed in ``compute_bvh_params``:

    sigma(Z)   = || E[(Z - EZ)^2] ||_op^(1/2)       (exact: E X^2 = sum_l Q_l^2)
    sigma_*(Z) <= ||Cov(Z)||_op^(1/2)               (bounded via max row sum)
    R(Z)       = n**-0.5 * K * max_l ||Q_l||_op     (K = bound on |psi_l|)

and the tail-width function they control is
``varpi(t) = sigma_* sqrt(t) + R^(1/3) sigma^(2/3) t^(2/3) + R t``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .budget import ConfigError, check_budget
from .rng import stream as _derive_stream

__all__ = [
    "LinearEnsembleSpec",
    "QFamily",
    "FixedFamily",
    "QConditionReport",
    "BvhParams",
    "construct_q_family",
    "check_q_conditions",
    "sample_linear",
    "compute_bvh_params",
    "bvh_params_from_family",
    "psi_moments",
    "sample_psi",
    "entry_cov",
    "operator_norm",
]

PSI_DISTS = ("Rademacher", "Uniform", "TruncGaussian", "Gaussian")

_TRUNC_AT = 3.0
# variance of a standard normal conditioned to [-3, 3]; rescaling by its
# square root restores unit variance
_TRUNC_SD = math.sqrt(stats.truncnorm.var(-_TRUNC_AT, _TRUNC_AT))

DENSE_EIG_MAX_N = 512
_POWER_TOL = 1e-8


def psi_moments(dist: str) -> tuple[float, float, float | None]:
    """(mean, variance, sup-norm bound) of one psi coefficient; bound None if unbounded."""
    if dist == "Rademacher":
        return 0.0, 1.0, 1.0
    if dist == "Uniform":
        return 0.0, 1.0, math.sqrt(3.0)
    if dist == "TruncGaussian":
        return 0.0, 1.0, _TRUNC_AT / _TRUNC_SD
    if dist == "Gaussian":
        return 0.0, 1.0, None
    raise ConfigError(f"unknown psi_dist {dist!r}; expected one of {PSI_DISTS}")


def sample_psi(dist: str, size: int, stream: np.random.Generator) -> np.ndarray:
    if dist == "Rademacher":
        return stream.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0
    if dist == "Uniform":
        s = math.sqrt(3.0)
        return stream.uniform(-s, s, size=size)
    if dist == "TruncGaussian":
        raw = stats.truncnorm.rvs(-_TRUNC_AT, _TRUNC_AT, size=size, random_state=stream)
        return raw / _TRUNC_SD
    if dist == "Gaussian":
        return stream.standard_normal(size)
    raise ConfigError(f"unknown psi_dist {dist!r}; expected one of {PSI_DISTS}")


@dataclass(frozen=True)
class LinearEnsembleSpec:
    n: int
    N: int
    p: float
    psi_dist: str = "Rademacher"
    q_seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if self.N < 1:
            raise ConfigError(f"N must be >= 1, got {self.N}")
        if not (0.0 < self.p <= 0.5):
            raise ConfigError(f"p must lie in (0, 1/2], got {self.p}")
        psi_moments(self.psi_dist)

    def to_json(self) -> dict:
        return {
            "n": int(self.n),
            "N": int(self.N),
            "p": float(self.p),
            "psi_dist": self.psi_dist,
            "q_seed": int(self.q_seed),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LinearEnsembleSpec":
        if not isinstance(obj, dict):
            raise ConfigError(f"linear spec must be a JSON object, got {type(obj).__name__}")
        known = {"n", "N", "p", "psi_dist", "q_seed"}
        extra = set(obj) - known
        if extra:
            raise ConfigError(f"unknown linear spec fields: {sorted(extra)}")
        return cls(
            n=obj.get("n"),
            N=obj.get("N"),
            p=obj.get("p"),
            psi_dist=obj.get("psi_dist", "Rademacher"),
            q_seed=obj.get("q_seed", 0),
        )


class QFamily:
    """Lazily regenerable family of N sparse symmetric coefficient matrices.

    Matrix l is a pure function of (q_seed, l): its n(n+1)/2 upper-triangle
    entries are drawn in row-major order from the substream
    ``stream(q_seed, "qfamily", l)`` as sparse Rademacher(p) values scaled
    by (2*N*p)**-0.5.  Nothing is stored, so N can be astronomically large;
    only desk-scale summaries (Gram matrix, operator norms) materialize
    anything, and those are budget-guarded.
    """

    def __init__(self, n: int, N: int, p: float, q_seed: int):
        if not (0.0 < p <= 0.5):
            raise ConfigError(f"p must lie in (0, 1/2], got {p}")
        self.n = int(n)
        self.N = int(N)
        self.p = float(p)
        self.q_seed = int(q_seed)
        self.scale = 1.0 / math.sqrt(2.0 * N * p)
        iu = np.triu_indices(n)
        self._rows, self._cols = iu
        self.d = len(self._rows)  # number of distinct entries, n(n+1)/2
        self._gram: np.ndarray | None = None

    def upper(self, ell: int) -> np.ndarray:
        """Upper-triangle entries (row-major, i <= j) of Q_ell as a length-d vector."""
        if not (0 <= ell < self.N):
            raise ConfigError(f"matrix index {ell} out of range for N={self.N}")
        g = _derive_stream(self.q_seed, "qfamily", ell)
        u = g.random(self.d)
        vals = np.zeros(self.d)
        vals[u < self.p] = -self.scale
        vals[u >= 1.0 - self.p] = self.scale
        return vals

    def matrix(self, ell: int) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        vals = self.upper(ell)
        out[self._rows, self._cols] = vals
        out[self._cols, self._rows] = vals
        return out

    def upper_block(self, l0: int, l1: int) -> np.ndarray:
        """(d, l1 - l0) array of upper vectors for matrices l0..l1-1."""
        out = np.empty((self.d, l1 - l0))
        for k, ell in enumerate(range(l0, l1)):
            out[:, k] = self.upper(ell)
        return out

    def gram(self) -> np.ndarray:
        """d x d Gram matrix of entry coefficient vectors: the exact entry covariance."""
        if self._gram is None:
            check_budget(float(self.d) ** 2 * self.N, "QFamily.gram")
            g = np.zeros((self.d, self.d))
            block = max(1, min(self.N, 4096))
            for l0 in range(0, self.N, block):
                u = self.upper_block(l0, min(l0 + block, self.N))
                g += u @ u.T
            self._gram = g
        return self._gram

    def flat_index(self, i: int, j: int) -> int:
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise ConfigError(f"entry ({i}, {j}) out of range for n={self.n}")
        if i > j:
            i, j = j, i
        # row-major upper-triangle offset
        return i * self.n - i * (i - 1) // 2 + (j - i)

    def op_norms(self) -> np.ndarray:
        """Operator norm of every Q_ell (dense eigensolve; power iteration for large n)."""
        check_budget(float(self.n) ** 3 * self.N, "QFamily.op_norms")
        out = np.empty(self.N)
        if self.n <= DENSE_EIG_MAX_N:
            block = max(1, min(self.N, 2048))
            mats = np.zeros((block, self.n, self.n))
            for l0 in range(0, self.N, block):
                l1 = min(l0 + block, self.N)
                b = l1 - l0
                u = self.upper_block(l0, l1)
                mats[:b] = 0.0
                mats[:b, self._rows, self._cols] = u.T
                mats[:b, self._cols, self._rows] = u.T
                ev = np.linalg.eigvalsh(mats[:b])
                out[l0:l1] = np.maximum(np.abs(ev[:, 0]), np.abs(ev[:, -1]))
        else:
            for ell in range(self.N):
                out[ell] = operator_norm(self.matrix(ell))
        return out


class FixedFamily:
    """Family wrapper around explicitly given symmetric matrices.

    Duck-types the parts of QFamily that the condition checks and parameter
    computations use; handy for synthetic sanity cases (identity, rank-one)
    and for demos.
    """

    def __init__(self, matrices):
        mats = [np.asarray(m, dtype=np.float64) for m in matrices]
        if not mats:
            raise ConfigError("need at least one matrix")
        n = mats[0].shape[0]
        for m in mats:
            if m.shape != (n, n):
                raise ConfigError("all matrices must be square with equal size")
            if not np.array_equal(m, m.T):
                raise ConfigError("matrices must be symmetric")
        self.n = n
        self.N = len(mats)
        self._mats = mats
        iu = np.triu_indices(n)
        self._rows, self._cols = iu
        self.d = len(self._rows)
        self._gram: np.ndarray | None = None

    def matrix(self, ell: int) -> np.ndarray:
        return self._mats[ell]

    def upper(self, ell: int) -> np.ndarray:
        return self._mats[ell][self._rows, self._cols]

    def upper_block(self, l0: int, l1: int) -> np.ndarray:
        return np.stack([self.upper(ell) for ell in range(l0, l1)], axis=1)

    def gram(self) -> np.ndarray:
        if self._gram is None:
            u = self.upper_block(0, self.N)
            self._gram = u @ u.T
        return self._gram

    def op_norms(self) -> np.ndarray:
        return np.array([operator_norm(m) for m in self._mats])


def construct_q_family(n: int, N: int, p: float, q_seed: int) -> QFamily:
    return _construct_cached(int(n), int(N), float(p), int(q_seed))


@functools.lru_cache(maxsize=32)
def _construct_cached(n: int, N: int, p: float, q_seed: int) -> QFamily:
    return QFamily(n, N, p, q_seed)


def family_of(spec: LinearEnsembleSpec) -> QFamily:
    return construct_q_family(spec.n, spec.N, spec.p, spec.q_seed)


def entry_cov(spec: LinearEnsembleSpec, pair: tuple[int, int], pair2: tuple[int, int]) -> float:
    """Exact Cov(X_pair, X_pair2) = sum_l (Q_l)_pair (Q_l)_pair2 for the realized family."""
    fam = family_of(spec)
    g = fam.gram()
    return float(g[fam.flat_index(*pair), fam.flat_index(*pair2)])


def operator_norm(a: np.ndarray) -> float:
    """Largest singular value of a symmetric matrix.

    Dense eigensolve up to 512; above that, power iteration on a @ (a @ x)
    to tolerance 1e-8 (norm bounds only, no eigenvectors needed).
    """
    n = a.shape[0]
    if n <= DENSE_EIG_MAX_N:
        ev = np.linalg.eigvalsh(a)
        return float(max(abs(ev[0]), abs(ev[-1])))
    x = np.full(n, 1.0 / math.sqrt(n))
    prev = 0.0
    for _ in range(10_000):
        y = a @ (a @ x)
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return 0.0
        x = y / norm
        est = math.sqrt(norm)
        if abs(est - prev) <= _POWER_TOL * max(est, 1.0):
            return est
        prev = est
    return prev


@dataclass
class QConditionReport:
    max_norm_dev: float
    max_inner_prod: float
    max_op_norm: float | None
    norm_dev_bound: float    # c / (log n)^2 with c = 1
    inner_prod_bound: float  # n**-(1 + epsilon)
    op_norm_bound: float     # sqrt(n) / (log n)^2

    def to_json(self) -> dict:
        return {
            "max_norm_dev": self.max_norm_dev,
            "max_inner_prod": self.max_inner_prod,
            "max_op_norm": self.max_op_norm,
            "norm_dev_bound": self.norm_dev_bound,
            "inner_prod_bound": self.inner_prod_bound,
            "op_norm_bound": self.op_norm_bound,
        }


def check_q_conditions(fam: QFamily, epsilon: float, op_norms: bool = True) -> QConditionReport:
    """Measure how close the realized family is to an isotropic entry basis.

    max_norm_dev   = sup_{i<=j} |sum_l (Q_l)_ij^2 - 1|
    max_inner_prod = sup over distinct entry pairs of |sum_l (Q_l)_ij (Q_l)_kl|
    max_op_norm    = max_l ||Q_l||_op (skipped when op_norms=False)

    The companion bounds these are meant to be compared against are
    1/(log n)^2, n**-(1+epsilon) and sqrt(n)/(log n)^2.
    """
    g = fam.gram()
    diag = np.diag(g)
    off = g - np.diag(diag)
    max_norm_dev = float(np.max(np.abs(diag - 1.0)))
    max_inner_prod = float(np.max(np.abs(off))) if fam.d > 1 else 0.0
    max_op = float(np.max(fam.op_norms())) if op_norms else None
    logn2 = math.log(fam.n) ** 2 if fam.n >= 2 else math.inf
    return QConditionReport(
        max_norm_dev=max_norm_dev,
        max_inner_prod=max_inner_prod,
        max_op_norm=max_op,
        norm_dev_bound=1.0 / logn2,
        inner_prod_bound=float(fam.n) ** (-(1.0 + epsilon)),
        op_norm_bound=math.sqrt(fam.n) / logn2,
    )


def sample_linear(spec: LinearEnsembleSpec, stream: np.random.Generator,
                  psi: np.ndarray | None = None) -> np.ndarray:
    """One draw of X = sum_l psi_l Q_l, streaming over l.

    All N psi coefficients are drawn from ``stream`` up front; the Q
    matrices come from the family's own substreams.  ``psi`` can be passed
    explicitly as a degenerate test hook (e.g. all zeros, or a one-hot).
    """
    fam = family_of(spec)
    if psi is None:
        psi = sample_psi(spec.psi_dist, spec.N, stream)
    else:
        psi = np.asarray(psi, dtype=np.float64)
        if psi.shape != (spec.N,):
            raise ConfigError(f"psi must have shape ({spec.N},), got {psi.shape}")
    flat = np.zeros(fam.d)
    block = max(1, min(spec.N, 4096))
    for l0 in range(0, spec.N, block):
        l1 = min(l0 + block, spec.N)
        flat += fam.upper_block(l0, l1) @ psi[l0:l1]
    out = np.zeros((spec.n, spec.n))
    out[fam._rows, fam._cols] = flat
    out[fam._cols, fam._rows] = flat
    return out


@dataclass
class BvhParams:
    """Universality parameters of Z = n**-0.5 * X for the realized family.

    ``sigma_star_upper`` is an upper bound on the weak variance sigma_*(Z):
    the smaller of ||Cov(Z)||_op^(1/2) estimated by the maximum absolute row
    sum of the entry covariance, and sigma itself (which always dominates
    sigma_*).  ``cov_row_sum_bound`` keeps the raw row-sum value.
    """

    sigma: float
    sigma_star_upper: float
    r_bound: float
    cov_row_sum_bound: float
    psi_bound: float

    def varpi_coeffs(self) -> tuple[float, float, float]:
        """Coefficients (c1, c2, c3) of varpi(t) = c1 t^(1/2) + c2 t^(2/3) + c3 t."""
        return (
            self.sigma_star_upper,
            self.r_bound ** (1.0 / 3.0) * self.sigma ** (2.0 / 3.0),
            self.r_bound,
        )

    def varpi(self, t: float) -> float:
        c1, c2, c3 = self.varpi_coeffs()
        return c1 * t ** 0.5 + c2 * t ** (2.0 / 3.0) + c3 * t

    def to_json(self) -> dict:
        c1, c2, c3 = self.varpi_coeffs()
        return {
            "sigma": self.sigma,
            "sigma_star_upper": self.sigma_star_upper,
            "r_bound": self.r_bound,
            "cov_row_sum_bound": self.cov_row_sum_bound,
            "psi_bound": self.psi_bound,
            "varpi_coeffs": {"t_half": c1, "t_twothirds": c2, "t_one": c3},
        }


def compute_bvh_params(spec: LinearEnsembleSpec, fam: QFamily | None = None) -> BvhParams:
    """Compute (sigma, sigma_*, R) for Z = n**-0.5 * X(psi).

    sigma is exact: with unit-variance independent psi,
    E[X^2] = sum_l Q_l^2, so sigma = ||n**-1 sum_l Q_l^2||_op^(1/2).
    Requires a bounded psi distribution (R scales with the psi bound K);
    an unbounded one raises ConfigError.
    """
    _, _, bound = psi_moments(spec.psi_dist)
    if bound is None:
        raise ConfigError(
            f"psi_dist {spec.psi_dist!r} is unbounded; R(Z) needs a sup-norm bound on psi"
        )
    if fam is None:
        fam = family_of(spec)
    return bvh_params_from_family(fam, bound)


def bvh_params_from_family(fam, psi_bound: float) -> BvhParams:
    """Parameter computation on any family object (QFamily or FixedFamily)."""
    bound = psi_bound
    n = fam.n
    check_budget(float(n) ** 3 * fam.N, "compute_bvh_params second moment")

    sq = np.zeros((n, n))
    block = max(1, min(fam.N, 2048))
    mats = np.zeros((block, n, n))
    for l0 in range(0, fam.N, block):
        l1 = min(l0 + block, fam.N)
        b = l1 - l0
        u = fam.upper_block(l0, l1)
        mats[:b] = 0.0
        mats[:b, fam._rows, fam._cols] = u.T
        mats[:b, fam._cols, fam._rows] = u.T
        sq += np.einsum("lij,ljk->ik", mats[:b], mats[:b])
    sigma = math.sqrt(operator_norm(sq / n))

    # ||Cov(Z)||_op <= max over entries (i,j) of the absolute row sum of the
    # ordered-entry covariance; off-diagonal columns count twice ((k,l) and (l,k)).
    g = fam.gram()
    weights = np.where(fam._rows == fam._cols, 1.0, 2.0)
    row_sums = np.abs(g) @ weights
    row_sum_bound = math.sqrt(float(np.max(row_sums)) / n)

    r_bound = bound / math.sqrt(n) * float(np.max(fam.op_norms()))
    return BvhParams(
        sigma=sigma,
        sigma_star_upper=min(sigma, row_sum_bound),
        r_bound=r_bound,
        cov_row_sum_bound=row_sum_bound,
        psi_bound=bound,
    )
