"""Spiked ensembles Y = X + (lambda / sqrt(n)) * ones @ ones.T.

Adding a common positive mean mu = lambda / sqrt(n) to every entry detaches
the top eigenvalue: lambda_1(n**-0.5 Y) concentrates near lambda + 1/lambda,
and the centered, rescaled statistic is asymptotically Gaussian.  The scale
depends on the correlation decay exponent eps of the base model:

    eps >= 1:  sqrt(n)   * (lambda_1 - lambda - 1/lambda)  -> N(0, 2)
    eps < 1:   n**(eps/2) * (lambda_1 - lambda - 1/lambda) -> N(0, sigma^2)

with sigma^2 the limit of n**(eps-1) Var(n**-1 sum_ij X_ij).  Rather than
assuming that limit exists, ``exact_z_moments`` computes the exact finite-n
variance from the entry covariance and the experiment uses it as the
target.

The key identity behind the analysis (the von Mises iteration): with
S = Y @ ones, and ones = v + r split along the top eigenvector (Yv =
lambda_1 v, v orthogonal to r),

    lambda_1 = (S.S)/(S.ones) + (lambda_1 * r.Yr - ||Yr||^2)/(S.ones),

which ``von_mises_decompose`` verifies numerically on every draw, together
with the Pythagoras split

    ||S - L ones||^2 = (lambda_1 - L)^2 ||v||^2 + ||Yr - L r||^2,  L = lambda sqrt(n).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .budget import ConfigError
from . import ensembles as _ens
from .ensembles import EnsembleSpec, is_jointly_gaussian

__all__ = [
    "SpikedSpec",
    "VonMisesDecomposition",
    "ZMomentReport",
    "FluctResult",
    "RemainderReport",
    "DegenerateEigenvalueError",
    "sample_spiked",
    "von_mises_decompose",
    "exact_z_moments",
    "fluctuation_experiment",
    "fluctuation_replicate",
    "remainder_diagnostics",
]

REL_GAP_TOL = 1e-8
_MAX_RESAMPLE = 100


class DegenerateEigenvalueError(RuntimeError):
    """Top eigenvalue not simple within the relative gap tolerance."""


@dataclass(frozen=True)
class SpikedSpec:
    """Base ensemble plus spike strength lambda (mean mu = lambda / sqrt(n))."""

    base: EnsembleSpec
    lam: float
    d_max: float = 10.0  # standing constraint lambda <= d_max * sqrt(n)

    def __post_init__(self):
        if not is_jointly_gaussian(self.base):
            raise ConfigError(
                "spiked model needs a jointly Gaussian base "
                f"(variant {self.base.variant}, v_dist {self.base.v_dist})"
            )
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if self.lam > self.d_max * math.sqrt(self.base.n):
            raise ConfigError(
                f"lambda = {self.lam} exceeds d_max * sqrt(n) = "
                f"{self.d_max * math.sqrt(self.base.n):.6g}"
            )

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def mu(self) -> float:
        return self.lam / math.sqrt(self.n)

    @property
    def big_l(self) -> float:
        """L = n * mu = lambda * sqrt(n), the mean of every row sum."""
        return self.lam * math.sqrt(self.n)

    @property
    def regime(self) -> str:
        eps = self.base.epsilon
        if self.base.variant == _ens.IID_GAUSSIAN or eps is None or eps >= 1.0:
            return "eps_ge_1"
        return "eps_lt_1"

    def to_json(self) -> dict:
        return {"base": self.base.to_json(), "lambda": float(self.lam),
                "d_max": float(self.d_max)}

    @classmethod
    def from_json(cls, obj: dict) -> "SpikedSpec":
        if not isinstance(obj, dict):
            raise ConfigError(f"spiked spec must be a JSON object, got {type(obj).__name__}")
        known = {"base", "lambda", "d_max"}
        extra = set(obj) - known
        if extra:
            raise ConfigError(f"unknown spiked spec fields: {sorted(extra)}")
        if "base" not in obj or "lambda" not in obj:
            raise ConfigError("spiked spec needs 'base' and 'lambda'")
        return cls(base=EnsembleSpec.from_json(obj["base"]), lam=obj["lambda"],
                   d_max=obj.get("d_max", 10.0))


def sample_spiked(spec: SpikedSpec, stream: np.random.Generator) -> np.ndarray:
    """One draw Y = X + mu * ones @ ones.T."""
    return _ens.sample(spec.base, stream) + spec.mu


@dataclass
class VonMisesDecomposition:
    """Split of ones = v + r along the top eigenvector of Y, plus checks.

    v is the projection of ones onto the top eigendirection (sign fixed so
    that v.ones >= 0), r = ones - v, S = Y @ ones.  ``z`` is the centered
    row-sum vector S - L * ones.
    """

    lambda1: float
    s: np.ndarray
    v: np.ndarray
    r: np.ndarray
    big_l: float
    identity_residual: float
    pythagoras_residual: float
    vr_dot: float

    @property
    def z(self) -> np.ndarray:
        return self.s - self.big_l


def von_mises_decompose(y: np.ndarray, lam: float,
                        rel_gap_tol: float = REL_GAP_TOL) -> VonMisesDecomposition:
    """Decompose ones = v + r for the top eigenpair of Y and verify the identity.

    Raises DegenerateEigenvalueError when the top eigenvalue is not simple
    within the relative gap tolerance (r is ill-defined at degeneracy).
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    evals, evecs = np.linalg.eigh(y)
    lambda1 = float(evals[-1])
    if n >= 2:
        gap = float(evals[-1] - evals[-2])
        if gap <= rel_gap_tol * max(abs(lambda1), 1e-300):
            raise DegenerateEigenvalueError(
                f"top eigenvalue gap {gap:.3g} below tolerance at lambda1 = {lambda1:.6g}"
            )
    ones = np.ones(n)
    vhat = evecs[:, -1]
    proj = float(vhat @ ones)
    if proj < 0:
        vhat = -vhat
        proj = -proj
    v = proj * vhat
    r = ones - v

    s = y @ ones
    st1 = float(s @ ones)
    sts = float(s @ s)
    yr = y @ r
    rtyr = float(r @ yr)
    yr2 = float(yr @ yr)
    rhs = sts / st1 + (lambda1 * rtyr - yr2) / st1
    identity_residual = abs(lambda1 - rhs)

    big_l = lam * math.sqrt(n)
    lhs = float(np.sum((s - big_l) ** 2))
    pyth = (lambda1 - big_l) ** 2 * float(v @ v) + float(np.sum((yr - big_l * r) ** 2))
    pythagoras_residual = abs(lhs - pyth)

    return VonMisesDecomposition(
        lambda1=lambda1, s=s, v=v, r=r, big_l=big_l,
        identity_residual=identity_residual,
        pythagoras_residual=pythagoras_residual,
        vr_dot=float(v @ r),
    )


# Exact row-sum covariance arithmetic ---------------------------------------------


@dataclass
class ZMomentReport:
    """Exact finite-n moments of the centered row sums Z_i = sum_j X_ij.

    All values come from closed-form sums over the entry covariance
    operator; the fourth-moment quantities are assembled from the Gaussian
    Wick expansions of Var(X_ij X_ij'), Cov(X_ij^2, X_ij'^2), etc., bucket
    by bucket (see ``var_sq_buckets`` / ``cov_sq_buckets``).
    """

    n: int
    var_Zi: np.ndarray
    cov_Zi_Zj: float
    var_Zi_sq: float
    cov_Zi2_Zj2: float
    var_S1: float
    var_sum_over_n: float
    var_sq_buckets: dict = field(default_factory=dict)
    cov_sq_buckets: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "var_Zi": [float(x) for x in self.var_Zi],
            "cov_Zi_Zj": self.cov_Zi_Zj,
            "var_Zi_sq": self.var_Zi_sq,
            "cov_Zi2_Zj2": self.cov_Zi2_Zj2,
            "var_S1": self.var_S1,
            "var_sum_over_n": self.var_sum_over_n,
            "var_sq_buckets": dict(self.var_sq_buckets),
            "cov_sq_buckets": dict(self.cov_sq_buckets),
        }


def _var_sq_assembly(m: np.ndarray) -> tuple[float, dict]:
    """Assemble Var(Z_i^2) from Wick pieces of the row covariance matrix m.

    Z_i^2 splits into the squares A = sum_j X_ij^2 and the ordered cross
    terms B = sum_{j != j'} X_ij X_ij'; each bucket below is one block of
    Var(A) + Var(B) + 2 Cov(A, B) evaluated in closed form.
    """
    md = np.diag(m)
    s1 = float(np.sum(m))
    f2 = float(np.sum(m * m))
    sum_md2 = float(np.sum(md * md))
    rows = np.sum(m, axis=1)
    r2 = float(np.sum(rows * rows))
    g = m @ m
    sum_g = float(np.sum(g))
    tr_g = float(np.trace(g))

    var_squares = 2.0 * sum_md2                       # sum_j Var(X_ij^2)
    cov_squares = 2.0 * (f2 - sum_md2)                # sum_{j != j'} Cov(X_ij^2, X_ij'^2)
    var_cross = (float(np.sum(md)) ** 2 - sum_md2) + (f2 - sum_md2)
    full_cross = 2.0 * (s1 * s1 - r2 - sum_g + tr_g)  # all ordered (j!=j'),(k!=k') blocks
    cov_cross_distinct = full_cross - 2.0 * var_cross
    cross_square = 4.0 * (r2 - f2)                    # 2 sum_{j, k != k'} Cov(X_ij^2, X_ik X_ik')

    buckets = {
        "var_squares": var_squares,
        "cov_squares": cov_squares,
        "var_cross": var_cross,
        "cov_cross_distinct": cov_cross_distinct,
        "cross_square": cross_square,
    }
    total = var_squares + cov_squares + 2.0 * var_cross + cov_cross_distinct + cross_square
    return total, buckets


def _cov_sq_assembly(c: np.ndarray) -> tuple[float, dict]:
    """Assemble Cov(Z_i^2, Z_j^2) from Wick pieces of the cross-row matrix c."""
    s1 = float(np.sum(c))
    f2 = float(np.sum(c * c))
    rows = np.sum(c, axis=1)
    cols = np.sum(c, axis=0)
    r2 = float(np.sum(rows * rows))
    c2 = float(np.sum(cols * cols))

    square_square = 2.0 * f2
    square_cross = 2.0 * (r2 - f2)
    cross_square = 2.0 * (c2 - f2)
    cross_cross = 2.0 * (s1 * s1 - r2 - c2 + f2)
    buckets = {
        "square_square": square_square,
        "square_cross": square_cross,
        "cross_square": cross_square,
        "cross_cross": cross_cross,
    }
    return square_square + square_cross + cross_square + cross_cross, buckets


_EXCHANGEABLE_SPOT_TOL = 1e-12
_PER_I_MAX_N = 64


def exact_z_moments(spec: EnsembleSpec) -> ZMomentReport:
    """Exact finite-n variances and covariances of row sums and their squares.

    The supported (jointly Gaussian) models are exchangeable in the index
    set, so representative rows determine everything; exchangeability is
    spot-checked numerically.  For n <= 64 the per-row variances are
    computed row by row anyway.
    """
    if not is_jointly_gaussian(spec):
        raise ConfigError(
            "exact_z_moments needs jointly Gaussian entries "
            f"(variant {spec.variant}, v_dist {spec.v_dist})"
        )
    n = spec.n

    m0 = _ens.entry_cov_matrix(spec, 0, 0)
    var_z = float(np.sum(m0))
    if n <= _PER_I_MAX_N:
        var_zi = np.array([float(np.sum(_ens.entry_cov_matrix(spec, i, i))) for i in range(n)])
    else:
        for i in (n // 2, n - 1):
            dev = abs(float(np.sum(_ens.entry_cov_matrix(spec, i, i))) - var_z)
            if dev > _EXCHANGEABLE_SPOT_TOL * max(abs(var_z), 1.0):
                raise ConfigError(f"model not exchangeable: Var(Z_{i}) differs by {dev:.3g}")
        var_zi = np.full(n, var_z)

    if n >= 2:
        c01 = _ens.entry_cov_matrix(spec, 0, 1)
        cov_z = float(np.sum(c01))
        for (i, j) in ((0, n - 1), (1, min(2, n - 1))):
            if i == j:
                continue
            dev = abs(float(np.sum(_ens.entry_cov_matrix(spec, i, j))) - cov_z)
            if dev > _EXCHANGEABLE_SPOT_TOL * max(abs(cov_z), 1.0):
                raise ConfigError(f"model not exchangeable: Cov(Z_{i}, Z_{j}) deviates by {dev:.3g}")
        var_zi_sq, var_buckets = _var_sq_assembly(m0)
        cov_zi2_zj2, cov_buckets = _cov_sq_assembly(c01)
    else:
        cov_z = 0.0
        var_zi_sq, var_buckets = _var_sq_assembly(m0)
        cov_zi2_zj2, cov_buckets = 0.0, {}

    var_s1 = n * var_z + n * (n - 1) * cov_z
    return ZMomentReport(
        n=n,
        var_Zi=var_zi,
        cov_Zi_Zj=cov_z,
        var_Zi_sq=var_zi_sq,
        cov_Zi2_Zj2=cov_zi2_zj2,
        var_S1=var_s1,
        var_sum_over_n=var_s1 / n ** 2,
        var_sq_buckets=var_buckets,
        cov_sq_buckets=cov_buckets,
    )


# Fluctuation experiments ----------------------------------------------------------


@dataclass
class FluctResult:
    """Scaled top-eigenvalue fluctuation samples and their Gaussian target.

    scaled_samples[r] = n**expo * (lambda_1(n**-0.5 Y) - lambda - 1/lambda)
    with expo = 1/2 in the eps >= 1 regime and eps/2 otherwise.
    ``sum_xij_term`` holds the matching scaling of n**-1 sum_ij X_ij, the
    leading term of the representation; ``remainder`` is their difference.
    """

    regime: str
    scaled_samples: np.ndarray
    sigma2_target: float
    lambda1: np.ndarray
    sum_xij_term: np.ndarray
    remainder: np.ndarray
    rejections: int
    n: int
    lam: float
    scaling_exponent: float

    def summary(self) -> dict:
        x = self.scaled_samples
        return {
            "regime": self.regime,
            "n": self.n,
            "lambda": self.lam,
            "reps": int(len(x)),
            "mean": float(np.mean(x)),
            "variance": float(np.var(x, ddof=1)) if len(x) > 1 else 0.0,
            "sigma2_target": self.sigma2_target,
            "scaling_exponent": self.scaling_exponent,
            "rejections": self.rejections,
        }


def _scaling_exponent(spec: SpikedSpec) -> float:
    if spec.regime == "eps_ge_1":
        return 0.5
    return spec.base.epsilon / 2.0


def sigma2_target(spec: SpikedSpec) -> float:
    """Exact finite-n variance of the scaled leading term."""
    n = spec.n
    if spec.regime == "eps_ge_1":
        return 2.0
    eps = spec.base.epsilon
    return float(n) ** (eps - 1.0) * exact_z_moments(spec.base).var_sum_over_n


def fluctuation_replicate(spec: SpikedSpec, g: np.random.Generator) -> tuple[float, float, int]:
    """One replicate: (normalized lambda_1, n**-1 sum_ij X_ij, rejections).

    Draws are rejected and redrawn (from the same stream, counted) when the
    top eigenvalue of Y is degenerate within the gap tolerance.
    """
    n = spec.n
    rootn = math.sqrt(n)
    rejections = 0
    for _ in range(_MAX_RESAMPLE):
        y = sample_spiked(spec, g)
        evals = np.linalg.eigvalsh(y)
        lam1 = float(evals[-1])
        if n == 1 or (evals[-1] - evals[-2]) > REL_GAP_TOL * max(abs(lam1), 1e-300):
            sum_y = float(np.sum(y))
            sum_x = sum_y - n * n * spec.mu
            return lam1 / rootn, sum_x / n, rejections
        rejections += 1
    raise DegenerateEigenvalueError(f"no simple top eigenvalue in {_MAX_RESAMPLE} draws")


def fluctuation_experiment(spec: SpikedSpec, reps: int,
                           stream: np.random.Generator | Callable[[int], np.random.Generator],
                           ) -> FluctResult:
    """Monte Carlo fluctuation samples of the spiked top eigenvalue.

    ``stream`` is either a single generator (replicates drawn sequentially)
    or a callable replicate -> generator for per-replicate streams.  Warns,
    but does not fail, when lambda is marginal for the regime's growth
    requirement.
    """
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    if not spec.lam > 0:
        raise ConfigError("fluctuation statistics need lambda > 0 (they center at lambda + 1/lambda)")
    n = spec.n
    expo = _scaling_exponent(spec)
    needed = float(n) ** 0.25 if spec.regime == "eps_ge_1" else float(n) ** (spec.base.epsilon / 4)
    if spec.lam < needed:
        warnings.warn(
            f"lambda = {spec.lam:.4g} is marginal: the regime asks for lambda >> "
            f"{needed:.4g} at n = {n}",
            stacklevel=2,
        )
    target = sigma2_target(spec)
    center = spec.lam + 1.0 / spec.lam
    scale = float(n) ** expo
    sum_scale = scale / math.sqrt(n)  # n**expo * (1/sqrt(n)) applied to n**-0.5 sum term

    lam1 = np.empty(reps)
    main = np.empty(reps)
    rejections = 0
    for r in range(reps):
        g = stream(r) if callable(stream) else stream
        l1, sx, rej = fluctuation_replicate(spec, g)
        lam1[r] = l1
        main[r] = sx
        rejections += rej

    scaled = scale * (lam1 - center)
    sum_term = sum_scale * main
    return FluctResult(
        regime=spec.regime,
        scaled_samples=scaled,
        sigma2_target=target,
        lambda1=lam1,
        sum_xij_term=sum_term,
        remainder=scaled - sum_term,
        rejections=rejections,
        n=n,
        lam=spec.lam,
        scaling_exponent=expo,
    )


@dataclass
class RemainderReport:
    """Empirical size of the von Mises remainder pieces across replicates.

    r_norm_rate and qform_bound_rate are the 95th percentiles of
    ||r||^2 lambda^2 / n and ||Y r||^2 lambda^2 / n^2; both stay O(1) when
    the spike is strong enough, which two increasing n values exhibit.
    """

    r_norm_rate: float
    qform_bound_rate: float
    r_norm_quantiles: dict
    qform_quantiles: dict
    n: int
    lam: float
    reps: int

    def to_json(self) -> dict:
        return {
            "r_norm_rate": self.r_norm_rate,
            "qform_bound_rate": self.qform_bound_rate,
            "r_norm_quantiles": dict(self.r_norm_quantiles),
            "qform_quantiles": dict(self.qform_quantiles),
            "n": self.n,
            "lambda": self.lam,
            "reps": self.reps,
        }


_QUANTS = (0.5, 0.9, 0.95)


def remainder_diagnostics(spec: SpikedSpec, reps: int,
                          stream: np.random.Generator | Callable[[int], np.random.Generator],
                          ) -> RemainderReport:
    """Quantiles of ||r||^2 lambda^2 / n and ||Yr||^2 lambda^2 / n^2; lambda > 4."""
    if not spec.lam > 4.0:
        raise ConfigError(f"remainder diagnostics require lambda > 4, got {spec.lam}")
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    n = spec.n
    r_stats = np.empty(reps)
    q_stats = np.empty(reps)
    for rep in range(reps):
        g = stream(rep) if callable(stream) else stream
        y = sample_spiked(spec, g)
        dec = von_mises_decompose(y, spec.lam)
        r2 = float(dec.r @ dec.r)
        yr = y @ dec.r
        yr2 = float(yr @ yr)
        r_stats[rep] = r2 * spec.lam ** 2 / n
        q_stats[rep] = yr2 * spec.lam ** 2 / n ** 2
    rq = {str(q): float(np.quantile(r_stats, q)) for q in _QUANTS}
    qq = {str(q): float(np.quantile(q_stats, q)) for q in _QUANTS}
    return RemainderReport(
        r_norm_rate=rq["0.95"],
        qform_bound_rate=qq["0.95"],
        r_norm_quantiles=rq,
        qform_quantiles=qq,
        n=n,
        lam=spec.lam,
        reps=reps,
    )
