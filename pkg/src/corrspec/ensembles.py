"""Correlated Gaussian symmetric matrix ensembles with exact covariance.

Every model here is generative: a matrix draw is an explicit O(n^2)
construction (iid Gaussian noise plus low-rank Gaussian perturbations), not
a dense Cholesky factor of the n(n+1)/2-dimensional entry covariance.  The
analytic covariance of any two entries is available in closed form through
``exact_entry_cov``, which is what the trace-moment oracle and the exact
variance arithmetic consume.  A dense-covariance Cholesky sampler exists
only as a small-n test oracle (``sample_dense_cov``).

Variants
--------
IidGaussian
    All upper-triangle entries (diagonal included) iid standard normal.
TestModel
    ``X = W + alpha_n * V * ones @ ones.T`` with W an iid-Gaussian symmetric
    matrix, ``alpha_n = n ** (-(1 + eps) / 2)`` and V a single zero-mean
    unit-variance scalar (Rademacher or Gaussian).  Every pair of distinct
    entries has covariance ``alpha_n ** 2``; entry variances are
    ``1 + alpha_n ** 2``.
ThreeParam
    ``X = alpha_n * U * ones @ ones.T + beta_n * (ones @ V.T + V @ ones.T)
    + theta_n * Z`` with U scalar, V an n-vector, Z iid-Gaussian symmetric,
    all standard normal, and ``beta_n = sqrt(n**-gamma - n**-(1+eps))``,
    ``theta_n = sqrt(1 - alpha_n**2 - 2 * beta_n**2)``.  The covariance of
    two off-diagonal entries depends only on how many indices their index
    pairs share: none -> ``n**-(1+eps)``, one -> ``n**-gamma``.
LinearEnsemble
    Non-Gaussian linear combination of fixed sparse matrices; see
    :mod:`corrspec.linear_ensemble`.

Matrices are plain ``numpy.ndarray`` built by mirroring the upper triangle,
so ``X[i, j] == X[j, i]`` holds bit-for-bit.

Entry indices are 0-based throughout the Python API.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .budget import ConfigError
from . import linear_ensemble as _lin
from .linear_ensemble import LinearEnsembleSpec

__all__ = [
    "IID_GAUSSIAN",
    "TEST_MODEL",
    "THREE_PARAM",
    "LINEAR_ENSEMBLE",
    "VARIANTS",
    "EnsembleSpec",
    "CorrelationSpec",
    "CorrelationReport",
    "iid_gaussian",
    "test_model",
    "three_param",
    "linear_ensemble",
    "alpha_n",
    "sample",
    "sample_batch",
    "sample_dense_cov",
    "exact_entry_cov",
    "entry_cov_fn",
    "entry_cov_matrix",
    "verify_correlation_spec",
    "mirror_upper",
]

IID_GAUSSIAN = "IidGaussian"
TEST_MODEL = "TestModel"
THREE_PARAM = "ThreeParam"
LINEAR_ENSEMBLE = "LinearEnsemble"
VARIANTS = (IID_GAUSSIAN, TEST_MODEL, THREE_PARAM, LINEAR_ENSEMBLE)

V_DISTS = ("Rademacher", "Gaussian")

# Variants with closed-form entry covariance tables (exchangeable in the index set).
GAUSSIAN_VARIANTS = (IID_GAUSSIAN, TEST_MODEL, THREE_PARAM)


def is_jointly_gaussian(spec: "EnsembleSpec") -> bool:
    """Whether the entries form a jointly Gaussian vector.

    The test model with a Rademacher scalar is a two-component Gaussian
    mixture: its covariance table is exact but Wick's formula is not, so
    fourth-moment oracles must refuse it.
    """
    if spec.variant in (IID_GAUSSIAN, THREE_PARAM):
        return True
    if spec.variant == TEST_MODEL:
        return spec.v_dist == "Gaussian"
    return False

DENSE_COV_MAX_N = 60


def alpha_n(n: int, epsilon: float) -> float:
    """Rank-one perturbation scale n ** (-(1 + eps) / 2)."""
    return float(n) ** (-(1.0 + epsilon) / 2.0)


@dataclass(frozen=True)
class EnsembleSpec:
    """A named, parameterized matrix model; validate() checks the parameters.

    Fields not used by the variant stay None.  ``epsilon >= 0`` is allowed
    (epsilon = 0 is the non-conforming boundary case used to demonstrate
    that the largest eigenvalue need not converge to 2).
    """

    variant: str
    n: int
    epsilon: float | None = None
    v_dist: str | None = None      # TestModel
    gamma: float | None = None     # ThreeParam
    linear: LinearEnsembleSpec | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n!r}")
        if self.variant == TEST_MODEL:
            if self.epsilon is None or self.epsilon < 0:
                raise ConfigError(f"TestModel requires epsilon >= 0, got {self.epsilon!r}")
            if self.v_dist not in V_DISTS:
                raise ConfigError(f"TestModel v_dist must be one of {V_DISTS}, got {self.v_dist!r}")
        elif self.variant == THREE_PARAM:
            if self.epsilon is None or self.epsilon < 0:
                raise ConfigError(f"ThreeParam requires epsilon >= 0, got {self.epsilon!r}")
            if self.gamma is None:
                raise ConfigError("ThreeParam requires gamma")
            if not self.gamma < 1.0 + self.epsilon:
                raise ConfigError(
                    f"ThreeParam requires gamma < 1 + epsilon (got gamma={self.gamma}, "
                    f"epsilon={self.epsilon})"
                )
            a, b, t2 = self._three_param_coeffs()
            if t2 < 0:
                raise ConfigError(
                    f"ThreeParam requires theta_n^2 = 1 - alpha_n^2 - 2*beta_n^2 >= 0; "
                    f"got theta_n^2 = {t2:.6g} at n={self.n}"
                )
        elif self.variant == LINEAR_ENSEMBLE:
            if self.linear is None:
                raise ConfigError("LinearEnsemble requires a LinearEnsembleSpec")
            if self.linear.n != self.n:
                raise ConfigError(
                    f"LinearEnsemble dimension mismatch: spec n={self.n}, linear n={self.linear.n}"
                )

    # Derived model coefficients -------------------------------------------------

    @property
    def alpha(self) -> float:
        if self.variant not in (TEST_MODEL, THREE_PARAM):
            raise ConfigError(f"alpha_n undefined for variant {self.variant}")
        return alpha_n(self.n, self.epsilon)

    def _three_param_coeffs(self) -> tuple[float, float, float]:
        """(alpha_n, beta_n, theta_n^2) for the three-parameter model."""
        a = alpha_n(self.n, self.epsilon)
        b2 = float(self.n) ** (-self.gamma) - float(self.n) ** (-(1.0 + self.epsilon))
        t2 = 1.0 - a * a - 2.0 * b2
        return a, math.sqrt(max(b2, 0.0)), t2

    @property
    def beta(self) -> float:
        if self.variant != THREE_PARAM:
            raise ConfigError(f"beta_n undefined for variant {self.variant}")
        return self._three_param_coeffs()[1]

    @property
    def theta(self) -> float:
        if self.variant != THREE_PARAM:
            raise ConfigError(f"theta_n undefined for variant {self.variant}")
        t2 = self._three_param_coeffs()[2]
        if t2 < 0:
            raise ConfigError(f"theta_n^2 = {t2:.6g} < 0")
        return math.sqrt(t2)

    # JSON contract ---------------------------------------------------------------

    def to_json(self) -> dict:
        out: dict = {"variant": self.variant, "n": int(self.n)}
        if self.epsilon is not None:
            out["epsilon"] = float(self.epsilon)
        if self.v_dist is not None:
            out["v_dist"] = self.v_dist
        if self.gamma is not None:
            out["gamma"] = float(self.gamma)
        if self.linear is not None:
            out["linear"] = self.linear.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "EnsembleSpec":
        if not isinstance(obj, dict):
            raise ConfigError(f"ensemble spec must be a JSON object, got {type(obj).__name__}")
        known = {"variant", "n", "epsilon", "v_dist", "gamma", "linear"}
        extra = set(obj) - known
        if extra:
            raise ConfigError(f"unknown ensemble spec fields: {sorted(extra)}")
        linear = obj.get("linear")
        return cls(
            variant=obj.get("variant"),
            n=obj.get("n"),
            epsilon=obj.get("epsilon"),
            v_dist=obj.get("v_dist"),
            gamma=obj.get("gamma"),
            linear=LinearEnsembleSpec.from_json(linear) if linear is not None else None,
        )


def iid_gaussian(n: int) -> EnsembleSpec:
    return EnsembleSpec(IID_GAUSSIAN, n)


def test_model(n: int, epsilon: float, v_dist: str = "Rademacher") -> EnsembleSpec:
    return EnsembleSpec(TEST_MODEL, n, epsilon=epsilon, v_dist=v_dist)


def three_param(n: int, epsilon: float, gamma: float) -> EnsembleSpec:
    return EnsembleSpec(THREE_PARAM, n, epsilon=epsilon, gamma=gamma)


def linear_ensemble(lin: LinearEnsembleSpec) -> EnsembleSpec:
    return EnsembleSpec(LINEAR_ENSEMBLE, lin.n, linear=lin)


# Sampling ---------------------------------------------------------------------


def mirror_upper(a: np.ndarray) -> np.ndarray:
    """Symmetrize by copying the upper triangle onto the lower (bit-exact)."""
    u = np.triu(a)
    return u + np.swapaxes(np.triu(a, 1), -1, -2)


def _rademacher(stream: np.random.Generator, size) -> np.ndarray:
    return stream.integers(0, 2, size=size).astype(np.float64) * 2.0 - 1.0


def sample_batch(spec: EnsembleSpec, size: int, stream: np.random.Generator) -> np.ndarray:
    """Draw ``size`` matrices as a (size, n, n) array.

    Draw order within one call is fixed: the full (size, n, n)
    standard-normal block for the noise matrix first, then the model's
    low-rank Gaussian factors.  Results are reproducible given (spec, size,
    stream state) but depend on how draws are split into batches; ``sample``
    is exactly the size-1 case.
    """
    n = spec.n
    if spec.variant == IID_GAUSSIAN:
        return mirror_upper(stream.standard_normal((size, n, n)))
    if spec.variant == TEST_MODEL:
        w = mirror_upper(stream.standard_normal((size, n, n)))
        if spec.v_dist == "Rademacher":
            v = _rademacher(stream, size)
        else:
            v = stream.standard_normal(size)
        return w + (spec.alpha * v)[:, None, None]
    if spec.variant == THREE_PARAM:
        a, b, _ = spec._three_param_coeffs()
        t = spec.theta
        z = mirror_upper(stream.standard_normal((size, n, n)))
        u = stream.standard_normal(size)
        v = stream.standard_normal((size, n))
        # outer sum v_i + v_j is bitwise symmetric because IEEE addition commutes
        vsum = v[:, :, None] + v[:, None, :]
        return (a * u)[:, None, None] + b * vsum + t * z
    if spec.variant == LINEAR_ENSEMBLE:
        out = np.empty((size, n, n))
        for k in range(size):
            out[k] = _lin.sample_linear(spec.linear, stream)
        return out
    raise ConfigError(f"unknown variant {spec.variant!r}")


def sample(spec: EnsembleSpec, stream: np.random.Generator) -> np.ndarray:
    """One draw of the model; symmetric n x n array."""
    return sample_batch(spec, 1, stream)[0]


# Exact covariance --------------------------------------------------------------


def _canon(i: int, j: int, n: int) -> tuple[int, int]:
    if not (0 <= i < n and 0 <= j < n):
        raise ConfigError(f"entry index ({i}, {j}) out of range for n={n}")
    return (i, j) if i <= j else (j, i)


def exact_entry_cov(spec: EnsembleSpec, i: int, j: int, i2: int, j2: int) -> float:
    """Analytic Cov(X[i,j], X[i2,j2]); index pairs are unordered, 0-based."""
    n = spec.n
    p = _canon(i, j, n)
    q = _canon(i2, j2, n)
    same = p == q
    if spec.variant == IID_GAUSSIAN:
        return 1.0 if same else 0.0
    if spec.variant == TEST_MODEL:
        a2 = spec.alpha ** 2
        return a2 + (1.0 if same else 0.0)
    if spec.variant == THREE_PARAM:
        a, b, _ = spec._three_param_coeffs()
        t2 = spec.theta ** 2
        # count index matches between the multisets {i,j} and {i2,j2}
        m = (p[0] == q[0]) + (p[0] == q[1]) + (p[1] == q[0]) + (p[1] == q[1])
        return a * a + b * b * m + (t2 if same else 0.0)
    if spec.variant == LINEAR_ENSEMBLE:
        return _lin.entry_cov(spec.linear, p, q)
    raise ConfigError(f"unknown variant {spec.variant!r}")


def entry_cov_fn(spec: EnsembleSpec) -> Callable[[tuple[int, int], tuple[int, int]], float]:
    """Closure over exact_entry_cov taking two (i, j) tuples."""

    def cov(p: tuple[int, int], q: tuple[int, int]) -> float:
        return exact_entry_cov(spec, p[0], p[1], q[0], q[1])

    return cov


def entry_cov_matrix(spec: EnsembleSpec, i: int, i2: int) -> np.ndarray:
    """Vectorized row-pair covariance: M[j, k] = Cov(X[i, j], X[i2, k]).

    Used by the exact variance arithmetic, which needs whole rows of the
    entry-covariance operator at once.  Only the jointly Gaussian variants
    are supported.
    """
    n = spec.n
    if not (0 <= i < n and 0 <= i2 < n):
        raise ConfigError(f"row index ({i}, {i2}) out of range for n={n}")
    if spec.variant not in GAUSSIAN_VARIANTS:
        raise ConfigError(f"entry_cov_matrix supports Gaussian variants only, got {spec.variant}")

    # indicator of {i, j} == {i2, k}
    same = np.zeros((n, n))
    if i == i2:
        np.fill_diagonal(same, 1.0)
    else:
        same[i2, i] = 1.0

    if spec.variant == IID_GAUSSIAN:
        return same
    if spec.variant == TEST_MODEL:
        return spec.alpha ** 2 + same
    a, b, _ = spec._three_param_coeffs()
    t2 = spec.theta ** 2
    j = np.arange(n)
    m = np.zeros((n, n))
    m += 1.0 if i == i2 else 0.0
    m += (j[None, :] == i).astype(float)   # k == i
    m += (j[:, None] == i2).astype(float)  # j == i2
    m += np.eye(n)                         # j == k
    return a * a + b * b * m + t2 * same


# Dense-covariance oracle sampler ------------------------------------------------


def _upper_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i, n)]


def sample_dense_cov(spec: EnsembleSpec, stream: np.random.Generator) -> np.ndarray:
    """Test-oracle draw via Cholesky of the full entry covariance (n <= 60).

    Independent of the generative path: builds the n(n+1)/2-dimensional
    covariance from exact_entry_cov and transforms iid normals.
    """
    n = spec.n
    if n > DENSE_COV_MAX_N:
        raise ConfigError(f"dense-covariance sampling is a test oracle for n <= {DENSE_COV_MAX_N}")
    pairs = _upper_pairs(n)
    d = len(pairs)
    cov = np.empty((d, d))
    for a, (i, j) in enumerate(pairs):
        for b, (k, l) in enumerate(pairs):
            cov[a, b] = exact_entry_cov(spec, i, j, k, l)
    chol = np.linalg.cholesky(cov)
    flat = chol @ stream.standard_normal(d)
    out = np.zeros((n, n))
    for a, (i, j) in enumerate(pairs):
        out[i, j] = flat[a]
        out[j, i] = flat[a]
    return out


# Conformance checking -----------------------------------------------------------


@dataclass(frozen=True)
class CorrelationSpec:
    """Claimed correlation decay: |Cov| <= corr_bound_const * n**-(1+epsilon)."""

    n: int
    epsilon: float
    corr_bound_const: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        if self.corr_bound_const < 0:
            raise ConfigError(f"corr_bound_const must be >= 0, got {self.corr_bound_const}")

    @property
    def corr_bound(self) -> float:
        if math.isinf(self.epsilon):
            return 0.0
        return self.corr_bound_const * float(self.n) ** (-(1.0 + self.epsilon))


@dataclass
class CorrelationReport:
    max_offpair_cov: float
    max_var_dev: float
    conforms: bool
    corr_bound: float
    var_bound: float
    cases: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "max_offpair_cov": self.max_offpair_cov,
            "max_var_dev": self.max_var_dev,
            "conforms": self.conforms,
            "corr_bound": self.corr_bound,
            "var_bound": self.var_bound,
            "cases": dict(self.cases),
        }


def _default_correlation_spec(spec: EnsembleSpec) -> CorrelationSpec:
    if spec.variant == IID_GAUSSIAN or spec.epsilon is None:
        eps = math.inf
    else:
        eps = spec.epsilon if spec.epsilon > 0 else math.inf
    return CorrelationSpec(spec.n, eps if eps > 0 else math.inf)

_EXHAUSTIVE_MAX_N = 40


def verify_correlation_spec(
    spec: EnsembleSpec,
    corr: CorrelationSpec | None = None,
    var_bound_const: float = 1.0,
) -> CorrelationReport:
    """Scan entry-pair covariances and check them against the claimed decay.

    For n <= 40 the scan is exhaustive over all pairs of entry pairs.  Above
    that, the Gaussian variants are exchangeable in the index set, so the
    finite list of index-intersection patterns is exhaustive by cases and is
    evaluated on representatives.

    conforms = (every off-pair |Cov| <= corr_bound_const * n**-(1+eps)) and
    (every |Var - 1| <= var_bound_const / (log n)^2).
    """
    if corr is None:
        corr = _default_correlation_spec(spec)
    n = spec.n
    var_bound = math.inf if n < 2 else var_bound_const / math.log(n) ** 2

    max_off = 0.0
    max_var = 0.0
    cases: dict = {}

    if n <= _EXHAUSTIVE_MAX_N or spec.variant == LINEAR_ENSEMBLE:
        cov = entry_cov_fn(spec)
        pairs = _upper_pairs(n)
        for a in range(len(pairs)):
            for b in range(a, len(pairs)):
                c = cov(pairs[a], pairs[b])
                if a == b:
                    max_var = max(max_var, abs(c - 1.0))
                else:
                    max_off = max(max_off, abs(c))
        cases["scan"] = "exhaustive"
    else:
        if spec.variant not in GAUSSIAN_VARIANTS:
            raise ConfigError(f"structured scan unsupported for variant {spec.variant}")
        if n < 5:
            raise ConfigError("structured scan needs n >= 5")
        cov = entry_cov_fn(spec)
        off_patterns = {
            "off_off_share0": ((0, 1), (2, 3)),
            "off_off_share1": ((0, 1), (0, 2)),
            "diag_off_share0": ((0, 0), (1, 2)),
            "diag_off_share1": ((0, 0), (0, 1)),
            "diag_diag_distinct": ((0, 0), (1, 1)),
        }
        var_patterns = {"var_off": (0, 1), "var_diag": (0, 0)}
        for name, (p, q) in off_patterns.items():
            c = cov(p, q)
            cases[name] = c
            max_off = max(max_off, abs(c))
        for name, p in var_patterns.items():
            c = cov(p, p)
            cases[name] = c
            max_var = max(max_var, abs(c - 1.0))
        cases["scan"] = "by-case"

    slack = 1.0 + 1e-12
    conforms = (max_off <= corr.corr_bound * slack + 1e-300) and (max_var <= var_bound * slack)
    return CorrelationReport(
        max_offpair_cov=max_off,
        max_var_dev=max_var,
        conforms=bool(conforms),
        corr_bound=corr.corr_bound,
        var_bound=var_bound,
        cases=cases,
    )
