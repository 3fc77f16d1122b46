"""Gaussian product moments over pair partitions and exact trace moments.

For a centered jointly Gaussian vector, the expectation of a product of 2k
coordinates equals the sum over all (2k-1)!! perfect matchings of
{1, ..., 2k} of the product of pairwise covariances.  Feeding the closed
index walks of a trace power through this identity gives an exact,
desk-scale oracle for E Tr[(n**-0.5 X)**2k] under any queryable entry
covariance:

    E Tr[(n**-0.5 X)**2k]
      = n**-k * sum over closed tuples (i_1 .. i_2k) of
        E[X(i_1, i_2) X(i_2, i_3) ... X(i_2k, i_1)].

The oracle has two modes that cross-check each other: a naive sum over all
n**2k index tuples, and a reduced sum over canonical tuple classes (letters
numbered by first appearance) weighted by class sizes, valid because the
supported ensembles are exchangeable in the index set.  The reduction is
what extends the reach beyond tiny n; the naive mode exists to audit it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .budget import ConfigError, check_budget
from . import ensembles as _ens
from .ensembles import EnsembleSpec, is_jointly_gaussian

__all__ = [
    "PairPartition",
    "MomentResult",
    "MatchingCaseReport",
    "double_factorial_odd",
    "enumerate_pairings",
    "wick_expectation",
    "exact_trace_moment",
    "mc_trace_moment",
    "matching_case_audit",
]

_MAX_PAIRING_K = 8
_MC_BATCH = 4096

CovFn = Callable[[tuple[int, int], tuple[int, int]], float]


@dataclass(frozen=True)
class PairPartition:
    """A perfect matching of {1, ..., 2k} into k unordered pairs."""

    k: int
    pairs: tuple

    def validate(self) -> None:
        flat = sorted(x for p in self.pairs for x in p)
        if flat != list(range(1, 2 * self.k + 1)):
            raise ConfigError(f"pairs {self.pairs} do not cover 1..{2 * self.k}")


def double_factorial_odd(k: int) -> int:
    """(2k - 1)!! = number of pairings of 2k items."""
    out = 1
    for j in range(1, 2 * k, 2):
        out *= j
    return out


def _bell(m: int) -> int:
    """Bell number: canonical index-tuple classes of length m (cost estimate)."""
    row = [1]
    for _ in range(m):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def _pairings_of(items: tuple) -> Iterator[tuple]:
    """All pairings of the given items; deterministic order (smallest item
    first, partner increasing)."""
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for idx in range(len(rest)):
        pair = (first, rest[idx])
        for tail in _pairings_of(rest[:idx] + rest[idx + 1:]):
            yield (pair,) + tail


def enumerate_pairings(k: int) -> Iterator[PairPartition]:
    """Yield all (2k-1)!! pair partitions of {1, ..., 2k}; k <= 8."""
    if k < 0:
        raise ConfigError(f"k must be >= 0, got {k}")
    if k > _MAX_PAIRING_K:
        raise ConfigError(f"enumerate_pairings limited to k <= {_MAX_PAIRING_K}, got {k}")
    for pairs in _pairings_of(tuple(range(1, 2 * k + 1))):
        yield PairPartition(k=k, pairs=pairs)


# small position-pairing cache, 0-based, shared by the expectation loops
_pairings_cache: dict = {}


def _position_pairings(m: int) -> list:
    if m % 2 != 0:
        raise ConfigError(f"need an even number of factors, got {m}")
    if m not in _pairings_cache:
        if m // 2 > _MAX_PAIRING_K:
            raise ConfigError(f"too many factors ({m}) for pairing enumeration")
        _pairings_cache[m] = list(_pairings_of(tuple(range(m))))
    return _pairings_cache[m]


def _pairing_term(pairing, factors: Sequence, cov: CovFn) -> float:
    term = 1.0
    for a, b in pairing:
        term *= cov(factors[a], factors[b])
    return term


def wick_expectation(factors: Sequence, cov: CovFn) -> float:
    """E[prod of Gaussian entries] = sum over pairings of covariance products.

    ``factors`` is a sequence of (i, j) entry labels; an odd number of
    factors gives 0, an empty product gives 1.
    """
    m = len(factors)
    if m % 2 == 1:
        return 0.0
    if m == 0:
        return 1.0
    total = 0.0
    for pairing in _position_pairings(m):
        total += _pairing_term(pairing, factors, cov)
    return total


@dataclass
class MomentResult:
    n: int
    two_k: int
    value: float
    term_count: int
    method: str

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "two_k": self.two_k,
            "value": self.value,
            "term_count": self.term_count,
            "method": self.method,
        }


def _walk_factors(tup: Sequence) -> list:
    """Entry labels of the closed walk through the index tuple."""
    m = len(tup)
    return [(tup[j], tup[(j + 1) % m]) for j in range(m)]


def exact_trace_moment(spec: EnsembleSpec, two_k: int, method: str = "reduced") -> MomentResult:
    """Exact E Tr[(n**-0.5 X)**two_k] for the jointly Gaussian variants.

    method='reduced' sums over canonical index-tuple classes times class
    sizes (needs exchangeability, which all Gaussian variants here have);
    method='naive' sums over every tuple and exists to cross-check the
    reduction.
    """
    if two_k < 0 or two_k % 2 != 0:
        raise ConfigError(f"two_k must be a nonnegative even integer, got {two_k}")
    if not is_jointly_gaussian(spec):
        raise ConfigError(
            "exact trace moments need jointly Gaussian entries "
            f"(variant {spec.variant}, v_dist {spec.v_dist})"
        )
    n = spec.n
    if two_k == 0:
        return MomentResult(n=n, two_k=0, value=float(n), term_count=n, method=method)

    cov = _ens.entry_cov_fn(spec)
    k = two_k // 2
    npair = double_factorial_odd(k)
    scale = float(n) ** (-k)

    if method == "naive":
        cost = float(n) ** two_k * npair * k
        check_budget(cost, f"exact_trace_moment naive (n={n}, two_k={two_k})")
        total = 0.0
        terms = 0
        for tup in np.ndindex(*([n] * two_k)):
            factors = _walk_factors(tup)
            total += wick_expectation(factors, cov)
            terms += npair
        return MomentResult(n=n, two_k=two_k, value=scale * total, term_count=terms,
                            method="naive")

    if method != "reduced":
        raise ConfigError(f"method must be 'reduced' or 'naive', got {method!r}")

    # canonical classes: tuples whose letters appear in increasing order of
    # first appearance, weighted by the number of ways to choose the actual
    # distinct indices, n (n-1) ... (n-t+1)
    total = 0.0
    terms = 0
    check_budget(float(_bell(two_k)) * npair * k,
                 f"exact_trace_moment reduced (two_k={two_k})")

    def falling(n: int, t: int) -> int:
        out = 1
        for j in range(t):
            out *= n - j
        return out

    stack = [(0,)]
    while stack:
        tup = stack.pop()
        if len(tup) == two_k:
            t = max(tup) + 1
            size = falling(n, t)
            if size == 0:
                continue
            factors = _walk_factors(tup)
            total += size * wick_expectation(factors, cov)
            terms += size * npair
            continue
        t = max(tup) + 1
        for s in range(min(t + 1, n)):
            stack.append(tup + (s,))
    return MomentResult(n=n, two_k=two_k, value=scale * total, term_count=terms,
                        method="reduced")


def mc_trace_moment(spec: EnsembleSpec, two_k: int, reps: int,
                    stream: np.random.Generator) -> tuple[float, float]:
    """(mean, stderr) of Tr[(n**-0.5 X)**two_k] over ``reps`` sampled matrices.

    Draws are batched (fixed batch size, so results are reproducible given
    the stream) and traces are taken via symmetric eigensolves.
    """
    if two_k < 0 or two_k % 2 != 0:
        raise ConfigError(f"two_k must be a nonnegative even integer, got {two_k}")
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    n = spec.n
    if two_k == 0:
        return float(n), 0.0
    s = 0.0
    s2 = 0.0
    done = 0
    rootn = math.sqrt(n)
    while done < reps:
        b = min(_MC_BATCH, reps - done)
        mats = _ens.sample_batch(spec, b, stream)
        ev = np.linalg.eigvalsh(mats) / rootn
        tr = np.sum(ev ** two_k, axis=1)
        s += float(np.sum(tr))
        s2 += float(np.sum(tr * tr))
        done += b
    mean = s / reps
    var = max(s2 / reps - mean * mean, 0.0)
    stderr = math.sqrt(var / reps)
    return mean, stderr


@dataclass
class MatchingCaseReport:
    """Wick expansion of one closed walk bucketed by edge-class matchings.

    Each pairing of the walk's 2k matrix factors matches edges of the
    walk graph; every matched pair of factors lies in one of the six
    class combinations E1-E1, E1-E2, E1-E3, E2-E2, E2-E3, E3-E3.  Pairings
    are bucketed by their count vector over those six combinations, and the
    bucket totals decompose the full Wick expectation.
    """

    word: tuple
    buckets: dict        # signature tuple -> {"pairings": int, "value": float}
    grand_total: float
    e1: frozenset
    e2: frozenset
    e3: frozenset

    def to_json(self) -> dict:
        return {
            "word": list(self.word),
            "grand_total": self.grand_total,
            "buckets": [
                {
                    "cases": {name: cnt for name, cnt in zip(_CASE_NAMES, sig) if cnt},
                    "pairings": rec["pairings"],
                    "value": rec["value"],
                }
                for sig, rec in sorted(self.buckets.items())
            ],
        }


_CASE_NAMES = ("E1-E1", "E1-E2", "E1-E3", "E2-E2", "E2-E3", "E3-E3")
_CASE_INDEX = {("E1", "E1"): 0, ("E1", "E2"): 1, ("E1", "E3"): 2,
               ("E2", "E2"): 3, ("E2", "E3"): 4, ("E3", "E3"): 5}


def matching_case_audit(word, cov: CovFn) -> MatchingCaseReport:
    """Bucket the Wick expansion of a closed walk by edge-class matchings.

    ``word`` is a closed word over 1-based letters; matrix entries use
    0-based indices, so letter s maps to index s - 1.  The grand total is
    accumulated in plain enumeration order and therefore equals
    ``wick_expectation`` on the same factors exactly.
    """
    from . import words as _words

    w = tuple(int(s) for s in word)
    if len(w) < 1:
        raise ConfigError("need a nonempty word")
    if w[0] != w[-1]:
        raise ConfigError("matching_case_audit needs a closed word")

    counts = _words.sentence_passage_counts([w])
    e1, e2, e3 = _words.edge_classes(counts)

    def edge_class(a: int, b: int) -> str:
        e = (a, b) if a <= b else (b, a)
        if e in e1:
            return "E1"
        if e in e2:
            return "E2"
        return "E3"

    steps = list(zip(w, w[1:]))
    factors = [(a - 1, b - 1) for a, b in steps]
    classes = [edge_class(a, b) for a, b in steps]

    buckets: dict = {}
    grand = 0.0
    m = len(factors)
    if m % 2 == 1:
        return MatchingCaseReport(word=w, buckets={}, grand_total=0.0, e1=e1, e2=e2, e3=e3)
    if m == 0:
        return MatchingCaseReport(word=w, buckets={}, grand_total=1.0, e1=e1, e2=e2, e3=e3)

    for pairing in _position_pairings(m):
        term = _pairing_term(pairing, factors, cov)
        sig = [0] * 6
        for a, b in pairing:
            ca, cb = sorted((classes[a], classes[b]))
            sig[_CASE_INDEX[(ca, cb)]] += 1
        sig = tuple(sig)
        rec = buckets.setdefault(sig, {"pairings": 0, "value": 0.0})
        rec["pairings"] += 1
        rec["value"] += term
        grand += term
    return MatchingCaseReport(word=w, buckets=buckets, grand_total=grand, e1=e1, e2=e2, e3=e3)
