"""Eigenvalues, empirical spectral distributions, and edge statistics.

Spectra are computed by a backward-stable dense symmetric eigensolve up to
n = 4096.  Above that, ``largest_eigenvalue`` switches to an iterative
extremal solver and the full spectrum is refused (desk-scale scope).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg

from .budget import ConfigError

__all__ = [
    "Spectrum",
    "EsdReport",
    "eigen_sym",
    "largest_eigenvalue",
    "semicircle_cdf",
    "semicircle_density",
    "esd_compare",
    "edge_concentration",
    "DENSE_EIG_MAX_N",
]

DENSE_EIG_MAX_N = 4096


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted descending; n = len(eigenvalues)."""

    n: int
    eigenvalues: np.ndarray

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=np.float64)
        if ev.ndim != 1 or len(ev) != self.n:
            raise ConfigError(f"expected {self.n} eigenvalues, got shape {ev.shape}")
        if np.any(np.diff(ev) > 0):
            raise ConfigError("eigenvalues must be sorted descending")
        object.__setattr__(self, "eigenvalues", ev)


@dataclass
class EsdReport:
    """Kolmogorov-Smirnov distance to the semicircle law plus a histogram.

    ``histogram`` is a list of (bin_left, bin_right, count) with overflow
    bins at both ends (bin_left = -inf / bin_right = +inf), so counts always
    sum to n and bins tile the whole line.
    """

    ks_distance: float
    histogram: list[tuple[float, float, int]]
    n: int

    def to_json(self) -> dict:
        return {
            "ks_distance": self.ks_distance,
            "n": self.n,
            "histogram": [
                {"bin_left": l, "bin_right": r, "count": c} for (l, r, c) in self.histogram
            ],
        }


def _check_matrix(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ConfigError("matrix has non-finite entries")
    return m


def eigen_sym(m: np.ndarray, normalize: bool = False) -> Spectrum:
    """Full spectrum of m (or of n**-0.5 * m when normalize), sorted descending."""
    m = _check_matrix(m)
    n = m.shape[0]
    if n > DENSE_EIG_MAX_N:
        raise ConfigError(
            f"full spectrum refused for n={n} > {DENSE_EIG_MAX_N}; "
            "use largest_eigenvalue for the extremal value"
        )
    ev = np.linalg.eigvalsh(m)[::-1]
    if normalize:
        ev = ev / math.sqrt(n)
    return Spectrum(n=n, eigenvalues=ev)


def largest_eigenvalue(m: np.ndarray, normalize: bool = False) -> float:
    """Top eigenvalue (algebraically largest), dense up to 4096, else Lanczos."""
    m = _check_matrix(m)
    n = m.shape[0]
    if n <= DENSE_EIG_MAX_N:
        if n == 1:
            top = float(m[0, 0])
        else:
            top = float(np.linalg.eigvalsh(m)[-1])
    else:
        vals = scipy.sparse.linalg.eigsh(m, k=1, which="LA", return_eigenvectors=False,
                                         tol=1e-12)
        top = float(vals[0])
    return top / math.sqrt(n) if normalize else top


def semicircle_density(x):
    """Density (2 pi)^-1 sqrt(4 - x^2) on [-2, 2]."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    inside = np.abs(x) < 2.0
    out[inside] = np.sqrt(4.0 - x[inside] ** 2) / (2.0 * np.pi)
    return out


def semicircle_cdf(x):
    """Semicircle CDF: 1/2 + x sqrt(4 - x^2) / (4 pi) + arcsin(x/2) / pi on [-2, 2]."""
    scalar = np.isscalar(x)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    xc = np.clip(x, -2.0, 2.0)
    out = 0.5 + xc * np.sqrt(4.0 - xc ** 2) / (4.0 * np.pi) + np.arcsin(xc / 2.0) / np.pi
    out = np.clip(out, 0.0, 1.0)
    out[x <= -2.0] = 0.0
    out[x >= 2.0] = 1.0
    return float(out[0]) if scalar else out


def esd_compare(spectrum: Spectrum, bins: int = 50, lo: float = -2.5, hi: float = 2.5) -> EsdReport:
    """Compare a (normalized) spectrum against the semicircle law.

    The KS statistic is evaluated exactly at the eigenvalue jump points
    (both one-sided limits), not on a grid.
    """
    ev = np.sort(spectrum.eigenvalues)
    n = spectrum.n
    f = semicircle_cdf(ev)
    i = np.arange(1, n + 1)
    ks = float(np.max(np.maximum(f - (i - 1) / n, i / n - f)))

    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(ev, bins=edges)
    under = int(np.sum(ev < lo))
    over = int(np.sum(ev >= hi))
    hist = [(-math.inf, float(edges[0]), under)]
    hist += [(float(edges[k]), float(edges[k + 1]), int(counts[k])) for k in range(bins)]
    # np.histogram puts values == hi in the last bin; fold them into overflow
    on_edge = int(np.sum(ev == hi))
    if on_edge:
        l, r, c = hist[-1]
        hist[-1] = (l, r, c - on_edge)
    hist.append((float(edges[-1]), math.inf, over))
    assert sum(c for (_, _, c) in hist) == n
    return EsdReport(ks_distance=ks, histogram=hist, n=n)


def edge_concentration(samples, interval: tuple[float, float]) -> float:
    """Fraction of samples inside the closed interval."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise ConfigError("edge_concentration needs at least one sample")
    lo, hi = interval
    return float(np.mean((samples >= lo) & (samples <= hi)))
