import math

import numpy as np
import pytest
from scipy import integrate

from corrspec import ensembles as ens
from corrspec import spectral as sp
from corrspec.budget import ConfigError
from corrspec.rng import stream


def test_eigen_sym_identity():
    s = sp.eigen_sym(np.eye(3))
    assert np.allclose(s.eigenvalues, [1, 1, 1])


def test_eigen_sym_swap_matrix():
    s = sp.eigen_sym(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(s.eigenvalues, [1.0, -1.0])


def test_eigen_sym_all_ones_rank_one():
    s = sp.eigen_sym(np.ones((4, 4)))
    assert np.allclose(s.eigenvalues, [4.0, 0.0, 0.0, 0.0], atol=1e-12)


def test_largest_eigenvalue_zero_matrix():
    assert sp.largest_eigenvalue(np.zeros((5, 5))) == 0.0


def test_largest_matches_full_spectrum():
    g = stream(1, "spec", 0)
    m = ens.mirror_upper(g.standard_normal((1, 40, 40)))[0]
    assert sp.largest_eigenvalue(m) == pytest.approx(sp.eigen_sym(m).eigenvalues[0], rel=1e-12)
    assert sp.largest_eigenvalue(m, normalize=True) == pytest.approx(
        sp.eigen_sym(m, normalize=True).eigenvalues[0], rel=1e-12
    )


def test_non_finite_rejected():
    m = np.zeros((3, 3))
    m[0, 1] = m[1, 0] = np.nan
    with pytest.raises(ConfigError):
        sp.eigen_sym(m)


def test_full_spectrum_refused_above_dense_cap():
    m = np.zeros((sp.DENSE_EIG_MAX_N + 1, sp.DENSE_EIG_MAX_N + 1))
    with pytest.raises(ConfigError, match="refused"):
        sp.eigen_sym(m)


def test_largest_eigenvalue_iterative_path():
    n = sp.DENSE_EIG_MAX_N + 10
    m = np.zeros((n, n))
    m[0, 0] = 3.0
    m[1, 1] = -5.0  # algebraically largest is 3, not the largest magnitude
    assert sp.largest_eigenvalue(m) == pytest.approx(3.0, abs=1e-8)


# Semicircle CDF -------------------------------------------------------------------


def test_semicircle_cdf_endpoints_and_center():
    assert sp.semicircle_cdf(-2.0) == 0.0
    assert sp.semicircle_cdf(2.0) == 1.0
    assert sp.semicircle_cdf(-5.0) == 0.0
    assert sp.semicircle_cdf(7.0) == 1.0
    assert sp.semicircle_cdf(0.0) == pytest.approx(0.5, abs=1e-15)


def test_semicircle_cdf_against_quadrature():
    # independent oracle: adaptive quadrature of the density
    for x in [-1.7, -1.0, -0.3, 0.4, 1.0, 1.9]:
        got = sp.semicircle_cdf(x)
        want, err = integrate.quad(lambda t: math.sqrt(4 - t * t) / (2 * math.pi), -2.0, x,
                                   epsabs=1e-13, epsrel=1e-13)
        assert err < 1e-11
        assert got == pytest.approx(want, abs=1e-10)


def test_semicircle_cdf_symmetry_and_monotonicity():
    xs = np.linspace(-2.5, 2.5, 1001)
    f = sp.semicircle_cdf(xs)
    assert np.all(np.diff(f) >= -1e-15)
    assert np.allclose(f + sp.semicircle_cdf(-xs), 1.0, atol=1e-14)


# ESD comparison -------------------------------------------------------------------


def test_esd_of_semicircle_quantiles_is_tight():
    n = 400
    # n equally spaced quantiles of the semicircle law
    grid = np.linspace(-2, 2, 200_001)
    cdf = sp.semicircle_cdf(grid)
    probs = (np.arange(1, n + 1) - 0.5) / n
    quantiles = np.interp(probs, cdf, grid)
    spec = sp.Spectrum(n=n, eigenvalues=np.sort(quantiles)[::-1])
    rep = sp.esd_compare(spec)
    assert rep.ks_distance <= 1.0 / n + 1e-3


def test_esd_single_atom_at_zero():
    rep = sp.esd_compare(sp.Spectrum(n=1, eigenvalues=np.array([0.0])))
    assert rep.ks_distance == pytest.approx(0.5, abs=1e-15)


def test_esd_histogram_counts_sum_and_overflow():
    ev = np.array([-3.0, -1.0, 0.0, 1.0, 5.0])
    rep = sp.esd_compare(sp.Spectrum(n=5, eigenvalues=np.sort(ev)[::-1]), bins=10)
    assert sum(c for (_, _, c) in rep.histogram) == 5
    assert rep.histogram[0][2] == 1   # -3 underflows
    assert rep.histogram[-1][2] == 1  # 5 overflows
    assert rep.histogram[0][0] == -math.inf
    assert rep.histogram[-1][1] == math.inf


# Identities on sampled matrices ---------------------------------------------------


def test_trace_and_frobenius_identities():
    g = stream(12, "ids", 0)
    for spec in [ens.iid_gaussian(30), ens.test_model(30, 0.5, "Rademacher")]:
        m = ens.sample(spec, g)
        ev = sp.eigen_sym(m).eigenvalues
        assert np.sum(ev) == pytest.approx(np.trace(m), rel=1e-8, abs=1e-8)
        assert np.sum(ev ** 2) == pytest.approx(np.sum(m * m), rel=1e-8)


def test_weyl_rank_one_shift_bound():
    g = stream(13, "weyl", 0)
    n = 25
    m = ens.sample(ens.iid_gaussian(n), g)
    base = sp.largest_eigenvalue(m)
    for s in [0.0, 0.5, 2.0, 10.0]:
        shifted = sp.largest_eigenvalue(m + s * np.ones((n, n)) / n)
        assert shifted >= base - 1e-10
        assert shifted - base <= s + 1e-10


# Edge concentration ---------------------------------------------------------------


def test_edge_concentration_all_inside():
    assert sp.edge_concentration([2.0, 2.0, 2.0], (1.968, 2.032)) == 1.0


def test_edge_concentration_fraction():
    assert sp.edge_concentration([1.0, 2.0, 3.0, 2.01], (1.968, 2.032)) == 0.5


def test_edge_concentration_empty_rejected():
    with pytest.raises(ConfigError):
        sp.edge_concentration([], (0.0, 1.0))
