import math

import numpy as np
import pytest

from corrspec import ensembles as ens
from corrspec.budget import ConfigError
from corrspec.rng import stream


def upper_pairs(n):
    return [(i, j) for i in range(n) for j in range(i, n)]


# Exact covariance closed forms ---------------------------------------------------


def test_iid_cov_is_pair_indicator():
    spec = ens.iid_gaussian(5)
    assert ens.exact_entry_cov(spec, 0, 1, 0, 2) == 0.0
    assert ens.exact_entry_cov(spec, 0, 1, 1, 0) == 1.0
    assert ens.exact_entry_cov(spec, 2, 2, 2, 2) == 1.0


def test_test_model_cov_table():
    n, eps = 10, 0.5
    spec = ens.test_model(n, eps, "Rademacher")
    a2 = float(n) ** (-(1 + eps))
    assert ens.exact_entry_cov(spec, 0, 1, 2, 3) == pytest.approx(a2, rel=1e-15)
    assert ens.exact_entry_cov(spec, 0, 0, 1, 2) == pytest.approx(a2, rel=1e-15)
    assert ens.exact_entry_cov(spec, 0, 1, 0, 1) == pytest.approx(1 + a2, rel=1e-15)
    assert ens.exact_entry_cov(spec, 3, 3, 3, 3) == pytest.approx(1 + a2, rel=1e-15)


def test_three_param_cov_table_matches_intended_decay():
    n, eps, gamma = 100, 0.5, 0.9
    spec = ens.three_param(n, eps, gamma)
    # pairs sharing no index / one index
    assert ens.exact_entry_cov(spec, 0, 1, 2, 3) == pytest.approx(n ** -1.5, rel=1e-12)
    assert ens.exact_entry_cov(spec, 0, 1, 0, 2) == pytest.approx(n ** -0.9, rel=1e-12)
    # off-diagonal variance is exactly 1 by construction
    assert ens.exact_entry_cov(spec, 0, 1, 0, 1) == pytest.approx(1.0, rel=1e-12)
    # diagonal variance alpha^2 + 4 beta^2 + theta^2 = 1 + 2 beta^2
    a, b, t = spec.alpha, spec.beta, spec.theta
    assert ens.exact_entry_cov(spec, 2, 2, 2, 2) == pytest.approx(
        a * a + 4 * b * b + t * t, rel=1e-12
    )


def test_three_param_diagonal_cross_cases():
    spec = ens.three_param(8, 0.5, 0.8)
    a, b, _ = spec.alpha, spec.beta, spec.theta
    # (i,i) vs (i,j): the V-part matches twice
    assert ens.exact_entry_cov(spec, 0, 0, 0, 1) == pytest.approx(a * a + 2 * b * b, rel=1e-12)
    # (i,i) vs (j,j): no match
    assert ens.exact_entry_cov(spec, 0, 0, 1, 1) == pytest.approx(a * a, rel=1e-12)


def test_out_of_range_indices_rejected():
    spec = ens.iid_gaussian(3)
    with pytest.raises(ConfigError):
        ens.exact_entry_cov(spec, 0, 3, 0, 1)
    with pytest.raises(ConfigError):
        ens.exact_entry_cov(spec, -1, 0, 0, 1)


def test_three_param_invalid_theta_names_constraint():
    with pytest.raises(ConfigError, match="theta"):
        ens.three_param(2, 0.1, 0.05)


def test_three_param_gamma_bound():
    with pytest.raises(ConfigError, match="gamma"):
        ens.three_param(10, 0.5, 1.6)


@pytest.mark.parametrize(
    "spec",
    [
        ens.iid_gaussian(5),
        ens.test_model(5, 0.7, "Gaussian"),
        ens.three_param(5, 0.5, 0.8),
    ],
    ids=["iid", "test_model", "three_param"],
)
def test_vectorized_cov_matrix_matches_scalar(spec):
    n = spec.n
    for i in range(n):
        for i2 in range(n):
            m = ens.entry_cov_matrix(spec, i, i2)
            for j in range(n):
                for k in range(n):
                    want = ens.exact_entry_cov(spec, i, j, i2, k)
                    assert m[j, k] == pytest.approx(want, rel=1e-13, abs=1e-18)


# Sampling -------------------------------------------------------------------------


@pytest.mark.parametrize(
    "spec",
    [
        ens.iid_gaussian(7),
        ens.test_model(7, 0.5, "Rademacher"),
        ens.test_model(7, 0.0, "Gaussian"),
        ens.three_param(7, 0.5, 0.8),
    ],
    ids=["iid", "test_rad", "test_gauss_eps0", "three_param"],
)
def test_samples_symmetric_and_deterministic(spec):
    x = ens.sample(spec, stream(11, "det", 0))
    y = ens.sample(spec, stream(11, "det", 0))
    z = ens.sample(spec, stream(11, "det", 1))
    assert np.array_equal(x, x.T)
    assert np.array_equal(x, y)
    assert not np.array_equal(x, z)


def test_sample_is_the_size_one_batch():
    spec = ens.three_param(5, 0.5, 0.8)
    batch1 = ens.sample_batch(spec, 1, stream(3, "b", 0))
    single = ens.sample(spec, stream(3, "b", 0))
    assert np.array_equal(batch1[0], single)


def test_test_model_draw_order_reconstruction():
    # regression-locks the documented draw order: the n x n noise block,
    # then V; at n=2, eps=1 the spike scale is exactly 1/2
    n, eps = 2, 1.0
    spec = ens.test_model(n, eps, "Rademacher")
    x = ens.sample(spec, stream(21, "order", 0))
    g = stream(21, "order", 0)
    w = ens.mirror_upper(g.standard_normal((1, n, n)))[0]
    v = float(g.integers(0, 2, size=1)[0] * 2 - 1)
    assert spec.alpha == 0.5
    assert np.array_equal(x, w + 0.5 * v)


def test_iid_n1_moments():
    spec = ens.iid_gaussian(1)
    draws = ens.sample_batch(spec, 100_000, stream(5, "n1", 0))[:, 0, 0]
    assert abs(draws.mean()) < 0.02
    assert abs(draws.var() - 1.0) < 0.02


def _mc_cov_check(spec, pairs, m_draws, seed, batch=20_000):
    """Monte Carlo covariance of chosen entry pairs vs the analytic table."""
    g = stream(seed, "mccov", 0)
    prods = np.zeros((len(pairs), len(pairs)))
    done = 0
    while done < m_draws:
        b = min(batch, m_draws - done)
        x = ens.sample_batch(spec, b, g)
        vals = np.stack([x[:, i, j] for (i, j) in pairs], axis=1)
        prods += vals.T @ vals
        done += b
    emp = prods / m_draws
    for a, pa in enumerate(pairs):
        for c, pc in enumerate(pairs):
            want = ens.exact_entry_cov(spec, pa[0], pa[1], pc[0], pc[1])
            va = ens.exact_entry_cov(spec, pa[0], pa[1], pa[0], pa[1])
            vc = ens.exact_entry_cov(spec, pc[0], pc[1], pc[0], pc[1])
            second_moment = va * vc + want * want
            tol = 5.0 * math.sqrt(second_moment / m_draws)
            assert abs(emp[a, c] - want) < tol, (pa, pc, emp[a, c], want, tol)


@pytest.mark.parametrize(
    "spec",
    [
        ens.iid_gaussian(12),
        ens.test_model(12, 0.5, "Rademacher"),
        ens.three_param(12, 0.5, 0.8),
    ],
    ids=["iid", "test_model", "three_param"],
)
def test_sampler_covariance_agreement(spec):
    pairs = [(0, 0), (0, 1), (0, 2), (1, 2), (3, 4), (2, 2), (5, 11), (10, 11), (0, 11), (7, 7)]
    _mc_cov_check(spec, pairs, 200_000, seed=40)


def test_dense_cholesky_oracle_agrees_with_generative_sampler():
    # the full-covariance sampler is an independent path; both its and the
    # generative sampler's Monte Carlo covariances must match the table
    spec = ens.test_model(5, 0.5, "Gaussian")
    pairs = [(0, 0), (0, 1), (1, 2), (3, 4), (2, 2)]
    m = 40_000
    g = stream(17, "chol", 0)
    vals = np.empty((m, len(pairs)))
    for k in range(m):
        x = ens.sample_dense_cov(spec, g)
        vals[k] = [x[i, j] for (i, j) in pairs]
    emp = vals.T @ vals / m
    for a, pa in enumerate(pairs):
        for c, pc in enumerate(pairs):
            want = ens.exact_entry_cov(spec, *pa, *pc)
            va = ens.exact_entry_cov(spec, *pa, *pa)
            vc = ens.exact_entry_cov(spec, *pc, *pc)
            tol = 5.0 * math.sqrt((va * vc + want * want) / m)
            assert abs(emp[a, c] - want) < tol


def test_dense_cov_psd_for_all_variants():
    # Cholesky succeeding certifies the analytic tables are genuine
    # covariance matrices
    for spec in [ens.iid_gaussian(6), ens.test_model(6, 0.3, "Rademacher"),
                 ens.three_param(6, 0.5, 0.8)]:
        x = ens.sample_dense_cov(spec, stream(1, "psd", 0))
        assert np.array_equal(x, x.T)


def test_dense_cov_size_guard():
    with pytest.raises(ConfigError):
        ens.sample_dense_cov(ens.iid_gaussian(61), stream(0, "x", 0))


# Conformance reports --------------------------------------------------------------


def test_verify_test_model_conforms():
    rep = ens.verify_correlation_spec(ens.test_model(100, 0.5, "Rademacher"))
    assert rep.conforms
    assert rep.max_offpair_cov == pytest.approx(100 ** -1.5, rel=1e-12)


def test_verify_three_param_reports_gamma_case():
    n, eps, gamma = 100, 0.5, 0.9
    rep = ens.verify_correlation_spec(ens.three_param(n, eps, gamma))
    # the overall max comes from ((i,i),(i,j)) pairs at alpha^2 + 2 beta^2
    # = 2 n**-gamma - n**-(1+eps); the off-diagonal share-one case is
    # exactly n**-gamma (the intended gamma decay, reported separately)
    assert rep.max_offpair_cov == pytest.approx(2 * n ** -gamma - n ** -(1 + eps), rel=1e-12)
    assert not rep.conforms
    assert rep.cases["off_off_share1"] == pytest.approx(n ** -gamma, rel=1e-12)
    assert rep.cases["off_off_share0"] == pytest.approx(n ** -(1 + eps), rel=1e-12)
    assert rep.cases["diag_off_share1"] == pytest.approx(rep.max_offpair_cov, rel=1e-12)


def test_verify_iid_conforms_with_zero_covariance():
    rep = ens.verify_correlation_spec(ens.iid_gaussian(50))
    assert rep.conforms
    assert rep.max_offpair_cov == 0.0
    assert rep.max_var_dev == 0.0


def test_exhaustive_scan_matches_by_case_scan():
    spec = ens.test_model(30, 0.5, "Rademacher")
    exhaustive = ens.verify_correlation_spec(spec)
    big = ens.test_model(50, 0.5, "Rademacher")
    by_case = ens.verify_correlation_spec(big)
    assert exhaustive.cases["scan"] == "exhaustive"
    assert by_case.cases["scan"] == "by-case"
    # both models have max off-pair covariance alpha^2
    assert exhaustive.max_offpair_cov == pytest.approx(30 ** -1.5, rel=1e-12)
    assert by_case.max_offpair_cov == pytest.approx(50 ** -1.5, rel=1e-12)


# JSON round trip ------------------------------------------------------------------


def test_spec_json_round_trip():
    specs = [
        ens.iid_gaussian(4),
        ens.test_model(1000, 0.0, "Gaussian"),
        ens.three_param(400, 0.5, 0.8),
    ]
    for spec in specs:
        assert ens.EnsembleSpec.from_json(spec.to_json()) == spec


def test_spec_json_rejects_unknown_fields():
    with pytest.raises(ConfigError):
        ens.EnsembleSpec.from_json({"variant": "IidGaussian", "n": 3, "bogus": 1})
