import numpy as np
import pytest

from daccox import (
    ScenarioConfig,
    fit_dac,
    fit_full_adaptive_lasso_oracle,
    fit_full_penalized_pl,
    generate,
    oracle_se,
)
from daccox.inference import PathConfig, bic_v


@pytest.fixture(scope="module")
def data():
    return generate(ScenarioConfig("I", 8000, 0.2, seed=11, p=15))


def test_oracle_se_closed_form():
    info = np.diag([0.25, 1.0, 4.0])
    se, lo, hi = oracle_se(info, [0, 2], n0=10000, beta_hat=np.array([0.5, 0.0, -0.1]))
    np.testing.assert_allclose(se, [0.02, 0.005])
    np.testing.assert_allclose(hi - lo, 2 * 1.959963984540054 * se)
    assert lo[0] == pytest.approx(0.5 - 1.959963984540054 * 0.02)
    se_only, none_lo, none_hi = oracle_se(info, [1], n0=100)
    assert se_only[0] == pytest.approx(0.1) and none_lo is None and none_hi is None


def test_oracle_se_uses_active_block_inverse():
    info = np.array([[2.0, 0.5, 0.3], [0.5, 1.0, 0.2], [0.3, 0.2, 1.5]])
    se, _, _ = oracle_se(info, [0, 2], n0=1)
    expected = np.sqrt(np.diag(np.linalg.inv(info[np.ix_([0, 2], [0, 2])])))
    np.testing.assert_allclose(se, expected, rtol=1e-14)
    with pytest.raises(ValueError):
        oracle_se(info, [], n0=1)


def test_single_shard_dac_equals_full_lin(data):
    a = fit_dac(data, k_shards=1, n_iter=2)
    b = fit_full_adaptive_lasso_oracle(data)
    np.testing.assert_allclose(a.beta_tilde, b.beta_tilde, atol=1e-8)
    np.testing.assert_allclose(a.beta_hat, b.beta_hat, atol=1e-8)
    assert np.array_equal(a.active_set, b.active_set)


def test_dac_fit_structure(data):
    fit = fit_dac(data, k_shards=10, n_iter=2, seed=1)
    assert fit.estimator == "dac" and fit.n0 == data.n_subjects and fit.d0 == data.d0
    assert len(fit.iterate_history) == 3
    assert fit.se.shape == fit.active_set.shape == fit.ci_lower.shape
    assert np.all(fit.ci_lower < fit.beta_hat[fit.active_set])
    for key in ("split", "step_i", "step_ii", "step_iii", "tuning", "total"):
        assert key in fit.timings
    d = fit.to_dict()
    assert d["p"] == 15 and d["path"]["selected_index"] == fit.path.selected_index


def test_lambda_zero_endpoint_recovers_unpenalized(data):
    fit = fit_dac(data, k_shards=4, n_iter=2, path_config=PathConfig(n_lambda=60, lambda_min_ratio=1e-9))
    np.testing.assert_allclose(fit.path.betas[-1], fit.beta_tilde, atol=1e-6)


def test_se_shrinks_with_sample_size():
    ratios = []
    small = fit_dac(generate(ScenarioConfig("I", 10000, 0.2, seed=1, p=10)), 5, 2)
    large = fit_dac(generate(ScenarioConfig("I", 20000, 0.2, seed=2, p=10)), 5, 2)
    for j in range(3):
        a = small.se[list(small.active_set).index(j)]
        b = large.se[list(large.active_set).index(j)]
        ratios.append(b / a)
    assert np.mean(ratios) == pytest.approx(1 / np.sqrt(2), rel=0.15)


def test_exact_penalized_pl_agrees_with_lsa():
    data = generate(ScenarioConfig("I", 5000, 0.2, seed=12, p=10))
    exact = fit_full_penalized_pl(data, path_config=PathConfig(n_lambda=30))
    lin = fit_full_adaptive_lasso_oracle(data, path_config=PathConfig(n_lambda=30))
    assert exact.estimator == "full"
    assert set(exact.active_set) == set(lin.active_set) == set(range(9))
    assert np.max(np.abs(exact.beta_hat - lin.beta_hat)) < 0.02
    assert exact.path.bics[exact.path.selected_index] == bic_v(data, exact.beta_hat)


def test_gamma_and_alpha_passed_through(data):
    fit = fit_dac(data, 5, 2, gamma=2.0, alpha=0.1)
    assert fit.alpha == 0.1
    np.testing.assert_allclose(fit.path.betas.shape[1], 15)
    with pytest.raises(ValueError):
        fit_dac(data, 5, 2, gamma=-1.0)
