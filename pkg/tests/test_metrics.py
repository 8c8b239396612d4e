import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.random import default_rng

from signcca.cov_models import block_ar_cov, build_model_i
from signcca.exceptions import MetricUndefinedError
from signcca.metrics import (
    cos2_angle,
    degenerate_report,
    evaluate_fit,
    oos_correlation,
    predictive_loss,
    selection_rates,
)
from signcca.types import CovBlocks


@pytest.fixture(scope="module")
def model():
    sigma = block_ar_cov(20, 5, 0.8)
    return build_model_i(sigma, sigma, 0.9)


############################ oos_correlation ############################


def test_oos_at_truth_equals_leading_correlation(model):
    assert oos_correlation(model.w1_star, model.w2_star, model) == pytest.approx(
        0.9, abs=1e-12
    )


def test_oos_scale_invariance(model):
    base = oos_correlation(model.w1_star, model.w2_star, model)
    scaled = oos_correlation(3.7 * model.w1_star, model.w2_star, model)
    assert scaled == pytest.approx(base, abs=1e-14)


def test_oos_dense_formula_oracle(model):
    rng = default_rng(0)
    w1 = rng.standard_normal(20)
    w2 = rng.standard_normal(20)
    got = oos_correlation(w1, w2, model)
    expected = abs(w1 @ model.sigma12 @ w2) / np.sqrt(
        (w1 @ model.sigma1 @ w1) * (w2 @ model.sigma2 @ w2)
    )
    assert got == pytest.approx(expected, abs=1e-12)


def test_oos_never_exceeds_leading_correlation(model):
    rng = default_rng(1)
    for _ in range(200):
        w1 = rng.standard_normal(20)
        w2 = rng.standard_normal(20)
        assert oos_correlation(w1, w2, model) <= model.rho_star + 1e-10


def test_oos_accepts_covblocks(model):
    blocks = CovBlocks(
        s1=model.sigma1, s12=model.sigma12, s2=model.sigma2, estimator_tag="sample-cov"
    )
    assert oos_correlation(model.w1_star, model.w2_star, blocks) == pytest.approx(
        0.9, abs=1e-12
    )


def test_oos_zero_direction_rejected(model):
    with pytest.raises(MetricUndefinedError):
        oos_correlation(np.zeros(20), model.w2_star, model)


############################ predictive_loss ############################


def test_loss_zero_at_truth(model):
    assert predictive_loss(model.w1_star, model.w1_star, model.sigma1) == 0.0


def test_loss_one_when_sigma_orthogonal(model):
    # build a direction sigma-orthogonal to the truth
    rng = default_rng(2)
    v = rng.standard_normal(20)
    v -= model.w1_star * float(model.w1_star @ model.sigma1 @ v)
    assert abs(v @ model.sigma1 @ model.w1_star) < 1e-10
    assert predictive_loss(model.w1_star, v, model.sigma1) == pytest.approx(1.0, abs=1e-10)


def test_loss_dense_formula_oracle(model):
    rng = default_rng(3)
    w_hat = rng.standard_normal(20)
    got = predictive_loss(model.w1_star, w_hat, model.sigma1)
    expected = 1.0 - abs(w_hat @ model.sigma1 @ model.w1_star) / np.sqrt(
        w_hat @ model.sigma1 @ w_hat
    )
    assert got == pytest.approx(expected, abs=1e-12)


@given(st.integers(0, 10_000), st.floats(0.1, 100.0))
def test_loss_in_unit_interval_and_scale_invariant(seed, scale):
    sigma = block_ar_cov(15, 5, 0.7)
    m = build_model_i(sigma, sigma, 0.5)
    w_hat = default_rng(seed).standard_normal(15)
    loss = predictive_loss(m.w1_star, w_hat, sigma)
    assert 0.0 <= loss <= 1.0
    assert predictive_loss(m.w1_star, scale * w_hat, sigma) == pytest.approx(
        loss, abs=1e-10
    )


def test_loss_requires_normalized_truth(model):
    with pytest.raises(ValueError, match="w' sigma w = 1"):
        predictive_loss(2.0 * model.w1_star, model.w1_star, model.sigma1)


def test_loss_zero_estimate_rejected(model):
    with pytest.raises(MetricUndefinedError):
        predictive_loss(model.w1_star, np.zeros(20), model.sigma1)


############################ selection_rates ############################


def test_rates_perfect_selection():
    star = np.array([1.0, 0.0, 2.0, 0.0])
    assert selection_rates(star, star) == (0.0, 0.0)


def test_rates_zero_estimate_under_printed_formulas():
    star = np.array([1.0, 0.0, 2.0, 0.0])
    fpr, fnr = selection_rates(star, np.zeros(4))
    assert (fpr, fnr) == (1.0, 0.0)


def test_rates_partial_support_count_oracle():
    star = np.zeros(200)
    star[[0, 5, 10]] = 1.0
    hat = np.zeros(200)
    hat[[0, 5]] = 1.0
    fpr, fnr = selection_rates(star, hat)
    assert fpr == pytest.approx(1.0 / 3.0, abs=1e-15)
    assert fnr == 0.0


def test_rates_conventional_swaps_labels():
    star = np.array([1.0, 0.0, 0.0, 0.0])
    hat = np.array([0.0, 1.0, 0.0, 0.0])
    printed = selection_rates(star, hat, convention="printed")
    conventional = selection_rates(star, hat, convention="conventional")
    assert printed == (1.0, 1.0 / 3.0)
    assert conventional == (printed[1], printed[0])


def test_rates_need_mixed_truth():
    with pytest.raises(MetricUndefinedError):
        selection_rates(np.ones(4), np.ones(4))
    with pytest.raises(MetricUndefinedError):
        selection_rates(np.zeros(4), np.ones(4))


def test_rates_match_set_arithmetic_oracle():
    rng = default_rng(4)
    for _ in range(1000):
        p = int(rng.integers(3, 30))
        star = (rng.random(p) < 0.4).astype(float)
        if star.sum() in (0, p):
            continue
        hat = (rng.random(p) < 0.5).astype(float)
        fpr, fnr = selection_rates(star, hat)
        truth = {int(j) for j in np.flatnonzero(star)}
        guess = {int(j) for j in np.flatnonzero(hat)}
        zeros = set(range(p)) - truth
        assert fpr == pytest.approx(1 - len(guess & truth) / len(truth), abs=1e-12)
        assert fnr == pytest.approx(1 - len(zeros - guess) / len(zeros), abs=1e-12)


############################ cos2_angle ############################


def test_cos2_endpoints():
    v = np.array([1.0, 2.0, -1.0])
    assert cos2_angle(v, v) == pytest.approx(1.0, abs=1e-15)
    assert cos2_angle(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0
    assert cos2_angle(np.array([1.0, 1.0]), np.array([1.0, 0.0])) == pytest.approx(
        0.5, abs=1e-15
    )


def test_cos2_zero_vector_rejected():
    with pytest.raises(MetricUndefinedError):
        cos2_angle(np.zeros(3), np.ones(3))


############################ evaluate_fit / degenerate ############################


def test_evaluate_fit_at_truth(model):
    report = evaluate_fit(model.w1_star, model.w2_star, model)
    assert report.rho_hat == pytest.approx(0.9, abs=1e-12)
    assert report.abs_rho_gap == pytest.approx(0.0, abs=1e-12)
    assert report.loss1 == 0.0 and report.loss2 == 0.0
    assert report.fpr1 == 0.0 and report.fnr1 == 0.0
    assert report.cos2_angle1 == pytest.approx(1.0, abs=1e-12)


def test_degenerate_report_penalty_values(model):
    report = degenerate_report(model)
    assert report.rho_hat == 0.0
    assert report.abs_rho_gap == pytest.approx(0.9)
    assert report.loss1 == 1.0 and report.loss2 == 1.0
    assert report.fpr1 == 1.0 and report.fnr1 == 0.0
    assert report.cos2_angle1 == 0.0
