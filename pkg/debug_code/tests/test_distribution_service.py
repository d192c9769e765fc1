import math

import numpy as np
import pytest

from models.distributions import BivariateLognormalSpec, LognormalSpec, MomentPair
from models.errors import DegenerateVariance, InvalidCovariance, InvalidMoments
from services.distribution_service import (
    coefficient_of_variation,
    lognormal_cdf,
    lognormal_moments,
    match_lognormal,
    moments_from_samples,
    sample_assets,
    sigma_sq_for_cv,
)


def test_asset_level_parametrisation():
    spec = BivariateLognormalSpec.from_asset_level(1.0, 1.0)
    assert spec.mu1 == spec.mu2 == -0.5
    scaled = BivariateLognormalSpec.from_asset_level(2.0, 0.5)
    assert scaled.mu1 == pytest.approx(-0.25 + math.log(2.0))


def test_invalid_covariance_is_rejected():
    with pytest.raises(InvalidCovariance):
        BivariateLognormalSpec(0, 0, 1.0, 1.0, sig12=1.5)
    with pytest.raises(InvalidCovariance):
        BivariateLognormalSpec(0, 0, 0.0, 1.0)


def test_invalid_moments_are_rejected():
    with pytest.raises(InvalidMoments):
        MomentPair(mean=1.0, variance=0.0)
    with pytest.raises(InvalidMoments):
        MomentPair(mean=-1.0, variance=1.0)
    with pytest.raises(InvalidMoments):
        LognormalSpec(0.0, 1.0, shift=-1.0)


@pytest.mark.slow
def test_sample_moments_converge(standard_spec):
    n = 1_000_000
    sample = sample_assets(standard_spec, n, seed=7)
    variance = math.e - 1
    se_mean = math.sqrt(variance / n)
    assert abs(sample.a1.mean() - 1.0) <= 4 * se_mean
    assert abs(sample.a2.mean() - 1.0) <= 4 * se_mean
    # Fourth central moment of LN(-0.5, 1) drives the SE of the sample variance
    kurtosis = math.exp(4) + 2 * math.exp(3) + 3 * math.exp(2) - 3
    se_var = variance * math.sqrt((kurtosis - 1) / n)
    assert abs(sample.a1.var(ddof=1) - variance) <= 6 * se_var


def test_independent_assets_are_uncorrelated(standard_spec):
    n = 200_000
    sample = sample_assets(standard_spec, n, seed=3)
    corr = np.corrcoef(np.log(sample.a1), np.log(sample.a2))[0, 1]
    assert abs(corr) <= 4 / math.sqrt(n)


def test_correlated_log_assets():
    spec = BivariateLognormalSpec(0.0, 0.0, 1.0, 4.0, sig12=1.2)
    sample = sample_assets(spec, 200_000, seed=5)
    cov = np.cov(np.log(sample.a1), np.log(sample.a2))
    np.testing.assert_allclose(cov, [[1.0, 1.2], [1.2, 4.0]], atol=0.05)


def test_sampling_is_deterministic(standard_spec):
    first = sample_assets(standard_spec, 1000, seed=11)
    second = sample_assets(standard_spec, 1000, seed=11)
    np.testing.assert_array_equal(first.a1, second.a1)
    np.testing.assert_array_equal(first.a2, second.a2)
    other = sample_assets(standard_spec, 1000, seed=12)
    assert not np.array_equal(first.a1, other.a1)


def test_sampling_does_not_depend_on_worker_count(standard_spec):
    single = sample_assets(standard_spec, 10_001, seed=4, stream_size=1000, workers=1)
    pooled = sample_assets(standard_spec, 10_001, seed=4, stream_size=1000, workers=4)
    np.testing.assert_array_equal(single.a1, pooled.a1)
    np.testing.assert_array_equal(single.a2, pooled.a2)
    assert len(pooled) == 10_001


def test_sample_prefix_is_stable_across_sizes(standard_spec):
    short = sample_assets(standard_spec, 500, seed=9, stream_size=1000)
    long = sample_assets(standard_spec, 2500, seed=9, stream_size=1000)
    np.testing.assert_array_equal(short.a1, long.a1[:500])


def test_sampling_rejects_empty_request(standard_spec):
    with pytest.raises(ValueError):
        sample_assets(standard_spec, 0, seed=1)


def test_match_lognormal_inverts_standard_moments():
    spec = match_lognormal(MomentPair(mean=1.0, variance=math.e - 1))
    assert spec.mu_tilde == pytest.approx(-0.5, abs=1e-12)
    assert spec.sig_tilde_sq == pytest.approx(1.0, abs=1e-12)
    assert spec.shift == 0.0


def test_match_lognormal_for_shifted_debt_limit_moments():
    spec = match_lognormal(MomentPair(mean=2.0, variance=math.e - 1))
    assert spec.sig_tilde_sq == pytest.approx(math.log((math.e - 1) / 4 + 1), rel=1e-12)
    assert spec.sig_tilde_sq == pytest.approx(0.357374, abs=1e-6)


def test_match_lognormal_round_trip(rng):
    means = np.exp(rng.uniform(-5, 5, size=10_000))
    cvs = np.exp(rng.uniform(-4, 3, size=10_000))
    for mean, cv in zip(means, cvs):
        moments = MomentPair(mean=float(mean), variance=float((cv * mean) ** 2))
        back = lognormal_moments(match_lognormal(moments))
        assert back.mean == pytest.approx(moments.mean, rel=1e-10)
        assert back.variance == pytest.approx(moments.variance, rel=1e-10)


def test_lognormal_cdf_examples():
    assert lognormal_cdf(LognormalSpec(-0.5, 1.0), 1.0) == pytest.approx(0.6914624612740131, abs=1e-12)
    assert lognormal_cdf(LognormalSpec(0.0, 1.0), 1.0) == pytest.approx(0.5, abs=1e-15)
    shifted = LognormalSpec(0.3, 2.0, shift=1.5)
    assert lognormal_cdf(shifted, 1.5) == 0.0
    assert lognormal_cdf(shifted, 0.2) == 0.0


def test_lognormal_cdf_is_monotone_with_limits():
    spec = LognormalSpec(0.2, 0.7, shift=0.5)
    q = np.linspace(0.0, 200.0, 5001)
    values = lognormal_cdf(spec, q)
    assert np.all(np.diff(values) >= 0)
    assert values[0] == 0.0
    assert values[-1] == pytest.approx(1.0, abs=1e-9)


def test_moments_from_samples_use_unbiased_variance():
    m = moments_from_samples(np.array([1.0, 2.0, 3.0, 4.0]))
    assert m.mean == 2.5
    assert m.variance == pytest.approx(5.0 / 3.0)


@pytest.mark.parametrize("values", [np.array([1.0]), np.array([2.0, 2.0, 2.0])])
def test_degenerate_samples_raise(values):
    with pytest.raises(DegenerateVariance):
        moments_from_samples(values)


@pytest.mark.parametrize("sigma_sq, cv", [(0.00995, 0.1), (0.22314, 0.5), (0.69315, 1.0), (4.61512, 10.0)])
def test_coefficient_of_variation_labels_the_grid(sigma_sq, cv):
    assert coefficient_of_variation(sigma_sq) == pytest.approx(cv, rel=1e-3)
    assert sigma_sq_for_cv(cv) == pytest.approx(sigma_sq, abs=1e-5)


def test_sample_is_a_sequence_of_scenarios(standard_spec):
    sample = sample_assets(standard_spec, 5, seed=2)
    scenarios = list(sample)
    assert len(scenarios) == len(sample) == 5
    assert scenarios[3] == sample[3]
    assert (scenarios[3].a1, scenarios[3].a2) == (sample.a1[3], sample.a2[3])
