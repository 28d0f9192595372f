import math

import numpy as np
import pytest

from conftest import powerlaw_dist
from flag_synth.distribution import (
    _integer_cdf,
    estimate_powerlaw_alpha,
    loglog_points,
    powerlaw_pmf,
    sample_powerlaw,
    summary,
)
from flag_synth.errors import DegenerateDistributionError, ParameterError
from flag_synth.models import ProfileSizeDistribution, Support


def test_summary_hand(hand_dist):
    s = summary(hand_dist)
    assert s.mean == pytest.approx(12 / 7)
    assert s.max == 4
    assert s.total_entities == 7
    assert s.total_interactions == 12
    assert s.median == 1


def test_summary_singleton():
    s = summary(ProfileSizeDistribution.from_counts({5: 1}))
    assert s.mean == s.median == s.max == 5


def test_pmf_normalized():
    for alpha in (0.0, 0.23, 1.45, 7.0):
        assert math.fsum(powerlaw_pmf(alpha, 1, 2314).tolist()) == pytest.approx(1.0, abs=1e-12)


def test_sampler_uniform_at_alpha_zero():
    n = 300_000
    draws = sample_powerlaw(0.0, k=3, xmin=1, n=n, seed=11)
    sigma = math.sqrt((1 / 3) * (2 / 3) / n)
    for size in (1, 2, 3):
        assert abs(np.mean(draws == size) - 1 / 3) < 4 * sigma


def test_sampler_large_alpha_collapses_to_xmin():
    assert set(sample_powerlaw(60.0, k=30, xmin=1, n=100, seed=3).tolist()) == {1}


def test_sampler_mean_matches_pmf():
    pmf = powerlaw_pmf(1.45, 1, 30)
    sizes = np.arange(1, 31)
    mean = float(np.dot(pmf, sizes))
    sd = math.sqrt(float(np.dot(pmf, (sizes - mean) ** 2)))
    draws = sample_powerlaw(1.45, k=30, xmin=1, n=100_000, seed=5)
    assert abs(draws.mean() - mean) < 4 * sd / math.sqrt(len(draws))
    assert draws.min() >= 1 and draws.max() <= 30


def test_sampler_deterministic():
    a = sample_powerlaw(1.2, k=50, xmin=2, n=1000, seed=99)
    b = sample_powerlaw(1.2, k=50, xmin=2, n=1000, seed=99)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_powerlaw(1.2, k=50, xmin=2, n=1000, seed=100))


def test_sampler_table_is_integer():
    assert _integer_cdf(0.0, 1, 4).tolist() == [2**60, 2**61, 3 * 2**60, 2**62]
    cdf = _integer_cdf(1.0, 1, 2)
    assert cdf.dtype == np.int64
    assert cdf.tolist() == [2**63 // 3, 2**63 // 3 + 2**62 // 3]


def test_sampler_bad_bounds():
    with pytest.raises(ParameterError):
        sample_powerlaw(1.0, k=5, xmin=6, n=10, seed=1)
    with pytest.raises(ParameterError):
        sample_powerlaw(1.0, k=5, xmin=1, n=0, seed=1)


@pytest.mark.slow
@pytest.mark.parametrize("alpha, seed", [(0.3, 1), (0.8, 2), (1.45, 3), (2.5, 4)])
def test_estimator_recovers_alpha(alpha, seed):
    dist = powerlaw_dist(alpha, k=30, n=100_000, seed=seed)
    fit = estimate_powerlaw_alpha(dist)
    assert fit.alpha == pytest.approx(alpha, abs=0.05)
    assert fit.xmin == 1
    assert fit.n_tail == 100_000
    assert fit.support is Support.TRUNCATED


@pytest.mark.slow
def test_estimator_movielens_like_regime():
    dist = powerlaw_dist(0.23, k=2314, n=100_000, seed=23)
    assert 0.20 <= estimate_powerlaw_alpha(dist).alpha <= 0.26


def test_estimator_degenerate_single_size():
    with pytest.raises(DegenerateDistributionError):
        estimate_powerlaw_alpha(ProfileSizeDistribution.from_counts({3: 1000}))


def test_estimator_xmin_above_data():
    dist = ProfileSizeDistribution.from_counts({1: 10, 2: 5})
    with pytest.raises(DegenerateDistributionError):
        estimate_powerlaw_alpha(dist, xmin=2)


def test_estimator_scan_xmin_infinite_support_shape():
    dist = powerlaw_dist(1.8, k=200, n=20_000, seed=8)
    fit = estimate_powerlaw_alpha(dist, scan_xmin=True, support=Support.INFINITE)
    assert fit.alpha > 1.0
    assert 1 <= fit.xmin < dist.k
    assert 0.0 <= fit.ks_distance <= 1.0
    assert set(fit.to_dict()) == {"alpha", "xmin", "ks", "support", "n_tail"}


def test_loglog_single_row():
    (row,) = loglog_points(ProfileSizeDistribution.from_counts({1: 10}))
    assert (row["log_size"], row["log_count"]) == (0.0, 1.0)


def test_loglog_power_of_ten():
    rows = loglog_points(ProfileSizeDistribution.from_counts({10: 100}))
    assert rows[-1]["log_size"] == pytest.approx(1.0)
    assert rows[-1]["log_count"] == pytest.approx(2.0)
    assert all(r["log_count"] is None for r in rows[:-1])


def test_loglog_zero_count_is_blank():
    rows = loglog_points({1: 4, 2: 0, 4: 1})
    by_size = {r["size"]: r for r in rows}
    assert by_size[2]["log_count"] is None
    assert by_size[3]["log_count"] is None
    assert by_size[4]["log_count"] == 0.0


def test_loglog_inverts_to_counts(hand_dist):
    for row in loglog_points(hand_dist):
        if row["log_count"] is not None:
            assert round(10 ** row["log_count"]) == hand_dist.counts[row["size"]]
            assert round(10 ** row["log_size"]) == row["size"]


def test_loglog_group_columns():
    rows = loglog_points({1: 10, 2: 1}, groups={"group_b": {1: 1.0}})
    assert rows[0]["group_b"] == 0.0
    assert rows[1]["group_b"] is None


def test_loglog_negative_count():
    with pytest.raises(ParameterError):
        loglog_points({1: -1})
    with pytest.raises(ParameterError, match="size 9"):
        loglog_points({1: 3, 9: -2}, k=2)
    with pytest.raises(ParameterError):
        loglog_points({1: 3}, groups={"group_a": {5: -0.5}})
