import numpy as np
import pytest

from conftest import powerlaw_dist
from flag_synth.assign import assign_labels
from flag_synth.errors import CoverageError, DegenerateDistributionError, NoFeasibleFitError, ParameterError
from flag_synth.fit import FitOptions, fit_params, objective, observed_group_distribution, size_bins
from flag_synth.flagcore import LEGALITY_RTOL, beta_max, build_model, expected_b_vector
from flag_synth.models import (
    AttributeTable,
    BetaMode,
    FlagParams,
    ObservedGroupDistribution,
    ProfileSizeDistribution,
)


def _injected(dist, alpha, beta):
    """Observed counts equal to the model's expected counts, no noise."""
    b = expected_b_vector(build_model(dist, FlagParams(alpha=alpha, beta=beta)))
    return ObservedGroupDistribution(counts={j + 1: float(v) for j, v in enumerate(b) if v > 0}, dist=dist)


@pytest.fixture(scope="module")
def spread_dist():
    return ProfileSizeDistribution.from_counts({i: max(1, int(2000 * i ** -1.3)) for i in range(1, 301)})


def test_observed_group_hand_count():
    dist = ProfileSizeDistribution.from_sizes({"u1": 1, "u2": 1, "u3": 2})
    table = AttributeTable(entries={"u1": True, "u2": False, "u3": True}, attribute_name="f")
    observed = observed_group_distribution(dist, table)
    assert observed.counts == {1: 1, 2: 1}
    assert observed.fraction == pytest.approx(2 / 3)


def test_observed_group_coverage():
    dist = ProfileSizeDistribution.from_sizes({"u1": 1, "u2": 1, "u3": 2})
    table = AttributeTable(entries={"u1": True, "u2": False, "zz": True}, attribute_name="f")
    with pytest.raises(CoverageError, match="allow-partial") as exc:
        observed_group_distribution(dist, table)
    assert exc.value.missing == ["u3"]
    partial = observed_group_distribution(dist, table, allow_partial=True)
    assert partial.dist.total == 2
    assert partial.counts == {1: 1}


def test_size_bins_edges():
    index, nbins = size_bins(20, bins_per_decade=10)
    # edges 1, 2, 3, 5, 6, 7, 10, 12, 15, 19
    assert nbins == 10
    assert index[0] == 0 and index[1] == 1 and index[2] == 2
    assert index[3] == index[2]
    assert index[18] == index[19] == nbins - 1


def test_objective_zero_at_injected_point(spread_dist):
    observed = _injected(spread_dist, 0.5, 0.2)
    assert objective(spread_dist, observed, 0.5, 0.2) == pytest.approx(0.0, abs=1e-18)
    assert objective(spread_dist, observed, 0.9, 0.2) > 0


def test_fit_finds_injected_point(spread_dist):
    observed = _injected(spread_dist, 0.5, 0.2)
    result = fit_params(
        spread_dist,
        observed,
        FitOptions(beta_mode=BetaMode.SEARCHED, alpha_step=0.05, beta_max=0.5, beta_step=0.01),
    )
    assert result.alpha == pytest.approx(0.5)
    assert result.beta == pytest.approx(0.2)
    assert result.objective == pytest.approx(0.0, abs=1e-18)


def test_fixed_beta_uses_observed_fraction(spread_dist):
    observed = _injected(spread_dist, 0.5, 0.2)
    result = fit_params(spread_dist, observed, FitOptions(alpha_step=0.05))
    assert result.beta == pytest.approx(0.2, rel=1e-9)
    assert result.alpha == pytest.approx(0.5)
    assert result.beta_mode is BetaMode.FIXED


def test_result_is_legal_and_objective_matches(spread_dist):
    observed = _injected(spread_dist, 1.2, 0.3)
    result = fit_params(spread_dist, observed, FitOptions(beta_mode=BetaMode.SEARCHED, alpha_step=0.1, beta_step=0.05))
    assert result.beta <= beta_max(spread_dist, result.alpha) * (1 + LEGALITY_RTOL)
    assert result.objective == objective(spread_dist, observed, result.alpha, result.beta)
    assert result.grid["cells_evaluated"] > 0


def test_surface_only_has_legal_cells(spread_dist):
    observed = _injected(spread_dist, 1.0, 0.3)
    result = fit_params(
        spread_dist,
        observed,
        FitOptions(beta_mode=BetaMode.SEARCHED, alpha_step=0.25, beta_step=0.1, keep_surface=True),
    )
    assert result.surface
    for alpha, beta, loss in result.surface:
        assert beta <= beta_max(spread_dist, alpha) * (1 + LEGALITY_RTOL)
        assert loss >= 0
    assert len(result.surface) == result.grid["cells_evaluated"]


def test_fit_deterministic_and_thread_independent(spread_dist):
    observed = _injected(spread_dist, 0.7, 0.25)
    options = FitOptions(beta_mode=BetaMode.SEARCHED, alpha_step=0.1, beta_step=0.02)
    a = fit_params(spread_dist, observed, options)
    b = fit_params(spread_dist, observed, options)
    c = fit_params(spread_dist, observed, FitOptions(**{**options.__dict__, "workers": 4}))
    assert a.to_dict() == b.to_dict() == c.to_dict()


def test_halving_steps_never_worsens(spread_dist):
    dist = spread_dist
    labels = assign_labels(build_model(dist, FlagParams(alpha=0.8, beta=0.3)), dist, seed=9)
    table = labels.to_attribute_table()
    observed = observed_group_distribution(dist, table)
    coarse = fit_params(dist, observed, FitOptions(beta_mode=BetaMode.SEARCHED, alpha_step=0.2, beta_step=0.1))
    fine = fit_params(dist, observed, FitOptions(beta_mode=BetaMode.SEARCHED, alpha_step=0.1, beta_step=0.05))
    assert fine.objective <= coarse.objective


def test_no_feasible_fit():
    wide = ProfileSizeDistribution.from_counts({1: 4, 2: 2, 4: 1, 40: 1})
    observed = ObservedGroupDistribution(counts={1: 4}, dist=wide)
    with pytest.raises(NoFeasibleFitError) as exc:
        fit_params(
            wide,
            observed,
            FitOptions(beta_mode=BetaMode.SEARCHED, alpha_min=2, alpha_max=3, alpha_step=0.5, beta_min=0.9, beta_max=1.0),
        )
    assert set(exc.value.beta_max_at_alpha) == {2.0, 2.5, 3.0}
    assert "beta_max by alpha" in str(exc.value)


def test_degenerate_single_bin():
    dist = ProfileSizeDistribution.from_counts({1: 10})
    with pytest.raises(DegenerateDistributionError):
        fit_params(dist, ObservedGroupDistribution(counts={1: 3}, dist=dist))


def test_fixed_mode_needs_flagged_entities(spread_dist):
    with pytest.raises(ParameterError):
        fit_params(spread_dist, ObservedGroupDistribution(counts={}, dist=spread_dist))


def test_bad_grid(spread_dist):
    with pytest.raises(ParameterError):
        fit_params(spread_dist, _injected(spread_dist, 0.5, 0.2), FitOptions(alpha_step=0))


@pytest.mark.slow
def test_round_trip_recovers_planted_parameters():
    dist = powerlaw_dist(1.45, k=300, n=100_000, seed=2019)
    model = build_model(dist, FlagParams(alpha=0.8, beta=0.3))
    table = assign_labels(model, dist, seed=7).to_attribute_table()
    observed = observed_group_distribution(dist, table)
    result = fit_params(dist, observed, FitOptions(beta_mode=BetaMode.SEARCHED, workers=2))
    assert result.alpha == pytest.approx(0.8, abs=0.1)
    assert result.beta == pytest.approx(0.3, abs=0.05)
    assert np.isfinite(result.objective)
