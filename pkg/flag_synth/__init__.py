__version__ = "0.1.0"

from .assign import assign_labels, realized_stats
from .distribution import estimate_powerlaw_alpha, loglog_points, sample_powerlaw, summary
from .fit import FitOptions, fit_params, observed_group_distribution
from .flagcore import beta_max, build_model, expected_counts, expected_group_b_mass, unscaled_membership
from .ingest import (
    build_profiles,
    parse_generic_interactions,
    parse_movielens_movies,
    parse_movielens_ratings,
    parse_movielens_users,
)
from .models import FlagParams, LegalityMode, Pivot, ProfileSizeDistribution, Support

__all__ = [
    "__version__",
    "assign_labels",
    "beta_max",
    "build_model",
    "build_profiles",
    "estimate_powerlaw_alpha",
    "expected_counts",
    "expected_group_b_mass",
    "fit_params",
    "FitOptions",
    "FlagParams",
    "LegalityMode",
    "loglog_points",
    "observed_group_distribution",
    "parse_generic_interactions",
    "parse_movielens_movies",
    "parse_movielens_ratings",
    "parse_movielens_users",
    "Pivot",
    "ProfileSizeDistribution",
    "realized_stats",
    "sample_powerlaw",
    "summary",
    "Support",
    "unscaled_membership",
]
