"""Frequency-linked membership model.

Group-B membership starts from the unscaled curve f_B(j) = j^-alpha and is
scaled by beta*|U| / E_f(|B|) so the expected size of group B is beta*|U|.
Scaling is only legal while the scaled value at j = 1 stays <= 1, which
bounds beta by E_f(|B|) / |U|.
"""

from __future__ import annotations

import logging
import math
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .errors import IllegalBeta, ParameterError
from .models import ExpectedCount, FlagParams, LegalityMode, MembershipModel, ProfileSizeDistribution

logger = logging.getLogger(__name__)

# relative slack when comparing beta against beta_max, to absorb rounding
LEGALITY_RTOL = 1e-12


def _check_alpha(alpha: float) -> None:
    if not np.isfinite(alpha) or alpha < 0:
        raise ParameterError(f"alpha must be >= 0, got {alpha}")


def unscaled_membership(alpha: float, j: int) -> float:
    _check_alpha(alpha)
    if j < 1:
        raise ParameterError(f"profile size must be >= 1, got {j}")
    return float(j) ** -alpha


def _unscaled_table(alpha: float, k: int) -> np.ndarray:
    return np.arange(1, k + 1, dtype=np.float64) ** -alpha


def expected_group_b_mass(dist: ProfileSizeDistribution, alpha: float) -> float:
    """E_f(|B|) = sum_i S(i) * i^-alpha."""
    _check_alpha(alpha)
    s = dist.count_vector()[1:]
    return math.fsum((s * _unscaled_table(alpha, dist.k)).tolist())


def beta_max(dist: ProfileSizeDistribution, alpha: float) -> float:
    return expected_group_b_mass(dist, alpha) / dist.total


def support_beta_max(dist: ProfileSizeDistribution, alpha: float) -> Optional[float]:
    """Largest beta keeping p <= 1 at the smallest observed size.

    Equals beta_max when some entity has size 1; looser otherwise. None when
    min_size^-alpha underflows to 0.
    """
    floor = unscaled_membership(alpha, dist.min_size)
    if floor == 0.0:
        return None
    return beta_max(dist, alpha) / floor


def is_legal(dist: ProfileSizeDistribution, params: FlagParams) -> bool:
    return params.beta <= beta_max(dist, params.alpha) * (1 + LEGALITY_RTOL)


def build_model(
    dist: ProfileSizeDistribution,
    params: FlagParams,
    legality_mode: LegalityMode = LegalityMode.STRICT,
) -> MembershipModel:
    mass = expected_group_b_mass(dist, params.alpha)
    bmax = mass / dist.total

    if legality_mode is LegalityMode.STRICT and params.beta > bmax * (1 + LEGALITY_RTOL):
        raise IllegalBeta(params.beta, bmax, support_beta_max(dist, params.alpha))

    if mass == 0.0:
        # clamp mode only; strict already rejected any beta here
        raise ParameterError(
            f"alpha={params.alpha:g} leaves no membership mass on sizes >= {dist.min_size}; lower alpha"
        )
    # total / mass is exactly 1.0 at alpha = 0, so p_j == beta there
    scale = params.beta * (dist.total / mass)
    if not math.isfinite(scale):
        raise ParameterError(
            f"alpha={params.alpha:g} is too large for sizes >= {dist.min_size}: scaling overflows"
        )
    probabilities = np.minimum(scale * _unscaled_table(params.alpha, dist.k), 1.0)
    probabilities.setflags(write=False)

    if legality_mode is LegalityMode.CLAMP:
        realized = math.fsum((dist.count_vector()[1:] * probabilities).tolist())
        logger.warning(
            "clamp mode: beta=%g (beta_max=%.6g); expected |B| is %.6g against a target of %.6g",
            params.beta, bmax, realized, params.beta * dist.total,
        )

    return MembershipModel(
        probabilities=probabilities,
        params=params,
        dist=dist,
        legality_mode=legality_mode,
    )


def expected_b_vector(model: MembershipModel) -> np.ndarray:
    """S(j) * p_j for j = 1..k."""
    return model.dist.count_vector()[1:] * model.probabilities


def expected_counts(model: MembershipModel) -> List[ExpectedCount]:
    s = model.dist.count_vector()[1:]
    b = expected_b_vector(model)
    return [
        ExpectedCount(size=j, expected_b=float(b[j - 1]), expected_a=float(s[j - 1] - b[j - 1]))
        for j in range(1, model.k + 1)
    ]


def expected_profile_sizes(model: MembershipModel) -> Tuple[Optional[float], Optional[float]]:
    """Expected mean profile size of group A and group B."""
    sizes = np.arange(1, model.k + 1, dtype=np.float64)
    s = model.dist.count_vector()[1:]
    b = expected_b_vector(model)
    a = s - b

    def _mean(weights: np.ndarray) -> Optional[float]:
        total = math.fsum(weights.tolist())
        return math.fsum((weights * sizes).tolist()) / total if total > 0 else None

    return _mean(a), _mean(b)


def legality_table(dist: ProfileSizeDistribution, alphas: Iterable[float]) -> List[Dict[str, float]]:
    return [{"alpha": a, "beta_max": beta_max(dist, a)} for a in alphas]


def alpha_sweep(dist: ProfileSizeDistribution, beta: float, alphas: Iterable[float]) -> List[Dict[str, object]]:
    """For a fixed beta, legality and expected group profile sizes at each alpha."""

    rows: List[Dict[str, object]] = []
    for a in alphas:
        params = FlagParams(alpha=a, beta=beta)
        legal = is_legal(dist, params)
        mean_a = mean_b = None
        if legal:
            mean_a, mean_b = expected_profile_sizes(build_model(dist, params))
        rows.append(
            {
                "alpha": a,
                "beta_max": beta_max(dist, a),
                "legal": "LEGAL" if legal else "ILLEGAL",
                "mean_size_a": mean_a,
                "mean_size_b": mean_b,
            }
        )
    return rows


def frange(start: float, stop: float, step: float) -> List[float]:
    """Inclusive grid start, start+step, ..., <= stop, rounded to 10 decimals."""
    if step <= 0:
        raise ParameterError(f"step must be > 0, got {step}")
    if stop < start:
        raise ParameterError(f"empty range [{start}, {stop}]")
    n = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + i * step, 10) for i in range(n + 1)]
