"""Grid-search (alpha, beta) against an observed binary attribute.

The loss compares expected and observed group-B counts per log-spaced
size bin on a log(1 + count) scale:

    L(alpha, beta) = sum_bins (log1p(expected_b) - log1p(observed_b))^2

Only pairs that are legal under strict construction are evaluated.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConsistencyError, CoverageError, DegenerateDistributionError, NoFeasibleFitError, ParameterError
from .flagcore import LEGALITY_RTOL, beta_max, build_model, expected_b_vector, frange
from .models import AttributeTable, BetaMode, FitResult, FlagParams, ObservedGroupDistribution, ProfileSizeDistribution

logger = logging.getLogger(__name__)


@dataclass
class FitOptions:
    beta_mode: BetaMode = BetaMode.FIXED
    alpha_min: float = 0.0
    alpha_max: float = 3.0
    alpha_step: float = 0.01
    beta_min: float = 0.01
    beta_max: float = 1.0
    beta_step: float = 0.01
    bins_per_decade: int = 10
    keep_surface: bool = False
    workers: int = 1

    def validate(self) -> None:
        if self.alpha_min < 0 or self.alpha_max < self.alpha_min or self.alpha_step <= 0:
            raise ParameterError(
                f"bad alpha grid [{self.alpha_min}, {self.alpha_max}] step {self.alpha_step}"
            )
        if self.beta_mode is BetaMode.SEARCHED and (
            self.beta_min < 0 or self.beta_max > 1 or self.beta_max < self.beta_min or self.beta_step <= 0
        ):
            raise ParameterError(f"bad beta grid [{self.beta_min}, {self.beta_max}] step {self.beta_step}")
        if self.bins_per_decade < 1:
            raise ParameterError(f"bins_per_decade must be >= 1, got {self.bins_per_decade}")


def observed_group_distribution(
    dist: ProfileSizeDistribution,
    table: AttributeTable,
    *,
    allow_partial: bool = False,
) -> ObservedGroupDistribution:
    """Flagged counts per profile size.

    Entities of `dist` missing from the table raise CoverageError unless
    `allow_partial` is set, in which case they are dropped from the bound
    distribution. Table entries with no interactions are ignored.
    """

    missing = [e for e in dist.sizes if e not in table.entries]
    if missing:
        if not allow_partial:
            raise CoverageError(missing)
        logger.warning("excluding %d entities missing from the attribute table", len(missing))
        dist = dist.restrict(e for e in dist.sizes if e in table.entries)

    counts = Counter(size for e, size in dist.sizes.items() if table.entries[e])
    observed = ObservedGroupDistribution(
        counts=dict(sorted(counts.items())),
        dist=dist,
        attribute_name=table.attribute_name,
    )
    logger.info(
        "%s: %d of %d flagged (fraction %.4f)",
        table.attribute_name or "attribute", observed.total_flagged, dist.total, observed.fraction,
    )
    return observed


def size_bins(k: int, bins_per_decade: int = 10) -> Tuple[np.ndarray, int]:
    """Bin index for each size 1..k using edges floor(10^(m / bins_per_decade))."""

    if bins_per_decade < 1:
        raise ParameterError(f"bins_per_decade must be >= 1, got {bins_per_decade}")
    edges = {1}
    m = 1
    while True:
        edge = int(math.floor(10 ** (m / bins_per_decade) + 1e-9))
        if edge > k:
            break
        edges.add(edge)
        m += 1
    bounds = np.array(sorted(edges) + [k + 1])
    index = np.searchsorted(bounds, np.arange(1, k + 1), side="right") - 1
    return index, len(bounds) - 1


def _binned_loss(expected_b: np.ndarray, observed_binned: np.ndarray, index: np.ndarray, nbins: int) -> float:
    expected_binned = np.bincount(index, weights=expected_b, minlength=nbins)
    return float(np.sum((np.log1p(expected_binned) - np.log1p(observed_binned)) ** 2))


def _observed_binned(observed: ObservedGroupDistribution, index: np.ndarray, nbins: int) -> np.ndarray:
    return np.bincount(index, weights=observed.count_vector()[1:].astype(np.float64), minlength=nbins)


def _check_bound(dist: ProfileSizeDistribution, observed: ObservedGroupDistribution) -> None:
    if observed.dist is not dist and observed.dist.sizes != dist.sizes:
        raise ConsistencyError("observed group distribution is bound to a different distribution")


def objective(
    dist: ProfileSizeDistribution,
    observed: ObservedGroupDistribution,
    alpha: float,
    beta: float,
    bins_per_decade: int = 10,
) -> float:
    """Loss at a single (alpha, beta); raises IllegalBeta outside the legal range."""

    _check_bound(dist, observed)
    index, nbins = size_bins(dist.k, bins_per_decade)
    model = build_model(dist, FlagParams(alpha=alpha, beta=beta))
    return _binned_loss(expected_b_vector(model), _observed_binned(observed, index, nbins), index, nbins)


def fit_params(
    dist: ProfileSizeDistribution,
    observed: ObservedGroupDistribution,
    options: Optional[FitOptions] = None,
) -> FitResult:
    options = options or FitOptions()
    options.validate()
    _check_bound(dist, observed)

    index, nbins = size_bins(dist.k, options.bins_per_decade)
    occupied = np.bincount(index, weights=dist.count_vector()[1:].astype(np.float64), minlength=nbins)
    if np.count_nonzero(occupied) < 2:
        raise DegenerateDistributionError("need at least 2 occupied size bins to fit")
    obs = _observed_binned(observed, index, nbins)

    alphas = frange(options.alpha_min, options.alpha_max, options.alpha_step)
    if options.beta_mode is BetaMode.FIXED:
        if observed.total_flagged <= 0:
            raise ParameterError("no flagged entities; the observed fraction cannot be used as beta")
        betas = [observed.fraction]
        grid = {
            "alpha": [options.alpha_min, options.alpha_max, options.alpha_step],
            "beta": observed.fraction,
            "bins_per_decade": options.bins_per_decade,
        }
    else:
        betas = [b for b in frange(options.beta_min, options.beta_max, options.beta_step) if b > 0]
        grid = {
            "alpha": [options.alpha_min, options.alpha_max, options.alpha_step],
            "beta": [options.beta_min, options.beta_max, options.beta_step],
            "bins_per_decade": options.bins_per_decade,
        }
    if not betas or betas[0] > 1:
        raise ParameterError("beta grid is empty")

    def evaluate(alpha: float) -> Tuple[float, List[Tuple[float, float]]]:
        bmax = beta_max(dist, alpha)
        cells = []
        for b in betas:
            if b > bmax * (1 + LEGALITY_RTOL):
                break
            model = build_model(dist, FlagParams(alpha=alpha, beta=b))
            cells.append((b, _binned_loss(expected_b_vector(model), obs, index, nbins)))
        return bmax, cells

    if options.workers > 1:
        with ThreadPoolExecutor(max_workers=options.workers) as pool:
            results = list(pool.map(evaluate, alphas))
    else:
        results = [evaluate(a) for a in alphas]

    best: Optional[Tuple[float, float, float]] = None
    surface: List[Tuple[float, float, float]] = []
    beta_max_at_alpha: Dict[float, float] = {}
    evaluated = 0
    for alpha, (bmax, cells) in zip(alphas, results):
        beta_max_at_alpha[alpha] = bmax
        for b, loss in cells:
            evaluated += 1
            if options.keep_surface:
                surface.append((alpha, b, loss))
            # strict < keeps the smallest alpha, then smallest beta, on ties
            if best is None or loss < best[2]:
                best = (alpha, b, loss)

    if best is None:
        raise NoFeasibleFitError(beta_max_at_alpha)

    grid["cells_evaluated"] = evaluated
    logger.info("fit: alpha=%g beta=%.6g objective=%.6g over %d cells", best[0], best[1], best[2], evaluated)
    return FitResult(
        alpha=best[0],
        beta=best[1],
        objective=best[2],
        beta_mode=options.beta_mode,
        grid=grid,
        beta_max_at_alpha=beta_max_at_alpha,
        surface=surface if options.keep_surface else None,
    )
