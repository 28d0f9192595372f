"""Profile-size statistics, discrete power-law estimation and sampling."""

from __future__ import annotations

import decimal
import logging
import math
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp, zeta

from .errors import DegenerateDistributionError, EmptyDistributionError, NumericError, ParameterError
from .models import DistributionSummary, Pivot, PowerLawFit, ProfileSizeDistribution, Support

logger = logging.getLogger(__name__)

ALPHA_BOUNDS = {
    Support.TRUNCATED: (1e-6, 20.0),
    Support.INFINITE: (1.0 + 1e-6, 20.0),
}
XATOL = 1e-6

# sampler table: decimal digits for ln/exp, integer total of the CDF
CDF_PRECISION = 40
CDF_SCALE = 1 << 62


def summary(dist: ProfileSizeDistribution) -> DistributionSummary:
    total = dist.total
    if total == 0:
        raise EmptyDistributionError("cannot summarize an empty distribution")

    # lower median: element (n - 1) // 2 of the sorted sizes
    target = (total - 1) // 2
    seen = 0
    median = dist.k
    for size in sorted(dist.counts):
        seen += dist.counts[size]
        if seen > target:
            median = size
            break

    return DistributionSummary(
        mean=dist.total_interactions / total,
        median=median,
        max=dist.k,
        total_entities=total,
        total_interactions=dist.total_interactions,
    )


def powerlaw_pmf(alpha: float, xmin: int, k: int) -> np.ndarray:
    """P(i) proportional to i^-alpha on xmin..k, normalized in log space."""

    if not np.isfinite(alpha) or alpha < 0:
        raise ParameterError(f"alpha must be >= 0, got {alpha}")
    if not 1 <= xmin <= k:
        raise ParameterError(f"need 1 <= xmin <= k, got xmin={xmin}, k={k}")
    log_w = -alpha * np.log(np.arange(xmin, k + 1, dtype=np.float64))
    return np.exp(log_w - logsumexp(log_w))


def _integer_cdf(alpha: float, xmin: int, k: int) -> np.ndarray:
    """Cumulative integer weights for sizes xmin..k, summing to at most CDF_SCALE.

    Built from decimal ln/exp, which are correctly rounded, so the table is
    the same on every platform.
    """

    ctx = decimal.Context(prec=CDF_PRECISION)
    neg_alpha = decimal.Decimal(float(alpha)).copy_negate()
    weights = [ctx.exp(ctx.multiply(neg_alpha, ctx.ln(decimal.Decimal(i)))) for i in range(xmin, k + 1)]
    total = decimal.Decimal(0)
    for w in weights:
        total = ctx.add(total, w)
    scale = decimal.Decimal(CDF_SCALE)
    ticks = [
        int(ctx.divide(ctx.multiply(w, scale), total).to_integral_value(rounding=decimal.ROUND_FLOOR))
        for w in weights
    ]
    return np.cumsum(np.array(ticks, dtype=np.int64))


def sample_powerlaw(alpha: float, k: int, xmin: int, n: int, seed: int) -> np.ndarray:
    """Draw `n` sizes from the truncated power law via inverse CDF.

    The CDF is an integer table and the draws are PCG64 integers below its
    total, so a seed reproduces the same sizes on every platform.
    """

    if not np.isfinite(alpha) or alpha < 0:
        raise ParameterError(f"alpha must be >= 0, got {alpha}")
    if not 1 <= xmin <= k:
        raise ParameterError(f"need 1 <= xmin <= k, got xmin={xmin}, k={k}")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if seed < 0:
        raise ParameterError(f"seed must be non-negative, got {seed}")
    cdf = _integer_cdf(alpha, xmin, k)
    ticks = np.random.Generator(np.random.PCG64(seed)).integers(0, int(cdf[-1]), size=n, dtype=np.int64)
    idx = np.searchsorted(cdf, ticks, side="right")
    return (xmin + idx).astype(np.int64)


def sizes_to_distribution(
    sizes: Iterable[int], pivot: Pivot = Pivot.USER, prefix: str = "e"
) -> ProfileSizeDistribution:
    """Wrap anonymous sizes (e.g. sampler output) as a distribution with ids `<prefix><n>`."""
    return ProfileSizeDistribution.from_sizes(
        {f"{prefix}{n}": int(s) for n, s in enumerate(sizes)}, pivot=pivot
    )


def _log_norm(alpha: float, xmin: int, k: int, support: Support) -> float:
    if support is Support.INFINITE:
        return float(np.log(zeta(alpha, xmin)))
    return float(logsumexp(-alpha * np.log(np.arange(xmin, k + 1, dtype=np.float64))))


def _model_cdf(alpha: float, xmin: int, k: int, support: Support) -> np.ndarray:
    if support is Support.INFINITE:
        sizes = np.arange(xmin, k + 1, dtype=np.float64)
        return 1.0 - zeta(alpha, sizes + 1) / zeta(alpha, xmin)
    return np.cumsum(powerlaw_pmf(alpha, xmin, k))


def _fit_at(counts: np.ndarray, xmin: int, support: Support) -> PowerLawFit:
    k = len(counts) - 1
    tail = counts[xmin:].astype(np.float64)
    n_tail = int(tail.sum())
    sizes = np.arange(xmin, k + 1, dtype=np.float64)
    mean_log = float(np.dot(tail, np.log(sizes))) / n_tail

    def neg_loglik(alpha: float) -> float:
        return alpha * mean_log + _log_norm(alpha, xmin, k, support)

    bounds = ALPHA_BOUNDS[support]
    res = minimize_scalar(neg_loglik, bounds=bounds, method="bounded", options={"xatol": XATOL})
    if not res.success or not np.isfinite(res.fun):
        raise NumericError(
            "power-law MLE did not converge",
            {"message": str(res.message), "nfev": int(res.nfev), "alpha": float(res.x), "xmin": xmin},
        )

    alpha = float(res.x)
    ecdf = np.cumsum(tail) / n_tail
    ks = float(np.max(np.abs(ecdf - _model_cdf(alpha, xmin, k, support))))
    return PowerLawFit(alpha=alpha, xmin=xmin, ks_distance=ks, support=support, n_tail=n_tail)


def estimate_powerlaw_alpha(
    dist: ProfileSizeDistribution,
    *,
    xmin: Optional[int] = 1,
    scan_xmin: bool = False,
    support: Support = Support.TRUNCATED,
) -> PowerLawFit:
    """Maximum-likelihood exponent of a discrete power law.

    With `scan_xmin`, every occupied size that leaves at least two distinct
    sizes in the tail is tried and the fit with the smallest KS distance wins
    (ties go to the smaller xmin). Otherwise `xmin` is used as given.
    """

    counts = dist.count_vector()
    occupied = [int(i) for i in np.nonzero(counts)[0]]

    if scan_xmin:
        candidates = [m for m in occupied if sum(1 for i in occupied if i >= m) >= 2]
    else:
        if xmin is None or xmin < 1:
            raise ParameterError(f"xmin must be >= 1, got {xmin}")
        candidates = [xmin] if sum(1 for i in occupied if i >= xmin) >= 2 else []

    if not candidates:
        raise DegenerateDistributionError(
            f"need at least 2 distinct profile sizes at or above xmin (observed sizes: {occupied[:10]})"
        )

    best: Optional[PowerLawFit] = None
    for m in candidates:
        fit = _fit_at(counts, m, support)
        logger.debug("xmin=%d alpha=%.6f ks=%.6f", m, fit.alpha, fit.ks_distance)
        if best is None or fit.ks_distance < best.ks_distance:
            best = fit
    assert best is not None
    return best


def loglog_points(
    counts: Union[ProfileSizeDistribution, Mapping[int, float]],
    k: Optional[int] = None,
    groups: Optional[Mapping[str, Mapping[int, float]]] = None,
) -> List[Dict[str, Any]]:
    """Rows `size, log_size, log_count[, <group>...]` for sizes 1..k.

    Zero counts are left blank (None) instead of taking log10(0).
    """

    if isinstance(counts, ProfileSizeDistribution):
        k = counts.k if k is None else k
        counts = counts.counts
    groups = groups or {}
    for series in (counts, *groups.values()):
        negative = [s for s, c in series.items() if c < 0]
        if negative:
            raise ParameterError(f"counts must be >= 0, got {series[negative[0]]} at size {negative[0]}")
    if k is None:
        occupied = [s for s, c in counts.items() if c > 0]
        for g in groups.values():
            occupied += [s for s, c in g.items() if c > 0]
        k = max(occupied, default=0)

    def _log(value: float) -> Optional[float]:
        return math.log10(value) if value > 0 else None

    rows = []
    for size in range(1, k + 1):
        row: Dict[str, Any] = {
            "size": size,
            "log_size": math.log10(size),
            "log_count": _log(counts.get(size, 0)),
        }
        for name, series in groups.items():
            row[name] = _log(series.get(size, 0))
        rows.append(row)
    return rows


def loglog_fieldnames(groups: Sequence[str] = ()) -> List[str]:
    return ["size", "log_size", "log_count", *groups]
