from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import Dict, List, Sequence

import numpy as np

from .errors import ConsistencyError, ParameterError
from .models import AttributeAssignment, Label, MembershipModel, ProfileSizeDistribution, RealizedStats

logger = logging.getLogger(__name__)

# Python's hash() is salted per process; entity keys use 64-bit FNV-1a instead.
_FNV_OFFSET64 = 0xCBF29CE484222325
_FNV_PRIME64 = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

# SplitMix64 constants
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@lru_cache(maxsize=1 << 20)
def fnv1a64(entity_id: str) -> int:
    h = _FNV_OFFSET64
    for b in entity_id.encode("utf-8"):
        h ^= b
        h = (h * _FNV_PRIME64) & _MASK64
    return h


def _splitmix64(state: np.ndarray) -> np.ndarray:
    # uint64 array arithmetic wraps modulo 2^64
    z = state + _GAMMA
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def check_seed(seed: int) -> int:
    if not 0 <= seed <= _MASK64:
        raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return int(seed)


def entity_uniforms(entity_ids: Sequence[str], seed: int) -> np.ndarray:
    """One uniform in [0, 1) per entity, keyed only by (seed, entity id).

    The draw is the first SplitMix64 output from state `seed ^ fnv1a64(id)`,
    keeping its top 53 bits.
    """
    check_seed(seed)
    keys = np.fromiter((fnv1a64(e) for e in entity_ids), dtype=np.uint64, count=len(entity_ids))
    z = _splitmix64(keys ^ np.uint64(seed))
    return (z >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def assign_labels(
    model: MembershipModel,
    dist: ProfileSizeDistribution,
    seed: int,
    *,
    workers: int = 1,
) -> AttributeAssignment:
    """Bernoulli trial per entity: label B iff its draw is < p at its profile size."""

    check_seed(seed)
    entity_ids = list(dist.sizes)
    sizes = np.fromiter(dist.sizes.values(), dtype=np.int64, count=len(entity_ids))
    if sizes.size and (sizes.min() < 1 or sizes.max() > model.k):
        raise ConsistencyError(
            f"profile sizes {int(sizes.min())}..{int(sizes.max())} fall outside the model support 1..{model.k}"
        )
    p = model.probabilities[sizes - 1]

    workers = max(1, int(workers))
    if workers == 1:
        u = entity_uniforms(entity_ids, seed)
    else:
        bounds = np.linspace(0, len(entity_ids), workers + 1).astype(int)
        chunks = [entity_ids[lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:])]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            u = np.concatenate(list(pool.map(lambda c: entity_uniforms(c, seed), chunks)))

    is_b = u < p
    labels = {e: (Label.B if b else Label.A) for e, b in zip(entity_ids, is_b.tolist())}
    logger.info("assigned %d entities: %d in group B", len(labels), int(is_b.sum()))
    return AttributeAssignment(
        labels=labels,
        seed=seed,
        params=model.params,
        generated_at_size=dict(dist.sizes),
        legality_mode=model.legality_mode,
    )


def realized_stats(assignment: AttributeAssignment, dist: ProfileSizeDistribution) -> RealizedStats:
    if assignment.labels.keys() != dist.sizes.keys():
        overlap = len(assignment.labels.keys() & dist.sizes.keys())
        raise ConsistencyError(
            f"assignment covers {len(assignment.labels)} entities, distribution {len(dist.sizes)}, "
            f"overlap {overlap}"
        )

    per_size: Dict[int, List[int]] = {}
    sums = {Label.A: 0, Label.B: 0}
    counts = {Label.A: 0, Label.B: 0}
    for entity_id, size in dist.sizes.items():
        label = assignment.labels[entity_id]
        slot = per_size.setdefault(size, [0, 0])
        slot[0 if label is Label.A else 1] += 1
        sums[label] += size
        counts[label] += 1

    return RealizedStats(
        count_a=counts[Label.A],
        count_b=counts[Label.B],
        per_size={s: (a, b) for s, (a, b) in sorted(per_size.items())},
        mean_size_a=sums[Label.A] / counts[Label.A] if counts[Label.A] else None,
        mean_size_b=sums[Label.B] / counts[Label.B] if counts[Label.B] else None,
    )


def realized_rows(stats: RealizedStats, k: int) -> List[Dict[str, int]]:
    rows = []
    for size in range(1, k + 1):
        a, b = stats.per_size.get(size, (0, 0))
        rows.append({"size": size, "count": a + b, "count_a": a, "count_b": b})
    return rows
