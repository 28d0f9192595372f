from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, field
from functools import cached_property
from enum import Enum
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from .errors import ConsistencyError, EmptyDistributionError, ParameterError


class Pivot(str, Enum):
    USER = "user"
    ITEM = "item"


class LegalityMode(str, Enum):
    STRICT = "strict"
    CLAMP = "clamp"


class Support(str, Enum):
    TRUNCATED = "truncated_at_k"
    INFINITE = "infinite"


class BetaMode(str, Enum):
    FIXED = "fixed_to_observed_fraction"
    SEARCHED = "searched"


class Label(str, Enum):
    A = "A"
    B = "B"


@dataclass(frozen=True)
class InteractionDataset:
    """Raw (entity, counterpart) events; duplicates kept unless `dedup` is set."""

    interactions: Tuple[Tuple[str, str], ...]
    dedup: bool = False

    def __post_init__(self) -> None:
        for n, (entity, counterpart) in enumerate(self.interactions, start=1):
            if not entity or not counterpart:
                raise ConsistencyError(f"interaction {n} has an empty identifier")

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[str, str]], dedup: bool = False) -> "InteractionDataset":
        pairs = list(pairs)
        if dedup:
            pairs = list(dict.fromkeys(pairs))
        return cls(interactions=tuple(pairs), dedup=dedup)

    def __len__(self) -> int:
        return len(self.interactions)

    @property
    def n_entities(self) -> int:
        return len({e for e, _ in self.interactions})

    @property
    def n_counterparts(self) -> int:
        return len({c for _, c in self.interactions})

    def swapped(self) -> "InteractionDataset":
        return InteractionDataset(
            interactions=tuple((c, e) for e, c in self.interactions),
            dedup=self.dedup,
        )


@dataclass(frozen=True)
class AttributeTable:
    """Binary protected flag per entity (True = protected)."""

    entries: Dict[str, bool]
    attribute_name: str

    def __post_init__(self) -> None:
        for entity_id, flag in self.entries.items():
            if not isinstance(flag, (bool, np.bool_)):
                raise ConsistencyError(f"flag for {entity_id!r} is not boolean: {flag!r}")

    @property
    def n_flagged(self) -> int:
        return sum(1 for v in self.entries.values() if v)

    def to_rows(self) -> List[Dict[str, Any]]:
        return [
            {"entity_id": entity_id, "flag": int(flag)}
            for entity_id, flag in sorted(self.entries.items())
        ]


@dataclass(frozen=True)
class ProfileSizeDistribution:
    """S(i) counts plus the per-entity sizes they were built from."""

    counts: Dict[int, int]
    sizes: Dict[str, int]
    pivot: Pivot = Pivot.USER

    def __post_init__(self) -> None:
        if not self.sizes:
            raise EmptyDistributionError("profile-size distribution has no entities")
        if any(i < 1 or c < 0 for i, c in self.counts.items()):
            raise ConsistencyError("profile sizes must be >= 1 and counts >= 0")
        if Counter(self.sizes.values()) != +Counter(self.counts):
            raise ConsistencyError("counts do not match the per-entity sizes")

    @classmethod
    def from_sizes(cls, sizes: Mapping[str, int], pivot: Pivot = Pivot.USER) -> "ProfileSizeDistribution":
        ordered = {entity_id: int(sizes[entity_id]) for entity_id in sorted(sizes)}
        counts = dict(sorted(Counter(ordered.values()).items()))
        return cls(counts=counts, sizes=ordered, pivot=pivot)

    @classmethod
    def from_counts(cls, counts: Mapping[int, int], pivot: Pivot = Pivot.USER) -> "ProfileSizeDistribution":
        """Synthesize entity ids `s<size>_<n>` for a bare S(i) table."""
        # zero-padded so generation order is already the sorted order
        sizes = {
            f"s{size:07d}_{n:07d}": int(size)
            for size, count in sorted(counts.items())
            for n in range(int(count))
        }
        return cls(counts=dict(sorted(counts.items())), sizes=sizes, pivot=pivot)

    @property
    def k(self) -> int:
        return max(i for i, c in self.counts.items() if c > 0)

    @property
    def min_size(self) -> int:
        return min(i for i, c in self.counts.items() if c > 0)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def total_interactions(self) -> int:
        return sum(i * c for i, c in self.counts.items())

    @cached_property
    def _count_vector(self) -> np.ndarray:
        vec = np.zeros(self.k + 1, dtype=np.int64)
        for i, c in self.counts.items():
            if c:
                vec[i] = c
        vec.setflags(write=False)
        return vec

    def count_vector(self) -> np.ndarray:
        """S as a read-only integer array indexed by size, position 0 unused."""
        return self._count_vector

    def restrict(self, entity_ids: Iterable[str]) -> "ProfileSizeDistribution":
        keep = set(entity_ids)
        return ProfileSizeDistribution.from_sizes(
            {e: s for e, s in self.sizes.items() if e in keep}, pivot=self.pivot
        )


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    xmin: int
    ks_distance: float
    support: Support
    n_tail: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha,
            "xmin": self.xmin,
            "ks": self.ks_distance,
            "support": self.support.value,
            "n_tail": self.n_tail,
        }


@dataclass(frozen=True)
class FlagParams:
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise ParameterError(f"alpha must be >= 0, got {self.alpha}")
        if not np.isfinite(self.beta) or not 0 < self.beta <= 1:
            raise ParameterError(f"beta must be in (0, 1], got {self.beta}")


@dataclass(frozen=True, eq=False)
class MembershipModel:
    """Per-size group-B probabilities p_j for j = 1..k (index j - 1)."""

    probabilities: np.ndarray
    params: FlagParams
    dist: ProfileSizeDistribution
    legality_mode: LegalityMode

    @property
    def k(self) -> int:
        return len(self.probabilities)

    def probability(self, size: int) -> float:
        if not 1 <= size <= self.k:
            raise ConsistencyError(f"profile size {size} is outside the model support 1..{self.k}")
        return float(self.probabilities[size - 1])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": self.params.alpha,
            "beta": self.params.beta,
            "legality_mode": self.legality_mode.value,
            "k": self.k,
            "probabilities": [float(p) for p in self.probabilities],
        }


@dataclass(frozen=True)
class ExpectedCount:
    size: int
    expected_b: float
    expected_a: float

    @property
    def total(self) -> float:
        return self.expected_a + self.expected_b


@dataclass
class AttributeAssignment:
    labels: Dict[str, Label]
    seed: int
    params: FlagParams
    generated_at_size: Dict[str, int]
    legality_mode: LegalityMode = LegalityMode.STRICT

    def count(self, label: Label) -> int:
        return sum(1 for v in self.labels.values() if v is label)

    def to_rows(self) -> List[Dict[str, str]]:
        return [{"entity_id": e, "label": lab.value} for e, lab in self.labels.items()]

    def to_attribute_table(self, attribute_name: str = "flag_group_b") -> AttributeTable:
        return AttributeTable(
            entries={e: lab is Label.B for e, lab in self.labels.items()},
            attribute_name=attribute_name,
        )

    def sidecar(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "alpha": self.params.alpha,
            "beta": self.params.beta,
            "legality_mode": self.legality_mode.value,
            "counts": {"A": self.count(Label.A), "B": self.count(Label.B)},
        }


@dataclass(frozen=True)
class RealizedStats:
    count_a: int
    count_b: int
    per_size: Dict[int, Tuple[int, int]]  # size -> (A, B)
    mean_size_a: Optional[float]
    mean_size_b: Optional[float]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class DistributionSummary:
    mean: float
    median: int
    max: int
    total_entities: int
    total_interactions: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class ObservedGroupDistribution:
    """Flagged-entity counts per profile size, bound to `dist`."""

    counts: Dict[int, float]  # integers for real attributes; floats allowed for expected counts
    dist: ProfileSizeDistribution
    attribute_name: str = ""

    def __post_init__(self) -> None:
        for size, c in self.counts.items():
            if c < 0 or c > self.dist.counts.get(size, 0):
                raise ConsistencyError(f"flagged count {c} at size {size} exceeds S({size})")

    @property
    def total_flagged(self) -> float:
        return sum(self.counts.values())

    @property
    def fraction(self) -> float:
        return self.total_flagged / self.dist.total

    def count_vector(self) -> np.ndarray:
        vec = np.zeros(self.dist.k + 1, dtype=np.float64)
        for i, c in self.counts.items():
            if c:
                vec[i] = c
        return vec


@dataclass
class FitResult:
    alpha: float
    beta: float
    objective: float
    beta_mode: BetaMode
    grid: Dict[str, Any]
    beta_max_at_alpha: Dict[float, float] = field(default_factory=dict)
    surface: Optional[List[Tuple[float, float, float]]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "objective": self.objective,
            "beta_mode": self.beta_mode.value,
            "grid": self.grid,
            "beta_max_at_alpha": {f"{a:g}": b for a, b in self.beta_max_at_alpha.items()},
        }
