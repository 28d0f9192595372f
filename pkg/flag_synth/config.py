from __future__ import annotations

import logging
import os
import secrets
from dataclasses import dataclass, fields
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional

from dotenv import dotenv_values

from .errors import InputError, ParameterError
from .models import BetaMode, LegalityMode, Pivot, Support

logger = logging.getLogger(__name__)

SEED_ENV = "FLAG_SYNTH_SEED"
DEFAULT_SEED = 20190520


class InputFormat(str, Enum):
    ML1M_RATINGS = "ml1m-ratings"
    ML1M_USERS = "ml1m-users"
    ML1M_MOVIES = "ml1m-movies"
    CSV = "csv"


class SupportChoice(str, Enum):
    TRUNCATED = "truncated"
    INFINITE = "infinite"

    def to_support(self) -> Support:
        return Support.TRUNCATED if self is SupportChoice.TRUNCATED else Support.INFINITE


class BetaModeChoice(str, Enum):
    FIXED = "fixed"
    SEARCHED = "searched"

    def to_beta_mode(self) -> BetaMode:
        return BetaMode.FIXED if self is BetaModeChoice.FIXED else BetaMode.SEARCHED


@dataclass
class RunConfig:
    """Options of one CLI invocation after merging flags, config file and env."""

    input: Optional[str] = None
    format: InputFormat = InputFormat.ML1M_RATINGS
    pivot: Pivot = Pivot.USER
    max_size: Optional[int] = None
    dedup: bool = False
    delimiter: str = ","
    entity_col: str = "0"
    counterpart_col: str = "1"
    header: bool = True
    alpha: Optional[float] = None
    beta: Optional[float] = None
    seed: str = str(DEFAULT_SEED)
    legality: LegalityMode = LegalityMode.STRICT
    out: str = "output"
    workers: int = 1
    # estimate
    xmin: int = 1
    scan_xmin: bool = False
    support: SupportChoice = SupportChoice.TRUNCATED
    # check / fit grids; None means the command's own default
    alpha_min: Optional[float] = None
    alpha_max: Optional[float] = None
    alpha_step: Optional[float] = None
    beta_mode: BetaModeChoice = BetaModeChoice.FIXED
    beta_min: float = 0.01
    beta_max: float = 1.0
    beta_step: float = 0.01
    bins_per_decade: int = 10
    surface: bool = False
    # attribute table for stats / fit
    attributes: Optional[str] = None
    attribute_format: InputFormat = InputFormat.CSV
    genre: str = "Documentary"
    allow_partial: bool = False

    def validate(self) -> "RunConfig":
        if self.max_size is not None and self.max_size < 1:
            raise ParameterError(f"--max-size must be >= 1, got {self.max_size}")
        if self.alpha is not None and not self.alpha >= 0:
            raise ParameterError(f"--alpha must be >= 0, got {self.alpha}")
        if self.beta is not None and not 0 < self.beta <= 1:
            raise ParameterError(f"--beta must be in (0, 1], got {self.beta}")
        if self.workers < 1:
            raise ParameterError(f"--workers must be >= 1, got {self.workers}")
        if self.xmin < 1:
            raise ParameterError(f"--xmin must be >= 1, got {self.xmin}")
        for name in ("alpha_step", "beta_step"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ParameterError(f"--{name.replace('_', '-')} must be > 0, got {v}")
        if self.bins_per_decade < 1:
            raise ParameterError(f"--bins-per-decade must be >= 1, got {self.bins_per_decade}")
        if len(self.delimiter) != 1:
            raise ParameterError(f"--delimiter must be a single character, got {self.delimiter!r}")
        # resolve once so `random` is drawn a single time per run
        self.seed = str(parse_seed(self.seed))
        return self

    def resolved_seed(self) -> int:
        return int(self.seed)

    def column(self, value: str) -> int | str:
        return int(value) if value.isdigit() else value


def parse_bool(v: str) -> bool:
    token = v.strip().lower()
    if token in {"1", "true", "yes", "on"}:
        return True
    if token in {"0", "false", "no", "off", ""}:
        return False
    raise ParameterError(f"not a boolean: {v!r}")


def parse_delimiter(v: str) -> str:
    return {"\\t": "\t", "tab": "\t", "comma": ",", "semicolon": ";"}.get(v, v)


def parse_seed(v: str | int) -> int:
    if isinstance(v, int):
        seed = v
    elif str(v).strip().lower() == "random":
        seed = secrets.randbits(64)
        logger.info("drew random seed %d", seed)
    else:
        try:
            seed = int(str(v).strip(), 0)
        except ValueError as exc:
            raise ParameterError(f"--seed must be an integer or 'random', got {v!r}") from exc
    if not 0 <= seed < 2 ** 64:
        raise ParameterError(f"--seed must fit in 64 unsigned bits, got {seed}")
    return seed


def _optional(conv: Callable[[str], Any]) -> Callable[[str], Any]:
    return lambda v: None if v.strip().lower() in {"", "none"} else conv(v)


_CONVERTERS: Dict[str, Callable[[str], Any]] = {
    "input": str,
    "format": InputFormat,
    "pivot": Pivot,
    "max_size": _optional(int),
    "dedup": parse_bool,
    "delimiter": parse_delimiter,
    "entity_col": str,
    "counterpart_col": str,
    "header": parse_bool,
    "alpha": _optional(float),
    "beta": _optional(float),
    "seed": str,
    "legality": LegalityMode,
    "out": str,
    "workers": int,
    "xmin": int,
    "scan_xmin": parse_bool,
    "support": SupportChoice,
    "alpha_min": _optional(float),
    "alpha_max": _optional(float),
    "alpha_step": _optional(float),
    "beta_mode": BetaModeChoice,
    "beta_min": float,
    "beta_max": float,
    "beta_step": float,
    "bins_per_decade": int,
    "surface": parse_bool,
    "attributes": _optional(str),
    "attribute_format": InputFormat,
    "genre": str,
    "allow_partial": parse_bool,
}


def load_config_file(path: str) -> Dict[str, Any]:
    """Parse a key=value experiment manifest into typed RunConfig fields."""

    p = Path(path)
    if not p.is_file():
        raise InputError(f"Config file not found: {path}")
    values: Dict[str, Any] = {}
    for raw_key, raw_value in dotenv_values(p).items():
        key = raw_key.strip().lower().replace("-", "_")
        if key not in _CONVERTERS:
            raise ParameterError(f"unknown config key {raw_key!r} in {path}")
        try:
            values[key] = _CONVERTERS[key](raw_value or "")
        except ValueError as exc:
            raise ParameterError(f"bad value for {raw_key!r} in {path}: {raw_value!r}") from exc
    return values


def resolve_config(flags: Mapping[str, Any], config_path: Optional[str] = None) -> RunConfig:
    """Merge sources: flag > config file > FLAG_SYNTH_SEED (seed only) > default."""

    merged: Dict[str, Any] = {}
    env_seed = os.environ.get(SEED_ENV)
    if env_seed:
        merged["seed"] = env_seed
    if config_path:
        merged.update(load_config_file(config_path))
    merged.update({k: v for k, v in flags.items() if v is not None})

    known = {f.name for f in fields(RunConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ParameterError(f"unknown options: {sorted(unknown)}")
    if "delimiter" in merged:
        merged["delimiter"] = parse_delimiter(merged["delimiter"])
    return RunConfig(**merged).validate()
