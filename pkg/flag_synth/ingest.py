from __future__ import annotations

import logging
import sys
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator, List, Optional, Tuple, Union

import pandas as pd

from .errors import EmptyDatasetError, EmptyDistributionError, InputError, ParseError
from .models import AttributeTable, InteractionDataset, Pivot, ProfileSizeDistribution

logger = logging.getLogger(__name__)

ML1M_SEP = "::"
_TRUE_TOKENS = {"1", "true", "t", "yes", "y"}
_FALSE_TOKENS = {"0", "false", "f", "no", "n"}


@dataclass
class ColumnMap:
    """Column layout for delimiter-separated interaction files.

    Columns are header names when `header` is set, else 0-based positions.
    """

    delimiter: str = ","
    entity_col: Union[str, int] = 0
    counterpart_col: Union[str, int] = 1
    header: bool = True


def norm_str(v) -> str:
    if v is None:
        return ""
    return str(v).strip()


def _decode(raw: bytes, line: int) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        # movies.dat in the public ML-1M archive has a few Latin-1 titles
        logger.debug("line %d is not UTF-8, decoding as latin-1", line)
        return raw.decode("latin-1")


def _ml1m_fields(stream: IO[bytes], expected: int) -> Iterator[Tuple[int, List[str]]]:
    for n, raw in enumerate(stream, start=1):
        text = _decode(raw, n).rstrip("\r\n")
        if not text.strip():
            continue
        fields = text.split(ML1M_SEP)
        if len(fields) != expected:
            raise ParseError(f"expected {expected} '::'-separated fields, got {len(fields)}", line=n)
        fields = [f.strip() for f in fields]
        if not fields[0]:
            raise ParseError("empty identifier", line=n)
        yield n, fields


def parse_movielens_ratings(stream: IO[bytes], *, dedup: bool = False) -> InteractionDataset:
    """Read `UserID::MovieID::Rating::Timestamp` lines; rating and time are dropped."""

    pairs: List[Tuple[str, str]] = []
    for n, fields in _ml1m_fields(stream, expected=4):
        if not fields[1]:
            raise ParseError("empty movie id", line=n)
        pairs.append((fields[0], fields[1]))

    dataset = InteractionDataset.from_pairs(pairs, dedup=dedup)
    logger.info(
        "ratings: %d interactions, %d users, %d items",
        len(dataset), dataset.n_entities, dataset.n_counterparts,
    )
    return dataset


def parse_movielens_users(stream: IO[bytes]) -> AttributeTable:
    """Read `UserID::Gender::Age::Occupation::Zip`; the flag is Gender == F."""

    entries = {}
    for n, fields in _ml1m_fields(stream, expected=5):
        gender = fields[1].upper()
        if gender not in {"M", "F"}:
            raise ParseError(f"unknown gender token {fields[1]!r}", line=n)
        if fields[0] in entries:
            raise ParseError(f"duplicate user id {fields[0]!r}", line=n)
        entries[fields[0]] = gender == "F"
    return AttributeTable(entries=entries, attribute_name="gender=F")


def parse_movielens_movies(stream: IO[bytes], genre: str) -> AttributeTable:
    """Read `MovieID::Title::Genre1|Genre2|...`; flag movies listing `genre` exactly."""

    entries = {}
    for n, fields in _ml1m_fields(stream, expected=3):
        if fields[0] in entries:
            raise ParseError(f"duplicate movie id {fields[0]!r}", line=n)
        entries[fields[0]] = genre in fields[2].split("|")
    return AttributeTable(entries=entries, attribute_name=f"genre={genre}")


def parse_generic_interactions(
    stream: IO[bytes],
    colmap: ColumnMap | None = None,
    *,
    dedup: bool = False,
) -> InteractionDataset:
    """Read a CSV/TSV interaction log with a configurable column layout."""

    colmap = colmap or ColumnMap()
    try:
        frame = pd.read_csv(
            stream,
            sep=colmap.delimiter,
            header=0 if colmap.header else None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        frame = pd.DataFrame()
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise ParseError(str(exc)) from exc

    if frame.empty:
        return InteractionDataset.from_pairs([], dedup=dedup)

    columns = []
    for col in (colmap.entity_col, colmap.counterpart_col):
        if isinstance(col, int):
            if not 0 <= col < len(frame.columns):
                raise ParseError(f"column {col} out of range ({len(frame.columns)} columns)", line=1, unit="row")
            columns.append(frame.columns[col])
        elif col in frame.columns:
            columns.append(col)
        else:
            raise ParseError(f"column {col!r} not found (have {list(frame.columns)})", line=1, unit="row")

    sub = frame[columns]
    missing = sub.isna() | (sub.apply(lambda s: s.str.strip()) == "")
    bad = missing.any(axis=1)
    if bad.any():
        # 1-based data row, header excluded
        row = int(bad.to_numpy().nonzero()[0][0]) + 1
        raise ParseError("missing entity or counterpart field", line=row, unit="row")

    pairs = list(zip(sub.iloc[:, 0].str.strip(), sub.iloc[:, 1].str.strip()))
    dataset = InteractionDataset.from_pairs(pairs, dedup=dedup)
    logger.info(
        "interactions: %d rows, %d entities, %d counterparts",
        len(dataset), dataset.n_entities, dataset.n_counterparts,
    )
    return dataset


def parse_attribute_csv(stream: IO[bytes], attribute_name: str = "flag") -> AttributeTable:
    """Read a two-column `entity_id,flag` table as written by `render_attribute_table`.

    The header row is optional; quoted ids may contain commas.
    """

    try:
        frame = pd.read_csv(
            stream,
            header=None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        return AttributeTable(entries={}, attribute_name=attribute_name)
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise ParseError(str(exc)) from exc

    if frame.shape[1] != 2:
        raise ParseError(f"expected 'entity_id,flag', got {frame.shape[1]} columns", line=1, unit="row")

    entries = {}
    for n, (raw_id, raw_flag) in enumerate(frame.itertuples(index=False, name=None), start=1):
        entity, value = norm_str(raw_id), norm_str(raw_flag)
        if n == 1 and entity == "entity_id":
            continue
        if not entity or pd.isna(raw_flag):
            raise ParseError("expected 'entity_id,flag'", line=n, unit="row")
        token = value.lower()
        if token in _TRUE_TOKENS:
            flag = True
        elif token in _FALSE_TOKENS:
            flag = False
        else:
            raise ParseError(f"flag must be binary, got {value!r}", line=n, unit="row")
        if entity in entries:
            raise ParseError(f"duplicate entity id {entity!r}", line=n, unit="row")
        entries[entity] = flag
    return AttributeTable(entries=entries, attribute_name=attribute_name)


def build_profiles(
    dataset: InteractionDataset,
    pivot: Pivot = Pivot.USER,
    max_size: Optional[int] = None,
) -> ProfileSizeDistribution:
    """Count interactions per entity; entities above `max_size` are removed entirely."""

    if len(dataset) == 0:
        raise EmptyDatasetError("dataset has no interactions")
    if max_size is not None and max_size < 1:
        raise EmptyDistributionError(f"max_size={max_size} removes every entity")

    source = dataset.swapped() if pivot is Pivot.ITEM else dataset
    sizes = Counter(entity for entity, _ in source.interactions)

    if max_size is not None:
        removed = [e for e, s in sizes.items() if s > max_size]
        for e in removed:
            del sizes[e]
        if removed:
            logger.info("removed %d %ss with more than %d interactions", len(removed), pivot.value, max_size)

    if not sizes:
        raise EmptyDistributionError("every entity was filtered out")
    return ProfileSizeDistribution.from_sizes(sizes, pivot=pivot)


@contextmanager
def open_input(path: str) -> Iterator[IO[bytes]]:
    """Open `path` for binary reading; `-` is standard input."""

    if path == "-":
        yield sys.stdin.buffer
        return
    p = Path(path)
    if not p.exists():
        raise InputError(f"Input file not found: {path}")
    try:
        with p.open("rb") as fh:
            yield fh
    except IsADirectoryError as exc:
        raise InputError(f"Input path is a directory: {path}") from exc
