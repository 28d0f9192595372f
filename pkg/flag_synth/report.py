from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .models import AttributeTable


def _jsonable(o: Any) -> Any:
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"Object of type {type(o).__name__} is not JSON serializable")


def render_json(data: Mapping[str, Any]) -> str:
    return json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True, default=_jsonable) + "\n"


def render_csv(
    rows: Iterable[Mapping[str, Any]],
    fieldnames: Sequence[str],
    footer: Optional[List[str]] = None,
) -> str:
    """CSV text with a header row; None becomes an empty field.

    `footer` lines are appended as `# ` comments.
    """
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: _cell(row.get(k)) for k in fieldnames})
    for line in footer or []:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def _cell(v: Any) -> Any:
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    return v


def _stage(path: Path, text: str) -> Path:
    """Write `text` to a temp file next to `path` and return the temp path."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return Path(tmp)


def atomic_write_text(path: Path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over `path`."""
    os.replace(_stage(path, text), path)


def write_outputs(out_dir: str | Path, files: Mapping[str, str]) -> Dict[str, str]:
    """Write every rendered file under `out_dir`; returns name -> path.

    All files are staged before the first rename, so a failed write leaves
    the previous set in place.
    """
    out = Path(out_dir)
    staged: List[Tuple[Path, Path]] = []
    try:
        for name, text in files.items():
            target = out / name
            staged.append((_stage(target, text), target))
    except BaseException:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise
    for tmp, target in staged:
        os.replace(tmp, target)
    return {name: str(out / name) for name in files}


def render_attribute_table(table: AttributeTable) -> str:
    """`entity_id,flag` CSV, readable back with `parse_attribute_csv`."""
    return render_csv(table.to_rows(), ["entity_id", "flag"])
