"""CSV/JSON emission with reproducible floating-point formatting."""

from __future__ import annotations

import json
import math

import numpy as np
from pathlib import Path
from typing import Iterable, Mapping, Sequence


def format_value(x) -> str:
    """Shortest round-trip decimal form (<= 17 significant digits) for floats."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)  # numpy scalars repr as np.float64(...) since numpy 2
        if math.isnan(x):
            return "nan"
        return repr(x)
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def write_csv(path, columns: Sequence[str], rows: Iterable[Mapping]) -> None:
    """Write rows (dicts) under a fixed column order; deterministic bytes."""
    path = Path(path)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_value(row.get(c, "")) for c in columns))
    path.write_text("\n".join(lines) + "\n")


def append_csv_section(path, columns: Sequence[str], rows: Iterable[Mapping]) -> None:
    """Append a second header+rows section (blank-line separated)."""
    path = Path(path)
    lines = ["", ",".join(columns)]
    for row in rows:
        lines.append(",".join(format_value(row.get(c, "")) for c in columns))
    with path.open("a") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
