"""Locale-free CSV writing with round-trip float formatting."""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence


def fmt(value) -> str:
    """17 significant digits for floats; integers and strings verbatim."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float) or hasattr(value, "dtype"):
        v = float(value)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        if hasattr(value, "dtype") and value.dtype.kind in "iu":
            return str(int(value))
        return format(v, ".17g")
    return str(value)


def write_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence],
              comments: Sequence[str] = ()) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="ascii") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def read_csv(path: Path | str) -> tuple[list[str], list[list[str]]]:
    """Header and rows of a CSV, skipping ``#`` comment lines."""
    with Path(path).open(newline="", encoding="ascii") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    return header, [row for row in reader]
