"""Serialization helpers: complex numbers, count records, sweep tables.

Machine-readable output (JSON, CSV) keeps every float at full repr
precision; the pretty form rounds to 6 significant digits.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict
from typing import Iterable

from .estimation import SWEEP_COLUMNS, SweepRow
from .state import StateVector


def _clean(x: float, digits: int) -> float:
    x = float(f"{x:.{digits}g}")
    return 0.0 if x == 0 else x  # drop negative zero


def fmt_complex(z: complex, digits: int = 6) -> str:
    """``re+imi`` with `digits` significant digits."""
    re, im = _clean(z.real, digits), _clean(z.imag, digits)
    return f"{re:.{digits}g}{im:+.{digits}g}i"


def complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def state_to_json(state: StateVector) -> list[list[float]]:
    return [complex_pair(a) for a in state.amplitudes]


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False)


def sweep_to_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        d = asdict(row)
        writer.writerow(repr(d[c]) if isinstance(d[c], float) else str(d[c]) for c in SWEEP_COLUMNS)
    return buf.getvalue()


def sweep_to_jsonl(rows: Iterable[SweepRow]) -> str:
    lines = []
    for row in rows:
        d = {k: _json_safe(v) for k, v in asdict(row).items()}
        lines.append(json.dumps(d, allow_nan=False))
    return "\n".join(lines) + "\n"


def table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    fmt = "  ".join(f"{{:>{w}}}" for w in widths)
    return "\n".join(fmt.format(*r) for r in [header, *rows])
