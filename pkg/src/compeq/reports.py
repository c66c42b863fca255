"""Result rows and their CSV form.

Every row carries its own verdict. Metric names starting with ``min:``
must reach the threshold; all others must stay at or below it.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

RESULT_HEADER = ("experiment", "n", "metric", "subject", "value", "radius", "threshold", "pass")


def fmt(x) -> str:
    """Fixed, platform-independent number formatting."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.6f}"


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    n: int
    metric: str
    subject: str
    value: float
    radius: float
    threshold: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite value in {self.metric}")

    @property
    def lower_bound(self) -> bool:
        return self.metric.startswith("min:")

    @property
    def passed(self) -> bool:
        return self.value >= self.threshold if self.lower_bound else self.value <= self.threshold

    def cells(self) -> tuple:
        return (self.experiment, self.n, self.metric, self.subject, fmt(float(self.value)), fmt(float(self.radius)),
                fmt(float(self.threshold)), fmt(self.passed))


def write_csv(rows: Iterable, header: Sequence[str], out: IO[str]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r.cells())


def to_csv(rows: Iterable, header: Sequence[str] = RESULT_HEADER) -> str:
    buf = io.StringIO()
    write_csv(rows, header, buf)
    return buf.getvalue()
