"""Monthly time series container and transforms."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from ..errors import PipelineError
from ..months import Month


class SeriesError(PipelineError):
    pass


@dataclass(frozen=True)
class TimeSeries:
    name: str
    points: tuple[tuple[Month, float], ...]

    def __post_init__(self):
        months = [m for m, _ in self.points]
        for a, b in zip(months, months[1:]):
            if b <= a:
                raise SeriesError(f"{self.name}: months not strictly increasing at {b}")
        for m, v in self.points:
            if not math.isfinite(v):
                raise SeriesError(f"{self.name}: non-finite value at {m}: {v}")

    def __len__(self) -> int:
        return len(self.points)

    def by_index(self) -> dict[int, float]:
        return {m.index: v for m, v in self.points}

    @classmethod
    def from_pairs(cls, name: str, pairs) -> "TimeSeries":
        ordered = sorted(((m, float(v)) for m, v in pairs), key=lambda p: p[0])
        return cls(name, tuple(ordered))


def load_series_csv(path, name: str | None = None) -> TimeSeries:
    """Read a `month,value` CSV; duplicate months are a load error."""
    path = Path(path)
    if not path.exists():
        raise SeriesError(f"series file not found: {path}")
    seen: set[str] = set()
    pairs = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"month", "value"} <= set(reader.fieldnames):
            raise SeriesError(f"{path}: expected header with month,value columns")
        for row in reader:
            month_text = row["month"].strip()
            if month_text in seen:
                raise SeriesError(f"{path}: duplicate month {month_text}")
            seen.add(month_text)
            try:
                value = float(row["value"])
            except ValueError as exc:
                raise SeriesError(f"{path}: bad value for {month_text}: {row['value']!r}") from exc
            pairs.append((Month.parse(month_text), value))
    return TimeSeries.from_pairs(name or path.stem, pairs)


def write_series_csv(series: TimeSeries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["month", "value"])
        for m, v in series.points:
            writer.writerow([str(m), repr(v)])


TRANSFORMS = ("level", "yoy_pct", "mom_pct")


def transform_series(series: TimeSeries, mode: str) -> TimeSeries:
    """level (identity), yoy_pct, or mom_pct; undefined points are omitted.

    yoy_pct(t) = 100 * (x_t / x_{t-12} - 1), mom_pct with a 1-month base.
    """
    if mode == "level":
        return series
    if mode not in TRANSFORMS:
        raise SeriesError(f"unknown transform {mode!r}, expected one of {TRANSFORMS}")
    step = 12 if mode == "yoy_pct" else 1
    values = series.by_index()
    pairs = []
    for m, v in series.points:
        base = values.get(m.index - step)
        if base is None:
            continue
        if base == 0:
            raise SeriesError(f"{series.name}: zero base value {step} months before {m}")
        pairs.append((m, 100.0 * (v / base - 1.0)))
    return TimeSeries(f"{series.name}:{mode}", tuple(pairs))
