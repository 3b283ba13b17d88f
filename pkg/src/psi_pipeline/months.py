"""Calendar year-month value type used throughout the pipeline.

Months are the survey's native time unit; series alignment and lag
arithmetic work on a flat month index (year*12 + month).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import PipelineError

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")


class MonthParseError(PipelineError):
    pass


@dataclass(frozen=True, order=True)
class Month:
    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise MonthParseError(f"month out of range 1-12: {self.month}")

    @classmethod
    def parse(cls, text: str) -> "Month":
        m = _MONTH_RE.match(text.strip())
        if not m:
            raise MonthParseError(f"expected YYYY-MM, got {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    @classmethod
    def from_index(cls, index: int) -> "Month":
        return cls(index // 12, index % 12 + 1)

    @property
    def index(self) -> int:
        return self.year * 12 + self.month - 1

    def plus(self, months: int) -> "Month":
        return Month.from_index(self.index + months)

    def diff(self, other: "Month") -> int:
        """Signed number of months from `other` to self."""
        return self.index - other.index

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"
