"""Monthly aggregation of direction decisions into price sentiment indices.

The index for a month is (rise - fall) / (rise + fall + stable); decisions
labeled "Not related" are tallied but excluded from both numerator and
denominator. Months with no directional comment at all are emitted with a
null value rather than a fabricated 0.0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .corpus import Domain, IndustryClass, SurveyComment, filter_by_segment
from .ensemble import EnsembleDecision
from .errors import PipelineError
from .months import Month


class PsiError(PipelineError):
    pass


class EmptyDenominatorError(PsiError):
    """No rise/stable/fall decisions in the month."""


@dataclass(frozen=True)
class MonthlyCounts:
    month: Month
    rise: int = 0
    stable: int = 0
    fall: int = 0
    not_related: int = 0

    def __post_init__(self):
        for name in ("rise", "stable", "fall", "not_related"):
            if getattr(self, name) < 0:
                raise PsiError(f"negative {name} count in {self.month}")

    @property
    def total(self) -> int:
        return self.rise + self.stable + self.fall + self.not_related


@dataclass(frozen=True)
class PsiVariantSpec:
    name: str
    domain: Optional[Domain] = None
    industry: Optional[IndustryClass] = None
    target_index_name: Optional[str] = None


# The six segment definitions; target index names are metadata only, the
# reference series themselves are user-supplied files.
VARIANTS = {
    "general": PsiVariantSpec("general"),
    "consumer_general": PsiVariantSpec(
        "consumer_general", Domain.HOUSEHOLD, None, "Core Core CPI"
    ),
    "consumer_goods": PsiVariantSpec(
        "consumer_goods", Domain.HOUSEHOLD, IndustryClass.MANUFACTURING, "CPI (Goods)"
    ),
    "consumer_services": PsiVariantSpec(
        "consumer_services", Domain.HOUSEHOLD, IndustryClass.NON_MANUFACTURING, "CPI (Services)"
    ),
    "corporate_goods": PsiVariantSpec(
        "corporate_goods", Domain.CORPORATE, IndustryClass.MANUFACTURING, "CGPI"
    ),
    "corporate_services": PsiVariantSpec(
        "corporate_services", Domain.CORPORATE, IndustryClass.NON_MANUFACTURING, "SPPI"
    ),
}

_LABEL_FIELD = {"Rise": "rise", "Stable": "stable", "Fall": "fall", "Not related": "not_related"}


@dataclass(frozen=True)
class PsiPoint:
    month: Month
    psi: Optional[float]
    counts: MonthlyCounts


@dataclass(frozen=True)
class PsiSeries:
    variant: PsiVariantSpec
    points: tuple[PsiPoint, ...]

    def __post_init__(self):
        months = [p.month for p in self.points]
        if any(b <= a for a, b in zip(months, months[1:])):
            raise PsiError("series months must be strictly increasing")


def aggregate_monthly(labeled_months: Iterable[tuple[Month, str]]) -> list[MonthlyCounts]:
    """Tally (month, label) pairs into per-month counts, month-sorted."""
    tallies: dict[Month, dict[str, int]] = {}
    for month, label in labeled_months:
        if label not in _LABEL_FIELD:
            raise PsiError(f"label outside direction vocabulary: {label!r}")
        per_month = tallies.setdefault(month, {f: 0 for f in _LABEL_FIELD.values()})
        per_month[_LABEL_FIELD[label]] += 1
    return [MonthlyCounts(month=m, **tallies[m]) for m in sorted(tallies)]


def compute_psi(counts: MonthlyCounts) -> float:
    denominator = counts.rise + counts.fall + counts.stable
    if denominator == 0:
        raise EmptyDenominatorError(f"no directional comments in {counts.month}")
    return (counts.rise - counts.fall) / denominator


def build_index(
    decisions: Sequence[EnsembleDecision],
    comments_by_id: dict[str, SurveyComment],
    variant: PsiVariantSpec,
    mapping: Optional[dict[str, IndustryClass]] = None,
) -> PsiSeries:
    """Filter to the variant's segment, aggregate monthly, compute the index.

    Months whose decisions are all "Not related" become null points.
    """
    missing = [d.comment_id for d in decisions if d.comment_id not in comments_by_id]
    if missing:
        raise PsiError(f"decisions without matching comments: {missing[:5]}")
    by_id = {d.comment_id: d for d in decisions}
    if len(by_id) != len(decisions):
        raise PsiError("duplicate comment ids in decisions")
    comments = [comments_by_id[d.comment_id] for d in decisions]
    segment = filter_by_segment(comments, variant.domain, variant.industry, mapping)
    counts = aggregate_monthly((c.month, by_id[c.id].label) for c in segment)
    points = []
    for mc in counts:
        try:
            value = compute_psi(mc)
        except EmptyDenominatorError:
            value = None
        points.append(PsiPoint(month=mc.month, psi=value, counts=mc))
    return PsiSeries(variant=variant, points=tuple(points))


PSI_CSV_FIELDS = ("month", "variant", "psi", "rise", "stable", "fall", "not_related")


def psi_rows(series: PsiSeries) -> list[dict]:
    rows = []
    for p in series.points:
        rows.append(
            {
                "month": str(p.month),
                "variant": series.variant.name,
                "psi": "" if p.psi is None else repr(p.psi),
                "rise": p.counts.rise,
                "stable": p.counts.stable,
                "fall": p.counts.fall,
                "not_related": p.counts.not_related,
            }
        )
    return rows


def write_psi_csv(series_list: Sequence[PsiSeries], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(PSI_CSV_FIELDS))
        writer.writeheader()
        for series in series_list:
            writer.writerows(psi_rows(series))


def load_psi_csv(path, variant: Optional[str] = None) -> list[dict]:
    """Rows of a PSI CSV, optionally restricted to one variant."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.DictReader(fh)]
    if variant is not None:
        rows = [r for r in rows if r["variant"] == variant]
    return rows
