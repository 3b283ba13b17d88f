"""Survey comment corpus: loading, validation, segmentation, splitting.

Comment files are JSONL (one object per line) or CSV with a header row,
keys: id, month "YYYY-MM", domain, industry, text, kind. Domain and kind
arrive as free text and are canonicalized through small alias tables.
Industry strings are mapped to manufacturing / non-manufacturing through
a user-supplied two-column CSV after parenthesized qualifiers are removed.
"""

from __future__ import annotations

import csv
import io
import json
import random
import re
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import PipelineError
from .months import Month, MonthParseError


class CorpusError(PipelineError):
    pass


class RecordError(CorpusError):
    """A single record failed validation; carries its line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownIndustryError(CorpusError):
    pass


class Domain(str, Enum):
    HOUSEHOLD = "household"
    CORPORATE = "corporate"


class SurveyKind(str, Enum):
    CURRENT = "current"
    FUTURE = "future"


class IndustryClass(str, Enum):
    MANUFACTURING = "manufacturing"
    NON_MANUFACTURING = "non_manufacturing"
    UNMAPPED = "unmapped"


class Relevance(str, Enum):
    PRICE_RELATED = "price_related"
    NOT_PRICE_RELATED = "not_price_related"


class Direction(str, Enum):
    RISE = "rise"
    STABLE = "stable"
    FALL = "fall"
    NOT_RELATED = "not_related"


# Free-text forms seen in published survey extracts, canonicalized here so
# the mapping knowledge lives in data rather than parsing code.
DOMAIN_ALIASES = {
    "household": Domain.HOUSEHOLD,
    "household trends": Domain.HOUSEHOLD,
    "household activity": Domain.HOUSEHOLD,
    "consumer": Domain.HOUSEHOLD,
    "corporate": Domain.CORPORATE,
    "corporate trends": Domain.CORPORATE,
    "corporate activity": Domain.CORPORATE,
    "business": Domain.CORPORATE,
}

KIND_ALIASES = {
    "current": SurveyKind.CURRENT,
    "current conditions": SurveyKind.CURRENT,
    "future": SurveyKind.FUTURE,
    "future outlook": SurveyKind.FUTURE,
    "outlook": SurveyKind.FUTURE,
}

RELEVANCE_ALIASES = {
    "price_related": Relevance.PRICE_RELATED,
    "related": Relevance.PRICE_RELATED,
    "yes": Relevance.PRICE_RELATED,
    "true": Relevance.PRICE_RELATED,
    "1": Relevance.PRICE_RELATED,
    "not_price_related": Relevance.NOT_PRICE_RELATED,
    "not_related": Relevance.NOT_PRICE_RELATED,
    "no": Relevance.NOT_PRICE_RELATED,
    "false": Relevance.NOT_PRICE_RELATED,
    "0": Relevance.NOT_PRICE_RELATED,
}

# Respondents commented from 2001 onward at full coverage; earlier months
# are dropped unless the caller widens the window.
DEFAULT_MIN_MONTH = Month(2001, 1)

_FIELDS = ("id", "month", "domain", "industry", "text", "kind")


@dataclass(frozen=True)
class SurveyComment:
    id: str
    month: Month
    domain: Domain
    industry_raw: str
    text: str
    survey_kind: SurveyKind


@dataclass(frozen=True)
class LabeledComment:
    comment: SurveyComment
    relevance: Optional[Relevance] = None
    direction: Optional[Direction] = None

    def __post_init__(self):
        if self.relevance is None and self.direction is None:
            raise CorpusError(
                f"labeled comment {self.comment.id}: needs relevance or direction"
            )


@dataclass(frozen=True)
class SplitSpec:
    train_ratio: float
    dev_ratio: float
    test_ratio: float
    seed: int

    def __post_init__(self):
        for name, r in (
            ("train_ratio", self.train_ratio),
            ("dev_ratio", self.dev_ratio),
            ("test_ratio", self.test_ratio),
        ):
            if not 0.0 < r < 1.0:
                raise CorpusError(f"{name} must be in (0,1), got {r}")
        total = self.train_ratio + self.dev_ratio + self.test_ratio
        if abs(total - 1.0) > 1e-9:
            raise CorpusError(f"split ratios must sum to 1, got {total}")


def _canonical(value: str, aliases: dict, what: str, line: int):
    key = value.strip().lower()
    if key not in aliases:
        raise RecordError(line, f"unrecognized {what}: {value!r}")
    return aliases[key]


def _parse_record(rec: dict, line: int, min_month: Optional[Month]) -> Optional[SurveyComment]:
    for field in _FIELDS:
        if field not in rec or rec[field] is None:
            raise RecordError(line, f"missing field {field!r}")
    text = str(rec["text"]).strip()
    if not text:
        raise RecordError(line, "empty text")
    try:
        month = Month.parse(str(rec["month"]))
    except MonthParseError as exc:
        raise RecordError(line, str(exc)) from exc
    comment = SurveyComment(
        id=str(rec["id"]),
        month=month,
        domain=_canonical(str(rec["domain"]), DOMAIN_ALIASES, "domain", line),
        industry_raw=str(rec["industry"]),
        text=text,
        survey_kind=_canonical(str(rec["kind"]), KIND_ALIASES, "survey kind", line),
    )
    if min_month is not None and comment.month < min_month:
        return None
    return comment


def _iter_records(path: Path, format: str):
    """Yield (line_number, record_dict) pairs in file order."""
    if format == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise RecordError(line_no, f"invalid JSON: {exc.msg}") from exc
                if not isinstance(rec, dict):
                    raise RecordError(line_no, "expected a JSON object")
                yield line_no, rec
    elif format == "csv":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise CorpusError(f"{path}: empty CSV, no header row")
            missing = [f for f in _FIELDS if f not in reader.fieldnames]
            if missing:
                raise CorpusError(f"{path}: header missing columns {missing}")
            for rec in reader:
                # DictReader counts the header, so data rows start at line 2.
                yield reader.line_num, rec
    else:
        raise CorpusError(f"unknown corpus format {format!r} (expected csv or jsonl)")


def load_comments(
    path,
    format: str = "jsonl",
    min_month: Optional[Month] = DEFAULT_MIN_MONTH,
) -> list[SurveyComment]:
    """Load and validate comments, preserving file order.

    Records before `min_month` are dropped; pass min_month=None to keep all.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"comment file not found: {path}")
    comments = []
    for line_no, rec in _iter_records(path, format):
        comment = _parse_record(rec, line_no, min_month)
        if comment is not None:
            comments.append(comment)
    return comments


def load_labeled_comments(
    path,
    format: str = "jsonl",
    min_month: Optional[Month] = DEFAULT_MIN_MONTH,
) -> list[LabeledComment]:
    """Load comments carrying optional `relevance` / `direction` label keys."""
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"labeled comment file not found: {path}")
    labeled = []
    for line_no, rec in _iter_records(path, format):
        comment = _parse_record(rec, line_no, min_month)
        if comment is None:
            continue
        relevance = None
        direction = None
        if rec.get("relevance"):
            relevance = _canonical(str(rec["relevance"]), RELEVANCE_ALIASES, "relevance", line_no)
        if rec.get("direction"):
            key = str(rec["direction"]).strip().lower()
            try:
                direction = Direction(key)
            except ValueError:
                raise RecordError(line_no, f"unrecognized direction: {rec['direction']!r}")
        if relevance is None and direction is None:
            raise RecordError(line_no, "labeled record needs relevance or direction")
        labeled.append(LabeledComment(comment, relevance, direction))
    return labeled


def comment_to_record(comment: SurveyComment, **extra) -> dict:
    rec = {
        "id": comment.id,
        "month": str(comment.month),
        "domain": comment.domain.value,
        "industry": comment.industry_raw,
        "text": comment.text,
        "kind": comment.survey_kind.value,
    }
    rec.update(extra)
    return rec


def write_comments(comments: Iterable[SurveyComment], path, format: str = "jsonl") -> None:
    path = Path(path)
    if format == "jsonl":
        buf = io.StringIO()
        for c in comments:
            buf.write(json.dumps(comment_to_record(c), ensure_ascii=False))
            buf.write("\n")
        path.write_text(buf.getvalue(), encoding="utf-8")
    elif format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(_FIELDS))
            writer.writeheader()
            for c in comments:
                writer.writerow(comment_to_record(c))
    else:
        raise CorpusError(f"unknown corpus format {format!r} (expected csv or jsonl)")


# Innermost-first so nested qualifiers unwrap one layer per pass; ASCII and
# full-width pairs each match their own kind.
_PAREN_RE = re.compile(r"\([^()（）]*\)|（[^()（）]*）")


def strip_parentheses(text: str) -> str:
    """Remove all parenthesized substrings, repeating until none remain."""
    prev = None
    while prev != text:
        prev = text
        text = _PAREN_RE.sub("", text)
    return text.strip()


def normalize_industry(
    industry_raw: str,
    mapping: dict[str, IndustryClass],
    strict: bool = False,
) -> IndustryClass:
    """Strip parenthesized qualifiers, then look the name up in `mapping`."""
    key = strip_parentheses(industry_raw)
    if key in mapping:
        return mapping[key]
    if strict:
        raise UnknownIndustryError(f"industry not in mapping: {key!r} (from {industry_raw!r})")
    return IndustryClass.UNMAPPED


def load_industry_mapping(path) -> dict[str, IndustryClass]:
    """Load the two-column CSV `industry,class` mapping file."""
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"industry mapping file not found: {path}")
    mapping: dict[str, IndustryClass] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["industry", "class"]:
            raise CorpusError(f"{path}: expected header 'industry,class'")
        for line_no, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) < 2:
                raise RecordError(line_no, f"expected 2 columns, got {len(row)}")
            name = row[0].strip()
            klass = row[1].strip().lower()
            if klass == "manufacturing":
                mapping[name] = IndustryClass.MANUFACTURING
            elif klass == "non_manufacturing":
                mapping[name] = IndustryClass.NON_MANUFACTURING
            else:
                raise RecordError(line_no, f"class must be manufacturing or non_manufacturing, got {row[1]!r}")
    return mapping


def split_dataset(
    data: Sequence[LabeledComment],
    spec: SplitSpec,
) -> tuple[list[LabeledComment], list[LabeledComment], list[LabeledComment]]:
    """Deterministic unstratified shuffle-split.

    Dev and test take the floor of their shares; the remainder goes to train.
    """
    if len(data) < 3:
        raise CorpusError(f"need at least 3 items to split, got {len(data)}")
    n = len(data)
    n_dev = int(n * spec.dev_ratio)
    n_test = int(n * spec.test_ratio)
    n_train = n - n_dev - n_test
    order = list(range(n))
    random.Random(spec.seed).shuffle(order)
    train = [data[i] for i in order[:n_train]]
    dev = [data[i] for i in order[n_train : n_train + n_dev]]
    test = [data[i] for i in order[n_train + n_dev :]]
    return train, dev, test


def filter_by_segment(
    comments: Iterable[SurveyComment],
    domain: Optional[Domain] = None,
    industry: Optional[IndustryClass] = None,
    mapping: Optional[dict[str, IndustryClass]] = None,
) -> list[SurveyComment]:
    """Keep comments matching all provided criteria, preserving order.

    When an industry filter is set, comments whose industry is not in the
    mapping are excluded (never matched leniently).
    """
    if industry is not None and mapping is None:
        raise CorpusError("industry filter requires an industry mapping")
    out = []
    for c in comments:
        if domain is not None and c.domain != domain:
            continue
        if industry is not None:
            klass = normalize_industry(c.industry_raw, mapping, strict=False)
            if klass != industry:
                continue
        out.append(c)
    return out
