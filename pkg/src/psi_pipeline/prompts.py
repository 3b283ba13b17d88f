"""Prompt construction and reply parsing for the chat-model stages.

Builders are pure string functions: identical inputs produce byte-identical
prompts, which is what makes caching and golden-file testing possible.
Instruction blocks live in versioned template files (templates/<lang>/),
so translated variants can be dropped in without code changes.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .errors import PipelineError


class PromptError(PipelineError):
    pass


class JudgmentParseError(PipelineError):
    pass


class NoLabelFoundError(JudgmentParseError):
    pass


class AmbiguousLabelError(JudgmentParseError):
    pass


class Task(str, Enum):
    FILTRATION = "filtration"
    DIRECTION = "direction"
    INTEGRATION = "integration"


FILTRATION_LABELS = ("Yes", "No")
DIRECTION_LABELS = ("Rise", "Stable", "Fall", "Not related")

TASK_LABELS = {
    Task.FILTRATION: FILTRATION_LABELS,
    Task.DIRECTION: DIRECTION_LABELS,
    Task.INTEGRATION: DIRECTION_LABELS,
}


@dataclass(frozen=True)
class FewShotExample:
    text: str
    answer: str
    confidence: Optional[int] = None
    reason: Optional[str] = None

    def __post_init__(self):
        if (self.confidence is None) != (self.reason is None):
            raise PromptError(
                "few-shot example must carry confidence and reason together or neither"
            )
        if self.confidence is not None and not 0 <= self.confidence <= 100:
            raise PromptError(f"confidence must be 0-100, got {self.confidence}")


@dataclass(frozen=True)
class ModelJudgment:
    label: str
    model_id: str
    raw: str
    confidence: Optional[int] = None
    reason: Optional[str] = None

    def __post_init__(self):
        if self.confidence is not None and not 0 <= self.confidence <= 100:
            raise JudgmentParseError(f"confidence must be 0-100, got {self.confidence}")


def load_template(name: str, language: str = "en", template_dir=None) -> str:
    """Read an instruction block; trailing newline is file convention, not content."""
    if template_dir is not None:
        path = Path(template_dir) / f"{name}.txt"
        if not path.exists():
            raise PromptError(f"template not found: {path}")
        return path.read_text(encoding="utf-8").rstrip("\n")
    ref = resources.files("psi_pipeline") / "templates" / language / f"{name}.txt"
    if not ref.is_file():
        raise PromptError(f"no built-in template {name!r} for language {language!r}")
    return ref.read_text(encoding="utf-8").rstrip("\n")


def load_shots(path) -> list[FewShotExample]:
    """JSONL of {text, answer, confidence?, reason?} records."""
    shots = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            if "text" not in rec or "answer" not in rec:
                raise PromptError(f"{path}: line {line_no}: expected keys text, answer")
            conf = rec.get("confidence")
            shots.append(
                FewShotExample(
                    text=str(rec["text"]),
                    answer=str(rec["answer"]),
                    confidence=int(conf) if conf is not None else None,
                    reason=rec.get("reason"),
                )
            )
    return shots


def builtin_shots(task: Task, language: str = "en") -> list[FewShotExample]:
    name = "direction_shots" if task is not Task.FILTRATION else "filtration_shots"
    ref = resources.files("psi_pipeline") / "templates" / language / f"{name}.jsonl"
    if not ref.is_file():
        raise PromptError(f"no built-in shots for task {task.value} / language {language!r}")
    with resources.as_file(ref) as path:
        return load_shots(path)


@dataclass(frozen=True)
class PromptTemplate:
    task: Task
    instruction: str
    shots: tuple[FewShotExample, ...] = ()
    with_confidence: bool = False

    def __post_init__(self):
        if self.task is Task.FILTRATION:
            for shot in self.shots:
                if shot.confidence is not None:
                    raise PromptError("filtration shots never carry confidence/reason")
        if self.task is Task.INTEGRATION and self.shots:
            raise PromptError("integration prompts carry no shots")
        if self.task is Task.DIRECTION and self.with_confidence:
            for shot in self.shots:
                if shot.confidence is None:
                    raise PromptError(
                        "direction shot without confidence while with_confidence=True"
                    )

    def render(self, comment_text: str) -> str:
        parts = [self.instruction, ""]
        for shot in self.shots:
            parts.append(f"Text: {shot.text}")
            parts.append(f"Answer: {shot.answer}")
            if self.task is Task.DIRECTION and self.with_confidence:
                parts.append(f"Confidence: {shot.confidence}%")
                parts.append(f"Reason: {shot.reason}")
            parts.append("")
        parts.append(f"Text: {comment_text}")
        parts.append("Answer:")
        return "\n".join(parts)


def _take_shots(shots: Sequence[FewShotExample], k: int) -> tuple[FewShotExample, ...]:
    if k > len(shots):
        raise PromptError(f"requested {k} shots but only {len(shots)} provided")
    return tuple(shots[:k])


def build_filtration_prompt(
    comment_text: str,
    shots: Sequence[FewShotExample] = (),
    k: int = 0,
    language: str = "en",
    template_dir=None,
) -> str:
    template = PromptTemplate(
        task=Task.FILTRATION,
        instruction=load_template("filtration", language, template_dir),
        shots=_take_shots(shots, k),
    )
    return template.render(comment_text)


def build_direction_prompt(
    comment_text: str,
    shots: Sequence[FewShotExample] = (),
    k: int = 0,
    with_confidence: bool = True,
    language: str = "en",
    template_dir=None,
) -> str:
    name = "direction" if with_confidence else "direction_no_confidence"
    template = PromptTemplate(
        task=Task.DIRECTION,
        instruction=load_template(name, language, template_dir),
        shots=_take_shots(shots, k),
        with_confidence=with_confidence,
    )
    return template.render(comment_text)


def build_integration_prompt(
    comment_text: str,
    judgments: Sequence[ModelJudgment],
    language: str = "en",
    template_dir=None,
) -> str:
    """Outputs of several judges rendered as numbered model sections."""
    if len(judgments) < 2:
        raise PromptError(f"integration needs at least 2 judgments, got {len(judgments)}")
    for j in judgments:
        if j.confidence is None or j.reason is None:
            raise PromptError(
                f"judgment from {j.model_id or 'unknown model'} lacks confidence/reason"
            )
    instruction = load_template("integration", language, template_dir)
    parts = [instruction, "", f"Text: {comment_text}", ""]
    for i, j in enumerate(judgments):
        parts.append(f"【Model {i}】")
        parts.append(f"Classification Result: {j.label}")
        parts.append(f"Confidence: {j.confidence}%")
        parts.append(f"Reason: {j.reason}")
        parts.append("")
    parts.append("Classification result considering the above:")
    return "\n".join(parts)


def _label_pattern(labels: Sequence[str]) -> re.Pattern:
    # Longest alternative first so overlapping vocabularies match greedily;
    # internal spaces tolerate line wrapping.
    alts = sorted(labels, key=len, reverse=True)
    body = "|".join(re.escape(l).replace(r"\ ", r"\s+") for l in alts)
    return re.compile(rf"\b(?:{body})\b", re.IGNORECASE)

_CONFIDENCE_RE = re.compile(r"confidence\s*:\s*([0-9]+(?:\.[0-9]+)?)\s*%?", re.IGNORECASE)
_REASON_RE = re.compile(r"reason\s*:\s*(.*)\Z", re.IGNORECASE | re.DOTALL)

_PATTERNS = {task: _label_pattern(labels) for task, labels in TASK_LABELS.items()}


def _canonical_label(matched: str, labels: Sequence[str]) -> str:
    squeezed = re.sub(r"\s+", " ", matched).lower()
    for label in labels:
        if label.lower() == squeezed:
            return label
    raise NoLabelFoundError(f"matched text {matched!r} is not a known label")


def parse_judgment(raw_reply: str, task: Task, model_id: str = "") -> ModelJudgment:
    """Extract the first vocabulary label plus optional confidence and reason.

    Matching is case-insensitive on the width-normalized reply. Two distinct
    labels on the answer line make the reply ambiguous rather than silently
    picking one.
    """
    labels = TASK_LABELS[task]
    normalized = unicodedata.normalize("NFKC", raw_reply)
    pattern = _PATTERNS[task]
    first = pattern.search(normalized)
    if first is None:
        raise NoLabelFoundError(f"no {task.value} label found in reply: {raw_reply!r}")
    label = _canonical_label(first.group(0), labels)

    line_start = normalized.rfind("\n", 0, first.start()) + 1
    line_end = normalized.find("\n", first.start())
    if line_end == -1:
        line_end = len(normalized)
    on_line = {
        _canonical_label(m.group(0), labels)
        for m in pattern.finditer(normalized, line_start, line_end)
    }
    if len(on_line) > 1:
        raise AmbiguousLabelError(
            f"answer line mentions several labels {sorted(on_line)}: {raw_reply!r}"
        )

    confidence = None
    conf_match = _CONFIDENCE_RE.search(normalized)
    if conf_match:
        value = Decimal(conf_match.group(1)).quantize(Decimal(1), rounding=ROUND_HALF_UP)
        confidence = int(value)
        if not 0 <= confidence <= 100:
            raise JudgmentParseError(f"confidence outside 0-100: {confidence}")

    reason = None
    reason_match = _REASON_RE.search(normalized)
    if reason_match:
        reason = reason_match.group(1).strip()

    return ModelJudgment(
        label=label,
        model_id=model_id,
        raw=raw_reply,
        confidence=confidence,
        reason=reason,
    )
