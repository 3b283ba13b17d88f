"""Combine several per-comment judgments into one decision.

The primary path asks another chat model to integrate the judges' labels,
confidences, and reasons. The vote path is a deterministic fallback that
needs no model at all; its decisions are tagged with method="vote" so the
substitution is never silent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .corpus import Direction
from .errors import PipelineError
from .gateway import ChatClient, ReplyCache, RetryPolicy, dispatch
from .prompts import (
    DIRECTION_LABELS,
    ModelJudgment,
    NoLabelFoundError,
    Task,
    build_integration_prompt,
    parse_judgment,
)


class EnsembleError(PipelineError):
    pass


class UnintegrableReplyError(EnsembleError):
    """The integrator replied without any recognizable label."""


class EnsembleMethod(str, Enum):
    LLM_INTEGRATION = "llm_integration"
    VOTE = "vote"


# Ties mean the judges disagree; lean toward the non-directional labels so
# disagreement never injects spurious index movement.
DEFAULT_LABEL_PRIORITY = ("Stable", "Not related", "Rise", "Fall")

LABEL_TO_DIRECTION = {
    "Rise": Direction.RISE,
    "Stable": Direction.STABLE,
    "Fall": Direction.FALL,
    "Not related": Direction.NOT_RELATED,
}
DIRECTION_TO_LABEL = {v: k for k, v in LABEL_TO_DIRECTION.items()}


@dataclass(frozen=True)
class EnsembleDecision:
    comment_id: str
    label: str
    method: EnsembleMethod
    inputs: tuple[ModelJudgment, ...]
    integrator_model_id: Optional[str] = None

    def __post_init__(self):
        if self.label not in DIRECTION_LABELS:
            raise EnsembleError(f"label outside direction vocabulary: {self.label!r}")
        if self.method is EnsembleMethod.LLM_INTEGRATION and len(self.inputs) < 2:
            raise EnsembleError("llm integration needs at least 2 input judgments")


def integrate_llm(
    comment_id: str,
    comment_text: str,
    judgments: Sequence[ModelJudgment],
    integrator: ChatClient,
    cache: Optional[ReplyCache] = None,
    retry: RetryPolicy = RetryPolicy(),
    language: str = "en",
    template_dir=None,
) -> EnsembleDecision:
    """Ask the integrator model for a final label over the judges' outputs."""
    prompt = build_integration_prompt(comment_text, judgments, language, template_dir)
    reply = dispatch(integrator, prompt, cache, retry)
    try:
        parsed = parse_judgment(reply, Task.INTEGRATION, model_id=integrator.model_id)
    except NoLabelFoundError as exc:
        raise UnintegrableReplyError(
            f"integrator {integrator.model_id} gave no label for {comment_id}: {reply!r}"
        ) from exc
    return EnsembleDecision(
        comment_id=comment_id,
        label=parsed.label,
        method=EnsembleMethod.LLM_INTEGRATION,
        inputs=tuple(judgments),
        integrator_model_id=integrator.model_id,
    )


def integrate_vote(
    comment_id: str,
    judgments: Sequence[ModelJudgment],
    label_priority: Sequence[str] = DEFAULT_LABEL_PRIORITY,
) -> EnsembleDecision:
    """Confidence-weighted vote; a judgment without confidence counts as 100."""
    if not judgments:
        raise EnsembleError("cannot vote over an empty judgment list")
    unknown = [j.label for j in judgments if j.label not in DIRECTION_LABELS]
    if unknown:
        raise EnsembleError(f"judgment labels outside direction vocabulary: {unknown}")
    # Only labels someone voted for are candidates; otherwise an all-zero
    # confidence vote could hand the win to an unvoted label via tie-break.
    totals: dict[str, int] = {}
    for j in judgments:
        totals[j.label] = totals.get(j.label, 0) + (
            j.confidence if j.confidence is not None else 100
        )
    best_total = max(totals.values())
    tied = [label for label in totals if totals[label] == best_total]
    if len(tied) > 1:
        rank = {label: i for i, label in enumerate(label_priority)}
        missing = [label for label in tied if label not in rank]
        if missing:
            raise EnsembleError(f"label priority does not cover tied labels: {missing}")
        tied.sort(key=lambda label: rank[label])
    return EnsembleDecision(
        comment_id=comment_id,
        label=tied[0],
        method=EnsembleMethod.VOTE,
        inputs=tuple(judgments),
    )


def decision_to_record(decision: EnsembleDecision) -> dict:
    return {
        "comment_id": decision.comment_id,
        "label": decision.label,
        "method": decision.method.value,
        "integrator_model_id": decision.integrator_model_id,
        "inputs": [
            {"model_id": j.model_id, "label": j.label, "confidence": j.confidence}
            for j in decision.inputs
        ],
    }


def write_decisions(decisions: Iterable[EnsembleDecision], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in decisions:
            fh.write(json.dumps(decision_to_record(d), ensure_ascii=False) + "\n")


def load_decisions(path) -> list[EnsembleDecision]:
    decisions = []
    with open(Path(path), encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            inputs = tuple(
                ModelJudgment(
                    label=i["label"],
                    model_id=i.get("model_id", ""),
                    raw="",
                    confidence=i.get("confidence"),
                )
                for i in rec["inputs"]
            )
            decisions.append(
                EnsembleDecision(
                    comment_id=rec["comment_id"],
                    label=rec["label"],
                    method=EnsembleMethod(rec["method"]),
                    inputs=inputs,
                    integrator_model_id=rec.get("integrator_model_id"),
                )
            )
    return decisions
