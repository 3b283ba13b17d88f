"""Deterministic canned-reply generation for hermetic runs.

Given a corpus and a per-comment truth map, these helpers write the
{prompt_digest}.txt reply files that fixture clients replay, covering the
direction judges, the integrator, and the relevance filter. Replies are
pure functions of (comment, truth, profile), so regenerating them is
byte-stable.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .corpus import SurveyComment
from .gateway import prompt_digest
from .prompts import (
    FewShotExample,
    Task,
    build_direction_prompt,
    build_filtration_prompt,
    build_integration_prompt,
    builtin_shots,
    parse_judgment,
)

_SHIFT = {"Rise": "Stable", "Stable": "Fall", "Fall": "Stable", "Not related": "Stable"}


def _id_hash(comment_id: str) -> int:
    return int(hashlib.sha256(comment_id.encode("utf-8")).hexdigest()[:8], 16)


@dataclass(frozen=True)
class FixtureJudgeProfile:
    directory: Path
    model_id: str
    disagree_every: int = 0  # 0 never disagrees; n shifts every n-th id hash
    base_confidence: int = 90

    def label_for(self, comment_id: str, truth_label: str) -> str:
        if self.disagree_every and _id_hash(comment_id) % self.disagree_every == 0:
            return _SHIFT[truth_label]
        return truth_label

    def confidence_for(self, comment_id: str) -> int:
        return self.base_confidence - _id_hash(comment_id) % 11


def direction_reply(label: str, confidence: int) -> str:
    return (
        f"Answer: {label}\n"
        f"Confidence: {confidence}%\n"
        "Reason: Fixture rationale keyed to the comment wording."
    )


def _write_reply(directory: Path, prompt: str, reply: str) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"{prompt_digest(prompt)}.txt").write_text(reply, encoding="utf-8")


def write_direction_replies(
    comments: Iterable[SurveyComment],
    truth_by_id: dict[str, str],
    profiles: Sequence[FixtureJudgeProfile],
    integrator_dir: Optional[Path] = None,
    shots: Optional[Sequence[FewShotExample]] = None,
    k: int = 5,
    with_confidence: bool = True,
    language: str = "en",
) -> None:
    """Canned judge replies, plus integrator replies when a dir is given.

    The integrator sees exactly the judgments the pipeline will parse from
    the judge replies, in profile order, and answers with the majority
    label (first profile wins ties).
    """
    if shots is None:
        shots = builtin_shots(Task.DIRECTION, language)
    for comment in comments:
        truth = truth_by_id[comment.id]
        prompt = build_direction_prompt(comment.text, shots, k, with_confidence, language)
        judgments = []
        for profile in profiles:
            reply = direction_reply(
                profile.label_for(comment.id, truth), profile.confidence_for(comment.id)
            )
            _write_reply(profile.directory, prompt, reply)
            judgments.append(parse_judgment(reply, Task.DIRECTION, model_id=profile.model_id))
        if integrator_dir is not None and len(judgments) >= 2:
            counts: dict[str, int] = {}
            for j in judgments:
                counts[j.label] = counts.get(j.label, 0) + 1
            majority = max(counts, key=lambda l: (counts[l], l == judgments[0].label))
            integration_prompt = build_integration_prompt(comment.text, judgments, language)
            _write_reply(Path(integrator_dir), integration_prompt, majority)


def write_filtration_replies(
    comments: Iterable[SurveyComment],
    related_ids: set[str],
    directory: Path,
    shots: Optional[Sequence[FewShotExample]] = None,
    k: int = 5,
    language: str = "en",
) -> None:
    if shots is None:
        shots = builtin_shots(Task.FILTRATION, language)
    for comment in comments:
        prompt = build_filtration_prompt(comment.text, shots, k, language)
        _write_reply(Path(directory), prompt, "Yes" if comment.id in related_ids else "No")
