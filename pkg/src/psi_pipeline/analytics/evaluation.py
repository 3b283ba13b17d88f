"""Classifier evaluation: per-label precision/recall/F1 and support-weighted F1."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

from ..errors import PipelineError


class EvaluationError(PipelineError):
    pass


@dataclass(frozen=True)
class EvalReport:
    labels: tuple
    precision: dict
    recall: dict
    f1: dict
    support: dict
    confusion: dict  # gold label -> {pred label -> count}
    weighted_f1: float


def weighted_f1(gold: Sequence[Hashable], pred: Sequence[Hashable]) -> EvalReport:
    """Per-class F1 weighted by gold support.

    A class with no predictions or no gold instances gets F1 = 0 rather
    than a division error. Label order follows first appearance in gold,
    then pred-only labels.
    """
    if len(gold) != len(pred):
        raise EvaluationError(f"gold and pred lengths differ: {len(gold)} vs {len(pred)}")
    if not gold:
        raise EvaluationError("cannot evaluate empty label lists")
    seen = dict.fromkeys(gold)
    for label in pred:
        seen.setdefault(label)
    labels = tuple(seen)

    confusion = {g: {p: 0 for p in labels} for g in labels}
    for g, p in zip(gold, pred):
        confusion[g][p] += 1

    precision = {}
    recall = {}
    f1 = {}
    support = {}
    for label in labels:
        tp = confusion[label][label]
        pred_count = sum(confusion[g][label] for g in labels)
        gold_count = sum(confusion[label].values())
        support[label] = gold_count
        precision[label] = tp / pred_count if pred_count else 0.0
        recall[label] = tp / gold_count if gold_count else 0.0
        pr = precision[label] + recall[label]
        f1[label] = 2.0 * precision[label] * recall[label] / pr if pr else 0.0

    n = len(gold)
    weighted = sum(support[l] / n * f1[l] for l in labels)
    return EvalReport(
        labels=labels,
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
        confusion=confusion,
        weighted_f1=weighted,
    )
