"""Keyword-restricted multinomial Naive Bayes baseline.

The vocabulary is configuration (a short word list), so tokenization only
has to find vocabulary words in running text: the LexiconMatch tokenizer
scans leftmost-longest over the lexicon. An External mode consumes
pre-tokenized files for users running a real morphological analyzer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .errors import PipelineError


class NaiveBayesError(PipelineError):
    pass


class MissingPretokenizedError(NaiveBayesError):
    pass


class TokenizerMode(str, Enum):
    LEXICON_MATCH = "lexicon_match"
    EXTERNAL = "external"


@dataclass(frozen=True)
class Tokenizer:
    mode: TokenizerMode
    lexicon: tuple[str, ...] = ()
    pretokenized: Optional[dict[str, list[str]]] = None

    @classmethod
    def lexicon_match(cls, lexicon: Sequence[str]) -> "Tokenizer":
        words = tuple(w for w in lexicon if w)
        if not words:
            raise NaiveBayesError("lexicon tokenizer needs a non-empty word list")
        return cls(TokenizerMode.LEXICON_MATCH, lexicon=words)

    @classmethod
    def external(cls, path) -> "Tokenizer":
        """Load a pre-tokenized JSONL file of {id, tokens} records."""
        table: dict[str, list[str]] = {}
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                rec = json.loads(line)
                if "id" not in rec or "tokens" not in rec:
                    raise NaiveBayesError(f"{path}: line {line_no}: expected keys id, tokens")
                table[str(rec["id"])] = [str(t) for t in rec["tokens"]]
        return cls(TokenizerMode.EXTERNAL, pretokenized=table)


def tokenize(text: str, tokenizer: Tokenizer, text_id: Optional[str] = None) -> list[str]:
    """Deterministic token sequence for `text`.

    LexiconMatch emits each vocabulary word occurrence found by a
    leftmost-longest non-overlapping scan. External mode looks the text up
    by id in the pre-tokenized table.
    """
    if tokenizer.mode is TokenizerMode.EXTERNAL:
        if text_id is None:
            raise NaiveBayesError("external tokenizer requires a text id")
        if text_id not in tokenizer.pretokenized:
            raise MissingPretokenizedError(f"no pre-tokenized entry for id {text_id!r}")
        return list(tokenizer.pretokenized[text_id])

    by_length = sorted(tokenizer.lexicon, key=len, reverse=True)
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        for word in by_length:
            if text.startswith(word, i):
                tokens.append(word)
                i += len(word)
                break
        else:
            i += 1
    return tokens


@dataclass(frozen=True)
class NbModel:
    labels: tuple[str, ...]
    log_priors: dict[str, float]
    log_likelihoods: dict[str, dict[str, float]]  # label -> word -> log P(w|label)
    vocab: tuple[str, ...]
    alpha: float
    binary: bool = False


def load_vocabulary(path) -> list[str]:
    """Newline-delimited UTF-8 word list; blank lines ignored."""
    words = [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines()]
    return [w for w in words if w]


def nb_train(
    data: Sequence[tuple[Sequence[str], str]],
    vocab: Sequence[str],
    alpha: float = 1.0,
    labels: Optional[Sequence[str]] = None,
    binary: bool = False,
) -> NbModel:
    """Fit priors and add-alpha smoothed word likelihoods.

    Only vocabulary words are counted; out-of-vocabulary tokens contribute
    nothing in training or prediction. `binary` counts each vocabulary word
    at most once per document instead of using raw counts. When `labels` is
    given it fixes the label order used for tie-breaking and every listed
    label must occur in the data.
    """
    if not data:
        raise NaiveBayesError("empty training set")
    if alpha <= 0:
        raise NaiveBayesError(f"alpha must be > 0, got {alpha}")
    vocab = tuple(dict.fromkeys(vocab))
    if not vocab:
        raise NaiveBayesError("empty vocabulary")
    vocab_set = set(vocab)

    seen_order = list(dict.fromkeys(label for _, label in data))
    if labels is None:
        labels = seen_order
    else:
        missing = [l for l in labels if l not in seen_order]
        if missing:
            raise NaiveBayesError(f"labels with zero training documents: {missing}")
        extra = [l for l in seen_order if l not in labels]
        if extra:
            raise NaiveBayesError(f"training data has labels outside the label list: {extra}")
    labels = tuple(labels)

    doc_counts = {l: 0 for l in labels}
    word_counts = {l: {w: 0 for w in vocab} for l in labels}
    token_totals = {l: 0 for l in labels}
    for tokens, label in data:
        doc_counts[label] += 1
        seen = set()
        for tok in tokens:
            if tok not in vocab_set:
                continue
            if binary:
                if tok in seen:
                    continue
                seen.add(tok)
            word_counts[label][tok] += 1
            token_totals[label] += 1

    n_docs = len(data)
    log_priors = {l: math.log(doc_counts[l] / n_docs) for l in labels}
    denom_extra = alpha * len(vocab)
    log_likelihoods = {
        l: {
            w: math.log((word_counts[l][w] + alpha) / (token_totals[l] + denom_extra))
            for w in vocab
        }
        for l in labels
    }
    return NbModel(labels, log_priors, log_likelihoods, vocab, alpha, binary)


def nb_predict(model: NbModel, tokens: Sequence[str]) -> tuple[str, dict[str, float]]:
    """Argmax label and per-label log posterior (unnormalized).

    Out-of-vocabulary tokens are ignored. Ties break toward the earlier
    label in model.labels (max keeps the first maximum).
    """
    if model.binary:
        tokens = list(dict.fromkeys(tokens))
    scores = {}
    for label in model.labels:
        score = model.log_priors[label]
        lik = model.log_likelihoods[label]
        for tok in tokens:
            if tok in lik:
                score += lik[tok]
        scores[label] = score
    best = max(model.labels, key=lambda l: scores[l])
    return best, scores
