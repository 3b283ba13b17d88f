"""Stage implementations behind the CLI subcommands.

Stages communicate only through files under the output directory, so any
stage can be rerun, inspected, or replaced (for example, swapping in
predictions from an externally fine-tuned filter model). Per-item failures
go to an errors sidecar next to the stage output; a stage with failures is
never marked resumable.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .analytics import granger_test, lagged_correlation, load_series_csv, transform_series, weighted_f1
from .analytics.series import TimeSeries
from .config import PipelineConfig
from .corpus import (
    Relevance,
    RELEVANCE_ALIASES,
    comment_to_record,
    load_comments,
    load_industry_mapping,
    load_labeled_comments,
    normalize_industry,
)
from .ensemble import (
    EnsembleError,
    UnintegrableReplyError,
    decision_to_record,
    integrate_llm,
    integrate_vote,
    load_decisions,
)
from .errors import ConfigError, PipelineError
from .gateway import ReplyCache, RetryPolicy, TransportError, classify_batch
from .manifest import RunManifest, atomic_write_text, file_digest
from .months import Month
from .naive_bayes import Tokenizer, nb_predict, nb_train, tokenize, load_vocabulary
from .prompts import (
    ModelJudgment,
    PromptError,
    Task,
    build_direction_prompt,
    build_filtration_prompt,
    builtin_shots,
    load_shots,
)
from .psi import VARIANTS, build_index, load_psi_csv, write_psi_csv


@dataclass
class StageResult:
    stage: str
    outputs: list[Path] = field(default_factory=list)
    n_errors: int = 0
    skipped: bool = False
    notes: list[str] = field(default_factory=list)


def effective_config_digest(cfg: PipelineConfig) -> str:
    """Digest of the effective configuration, overrides included."""
    blob = json.dumps(dataclasses.asdict(cfg), sort_keys=True, default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _write_jsonl(path, records) -> None:
    atomic_write_text(path, "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records))


def _read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _sidecar(path: Path) -> Path:
    return path.with_name(path.stem + ".errors.jsonl")


def _finish_stage(
    cfg: PipelineConfig,
    result: StageResult,
    inputs: list[Path],
    errors: list[dict],
    sidecar_for: Path,
) -> StageResult:
    sidecar = _sidecar(sidecar_for)
    if errors:
        _write_jsonl(sidecar, errors)
        result.outputs.append(sidecar)
        result.n_errors = len(errors)
    else:
        sidecar.unlink(missing_ok=True)
        manifest = RunManifest(cfg.manifest_path)
        manifest.record(result.stage, inputs, effective_config_digest(cfg), result.outputs)
    return result


def _load_filtered(cfg: PipelineConfig):
    if not cfg.filtered_path.exists():
        raise ConfigError(f"filtered comments not found at {cfg.filtered_path}; run the filter stage first")
    # The corpus window was applied at filtration; do not re-window here.
    return load_comments(cfg.filtered_path, "jsonl", min_month=None)


def _retry_policy(cfg: PipelineConfig) -> RetryPolicy:
    return RetryPolicy(
        max_attempts=cfg.classify.retry_attempts,
        backoff_seconds=cfg.classify.retry_backoff,
    )


def _direction_shots(cfg: PipelineConfig):
    if cfg.prompts.direction_shots is not None:
        return load_shots(cfg.prompts.direction_shots)
    return builtin_shots(Task.DIRECTION, cfg.prompts.language)


def _filtration_shots(cfg: PipelineConfig):
    if cfg.prompts.filtration_shots is not None:
        return load_shots(cfg.prompts.filtration_shots)
    return builtin_shots(Task.FILTRATION, cfg.prompts.language)


def cmd_filter(cfg: PipelineConfig, force: bool = False) -> StageResult:
    """Retain price-related comments; evaluate against gold labels if given."""
    result = StageResult(stage="filter", outputs=[cfg.filtered_path])
    inputs = [cfg.corpus_path]
    backend = cfg.filter.backend
    if backend == "external":
        if cfg.filter.predictions is None:
            raise ConfigError("filter.backend=external requires filter.predictions")
        inputs.append(cfg.filter.predictions)
    elif backend == "naive_bayes":
        if cfg.filter.vocab is None or cfg.filter.train is None:
            raise ConfigError("filter.backend=naive_bayes requires filter.vocab and filter.train")
        inputs.extend([cfg.filter.vocab, cfg.filter.train])
    elif backend == "llm":
        if not cfg.filter.client:
            raise ConfigError("filter.backend=llm requires filter.client")
    if cfg.filter.gold is not None:
        inputs.append(cfg.filter.gold)

    manifest = RunManifest(cfg.manifest_path)
    if not force and manifest.skippable("filter", inputs, effective_config_digest(cfg)):
        result.skipped = True
        return result

    comments = load_comments(cfg.corpus_path, cfg.corpus_format, cfg.min_month)
    errors: list[dict] = []
    retained = []

    if backend == "external":
        predictions = {}
        for rec in _read_jsonl(cfg.filter.predictions):
            label = str(rec.get("label", rec.get("relevance", ""))).strip().lower()
            if label not in RELEVANCE_ALIASES:
                raise ConfigError(
                    f"{cfg.filter.predictions}: unrecognized relevance label {label!r} for id {rec.get('id')}"
                )
            predictions[str(rec["id"])] = RELEVANCE_ALIASES[label]
        for c in comments:
            if c.id not in predictions:
                errors.append({"comment_id": c.id, "error": "no external prediction for id"})
            elif predictions[c.id] is Relevance.PRICE_RELATED:
                retained.append((c, "external"))
    elif backend == "naive_bayes":
        lexicon = load_vocabulary(cfg.filter.vocab)
        tokenizer = Tokenizer.lexicon_match(lexicon)
        train = load_labeled_comments(cfg.filter.train, min_month=None)
        train_rows = []
        for lc in train:
            if lc.relevance is None:
                raise ConfigError(f"training record {lc.comment.id} lacks a relevance label")
            train_rows.append((tokenize(lc.comment.text, tokenizer), lc.relevance.value))
        model = nb_train(
            train_rows,
            vocab=lexicon,
            alpha=cfg.filter.alpha,
            labels=[Relevance.PRICE_RELATED.value, Relevance.NOT_PRICE_RELATED.value],
            binary=cfg.filter.binary_counts,
        )
        for c in comments:
            label, _ = nb_predict(model, tokenize(c.text, tokenizer))
            if label == Relevance.PRICE_RELATED.value:
                retained.append((c, "naive_bayes"))
    else:  # llm
        client = cfg.client(cfg.filter.client)
        shots = _filtration_shots(cfg)
        cache = ReplyCache(cfg.cache)
        prompts = [
            build_filtration_prompt(
                c.text, shots, cfg.filter.k, cfg.prompts.language, cfg.prompts.template_dir
            )
            for c in comments
        ]
        items = classify_batch(
            client, prompts, Task.FILTRATION, cache, cfg.classify.max_in_flight, _retry_policy(cfg)
        )
        for c, item in zip(comments, items):
            if not item.ok:
                errors.append({"comment_id": c.id, "error": item.error})
            elif item.judgment.label == "Yes":
                retained.append((c, f"llm:{client.model_id}"))

    records = [
        comment_to_record(c, relevance=Relevance.PRICE_RELATED.value, relevance_source=source)
        for c, source in retained
    ]
    _write_jsonl(cfg.filtered_path, records)

    if cfg.filter.gold is not None:
        gold_labeled = load_labeled_comments(cfg.filter.gold, min_month=None)
        retained_ids = {c.id for c, _ in retained}
        errored_ids = {e["comment_id"] for e in errors}
        corpus_ids = {c.id for c in comments}
        gold = []
        pred = []
        for lc in gold_labeled:
            cid = lc.comment.id
            if lc.relevance is None or cid not in corpus_ids or cid in errored_ids:
                continue
            gold.append(lc.relevance.value)
            pred.append(
                Relevance.PRICE_RELATED.value
                if cid in retained_ids
                else Relevance.NOT_PRICE_RELATED.value
            )
        if gold:
            report = weighted_f1(gold, pred)
            eval_path = cfg.output_dir / "filter_eval.json"
            atomic_write_text(
                eval_path,
                json.dumps(
                    {
                        "weighted_f1": report.weighted_f1,
                        "n": len(gold),
                        "per_label_f1": {str(k): v for k, v in report.f1.items()},
                    },
                    indent=2,
                    sort_keys=True,
                )
                + "\n",
            )
            result.outputs.append(eval_path)
            result.notes.append(f"filter weighted F1 = {report.weighted_f1:.4f} over {len(gold)} gold labels")

    return _finish_stage(cfg, result, inputs, errors, cfg.filtered_path)


def cmd_classify(cfg: PipelineConfig, force: bool = False) -> StageResult:
    """One direction judgment per (comment, judge), through the reply cache."""
    if not cfg.classify.judges:
        raise ConfigError("classify.judges must list at least one client")
    result = StageResult(stage="classify", outputs=[cfg.judgments_path])
    inputs = [cfg.filtered_path]
    if cfg.prompts.direction_shots is not None:
        inputs.append(cfg.prompts.direction_shots)

    comments = _load_filtered(cfg)
    manifest = RunManifest(cfg.manifest_path)
    if not force and manifest.skippable("classify", inputs, effective_config_digest(cfg)):
        result.skipped = True
        return result

    shots = _direction_shots(cfg)
    cache = ReplyCache(cfg.cache)
    prompts = [
        build_direction_prompt(
            c.text,
            shots,
            cfg.classify.k,
            cfg.classify.with_confidence,
            cfg.prompts.language,
            cfg.prompts.template_dir,
        )
        for c in comments
    ]

    per_judge = {}
    for judge_name in cfg.classify.judges:
        client = cfg.client(judge_name)
        per_judge[judge_name] = classify_batch(
            client, prompts, Task.DIRECTION, cache, cfg.classify.max_in_flight, _retry_policy(cfg)
        )

    rows = []
    errors = []
    for i, c in enumerate(comments):
        for judge_name in cfg.classify.judges:
            item = per_judge[judge_name][i]
            model_id = cfg.clients[judge_name].model
            if item.ok:
                j = item.judgment
                rows.append(
                    {
                        "comment_id": c.id,
                        "model_id": j.model_id,
                        "label": j.label,
                        "confidence": j.confidence,
                        "reason": j.reason,
                        "raw": j.raw,
                    }
                )
            else:
                errors.append({"comment_id": c.id, "model_id": model_id, "error": item.error})
    _write_jsonl(cfg.judgments_path, rows)
    return _finish_stage(cfg, result, inputs, errors, cfg.judgments_path)


def cmd_integrate(cfg: PipelineConfig, force: bool = False) -> StageResult:
    """One decision per comment, via the integrator model or the vote fallback."""
    result = StageResult(stage="integrate", outputs=[cfg.decisions_path])
    inputs = [cfg.filtered_path, cfg.judgments_path]
    if not cfg.judgments_path.exists():
        raise ConfigError(f"judgments not found at {cfg.judgments_path}; run the classify stage first")

    comments = _load_filtered(cfg)
    manifest = RunManifest(cfg.manifest_path)
    if not force and manifest.skippable("integrate", inputs, effective_config_digest(cfg)):
        result.skipped = True
        return result

    by_comment: dict[str, list[ModelJudgment]] = {}
    for rec in _read_jsonl(cfg.judgments_path):
        by_comment.setdefault(rec["comment_id"], []).append(
            ModelJudgment(
                label=rec["label"],
                model_id=rec["model_id"],
                raw=rec.get("raw", ""),
                confidence=rec.get("confidence"),
                reason=rec.get("reason"),
            )
        )

    method = cfg.integrate.method
    integrator = cfg.client(cfg.integrate.integrator) if method == "llm" else None
    cache = ReplyCache(cfg.cache) if method == "llm" else None

    decisions = []
    errors = []
    for c in comments:
        judgments = by_comment.get(c.id, [])
        if not judgments:
            errors.append({"comment_id": c.id, "error": "no judgments for comment id"})
            continue
        try:
            if method == "llm":
                decision = integrate_llm(
                    c.id,
                    c.text,
                    judgments,
                    integrator,
                    cache,
                    retry=_retry_policy(cfg),
                    language=cfg.prompts.language,
                    template_dir=cfg.prompts.template_dir,
                )
            else:
                decision = integrate_vote(c.id, judgments)
        except (PromptError, UnintegrableReplyError, TransportError, EnsembleError) as exc:
            errors.append({"comment_id": c.id, "error": str(exc)})
            continue
        decisions.append(decision)

    _write_jsonl(cfg.decisions_path, [decision_to_record(d) for d in decisions])
    return _finish_stage(cfg, result, inputs, errors, cfg.decisions_path)


def cmd_index(cfg: PipelineConfig, force: bool = False, emit_plot_data: bool = False) -> StageResult:
    """Per-variant monthly index CSVs plus the combined file."""
    if not cfg.decisions_path.exists():
        raise ConfigError(f"decisions not found at {cfg.decisions_path}; run the integrate stage first")
    needs_mapping = any(VARIANTS[v].industry is not None for v in cfg.variants)
    if needs_mapping and cfg.industry_mapping is None:
        raise ConfigError(
            "industry-filtered variants requested but no industry_mapping configured"
        )

    result = StageResult(stage="index")
    inputs = [cfg.filtered_path, cfg.decisions_path]
    if cfg.industry_mapping is not None:
        inputs.append(cfg.industry_mapping)
    outputs = [cfg.psi_path(v) for v in cfg.variants] + [cfg.psi_all_path]
    if emit_plot_data:
        outputs.append(cfg.output_dir / "plot_data.csv")
    result.outputs = outputs

    manifest = RunManifest(cfg.manifest_path)
    if not force and manifest.skippable("index", inputs, effective_config_digest(cfg)):
        result.skipped = True
        return result

    comments = _load_filtered(cfg)
    comments_by_id = {c.id: c for c in comments}
    decisions = load_decisions(cfg.decisions_path)
    mapping = load_industry_mapping(cfg.industry_mapping) if cfg.industry_mapping else None
    if cfg.strict_industry and mapping is not None:
        for c in comments:
            normalize_industry(c.industry_raw, mapping, strict=True)

    series_list = []
    for name in cfg.variants:
        series = build_index(decisions, comments_by_id, VARIANTS[name], mapping)
        series_list.append(series)
        tmp = cfg.psi_path(name).with_name(cfg.psi_path(name).name + ".tmp")
        write_psi_csv([series], tmp)
        tmp.replace(cfg.psi_path(name))
    tmp = cfg.psi_all_path.with_name(cfg.psi_all_path.name + ".tmp")
    write_psi_csv(series_list, tmp)
    tmp.replace(cfg.psi_all_path)

    if emit_plot_data:
        lines = ["series,month,value"]
        for series in series_list:
            for p in series.points:
                if p.psi is not None:
                    lines.append(f"{series.variant.name},{p.month},{p.psi!r}")
        atomic_write_text(cfg.output_dir / "plot_data.csv", "\n".join(lines) + "\n")

    return _finish_stage(cfg, result, inputs, [], cfg.psi_all_path)


def psi_series_from_csv(path, variant: str | None = None) -> TimeSeries:
    """Non-null index points of one variant as a plain time series.

    With variant=None the file must contain exactly one variant.
    """
    rows = load_psi_csv(path, variant)
    if not rows:
        raise ConfigError(f"{path}: no index rows" + (f" for variant {variant!r}" if variant else ""))
    names = {r["variant"] for r in rows}
    if variant is None and len(names) > 1:
        raise ConfigError(f"{path}: holds several variants {sorted(names)}; pick one")
    name = variant or names.pop()
    pairs = [(Month.parse(r["month"]), float(r["psi"])) for r in rows if r["psi"] != ""]
    return TimeSeries.from_pairs(f"psi_{name}", pairs)


def cmd_evaluate(
    cfg: PipelineConfig,
    force: bool = False,
    psi_path=None,
    reference_path=None,
    name: str | None = None,
    overrides: dict | None = None,
) -> StageResult:
    """Lead/lag correlation and both-direction causality reports.

    `overrides` (transform, lag_min, lag_max, min_overlap, max_lag) apply
    on top of every configured evaluation; --psi/--reference replace the
    configured list with one ad-hoc pair.
    """
    specs = list(cfg.evaluations)
    if psi_path is not None or reference_path is not None:
        if psi_path is None or reference_path is None:
            raise ConfigError("evaluate needs both --psi and --reference when given explicitly")
        from .config import EvaluateSpec

        specs = [EvaluateSpec(name=name or "adhoc", reference=Path(reference_path))]
    if not specs:
        raise ConfigError("no evaluations configured and no --psi/--reference given")
    if overrides:
        specs = [dataclasses.replace(spec, **overrides) for spec in specs]

    result = StageResult(stage="evaluate")
    manifest = RunManifest(cfg.manifest_path)
    for spec in specs:
        stage_name = f"evaluate:{spec.name}"
        source = Path(psi_path) if psi_path is not None else cfg.psi_path(spec.psi_variant)
        if not source.exists():
            raise ConfigError(f"index file not found at {source}; run the index stage first")
        inputs = [source, spec.reference]
        lags_path = cfg.output_dir / f"eval_{spec.name}_lags.csv"
        summary_path = cfg.output_dir / f"eval_{spec.name}_summary.json"
        granger_path = cfg.output_dir / f"eval_{spec.name}_granger.csv"
        outputs = [lags_path, summary_path, granger_path]
        result.outputs.extend(outputs)
        if not force and manifest.skippable(stage_name, inputs, effective_config_digest(cfg)):
            result.skipped = True
            continue

        psi_series = psi_series_from_csv(source, None if psi_path is not None else spec.psi_variant)
        reference = transform_series(load_series_csv(spec.reference), spec.transform)
        corr = lagged_correlation(
            psi_series, reference, spec.lag_min, spec.lag_max, spec.min_overlap
        )

        lag_lines = ["lag,r,n_overlap"]
        for k in sorted(corr.n_overlap):
            r = corr.per_lag.get(k)
            lag_lines.append(f"{k},{'' if r is None else repr(r)},{corr.n_overlap[k]}")
        atomic_write_text(lags_path, "\n".join(lag_lines) + "\n")

        summary = {
            "a": corr.a_name,
            "b": corr.b_name,
            "best_lag": corr.best_lag,
            "best_r": corr.best_r,
            "transform": spec.transform,
            "n": corr.n_overlap[corr.best_lag],
            "lag_min": spec.lag_min,
            "lag_max": spec.lag_max,
            "min_overlap": spec.min_overlap,
        }
        atomic_write_text(summary_path, json.dumps(summary, indent=2, sort_keys=True) + "\n")

        granger_lines = ["a,b,f_value,p_value"]
        for cause, effect in ((psi_series, reference), (reference, psi_series)):
            g = granger_test(cause, effect, spec.max_lag)
            granger_lines.append(f"{g.cause_name},{g.effect_name},{g.f_value!r},{g.p_value!r}")
        atomic_write_text(granger_path, "\n".join(granger_lines) + "\n")

        manifest.record(stage_name, inputs, effective_config_digest(cfg), outputs)
        result.notes.append(
            f"{spec.name}: best r={corr.best_r:.4f} at lag {corr.best_lag:+d} ({spec.transform})"
        )
    return result


def run_all(cfg: PipelineConfig, force: bool = False, emit_plot_data: bool = False) -> list[StageResult]:
    results = [
        cmd_filter(cfg, force),
        cmd_classify(cfg, force),
        cmd_integrate(cfg, force),
        cmd_index(cfg, force, emit_plot_data),
    ]
    if cfg.evaluations:
        results.append(cmd_evaluate(cfg, force))
    return results
