"""Declarative pipeline configuration.

One YAML file fixes every choice a run makes; secrets stay in environment
variables named by the config. Relative paths resolve against the config
file's directory so a config travels with its fixtures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .errors import ConfigError
from .gateway import DEFAULT_DECODING, FixtureClient, HttpChatClient
from .months import Month
from .psi import VARIANTS

FILTER_BACKENDS = ("external", "naive_bayes", "llm")
ENSEMBLE_METHODS = ("llm", "vote")


@dataclass
class ClientSpec:
    name: str
    kind: str  # fixture | http
    model: str
    directory: Optional[Path] = None
    base_url: Optional[str] = None
    api_key_env: Optional[str] = None
    temperature: float = 0
    max_tokens: int = 256

    def build(self):
        params = dict(DEFAULT_DECODING)
        params["temperature"] = self.temperature
        params["max_tokens"] = self.max_tokens
        if self.kind == "fixture":
            return FixtureClient(directory=self.directory, model_id=self.model, decoding_params=params)
        if self.kind == "http":
            return HttpChatClient(
                base_url=self.base_url,
                model_id=self.model,
                api_key_env=self.api_key_env,
                decoding_params=params,
            )
        raise ConfigError(f"client {self.name}: unknown kind {self.kind!r}")


@dataclass
class FilterConfig:
    backend: str = "external"
    predictions: Optional[Path] = None  # external backend
    client: Optional[str] = None        # llm backend
    k: int = 5
    vocab: Optional[Path] = None        # naive_bayes backend
    train: Optional[Path] = None
    alpha: float = 1.0
    binary_counts: bool = False
    gold: Optional[Path] = None         # optional relevance gold labels


@dataclass
class ClassifyConfig:
    judges: list[str] = field(default_factory=list)
    k: int = 5
    with_confidence: bool = True
    max_in_flight: int = 4
    retry_attempts: int = 3
    retry_backoff: float = 1.0


@dataclass
class IntegrateConfig:
    method: str = "llm"
    integrator: Optional[str] = None


@dataclass
class EvaluateSpec:
    name: str
    reference: Path
    psi_variant: str = "general"
    transform: str = "yoy_pct"
    lag_min: int = 0
    lag_max: int = 24
    min_overlap: int = 24
    max_lag: int = 12


@dataclass
class PromptConfig:
    language: str = "en"
    template_dir: Optional[Path] = None
    direction_shots: Optional[Path] = None   # built-in appendix shots when unset
    filtration_shots: Optional[Path] = None


@dataclass
class PipelineConfig:
    corpus_path: Path
    corpus_format: str
    industry_mapping: Optional[Path]
    output_dir: Path
    cache: Optional[Path]
    seed: int
    min_month: Optional[Month]
    strict_industry: bool
    clients: dict[str, ClientSpec]
    filter: FilterConfig
    classify: ClassifyConfig
    integrate: IntegrateConfig
    variants: list[str]
    evaluations: list[EvaluateSpec]
    prompts: PromptConfig
    config_path: Optional[Path] = None

    def client(self, name: str):
        if name not in self.clients:
            raise ConfigError(f"no client named {name!r} in config")
        return self.clients[name].build()

    # Stage artifact locations, all under output_dir.
    @property
    def filtered_path(self) -> Path:
        return self.output_dir / "filtered.jsonl"

    @property
    def judgments_path(self) -> Path:
        return self.output_dir / "judgments.jsonl"

    @property
    def decisions_path(self) -> Path:
        return self.output_dir / "decisions.jsonl"

    @property
    def manifest_path(self) -> Path:
        return self.output_dir / "manifest.json"

    def psi_path(self, variant: str) -> Path:
        return self.output_dir / f"psi_{variant}.csv"

    @property
    def psi_all_path(self) -> Path:
        return self.output_dir / "psi_all.csv"


def _path(base: Path, value) -> Optional[Path]:
    if value is None:
        return None
    p = Path(str(value))
    return p if p.is_absolute() else (base / p)


def _section(raw: dict, key: str) -> dict:
    value = raw.get(key) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"config section {key!r} must be a mapping")
    return value


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    base = path.parent

    corpus = _section(raw, "corpus")
    if "path" not in corpus:
        raise ConfigError("config needs corpus.path")
    corpus_format = corpus.get("format", "jsonl")
    if corpus_format not in ("jsonl", "csv"):
        raise ConfigError(f"corpus.format must be jsonl or csv, got {corpus_format!r}")
    min_month_raw = corpus.get("min_month", "2001-01")
    min_month = Month.parse(str(min_month_raw)) if min_month_raw is not None else None

    clients = {}
    for name, spec in _section(raw, "clients").items():
        if not isinstance(spec, dict) or "kind" not in spec or "model" not in spec:
            raise ConfigError(f"client {name!r} needs kind and model keys")
        kind = spec["kind"]
        if kind not in ("fixture", "http"):
            raise ConfigError(f"client {name!r}: unknown kind {kind!r}")
        if kind == "fixture" and "directory" not in spec:
            raise ConfigError(f"fixture client {name!r} needs a directory")
        if kind == "http" and ("base_url" not in spec or "api_key_env" not in spec):
            raise ConfigError(f"http client {name!r} needs base_url and api_key_env")
        clients[name] = ClientSpec(
            name=name,
            kind=kind,
            model=str(spec["model"]),
            directory=_path(base, spec.get("directory")),
            base_url=spec.get("base_url"),
            api_key_env=spec.get("api_key_env"),
            temperature=spec.get("temperature", 0),
            max_tokens=int(spec.get("max_tokens", 256)),
        )

    fsec = _section(raw, "filter")
    backend = fsec.get("backend", "external")
    if backend not in FILTER_BACKENDS:
        raise ConfigError(f"filter.backend must be one of {FILTER_BACKENDS}, got {backend!r}")
    filter_cfg = FilterConfig(
        backend=backend,
        predictions=_path(base, fsec.get("predictions")),
        client=fsec.get("client"),
        k=int(fsec.get("k", 5)),
        vocab=_path(base, fsec.get("vocab")),
        train=_path(base, fsec.get("train")),
        alpha=float(fsec.get("alpha", 1.0)),
        binary_counts=bool(fsec.get("binary_counts", False)),
        gold=_path(base, fsec.get("gold")),
    )

    csec = _section(raw, "classify")
    classify_cfg = ClassifyConfig(
        judges=list(csec.get("judges", [])),
        k=int(csec.get("k", 5)),
        with_confidence=bool(csec.get("with_confidence", True)),
        max_in_flight=int(csec.get("max_in_flight", 4)),
        retry_attempts=int(csec.get("retry_attempts", 3)),
        retry_backoff=float(csec.get("retry_backoff", 1.0)),
    )

    isec = _section(raw, "integrate")
    method = isec.get("method", "llm")
    if method not in ENSEMBLE_METHODS:
        raise ConfigError(f"integrate.method must be one of {ENSEMBLE_METHODS}, got {method!r}")
    integrate_cfg = IntegrateConfig(method=method, integrator=isec.get("integrator"))
    if method == "llm":
        if not classify_cfg.judges:
            raise ConfigError("integrate.method=llm requires a non-empty classify.judges list")
        if not integrate_cfg.integrator:
            raise ConfigError("integrate.method=llm requires integrate.integrator")

    variants = list(_section(raw, "index").get("variants", list(VARIANTS)))
    unknown = [v for v in variants if v not in VARIANTS]
    if unknown:
        raise ConfigError(f"unknown index variants {unknown}; expected from {sorted(VARIANTS)}")

    evaluations = []
    for i, esec in enumerate(raw.get("evaluate") or []):
        if "reference" not in esec:
            raise ConfigError(f"evaluate[{i}] needs a reference series path")
        psi_variant = esec.get("psi_variant", "general")
        evaluations.append(
            EvaluateSpec(
                name=esec.get("name", f"{psi_variant}_vs_{Path(str(esec['reference'])).stem}"),
                reference=_path(base, esec["reference"]),
                psi_variant=psi_variant,
                transform=esec.get("transform", "yoy_pct"),
                lag_min=int(esec.get("lag_min", 0)),
                lag_max=int(esec.get("lag_max", 24)),
                min_overlap=int(esec.get("min_overlap", 24)),
                max_lag=int(esec.get("max_lag", 12)),
            )
        )

    psec = _section(raw, "prompts")
    prompts_cfg = PromptConfig(
        language=psec.get("language", "en"),
        template_dir=_path(base, psec.get("template_dir")),
        direction_shots=_path(base, psec.get("direction_shots")),
        filtration_shots=_path(base, psec.get("filtration_shots")),
    )

    return PipelineConfig(
        corpus_path=_path(base, corpus["path"]),
        corpus_format=corpus_format,
        industry_mapping=_path(base, raw.get("industry_mapping")),
        output_dir=_path(base, raw.get("output_dir", "out")),
        cache=_path(base, raw.get("cache")),
        seed=int(raw.get("seed", 0)),
        min_month=min_month,
        strict_industry=bool(raw.get("strict_industry", False)),
        clients=clients,
        filter=filter_cfg,
        classify=classify_cfg,
        integrate=integrate_cfg,
        variants=variants,
        evaluations=evaluations,
        prompts=prompts_cfg,
        config_path=path,
    )
