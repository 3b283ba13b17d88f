import copy
from pathlib import Path

import pytest
import yaml

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"

DEFAULT_VARIANTS = [
    "general",
    "consumer_general",
    "consumer_goods",
    "consumer_services",
    "corporate_goods",
    "corporate_services",
]


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def golden_dir() -> Path:
    return GOLDEN


def _deep_update(base: dict, overrides: dict) -> dict:
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], value)
        else:
            base[key] = value
    return base


def config_dict(out_dir: Path, replies: Path = FIXTURES / "replies") -> dict:
    return {
        "corpus": {
            "path": str(FIXTURES / "corpus" / "comments_200.jsonl"),
            "format": "jsonl",
            "min_month": "2001-01",
        },
        "industry_mapping": str(FIXTURES / "corpus" / "industry_mapping.csv"),
        "output_dir": str(out_dir),
        "cache": str(out_dir / "cache.jsonl"),
        "seed": 42,
        "clients": {
            "judge_a": {
                "kind": "fixture",
                "directory": str(replies / "judge_a"),
                "model": "fixture-judge-a",
            },
            "judge_b": {
                "kind": "fixture",
                "directory": str(replies / "judge_b"),
                "model": "fixture-judge-b",
            },
            "integrator": {
                "kind": "fixture",
                "directory": str(replies / "integrator"),
                "model": "fixture-integrator",
            },
            "filter_llm": {
                "kind": "fixture",
                "directory": str(replies / "filter"),
                "model": "fixture-filter",
            },
        },
        "filter": {
            "backend": "external",
            "predictions": str(FIXTURES / "corpus" / "relevance_predictions.jsonl"),
            "gold": str(FIXTURES / "corpus" / "relevance_gold.jsonl"),
        },
        "classify": {
            "judges": ["judge_a", "judge_b"],
            "k": 5,
            "with_confidence": True,
            "max_in_flight": 4,
            "retry_backoff": 0.0,
        },
        "integrate": {"method": "llm", "integrator": "integrator"},
        "index": {"variants": list(DEFAULT_VARIANTS)},
        "evaluate": [
            {
                "name": "general_vs_ref",
                "psi_variant": "general",
                "reference": str(FIXTURES / "reference_series.csv"),
                "transform": "level",
                "lag_min": 0,
                "lag_max": 6,
                "min_overlap": 12,
                "max_lag": 6,
            }
        ],
        "prompts": {"language": "en"},
    }


def write_config(path: Path, out_dir: Path, overrides: dict | None = None, replies=None) -> Path:
    cfg = config_dict(out_dir, replies or FIXTURES / "replies")
    if overrides:
        _deep_update(cfg, copy.deepcopy(overrides))
    path.write_text(yaml.safe_dump(cfg, sort_keys=True), encoding="utf-8")
    return path


@pytest.fixture()
def fixture_config(tmp_path) -> Path:
    """Config running the shipped fixture corpus into a tmp output dir."""
    return write_config(tmp_path / "config.yaml", tmp_path / "out")
