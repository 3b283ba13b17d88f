"""Per-stage run manifest for resumable pipelines.

A stage records digests of its inputs and the config; when both match on a
later run and the outputs still exist, the stage is skipped. Artifacts are
written temp-then-rename so a crash never leaves half-written outputs.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from pathlib import Path

from . import __version__


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def config_digest(config_path) -> str:
    return file_digest(config_path) if config_path else ""


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


class RunManifest:
    def __init__(self, path):
        self.path = Path(path)
        self.stages: dict[str, dict] = {}
        if self.path.exists():
            self.stages = json.loads(self.path.read_text(encoding="utf-8")).get("stages", {})

    def _digests(self, inputs: list[Path]) -> dict[str, str]:
        return {str(p): file_digest(p) for p in inputs}

    def skippable(self, stage: str, inputs: list[Path], cfg_digest: str) -> bool:
        rec = self.stages.get(stage)
        if rec is None:
            return False
        if rec.get("config_digest") != cfg_digest:
            return False
        if any(not Path(p).exists() for p in rec.get("outputs", [])):
            return False
        if any(not Path(p).exists() for p in inputs):
            return False
        return rec.get("inputs") == self._digests(inputs)

    def record(self, stage: str, inputs: list[Path], cfg_digest: str, outputs: list[Path]) -> None:
        self.stages[stage] = {
            "inputs": self._digests(inputs),
            "config_digest": cfg_digest,
            "outputs": [str(p) for p in outputs],
            "completed_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "version": __version__,
        }
        atomic_write_text(self.path, json.dumps({"stages": self.stages}, indent=2) + "\n")
