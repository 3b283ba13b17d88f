#!/usr/bin/env python3
"""Regenerate the canned fixture-client replies under fixtures/replies/.

Replies are a pure function of the committed corpus and truth file, so
this is byte-stable across runs. Run scripts/make_fixtures.py first if the
corpus itself changed.
"""

import json
from pathlib import Path

from psi_pipeline.corpus import load_comments
from psi_pipeline.testing import (
    FixtureJudgeProfile,
    write_direction_replies,
    write_filtration_replies,
)

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
REPLIES = FIXTURES / "replies"


def main() -> None:
    comments = load_comments(FIXTURES / "corpus" / "comments_200.jsonl", min_month=None)
    truth = {}
    label_map = {"rise": "Rise", "stable": "Stable", "fall": "Fall", "not_related": "Not related"}
    with open(FIXTURES / "corpus" / "direction_truth.jsonl", encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            truth[rec["id"]] = label_map[rec["direction"]]

    profiles = [
        FixtureJudgeProfile(REPLIES / "judge_a", "fixture-judge-a", disagree_every=0, base_confidence=90),
        FixtureJudgeProfile(REPLIES / "judge_b", "fixture-judge-b", disagree_every=7, base_confidence=80),
    ]
    write_direction_replies(comments, truth, profiles, integrator_dir=REPLIES / "integrator")

    related = {cid for cid, label in truth.items() if label != "Not related"}
    write_filtration_replies(comments, related, REPLIES / "filter")
    n = sum(1 for _ in REPLIES.rglob("*.txt"))
    print(f"wrote {n} canned replies under {REPLIES}")


if __name__ == "__main__":
    main()
