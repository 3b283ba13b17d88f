#!/usr/bin/env python3
"""Regenerate the committed fixture corpus under fixtures/.

Everything is seeded, so rerunning this script reproduces the files
byte-for-byte. The truth file records each comment's intended direction;
scripts/make_fixture_replies.py turns it into canned judge replies.
"""

import json
import math
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

SEED = 20240901
N_COMMENTS = 200
START_YEAR, START_MONTH = 2019, 1
N_MONTHS = 44

ITEMS = [
    "bread", "vegetables", "gasoline", "clothing", "electronics", "hotel rooms",
    "taxi rides", "machine parts", "steel sheets", "lumber", "seafood", "stationery",
]

TEMPLATES = {
    "rise": [
        "Suppliers raised the wholesale price of {item} again, and we passed part of the increase on to customers.",
        "The purchase price of {item} keeps climbing, so our selling prices were revised upward this month.",
        "Due to higher fuel and material costs, charges for {item} were increased.",
        "The unit price of {item} has been rising since last season, and customers are starting to notice.",
    ],
    "fall": [
        "Discount competition on {item} intensified, and shelf prices were cut again.",
        "The customer unit price for {item} is decreasing as shoppers shift to budget lines.",
        "We lowered the price of {item} to clear inventory, and margins are thinner than last year.",
        "Falling market prices for {item} forced another round of markdowns.",
    ],
    "stable": [
        "Prices of {item} have stayed unchanged for several months despite cost pressure.",
        "The unit price of {item} has stopped falling and is holding steady.",
        "List prices for {item} remain flat, and customers seem to accept the current level.",
    ],
    "not_related": [
        "Visitor numbers for {item} promotions recovered, and weekend reservations are up.",
        "Orders for {item} are sluggish because customers are waiting for the new model.",
        "Deliveries of {item} were delayed by the weather, and staff overtime continues.",
        "Inquiries about {item} increased after the trade fair, mostly from regular clients.",
    ],
}
DIRECTION_WEIGHTS = [("rise", 0.30), ("fall", 0.30), ("stable", 0.20), ("not_related", 0.20)]

MANUFACTURING = ["Food manufacturing", "Chemicals", "Electronics manufacturing", "Textiles", "Machinery", "Steel"]
NON_MANUFACTURING = ["Retail", "Restaurants", "Hotels", "Transportation", "Construction", "Wholesale"]
QUALIFIERS = {
    "Retail": ["convenience store", "department store", "supermarket"],
    "Transportation": ["taxi", "trucking"],
    "Food manufacturing": ["bakery", "confectionery"],
    "Hotels": ["city hotel"],
    "Restaurants": ["family restaurant"],
}


def month_str(offset: int) -> str:
    index = (START_YEAR * 12 + START_MONTH - 1) + offset
    return f"{index // 12:04d}-{index % 12 + 1:02d}"


def pick_direction(rng) -> str:
    roll = rng.random()
    acc = 0.0
    for name, w in DIRECTION_WEIGHTS:
        acc += w
        if roll < acc:
            return name
    return DIRECTION_WEIGHTS[-1][0]


def main() -> None:
    rng = random.Random(SEED)
    corpus_dir = FIXTURES / "corpus"
    corpus_dir.mkdir(parents=True, exist_ok=True)

    comments = []
    truth = {}
    for i in range(N_COMMENTS):
        cid = f"c{i + 1:04d}"
        direction = pick_direction(rng)
        item = rng.choice(ITEMS)
        text = rng.choice(TEMPLATES[direction]).format(item=item)
        domain = "household" if rng.random() < 0.65 else "corporate"
        industry = rng.choice(MANUFACTURING + NON_MANUFACTURING + ["Other"])
        if industry in QUALIFIERS and rng.random() < 0.5:
            industry = f"{industry} ({rng.choice(QUALIFIERS[industry])})"
        comments.append(
            {
                "id": cid,
                "month": month_str(i % N_MONTHS),
                "domain": domain,
                "industry": industry,
                "text": text,
                "kind": "current",
            }
        )
        truth[cid] = direction

    # Relevance: directional comments are price-related; a few not_related
    # ones slip through the filter so the fourth label shows up downstream,
    # and a few directional ones are missed.
    slipped = [cid for cid in truth if truth[cid] == "not_related"][:6]
    missed = [cid for cid in truth if truth[cid] != "not_related"][:3]
    predictions = []
    for rec in comments:
        cid = rec["id"]
        related = truth[cid] != "not_related"
        if cid in slipped:
            related = True
        if cid in missed:
            related = False
        predictions.append({"id": cid, "label": "yes" if related else "no"})

    with open(corpus_dir / "comments_200.jsonl", "w", encoding="utf-8") as fh:
        for rec in comments:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    with open(corpus_dir / "direction_truth.jsonl", "w", encoding="utf-8") as fh:
        for cid, direction in truth.items():
            fh.write(json.dumps({"id": cid, "direction": direction}) + "\n")
    with open(corpus_dir / "relevance_predictions.jsonl", "w", encoding="utf-8") as fh:
        for rec in predictions:
            fh.write(json.dumps(rec) + "\n")
    # Gold equals the external predictions, so the demo filter evaluation
    # reports a clean 1.0.
    with open(corpus_dir / "relevance_gold.jsonl", "w", encoding="utf-8") as fh:
        for rec, pred in zip(comments, predictions):
            gold = dict(rec)
            gold["relevance"] = "price_related" if pred["label"] == "yes" else "not_price_related"
            fh.write(json.dumps(gold, ensure_ascii=False) + "\n")

    with open(corpus_dir / "industry_mapping.csv", "w", encoding="utf-8") as fh:
        fh.write("industry,class\n")
        for name in MANUFACTURING:
            fh.write(f"{name},manufacturing\n")
        for name in NON_MANUFACTURING:
            fh.write(f"{name},non_manufacturing\n")

    # Reference series: trend + seasonality + small seeded noise, wider than
    # the corpus window so lagged alignment has slack on both sides.
    ref_rng = random.Random(SEED + 1)
    with open(FIXTURES / "reference_series.csv", "w", encoding="utf-8") as fh:
        fh.write("month,value\n")
        base_index = 2018 * 12
        for t in range(60):
            index = base_index + t
            value = 100.0 + 0.08 * t + 1.5 * math.sin(2 * math.pi * (t % 12) / 12.0)
            value += ref_rng.gauss(0.0, 0.2)
            fh.write(f"{index // 12:04d}-{index % 12 + 1:02d},{value:.4f}\n")

    vocab = [
        "price", "prices", "unit price", "wholesale", "discount", "markdown",
        "markup", "cost", "costs", "raised", "lowered", "cut", "increase",
        "decrease", "rising", "falling", "unchanged", "flat", "steady", "cheap",
    ]
    (FIXTURES / "vocab_price.txt").write_text("\n".join(vocab) + "\n", encoding="utf-8")

    # Small labeled set for the Naive Bayes filter backend demo.
    nb_rng = random.Random(SEED + 2)
    with open(corpus_dir / "nb_train.jsonl", "w", encoding="utf-8") as fh:
        for i in range(40):
            direction = pick_direction(nb_rng)
            item = nb_rng.choice(ITEMS)
            text = nb_rng.choice(TEMPLATES[direction]).format(item=item)
            rec = {
                "id": f"t{i + 1:04d}",
                "month": month_str(i % N_MONTHS),
                "domain": "household" if nb_rng.random() < 0.5 else "corporate",
                "industry": nb_rng.choice(MANUFACTURING + NON_MANUFACTURING),
                "text": text,
                "kind": "current",
                "relevance": "not_price_related" if direction == "not_related" else "price_related",
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")

    print(f"wrote fixtures under {FIXTURES}")


if __name__ == "__main__":
    main()
