import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psi_pipeline.corpus import (
    CorpusError,
    Domain,
    IndustryClass,
    LabeledComment,
    RecordError,
    Relevance,
    SplitSpec,
    SurveyComment,
    SurveyKind,
    UnknownIndustryError,
    filter_by_segment,
    load_comments,
    load_industry_mapping,
    load_labeled_comments,
    normalize_industry,
    split_dataset,
    strip_parentheses,
    write_comments,
)
from psi_pipeline.months import Month


def make_comment(i=1, month="2019-01", domain=Domain.HOUSEHOLD, industry="Retail", text="Prices rose."):
    return SurveyComment(
        id=f"c{i}",
        month=Month.parse(month),
        domain=domain,
        industry_raw=industry,
        text=text,
        survey_kind=SurveyKind.CURRENT,
    )


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")


def record(i=1, **overrides):
    rec = {
        "id": f"c{i}",
        "month": "2019-03",
        "domain": "household",
        "industry": "Retail",
        "text": f"Comment number {i}.",
        "kind": "current",
    }
    rec.update(overrides)
    return rec


class TestLoadComments:
    def test_three_line_jsonl_in_file_order(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [record(1), record(2), record(3)])
        comments = load_comments(path, "jsonl", min_month=None)
        assert [c.id for c in comments] == ["c1", "c2", "c3"]

    def test_empty_text_rejected_with_line_number(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [record(1), record(2, text="   ")])
        with pytest.raises(RecordError, match="line 2"):
            load_comments(path, "jsonl", min_month=None)

    def test_domain_alias_household_trends(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [record(1, domain="household trends"), record(2, domain="Corporate Trends")])
        comments = load_comments(path, "jsonl", min_month=None)
        assert comments[0].domain is Domain.HOUSEHOLD
        assert comments[1].domain is Domain.CORPORATE

    def test_missing_field(self, tmp_path):
        path = tmp_path / "c.jsonl"
        rec = record(1)
        del rec["industry"]
        write_jsonl(path, [rec])
        with pytest.raises(RecordError, match="industry"):
            load_comments(path, "jsonl", min_month=None)

    def test_invalid_enum(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [record(1, kind="retrospective")])
        with pytest.raises(RecordError, match="survey kind"):
            load_comments(path, "jsonl", min_month=None)

    def test_invalid_json_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text(json.dumps(record(1)) + "\n{broken\n", encoding="utf-8")
        with pytest.raises(RecordError, match="line 2"):
            load_comments(path, "jsonl", min_month=None)

    def test_pre_window_months_dropped_by_default(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [record(1, month="2000-06"), record(2, month="2001-01")])
        assert [c.id for c in load_comments(path, "jsonl")] == ["c2"]
        assert len(load_comments(path, "jsonl", min_month=None)) == 2

    def test_csv_round_trip(self, tmp_path):
        comments = [make_comment(i, industry="Retail (store)") for i in range(1, 4)]
        for fmt in ("jsonl", "csv"):
            path = tmp_path / f"c.{fmt}"
            write_comments(comments, path, fmt)
            assert load_comments(path, fmt, min_month=None) == comments

    def test_csv_missing_column(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("id,month,domain,text,kind\n", encoding="utf-8")
        with pytest.raises(CorpusError, match="industry"):
            load_comments(path, "csv", min_month=None)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CorpusError, match="not found"):
            load_comments(tmp_path / "nope.jsonl")


class TestLabeledComments:
    def test_relevance_and_direction_keys(self, tmp_path):
        path = tmp_path / "l.jsonl"
        write_jsonl(
            path,
            [
                record(1, relevance="yes"),
                record(2, relevance="not_price_related", direction="fall"),
            ],
        )
        labeled = load_labeled_comments(path, min_month=None)
        assert labeled[0].relevance is Relevance.PRICE_RELATED
        assert labeled[1].direction.value == "fall"

    def test_unlabeled_record_rejected(self, tmp_path):
        path = tmp_path / "l.jsonl"
        write_jsonl(path, [record(1)])
        with pytest.raises(RecordError, match="relevance or direction"):
            load_labeled_comments(path, min_month=None)

    def test_type_invariant(self):
        with pytest.raises(CorpusError):
            LabeledComment(make_comment())


class TestNormalizeIndustry:
    MAPPING = {"Retail": IndustryClass.NON_MANUFACTURING, "Chemicals": IndustryClass.MANUFACTURING}

    def test_ascii_parenthetical(self):
        got = normalize_industry("Retail (convenience store)", self.MAPPING)
        assert got is IndustryClass.NON_MANUFACTURING

    def test_exact_name(self):
        assert normalize_industry("Chemicals", self.MAPPING) is IndustryClass.MANUFACTURING

    def test_unknown_strict_vs_lenient(self):
        with pytest.raises(UnknownIndustryError):
            normalize_industry("Unknown sector", self.MAPPING, strict=True)
        assert normalize_industry("Unknown sector", self.MAPPING) is IndustryClass.UNMAPPED

    def test_full_width_and_nested(self):
        assert strip_parentheses("Retail（コンビニ）") == "Retail"
        assert strip_parentheses("Retail (a (b) c)") == "Retail"
        assert strip_parentheses("  Steel (flat) (rolled)  ") == "Steel"

    @given(st.text(alphabet="ab()（） ", max_size=30))
    def test_strip_idempotent(self, text):
        once = strip_parentheses(text)
        assert strip_parentheses(once) == once

    def test_mapping_file(self, tmp_path):
        path = tmp_path / "map.csv"
        path.write_text("industry,class\nRetail,non_manufacturing\nSteel,manufacturing\n", encoding="utf-8")
        mapping = load_industry_mapping(path)
        assert mapping["Steel"] is IndustryClass.MANUFACTURING

    def test_mapping_file_bad_class(self, tmp_path):
        path = tmp_path / "map.csv"
        path.write_text("industry,class\nRetail,services\n", encoding="utf-8")
        with pytest.raises(RecordError, match="line 2"):
            load_industry_mapping(path)


def labeled(n):
    return [
        LabeledComment(make_comment(i), relevance=Relevance.PRICE_RELATED)
        for i in range(n)
    ]


class TestSplitDataset:
    def test_paper_ratios_1000(self):
        train, dev, test = split_dataset(labeled(1000), SplitSpec(0.7, 0.1, 0.2, seed=42))
        assert (len(train), len(dev), len(test)) == (700, 100, 200)

    def test_floor_allocation_10(self):
        train, dev, test = split_dataset(labeled(10), SplitSpec(0.7, 0.1, 0.2, seed=0))
        assert (len(train), len(dev), len(test)) == (7, 1, 2)

    def test_deterministic_per_seed(self):
        data = labeled(50)
        spec = SplitSpec(0.7, 0.1, 0.2, seed=7)
        assert split_dataset(data, spec) == split_dataset(data, spec)
        other = split_dataset(data, SplitSpec(0.7, 0.1, 0.2, seed=8))
        assert other != split_dataset(data, spec)

    @given(st.integers(min_value=3, max_value=120), st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=50)
    def test_partition_property(self, n, seed):
        data = labeled(n)
        train, dev, test = split_dataset(data, SplitSpec(0.7, 0.1, 0.2, seed=seed))
        combined = [c.comment.id for c in train + dev + test]
        assert sorted(combined) == sorted(c.comment.id for c in data)
        assert len(set(combined)) == len(combined)

    @pytest.mark.parametrize(
        "ratios", [(0.5, 0.5, 0.2), (0.0, 0.5, 0.5), (1.0, 0.1, 0.2), (0.4, 0.4, 0.1)]
    )
    def test_invalid_spec(self, ratios):
        with pytest.raises(CorpusError):
            SplitSpec(*ratios, seed=0)

    def test_too_small(self):
        with pytest.raises(CorpusError):
            split_dataset(labeled(2), SplitSpec(0.7, 0.1, 0.2, seed=0))


class TestFilterBySegment:
    MAPPING = {
        "Retail": IndustryClass.NON_MANUFACTURING,
        "Steel": IndustryClass.MANUFACTURING,
    }

    def comments(self):
        return [
            make_comment(1, domain=Domain.HOUSEHOLD, industry="Steel"),
            make_comment(2, domain=Domain.HOUSEHOLD, industry="Retail (store)"),
            make_comment(3, domain=Domain.CORPORATE, industry="Steel"),
            make_comment(4, domain=Domain.HOUSEHOLD, industry="Mystery"),
        ]

    def test_household_manufacturing_segment(self):
        got = filter_by_segment(
            self.comments(), Domain.HOUSEHOLD, IndustryClass.MANUFACTURING, self.MAPPING
        )
        assert [c.id for c in got] == ["c1"]

    def test_no_filters_identity(self):
        comments = self.comments()
        assert filter_by_segment(comments) == comments

    def test_no_match_empty(self):
        got = filter_by_segment(
            self.comments(), Domain.CORPORATE, IndustryClass.NON_MANUFACTURING, self.MAPPING
        )
        assert got == []

    def test_unmapped_excluded_under_industry_filter(self):
        got = filter_by_segment(
            self.comments(), None, IndustryClass.NON_MANUFACTURING, self.MAPPING
        )
        assert [c.id for c in got] == ["c2"]

    def test_subset_preserving_order(self):
        comments = self.comments()
        got = filter_by_segment(comments, Domain.HOUSEHOLD)
        assert got == [c for c in comments if c.domain is Domain.HOUSEHOLD]

    def test_industry_filter_requires_mapping(self):
        with pytest.raises(CorpusError, match="mapping"):
            filter_by_segment(self.comments(), None, IndustryClass.MANUFACTURING, None)
