"""Ingestion and normalization contracts."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shoptalk.corpus import (
    IngestOptions,
    ingest_metadata,
    ingest_reviews,
    normalize_text,
    write_catalog,
    write_reviews,
)
from shoptalk.errors import DuplicateIdError, MalformedRecordError

from conftest import write_jsonl


class TestNormalizeText:
    def test_appends_terminal_period(self):
        assert normalize_text("great phone") == "great phone."

    def test_restores_spacing_around_punctuation(self):
        # hand-derived: strip space before '.', insert space after it
        assert normalize_text("good camera .nice screen") == "good camera. nice screen."

    def test_empty_input(self):
        assert normalize_text("") == ""
        assert normalize_text("   \n\t ") == ""

    def test_collapses_whitespace(self):
        assert normalize_text("a  b\t\nc") == "a b c."

    def test_decimal_numbers_untouched(self):
        assert normalize_text("It weighs 1.5 ounces") == "It weighs 1.5 ounces."

    def test_existing_terminal_punctuation_kept(self):
        assert normalize_text("Really?") == "Really?"
        assert normalize_text("Wow!") == "Wow!"

    @settings(max_examples=300)
    @given(st.text(max_size=200))
    def test_idempotent(self, raw):
        once = normalize_text(raw)
        assert normalize_text(once) == once


class TestIngestMetadata:
    def test_single_record(self, tmp_path):
        path = write_jsonl(tmp_path / "meta.jsonl", [{"id": "B00X", "title": "Axon 7"}])
        catalog = ingest_metadata(path)
        assert len(catalog) == 1
        assert catalog.get("B00X").title == "Axon 7"

    def test_self_reference_dropped(self, tmp_path):
        path = write_jsonl(
            tmp_path / "meta.jsonl",
            [{"id": "B1", "title": "A", "also_viewed": ["B1", "B2"]}],
        )
        catalog = ingest_metadata(path)
        assert catalog.get("B1").also_viewed == ("B2",)
        assert catalog.report.self_refs_dropped == 1

    def test_duplicate_id_fatal_even_in_lenient_mode(self, tmp_path):
        path = write_jsonl(
            tmp_path / "meta.jsonl",
            [
                {"id": "B1", "title": "A"},
                {"id": "B2", "title": "B"},
                {"id": "B1", "title": "A again"},
            ],
        )
        with pytest.raises(DuplicateIdError) as exc_info:
            ingest_metadata(path, IngestOptions(strict=False))
        assert exc_info.value.product_id == "B1"
        assert exc_info.value.line_no == 3

    def test_malformed_skipped_lenient(self, tmp_path):
        path = tmp_path / "meta.jsonl"
        path.write_text('{"id": "B1", "title": "A"}\nnot json\n{"title": "no id"}\n')
        catalog = ingest_metadata(path)
        assert len(catalog) == 1
        assert catalog.report.malformed == 2
        assert catalog.report.malformed_lines == [2, 3]

    def test_malformed_aborts_strict(self, tmp_path):
        path = tmp_path / "meta.jsonl"
        path.write_text('{"id": "B1", "title": "A"}\nnot json\n')
        with pytest.raises(MalformedRecordError) as exc_info:
            ingest_metadata(path, IngestOptions(strict=True))
        assert exc_info.value.line_no == 2

    def test_negative_price_rejected(self, tmp_path):
        path = write_jsonl(
            tmp_path / "meta.jsonl", [{"id": "B1", "title": "A", "price": -5}]
        )
        catalog = ingest_metadata(path)
        assert len(catalog) == 0
        assert catalog.report.malformed == 1


class TestIngestReviews:
    def _catalog(self, tmp_path, ids):
        path = write_jsonl(
            tmp_path / "meta.jsonl", [{"id": i, "title": f"t {i}"} for i in ids]
        )
        return ingest_metadata(path)

    def test_known_product_stored(self, tmp_path):
        catalog = self._catalog(tmp_path, ["B1"])
        path = write_jsonl(
            tmp_path / "reviews.jsonl",
            [{"id": "r1", "product_id": "B1", "text": "Great phone"}],
        )
        store = ingest_reviews(path, catalog)
        assert len(store) == 1
        assert store.get("r1").normalized_text == "Great phone."

    def test_orphan_skipped_and_counted(self, tmp_path):
        catalog = self._catalog(tmp_path, ["B1"])
        path = write_jsonl(
            tmp_path / "reviews.jsonl",
            [{"id": "r1", "product_id": "NOPE", "text": "x"}],
        )
        store = ingest_reviews(path, catalog)
        assert len(store) == 0
        assert store.report.orphans == 1

    def test_orphan_counts_on_mixed_file(self, tmp_path):
        # derived fixture: 100 reviews, 7 reference an unknown product
        catalog = self._catalog(tmp_path, ["B1"])
        records = []
        for i in range(100):
            product = "MISSING" if i % 14 == 13 else "B1"  # 7 orphans: i=13,27,...,97
            records.append({"id": f"r{i}", "product_id": product, "text": "ok"})
        assert sum(1 for r in records if r["product_id"] == "MISSING") == 7
        store = ingest_reviews(write_jsonl(tmp_path / "r.jsonl", records), catalog)
        assert len(store) == 93
        assert store.report.orphans == 7
        assert len(store.report.orphan_ids) == 7

    def test_normalized_text_override(self, tmp_path):
        catalog = self._catalog(tmp_path, ["B1"])
        path = write_jsonl(
            tmp_path / "reviews.jsonl",
            [{"id": "r1", "product_id": "B1", "text": "raw", "normalized_text": "Pre done."}],
        )
        store = ingest_reviews(path, catalog)
        assert store.get("r1").normalized_text == "Pre done."

    def test_rating_bounds(self, tmp_path):
        catalog = self._catalog(tmp_path, ["B1"])
        path = write_jsonl(
            tmp_path / "reviews.jsonl",
            [{"id": "r1", "product_id": "B1", "text": "x", "rating": 9}],
        )
        store = ingest_reviews(path, catalog)
        assert len(store) == 0
        assert store.report.malformed == 1


class TestRoundTrip:
    def test_catalog_round_trip(self, tmp_path):
        records = [
            {"id": "B1", "title": "Axon 7", "brand": "ZTE", "os": "android",
             "memory": "4 GB", "color": "gold", "price": 399.0,
             "also_viewed": ["B2"], "category_path": ["Phones"],
             "description": "A phone."},
            {"id": "B2", "title": "Other"},
        ]
        catalog = ingest_metadata(write_jsonl(tmp_path / "m.jsonl", records))
        write_catalog(catalog, tmp_path / "out.jsonl")
        again = ingest_metadata(tmp_path / "out.jsonl")
        assert again == catalog

    def test_reviews_round_trip(self, tmp_path):
        catalog = ingest_metadata(
            write_jsonl(tmp_path / "m.jsonl", [{"id": "B1", "title": "t"}])
        )
        reviews = [
            {"id": "r1", "product_id": "B1", "text": "messy text .no punct", "rating": 4},
            {"id": "r2", "product_id": "B1", "text": "fine"},
        ]
        store = ingest_reviews(write_jsonl(tmp_path / "r.jsonl", reviews), catalog)
        write_reviews(store, tmp_path / "out.jsonl")
        again = ingest_reviews(tmp_path / "out.jsonl", catalog)
        assert again == store

    def test_written_records_are_valid_json_lines(self, tmp_path):
        catalog = ingest_metadata(
            write_jsonl(tmp_path / "m.jsonl", [{"id": "B1", "title": "t"}])
        )
        write_catalog(catalog, tmp_path / "out.jsonl")
        lines = (tmp_path / "out.jsonl").read_text().splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0])["id"] == "B1"
