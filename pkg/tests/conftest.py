"""Shared fixtures: tiny in-memory corpora and the bundled sample corpus."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from shoptalk.corpus import (
    IngestReport,
    Product,
    ProductCatalog,
    Review,
    ReviewStore,
    normalize_text,
)

DATA_DIR = Path(__file__).parent / "data"


def make_catalog(products: list[Product]) -> ProductCatalog:
    return ProductCatalog({p.id: p for p in products}, IngestReport())


def make_store(reviews: list[Review]) -> ReviewStore:
    return ReviewStore({r.id: r for r in reviews}, IngestReport())


def make_review(review_id: str, product_id: str, text: str) -> Review:
    return Review(
        id=review_id,
        product_id=product_id,
        raw_text=text,
        normalized_text=normalize_text(text),
    )


def write_jsonl(path: Path, records: list[dict]) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")
    return path


@pytest.fixture
def sample_corpus_paths() -> tuple[Path, Path]:
    from importlib.resources import files

    base = files("shoptalk").joinpath("data/sample")
    return Path(str(base / "meta.jsonl")), Path(str(base / "reviews.jsonl"))
