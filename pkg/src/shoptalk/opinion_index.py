"""Immutable opinion index: (product, feature, polarity) -> ranked spans.

Every opinion uttered downstream is grounded by a span retrieved here.
Ranking is deterministic: descending |score|, ties broken by review id,
sentence ordinal, then surface form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from . import annotate
from .annotate import NEGATIVE, NEUTRAL, POSITIVE, OpinionSpan
from .corpus import ProductCatalog, ReviewStore
from .errors import DanglingSpanError, SchemaViolationError

SNAPSHOT_VERSION = 1

SpanIdentity = tuple[str, int, str]
IndexKey = tuple[str, str, str]  # (product_id, feature_canonical, polarity_label)


def _rank_key(span: OpinionSpan):
    return (
        -abs(span.polarity_score),
        span.review_id,
        span.sentence_ordinal,
        span.feature_surface,
    )


@dataclass(frozen=True)
class OpinionIndex:
    entries: dict[IndexKey, tuple[OpinionSpan, ...]]
    feature_directory: dict[str, frozenset[str]]
    non_neutral_counts: dict[str, int]

    def spans_for(self, key: IndexKey) -> tuple[OpinionSpan, ...]:
        return self.entries.get(key, ())


def build_index(
    catalog: ProductCatalog, store: ReviewStore, spans: Iterable[OpinionSpan]
) -> OpinionIndex:
    """Group spans by (product, feature, label); rejects spans whose review
    or sentence does not exist."""
    sentences = annotate.sentence_map(store)
    grouped: dict[IndexKey, list[OpinionSpan]] = {}
    directory: dict[str, set[str]] = {}
    counts: dict[str, int] = {}
    for span in spans:
        review = store.get(span.review_id)
        if review is None:
            raise DanglingSpanError(span.review_id, "review not in store")
        if not 0 <= span.sentence_ordinal < len(sentences[span.review_id]):
            raise DanglingSpanError(
                span.review_id, f"sentence ordinal {span.sentence_ordinal}"
            )
        product_id = review.product_id
        key = (product_id, span.feature_canonical, span.polarity_label)
        grouped.setdefault(key, []).append(span)
        if span.polarity_label != NEUTRAL:
            directory.setdefault(product_id, set()).add(span.feature_canonical)
            counts[product_id] = counts.get(product_id, 0) + 1
    entries = {
        key: tuple(sorted(group, key=_rank_key)) for key, group in grouped.items()
    }
    return OpinionIndex(
        entries=entries,
        feature_directory={pid: frozenset(feats) for pid, feats in directory.items()},
        non_neutral_counts=counts,
    )


def query(
    index: OpinionIndex,
    product_id: str,
    feature: str,
    label: str,
    exclude: frozenset[SpanIdentity] | set[SpanIdentity] = frozenset(),
) -> Optional[OpinionSpan]:
    """First non-excluded span for the key, or None.  Neutral queries are a
    caller error; neutral spans are never returned."""
    if label not in (POSITIVE, NEGATIVE):
        raise ValueError(f"query label must be positive or negative, got {label!r}")
    for span in index.spans_for((product_id, feature, label)):
        if span.identity not in exclude:
            return span
    return None


def features_of(
    index: OpinionIndex, product_id: str, label: Optional[str] = None
) -> list[tuple[str, int]]:
    """Features of a product with non-neutral span counts, sorted by
    descending count then ascending name; restricted to one label if given."""
    labels = (POSITIVE, NEGATIVE) if label is None else (label,)
    counts: dict[str, int] = {}
    for feature in index.feature_directory.get(product_id, ()):
        total = sum(
            len(index.spans_for((product_id, feature, lab))) for lab in labels
        )
        if total:
            counts[feature] = total
    return sorted(counts.items(), key=lambda item: (-item[1], item[0]))


def save_index(index: OpinionIndex, path: str | Path) -> None:
    """Write a versioned line-record snapshot that reloads exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"schema": "opinion-index", "version": SNAPSHOT_VERSION}) + "\n")
        for key in sorted(index.entries):
            product_id, _, _ = key
            for span in index.entries[key]:
                record = {
                    "product_id": product_id,
                    "review_id": span.review_id,
                    "sentence_ordinal": span.sentence_ordinal,
                    "feature_surface": span.feature_surface,
                    "feature_canonical": span.feature_canonical,
                    "polarity_score": span.polarity_score,
                    "polarity_label": span.polarity_label,
                    "source": span.source,
                }
                fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_index(path: str | Path) -> OpinionIndex:
    """Rebuild an index snapshot written by save_index."""
    grouped: dict[IndexKey, list[OpinionSpan]] = {}
    directory: dict[str, set[str]] = {}
    counts: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        try:
            meta = json.loads(header)
            if meta.get("schema") != "opinion-index":
                raise ValueError("not an opinion-index snapshot")
            if meta.get("version") != SNAPSHOT_VERSION:
                raise ValueError(f"unsupported snapshot version {meta.get('version')}")
        except (ValueError, AttributeError) as exc:
            raise SchemaViolationError(1, str(exc)) from exc
        for line_no, line in enumerate(fh, 2):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                span = OpinionSpan(
                    review_id=record["review_id"],
                    sentence_ordinal=int(record["sentence_ordinal"]),
                    feature_surface=record["feature_surface"],
                    feature_canonical=record["feature_canonical"],
                    polarity_score=float(record["polarity_score"]),
                    polarity_label=record["polarity_label"],
                    source=record["source"],
                )
                product_id = record["product_id"]
            except (ValueError, KeyError, TypeError) as exc:
                raise SchemaViolationError(line_no, str(exc)) from exc
            key = (product_id, span.feature_canonical, span.polarity_label)
            grouped.setdefault(key, []).append(span)
            if span.polarity_label != NEUTRAL:
                directory.setdefault(product_id, set()).add(span.feature_canonical)
                counts[product_id] = counts.get(product_id, 0) + 1
    entries = {
        key: tuple(sorted(group, key=_rank_key)) for key, group in grouped.items()
    }
    return OpinionIndex(
        entries=entries,
        feature_directory={pid: frozenset(feats) for pid, feats in directory.items()},
        non_neutral_counts=counts,
    )
