"""Dataset serialization, re-derivation validation, and statistics.

One conversation per line (``dataset.jsonl``), schema_version 1.  The
validator trusts nothing from the generator: substring and polarity checks
are recomputed against the ingested corpus and a freshly built index.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import annotate
from .assembly import Conversation, ConversationTemplate, builtin_templates
from .corpus import ProductCatalog, ReviewStore
from .errors import SchemaViolationError
from .negotiation import KIND_BY_ACT, SIGNATURES
from .opinion_index import OpinionIndex
from .search_dialog import AlternativesSet
from .turns import ASSISTANT, CUSTOMER, SEARCH_ACTS, Turn

RULE_GROUNDING = "grounding"
RULE_POLARITY = "polarity"
RULE_TEMPLATE = "template_conformance"
RULE_POOL = "product_pool"
RULE_REUSE = "span_reuse"
RULE_ALTERNATION = "alternation"

ALL_RULES = (
    RULE_GROUNDING,
    RULE_POLARITY,
    RULE_TEMPLATE,
    RULE_POOL,
    RULE_REUSE,
    RULE_ALTERNATION,
)


def write_dataset(conversations: list[Conversation], path: str | Path) -> None:
    """Write one conversation per line; key order is canonical so equal
    datasets are byte-identical."""
    with open(path, "w", encoding="utf-8") as fh:
        for conversation in conversations:
            fh.write(
                json.dumps(conversation.to_record(), sort_keys=True, ensure_ascii=False)
                + "\n"
            )


def conversation_from_record(record: dict) -> Conversation:
    turns = [Turn.from_record(t) for t in record["turns"]]
    search_turns = tuple(t for t in turns if t.act in SEARCH_ACTS)
    evaluation_turns = tuple(t for t in turns if t.act not in SEARCH_ACTS)
    alternatives = AlternativesSet(
        seed_product=record["alternatives"]["seed_product"],
        members=tuple(record["alternatives"]["members"]),
    )
    return Conversation(
        id=record["id"],
        template_id=int(record["template_id"]),
        master_seed=int(record["master_seed"]),
        search_turns=search_turns,
        evaluation_turns=evaluation_turns,
        pair_trace=tuple(copy.deepcopy(record.get("pair_trace", []))),
        product_trajectory=tuple(record["product_trajectory"]),
        alternatives=alternatives,
    )


def read_dataset(path: str | Path) -> list[Conversation]:
    conversations = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                if record.get("schema_version") != 1:
                    raise ValueError(
                        f"unsupported schema_version {record.get('schema_version')}"
                    )
                conversations.append(conversation_from_record(record))
            except (ValueError, KeyError, TypeError) as exc:
                raise SchemaViolationError(line_no, str(exc)) from exc
    return conversations


@dataclass
class ValidationReport:
    conversations_checked: int = 0
    violations: list[tuple[str, str, str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def add(self, conversation_id: str, rule: str, detail: str) -> None:
        self.violations.append((conversation_id, rule, detail))

    def to_records(self) -> list[dict]:
        return [
            {"conversation_id": cid, "rule": rule, "detail": detail}
            for cid, rule, detail in self.violations
        ]

    def summary(self) -> str:
        lines = [
            f"conversations checked: {self.conversations_checked}",
            f"violations: {len(self.violations)}",
        ]
        for cid, rule, detail in self.violations:
            lines.append(f"  {cid} [{rule}] {detail}")
        return "\n".join(lines)


def validate(
    dataset_path: str | Path,
    catalog: ProductCatalog,
    store: ReviewStore,
    index: OpinionIndex,
    templates: Optional[list[ConversationTemplate]] = None,
) -> ValidationReport:
    """Apply all six rules to every conversation, re-deriving every check
    from the corpus rather than trusting generator metadata."""
    conversations = read_dataset(dataset_path)
    sentences = annotate.sentence_map(store)
    template_map = {
        t.id: t for t in (templates if templates is not None else builtin_templates())
    }
    report = ValidationReport()
    for conversation in sorted(conversations, key=lambda c: c.id):
        report.conversations_checked += 1
        _check_alternation(conversation, report)
        _check_template(conversation, template_map, report)
        _check_grounding(conversation, store, sentences, report)
        _check_polarity(conversation, index, sentences, report)
        _check_pool(conversation, catalog, report)
        _check_reuse(conversation, report)
    report.violations.sort()
    return report


def _expected_labels(act: str) -> Optional[tuple[Optional[str], str]]:
    kind = KIND_BY_ACT.get(act)
    if kind is None:
        return None
    sig = SIGNATURES[kind]
    return sig.customer_label, sig.assistant_label


def _check_alternation(conversation: Conversation, report: ValidationReport) -> None:
    turns = conversation.evaluation_turns
    if len(turns) % 2 != 0:
        report.add(conversation.id, RULE_ALTERNATION, "odd number of evaluation turns")
    for i, turn in enumerate(turns):
        expected = CUSTOMER if i % 2 == 0 else ASSISTANT
        if turn.speaker != expected:
            report.add(
                conversation.id,
                RULE_ALTERNATION,
                f"turn {i} spoken by {turn.speaker}, expected {expected}",
            )


def _check_template(
    conversation: Conversation,
    template_map: dict[int, ConversationTemplate],
    report: ValidationReport,
) -> None:
    template = template_map.get(conversation.template_id)
    if template is None:
        report.add(
            conversation.id,
            RULE_TEMPLATE,
            f"unknown template id {conversation.template_id}",
        )
        return
    declared = tuple(kind.value for kind in template.sequence)
    traced = tuple(entry.get("kind") for entry in conversation.pair_trace)
    if traced != declared:
        report.add(
            conversation.id,
            RULE_TEMPLATE,
            f"pair trace {traced} != template sequence {declared}",
        )
    acts = tuple(t.act for t in conversation.evaluation_turns)
    expected_acts = tuple(
        kind.act for kind in template.sequence for _ in range(2)
    )
    if acts != expected_acts:
        report.add(
            conversation.id,
            RULE_TEMPLATE,
            f"turn acts {acts} do not follow the template sequence",
        )


def _check_grounding(
    conversation: Conversation,
    store: ReviewStore,
    sentences: dict,
    report: ValidationReport,
) -> None:
    for i, turn in enumerate(conversation.evaluation_turns):
        labels = _expected_labels(turn.act)
        if labels is None:
            report.add(conversation.id, RULE_GROUNDING, f"turn {i}: unknown act {turn.act}")
            continue
        customer_label, _ = labels
        is_neutral_question = turn.speaker == CUSTOMER and customer_label is None
        if is_neutral_question:
            if turn.grounding:
                report.add(
                    conversation.id,
                    RULE_GROUNDING,
                    f"turn {i}: neutral question must not carry grounding",
                )
            continue
        if not turn.grounding:
            report.add(
                conversation.id, RULE_GROUNDING, f"turn {i}: opinion turn lacks grounding"
            )
            continue
        for ref in turn.grounding:
            review = store.get(ref.review_id)
            if review is None:
                report.add(
                    conversation.id,
                    RULE_GROUNDING,
                    f"turn {i}: unknown review {ref.review_id}",
                )
                continue
            review_sentences = sentences.get(ref.review_id, [])
            if not 0 <= ref.sentence_ordinal < len(review_sentences):
                report.add(
                    conversation.id,
                    RULE_GROUNDING,
                    f"turn {i}: sentence ordinal {ref.sentence_ordinal} out of range",
                )
                continue
            sentence_text = review_sentences[ref.sentence_ordinal].text
            if sentence_text not in turn.text:
                report.add(
                    conversation.id,
                    RULE_GROUNDING,
                    f"turn {i}: grounded sentence is not a verbatim substring",
                )


def _check_polarity(
    conversation: Conversation,
    index: OpinionIndex,
    sentences: dict,
    report: ValidationReport,
) -> None:
    for i, turn in enumerate(conversation.evaluation_turns):
        labels = _expected_labels(turn.act)
        if labels is None:
            continue
        customer_label, assistant_label = labels
        required = customer_label if turn.speaker == CUSTOMER else assistant_label
        if required is None:
            continue
        for ref in turn.grounding:
            # existence failures belong to the grounding rule; skip here
            review_sentences = sentences.get(ref.review_id)
            if review_sentences is None or not (
                0 <= ref.sentence_ordinal < len(review_sentences)
            ):
                continue
            if ref.label != required:
                report.add(
                    conversation.id,
                    RULE_POLARITY,
                    f"turn {i}: label {ref.label} != required {required}",
                )
                continue
            identity = (ref.review_id, ref.sentence_ordinal, ref.feature)
            indexed = index.spans_for((turn.product_id, ref.feature, required))
            if not any(span.identity == identity for span in indexed):
                report.add(
                    conversation.id,
                    RULE_POLARITY,
                    f"turn {i}: corpus index has no {required} span "
                    f"{identity} for product {turn.product_id}",
                )


def _check_pool(
    conversation: Conversation, catalog: ProductCatalog, report: ValidationReport
) -> None:
    trajectory = conversation.product_trajectory
    alternatives = conversation.alternatives
    if not trajectory or trajectory[0] != alternatives.seed_product:
        report.add(
            conversation.id,
            RULE_POOL,
            "trajectory does not start at the alternatives seed",
        )
        return
    allowed = set(alternatives.members)
    visited: list[str] = []

    def visit(product_id: str) -> bool:
        if product_id in visited:
            return True
        if product_id not in allowed:
            return False
        visited.append(product_id)
        product = catalog.get(product_id)
        if product is not None:
            allowed.update(product.also_viewed)
        return True

    visit(trajectory[0])
    for i, turn in enumerate(conversation.evaluation_turns):
        if turn.product_id is None:
            report.add(conversation.id, RULE_POOL, f"turn {i}: missing product id")
            continue
        if not visit(turn.product_id):
            report.add(
                conversation.id,
                RULE_POOL,
                f"turn {i}: product {turn.product_id} outside "
                "alternatives + also-viewed chain",
            )
    if tuple(visited) != trajectory:
        report.add(
            conversation.id,
            RULE_POOL,
            f"recorded trajectory {trajectory} != recomputed {tuple(visited)}",
        )


def _check_reuse(conversation: Conversation, report: ValidationReport) -> None:
    seen = set()
    for turn in conversation.evaluation_turns:
        for ref in turn.grounding:
            identity = (ref.review_id, ref.sentence_ordinal, ref.feature)
            if identity in seen:
                report.add(
                    conversation.id, RULE_REUSE, f"span {identity} used twice"
                )
            seen.add(identity)


@dataclass
class DatasetStats:
    conversations: int = 0
    per_template: dict[int, int] = field(default_factory=dict)
    per_pair_kind: dict[str, int] = field(default_factory=dict)
    mean_turns: float = 0.0
    distinct_products: int = 0
    distinct_features: int = 0
    span_reuse: int = 0

    def to_record(self) -> dict:
        return {
            "conversations": self.conversations,
            "per_template": {str(k): v for k, v in sorted(self.per_template.items())},
            "per_pair_kind": dict(sorted(self.per_pair_kind.items())),
            "mean_turns": self.mean_turns,
            "distinct_products": self.distinct_products,
            "distinct_features": self.distinct_features,
            "span_reuse": self.span_reuse,
        }

    def summary(self) -> str:
        lines = [f"conversations: {self.conversations}"]
        lines.append("per template: " + ", ".join(
            f"{k}:{v}" for k, v in sorted(self.per_template.items())
        ))
        lines.append("per pair kind: " + ", ".join(
            f"{k}:{v}" for k, v in sorted(self.per_pair_kind.items())
        ))
        lines.append(f"mean turns per conversation: {self.mean_turns:.2f}")
        lines.append(f"distinct products: {self.distinct_products}")
        lines.append(f"distinct features: {self.distinct_features}")
        lines.append(f"span reuse count: {self.span_reuse}")
        return "\n".join(lines)


def stats(dataset_path: str | Path) -> DatasetStats:
    """Aggregate counts over a dataset file."""
    conversations = read_dataset(dataset_path)
    result = DatasetStats(conversations=len(conversations))
    products: set[str] = set()
    features: set[str] = set()
    total_turns = 0
    for conversation in conversations:
        result.per_template[conversation.template_id] = (
            result.per_template.get(conversation.template_id, 0) + 1
        )
        for entry in conversation.pair_trace:
            kind = entry.get("kind", "?")
            result.per_pair_kind[kind] = result.per_pair_kind.get(kind, 0) + 1
        total_turns += len(conversation.turns)
        products.update(conversation.product_trajectory)
        seen = set()
        for turn in conversation.evaluation_turns:
            if turn.product_id:
                products.add(turn.product_id)
            if turn.feature:
                features.add(turn.feature)
            for ref in turn.grounding:
                identity = (ref.review_id, ref.sentence_ordinal, ref.feature)
                if identity in seen:
                    result.span_reuse += 1
                seen.add(identity)
    result.mean_turns = total_turns / len(conversations) if conversations else 0.0
    result.distinct_products = len(products)
    result.distinct_features = len(features)
    return result
