"""Dialog pair instantiation under the seven negotiation-tactic kinds.

A pair is one customer utterance plus the assistant's response.  Slots are
filled from the opinion index under hard constraints: grounded spans only
(no lying), no span reused within a conversation, product switches only
into the alternatives set or the current product's also-viewed list.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

from .annotate import NEGATIVE, POSITIVE, OpinionSpan
from .corpus import ProductCatalog, Sentence
from .errors import InvalidStateError, PhrasebankError, UnboundSlotError
from .opinion_index import OpinionIndex, SpanIdentity, features_of
from .search_dialog import AlternativesSet
from .turns import ASSISTANT, CUSTOMER, GroundingRef, Turn


class PairKind(Enum):
    REQUEST_INFORM = "RequestInform"
    DENY_DISAGREEMENT = "DenyDisagreement"
    DENY_SWITCH_PRODUCT = "DenySwitchProduct"
    DENY_SWITCH_FEATURE = "DenySwitchFeature"
    SEARCH_AGREEMENT = "SearchAgreement"
    SEARCH_SWITCH_FEATURE = "SearchSwitchFeature"
    SEARCH_WARNING = "SearchWarning"

    @property
    def act(self) -> str:
        return _ACT_OF[self]


_ACT_OF = {
    PairKind.REQUEST_INFORM: "request_inform",
    PairKind.DENY_DISAGREEMENT: "deny_disagreement",
    PairKind.DENY_SWITCH_PRODUCT: "deny_switch_product",
    PairKind.DENY_SWITCH_FEATURE: "deny_switch_feature",
    PairKind.SEARCH_AGREEMENT: "search_agreement",
    PairKind.SEARCH_SWITCH_FEATURE: "search_switch_feature",
    PairKind.SEARCH_WARNING: "search_warning",
}

KIND_BY_ACT = {kind.act: kind for kind in PairKind}

# Names accepted in template config files on top of the canonical ones.
KIND_ALIASES = {
    "denyswitchitem": PairKind.DENY_SWITCH_PRODUCT,
    "searchswitchproduct": PairKind.DENY_SWITCH_PRODUCT,
}


def parse_kind(name: str) -> PairKind:
    """Resolve a pair-kind name; tolerates dashes/spaces and the two
    documented aliases (Deny--Switch Item, Search--Switch Product)."""
    compact = re.sub(r"[\s_\-]+", "", name).lower()
    for kind in PairKind:
        if kind.value.lower() == compact:
            return kind
    if compact in KIND_ALIASES:
        return KIND_ALIASES[compact]
    raise ValueError(f"unknown pair kind {name!r}")


@dataclass(frozen=True)
class SlotSignature:
    """Polarity and switching contract of one pair kind."""

    customer_label: Optional[str]  # None: neutral question, no grounding
    assistant_label: str
    switches_product: bool = False
    switches_feature: bool = False


SIGNATURES = {
    PairKind.REQUEST_INFORM: SlotSignature(None, POSITIVE),
    PairKind.DENY_DISAGREEMENT: SlotSignature(NEGATIVE, POSITIVE),
    PairKind.DENY_SWITCH_PRODUCT: SlotSignature(NEGATIVE, POSITIVE, switches_product=True),
    PairKind.DENY_SWITCH_FEATURE: SlotSignature(NEGATIVE, POSITIVE, switches_feature=True),
    PairKind.SEARCH_AGREEMENT: SlotSignature(POSITIVE, POSITIVE),
    PairKind.SEARCH_SWITCH_FEATURE: SlotSignature(POSITIVE, POSITIVE, switches_feature=True),
    PairKind.SEARCH_WARNING: SlotSignature(POSITIVE, NEGATIVE, switches_feature=True),
}


@dataclass(frozen=True)
class DialogState:
    current_product: str
    alternatives: AlternativesSet
    visited_products: tuple[str, ...]
    used_spans: frozenset[SpanIdentity]
    discussed_features: frozenset[str]

    @classmethod
    def initial(cls, alternatives: AlternativesSet) -> "DialogState":
        return cls(
            current_product=alternatives.seed_product,
            alternatives=alternatives,
            visited_products=(alternatives.seed_product,),
            used_spans=frozenset(),
            discussed_features=frozenset(),
        )

    def check(self, catalog: ProductCatalog) -> None:
        if self.current_product not in self.visited_products:
            raise InvalidStateError("current product not in visited set")
        allowed = set(self.alternatives.members)
        for pid in self.visited_products:
            if pid not in allowed:
                raise InvalidStateError(f"visited product {pid!r} outside product pool")
            product = catalog.get(pid)
            if product is not None:
                allowed.update(product.also_viewed)


@dataclass(frozen=True)
class PairBinding:
    """All slots of one pair, bound but not yet realized as text."""

    kind: PairKind
    product_a: str  # product the customer speaks about
    product_b: str  # product the assistant speaks about
    feature_a: str
    feature_b: str
    customer_span: Optional[OpinionSpan]
    assistant_span: OpinionSpan

    def to_trace(self) -> dict:
        return {
            "kind": self.kind.value,
            "product_a": self.product_a,
            "product_b": self.product_b,
            "feature_a": self.feature_a,
            "feature_b": self.feature_b,
        }


@dataclass(frozen=True)
class BoundPair:
    binding: PairBinding
    state_after: DialogState


@dataclass(frozen=True)
class DialogPair:
    kind: PairKind
    customer_turn: Turn
    assistant_turn: Turn
    state_after: DialogState


def _eligible_spans(
    index: OpinionIndex,
    product: str,
    feature: str,
    label: str,
    exclude: frozenset[SpanIdentity],
) -> list[OpinionSpan]:
    return [
        span
        for span in index.spans_for((product, feature, label))
        if span.identity not in exclude
    ]


def _seeded_candidates(
    pool: list[OpinionSpan], rng: random.Random, k: int
) -> list[OpinionSpan]:
    """Shuffled top-k first (the seeded choice), remainder in rank order so
    the search stays exhaustive."""
    top = pool[: max(1, k)]
    rest = pool[len(top):]
    top = list(top)
    rng.shuffle(top)
    return top + rest


def _feature_order(
    index: OpinionIndex,
    product: str,
    label: str,
    discussed: frozenset[str],
    rng: random.Random,
    skip: frozenset[str] = frozenset(),
) -> list[str]:
    """Undiscussed features first, each group seeded-shuffled."""
    ranked = [f for f, _ in features_of(index, product, label) if f not in skip]
    fresh = [f for f in ranked if f not in discussed]
    stale = [f for f in ranked if f in discussed]
    rng.shuffle(fresh)
    rng.shuffle(stale)
    return fresh + stale


def _switch_product_candidates(
    state: DialogState, catalog: ProductCatalog, index: OpinionIndex, rng: random.Random
) -> list[str]:
    current = catalog.get(state.current_product)
    pool = set(state.alternatives.members)
    if current is not None:
        pool.update(current.also_viewed)
    pool.difference_update(state.visited_products)
    candidates = [
        pid
        for pid in sorted(pool)
        if pid in catalog and index.non_neutral_counts.get(pid, 0) > 0
    ]
    rng.shuffle(candidates)
    return candidates


def instantiate_pair(
    kind: PairKind,
    state: DialogState,
    index: OpinionIndex,
    catalog: ProductCatalog,
    rng: random.Random,
    k: int = 3,
) -> Optional[BoundPair]:
    """Bind all slots of one pair, or None when no assignment exists.

    The candidate order is seeded (features: undiscussed first; spans:
    shuffled top-k then remainder) and the search is exhaustive, so a None
    result means the pair is unsatisfiable in this state.
    """
    state.check(catalog)
    sig = SIGNATURES[kind]
    p1 = state.current_product
    feature_pool_label = sig.customer_label or sig.assistant_label
    for fa in _feature_order(index, p1, feature_pool_label, state.discussed_features, rng):
        if sig.customer_label is None:
            customer_options: list[Optional[OpinionSpan]] = [None]
        else:
            pool = _eligible_spans(index, p1, fa, sig.customer_label, state.used_spans)
            customer_options = list(_seeded_candidates(pool, rng, k))
        for customer_span in customer_options:
            used = state.used_spans
            if customer_span is not None:
                used = used | {customer_span.identity}
            if sig.switches_product:
                bound = _bind_switch_product(kind, state, index, catalog, rng, k, fa, customer_span, used)
            elif sig.switches_feature:
                bound = _bind_switch_feature(kind, state, index, rng, k, fa, customer_span, used)
            else:
                bound = _bind_same_slot(kind, state, index, rng, k, fa, customer_span, used)
            if bound is not None:
                return bound
    return None


def _bind_same_slot(kind, state, index, rng, k, fa, customer_span, used):
    sig = SIGNATURES[kind]
    p1 = state.current_product
    pool = _eligible_spans(index, p1, fa, sig.assistant_label, used)
    if not pool:
        return None
    assistant_span = _seeded_candidates(pool, rng, k)[0]
    binding = PairBinding(kind, p1, p1, fa, fa, customer_span, assistant_span)
    return BoundPair(binding, _advance(state, binding))


def _bind_switch_feature(kind, state, index, rng, k, fa, customer_span, used):
    sig = SIGNATURES[kind]
    p1 = state.current_product
    fb_order = _feature_order(
        index, p1, sig.assistant_label, state.discussed_features, rng,
        skip=frozenset({fa}),
    )
    for fb in fb_order:
        pool = _eligible_spans(index, p1, fb, sig.assistant_label, used)
        if pool:
            assistant_span = _seeded_candidates(pool, rng, k)[0]
            binding = PairBinding(kind, p1, p1, fa, fb, customer_span, assistant_span)
            return BoundPair(binding, _advance(state, binding))
    return None


def _bind_switch_product(kind, state, index, catalog, rng, k, fa, customer_span, used):
    p1 = state.current_product
    for p2 in _switch_product_candidates(state, catalog, index, rng):
        pool = _eligible_spans(index, p2, fa, POSITIVE, used)
        if pool:
            assistant_span = _seeded_candidates(pool, rng, k)[0]
            binding = PairBinding(kind, p1, p2, fa, fa, customer_span, assistant_span)
            return BoundPair(binding, _advance(state, binding))
    return None


def _advance(state: DialogState, binding: PairBinding) -> DialogState:
    used = set(state.used_spans)
    if binding.customer_span is not None:
        used.add(binding.customer_span.identity)
    used.add(binding.assistant_span.identity)
    discussed = set(state.discussed_features) | {binding.feature_a, binding.feature_b}
    visited = state.visited_products
    current = state.current_product
    if binding.product_b != binding.product_a:
        current = binding.product_b
        if binding.product_b not in visited:
            visited = visited + (binding.product_b,)
    return DialogState(
        current_product=current,
        alternatives=state.alternatives,
        visited_products=visited,
        used_spans=frozenset(used),
        discussed_features=frozenset(discussed),
    )


# ---------------------------------------------------------------------------
# Surface realization


class Phrasebank:
    """Surface templates per (pair kind, speaker), loaded from a sectioned
    text file; validated up front so realization never fails on config."""

    PLACEHOLDERS = {"feature", "product_title", "opinion"}

    def __init__(self, sections: dict[tuple[str, str], list[str]]):
        self.sections = sections
        self.validate()

    def variants(self, kind: PairKind, speaker: str) -> list[str]:
        return self.sections[(kind.act, speaker)]

    def validate(self) -> None:
        for kind in PairKind:
            for speaker in (CUSTOMER, ASSISTANT):
                templates = self.sections.get((kind.act, speaker))
                if not templates:
                    raise PhrasebankError(
                        f"missing phrasebank section [{kind.act}.{speaker}]"
                    )
                needs_opinion = not (
                    kind is PairKind.REQUEST_INFORM and speaker == CUSTOMER
                )
                for template in templates:
                    used = set(re.findall(r"\{(\w+)\}", template))
                    unknown = used - self.PLACEHOLDERS
                    if unknown:
                        raise PhrasebankError(
                            f"unknown placeholder {unknown} in [{kind.act}.{speaker}]"
                        )
                    if needs_opinion and "opinion" not in used:
                        raise PhrasebankError(
                            f"template in [{kind.act}.{speaker}] must embed {{opinion}}"
                        )
                    if not needs_opinion and "opinion" in used:
                        raise PhrasebankError(
                            f"[{kind.act}.{speaker}] is a neutral question; "
                            "{opinion} not allowed"
                        )


def parse_phrasebank(text: str) -> Phrasebank:
    sections: dict[tuple[str, str], list[str]] = {}
    current: Optional[tuple[str, str]] = None
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1]
            if "." not in name:
                raise PhrasebankError(f"bad section header at line {line_no}: {line}")
            act, speaker = name.rsplit(".", 1)
            current = (act, speaker)
            sections.setdefault(current, [])
            continue
        if current is None:
            raise PhrasebankError(f"template before section header at line {line_no}")
        sections[current].append(line)
    return Phrasebank(sections)


def load_phrasebank(path: str | Path) -> Phrasebank:
    return parse_phrasebank(Path(path).read_text(encoding="utf-8"))


def default_phrasebank() -> Phrasebank:
    from importlib.resources import files

    return parse_phrasebank(
        files("shoptalk").joinpath("data/phrasebank.txt").read_text(encoding="utf-8")
    )


def realize(
    binding: PairBinding,
    phrasebank: Phrasebank,
    rng: random.Random,
    catalog: ProductCatalog,
    sentences: dict[str, list[Sentence]],
) -> tuple[str, str]:
    """Render the customer and assistant texts; grounded sentences are
    embedded verbatim."""
    customer_text = _render(
        phrasebank, binding.kind, CUSTOMER, rng,
        feature=binding.feature_a,
        product_title=_title(catalog, binding.product_a),
        span=binding.customer_span,
        sentences=sentences,
    )
    assistant_text = _render(
        phrasebank, binding.kind, ASSISTANT, rng,
        feature=binding.feature_b,
        product_title=_title(catalog, binding.product_b),
        span=binding.assistant_span,
        sentences=sentences,
    )
    return customer_text, assistant_text


def _title(catalog: ProductCatalog, product_id: str) -> str:
    product = catalog.get(product_id)
    if product is None:
        raise UnboundSlotError(f"product {product_id!r} not in catalog")
    return product.title


def _render(phrasebank, kind, speaker, rng, *, feature, product_title, span, sentences):
    template = rng.choice(phrasebank.variants(kind, speaker))
    opinion = ""
    if "{opinion}" in template:
        if span is None:
            raise UnboundSlotError(f"no span bound for [{kind.act}.{speaker}]")
        opinion = _sentence_text(sentences, span)
    return template.format(feature=feature, product_title=product_title, opinion=opinion)


def _sentence_text(sentences: dict[str, list[Sentence]], span: OpinionSpan) -> str:
    review_sentences = sentences.get(span.review_id)
    if review_sentences is None or not 0 <= span.sentence_ordinal < len(review_sentences):
        raise UnboundSlotError(
            f"span references missing sentence {span.review_id}#{span.sentence_ordinal}"
        )
    return review_sentences[span.sentence_ordinal].text


def build_pair(
    kind: PairKind,
    state: DialogState,
    index: OpinionIndex,
    catalog: ProductCatalog,
    rng: random.Random,
    phrasebank: Phrasebank,
    sentences: dict[str, list[Sentence]],
    k: int = 3,
) -> Optional[DialogPair]:
    """Instantiate and realize one pair; None when unsatisfiable."""
    bound = instantiate_pair(kind, state, index, catalog, rng, k)
    if bound is None:
        return None
    binding = bound.binding
    customer_text, assistant_text = realize(binding, phrasebank, rng, catalog, sentences)
    customer_grounding = ()
    if binding.customer_span is not None:
        customer_grounding = (GroundingRef.from_span(binding.customer_span),)
    customer_turn = Turn(
        speaker=CUSTOMER,
        text=customer_text,
        act=kind.act,
        product_id=binding.product_a,
        feature=binding.feature_a,
        grounding=customer_grounding,
    )
    assistant_turn = Turn(
        speaker=ASSISTANT,
        text=assistant_text,
        act=kind.act,
        product_id=binding.product_b,
        feature=binding.feature_b,
        grounding=(GroundingRef.from_span(binding.assistant_span),),
    )
    return DialogPair(kind, customer_turn, assistant_turn, bound.state_after)
