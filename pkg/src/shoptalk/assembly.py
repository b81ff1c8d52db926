"""Compose dialog pairs into full conversations.

A conversation is the Stage-2 search dialog followed by the evaluation
dialog built by folding pair instantiation over a conversation template.
Backtracking is local first (re-roll pair candidate orderings), then
global (re-roll the seed product), bounded by a retry budget.

All randomness flows through per-conversation streams derived from
(master_seed, template_id, instance ordinal), so removing one template
from a run leaves every other conversation byte-identical.
"""

from __future__ import annotations

import copy
import hashlib
import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .corpus import ProductCatalog, ReviewStore, Sentence
from .errors import GenerationExhaustedError, NoEligibleProductError
from .negotiation import (
    DialogPair,
    DialogState,
    PairKind,
    Phrasebank,
    build_pair,
    parse_kind,
)
from .opinion_index import OpinionIndex
from .search_dialog import AlternativesSet, generate_search_dialog, sample_seed
from .turns import Turn

MAX_TEMPLATE_LENGTH = 8
LOCAL_RETRIES = 5


class SeedStream:
    """Derives independent, reproducible random generators from a tuple of
    seed parts via SHA-256; immune to Python hash randomization."""

    def __init__(self, *parts):
        self._parts = tuple(str(p) for p in parts)

    def rng(self, *more) -> random.Random:
        material = ":".join(self._parts + tuple(str(p) for p in more))
        digest = hashlib.sha256(material.encode("utf-8")).digest()
        return random.Random(int.from_bytes(digest[:8], "big"))


@dataclass(frozen=True)
class ConversationTemplate:
    id: int
    sequence: tuple[PairKind, ...]

    def __post_init__(self):
        if not self.sequence:
            raise ValueError(f"template {self.id} has an empty sequence")
        if len(self.sequence) > MAX_TEMPLATE_LENGTH:
            raise ValueError(
                f"template {self.id} longer than {MAX_TEMPLATE_LENGTH} pairs"
            )


_RI = PairKind.REQUEST_INFORM
_DD = PairKind.DENY_DISAGREEMENT
_DSP = PairKind.DENY_SWITCH_PRODUCT
_DSF = PairKind.DENY_SWITCH_FEATURE
_SA = PairKind.SEARCH_AGREEMENT
_SSF = PairKind.SEARCH_SWITCH_FEATURE
_SW = PairKind.SEARCH_WARNING

# Built-in conversation plans.  Ids 2/3 and 1/11 intentionally share a
# sequence; they are distinct entries in the shipped set of fourteen.
_BUILTIN_SEQUENCES: dict[int, tuple[PairKind, ...]] = {
    1: (_RI, _DD, _RI),
    2: (_DSP, _DSF, _RI),
    3: (_DSP, _DSF, _RI),
    4: (_DD, _RI, _SW),
    5: (_RI, _SW, _DD),
    6: (_DSF, _RI, _SA, _RI),
    7: (_DSF, _RI, _SSF, _RI),
    8: (_RI, _DSP, _RI),
    9: (_SA, _RI),
    10: (_SSF, _RI),
    11: (_RI, _DD, _RI),
    12: (_SSF, _DSP, _RI),
    13: (_RI, _DSF, _SW, _RI),
    14: (_DSP, _RI, _SSF, _RI),
}


def builtin_templates() -> list[ConversationTemplate]:
    """The fourteen shipped conversation templates."""
    return [
        ConversationTemplate(id=tid, sequence=seq)
        for tid, seq in sorted(_BUILTIN_SEQUENCES.items())
    ]


def load_templates(path: str | Path) -> list[ConversationTemplate]:
    """Read template config: a JSON list of {id, pairs: [kind names]}."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    templates = []
    for entry in data:
        templates.append(
            ConversationTemplate(
                id=int(entry["id"]),
                sequence=tuple(parse_kind(name) for name in entry["pairs"]),
            )
        )
    if len({t.id for t in templates}) != len(templates):
        raise ValueError("duplicate template ids in config")
    return templates


@dataclass(frozen=True)
class Conversation:
    id: str
    template_id: int
    master_seed: int
    search_turns: tuple[Turn, ...]
    evaluation_turns: tuple[Turn, ...]
    pair_trace: tuple[dict, ...]
    product_trajectory: tuple[str, ...]
    alternatives: AlternativesSet

    @property
    def turns(self) -> tuple[Turn, ...]:
        return self.search_turns + self.evaluation_turns

    def to_record(self) -> dict:
        return {
            "schema_version": 1,
            "id": self.id,
            "template_id": self.template_id,
            "master_seed": self.master_seed,
            "turns": [t.to_record() for t in self.turns],
            "pair_trace": copy.deepcopy(list(self.pair_trace)),
            "product_trajectory": list(self.product_trajectory),
            "alternatives": self.alternatives.to_record(),
        }


@dataclass
class GenerationSettings:
    per_template: int = 10
    retry_budget: int = 25
    top_k: int = 3
    p_skip: float = 0.25
    min_opinions: int = 2
    workers: int = 1

    def __post_init__(self):
        if self.per_template < 1:
            raise ValueError("per_template must be >= 1")
        if self.retry_budget < 1:
            raise ValueError("retry_budget must be >= 1")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if not 0.0 <= self.p_skip <= 1.0:
            raise ValueError("p_skip must be in [0,1]")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class GenerationReport:
    requested: int = 0
    successes: int = 0
    attempts: int = 0
    exhausted: list[dict] = field(default_factory=list)
    per_template: dict[int, int] = field(default_factory=dict)
    settings: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "requested": self.requested,
            "successes": self.successes,
            "attempts": self.attempts,
            "exhausted": self.exhausted,
            "per_template": {str(k): v for k, v in sorted(self.per_template.items())},
            "settings": self.settings,
        }


def _try_sequence(
    sequence: tuple[PairKind, ...],
    alternatives: AlternativesSet,
    index: OpinionIndex,
    catalog: ProductCatalog,
    rng: random.Random,
    phrasebank: Phrasebank,
    sentences: dict[str, list[Sentence]],
    top_k: int,
) -> Optional[list[DialogPair]]:
    state = DialogState.initial(alternatives)
    pairs: list[DialogPair] = []
    for kind in sequence:
        pair = build_pair(kind, state, index, catalog, rng, phrasebank, sentences, top_k)
        if pair is None:
            return None
        pairs.append(pair)
        state = pair.state_after
    return pairs


def generate_conversation(
    template: ConversationTemplate,
    catalog: ProductCatalog,
    store: ReviewStore,
    index: OpinionIndex,
    stream: SeedStream,
    *,
    phrasebank: Phrasebank,
    sentences: dict[str, list[Sentence]],
    settings: GenerationSettings = GenerationSettings(),
    conversation_id: str = "c0",
    master_seed: int = 0,
) -> tuple[Conversation, int]:
    """Generate one conversation from a template; returns (conversation,
    attempts).  Raises GenerationExhaustedError when the retry budget is
    consumed without a satisfying assignment."""
    attempts = 0
    global_round = 0
    while True:
        try:
            seed_product = sample_seed(
                catalog, index, stream.rng("seed", global_round), settings.min_opinions
            )
        except NoEligibleProductError:
            raise GenerationExhaustedError(template.id, attempts)
        search_turns, alternatives = generate_search_dialog(
            seed_product, catalog, stream.rng("search", global_round), settings.p_skip
        )
        for local_round in range(LOCAL_RETRIES):
            if attempts >= settings.retry_budget:
                raise GenerationExhaustedError(template.id, attempts)
            attempts += 1
            pairs = _try_sequence(
                template.sequence,
                alternatives,
                index,
                catalog,
                stream.rng("pairs", global_round, local_round),
                phrasebank,
                sentences,
                settings.top_k,
            )
            if pairs is not None:
                conversation = _assemble(
                    conversation_id, template, master_seed, search_turns,
                    alternatives, pairs,
                )
                return conversation, attempts
        global_round += 1


def _assemble(
    conversation_id: str,
    template: ConversationTemplate,
    master_seed: int,
    search_turns: list[Turn],
    alternatives: AlternativesSet,
    pairs: list[DialogPair],
) -> Conversation:
    evaluation_turns: list[Turn] = []
    trace: list[dict] = []
    for pair in pairs:
        evaluation_turns.append(pair.customer_turn)
        evaluation_turns.append(pair.assistant_turn)
        trace.append(_trace_entry(pair))
    final_state = pairs[-1].state_after
    conversation = Conversation(
        id=conversation_id,
        template_id=template.id,
        master_seed=master_seed,
        search_turns=tuple(search_turns),
        evaluation_turns=tuple(evaluation_turns),
        pair_trace=tuple(trace),
        product_trajectory=final_state.visited_products,
        alternatives=alternatives,
    )
    assert tuple(entry["kind"] for entry in conversation.pair_trace) == tuple(
        kind.value for kind in template.sequence
    )
    return conversation


def _trace_entry(pair: DialogPair) -> dict:
    entry = {"kind": pair.kind.value}
    entry["customer"] = {
        "product_id": pair.customer_turn.product_id,
        "feature": pair.customer_turn.feature,
    }
    entry["assistant"] = {
        "product_id": pair.assistant_turn.product_id,
        "feature": pair.assistant_turn.feature,
    }
    return entry


def generate_dataset(
    templates: list[ConversationTemplate],
    master_seed: int,
    catalog: ProductCatalog,
    store: ReviewStore,
    index: OpinionIndex,
    *,
    phrasebank: Phrasebank,
    sentences: dict[str, list[Sentence]],
    settings: GenerationSettings = GenerationSettings(),
) -> tuple[list[Conversation], GenerationReport]:
    """Attempt settings.per_template conversations per template with
    independent per-conversation seed streams; exhaustions are reported,
    not raised.  Output is ordered by (template_id, instance ordinal)."""
    report = GenerationReport(
        requested=len(templates) * settings.per_template,
        settings={
            "master_seed": master_seed,
            "per_template": settings.per_template,
            "retry_budget": settings.retry_budget,
            "top_k": settings.top_k,
            "p_skip": settings.p_skip,
            "min_opinions": settings.min_opinions,
        },
    )
    jobs = [
        (template, ordinal)
        for template in sorted(templates, key=lambda t: t.id)
        for ordinal in range(1, settings.per_template + 1)
    ]

    def run(job):
        template, ordinal = job
        stream = SeedStream(master_seed, "conv", template.id, ordinal)
        conversation_id = f"t{template.id:02d}-n{ordinal:02d}"
        try:
            conversation, attempts = generate_conversation(
                template, catalog, store, index, stream,
                phrasebank=phrasebank, sentences=sentences, settings=settings,
                conversation_id=conversation_id, master_seed=master_seed,
            )
            return conversation, attempts, None
        except GenerationExhaustedError as exc:
            return None, exc.attempts, {
                "template_id": template.id,
                "ordinal": ordinal,
                "attempts": exc.attempts,
            }

    if settings.workers > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]

    conversations: list[Conversation] = []
    for conversation, attempts, failure in results:
        report.attempts += attempts
        if conversation is not None:
            conversations.append(conversation)
            report.successes += 1
            report.per_template[conversation.template_id] = (
                report.per_template.get(conversation.template_id, 0) + 1
            )
        else:
            report.exhausted.append(failure)
    return conversations, report
