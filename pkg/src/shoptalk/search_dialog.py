"""Stage-2 information-search dialog: feature/value questions that narrow
the catalog to an alternatives set.

The four searchable features are asked in fixed order (brand, os, memory,
color); the customer answers with the seed product's value or no
preference.  Filtering is case-insensitive exact match.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .corpus import SEARCHABLE_FEATURES, ProductCatalog
from .errors import NoEligibleProductError
from .opinion_index import OpinionIndex
from .turns import ACT_SEARCH_ANSWER, ACT_SEARCH_QUESTION, ASSISTANT, CUSTOMER, Turn

QUESTION_TEXT = {
    "brand": "Do you have a preferred brand?",
    "os": "Which operating system would you like?",
    "memory": "How much memory do you need?",
    "color": "Do you have a preferred color?",
}

ANSWER_TEXT = {
    "brand": "I would like a {value} phone.",
    "os": "I prefer {value}.",
    "memory": "{value} would be good.",
    "color": "I would prefer {value}.",
}

NO_PREFERENCE_TEXT = "No preference."


@dataclass(frozen=True)
class PreferenceProfile:
    """Customer answers for the four searchable features; None means no
    preference."""

    brand: Optional[str] = None
    os: Optional[str] = None
    memory: Optional[str] = None
    color: Optional[str] = None

    def answers(self) -> list[tuple[str, Optional[str]]]:
        return [(feature, getattr(self, feature)) for feature in SEARCHABLE_FEATURES]


@dataclass(frozen=True)
class AlternativesSet:
    seed_product: str
    members: tuple[str, ...]

    def __post_init__(self):
        if self.seed_product not in self.members:
            raise ValueError("seed product must be a member of its alternatives set")

    def to_record(self) -> dict:
        return {"seed_product": self.seed_product, "members": list(self.members)}


def sample_seed(
    catalog: ProductCatalog,
    index: OpinionIndex,
    rng: random.Random,
    min_opinions: int = 2,
) -> str:
    """Uniform seeded choice among products with at least ``min_opinions``
    non-neutral indexed spans."""
    eligible = [
        pid
        for pid in catalog.ids()
        if index.non_neutral_counts.get(pid, 0) >= min_opinions
    ]
    if not eligible:
        raise NoEligibleProductError(
            f"no product has >= {min_opinions} non-neutral opinions"
        )
    return rng.choice(eligible)


def filter_catalog(catalog: ProductCatalog, profile: PreferenceProfile) -> set[str]:
    """Products matching every answered feature exactly (case-insensitive);
    a product lacking an answered field does not match."""
    matches = set()
    for product in catalog:
        for feature, wanted in profile.answers():
            if wanted is None:
                continue
            actual = product.searchable_value(feature)
            if actual is None or actual.lower() != wanted.lower():
                break
        else:
            matches.add(product.id)
    return matches


def generate_search_dialog(
    seed_product: str,
    catalog: ProductCatalog,
    rng: random.Random,
    p_skip: float = 0.25,
) -> tuple[list[Turn], AlternativesSet]:
    """One question/answer exchange per searchable feature (8 turns); the
    customer answers with the seed's value or skips with probability
    ``p_skip``.  The seed is always a member of the result."""
    seed = catalog.get(seed_product)
    if seed is None:
        raise KeyError(f"unknown seed product {seed_product!r}")
    turns: list[Turn] = []
    chosen: dict[str, Optional[str]] = {}
    for feature in SEARCHABLE_FEATURES:
        value = seed.searchable_value(feature)
        if value is None or rng.random() < p_skip:
            answer_value = None
            answer_text = NO_PREFERENCE_TEXT
        else:
            answer_value = value
            answer_text = ANSWER_TEXT[feature].format(value=value)
        chosen[feature] = answer_value
        turns.append(
            Turn(
                speaker=ASSISTANT,
                text=QUESTION_TEXT[feature],
                act=ACT_SEARCH_QUESTION,
                feature=feature,
            )
        )
        turns.append(
            Turn(
                speaker=CUSTOMER,
                text=answer_text,
                act=ACT_SEARCH_ANSWER,
                feature=feature,
            )
        )
    profile = PreferenceProfile(**chosen)
    members = filter_catalog(catalog, profile)
    members.add(seed_product)
    alternatives = AlternativesSet(
        seed_product=seed_product, members=tuple(sorted(members))
    )
    return turns, alternatives
