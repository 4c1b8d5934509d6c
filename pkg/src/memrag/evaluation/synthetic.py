"""Deterministic synthetic journal corpus for retrieval scoring.

Five topics with disjoint keyword vocabularies; entries and held-out queries
are templated sentences over each topic's own words, so a query can share
vocabulary only with entries of its topic. Retrieval accuracy is then
well-defined without any live model: a query is answered correctly when its
top-k contains a record of its own topic.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

from ..errors import ValidationError

TOPIC_VOCABULARY: dict[str, dict[str, tuple[str, ...]]] = {
    "cooking": {
        "nouns": ("skillet", "risotto", "marinade", "sourdough", "braise", "chutney",
                  "cardamom", "paprika", "brisket", "gnocchi", "saffron", "roux"),
        "verbs": ("simmered", "whisked", "kneaded", "caramelized", "deglazed", "seasoned"),
        "places": ("kitchen", "farmers market", "pantry", "butcher"),
    },
    "astronomy": {
        "nouns": ("telescope", "nebula", "quasar", "eclipse", "constellation", "meteor",
                  "supernova", "parallax", "exoplanet", "magnitude", "aperture", "equinox"),
        "verbs": ("observed", "tracked", "photographed", "charted", "calibrated", "spotted"),
        "places": ("observatory", "planetarium", "ridge", "dark-sky site"),
    },
    "fitness": {
        "nouns": ("deadlift", "sprint", "kettlebell", "marathon", "squat", "treadmill",
                  "cadence", "hamstring", "warmup", "interval", "barbell", "stretch"),
        "verbs": ("trained", "jogged", "lifted", "stretched", "paced", "recovered"),
        "places": ("gym", "track", "trailhead", "locker room"),
    },
    "finance": {
        "nouns": ("dividend", "portfolio", "ledger", "invoice", "mortgage", "budget",
                  "annuity", "brokerage", "liquidity", "payroll", "audit", "rebate"),
        "verbs": ("invested", "reconciled", "refinanced", "budgeted", "itemized", "deposited"),
        "places": ("bank", "accountant office", "credit union", "exchange"),
    },
    "gardening": {
        "nouns": ("seedling", "compost", "trellis", "mulch", "perennial", "pruner",
                  "greenhouse", "pollinator", "fertilizer", "rootstock", "irrigation", "bulb"),
        "verbs": ("planted", "pruned", "watered", "transplanted", "weeded", "harvested"),
        "places": ("garden", "allotment", "nursery", "backyard"),
    },
}

ENTRY_TEMPLATES = (
    "Today I {v} the {n1} and checked the {n2} at the {p}.",
    "Note to self: the {n1} needs work before the {n2}, stop by the {p}.",
    "Spent the afternoon at the {p} where I {v} a {n1} next to the {n2}.",
    "I {v} my {n1} again; the {n2} at the {p} looked great.",
    "Reminder about the {n1}: I {v} it near the {p} with the {n2}.",
)

QUERY_TEMPLATES = (
    "What did I do with the {n1} and the {n2}?",
    "Remind me about the {n1} at the {p}.",
    "When did I last {v} anything with the {n1}?",
    "Any notes about the {n2} or the {n1}?",
)

_BASE_TIMESTAMP = datetime(2024, 1, 1, 12, 0, tzinfo=timezone.utc)


@dataclass(frozen=True)
class SyntheticConfig:
    topics: int = 5
    entries_per_topic: int = 40
    queries_per_topic: int = 8
    seed: int = 42

    def __post_init__(self) -> None:
        if not 1 <= self.topics <= len(TOPIC_VOCABULARY):
            raise ValidationError(f"topics must be in [1, {len(TOPIC_VOCABULARY)}]")
        if self.entries_per_topic < 1 or self.queries_per_topic < 1:
            raise ValidationError("entries_per_topic and queries_per_topic must be >= 1")


@dataclass(frozen=True)
class SyntheticEntry:
    topic: str
    text: str
    timestamp: datetime


@dataclass(frozen=True)
class SyntheticQuery:
    topic: str
    text: str


def topic_keywords(topic: str) -> frozenset[str]:
    words = TOPIC_VOCABULARY[topic]
    return frozenset(
        token.lower()
        for group in words.values()
        for phrase in group
        for token in phrase.split()
    )


def generate_corpus(
    config: SyntheticConfig | None = None,
) -> tuple[list[SyntheticEntry], list[SyntheticQuery]]:
    """Entries and held-out queries; fully determined by the seed."""
    cfg = config or SyntheticConfig()
    rng = random.Random(cfg.seed)
    names = list(TOPIC_VOCABULARY)[: cfg.topics]
    entries: list[SyntheticEntry] = []
    queries: list[SyntheticQuery] = []
    minute = 0
    for topic in names:
        words = TOPIC_VOCABULARY[topic]
        for _ in range(cfg.entries_per_topic):
            template = rng.choice(ENTRY_TEMPLATES)
            noun_one, noun_two = rng.sample(words["nouns"], 2)
            text = template.format(
                v=rng.choice(words["verbs"]),
                n1=noun_one,
                n2=noun_two,
                p=rng.choice(words["places"]),
            )
            entries.append(
                SyntheticEntry(topic, text, _BASE_TIMESTAMP + timedelta(minutes=minute))
            )
            minute += 1
        for _ in range(cfg.queries_per_topic):
            template = rng.choice(QUERY_TEMPLATES)
            noun_one, noun_two = rng.sample(words["nouns"], 2)
            queries.append(
                SyntheticQuery(
                    topic,
                    template.format(
                        n1=noun_one,
                        n2=noun_two,
                        p=rng.choice(words["places"]),
                        v=rng.choice(words["verbs"]),
                    ),
                )
            )
    return entries, queries
