"""Metric kernels: deterministic statistics over one corpus or a split bundle.

Every kernel is a pure function of immutable inputs. Ratio metrics are plain
integer-count ratios; the two spread metrics use the population standard
deviation (divide by k), summing in sorted order so results do not depend on
input permutation.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Literal, Mapping

from .corpus import Corpus, DatasetBundle, EntityMention
from .errors import EmptyCorpus, InsufficientScores, MissingSplit, NoEntities

Direction = Literal["higher-better", "lower-better"]

MEAN_RULE = "mean-over-splits"
ONCE_RULE = "test-vs-train"
EXTERNAL_RULE = "external"


@dataclass(frozen=True)
class MetricSpec:
    """Registry entry: canonical name, table label, direction, dimension, rule."""

    name: str
    label: str
    direction: Direction
    dimension: str
    aggregation: str


#: The nine metrics in report column order, grouped by quality dimension.
REGISTRY: tuple[MetricSpec, ...] = (
    MetricSpec("redundancy", "Red", "lower-better", "reliability", MEAN_RULE),
    MetricSpec("accuracy", "Acc", "higher-better", "reliability", MEAN_RULE),
    MetricSpec("leakage_ratio", "LeakR", "lower-better", "reliability", ONCE_RULE),
    MetricSpec("unseen_entity_ratio", "UnSeenEnR", "higher-better", "difficulty", ONCE_RULE),
    MetricSpec("entity_ambiguity", "EnAmb", "higher-better", "difficulty", MEAN_RULE),
    MetricSpec("entity_density", "EnDen", "higher-better", "difficulty", MEAN_RULE),
    MetricSpec("model_differentiation", "ModDiff", "higher-better", "difficulty", EXTERNAL_RULE),
    MetricSpec("entity_imbalance", "EnImBaD", "lower-better", "validity", MEAN_RULE),
    MetricSpec("entity_null_rate", "EnNullR", "lower-better", "validity", MEAN_RULE),
)

METRIC_NAMES = tuple(spec.name for spec in REGISTRY)
_BY_NAME = {spec.name: spec for spec in REGISTRY}


def metric_spec(name: str) -> MetricSpec:
    return _BY_NAME[name]


@dataclass(frozen=True)
class MetricValue:
    """One computed metric: value, preferred direction, and source splits."""

    name: str
    value: float
    direction: Direction
    scope: tuple[str, ...] = ()


def _value(name: str, value: float, scope: tuple[str, ...]) -> MetricValue:
    return MetricValue(name, float(value), _BY_NAME[name].direction, scope)


# reliability ------------------------------------------------------------------


def redundancy(corpus: Corpus) -> MetricValue:
    """Share of instances that repeat an earlier (tokens, labels) pair."""
    n = len(corpus)
    if n == 0:
        raise EmptyCorpus("redundancy is undefined for an empty corpus")
    unique = len({inst.key for inst in corpus})
    return _value("redundancy", (n - unique) / n, (corpus.split_kind,))


def leakage_ratio(bundle: DatasetBundle) -> MetricValue:
    """Share of test instances appearing verbatim in the train or dev split."""
    test = bundle.test
    if test is None:
        raise MissingSplit("leakage_ratio requires a test split")
    if len(test) == 0:
        raise EmptyCorpus("leakage_ratio is undefined for an empty test split")
    seen = {inst.key for inst in bundle.train}
    if bundle.dev is not None:
        seen.update(inst.key for inst in bundle.dev)
    leaked = sum(1 for inst in test if inst.key in seen)
    scope = tuple(name for name, _ in bundle.splits())
    return _value("leakage_ratio", leaked / len(test), scope)


# difficulty -------------------------------------------------------------------


def unseen_entity_ratio(bundle: DatasetBundle) -> MetricValue:
    """Share of unique test surfaces absent from the training entity set."""
    test = bundle.test
    if test is None:
        raise MissingSplit("unseen_entity_ratio requires a test split")
    test_surfaces = test.entity_surfaces
    if not test_surfaces:
        raise NoEntities("unseen_entity_ratio is undefined: test split has no mentions")
    unseen = len(test_surfaces - bundle.train.entity_surfaces)
    return _value("unseen_entity_ratio", unseen / len(test_surfaces), ("train", "test"))


@dataclass(frozen=True)
class ConflictStats:
    """Surfaces labeled with two or more types, and the occurrences they cover.

    ``len(conflicting_surfaces)`` is the dataset-level conflict-entity count.
    """

    conflicting_surfaces: frozenset[str]
    ambiguous_mentions: int
    total_mentions: int


def conflict_stats(mentions: Iterable[EntityMention]) -> ConflictStats:
    """Conflict statistics over any collection of mention occurrences."""
    types_by_surface: dict[str, set[str]] = {}
    occurrences: Counter[str] = Counter()
    total = 0
    for mention in mentions:
        total += 1
        occurrences[mention.surface] += 1
        types_by_surface.setdefault(mention.surface, set()).add(mention.etype)
    conflicting = frozenset(s for s, ts in types_by_surface.items() if len(ts) >= 2)
    ambiguous = sum(occurrences[s] for s in conflicting)
    return ConflictStats(conflicting, ambiguous, total)


def entity_ambiguity(corpus: Corpus) -> tuple[MetricValue, ConflictStats]:
    """Share of mention occurrences whose surface carries conflicting types.

    The returned stats expose the conflict set and the occurrence counts, so
    callers needing the corpus-level conflict count can take
    ``len(stats.conflicting_surfaces)`` directly.
    """
    stats = conflict_stats(corpus.mentions)
    if stats.total_mentions == 0:
        raise NoEntities("entity_ambiguity is undefined: corpus has no mentions")
    ratio = stats.ambiguous_mentions / stats.total_mentions
    return _value("entity_ambiguity", ratio, (corpus.split_kind,)), stats


def entity_density(corpus: Corpus) -> MetricValue:
    """Mean per-instance ratio of mention count to token count."""
    n = len(corpus)
    if n == 0:
        raise EmptyCorpus("entity_density is undefined for an empty corpus")
    total = 0.0
    for inst, mentions in zip(corpus.instances, corpus.mentions_per_instance):
        total += len(mentions) / len(inst)
    return _value("entity_density", total / n, (corpus.split_kind,))


@dataclass(frozen=True)
class ModelScores:
    """F1 scores of k models on one dataset; k >= 2 for a defined spread."""

    scores: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if len(self.scores) < 2:
            raise InsufficientScores("need at least 2 model scores")


def model_differentiation(scores: ModelScores) -> MetricValue:
    """Population standard deviation of the supplied model scores."""
    return _value("model_differentiation", _population_std(scores.scores), ())


# validity ---------------------------------------------------------------------


@dataclass(frozen=True)
class TypeDistribution:
    """Probability of each entity type over mention occurrences."""

    probs: Mapping[str, float]


def entity_imbalance(corpus: Corpus) -> tuple[MetricValue, TypeDistribution]:
    """Population standard deviation of the entity-type probabilities."""
    mentions = corpus.mentions
    if not mentions:
        raise NoEntities("entity_imbalance is undefined: corpus has no mentions")
    counts = Counter(m.etype for m in mentions)
    types = sorted(corpus.types | set(counts))
    total = len(mentions)
    probs = {t: counts.get(t, 0) / total for t in types}
    std = _population_std([probs[t] for t in types])
    return _value("entity_imbalance", std, (corpus.split_kind,)), TypeDistribution(probs)


def entity_null_rate(corpus: Corpus) -> MetricValue:
    """Share of instances containing no entity mention."""
    n = len(corpus)
    if n == 0:
        raise EmptyCorpus("entity_null_rate is undefined for an empty corpus")
    null = sum(1 for ms in corpus.mentions_per_instance if not ms)
    return _value("entity_null_rate", null / n, (corpus.split_kind,))


def _population_std(values: Iterable[float]) -> float:
    # Sorted before summing so the result is identical under permutation.
    ordered = sorted(values)
    k = len(ordered)
    mean = sum(ordered) / k
    return math.sqrt(sum((v - mean) ** 2 for v in ordered) / k)


def split_metrics(corpus: Corpus) -> tuple[dict[str, float], list[str]]:
    """Per-split values of the five intrinsic single-corpus metrics.

    Metrics undefined for the split (empty corpus, no mentions) are omitted
    and reported as warnings instead of raising.
    """
    values: dict[str, float] = {}
    warnings: list[str] = []
    split = corpus.split_kind
    if len(corpus) == 0:
        warnings.append(f"{split}: split is empty, per-split metrics skipped")
        return values, warnings
    values["redundancy"] = redundancy(corpus).value
    values["entity_density"] = entity_density(corpus).value
    values["entity_null_rate"] = entity_null_rate(corpus).value
    try:
        ambiguity, _ = entity_ambiguity(corpus)
        imbalance, _ = entity_imbalance(corpus)
    except NoEntities:
        warnings.append(
            f"{split}: no entity mentions, entity_ambiguity and entity_imbalance skipped"
        )
    else:
        values["entity_ambiguity"] = ambiguity.value
        values["entity_imbalance"] = imbalance.value
    return values, warnings
