"""Sampling for annotation, inter-annotator agreement, and human-judged accuracy."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

from .corpus import Corpus
from .errors import EmptyCorpus, EmptyJudgments, JsonError, KeyMismatch
from .metrics import MetricValue, metric_spec

ACCURATE = "accurate"
INACCURATE = "inaccurate"

#: Minimum acceptable pairwise agreement; at or below this the result is flagged.
KAPPA_THRESHOLD = 0.75

DEFAULT_SAMPLE_SIZE = 100


@dataclass(frozen=True)
class AnnotationSample:
    """Instance ids drawn for human judgment, reproducible from the seed."""

    split_kind: str
    instance_ids: tuple[int, ...]
    seed: int
    short_sample: bool = False


def sample_for_annotation(
    corpus: Corpus, size: int = DEFAULT_SAMPLE_SIZE, seed: int = 0
) -> AnnotationSample:
    """Uniform sample of instance ids without replacement, seeded and sorted.

    When the corpus holds fewer than ``size`` instances, all of them are
    returned and the sample is flagged as short.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    n = len(corpus)
    if n == 0:
        raise EmptyCorpus("cannot sample from an empty corpus")
    k = min(size, n)
    positions = random.Random(seed).sample(range(n), k)
    ids = tuple(sorted(corpus.instances[p].id for p in positions))
    return AnnotationSample(corpus.split_kind, ids, seed, short_sample=n < size)


@dataclass(frozen=True)
class JudgmentSet:
    """One annotator's accurate/inaccurate call per judged instance."""

    annotator_id: str
    judgments: Mapping[int, str]

    def __post_init__(self):
        object.__setattr__(self, "judgments", dict(self.judgments))
        bad = set(self.judgments.values()) - {ACCURATE, INACCURATE}
        if bad:
            raise ValueError(f"unknown judgment values: {sorted(bad)}")


def cohen_kappa(a: JudgmentSet, b: JudgmentSet) -> float:
    """Chance-corrected agreement between two annotators over the same ids.

    When chance agreement is exactly 1 (both annotators use one identical
    category throughout) the formula degenerates; identical annotations score
    1.0 by convention, anything else 0.0.
    """
    if not a.judgments or not b.judgments:
        raise EmptyJudgments("judgment sets must be non-empty")
    if set(a.judgments) != set(b.judgments):
        raise KeyMismatch(
            f"annotators {a.annotator_id!r} and {b.annotator_id!r} judged different instances"
        )
    ids = sorted(a.judgments)
    n = len(ids)
    observed = sum(1 for i in ids if a.judgments[i] == b.judgments[i]) / n
    p_a = sum(1 for i in ids if a.judgments[i] == ACCURATE) / n
    p_b = sum(1 for i in ids if b.judgments[i] == ACCURATE) / n
    expected = p_a * p_b + (1 - p_a) * (1 - p_b)
    if expected == 1.0:
        return 1.0 if observed == 1.0 else 0.0
    return (observed - expected) / (1 - expected)


@dataclass(frozen=True)
class AccuracyResult:
    """Majority-vote accuracy plus the agreement gate that qualifies it."""

    metric: MetricValue
    min_pairwise_kappa: float | None
    kappa_below_threshold: bool
    annotators: tuple[str, ...]
    n_instances: int

    @property
    def value(self) -> float:
        return self.metric.value


def accuracy_from_annotations(judgments: Sequence[JudgmentSet]) -> AccuracyResult:
    """Accuracy over judged instances by strict majority vote; ties count as inaccurate.

    With two or more annotators the minimum pairwise agreement is recorded and
    flagged when it is at or below :data:`KAPPA_THRESHOLD`.
    """
    if not judgments:
        raise EmptyJudgments("at least one judgment set is required")
    if not judgments[0].judgments:
        raise EmptyJudgments("judgment sets must be non-empty")
    ids = set(judgments[0].judgments)
    for js in judgments[1:]:
        if set(js.judgments) != ids:
            raise KeyMismatch(
                f"annotator {js.annotator_id!r} judged a different instance set"
            )
    k = len(judgments)
    accurate = 0
    for i in ids:
        votes = sum(1 for js in judgments if js.judgments[i] == ACCURATE)
        if votes * 2 > k:
            accurate += 1
    min_kappa = None
    if k >= 2:
        min_kappa = min(
            cohen_kappa(judgments[x], judgments[y])
            for x in range(k)
            for y in range(x + 1, k)
        )
    flagged = min_kappa is not None and min_kappa <= KAPPA_THRESHOLD
    metric = MetricValue(
        "accuracy", accurate / len(ids), metric_spec("accuracy").direction, ()
    )
    return AccuracyResult(
        metric, min_kappa, flagged, tuple(js.annotator_id for js in judgments), len(ids)
    )


def load_judgment_lines(lines: Iterable[str] | IO[str]) -> list[JudgmentSet]:
    """Group JSONL judgment records by annotator, preserving first-seen order.

    Each line is ``{"annotator": str, "instance_id": int, "judgment":
    "accurate"|"inaccurate"}``; a repeated (annotator, instance) pair keeps the
    last record.
    """
    by_annotator: dict[str, dict[int, str]] = {}
    for line_no, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise JsonError(f"invalid JSON: {exc.msg}", line=line_no) from exc
        try:
            annotator = str(obj["annotator"])
            instance_id = int(obj["instance_id"])
            judgment = obj["judgment"]
        except (KeyError, TypeError, ValueError) as exc:
            raise JsonError(
                "expected annotator, instance_id, and judgment fields", line=line_no
            ) from exc
        if judgment not in (ACCURATE, INACCURATE):
            raise JsonError(
                f"judgment must be {ACCURATE!r} or {INACCURATE!r}, got {judgment!r}",
                line=line_no,
            )
        by_annotator.setdefault(annotator, {})[instance_id] = judgment
    return [JudgmentSet(annotator, records) for annotator, records in by_annotator.items()]


def load_judgment_file(path) -> list[JudgmentSet]:
    with open(path, encoding="utf-8") as handle:
        return load_judgment_lines(handle)
