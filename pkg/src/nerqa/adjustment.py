"""Construction of equal-size dataset variants pinned to target metric values.

Two constructors cover the four adjustable metrics. Instance-level metrics
(leakage, the no-entity rate) admit an exact construction: positives and
negatives are counted, the largest workable subset size is derived, and seeded
shuffles slice the pools. Mention-level metrics (unseen, ambiguity) get a
greedy constructor that repeatedly adds the instance moving the subset's
mention-level ratio closest to its target, with ties broken by the seeded
shuffle order.

Achieved values in the result are re-measured from the constructed subsets,
never taken from the construction bookkeeping.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import floor, lcm
from typing import Sequence

import numpy as np

from .corpus import Corpus, DatasetBundle
from .errors import MissingSplit, UnreachableTarget
from .metrics import conflict_stats, entity_null_rate, leakage_ratio

TEST_SET_METRICS = ("unseen", "ambiguity", "leakage")
TRAINDEV_METRICS = ("ennullr",)
TARGET_METRICS = TEST_SET_METRICS + TRAINDEV_METRICS

#: Exact-count targets are resolved to the nearest hundredth, well inside the
#: default tolerance of 0.02.
_TARGET_DENOMINATOR_LIMIT = 100


@dataclass(frozen=True)
class AdjustmentSpec:
    """What to construct: the metric, its target values, and the knobs."""

    target_metric: str
    targets: tuple[float, ...] = (0.80, 0.20)
    seed: int = 0
    tolerance: float = 0.02
    min_size: int = 50

    def __post_init__(self):
        if self.target_metric not in TARGET_METRICS:
            raise ValueError(
                f"target_metric must be one of {TARGET_METRICS}, got {self.target_metric!r}"
            )
        object.__setattr__(self, "targets", tuple(float(t) for t in self.targets))
        if not self.targets:
            raise ValueError("targets must be non-empty")
        if any(not 0.0 <= t <= 1.0 for t in self.targets):
            raise ValueError("every target must lie in [0, 1]")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.min_size < 1:
            raise ValueError("min_size must be >= 1")


@dataclass(frozen=True)
class InstanceClassification:
    """Per-instance view of one pool split under a target metric.

    ``indicator`` is the instance-level positive flag. ``positive_mentions``
    counts positive mention occurrences for the mention-level metrics (unseen,
    ambiguity) and is all zeros for the instance-level ones (leakage, ennullr),
    whose positivity is not mention-shaped.
    """

    split_kind: str
    indicator: tuple[bool, ...]
    positive_mentions: tuple[int, ...]
    mention_counts: tuple[int, ...]

    @property
    def positives(self) -> int:
        return sum(self.indicator)

    @property
    def negatives(self) -> int:
        return len(self.indicator) - self.positives


def classify_instances(
    bundle: DatasetBundle, target_metric: str
) -> dict[str, InstanceClassification]:
    """Label pool instances as positive or negative for the metric being adjusted.

    unseen: a test mention is positive when its surface is absent from the
    training entity set. ambiguity: when its surface is type-conflicting over
    all present splits pooled together. leakage: a test instance is positive
    when it appears verbatim in train or dev. ennullr: when it has no mentions
    (the pools are train and, when present, dev).
    """
    if target_metric not in TARGET_METRICS:
        raise ValueError(f"unknown target metric {target_metric!r}")
    if target_metric == "ennullr":
        out = {}
        for name, corpus in bundle.splits():
            if name == "test":
                continue
            counts = tuple(len(ms) for ms in corpus.mentions_per_instance)
            indicator = tuple(c == 0 for c in counts)
            out[name] = InstanceClassification(name, indicator, (0,) * len(counts), counts)
        return out
    test = bundle.test
    if test is None:
        raise MissingSplit(f"{target_metric} adjustment requires a test split")
    counts = tuple(len(ms) for ms in test.mentions_per_instance)
    if target_metric == "leakage":
        seen = {inst.key for inst in bundle.train}
        if bundle.dev is not None:
            seen.update(inst.key for inst in bundle.dev)
        indicator = tuple(inst.key in seen for inst in test)
        return {"test": InstanceClassification("test", indicator, (0,) * len(counts), counts)}
    positive_surfaces = _positive_surfaces(bundle, target_metric)
    positive = tuple(
        sum(1 for m in ms if m.surface in positive_surfaces)
        for ms in test.mentions_per_instance
    )
    indicator = tuple(p > 0 for p in positive)
    return {"test": InstanceClassification("test", indicator, positive, counts)}


def _positive_surfaces(bundle: DatasetBundle, target_metric: str) -> frozenset[str]:
    if target_metric == "unseen":
        assert bundle.test is not None
        return frozenset(bundle.test.entity_surfaces - bundle.train.entity_surfaces)
    mentions = [m for _, corpus in bundle.splits() for m in corpus.mentions]
    return conflict_stats(mentions).conflicting_surfaces


@dataclass(frozen=True)
class AdjustmentResult:
    """Equal-size subsets, one per target, with their re-measured values."""

    target_metric: str
    split_kind: str
    targets: tuple[float, ...]
    achieved: tuple[float, ...]
    size: int
    seed: int
    subsets: tuple[Corpus, ...]
    member_ids: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if any(len(subset) != self.size for subset in self.subsets):
            raise ValueError("every subset must have exactly the common size")


def adjust_test_sets(bundle: DatasetBundle, spec: AdjustmentSpec) -> AdjustmentResult:
    """Build disjoint equal-size test subsets hitting each target value."""
    if spec.target_metric not in TEST_SET_METRICS:
        raise ValueError(
            f"adjust_test_sets handles {TEST_SET_METRICS}, got {spec.target_metric!r}"
        )
    classification = classify_instances(bundle, spec.target_metric)["test"]
    test = bundle.test
    assert test is not None
    rng = random.Random(spec.seed)
    if spec.target_metric == "leakage":
        positions = _exact_instance_subsets(classification, spec, rng)
    else:
        positions = _greedy_mention_subsets(classification, spec, rng)
    subsets = tuple(_subcorpus(test, chosen) for chosen in positions)
    if spec.target_metric == "leakage":
        achieved = tuple(
            leakage_ratio(DatasetBundle(bundle.train, bundle.dev, subset)).value
            for subset in subsets
        )
    else:
        surfaces = _positive_surfaces(bundle, spec.target_metric)
        achieved = tuple(_mention_ratio(subset, surfaces) for subset in subsets)
    _check_achieved(achieved, spec, classification)
    return AdjustmentResult(
        spec.target_metric,
        "test",
        spec.targets,
        achieved,
        len(subsets[0]),
        spec.seed,
        subsets,
        tuple(tuple(test.instances[p].id for p in chosen) for chosen in positions),
    )


def adjust_traindev_ennullr(
    bundle: DatasetBundle, spec: AdjustmentSpec
) -> dict[str, AdjustmentResult]:
    """Equal-size train (and dev) subsets with exact no-entity rates, per split.

    Non-zero targets are constructed exactly from the null/non-null pools. A
    0.0 target is filled with non-null instances from the remainder when it is
    large enough, otherwise from a fresh seeded draw that may overlap the
    other subsets.
    """
    if spec.target_metric != "ennullr":
        raise ValueError("adjust_traindev_ennullr only handles the ennullr metric")
    results: dict[str, AdjustmentResult] = {}
    for split, classification in classify_instances(bundle, "ennullr").items():
        pool = bundle.get(split)
        assert pool is not None
        rng = random.Random(spec.seed)
        positions = _ennullr_subsets(classification, spec, rng)
        subsets = tuple(_subcorpus(pool, chosen) for chosen in positions)
        achieved = tuple(entity_null_rate(subset).value for subset in subsets)
        _check_achieved(achieved, spec, classification)
        results[split] = AdjustmentResult(
            "ennullr",
            split,
            spec.targets,
            achieved,
            len(subsets[0]),
            spec.seed,
            subsets,
            tuple(tuple(pool.instances[p].id for p in chosen) for chosen in positions),
        )
    return results


# shared machinery ---------------------------------------------------------


def _target_fractions(targets: Sequence[float]) -> list[Fraction]:
    return [Fraction(t).limit_denominator(_TARGET_DENOMINATOR_LIMIT) for t in targets]


def _max_exact_size(fractions: Sequence[Fraction], n_pos: int, n_neg: int) -> int:
    """Largest subset size N, a multiple of the targets' common denominator,
    such that the pools can supply every subset's positives and negatives."""
    denom = lcm(*(f.denominator for f in fractions))
    need_pos = sum(fractions)
    need_neg = sum(1 - f for f in fractions)
    cap: Fraction | None = None
    for need, available in ((need_pos, n_pos), (need_neg, n_neg)):
        if need > 0:
            bound = Fraction(available) / need
            cap = bound if cap is None else min(cap, bound)
    assert cap is not None
    return (floor(cap) // denom) * denom


def _draw_slices(
    pool: Sequence[int], needs: Sequence[int]
) -> list[list[int]]:
    slices = []
    cursor = 0
    for need in needs:
        slices.append(list(pool[cursor : cursor + need]))
        cursor += need
    return slices


def _exact_instance_subsets(
    classification: InstanceClassification, spec: AdjustmentSpec, rng: random.Random
) -> list[list[int]]:
    fractions = _target_fractions(spec.targets)
    pos = [i for i, flag in enumerate(classification.indicator) if flag]
    neg = [i for i, flag in enumerate(classification.indicator) if not flag]
    size = _max_exact_size(fractions, len(pos), len(neg))
    if size < spec.min_size:
        raise UnreachableTarget(
            f"cannot reach targets {spec.targets} with {len(pos)} positive and "
            f"{len(neg)} negative instances (max feasible size {size}, minimum {spec.min_size})",
            positives=len(pos),
            negatives=len(neg),
            max_feasible=size,
        )
    rng.shuffle(pos)
    rng.shuffle(neg)
    pos_needs = [int(f * size) for f in fractions]
    pos_parts = _draw_slices(pos, pos_needs)
    neg_parts = _draw_slices(neg, [size - p for p in pos_needs])
    return [sorted(p + q) for p, q in zip(pos_parts, neg_parts)]


def _ennullr_subsets(
    classification: InstanceClassification, spec: AdjustmentSpec, rng: random.Random
) -> list[list[int]]:
    pos = [i for i, flag in enumerate(classification.indicator) if flag]
    neg = [i for i, flag in enumerate(classification.indicator) if not flag]
    nonzero = [t for t in spec.targets if t > 0]
    fractions = _target_fractions(nonzero)
    if fractions:
        size = _max_exact_size(fractions, len(pos), len(neg))
    else:
        # all-zero targets: disjoint draws of non-null instances only
        size = len(neg) // len(spec.targets)
    if size < spec.min_size:
        raise UnreachableTarget(
            f"cannot reach targets {spec.targets} with {len(pos)} null and "
            f"{len(neg)} non-null instances (max feasible size {size}, minimum {spec.min_size})",
            positives=len(pos),
            negatives=len(neg),
            max_feasible=size,
        )
    rng.shuffle(pos)
    rng.shuffle(neg)
    # Non-zero targets consume the shuffled pools first; 0.0 targets then take
    # the remaining non-null instances, or a fresh draw when too few remain.
    subsets: list[list[int] | None] = [None] * len(spec.targets)
    pos_cursor = neg_cursor = 0
    for idx, target in enumerate(spec.targets):
        if target <= 0:
            continue
        fraction = Fraction(target).limit_denominator(_TARGET_DENOMINATOR_LIMIT)
        need_pos = int(fraction * size)
        need_neg = size - need_pos
        subsets[idx] = sorted(
            pos[pos_cursor : pos_cursor + need_pos] + neg[neg_cursor : neg_cursor + need_neg]
        )
        pos_cursor += need_pos
        neg_cursor += need_neg
    for idx, target in enumerate(spec.targets):
        if target > 0:
            continue
        remaining = neg[neg_cursor:]
        if len(remaining) >= size:
            subsets[idx] = sorted(remaining[:size])
            neg_cursor += size
        elif len(neg) >= size:
            subsets[idx] = sorted(rng.sample(neg, size))
        else:
            raise UnreachableTarget(
                f"a 0.0 target needs {size} non-null instances but only {len(neg)} exist",
                positives=len(pos),
                negatives=len(neg),
                max_feasible=len(neg),
            )
    return [s for s in subsets if s is not None]


def _greedy_mention_subsets(
    classification: InstanceClassification, spec: AdjustmentSpec, rng: random.Random
) -> list[list[int]]:
    """Greedy construction for mention-level ratios.

    The subset size is the largest one at which the greedy pass lands every
    target within tolerance; feasibility is assumed monotone in the size, so
    the search is a binary search below the hard cap of pool // k. Subsets are
    built sequentially from the shared pool, which keeps them disjoint.
    """
    n_pool = len(classification.indicator)
    k = len(spec.targets)
    order = list(range(n_pool))
    rng.shuffle(order)
    positive = np.array([classification.positive_mentions[i] for i in order], dtype=np.float64)
    total = np.array([classification.mention_counts[i] for i in order], dtype=np.float64)

    def attempt(size: int) -> list[list[int]] | None:
        available = np.ones(n_pool, dtype=bool)
        picks_per_target: list[list[int]] = []
        for target in spec.targets:
            sel_pos = 0.0
            sel_tot = 0.0
            picks: list[int] = []
            for _ in range(size):
                denominator = sel_tot + total
                with np.errstate(divide="ignore", invalid="ignore"):
                    distance = np.abs((sel_pos + positive) / denominator - target)
                distance[denominator == 0.0] = np.inf
                distance[~available] = np.inf
                j = int(np.argmin(distance))
                if not np.isfinite(distance[j]):
                    return None
                available[j] = False
                sel_pos += positive[j]
                sel_tot += total[j]
                picks.append(j)
            if sel_tot == 0.0 or abs(sel_pos / sel_tot - target) > spec.tolerance:
                return None
            picks_per_target.append(picks)
        return picks_per_target

    cap = n_pool // k
    if cap < spec.min_size:
        raise UnreachableTarget(
            f"pool of {n_pool} instances cannot hold {k} disjoint subsets of "
            f"at least {spec.min_size}",
            positives=classification.positives,
            negatives=classification.negatives,
            max_feasible=cap,
        )
    chosen = attempt(cap)
    size = cap
    if chosen is None:
        low, high = spec.min_size, cap - 1
        best: tuple[int, list[list[int]]] | None = None
        while low <= high:
            mid = (low + high) // 2
            got = attempt(mid)
            if got is not None:
                best = (mid, got)
                low = mid + 1
            else:
                high = mid - 1
        if best is None:
            raise UnreachableTarget(
                f"no subset size of at least {spec.min_size} reaches targets "
                f"{spec.targets} within ±{spec.tolerance}",
                positives=classification.positives,
                negatives=classification.negatives,
                max_feasible=0,
            )
        size, chosen = best
    return [sorted(order[j] for j in picks) for picks in chosen]


def _subcorpus(corpus: Corpus, positions: Sequence[int]) -> Corpus:
    return Corpus(
        tuple(corpus.instances[p] for p in positions),
        split_kind=corpus.split_kind,
        scheme=corpus.scheme,
        char_tokenized=corpus.char_tokenized,
        type_inventory=corpus.type_inventory,
    )


def _mention_ratio(subset: Corpus, positive_surfaces: frozenset[str]) -> float:
    matched = sum(1 for m in subset.mentions if m.surface in positive_surfaces)
    return matched / len(subset.mentions)


def _check_achieved(
    achieved: Sequence[float], spec: AdjustmentSpec, classification: InstanceClassification
) -> None:
    # Construction bug guard: the re-measured values must sit within tolerance.
    for got, target in zip(achieved, spec.targets):
        if abs(got - target) > spec.tolerance + 1e-12:
            raise UnreachableTarget(
                f"constructed subset measured {got:.4f} against target {target:.4f} "
                f"(tolerance {spec.tolerance})",
                positives=classification.positives,
                negatives=classification.negatives,
                max_feasible=0,
            )
