import random

import pytest

from nerqa.adjustment import (
    AdjustmentSpec,
    adjust_test_sets,
    adjust_traindev_ennullr,
    classify_instances,
)
from nerqa.corpus import DatasetBundle
from nerqa.errors import MissingSplit, UnreachableTarget
from nerqa.metrics import entity_null_rate, leakage_ratio

from helpers import make_corpus


def null_sentence(i):
    return ((f"null{i}", "x"), ("O", "O"))


def entity_sentence(i, surface=None, etype="PER"):
    return ((surface or f"ent{i}",), (f"B-{etype}",))


def ennullr_bundle(n_null, n_entity):
    sentences = [null_sentence(i) for i in range(n_null)]
    sentences += [entity_sentence(i) for i in range(n_entity)]
    return DatasetBundle(make_corpus(sentences, "train"))


def leakage_bundle(n_leaked, n_fresh):
    train_sents = [entity_sentence(i) for i in range(max(n_leaked, 1))]
    test_sents = train_sents[:n_leaked] + [
        entity_sentence(i, surface=f"fresh{i}") for i in range(n_fresh)
    ]
    return DatasetBundle(
        make_corpus(train_sents, "train"), test=make_corpus(test_sents, "test")
    )


def unseen_bundle(n_unseen, n_seen, seen_vocab=20):
    train_sents = [entity_sentence(i, surface=f"seen{i % seen_vocab}") for i in range(50)]
    test_sents = [entity_sentence(i, surface=f"unk{i}") for i in range(n_unseen)]
    test_sents += [entity_sentence(i, surface=f"seen{i % seen_vocab}") for i in range(n_seen)]
    return DatasetBundle(
        make_corpus(train_sents, "train"), test=make_corpus(test_sents, "test")
    )


class TestClassifyInstances:
    def test_unseen_counts_positive_mentions(self):
        train = make_corpus([entity_sentence(0, surface="A")], "train")
        test = make_corpus([entity_sentence(0, surface="B")], "test")
        cls = classify_instances(DatasetBundle(train, test=test), "unseen")["test"]
        assert cls.positive_mentions == (1,)
        assert cls.indicator == (True,)

    def test_leakage_verbatim_containment(self):
        shared = entity_sentence(0, surface="X")
        bundle = DatasetBundle(
            make_corpus([shared], "train"),
            test=make_corpus([shared, entity_sentence(1)], "test"),
        )
        cls = classify_instances(bundle, "leakage")["test"]
        assert cls.indicator == (True, False)

    def test_ennullr_zero_mentions(self):
        bundle = ennullr_bundle(1, 1)
        cls = classify_instances(bundle, "ennullr")["train"]
        assert cls.indicator == (True, False)

    def test_ambiguity_uses_conflicts_across_splits(self):
        # "amb" is PER in train and ORG in test: conflicting over the union
        train = make_corpus([entity_sentence(0, surface="amb", etype="PER")], "train")
        test = make_corpus(
            [
                entity_sentence(0, surface="amb", etype="ORG"),
                entity_sentence(1, surface="plain"),
            ],
            "test",
        )
        cls = classify_instances(DatasetBundle(train, test=test), "ambiguity")["test"]
        assert cls.positive_mentions == (1, 0)

    def test_missing_test_split(self):
        with pytest.raises(MissingSplit):
            classify_instances(DatasetBundle(make_corpus([null_sentence(0)], "train")), "unseen")

    def test_ennullr_covers_train_and_dev(self):
        bundle = DatasetBundle(
            make_corpus([null_sentence(0)], "train"),
            dev=make_corpus([entity_sentence(0)], "dev"),
        )
        out = classify_instances(bundle, "ennullr")
        assert set(out) == {"train", "dev"}


class TestAdjustLeakage:
    def test_pool_of_ten_each(self):
        bundle = leakage_bundle(10, 10)
        spec = AdjustmentSpec("leakage", (0.8, 0.2), seed=1, min_size=10)
        result = adjust_test_sets(bundle, spec)
        assert result.size == 10
        assert result.achieved == (0.8, 0.2)
        leaked_counts = [
            sum(
                1
                for inst in subset
                if inst.key in {t.key for t in bundle.train.instances}
            )
            for subset in result.subsets
        ]
        assert leaked_counts == [8, 2]

    def test_achieved_is_remeasured_value(self):
        bundle = leakage_bundle(40, 40)
        result = adjust_test_sets(bundle, AdjustmentSpec("leakage", (0.8, 0.2), min_size=10))
        for subset, achieved in zip(result.subsets, result.achieved):
            again = leakage_ratio(DatasetBundle(bundle.train, None, subset)).value
            assert again == achieved

    def test_no_positives_is_unreachable(self):
        bundle = leakage_bundle(0, 20)
        with pytest.raises(UnreachableTarget) as err:
            adjust_test_sets(bundle, AdjustmentSpec("leakage", (0.8,), min_size=1))
        assert err.value.positives == 0
        assert err.value.max_feasible == 0

    def test_min_size_enforced(self):
        bundle = leakage_bundle(10, 10)
        with pytest.raises(UnreachableTarget) as err:
            adjust_test_sets(bundle, AdjustmentSpec("leakage", (0.8, 0.2)))
        assert err.value.max_feasible == 10


class TestAdjustMentionLevel:
    def test_unseen_default_targets(self):
        bundle = unseen_bundle(60, 60)
        spec = AdjustmentSpec("unseen", (0.8, 0.2), seed=5, min_size=10)
        result = adjust_test_sets(bundle, spec)
        assert len(result.subsets) == 2
        assert len(result.subsets[0]) == len(result.subsets[1]) == result.size
        for achieved, target in zip(result.achieved, result.targets):
            assert abs(achieved - target) <= spec.tolerance

    def test_subsets_disjoint_and_members_unmodified(self):
        bundle = unseen_bundle(60, 60)
        result = adjust_test_sets(bundle, AdjustmentSpec("unseen", (0.8, 0.2), min_size=10))
        seen: set[int] = set()
        for ids, subset in zip(result.member_ids, result.subsets):
            assert not (seen & set(ids))
            seen.update(ids)
            by_id = {inst.id: inst for inst in bundle.test.instances}
            for inst in subset:
                assert inst is by_id[inst.id]

    def test_deterministic_under_seed(self):
        bundle = unseen_bundle(40, 40)
        spec = AdjustmentSpec("unseen", (0.7, 0.3), seed=11, min_size=10)
        first = adjust_test_sets(bundle, spec)
        second = adjust_test_sets(bundle, spec)
        assert first.member_ids == second.member_ids
        different = adjust_test_sets(
            bundle, AdjustmentSpec("unseen", (0.7, 0.3), seed=12, min_size=10)
        )
        assert different.member_ids != first.member_ids or different.size != first.size

    def test_ambiguity_targets(self):
        # conflict surface "amb" appears under two types; plain ones under one
        train = make_corpus(
            [entity_sentence(i, surface="amb", etype="PER") for i in range(5)], "train"
        )
        test_sents = [entity_sentence(i, surface="amb", etype="ORG") for i in range(30)]
        test_sents += [entity_sentence(i, surface=f"solo{i}") for i in range(30)]
        bundle = DatasetBundle(train, test=make_corpus(test_sents, "test"))
        spec = AdjustmentSpec("ambiguity", (0.8, 0.2), seed=2, min_size=5)
        result = adjust_test_sets(bundle, spec)
        for achieved, target in zip(result.achieved, result.targets):
            assert abs(achieved - target) <= spec.tolerance

    def test_unreachable_when_no_positive_mentions(self):
        bundle = unseen_bundle(0, 40)
        with pytest.raises(UnreachableTarget):
            adjust_test_sets(bundle, AdjustmentSpec("unseen", (0.8, 0.2), min_size=5))

    def test_rejects_ennullr(self):
        bundle = unseen_bundle(10, 10)
        with pytest.raises(ValueError):
            adjust_test_sets(bundle, AdjustmentSpec("ennullr", (0.8, 0.2), min_size=5))


class TestAdjustEnNullR:
    def test_hundred_each(self):
        bundle = ennullr_bundle(100, 100)
        spec = AdjustmentSpec("ennullr", (0.8, 0.2), seed=7)
        result = adjust_traindev_ennullr(bundle, spec)["train"]
        assert result.size == 100
        assert result.achieved == (0.8, 0.2)
        null_counts = [
            sum(1 for ms in subset.mentions_per_instance if not ms)
            for subset in result.subsets
        ]
        assert null_counts == [80, 20]

    def test_zero_target_has_no_null_instances(self):
        bundle = ennullr_bundle(100, 150)
        spec = AdjustmentSpec("ennullr", (0.8, 0.2, 0.0), seed=7, min_size=10)
        result = adjust_traindev_ennullr(bundle, spec)["train"]
        zero_subset = result.subsets[2]
        assert entity_null_rate(zero_subset).value == 0.0
        assert result.achieved[2] == 0.0

    def test_zero_target_fresh_draw_when_remainder_short(self):
        # 100 null, 100 non-null: targets consume all 100 non-null, so the
        # 0.0 subset must re-draw from the full non-null pool
        bundle = ennullr_bundle(100, 100)
        spec = AdjustmentSpec("ennullr", (0.8, 0.2, 0.0), seed=7, min_size=10)
        result = adjust_traindev_ennullr(bundle, spec)["train"]
        assert result.size == 100
        assert result.achieved == (0.8, 0.2, 0.0)

    def test_no_null_instances_unreachable(self):
        bundle = ennullr_bundle(0, 100)
        with pytest.raises(UnreachableTarget) as err:
            adjust_traindev_ennullr(bundle, AdjustmentSpec("ennullr", (0.8, 0.2), min_size=5))
        assert err.value.positives == 0

    def test_dev_processed_identically(self):
        train_sents = [null_sentence(i) for i in range(60)] + [
            entity_sentence(i) for i in range(60)
        ]
        dev_sents = [null_sentence(i + 500) for i in range(30)] + [
            entity_sentence(i + 500) for i in range(30)
        ]
        bundle = DatasetBundle(
            make_corpus(train_sents, "train"), dev=make_corpus(dev_sents, "dev")
        )
        results = adjust_traindev_ennullr(bundle, AdjustmentSpec("ennullr", (0.8, 0.2), min_size=10))
        assert set(results) == {"train", "dev"}
        assert results["train"].size == 60
        assert results["dev"].size == 30
        for result in results.values():
            assert result.achieved == (0.8, 0.2)

    def test_exactness_within_one_over_n(self):
        rng = random.Random(41)
        for _ in range(10):
            n_null = rng.randint(20, 120)
            n_entity = rng.randint(20, 120)
            bundle = ennullr_bundle(n_null, n_entity)
            spec = AdjustmentSpec("ennullr", (0.8, 0.2), seed=rng.randint(0, 999), min_size=5)
            try:
                result = adjust_traindev_ennullr(bundle, spec)["train"]
            except UnreachableTarget:
                continue
            for achieved, target in zip(result.achieved, result.targets):
                assert abs(achieved - target) <= 1 / result.size + 1e-12

    def test_determinism(self):
        bundle = ennullr_bundle(80, 80)
        spec = AdjustmentSpec("ennullr", (0.8, 0.2), seed=3, min_size=5)
        assert (
            adjust_traindev_ennullr(bundle, spec)["train"].member_ids
            == adjust_traindev_ennullr(bundle, spec)["train"].member_ids
        )


class TestSpecValidation:
    def test_rejects_unknown_metric(self):
        with pytest.raises(ValueError):
            AdjustmentSpec("density", (0.5,))

    def test_rejects_out_of_range_targets(self):
        with pytest.raises(ValueError):
            AdjustmentSpec("unseen", (1.2,))

    def test_rejects_empty_targets(self):
        with pytest.raises(ValueError):
            AdjustmentSpec("unseen", ())
