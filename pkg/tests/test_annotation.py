import json
import random

import pytest
from sklearn.metrics import cohen_kappa_score

from nerqa.annotation import (
    ACCURATE,
    INACCURATE,
    JudgmentSet,
    accuracy_from_annotations,
    cohen_kappa,
    load_judgment_lines,
    sample_for_annotation,
)
from nerqa.corpus import Corpus
from nerqa.errors import EmptyCorpus, EmptyJudgments, JsonError, KeyMismatch

from helpers import make_corpus


def judgment_set(annotator, flags):
    return JudgmentSet(
        annotator,
        {i: ACCURATE if flag else INACCURATE for i, flag in enumerate(flags)},
    )


class TestSampling:
    def corpus(self, n):
        return make_corpus([((f"w{i}",), ("O",)) for i in range(n)])

    def test_deterministic_under_fixed_seed(self):
        corpus = self.corpus(1000)
        first = sample_for_annotation(corpus, size=100, seed=7)
        second = sample_for_annotation(corpus, size=100, seed=7)
        assert first.instance_ids == second.instance_ids
        assert len(first.instance_ids) == 100
        assert not first.short_sample

    def test_different_seeds_differ(self):
        corpus = self.corpus(1000)
        assert (
            sample_for_annotation(corpus, seed=1).instance_ids
            != sample_for_annotation(corpus, seed=2).instance_ids
        )

    def test_short_sample_takes_all(self):
        corpus = self.corpus(40)
        sample = sample_for_annotation(corpus, size=100, seed=7)
        assert sample.instance_ids == tuple(range(40))
        assert sample.short_sample

    def test_default_size_is_100(self):
        corpus = self.corpus(500)
        assert len(sample_for_annotation(corpus, seed=0).instance_ids) == 100

    def test_ids_distinct_and_in_range(self):
        corpus = self.corpus(30)
        sample = sample_for_annotation(corpus, size=10, seed=3)
        assert len(set(sample.instance_ids)) == 10
        assert all(0 <= i < 30 for i in sample.instance_ids)

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            sample_for_annotation(Corpus(()), size=5)


class TestCohenKappa:
    def test_identical_judgments(self):
        a = judgment_set("a", [True] * 5 + [False] * 5)
        b = judgment_set("b", [True] * 5 + [False] * 5)
        assert cohen_kappa(a, b) == 1.0

    def test_independent_pattern_is_zero(self):
        a = judgment_set("a", [True, True, False, False])
        b = judgment_set("b", [True, False, True, False])
        assert cohen_kappa(a, b) == 0.0

    def test_symmetry_and_range(self):
        rng = random.Random(23)
        for _ in range(100):
            n = rng.randint(1, 30)
            a = judgment_set("a", [rng.random() < 0.6 for _ in range(n)])
            b = judgment_set("b", [rng.random() < 0.6 for _ in range(n)])
            kappa = cohen_kappa(a, b)
            assert kappa == cohen_kappa(b, a)
            assert -1.0 <= kappa <= 1.0

    def test_matches_reference_implementation(self):
        rng = random.Random(29)
        checked = 0
        for _ in range(200):
            n = rng.randint(2, 40)
            flags_a = [rng.random() < 0.7 for _ in range(n)]
            flags_b = [rng.random() < 0.7 for _ in range(n)]
            # reference returns nan for the degenerate single-category case
            if len(set(flags_a)) == 1 and flags_a == flags_b:
                continue
            if {(x, y) for x, y in zip(flags_a, flags_b)} in ({(True, False)}, {(False, True)}):
                continue
            expected = cohen_kappa_score(flags_a, flags_b)
            if expected != expected:  # nan
                continue
            ours = cohen_kappa(judgment_set("a", flags_a), judgment_set("b", flags_b))
            assert ours == pytest.approx(expected, abs=1e-12)
            checked += 1
        assert checked > 100

    def test_degenerate_same_category(self):
        a = judgment_set("a", [True, True, True])
        b = judgment_set("b", [True, True, True])
        assert cohen_kappa(a, b) == 1.0

    def test_key_mismatch(self):
        a = JudgmentSet("a", {0: ACCURATE})
        b = JudgmentSet("b", {1: ACCURATE})
        with pytest.raises(KeyMismatch):
            cohen_kappa(a, b)

    def test_empty_judgments(self):
        with pytest.raises(EmptyJudgments):
            cohen_kappa(JudgmentSet("a", {}), JudgmentSet("b", {}))


class TestAccuracy:
    def test_all_accurate(self):
        sets = [judgment_set(name, [True] * 10) for name in "abc"]
        assert accuracy_from_annotations(sets).value == 1.0

    def test_majority_83_of_100(self):
        flags_majority = [i < 83 for i in range(100)]
        dissent = [i % 2 == 0 for i in range(100)]
        sets = [
            judgment_set("a", flags_majority),
            judgment_set("b", flags_majority),
            judgment_set("c", dissent),
        ]
        assert accuracy_from_annotations(sets).value == 0.83

    def test_two_way_tie_counts_inaccurate(self):
        sets = [judgment_set("a", [True]), judgment_set("b", [False])]
        assert accuracy_from_annotations(sets).value == 0.0

    def test_single_annotator_fraction(self):
        result = accuracy_from_annotations([judgment_set("a", [True, True, False])])
        assert result.value == pytest.approx(2 / 3)
        assert result.min_pairwise_kappa is None
        assert not result.kappa_below_threshold

    def test_gate_flag_set_below_threshold(self):
        # agreement on 16 of 20 with balanced marginals: kappa = 0.6
        flags_a = [i < 10 for i in range(20)]
        flags_b = [i < 8 or i in (10, 11) for i in range(20)]
        a, b = judgment_set("a", flags_a), judgment_set("b", flags_b)
        assert cohen_kappa(a, b) == pytest.approx(0.6)
        result = accuracy_from_annotations([a, b])
        assert result.kappa_below_threshold
        assert result.min_pairwise_kappa == pytest.approx(0.6)

    def test_gate_passes_above_threshold(self):
        sets = [judgment_set(name, [i < 15 for i in range(20)]) for name in "ab"]
        result = accuracy_from_annotations(sets)
        assert result.min_pairwise_kappa == 1.0
        assert not result.kappa_below_threshold

    def test_invariant_under_annotator_and_instance_order(self):
        rng = random.Random(31)
        flags = [[rng.random() < 0.7 for _ in range(25)] for _ in range(3)]
        sets = [judgment_set(str(i), f) for i, f in enumerate(flags)]
        baseline = accuracy_from_annotations(sets).value
        assert accuracy_from_annotations(sets[::-1]).value == baseline
        permuted_ids = list(range(25))
        rng.shuffle(permuted_ids)
        remapped = [
            JudgmentSet(str(i), {permuted_ids[k]: v for k, v in js.judgments.items()})
            for i, js in enumerate(sets)
        ]
        assert accuracy_from_annotations(remapped).value == baseline

    def test_key_mismatch(self):
        with pytest.raises(KeyMismatch):
            accuracy_from_annotations(
                [JudgmentSet("a", {0: ACCURATE}), JudgmentSet("b", {1: ACCURATE})]
            )

    def test_empty(self):
        with pytest.raises(EmptyJudgments):
            accuracy_from_annotations([])


class TestJudgmentLoading:
    def test_groups_by_annotator(self):
        lines = [
            json.dumps({"annotator": "a", "instance_id": 0, "judgment": "accurate"}),
            json.dumps({"annotator": "b", "instance_id": 0, "judgment": "inaccurate"}),
            json.dumps({"annotator": "a", "instance_id": 1, "judgment": "accurate"}),
        ]
        sets = load_judgment_lines(lines)
        assert [js.annotator_id for js in sets] == ["a", "b"]
        assert sets[0].judgments == {0: ACCURATE, 1: ACCURATE}

    def test_bad_json_line(self):
        with pytest.raises(JsonError) as err:
            load_judgment_lines(["{not json"])
        assert "line 1" in str(err.value)

    def test_missing_field(self):
        with pytest.raises(JsonError):
            load_judgment_lines([json.dumps({"annotator": "a", "instance_id": 0})])

    def test_bad_judgment_value(self):
        line = json.dumps({"annotator": "a", "instance_id": 0, "judgment": "maybe"})
        with pytest.raises(JsonError):
            load_judgment_lines([line])

    def test_judgment_set_rejects_unknown_values(self):
        with pytest.raises(ValueError):
            JudgmentSet("a", {0: "sure"})
