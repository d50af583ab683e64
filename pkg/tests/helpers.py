"""Shared builders for test corpora and bundles."""

from __future__ import annotations

import random

from nerqa.corpus import Corpus, DatasetBundle

TYPES = ("PER", "ORG", "LOC")
VOCAB = tuple(f"tok{i}" for i in range(40))


def make_corpus(sentences, split_kind="train", **kwargs) -> Corpus:
    return Corpus.from_sentences(sentences, split_kind=split_kind, **kwargs)


def random_sentence(rng: random.Random, max_len=20, types=TYPES, entity_prob=0.3):
    m = rng.randint(1, max_len)
    tokens = [rng.choice(VOCAB) for _ in range(m)]
    labels = ["O"] * m
    i = 0
    while i < m:
        if rng.random() < entity_prob:
            etype = rng.choice(types)
            span = min(rng.randint(1, 3), m - i)
            labels[i] = "B-" + etype
            for k in range(i + 1, i + span):
                labels[k] = "I-" + etype
            i += span
        else:
            i += 1
    return tokens, labels


def random_sentences(rng: random.Random, max_instances=50, max_len=20, dup_prob=0.15,
                     types=TYPES, entity_prob=0.3):
    n = rng.randint(1, max_instances)
    sentences = []
    for _ in range(n):
        if sentences and rng.random() < dup_prob:
            sentences.append(rng.choice(sentences))
        else:
            sentences.append(random_sentence(rng, max_len, types, entity_prob))
    return sentences


def random_corpus(rng: random.Random, split_kind="train", **kwargs) -> Corpus:
    return make_corpus(random_sentences(rng, **kwargs), split_kind=split_kind)


def random_bundle(rng: random.Random, max_instances=50, max_len=20) -> DatasetBundle:
    """Random train/dev/test bundle with occasional cross-split duplicates."""
    train_sents = random_sentences(rng, max_instances, max_len)
    dev_sents = random_sentences(rng, max_instances, max_len) if rng.random() < 0.8 else None
    test_sents = random_sentences(rng, max_instances, max_len)
    # copy some train/dev sentences into test so leakage is sometimes non-zero
    donors = list(train_sents) + list(dev_sents or [])
    for idx in range(len(test_sents)):
        if rng.random() < 0.2:
            test_sents[idx] = rng.choice(donors)
    return DatasetBundle(
        make_corpus(train_sents, "train"),
        make_corpus(dev_sents, "dev") if dev_sents is not None else None,
        make_corpus(test_sents, "test"),
    )
