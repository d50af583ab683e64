"""Immutable corpus model plus parsers for token-per-line and span-annotated NER data.

The corpus model is deliberately small: an ``Instance`` is one sentence with
aligned tags, a ``Corpus`` is one ordered split, and a ``DatasetBundle`` groups
the train/dev/test splits that the cross-split statistics need. Everything is
frozen after construction so corpora can be shared freely across threads.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterable, Iterator, Sequence

from .errors import (
    EmptyInstance,
    InconsistentTag,
    JsonError,
    MalformedLine,
    OverlappingSpans,
    SpanOutOfRange,
)

BIO2 = "bio2"
BIOES = "bioes"
IOB1 = "iob1"

#: Schemes accepted by the parsers. IOB1 input is normalized to BIO2, so a
#: parsed corpus is always tagged in BIO2 or BIOES.
SCHEMES = (BIO2, BIOES, IOB1)

SPLIT_KINDS = ("train", "dev", "test")

_PREFIXES = {BIO2: frozenset("BI"), BIOES: frozenset("BIES"), IOB1: frozenset("BI")}


def _split_tag(tag: str) -> tuple[str, str]:
    """Return (prefix, entity type); the outside tag maps to ("O", "")."""
    if tag == "O":
        return "O", ""
    prefix, _, etype = tag.partition("-")
    return prefix, etype


@dataclass(frozen=True)
class Instance:
    """One sentence: a token sequence with an aligned tag sequence.

    ``id`` is the instance's ordinal within its split; equality for duplicate
    and leakage checks goes through :attr:`key`, which ignores it.
    """

    tokens: tuple[str, ...]
    labels: tuple[str, ...]
    id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.tokens:
            raise EmptyInstance("instance has no tokens")
        if len(self.tokens) != len(self.labels):
            raise ValueError(
                f"instance {self.id}: {len(self.tokens)} tokens vs {len(self.labels)} labels"
            )

    @property
    def key(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        """Identity used for duplicate and leakage checks."""
        return (self.tokens, self.labels)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class EntityMention:
    """A maximal contiguous tagged span. ``end`` is exclusive."""

    surface: str
    etype: str
    start: int
    end: int
    instance_id: int = 0


def extract_mentions(instance: Instance, separator: str = " ") -> tuple[EntityMention, ...]:
    """Decode the tag sequence into mentions, left to right.

    Understands BIO2 and BIOES tags. Unexpected continuations (an I- or E- tag
    with no open span of the same type) start a new mention, mirroring the
    parser's non-strict repair, so the decoder never fails on hand-built
    instances.
    """
    labels = instance.labels
    tokens = instance.tokens
    m = len(labels)
    out = []
    i = 0
    while i < m:
        tag = labels[i]
        if tag == "O":
            i += 1
            continue
        prefix, etype = _split_tag(tag)
        start = i
        i += 1
        if prefix not in ("S", "E"):
            cont = "I-" + etype
            stop = "E-" + etype
            while i < m and labels[i] == cont:
                i += 1
            if i < m and labels[i] == stop:
                i += 1
        out.append(
            EntityMention(separator.join(tokens[start:i]), etype, start, i, instance.id)
        )
    return tuple(out)


@dataclass(frozen=True)
class Corpus:
    """An ordered, immutable collection of instances for one dataset split.

    ``type_inventory`` may be supplied explicitly; when ``None`` the inventory
    is the set of types actually observed in the mentions. ``repair_count``
    records how many tags the non-strict parser rewrote.
    """

    instances: tuple[Instance, ...]
    split_kind: str = "train"
    scheme: str = BIO2
    char_tokenized: bool = False
    type_inventory: frozenset[str] | None = None
    repair_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        if self.split_kind not in SPLIT_KINDS:
            raise ValueError(f"split_kind must be one of {SPLIT_KINDS}, got {self.split_kind!r}")
        if self.scheme not in (BIO2, BIOES):
            raise ValueError(f"a corpus is tagged in {BIO2!r} or {BIOES!r}, got {self.scheme!r}")
        if self.type_inventory is not None:
            object.__setattr__(self, "type_inventory", frozenset(self.type_inventory))

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[Instance]:
        return iter(self.instances)

    @property
    def separator(self) -> str:
        """Joiner for multi-token surfaces: none for character-tokenized corpora."""
        return "" if self.char_tokenized else " "

    @cached_property
    def mentions_per_instance(self) -> tuple[tuple[EntityMention, ...], ...]:
        sep = self.separator
        return tuple(extract_mentions(inst, sep) for inst in self.instances)

    @cached_property
    def mentions(self) -> tuple[EntityMention, ...]:
        """All mention occurrences in instance order."""
        return tuple(m for ms in self.mentions_per_instance for m in ms)

    @cached_property
    def entity_surfaces(self) -> frozenset[str]:
        """Unique mention surfaces; identity is the case-sensitive surface string."""
        return frozenset(m.surface for m in self.mentions)

    @cached_property
    def types(self) -> frozenset[str]:
        """Effective type inventory: the explicit one, or the observed types."""
        if self.type_inventory is not None:
            return self.type_inventory
        return frozenset(m.etype for m in self.mentions)

    @classmethod
    def from_sentences(
        cls,
        sentences: Iterable[tuple[Sequence[str], Sequence[str]]],
        *,
        split_kind: str = "train",
        scheme: str = BIO2,
        char_tokenized: bool = False,
        type_inventory: Iterable[str] | None = None,
    ) -> Corpus:
        """Build a corpus from (tokens, labels) pairs, assigning ordinal ids."""
        instances = tuple(
            Instance(tuple(tokens), tuple(labels), i)
            for i, (tokens, labels) in enumerate(sentences)
        )
        inventory = frozenset(type_inventory) if type_inventory is not None else None
        return cls(
            instances,
            split_kind=split_kind,
            scheme=scheme,
            char_tokenized=char_tokenized,
            type_inventory=inventory,
        )


def entity_set(value: Corpus | Instance, separator: str = " ") -> frozenset[str]:
    """Unique mention surfaces of a corpus or of a single instance."""
    if isinstance(value, Corpus):
        return value.entity_surfaces
    return frozenset(m.surface for m in extract_mentions(value, separator))


@dataclass(frozen=True)
class DatasetBundle:
    """The train/dev/test triple; train is required, dev and test optional."""

    train: Corpus
    dev: Corpus | None = None
    test: Corpus | None = None

    def __post_init__(self):
        for name, corpus in self.splits():
            if corpus.split_kind != name:
                raise ValueError(
                    f"{name} slot holds a corpus labeled {corpus.split_kind!r}"
                )
        schemes = {c.scheme for _, c in self.splits()}
        flags = {c.char_tokenized for _, c in self.splits()}
        if len(schemes) > 1 or len(flags) > 1:
            raise ValueError("all splits must share one tagging scheme and tokenization")

    def splits(self) -> Iterator[tuple[str, Corpus]]:
        """Present splits in train, dev, test order."""
        for name in SPLIT_KINDS:
            corpus = getattr(self, name)
            if corpus is not None:
                yield name, corpus

    def get(self, split_kind: str) -> Corpus | None:
        if split_kind not in SPLIT_KINDS:
            raise ValueError(f"unknown split kind {split_kind!r}")
        return getattr(self, split_kind)


# token-per-line parsing -------------------------------------------------------


def parse_conll(
    text: str,
    *,
    scheme: str = BIO2,
    strict: bool = False,
    char_tokenized: bool = False,
    split_kind: str = "train",
) -> Corpus:
    """Parse token-per-line text into a corpus.

    Each non-blank line is ``token<WS>tag`` where the last whitespace-separated
    field is the tag; blank lines separate instances and ``-DOCSTART-`` lines
    are skipped. In non-strict mode scheme violations are repaired (a dangling
    I- tag becomes B-); in strict mode they raise with the line number.
    """
    return _parse_conll_lines(
        text.splitlines(), scheme=scheme, strict=strict,
        char_tokenized=char_tokenized, split_kind=split_kind,
    )


def parse_conll_file(
    path,
    *,
    scheme: str = BIO2,
    strict: bool = False,
    char_tokenized: bool = False,
    split_kind: str = "train",
) -> Corpus:
    """Streaming variant of :func:`parse_conll`, reading the file line by line."""
    with open(path, encoding="utf-8") as handle:
        return _parse_conll_lines(
            handle, scheme=scheme, strict=strict,
            char_tokenized=char_tokenized, split_kind=split_kind,
        )


def _parse_conll_lines(
    lines: Iterable[str] | IO[str],
    *,
    scheme: str,
    strict: bool,
    char_tokenized: bool,
    split_kind: str,
) -> Corpus:
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    instances: list[Instance] = []
    tokens: list[str] = []
    tags: list[str] = []
    tag_lines: list[int] = []
    repairs = 0

    def flush() -> None:
        nonlocal repairs
        if not tokens:
            return
        fixed, n_repaired = _normalize_labels(tags, tag_lines, scheme, strict)
        repairs += n_repaired
        instances.append(
            Instance(tuple(tokens), tuple(sys.intern(t) for t in fixed), len(instances))
        )
        tokens.clear()
        tags.clear()
        tag_lines.clear()

    for line_no, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            flush()
            continue
        fields = line.split()
        if fields[0] == "-DOCSTART-":
            continue
        if len(fields) < 2:
            raise MalformedLine(f"expected `token tag`, got {line!r}", line=line_no)
        tokens.append(sys.intern(fields[0]))
        tags.append(sys.intern(fields[-1]))
        tag_lines.append(line_no)
    flush()

    out_scheme = BIO2 if scheme == IOB1 else scheme
    return Corpus(
        tuple(instances),
        split_kind=split_kind,
        scheme=out_scheme,
        char_tokenized=char_tokenized,
        repair_count=repairs,
    )


def _normalize_labels(
    tags: list[str], lines: list[int], scheme: str, strict: bool
) -> tuple[list[str], int]:
    _check_tag_grammar(tags, lines, scheme)
    if scheme == IOB1:
        return _iob1_to_bio2(tags, lines, strict), 0
    if scheme == BIOES:
        if strict:
            _check_bioes_strict(tags, lines)
            return list(tags), 0
        return _repair_bioes(tags)
    return _validate_bio2(tags, lines, strict)


def _check_tag_grammar(tags: list[str], lines: list[int], scheme: str) -> None:
    allowed = _PREFIXES[scheme]
    for tag, line in zip(tags, lines):
        if tag == "O":
            continue
        prefix, sep, etype = tag.partition("-")
        if prefix not in allowed or not sep or not etype:
            raise InconsistentTag(f"tag {tag!r} is not valid under scheme {scheme!r}", line=line)


def _validate_bio2(tags: list[str], lines: list[int], strict: bool) -> tuple[list[str], int]:
    fixed = list(tags)
    repairs = 0
    prev_prefix, prev_type = "O", ""
    for idx, tag in enumerate(tags):
        prefix, etype = _split_tag(tag)
        if prefix == "I" and not (prev_prefix in ("B", "I") and prev_type == etype):
            if strict:
                raise InconsistentTag(
                    f"I-{etype} is not preceded by B-{etype} or I-{etype}", line=lines[idx]
                )
            fixed[idx] = "B-" + etype
            prefix = "B"
            repairs += 1
        prev_prefix, prev_type = prefix, etype
    return fixed, repairs


def _iob1_to_bio2(tags: list[str], lines: list[int], strict: bool) -> list[str]:
    # In IOB1, I- opens an entity and B- only separates two adjacent mentions
    # of the same type.
    fixed: list[str] = []
    prev_prefix, prev_type = "O", ""
    for idx, tag in enumerate(tags):
        prefix, etype = _split_tag(tag)
        if prefix == "B":
            if strict and not (prev_prefix in ("B", "I") and prev_type == etype):
                raise InconsistentTag(
                    f"B-{etype} does not split adjacent {etype} mentions", line=lines[idx]
                )
            fixed.append(tag)
        elif prefix == "I":
            if prev_prefix in ("B", "I") and prev_type == etype:
                fixed.append(tag)
            else:
                fixed.append("B-" + etype)
        else:
            fixed.append("O")
        prev_prefix, prev_type = prefix, etype
    return fixed


def _check_bioes_strict(tags: list[str], lines: list[int]) -> None:
    m = len(tags)
    for idx, tag in enumerate(tags):
        prefix, etype = _split_tag(tag)
        if prefix in ("B", "I"):
            nxt = tags[idx + 1] if idx + 1 < m else "O"
            if nxt not in ("I-" + etype, "E-" + etype):
                raise InconsistentTag(
                    f"{tag} is not followed by I-{etype} or E-{etype}", line=lines[idx]
                )
        if prefix in ("I", "E"):
            prev = tags[idx - 1] if idx else "O"
            if prev not in ("B-" + etype, "I-" + etype):
                raise InconsistentTag(
                    f"{tag} does not continue an open {etype} span", line=lines[idx]
                )


def _repair_bioes(tags: list[str]) -> tuple[list[str], int]:
    # Tolerantly decode into spans, then re-encode canonically: a dangling
    # B- or I- run is closed where it ends, a stray E- becomes a singleton.
    m = len(tags)
    spans: list[tuple[int, int, str]] = []
    i = 0
    while i < m:
        tag = tags[i]
        if tag == "O":
            i += 1
            continue
        prefix, etype = _split_tag(tag)
        start = i
        i += 1
        if prefix not in ("S", "E"):
            while i < m and tags[i] == "I-" + etype:
                i += 1
            if i < m and tags[i] == "E-" + etype:
                i += 1
        spans.append((start, i, etype))
    fixed = ["O"] * m
    for start, end, etype in spans:
        if end - start == 1:
            fixed[start] = "S-" + etype
        else:
            fixed[start] = "B-" + etype
            for k in range(start + 1, end - 1):
                fixed[k] = "I-" + etype
            fixed[end - 1] = "E-" + etype
    repairs = sum(1 for a, b in zip(tags, fixed) if a != b)
    return fixed, repairs


# span-annotated JSONL parsing ---------------------------------------------


def parse_jsonl_spans(text: str, *, split_kind: str = "train") -> Corpus:
    """Parse span-annotated JSONL into a character-tokenized BIO2 corpus.

    One object per line with a string ``text`` and a ``label`` map of
    ``type -> surface -> [[start, end], ...]`` character spans, end inclusive.
    """
    return _parse_jsonl_lines(text.splitlines(), split_kind=split_kind)


def parse_jsonl_file(path, *, split_kind: str = "train") -> Corpus:
    """Streaming variant of :func:`parse_jsonl_spans`."""
    with open(path, encoding="utf-8") as handle:
        return _parse_jsonl_lines(handle, split_kind=split_kind)


def _parse_jsonl_lines(lines: Iterable[str] | IO[str], *, split_kind: str) -> Corpus:
    instances: list[Instance] = []
    for line_no, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise JsonError(f"invalid JSON: {exc.msg}", line=line_no) from exc
        if not isinstance(obj, dict) or not isinstance(obj.get("text"), str):
            raise JsonError("object must carry a string `text` field", line=line_no)
        text = obj["text"]
        label = obj.get("label") or {}
        if not isinstance(label, dict):
            raise JsonError("`label` must be an object", line=line_no)
        if not text:
            raise EmptyInstance("empty `text`", line=line_no)
        tags = ["O"] * len(text)
        for etype, surfaces in label.items():
            if not isinstance(surfaces, dict):
                raise JsonError(f"label entry for {etype!r} must be an object", line=line_no)
            for spans in surfaces.values():
                for span in spans:
                    try:
                        start, end = int(span[0]), int(span[1])
                    except (TypeError, ValueError, IndexError) as exc:
                        raise JsonError(f"span {span!r} is not a [start, end] pair", line=line_no) from exc
                    if not 0 <= start <= end < len(text):
                        raise SpanOutOfRange(
                            f"span [{start}, {end}] outside text of length {len(text)}",
                            line=line_no,
                        )
                    if any(tags[k] != "O" for k in range(start, end + 1)):
                        raise OverlappingSpans(
                            f"span [{start}, {end}] ({etype}) overlaps an earlier span",
                            line=line_no,
                        )
                    tags[start] = "B-" + etype
                    for k in range(start + 1, end + 1):
                        tags[k] = "I-" + etype
        instances.append(
            Instance(
                tuple(sys.intern(c) for c in text),
                tuple(sys.intern(t) for t in tags),
                len(instances),
            )
        )
    return Corpus(tuple(instances), split_kind=split_kind, scheme=BIO2, char_tokenized=True)


# serialization ---------------------------------------------------------------


def to_conll(corpus: Corpus) -> str:
    """Render one ``token tag`` line per token with blank lines between instances.

    Tokens containing whitespace (possible in character-tokenized corpora)
    cannot be represented in this format and raise ``ValueError``.
    """
    chunks: list[str] = []
    for inst in corpus.instances:
        for token, tag in zip(inst.tokens, inst.labels):
            if token.split() != [token]:
                raise ValueError(
                    f"token {token!r} is not representable in token-per-line output"
                )
            chunks.append(f"{token} {tag}")
        chunks.append("")
    return "\n".join(chunks)
