"""Command-line entry point: eval, adjust, sample, kappa, and accuracy runs.

Exit codes: 0 on success, 1 on errors, 2 when strict mode finishes with
validation warnings. Diagnostics go to stderr, one per line; set NERQA_NO_COLOR
to disable ANSI colors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from .adjustment import AdjustmentSpec, adjust_test_sets, adjust_traindev_ennullr
from .annotation import (
    KAPPA_THRESHOLD,
    accuracy_from_annotations,
    cohen_kappa,
    load_judgment_file,
    sample_for_annotation,
)
from .corpus import (
    BIO2,
    SCHEMES,
    SPLIT_KINDS,
    Corpus,
    DatasetBundle,
    parse_conll_file,
    parse_jsonl_file,
    to_conll,
)
from .errors import NerqaError, ParseError
from .metrics import ModelScores
from .report import evaluate_bundle, render_json, render_markdown


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NerqaError as exc:
        _error(str(exc))
        return 1
    except (OSError, UnicodeDecodeError) as exc:
        _error(str(exc))
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nerqa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    corpus_io = argparse.ArgumentParser(add_help=False)
    corpus_io.add_argument("--format", choices=("conll", "jsonl"), default="conll",
                           help="input file format (default: conll)")
    corpus_io.add_argument("--scheme", choices=SCHEMES, default=BIO2,
                           help="tagging scheme of conll input (default: bio2)")
    corpus_io.add_argument("--strict", action="store_true",
                           help="reject scheme violations instead of repairing them")
    corpus_io.add_argument("--char-tokenized", action="store_true",
                           help="join mention surfaces without separators")

    p_eval = sub.add_parser("eval", parents=[corpus_io],
                            help="compute the nine-metric quality report")
    p_eval.add_argument("--train", required=True)
    p_eval.add_argument("--dev")
    p_eval.add_argument("--test")
    p_eval.add_argument("--require-test", action="store_true",
                        help="fail when no test split is given")
    p_eval.add_argument("--scores", help="comma-separated model F1 scores")
    p_eval.add_argument("--annotations", action="append", metavar="SPLIT=PATH",
                        help="judgment JSONL per split; repeatable")
    p_eval.add_argument("--name", help="dataset name shown in the report")
    p_eval.add_argument("--report", choices=("md", "json"), default="md")
    p_eval.add_argument("--output", help="write the report here instead of stdout")
    p_eval.set_defaults(func=_cmd_eval)

    p_adjust = sub.add_parser("adjust", parents=[corpus_io],
                              help="construct equal-size subsets pinned to target values")
    p_adjust.add_argument("--train", required=True)
    p_adjust.add_argument("--dev")
    p_adjust.add_argument("--test")
    p_adjust.add_argument("--metric", required=True,
                          choices=("unseen", "ambiguity", "leakage", "ennullr"))
    p_adjust.add_argument("--targets", default="0.8,0.2",
                          help="comma-separated target ratios (default: 0.8,0.2)")
    p_adjust.add_argument("--seed", type=int, default=0)
    p_adjust.add_argument("--tolerance", type=float, default=0.02)
    p_adjust.add_argument("--min-size", type=int, default=50,
                          help="smallest acceptable subset size (default: 50)")
    p_adjust.add_argument("--output-dir", required=True)
    p_adjust.set_defaults(func=_cmd_adjust)

    p_sample = sub.add_parser("sample", parents=[corpus_io],
                              help="draw instances for human annotation")
    p_sample.add_argument("--input", required=True)
    p_sample.add_argument("--split", choices=SPLIT_KINDS, default="train")
    p_sample.add_argument("--size", type=int, default=100)
    p_sample.add_argument("--seed", type=int, default=0)
    p_sample.add_argument("--output", help="write the sample here instead of stdout")
    p_sample.set_defaults(func=_cmd_sample)

    p_kappa = sub.add_parser("kappa", help="pairwise agreement between judgment files")
    p_kappa.add_argument("files", nargs="+")
    p_kappa.set_defaults(func=_cmd_kappa)

    p_accuracy = sub.add_parser("accuracy", help="majority-vote accuracy from judgments")
    p_accuracy.add_argument("files", nargs="+")
    p_accuracy.set_defaults(func=_cmd_accuracy)

    return parser


def _load_corpus(path: str, args: argparse.Namespace, split_kind: str) -> Corpus:
    try:
        if args.format == "jsonl":
            return parse_jsonl_file(path, split_kind=split_kind)
        return parse_conll_file(
            path,
            scheme=args.scheme,
            strict=args.strict,
            char_tokenized=args.char_tokenized,
            split_kind=split_kind,
        )
    except ParseError as exc:
        raise type(exc)(f"{path}: {exc}") from exc


def _load_bundle(args: argparse.Namespace) -> DatasetBundle:
    train = _load_corpus(args.train, args, "train")
    dev = _load_corpus(args.dev, args, "dev") if args.dev else None
    test = _load_corpus(args.test, args, "test") if args.test else None
    return DatasetBundle(train, dev, test)


def _cmd_eval(args: argparse.Namespace) -> int:
    if args.require_test and not args.test:
        _error("test split required but not provided")
        return 1
    bundle = _load_bundle(args)
    warnings = [
        f"{name}: repaired {corpus.repair_count} inconsistent tags during parsing"
        for name, corpus in bundle.splits()
        if corpus.repair_count
    ]
    scores = None
    if args.scores:
        scores = ModelScores(tuple(float(s) for s in args.scores.split(",")))
    accuracy = {}
    for entry in args.annotations or []:
        split, _, path = entry.partition("=")
        if split not in SPLIT_KINDS or not path:
            _error(f"--annotations expects SPLIT=PATH, got {entry!r}")
            return 1
        accuracy[split] = accuracy_from_annotations(load_judgment_file(path))
    report = evaluate_bundle(
        bundle,
        dataset_name=args.name or Path(args.train).stem,
        model_scores=scores,
        accuracy=accuracy or None,
        warnings=warnings,
    )
    text = render_json(report) if args.report == "json" else render_markdown(report)
    _write_output(text, args.output)
    for warning in report.warnings:
        _warn(warning)
    return 2 if args.strict and report.warnings else 0


def _cmd_adjust(args: argparse.Namespace) -> int:
    bundle = _load_bundle(args)
    spec = AdjustmentSpec(
        target_metric=args.metric,
        targets=tuple(float(t) for t in args.targets.split(",")),
        seed=args.seed,
        tolerance=args.tolerance,
        min_size=args.min_size,
    )
    if args.metric == "ennullr":
        results = adjust_traindev_ennullr(bundle, spec)
    else:
        results = {"test": adjust_test_sets(bundle, spec)}
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for split, result in results.items():
        rows = zip(result.targets, result.achieved, result.member_ids, result.subsets)
        for index, (target, achieved, ids, subset) in enumerate(rows):
            stem = f"{split}.{args.metric}.{index}_{target:.2f}"
            conll_path = out_dir / f"{stem}.conll"
            try:
                conll_path.write_text(to_conll(subset), encoding="utf-8")
            except ValueError as exc:
                _error(str(exc))
                return 1
            manifest = {
                "schema_version": 1,
                "metric": args.metric,
                "split": split,
                "target": round(target, 6),
                "achieved": round(achieved, 6),
                "n": result.size,
                "seed": result.seed,
                "tolerance": round(spec.tolerance, 6),
                "instance_ids": list(ids),
            }
            (out_dir / f"{stem}.manifest.json").write_text(
                json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
            )
            print(
                f"{split} target={target:.2f} achieved={achieved:.4f} "
                f"n={result.size} -> {conll_path}"
            )
    return 0


def _cmd_sample(args: argparse.Namespace) -> int:
    corpus = _load_corpus(args.input, args, args.split)
    sample = sample_for_annotation(corpus, size=args.size, seed=args.seed)
    by_id = {inst.id: inst for inst in corpus}
    lines = [
        json.dumps(
            {
                "instance_id": instance_id,
                "tokens": list(by_id[instance_id].tokens),
                "labels": list(by_id[instance_id].labels),
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        for instance_id in sample.instance_ids
    ]
    _write_output("\n".join(lines) + "\n", args.output)
    if sample.short_sample:
        _warn(
            f"corpus has only {len(corpus)} instances, sampled all of them "
            f"(requested {args.size})"
        )
    return 0


def _cmd_kappa(args: argparse.Namespace) -> int:
    sets = [js for path in args.files for js in load_judgment_file(path)]
    if len(sets) < 2:
        _error("need judgments from at least two annotators")
        return 1
    values = []
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            kappa = cohen_kappa(sets[i], sets[j])
            values.append(kappa)
            print(f"{sets[i].annotator_id}\t{sets[j].annotator_id}\t{kappa:.4f}")
    print(f"min\t{min(values):.4f}")
    if min(values) <= KAPPA_THRESHOLD:
        _warn(f"agreement gate failed: min kappa {min(values):.4f} <= {KAPPA_THRESHOLD}")
    return 0


def _cmd_accuracy(args: argparse.Namespace) -> int:
    sets = [js for path in args.files for js in load_judgment_file(path)]
    result = accuracy_from_annotations(sets)
    print(f"accuracy\t{result.value:.4f}")
    if result.min_pairwise_kappa is not None:
        print(f"min_kappa\t{result.min_pairwise_kappa:.4f}")
    if len(sets) < 3:
        _warn("fewer than 3 annotators; accuracy estimates are more reliable with at least 3")
    if result.kappa_below_threshold:
        _warn(
            f"agreement gate failed: min kappa {result.min_pairwise_kappa:.4f} "
            f"<= {KAPPA_THRESHOLD}; accuracy may be unreliable"
        )
    return 0


def _write_output(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _use_color() -> bool:
    return sys.stderr.isatty() and not os.environ.get("NERQA_NO_COLOR")


def _paint(text: str, code: str) -> str:
    return f"\x1b[{code}m{text}\x1b[0m" if _use_color() else text


def _error(message: str) -> None:
    print(_paint(f"error: {message}", "31"), file=sys.stderr)


def _warn(message: str) -> None:
    print(_paint(f"warning: {message}", "33"), file=sys.stderr)


if __name__ == "__main__":
    raise SystemExit(main())
