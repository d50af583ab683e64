"""Dataset-level report: aggregation over splits plus Markdown and JSON renderers."""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Sequence

from .annotation import KAPPA_THRESHOLD, AccuracyResult
from .corpus import SPLIT_KINDS, DatasetBundle
from .errors import EmptyCorpus, MissingSplit, NoEntities
from .metrics import (
    EXTERNAL_RULE,
    MEAN_RULE,
    ONCE_RULE,
    REGISTRY,
    ModelScores,
    leakage_ratio,
    model_differentiation,
    split_metrics,
    unseen_entity_ratio,
)

SCHEMA_VERSION = 1

#: Missing values render as a true minus sign in the Markdown table.
ABSENT_MARK = "−"


@dataclass(frozen=True)
class MetricReport:
    """All nine metrics with per-split breakdowns and the rule behind each value.

    ``aggregated`` always carries the full metric set; metrics whose inputs
    were unavailable hold ``None`` with the reason recorded in ``absent``.
    """

    dataset_name: str
    per_split: Mapping[str, Mapping[str, float]]
    aggregated: Mapping[str, float | None]
    aggregation_rule: Mapping[str, str]
    absent: Mapping[str, str]
    warnings: tuple[str, ...] = ()


def aggregate_report(
    bundle: DatasetBundle,
    per_split: Mapping[str, Mapping[str, float]],
    *,
    dataset_name: str = "dataset",
    model_scores: ModelScores | None = None,
    accuracy: Mapping[str, AccuracyResult] | None = None,
    warnings: Sequence[str] = (),
) -> MetricReport:
    """Fold per-split values into one dataset-level report.

    Mean-rule metrics average over the splits where they are defined, in
    train/dev/test order; the cross-split ratios are computed once from the
    bundle; externally supplied model scores pass through. A metric whose
    inputs are missing stays in the report with a reason instead of a value.
    """
    split_values = {split: dict(values) for split, values in per_split.items()}
    warning_list = list(warnings)
    if accuracy:
        for split, result in accuracy.items():
            split_values.setdefault(split, {})["accuracy"] = result.value
            if result.kappa_below_threshold:
                warning_list.append(
                    f"{split}: inter-annotator agreement {result.min_pairwise_kappa:.3f} "
                    f"is at or below the {KAPPA_THRESHOLD} gate"
                )

    aggregated: dict[str, float | None] = {}
    absent: dict[str, str] = {}
    rules = {spec.name: spec.aggregation for spec in REGISTRY}

    ordered_splits = [s for s in SPLIT_KINDS if s in split_values]
    for spec in REGISTRY:
        if spec.aggregation != MEAN_RULE:
            continue
        values = [
            split_values[s][spec.name] for s in ordered_splits if spec.name in split_values[s]
        ]
        if values:
            aggregated[spec.name] = sum(values) / len(values)
        else:
            aggregated[spec.name] = None
            absent[spec.name] = (
                "no annotation results supplied"
                if spec.name == "accuracy"
                else "not defined for any present split"
            )

    for name, compute in (
        ("leakage_ratio", leakage_ratio),
        ("unseen_entity_ratio", unseen_entity_ratio),
    ):
        try:
            aggregated[name] = compute(bundle).value
        except (MissingSplit, EmptyCorpus, NoEntities) as exc:
            aggregated[name] = None
            absent[name] = str(exc)

    if model_scores is not None:
        aggregated["model_differentiation"] = model_differentiation(model_scores).value
    else:
        aggregated["model_differentiation"] = None
        absent["model_differentiation"] = "no model scores supplied"

    ordered = {spec.name: aggregated[spec.name] for spec in REGISTRY}
    return MetricReport(
        dataset_name, split_values, ordered, rules, absent, tuple(warning_list)
    )


def evaluate_bundle(
    bundle: DatasetBundle,
    *,
    dataset_name: str = "dataset",
    model_scores: ModelScores | None = None,
    accuracy: Mapping[str, AccuracyResult] | None = None,
    warnings: Sequence[str] = (),
) -> MetricReport:
    """Compute every per-split metric and aggregate in one step."""
    per_split: dict[str, dict[str, float]] = {}
    warning_list = list(warnings)
    for name, corpus in bundle.splits():
        values, split_warnings = split_metrics(corpus)
        per_split[name] = values
        warning_list.extend(split_warnings)
    return aggregate_report(
        bundle,
        per_split,
        dataset_name=dataset_name,
        model_scores=model_scores,
        accuracy=accuracy,
        warnings=warning_list,
    )


def _format2(value: float) -> str:
    return str(Decimal(str(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def render_markdown(report: MetricReport) -> str:
    """One table row in registry column order, with per-split values below."""
    arrow = {"higher-better": "↑", "lower-better": "↓"}
    headers = [f"{spec.label} {arrow[spec.direction]}" for spec in REGISTRY]
    lines = [f"# Dataset quality report: {report.dataset_name}", ""]
    lines.append("| Dataset | " + " | ".join(headers) + " |")
    lines.append("|" + " --- |" * (len(headers) + 1))
    row = [report.dataset_name]
    for spec in REGISTRY:
        value = report.aggregated.get(spec.name)
        row.append(ABSENT_MARK if value is None else _format2(value))
    lines.append("| " + " | ".join(row) + " |")

    splits = [s for s in SPLIT_KINDS if s in report.per_split]
    if splits:
        lines += ["", "## Per-split values", ""]
        lines.append("| Metric | " + " | ".join(splits) + " |")
        lines.append("|" + " --- |" * (len(splits) + 1))
        for spec in REGISTRY:
            if not any(spec.name in report.per_split[s] for s in splits):
                continue
            cells = [
                _format2(report.per_split[s][spec.name])
                if spec.name in report.per_split[s]
                else ABSENT_MARK
                for s in splits
            ]
            lines.append(f"| {spec.label} | " + " | ".join(cells) + " |")

    if report.absent:
        lines += ["", "## Not computed", ""]
        for spec in REGISTRY:
            if spec.name in report.absent:
                lines.append(f"- {spec.label}: {report.absent[spec.name]}")

    if report.warnings:
        lines += ["", "## Warnings", ""]
        lines += [f"- {w}" for w in report.warnings]

    return "\n".join(lines) + "\n"


def _quantize(value: float | None) -> float | None:
    return None if value is None else round(float(value), 6)


def render_json(report: MetricReport) -> str:
    """Canonical JSON: sorted keys, values quantized to 6 decimals, stable bytes."""
    payload = {
        "schema_version": SCHEMA_VERSION,
        "dataset": report.dataset_name,
        "aggregated": {k: _quantize(v) for k, v in report.aggregated.items()},
        "aggregation_rule": dict(report.aggregation_rule),
        "absent": dict(report.absent),
        "per_split": {
            split: {k: _quantize(v) for k, v in values.items()}
            for split, values in report.per_split.items()
        },
        "warnings": list(report.warnings),
    }
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def report_from_json(text: str) -> MetricReport:
    """Rebuild a report from its canonical JSON rendering."""
    data = json.loads(text)
    return MetricReport(
        data["dataset"],
        {split: dict(values) for split, values in data["per_split"].items()},
        dict(data["aggregated"]),
        dict(data["aggregation_rule"]),
        dict(data["absent"]),
        tuple(data["warnings"]),
    )
