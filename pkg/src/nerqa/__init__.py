"""Statistical quality auditing for NER corpora.

Nine metrics over three quality dimensions (reliability, difficulty,
validity), agreement tooling for human accuracy judgments, and controlled
construction of equal-size dataset variants pinned to a target metric value.
"""

from .adjustment import (
    AdjustmentResult,
    AdjustmentSpec,
    InstanceClassification,
    adjust_test_sets,
    adjust_traindev_ennullr,
    classify_instances,
)
from .annotation import (
    AccuracyResult,
    AnnotationSample,
    JudgmentSet,
    accuracy_from_annotations,
    cohen_kappa,
    load_judgment_file,
    load_judgment_lines,
    sample_for_annotation,
)
from .corpus import (
    BIO2,
    BIOES,
    IOB1,
    Corpus,
    DatasetBundle,
    EntityMention,
    Instance,
    entity_set,
    extract_mentions,
    parse_conll,
    parse_conll_file,
    parse_jsonl_file,
    parse_jsonl_spans,
    to_conll,
)
from .errors import (
    EmptyCorpus,
    EmptyInstance,
    EmptyJudgments,
    InconsistentTag,
    InsufficientScores,
    JsonError,
    KeyMismatch,
    MalformedLine,
    MissingSplit,
    NerqaError,
    NoEntities,
    OverlappingSpans,
    ParseError,
    SpanOutOfRange,
    UnreachableTarget,
)
from .metrics import (
    REGISTRY,
    ConflictStats,
    MetricSpec,
    MetricValue,
    ModelScores,
    TypeDistribution,
    conflict_stats,
    entity_ambiguity,
    entity_density,
    entity_imbalance,
    entity_null_rate,
    leakage_ratio,
    metric_spec,
    model_differentiation,
    redundancy,
    split_metrics,
    unseen_entity_ratio,
)
from .report import (
    MetricReport,
    aggregate_report,
    evaluate_bundle,
    render_json,
    render_markdown,
    report_from_json,
)

__version__ = "0.1.0"
