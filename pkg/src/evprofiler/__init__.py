"""Profiling electric vehicles from the current/pilot time series of their
charging sessions: tail extraction, delta-series features, chi-squared
selection, per-EV binary classification, and the evaluation harness."""

__version__ = "0.1.0"

from .data_model import (
    ChargingSession,
    Fleet,
    IngestReport,
    RecordError,
    TimeSeries,
    adapt_acn_payload,
    filter_eligible,
)
from .extraction import (
    DeltaSeries,
    Tail,
    TailParams,
    TailRecord,
    compute_delta,
    extract_fleet,
    extract_record,
    extract_tail,
    find_t_start,
    moving_average,
    moving_median,
)
from .features import (
    CATALOG_NAMES,
    LEGACY_FEATURE_NAMES,
    MODERN_FEATURE_NAMES,
    FeatureTable,
    FeatureVector,
    LabeledDataset,
    SelectionModel,
    apply_selection,
    catalog_values,
    featurize,
    featurize_legacy,
    featurize_record,
    fit_selection,
)
from .classifiers import DEFAULT_GRIDS, MODEL_KINDS, TrainedModel, fit, predict
from .evaluation import (
    AssemblyError,
    ExperimentConfig,
    MetricsEntry,
    MetricsReport,
    SweepResult,
    assemble,
    compare_legacy,
    compute_metrics,
    run_profiling,
    sweep_degradation,
    sweep_nof,
    sweep_train_size,
)
from .synth import (
    EVSignature,
    FleetTruth,
    ScheduleSpec,
    SessionTruth,
    generate_fleet,
    generate_session,
)

__all__ = [
    "__version__",
    "ChargingSession",
    "Fleet",
    "IngestReport",
    "RecordError",
    "TimeSeries",
    "adapt_acn_payload",
    "filter_eligible",
    "DeltaSeries",
    "Tail",
    "TailParams",
    "TailRecord",
    "compute_delta",
    "extract_fleet",
    "extract_record",
    "extract_tail",
    "find_t_start",
    "moving_average",
    "moving_median",
    "CATALOG_NAMES",
    "LEGACY_FEATURE_NAMES",
    "MODERN_FEATURE_NAMES",
    "FeatureTable",
    "FeatureVector",
    "LabeledDataset",
    "SelectionModel",
    "apply_selection",
    "catalog_values",
    "featurize",
    "featurize_legacy",
    "featurize_record",
    "fit_selection",
    "DEFAULT_GRIDS",
    "MODEL_KINDS",
    "TrainedModel",
    "fit",
    "predict",
    "AssemblyError",
    "ExperimentConfig",
    "MetricsEntry",
    "MetricsReport",
    "SweepResult",
    "assemble",
    "compare_legacy",
    "compute_metrics",
    "run_profiling",
    "sweep_degradation",
    "sweep_nof",
    "sweep_train_size",
    "EVSignature",
    "FleetTruth",
    "ScheduleSpec",
    "SessionTruth",
    "generate_fleet",
    "generate_session",
]
