"""Household-waste image classification: training, metrics, portable
inference, carbon/points accounting, and an HTTP service.

Import layering: labels/metrics/rewards/portable never import torch;
the training stack (backbones, classifier) defers framework imports so
that inference-only deployments stay light.
"""

from .labels import CLASS_LABELS, CLASS_NAMES, NUM_CLASSES, ClassLabel, UnknownLabel
from .backbones import (
    BENCHMARK_BACKBONES,
    BackboneEntry,
    UnknownBackbone,
    WeightsUnavailable,
    build_backbone,
    get_backbone_entry,
    register_backbone,
    registered_backbones,
)
from .dataset import (
    DatasetSplits,
    DecodeFailure,
    EmptyCorpus,
    ImageTensor,
    InvalidRatios,
    LabeledImage,
    MissingClassDirectory,
    UnknownDirectory,
    class_counts,
    load_corpus,
    load_split_manifest,
    preprocess,
    preprocess_bytes,
    preprocess_file,
    save_split_manifest,
    split_corpus,
)
from .metrics import (
    ClassMetrics,
    ClassReport,
    ConfusionMatrix,
    EmptyMatrix,
    LabelOutOfRange,
    LengthMismatch,
    accuracy,
    confusion,
    confusion_to_csv,
    format_report,
    precision_recall_f1,
    report,
    report_from_csv,
    report_to_csv,
)
from .rewards import (
    EVENT_TYPES,
    AppendResult,
    CarbonFactorTable,
    InvalidEvent,
    InvalidFactorTable,
    LedgerEvent,
    PointsLedger,
    StorageFailure,
    UserSummary,
    carbon_for,
)
from .classifier import (
    EmptyTrainSplit,
    HeadConfig,
    NonFiniteLoss,
    SerializationFailure,
    TrainConfig,
    TrainingHistory,
    WasteModel,
    build_classifier,
    classify,
    export_portable,
    load_checkpoint,
    load_history_csv,
    save_checkpoint,
    save_history_csv,
    train,
)
from .portable import (
    CorruptArtifact,
    MissingSidecar,
    PortableArtifact,
    PortableModel,
    ShapeMismatch,
    load_portable,
    predict_images,
)
from .fetch import (
    DEFAULT_DATASET_URL,
    ChecksumMismatch,
    ExtractFailure,
    NetworkFailure,
    fetch_corpus,
)
from .service import FeedbackStore, ServiceConfig, create_app, load_service_config

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
