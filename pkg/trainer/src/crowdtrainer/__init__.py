"""Fine-tuning toolkit: crowd-labeled corpora in, scoreable run files out."""
from .data import (
    TASK1_LABELS,
    TASK2_LABELS,
    TARGET_MODES,
    Example,
    intent_targets,
    labels_for_task,
    read_corpus,
    relevance_targets,
)
from .errors import ConfigError, DataError, TrainerError
from .export import predict, predict_and_export
from .modeling import build_tiny_checkpoint, load_checkpoint
from .training import (
    GRID_COLUMNS,
    EarlyStopper,
    EpochLog,
    GridRow,
    TrainConfig,
    TrainResult,
    classification_metrics,
    grid_search,
    load_train_config,
    render_grid,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "TASK1_LABELS",
    "TASK2_LABELS",
    "TARGET_MODES",
    "GRID_COLUMNS",
    "Example",
    "ConfigError",
    "DataError",
    "TrainerError",
    "EarlyStopper",
    "EpochLog",
    "GridRow",
    "TrainConfig",
    "TrainResult",
    "build_tiny_checkpoint",
    "classification_metrics",
    "grid_search",
    "intent_targets",
    "labels_for_task",
    "load_checkpoint",
    "load_train_config",
    "predict",
    "predict_and_export",
    "read_corpus",
    "relevance_targets",
    "render_grid",
    "train",
]
