from .holdout import (DEFAULT_SPLIT, EmptySplit, evaluate_holdout, prepare_holdout, score,
                      split_log, split_point)
from .metrics import (Metrics, binary_auc, classification_metrics, compute_metrics,
                      regression_metrics)
from .models import (LinearSpec, LogisticSpec, SchemaMismatch, TaskMismatch, TreeSpec,
                     VersionMismatch, ZeroRSpec, load_model, logistic_loss_grad, save_model,
                     spec_from_name, train)

__all__ = [
    "DEFAULT_SPLIT", "EmptySplit", "evaluate_holdout", "prepare_holdout", "score", "split_log",
    "split_point",
    "Metrics", "binary_auc", "classification_metrics", "compute_metrics", "regression_metrics",
    "LinearSpec", "LogisticSpec", "SchemaMismatch", "TaskMismatch", "TreeSpec",
    "VersionMismatch", "ZeroRSpec", "load_model", "logistic_loss_grad", "save_model",
    "spec_from_name", "train",
]
