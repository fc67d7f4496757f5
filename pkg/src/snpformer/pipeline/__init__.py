from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .cv import Fold, FoldReport, cross_validate, five_fold_split
from .data import Dataset, load_dataset
from .metrics import accuracy, mean_std, pcc
from .ridge import RidgeModel, ridge_baseline
from .synth import SignalSpec, synth_generate
from .train import Metrics, TrainConfig, evaluate, model_config_for, train

__all__ = [
    "Checkpoint", "Dataset", "Fold", "FoldReport", "Metrics", "RidgeModel", "SignalSpec", "TrainConfig",
    "accuracy", "cross_validate", "evaluate", "five_fold_split", "load_checkpoint", "load_dataset",
    "mean_std", "model_config_for", "pcc", "ridge_baseline", "save_checkpoint", "synth_generate", "train",
]
