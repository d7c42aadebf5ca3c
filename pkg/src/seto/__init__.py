"""Temporary sequence augmentation (Swap / Removal) for sequential recommendation."""
from .augment import (PAD, ApplyTo, AugmentConfig, Op, TrainingPair, build_training_pair,
                      causal_partition, offset_weights, removal, swap)
from .data import Dataset, Splits, ingest_events, leave_one_out_split, read_tsv
from .evaluation import EvalReport, evaluate
from .model import DecayModel, ModelParams, init_params, load_checkpoint, save_checkpoint
from .train import TrainConfig, TrainHistory, train

__version__ = "0.1.0"

__all__ = [
    "PAD", "ApplyTo", "AugmentConfig", "Op", "TrainingPair", "build_training_pair",
    "causal_partition", "offset_weights", "removal", "swap",
    "Dataset", "Splits", "ingest_events", "leave_one_out_split", "read_tsv",
    "EvalReport", "evaluate",
    "DecayModel", "ModelParams", "init_params", "load_checkpoint", "save_checkpoint",
    "TrainConfig", "TrainHistory", "train",
]
