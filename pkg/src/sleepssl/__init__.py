"""Self-supervised contrastive learning pipeline for EEG sleep staging."""

from .epochs import EPOCH_LEN, Epoch, EpochDataset, extract_epochs, normalize, resample
from .hypnogram import HypnogramEntry, StageLabel, map_stage, parse_hypnogram
from .edf import ChannelSpec, EdfHeader, parse_edf
from .transforms import RngStream, TransformSpec, apply_transform, make_view_pair
from .contrastive import batch_loss, cosine_sim, pair_loss, sim_matrix
from .model import Model, ModelConfig, preset_config, softmax_cross_entropy
from .optim import lr_schedule, sgd_momentum_step
from .metrics import MetricsReport, compute_metrics
from .training import (
    SplitSpec,
    TrainConfig,
    export_embeddings,
    finetune,
    limited_sample_experiment,
    linear_eval,
    pretrain,
)

__all__ = [
    "EPOCH_LEN",
    "Epoch",
    "EpochDataset",
    "extract_epochs",
    "normalize",
    "resample",
    "HypnogramEntry",
    "StageLabel",
    "map_stage",
    "parse_hypnogram",
    "ChannelSpec",
    "EdfHeader",
    "parse_edf",
    "RngStream",
    "TransformSpec",
    "apply_transform",
    "make_view_pair",
    "batch_loss",
    "cosine_sim",
    "pair_loss",
    "sim_matrix",
    "Model",
    "ModelConfig",
    "preset_config",
    "softmax_cross_entropy",
    "lr_schedule",
    "sgd_momentum_step",
    "MetricsReport",
    "compute_metrics",
    "SplitSpec",
    "TrainConfig",
    "export_embeddings",
    "finetune",
    "limited_sample_experiment",
    "linear_eval",
    "pretrain",
]
