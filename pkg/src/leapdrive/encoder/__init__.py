from .config import EGO_DIM, HALF_DIM, TOKEN_DIM, EncoderConfig
from .dictionary import KeyDictionary, dict_push
from .features import (
    INTENTS, FeatureSource, FileFeatureSource, GridRasterizer, TrainingRecord, load_dataset, save_dataset,
    synthetic_dataset,
)
from .loss import contrastive_loss, partition_pairs, positive_mask, sample_loss, total_loss
from .metrics import precision_at_k
from .model import (
    EncoderParams, SceneToken, ShapeError, ego_state, encode, encode_batch, load_params, momentum_update, save_params,
)
from .train import TrainingReport, encode_records, loss_and_grads, train

__all__ = [
    "EGO_DIM", "HALF_DIM", "INTENTS", "TOKEN_DIM", "EncoderConfig", "EncoderParams", "FeatureSource",
    "FileFeatureSource", "GridRasterizer", "KeyDictionary", "SceneToken", "ShapeError", "TrainingRecord",
    "TrainingReport", "contrastive_loss", "dict_push", "ego_state", "encode", "encode_batch", "encode_records",
    "load_dataset", "load_params", "loss_and_grads", "momentum_update", "partition_pairs", "positive_mask", "precision_at_k",
    "sample_loss", "save_dataset", "save_params", "synthetic_dataset", "total_loss", "train",
]
