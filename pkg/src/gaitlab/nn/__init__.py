"""Small numpy neural-network engine for the stride-length CNN."""
from .model import Model, ModelSpec, build_model, feature_parameters
from .serialize import ModelFormatError, load_model, save_model
from .train import EpochRecord, TrainConfig, fine_tune, train, write_history_csv

__all__ = ["Model", "ModelSpec", "build_model", "feature_parameters", "ModelFormatError",
           "load_model", "save_model", "EpochRecord", "TrainConfig", "fine_tune", "train",
           "write_history_csv"]
