"""CORnet-S circuits: configuration, construction, training, feature extraction."""
from .config import AreaSpec, CircuitConfig, DecoderHeadSpec, cornet_s, desk_cornet_s, load_config, plain_cnn
from .cornet import ActivationRecord, Model, build, compute_depth, count_conv_linear_weights
from .features import extract_features
from .train import TrainingDivergedError, calibrate_norm_stats, TrainRecipe, TrainResult, evaluate_accuracy, train

__all__ = [
    "AreaSpec", "CircuitConfig", "DecoderHeadSpec", "cornet_s", "desk_cornet_s", "plain_cnn", "load_config",
    "ActivationRecord", "Model", "build", "compute_depth", "count_conv_linear_weights",
    "extract_features", "TrainRecipe", "TrainResult", "TrainingDivergedError", "train", "evaluate_accuracy", "calibrate_norm_stats",
]
