"""Eye-tracking-free gaze forecasting: spherical angle math, saliency
features, sliding-window sampling, and LSTM/TSMixer sequence models."""

from ._core import (
    DataError,
    GazeOffset,
    HeadPose,
    Model,
    MotionFeatures,
    NumericFailure,
    angular_loss,
    center_bias,
    gaze_offset,
    init_model,
    load_checkpoint,
    motion_features,
    pool_flatten,
    preprocess,
    read_smap,
    save_checkpoint,
    spectral_residual,
    spherical_mse,
    spherical_rmse,
    valid_indices,
    wrap_angle,
    write_smap,
)

__all__ = [
    "DataError",
    "GazeOffset",
    "HeadPose",
    "Model",
    "MotionFeatures",
    "NumericFailure",
    "angular_loss",
    "center_bias",
    "gaze_offset",
    "init_model",
    "load_checkpoint",
    "motion_features",
    "pool_flatten",
    "preprocess",
    "read_smap",
    "save_checkpoint",
    "spectral_residual",
    "spherical_mse",
    "spherical_rmse",
    "valid_indices",
    "wrap_angle",
    "write_smap",
]
