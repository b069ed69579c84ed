"""Image degradation toolkit: graded corruption of test corpora, a seeded
training-time augmentation chain, and detection metrics (ACC / AUC / F1).

Images are numpy arrays of shape (height, width, 3), dtype uint8.
"""

from ._degrade import (
    ChainConfig,
    DegradeError,
    accuracy,
    apply_chain,
    auc,
    average_filter,
    awgn,
    contrast_about_mean,
    downscale,
    f1,
    gamma_correct,
    gaussian_blur,
    jpeg_transcode,
    linear_adjust,
    median_filter,
    mock_score,
    mse,
    poisson_gaussian_noise,
    sample_chain,
    __version__,
)

__all__ = [
    "ChainConfig",
    "DegradeError",
    "accuracy",
    "apply_chain",
    "auc",
    "average_filter",
    "awgn",
    "contrast_about_mean",
    "downscale",
    "f1",
    "gamma_correct",
    "gaussian_blur",
    "jpeg_transcode",
    "linear_adjust",
    "median_filter",
    "mock_score",
    "mse",
    "poisson_gaussian_noise",
    "sample_chain",
    "__version__",
]
