"""Entropy, next-place prediction and accuracy-distribution modelling of mobility traces."""
from ._core import (
    DomainError,
    IoError,
    KsResult,
    Model,
    ParseError,
    PredictionResult,
    __version__,
    fit_gaussian_curve,
    fixture_points,
    generate,
    ks_test,
    make_model,
    ols_linear,
    predict_accuracy,
    random_entropy,
    real_entropy,
    uncorrelated_entropy,
)

__all__ = [
    "DomainError",
    "IoError",
    "KsResult",
    "Model",
    "ParseError",
    "PredictionResult",
    "__version__",
    "fit_gaussian_curve",
    "fixture_points",
    "generate",
    "ks_test",
    "make_model",
    "ols_linear",
    "predict_accuracy",
    "random_entropy",
    "real_entropy",
    "uncorrelated_entropy",
]
