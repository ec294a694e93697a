"""Regression loss and metrics."""

import math

import numpy as np

from app.common.errors import ShapeError
from app.model.dtos import RegressionMetrics


def _residuals(predictions, targets) -> np.ndarray:
    predicted = np.asarray(predictions, dtype=np.float64).reshape(-1)
    expected = np.asarray(targets, dtype=np.float64).reshape(-1)
    if predicted.shape != expected.shape:
        raise ShapeError(
            "Predictions and targets differ in length",
            {"predictions": predicted.shape[0], "targets": expected.shape[0]},
        )
    if predicted.shape[0] == 0:
        raise ShapeError("Empty batch", {"size": 0})
    return predicted - expected


def mse_loss(predictions, targets) -> float:
    """(1/b) sum (pred - target)^2."""
    residuals = _residuals(predictions, targets)
    return float(np.mean(residuals * residuals))


def metrics(predictions, targets) -> RegressionMetrics:
    """RMSE and MAE of a batch."""
    residuals = _residuals(predictions, targets)
    return RegressionMetrics(
        rmse=math.sqrt(float(np.mean(residuals * residuals))),
        mae=float(np.mean(np.abs(residuals))),
    )
