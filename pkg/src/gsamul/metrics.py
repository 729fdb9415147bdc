"""Evaluation metrics.

Component estimates are identified only up to location, so the
component-wise error centers both series before differencing.  The
composite prediction (link applied to the additive score) is fully
identified and is compared raw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidInputError


@dataclass(eq=False)
class EvalReport:
    """Metric bundle for one fitted model on one evaluation set."""

    ase_components: np.ndarray
    ase_link: float
    rsse: float
    n_eval: int


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise InvalidInputError(
            f"series must be 1-d and of equal length, got {a.shape} vs {b.shape}"
        )
    if a.shape[0] < 1:
        raise InvalidInputError("series must be non-empty")
    return a, b


def ase_component(f_true: np.ndarray, f_est: np.ndarray) -> float:
    """Mean squared difference after centering each series on its mean."""
    f_true, f_est = _pair(f_true, f_est)
    diff = (f_true - f_true.mean()) - (f_est - f_est.mean())
    return float(np.mean(diff**2))


def ase_link(g_true: np.ndarray, g_est: np.ndarray) -> float:
    """Mean squared difference of composite predictions on shared inputs."""
    g_true, g_est = _pair(g_true, g_est)
    return float(np.mean((g_true - g_est) ** 2))


def rsse(y_test: np.ndarray, y_pred: np.ndarray) -> float:
    """Residual sum of squares over the centered total sum of squares."""
    y_test, y_pred = _pair(y_test, y_pred)
    if y_test.shape[0] < 2:
        raise InvalidInputError("rsse needs at least 2 test points")
    tss = float(np.sum((y_test - y_test.mean()) ** 2))
    if tss == 0.0:
        raise DegenerateInputError("constant test response: total sum of squares is 0")
    return float(np.sum((y_test - y_pred) ** 2)) / tss
