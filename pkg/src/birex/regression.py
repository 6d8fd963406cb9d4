"""Multi-linear regression from bilinear respiratory weights to volume model weights.

Fits W minimizing ``sum_k ||W x_k - y_k||^2 + ridge * ||W||_F^2``.  With
ridge 0 this is the plain least-squares solution through the pseudo-inverse.
There is no intercept: both weight sets come from models whose first
component already encodes the mean direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import SINGULAR_VALUE_RTOL
from .errors import DimensionError, InputError


@dataclass(frozen=True)
class RegressionMap:
    w: np.ndarray               # (e, f)
    ridge: float
    residual_norms: np.ndarray  # (e,) training residual per output mode

    @property
    def n_inputs(self) -> int:
        return self.w.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.w.shape[0]


def fit_regression(x, y, ridge: float = 0.0) -> RegressionMap:
    """Fit W from paired rows of inputs ``x`` (n, f) and targets ``y`` (n, e)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if x.shape[0] != y.shape[0]:
        raise DimensionError(f"{x.shape[0]} input rows vs {y.shape[0]} target rows")
    if x.shape[0] < 2:
        raise InputError(f"need at least 2 training pairs, got {x.shape[0]}")
    ridge = float(ridge)
    if ridge < 0:
        raise InputError(f"ridge must be non-negative, got {ridge}")

    if ridge > 0:
        n_in = x.shape[1]
        lhs = np.vstack([x, np.sqrt(ridge) * np.eye(n_in)])
        rhs = np.vstack([y, np.zeros((n_in, y.shape[1]))])
    else:
        lhs, rhs = x, y
    wt, *_ = np.linalg.lstsq(lhs, rhs, rcond=SINGULAR_VALUE_RTOL)
    residuals = np.linalg.norm(x @ wt - y, axis=0)
    return RegressionMap(w=wt.T.copy(), ridge=ridge, residual_norms=residuals)


def predict(mapping: RegressionMap, resp) -> np.ndarray:
    """Apply the fitted map to one respiratory weight vector."""
    resp = np.asarray(resp, dtype=np.float64).ravel()
    if resp.size != mapping.n_inputs:
        raise DimensionError(f"expected {mapping.n_inputs} weights, got {resp.size}")
    return mapping.w @ resp
