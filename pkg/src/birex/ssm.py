"""Linear PCA shape model over phase-binned volumes.

The model is ``v = mean + basis @ weights`` with an orthonormal voxel basis.
Training runs through the samples-by-samples Gram matrix, since the voxel
count dwarfs the sample count.  Basis columns are oriented so their
largest-magnitude entry is positive, which makes weights reproducible.
Variances use the unbiased 1/(F-1) convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import SINGULAR_VALUE_RTOL, complete_columns, sign_fix_columns
from .errors import DimensionError, InputError
from .projector import Volume


@dataclass(frozen=True)
class ShapeModel:
    mean: Volume
    basis: np.ndarray             # (voxels, e), orthonormal columns
    mode_variances: np.ndarray    # (e,), non-increasing
    training_weights: np.ndarray  # (samples, e), zero-mean columns
    total_variance: float         # over all sample-space directions

    @property
    def n_modes(self) -> int:
        return self.basis.shape[1]


def train_ssm(volumes, modes: int) -> ShapeModel:
    """PCA model with the leading ``modes`` principal directions."""
    volumes = list(volumes)
    if len(volumes) < 2:
        raise InputError(f"need at least 2 volumes, got {len(volumes)}")
    dims = volumes[0].dims
    spacing = volumes[0].spacing
    for v in volumes[1:]:
        if v.dims != dims or v.spacing != spacing:
            raise DimensionError(
                f"volume grids differ: {v.dims}@{v.spacing} vs {dims}@{spacing}"
            )
    n = len(volumes)
    modes = int(modes)
    if not 1 <= modes <= n - 1:
        raise DimensionError(f"modes must lie in [1, {n - 1}], got {modes}")

    data = np.stack([v.values for v in volumes])      # (n, voxels)
    mean = data.mean(axis=0)
    centered = data - mean

    gram = centered @ centered.T                      # (n, n)
    eigvals, eigvecs = np.linalg.eigh(gram)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = eigvecs[:, order]

    sv = np.sqrt(eigvals)
    rank = int(np.count_nonzero(sv >= SINGULAR_VALUE_RTOL * sv[0])) if sv[0] > 0 else 0
    keep = min(modes, rank)
    basis = centered.T @ (eigvecs[:, :keep] / sv[:keep])
    if keep < modes:
        basis = complete_columns(basis, modes)
    basis = sign_fix_columns(basis)
    weights = centered @ basis                         # (n, modes)

    variances = eigvals / (n - 1)
    return ShapeModel(
        mean=Volume.from_values(mean, dims, spacing),
        basis=basis,
        mode_variances=variances[:modes].copy(),
        training_weights=weights,
        total_variance=float(variances.sum()),
    )


def reconstruct(model: ShapeModel, weights) -> Volume:
    """``mean + basis @ weights`` as a volume on the training grid."""
    weights = np.asarray(weights, dtype=np.float64).ravel()
    if weights.size != model.n_modes:
        raise DimensionError(
            f"expected {model.n_modes} weights, got {weights.size}"
        )
    values = model.mean.values + model.basis @ weights
    return Volume.from_values(values, model.mean.dims, model.mean.spacing)


def explained_variance(model: ShapeModel) -> np.ndarray:
    """Cumulative fraction of the total variance captured per mode."""
    if model.total_variance <= 0.0:
        raise InputError("training data has no variance")
    return np.cumsum(model.mode_variances) / model.total_variance
