"""Bilinear projection model: decoupled respiratory and rotational weights.

The training projections (one image per phase and angle) form a data tensor
of dims (pixels, phases, angles).  Truncated per-mode SVDs give a phase
factor A (respiratory weights, one row per training phase) and an angle
factor B (rotational weights, one row per training angle); the core tensor
keeps the full pixel dimension, so the data factors as
``data = core x1 A x2 B``.  No mean is subtracted, which is why the first
column of each factor points at the data mean and genuine variation starts
at the second column.

A B-spline through the rows of B supplies rotational weights at any
trajectory angle.  Contracting the core with such a weight vector yields an
angle-conditioned model matrix; respiratory weights for an observed
projection are then the least-squares solution of that matrix against the
pixel values (SVD pseudo-inverse with relative cutoff 1e-12).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import SINGULAR_VALUE_RTOL, complete_columns, sign_fix_columns
from .bspline import SplineCurve, eval_spline, fit_spline
from .errors import DegenerateModelError, DimensionError, InputError
from .projector import DetectorGeometry, ProjectionImage
from .tensor3 import Tensor3, mode_product, mode_svd


@dataclass(frozen=True)
class BilinearModel:
    core: Tensor3                 # (pixels, f, g)
    resp_weights: np.ndarray      # A, (F, f)
    rot_weights: np.ndarray       # B, (G, g)
    angles: tuple[float, ...]     # training angles (radians)
    phases: tuple[float, ...]     # training cycle fractions
    rot_spline: SplineCurve
    detector: DetectorGeometry
    truncation_error: float       # relative Frobenius error of the training fit

    @property
    def n_resp(self) -> int:
        return self.resp_weights.shape[1]

    @property
    def n_rot(self) -> int:
        return self.rot_weights.shape[1]


@dataclass(frozen=True)
class AngleModelMatrix:
    """Angle-conditioned model matrix with its conditioning on record."""

    matrix: np.ndarray            # (pixels, f)
    angle: float
    condition: float


def build_data_tensor(stacks) -> Tensor3:
    """Stack per-phase projection lists into a (pixels, phases, angles) tensor.

    Entry (pix, j, i) is pixel ``pix`` of the phase-j image at angle index i,
    pixels flattened u-fastest.
    """
    stacks = [list(s) for s in stacks]
    if not stacks or not stacks[0]:
        raise InputError("need at least one projection")
    n_angles = len(stacks[0])
    first = stacks[0][0]
    dims, spacing = first.dims, first.spacing
    for j, stack in enumerate(stacks):
        if len(stack) != n_angles:
            raise InputError(
                f"stack {j} has {len(stack)} images, expected {n_angles}"
            )
        for img in stack:
            if img.dims != dims or img.spacing != spacing:
                raise InputError(
                    f"detector mismatch: {img.dims}@{img.spacing} vs {dims}@{spacing}"
                )
    n_pix = dims[0] * dims[1]
    data = np.empty((n_pix, len(stacks), n_angles), dtype=np.float64)
    for j, stack in enumerate(stacks):
        for i, img in enumerate(stack):
            data[:, j, i] = img.values
    return Tensor3(data)


def train_bilinear(
    data: Tensor3,
    f: int,
    g: int,
    angles,
    phases,
    detector: DetectorGeometry,
) -> BilinearModel:
    """Fit the bilinear model with respiratory rank f and rotational rank g."""
    n_pix, n_phase, n_angle = data.dims
    f, g = int(f), int(g)
    if not 1 <= f <= n_phase:
        raise DimensionError(f"f must lie in [1, {n_phase}], got {f}")
    if not 1 <= g <= n_angle:
        raise DimensionError(f"g must lie in [1, {n_angle}], got {g}")
    angles = tuple(float(a) for a in angles)
    phases = tuple(float(t) for t in phases)
    if len(angles) != n_angle:
        raise DimensionError(f"{len(angles)} angles for {n_angle} tensor slices")
    if len(phases) != n_phase:
        raise DimensionError(f"{len(phases)} phases for {n_phase} tensor slices")
    if detector.nu * detector.nv != n_pix:
        raise DimensionError(
            f"detector {detector.nu}x{detector.nv} does not match {n_pix} pixels"
        )
    norm = data.norm()
    if norm == 0.0:
        raise InputError("training tensor is identically zero")

    resp = mode_svd(data, 1).u
    if resp.shape[1] < f:
        resp = sign_fix_columns(complete_columns(resp, f))
    resp = np.ascontiguousarray(resp[:, :f])
    rot = mode_svd(data, 2).u
    if rot.shape[1] < g:
        rot = sign_fix_columns(complete_columns(rot, g))
    rot = np.ascontiguousarray(rot[:, :g])

    core = mode_product(mode_product(data, resp.T, 1), rot.T, 2)
    recon = mode_product(mode_product(core, resp, 1), rot, 2)
    truncation = float(np.linalg.norm(recon.data - data.data) / norm)

    spline = fit_spline(angles, rot, degree=min(3, n_angle - 1), periodic=None)
    return BilinearModel(
        core=core,
        resp_weights=resp,
        rot_weights=rot,
        angles=angles,
        phases=phases,
        rot_spline=spline,
        detector=detector,
        truncation_error=truncation,
    )


def angle_model(model: BilinearModel, angle: float) -> AngleModelMatrix:
    """Model matrix for one angle: core contracted with the spline weights."""
    rot = eval_spline(model.rot_spline, angle)
    matrix = np.tensordot(model.core.data, rot, axes=(2, 0))
    sv = np.linalg.svd(matrix, compute_uv=False)
    smax = float(sv[0]) if sv.size else 0.0
    smin = float(sv[-1]) if sv.size else 0.0
    condition = np.inf if smin == 0.0 else smax / smin
    return AngleModelMatrix(matrix=matrix, angle=float(angle), condition=condition)


def solve_respiratory(model_matrix: AngleModelMatrix, image: ProjectionImage | np.ndarray) -> np.ndarray:
    """Least-squares respiratory weights for one projection image."""
    values = image.values if isinstance(image, ProjectionImage) else np.asarray(image, dtype=np.float64).ravel()
    matrix = model_matrix.matrix
    if values.size != matrix.shape[0]:
        raise DimensionError(
            f"image has {values.size} pixels, model expects {matrix.shape[0]}"
        )
    if not np.any(matrix):
        raise DegenerateModelError("angle model matrix is identically zero")
    solution, *_ = np.linalg.lstsq(matrix, values, rcond=SINGULAR_VALUE_RTOL)
    return solution


def estimate_respiratory(model: BilinearModel, image: ProjectionImage, angle: float) -> np.ndarray:
    """Respiratory weights of ``image`` observed at a known trajectory angle."""
    if image.dims != (model.detector.nu, model.detector.nv):
        raise DimensionError(
            f"image dims {image.dims} do not match detector "
            f"({model.detector.nu}, {model.detector.nv})"
        )
    return solve_respiratory(angle_model(model, angle), image)


def synthesize(model: BilinearModel, resp, rot) -> ProjectionImage:
    """Projection image for given respiratory and rotational weights."""
    resp = np.asarray(resp, dtype=np.float64).ravel()
    rot = np.asarray(rot, dtype=np.float64).ravel()
    if resp.size != model.n_resp:
        raise DimensionError(f"expected {model.n_resp} respiratory weights, got {resp.size}")
    if rot.size != model.n_rot:
        raise DimensionError(f"expected {model.n_rot} rotational weights, got {rot.size}")
    values = np.tensordot(model.core.data, resp, axes=(1, 0)) @ rot
    det = model.detector
    return ProjectionImage.from_values(values, (det.nu, det.nv), (det.su, det.sv))
