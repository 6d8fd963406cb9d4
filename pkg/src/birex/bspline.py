"""Vector-valued interpolating B-spline over trajectory angles.

Fits a degree-3 (by default) B-spline curve through one weight row per
training angle and evaluates it at arbitrary angles.  Parameters come from
the uniform angle mapping ``u = (phi - phi_min) / (phi_max - phi_min)``;
basis functions are evaluated with the Cox-de-Boor recurrence.

Two end conditions are supported.  The clamped form uses averaged (de Boor)
interior knots and solves the banded collocation system, one control point
per data point.  The periodic form wraps knots and control points around the
full circle so the curve closes smoothly; it is selected automatically when
the training angles span at least 354 degrees.  In the periodic form the
parameter is ``u = (phi - phi_min) / (2*pi)`` taken modulo 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError, DomainError, InputError

_TWO_PI = 2.0 * math.pi
_PERIODIC_SPAN = math.radians(354.0)
_DOMAIN_EPS = 1e-9


@dataclass(frozen=True)
class SplineCurve:
    degree: int
    knots: np.ndarray      # non-decreasing; clamped or periodically extended
    control: np.ndarray    # (n_ctrl, g)
    periodic: bool
    angle_min: float
    angle_max: float

    @property
    def n_control(self) -> int:
        return self.control.shape[0]

    @property
    def n_components(self) -> int:
        return self.control.shape[1]


def _cox_de_boor_row(knots: np.ndarray, degree: int, span: int, u: float) -> np.ndarray:
    """Values of the degree+1 basis functions that are non-zero on ``span``."""
    values = np.zeros(degree + 1)
    left = np.zeros(degree + 1)
    right = np.zeros(degree + 1)
    values[0] = 1.0
    for j in range(1, degree + 1):
        left[j] = u - knots[span + 1 - j]
        right[j] = knots[span + j] - u
        saved = 0.0
        for r in range(j):
            denom = right[r + 1] + left[j - r]
            temp = values[r] / denom
            values[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        values[j] = saved
    return values


def _find_span(knots: np.ndarray, degree: int, n_basis: int, u: float) -> int:
    span = int(np.searchsorted(knots, u, side="right")) - 1
    return min(max(span, degree), n_basis - 1)


def _clamped_knots(params: np.ndarray, degree: int) -> np.ndarray:
    n = params.size
    knots = np.empty(n + degree + 1)
    knots[: degree + 1] = params[0]
    knots[-(degree + 1):] = params[-1]
    for j in range(1, n - degree):
        knots[j + degree] = params[j : j + degree].mean()
    return knots


def _periodic_knots(params: np.ndarray, degree: int) -> np.ndarray:
    n = params.size
    idx = np.arange(-degree, n + degree + 1)
    return params[idx % n] + (idx // n).astype(np.float64)


def fit_spline(angles, weights, degree: int = 3, periodic: bool | None = None) -> SplineCurve:
    """Interpolating spline through one weight row per training angle.

    ``periodic=None`` selects the periodic form automatically when the
    angles span at least 354 degrees.
    """
    angles = np.asarray(angles, dtype=np.float64).ravel()
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim == 1:
        weights = weights[:, None]
    if weights.ndim != 2 or weights.shape[0] != angles.size:
        raise DimensionError(
            f"weights shape {weights.shape} does not match {angles.size} angles"
        )
    degree = int(degree)
    if degree < 1:
        raise ConfigurationError(f"degree must be at least 1, got {degree}")
    if angles.size < degree + 1:
        raise ConfigurationError(
            f"{angles.size} points cannot support degree {degree}"
        )
    diffs = np.diff(angles)
    if np.any(diffs == 0):
        raise InputError("duplicate angles")
    if np.any(diffs < 0):
        raise InputError("angles must be strictly increasing")

    span_total = float(angles[-1] - angles[0])
    if span_total <= 0:
        raise InputError("angle span must be positive")
    if periodic is None:
        periodic = span_total >= _PERIODIC_SPAN - 1e-12
    n = angles.size

    if periodic:
        params = (angles - angles[0]) / _TWO_PI
        knots = _periodic_knots(params, degree)
        system = np.zeros((n, n))
        for i, u in enumerate(params):
            sp = _find_span(knots, degree, n + degree, u)
            row = _cox_de_boor_row(knots, degree, sp, u)
            for k in range(degree + 1):
                system[i, (sp - degree + k) % n] += row[k]
    else:
        params = (angles - angles[0]) / span_total
        knots = _clamped_knots(params, degree)
        system = np.zeros((n, n))
        for i, u in enumerate(params):
            sp = _find_span(knots, degree, n, u)
            row = _cox_de_boor_row(knots, degree, sp, u)
            system[i, sp - degree : sp + 1] = row

    control = np.linalg.solve(system, weights)
    knots.flags.writeable = False
    control.flags.writeable = False
    return SplineCurve(
        degree=degree,
        knots=knots,
        control=control,
        periodic=bool(periodic),
        angle_min=float(angles[0]),
        angle_max=float(angles[-1]),
    )


def _parameter(curve: SplineCurve, angle: float) -> float:
    angle = float(angle)
    if not math.isfinite(angle):
        raise DomainError(f"angle must be finite, got {angle}")
    if curve.periodic:
        return ((angle - curve.angle_min) / _TWO_PI) % 1.0
    span = curve.angle_max - curve.angle_min
    tol = _DOMAIN_EPS * max(1.0, abs(span))
    if angle < curve.angle_min - tol or angle > curve.angle_max + tol:
        raise DomainError(
            f"angle {angle} outside [{curve.angle_min}, {curve.angle_max}]"
        )
    return min(max((angle - curve.angle_min) / span, 0.0), 1.0)


def eval_spline(curve: SplineCurve, angle: float) -> np.ndarray:
    """Curve value (one weight vector) at a trajectory angle."""
    u = _parameter(curve, angle)
    p, n = curve.degree, curve.n_control
    if curve.periodic:
        sp = _find_span(curve.knots, p, n + p, u)
        row = _cox_de_boor_row(curve.knots, p, sp, u)
        out = np.zeros(curve.n_components)
        for k in range(p + 1):
            out += row[k] * curve.control[(sp - p + k) % n]
        return out
    sp = _find_span(curve.knots, p, n, u)
    row = _cox_de_boor_row(curve.knots, p, sp, u)
    return row @ curve.control[sp - p : sp + 1]


def basis_functions(curve: SplineCurve, angle: float) -> np.ndarray:
    """All control-point basis weights at a trajectory angle (sums to 1)."""
    u = _parameter(curve, angle)
    p, n = curve.degree, curve.n_control
    out = np.zeros(n)
    if curve.periodic:
        sp = _find_span(curve.knots, p, n + p, u)
        row = _cox_de_boor_row(curve.knots, p, sp, u)
        for k in range(p + 1):
            out[(sp - p + k) % n] += row[k]
    else:
        sp = _find_span(curve.knots, p, n, u)
        out[sp - p : sp + 1] = _cox_de_boor_row(curve.knots, p, sp, u)
    return out
