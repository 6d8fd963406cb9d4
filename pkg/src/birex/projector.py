"""Parallel-beam X-ray forward projection (DRR generation).

Geometry: the volume is centred on the world origin, voxel (i, j, k) has its
centre at ``(i - (n-1)/2) * spacing`` per axis.  The gantry rotates about the
volume z axis.  At angle phi the rays run along ``d = (cos phi, sin phi, 0)``;
the detector is perpendicular to the rays with pixel axis u along
``(-sin phi, cos phi, 0)`` and axis v along +z, both centred on the rotation
axis.  A pixel value is the line integral of the volume along its ray,
approximated by trilinear samples at a fixed step of half the smallest voxel
spacing, summed and scaled by the step length.  Values outside the grid
sample as zero.

The sample positions depend only on the geometry, never on the voxel values,
so projection is exactly linear in the volume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, DimensionError, InputError

_TWO_PI = 2.0 * math.pi


class Volume:
    """Immutable 3-D scalar grid with per-axis spacing in millimetres."""

    __slots__ = ("_data", "_spacing")

    def __init__(self, data, spacing):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim != 3:
            raise DimensionError(f"volume needs 3 axes, got {arr.ndim}")
        if not np.isfinite(arr).all():
            raise ValueError("volume values must all be finite")
        spacing = tuple(float(s) for s in spacing)
        if len(spacing) != 3 or any(s <= 0 for s in spacing):
            raise ConfigurationError(f"spacing must be 3 positive values, got {spacing}")
        arr.flags.writeable = False
        self._data = arr
        self._spacing = spacing

    @classmethod
    def from_values(cls, values, dims, spacing) -> "Volume":
        """Build from a flat value array with x varying fastest."""
        values = np.asarray(values, dtype=np.float64).ravel()
        nx, ny, nz = (int(d) for d in dims)
        if values.size != nx * ny * nz:
            raise DimensionError(f"{values.size} values cannot fill dims {dims}")
        return cls(values.reshape((nx, ny, nz), order="F"), spacing)

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def dims(self) -> tuple[int, int, int]:
        return self._data.shape

    @property
    def spacing(self) -> tuple[float, float, float]:
        return self._spacing

    @property
    def values(self) -> np.ndarray:
        """Flat value array, x fastest."""
        return self._data.ravel(order="F")

    def extent_mm(self) -> tuple[float, float, float]:
        """Edge-to-edge physical size per axis."""
        return tuple(n * s for n, s in zip(self._data.shape, self._spacing))


class ProjectionImage:
    """Immutable 2-D detector image (nu x nv pixels) with pixel spacing."""

    __slots__ = ("_data", "_spacing")

    def __init__(self, data, spacing):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionError(f"image needs 2 axes, got {arr.ndim}")
        if not np.isfinite(arr).all():
            raise ValueError("image values must all be finite")
        spacing = tuple(float(s) for s in spacing)
        if len(spacing) != 2 or any(s <= 0 for s in spacing):
            raise ConfigurationError(f"pixel spacing must be 2 positive values, got {spacing}")
        arr.flags.writeable = False
        self._data = arr
        self._spacing = spacing

    @classmethod
    def from_values(cls, values, dims, spacing) -> "ProjectionImage":
        """Build from a flat value array with u varying fastest."""
        values = np.asarray(values, dtype=np.float64).ravel()
        nu, nv = (int(d) for d in dims)
        if values.size != nu * nv:
            raise DimensionError(f"{values.size} values cannot fill dims {dims}")
        return cls(values.reshape((nv, nu)), spacing)

    @property
    def data(self) -> np.ndarray:
        """Read-only array of shape (nv, nu); row index is v, column index u."""
        return self._data

    @property
    def dims(self) -> tuple[int, int]:
        """(nu, nv)"""
        nv, nu = self._data.shape
        return (nu, nv)

    @property
    def spacing(self) -> tuple[float, float]:
        return self._spacing

    @property
    def values(self) -> np.ndarray:
        """Flat value array, u fastest."""
        return self._data.ravel()


@dataclass(frozen=True)
class DetectorGeometry:
    """Detector size (pixels) and pixel spacing (mm)."""

    nu: int
    nv: int
    su: float
    sv: float

    def __post_init__(self):
        if self.nu < 1 or self.nv < 1:
            raise ConfigurationError(f"detector must have pixels, got {self.nu}x{self.nv}")
        if self.su <= 0 or self.sv <= 0:
            raise ConfigurationError(
                f"pixel spacing must be positive, got ({self.su}, {self.sv})"
            )


@dataclass(frozen=True)
class Trajectory:
    """Strictly increasing rotation angles in [0, 2*pi) plus the detector."""

    angles: tuple[float, ...]
    geometry: DetectorGeometry

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        object.__setattr__(self, "angles", angles)
        if not angles:
            raise ConfigurationError("trajectory needs at least one angle")
        if any(not (0.0 <= a < _TWO_PI) for a in angles):
            raise ConfigurationError("trajectory angles must lie in [0, 2*pi)")
        if any(b <= a for a, b in zip(angles, angles[1:])):
            raise ConfigurationError("trajectory angles must be strictly increasing")


def detector_for_volume(dims, spacing, nu: int, nv: int) -> DetectorGeometry:
    """Detector whose field of view covers the whole volume from every angle."""
    nx, ny, nz = dims
    sx, sy, sz = spacing
    su = math.hypot(nx * sx, ny * sy) / nu
    sv = nz * sz / nv
    return DetectorGeometry(nu=nu, nv=nv, su=su, sv=sv)


def project(volume: Volume, angle: float, geometry: DetectorGeometry) -> ProjectionImage:
    """Forward projection of ``volume`` at one trajectory angle."""
    angle = float(angle)
    if not math.isfinite(angle):
        raise InputError(f"angle must be finite, got {angle}")
    nx, ny, nz = volume.dims
    sx, sy, sz = volume.spacing
    step = 0.5 * min(volume.spacing)

    cos_a, sin_a = math.cos(angle), math.sin(angle)
    # Sample positions are symmetric about the rotation axis, covering the
    # volume footprint along the ray direction with one step of margin.
    half = 0.5 * (nx * sx * abs(cos_a) + ny * sy * abs(sin_a)) + step
    n_half = int(math.ceil(half / step))
    t = np.arange(-n_half, n_half + 1, dtype=np.float64) * step

    u = (np.arange(geometry.nu, dtype=np.float64) - (geometry.nu - 1) / 2.0) * geometry.su
    v = (np.arange(geometry.nv, dtype=np.float64) - (geometry.nv - 1) / 2.0) * geometry.sv

    # World coordinates of every sample, then voxel index coordinates.
    px = u[:, None] * (-sin_a) + t[None, :] * cos_a
    py = u[:, None] * cos_a + t[None, :] * sin_a
    ix = px / sx + (nx - 1) / 2.0
    iy = py / sy + (ny - 1) / 2.0
    iz = v / sz + (nz - 1) / 2.0

    nv_, nu_, nt = geometry.nv, geometry.nu, t.size
    coords = np.empty((3, nv_, nu_, nt), dtype=np.float64)
    coords[0] = ix[None, :, :]
    coords[1] = iy[None, :, :]
    coords[2] = iz[:, None, None]
    samples = ndimage.map_coordinates(
        volume.data,
        coords.reshape(3, -1),
        order=1,
        mode="grid-constant",
        cval=0.0,
        prefilter=False,
    )
    image = samples.reshape(nv_, nu_, nt).sum(axis=2) * step
    return ProjectionImage(image, (geometry.su, geometry.sv))


def project_stack(volume: Volume, trajectory: Trajectory) -> list[ProjectionImage]:
    """One projection per trajectory angle, in trajectory order."""
    return [project(volume, a, trajectory.geometry) for a in trajectory.angles]
