"""Synthetic 4D breathing thorax phantom.

Generates phase-binned volumes of a simple thorax: a body ellipsoid, two
lung ellipsoids, a diaphragm dome and a tumour sphere.  The diaphragm and
the tumour translate in the superior-inferior direction by
``amp * sin(pi*t)**2`` over the breathing cycle ``t in [0, 1)``.  An optional
secondary mode expands the anterior-posterior body semi-axis with the same
law shifted by a configurable lag; the lag plays the role of hysteresis and
makes paired inhale/exhale phases distinct, which gives the phase dimension
full rank.  With ``chest_lag=0`` (or the chest mode disabled) phases t and
1-t produce the same anatomy, as the pure sin^2 law dictates.

Voxel values are set by the last listed structure containing the voxel;
edges are anti-aliased by 2x supersampling per axis.  Phases are plain
floats in [0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, InputError
from .projector import Volume

# Anterior-posterior chest expansion amplitude as a fraction of the
# diaphragm amplitude.
CHEST_AMP_FRACTION = 0.2

_SUPERSAMPLE = 2


@dataclass(frozen=True)
class PhantomSpec:
    """Geometry, intensity and motion parameters of the phantom."""

    grid_dims: tuple[int, int, int] = (64, 64, 64)
    spacing_mm: tuple[float, float, float] = (4.0, 4.0, 4.0)
    # Structures: centre (mm), semi-axes / radius (mm), value (HU-like).
    body_center_mm: tuple[float, float, float] = (0.0, 0.0, 0.0)
    body_semi_mm: tuple[float, float, float] = (110.0, 85.0, 115.0)
    body_hu: float = 400.0
    lung_center_mm: tuple[float, float, float] = (48.0, 0.0, 15.0)
    lung_semi_mm: tuple[float, float, float] = (36.0, 50.0, 62.0)
    lung_hu: float = 100.0
    diaphragm_apex_z_mm: float = -40.0
    diaphragm_semi_mm: tuple[float, float, float] = (85.0, 60.0, 30.0)
    diaphragm_hu: float = 700.0
    tumor_center_mm: tuple[float, float, float] = (48.0, 10.0, 55.0)
    tumor_radius_mm: float = 12.0
    tumor_hu: float = 1000.0
    # Motion.
    diaphragm_amp_mm: float = 12.0
    tumor_amp_mm: float = 9.0
    chest_enabled: bool = True
    chest_lag: float = 0.1
    phases: tuple[float, ...] = (0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875)

    def __post_init__(self):
        if any(n < 2 for n in self.grid_dims):
            raise ConfigurationError(f"grid dims too small: {self.grid_dims}")
        if any(s <= 0 for s in self.spacing_mm):
            raise ConfigurationError(f"voxel spacing must be positive: {self.spacing_mm}")
        if self.diaphragm_amp_mm < 0 or self.tumor_amp_mm < 0:
            raise ConfigurationError("motion amplitudes must be non-negative")
        for t in self.phases:
            if not 0.0 <= t < 1.0:
                raise ConfigurationError(f"phases must lie in [0, 1), got {t}")
        for hu in (self.body_hu, self.lung_hu, self.diaphragm_hu, self.tumor_hu):
            if not -1000.0 <= hu <= 3000.0:
                raise ConfigurationError(f"structure value {hu} outside [-1000, 3000]")
        self._check_inside_grid()

    def _check_inside_grid(self):
        half = [0.5 * n * s for n, s in zip(self.grid_dims, self.spacing_mm)]
        chest_max = CHEST_AMP_FRACTION * self.diaphragm_amp_mm if self.chest_enabled else 0.0

        def check(name, center, semi, extra_down=0.0, extra_y=0.0):
            lo = (center[0] - semi[0], center[1] - semi[1] - extra_y,
                  center[2] - semi[2] - extra_down)
            hi = (center[0] + semi[0], center[1] + semi[1] + extra_y, center[2] + semi[2])
            for ax in range(3):
                if lo[ax] < -half[ax] or hi[ax] > half[ax]:
                    raise ConfigurationError(
                        f"{name} leaves the grid on axis {ax} "
                        f"(reach {lo[ax]:.1f}..{hi[ax]:.1f}, grid +-{half[ax]:.1f})"
                    )

        check("body", self.body_center_mm, self.body_semi_mm, extra_y=chest_max)
        lx, ly, lz = self.lung_center_mm
        for cx in (lx, -lx):
            check("lung", (cx, ly, lz), self.lung_semi_mm)
        dome_center = self._dome_center()
        check("diaphragm", dome_center, self.diaphragm_semi_mm,
              extra_down=self.diaphragm_amp_mm)
        r = self.tumor_radius_mm
        check("tumor", self.tumor_center_mm, (r, r, r), extra_down=self.tumor_amp_mm)

    def _dome_center(self) -> tuple[float, float, float]:
        return (0.0, 0.0, self.diaphragm_apex_z_mm - self.diaphragm_semi_mm[2])


def _check_phase(t: float) -> float:
    t = float(t)
    if not 0.0 <= t < 1.0:
        raise InputError(f"phase must lie in [0, 1), got {t}")
    return t


def displacement(amp_mm: float, t: float) -> float:
    """Superior-inferior displacement at cycle fraction ``t``."""
    return amp_mm * math.sin(math.pi * t) ** 2


def chest_expansion(spec: PhantomSpec, t: float) -> float:
    """Anterior-posterior body semi-axis change at cycle fraction ``t``.

    Zero at t=0 by construction, so phase 0 is always the baseline anatomy.
    """
    if not spec.chest_enabled:
        return 0.0
    amp = CHEST_AMP_FRACTION * spec.diaphragm_amp_mm
    lag = spec.chest_lag
    return amp * (math.sin(math.pi * (t - lag)) ** 2 - math.sin(math.pi * lag) ** 2)


def phase_label(t: float) -> str:
    """Amplitude-percent label of a cycle fraction, e.g. 0.25 -> '50In'."""
    pct = round(100.0 * math.sin(math.pi * t) ** 2)
    return f"{pct}{'In' if t <= 0.5 else 'Ex'}"


def _fine_axis(n: int, spacing: float) -> np.ndarray:
    n_fine = _SUPERSAMPLE * n
    return (np.arange(n_fine) - (n_fine - 1) / 2.0) * (spacing / _SUPERSAMPLE)


def _ellipsoid_mask(x, y, z, center, semi):
    cx, cy, cz = center
    ax, ay, az = semi
    return (
        ((x - cx) / ax) ** 2 + ((y - cy) / ay) ** 2 + ((z - cz) / az) ** 2
    ) <= 1.0


def generate(spec: PhantomSpec, t: float) -> Volume:
    """Phantom volume at cycle fraction ``t``."""
    t = _check_phase(t)
    d_dia = displacement(spec.diaphragm_amp_mm, t)
    d_tum = displacement(spec.tumor_amp_mm, t)
    chest = chest_expansion(spec, t)

    nx, ny, nz = spec.grid_dims
    sx, sy, sz = spec.spacing_mm
    x = _fine_axis(nx, sx)[:, None, None]
    y = _fine_axis(ny, sy)[None, :, None]
    z = _fine_axis(nz, sz)[None, None, :]

    hu = np.zeros((x.size, y.size, z.size), dtype=np.float64)

    bs = spec.body_semi_mm
    hu[_ellipsoid_mask(x, y, z, spec.body_center_mm, (bs[0], bs[1] + chest, bs[2]))] = spec.body_hu

    lx, ly, lz = spec.lung_center_mm
    for cx in (-lx, lx):
        hu[_ellipsoid_mask(x, y, z, (cx, ly, lz), spec.lung_semi_mm)] = spec.lung_hu

    dc = spec._dome_center()
    hu[_ellipsoid_mask(x, y, z, (dc[0], dc[1], dc[2] - d_dia), spec.diaphragm_semi_mm)] = spec.diaphragm_hu

    tc = spec.tumor_center_mm
    r = spec.tumor_radius_mm
    hu[_ellipsoid_mask(x, y, z, (tc[0], tc[1], tc[2] - d_tum), (r, r, r))] = spec.tumor_hu

    k = _SUPERSAMPLE
    coarse = hu.reshape(nx, k, ny, k, nz, k).mean(axis=(1, 3, 5))
    return Volume(coarse, spec.spacing_mm)


def generate_4d(spec: PhantomSpec) -> list[tuple[float, Volume]]:
    """(phase, volume) pairs, one per entry of ``spec.phases``."""
    return [(t, generate(spec, t)) for t in spec.phases]
