"""Experiment configuration: flat key=value files with CLI overrides.

Every key in ``DEFAULTS`` may appear in the config file (``key=value``, one
per line, ``#`` comments) and be overridden from the command line.  Unknown
keys are rejected, which catches typos early.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigurationError
from .phantom import PhantomSpec
from .projector import DetectorGeometry, Trajectory, detector_for_volume


@dataclass(frozen=True)
class ExperimentConfig:
    grid_n: int = 64
    voxel_mm: float = 4.0
    num_phases: int = 8
    detector_nu: int = 64
    detector_nv: int = 64
    detector_su: float = 0.0      # 0 = derive from the volume footprint
    detector_sv: float = 0.0
    num_angles: int = 60
    rank_f: int = 6
    rank_g: int = 10
    modes_e: int = 5
    ridge: float = 0.0
    holdout_stride: int = 6
    holdout_offset: int = 3
    holdout_phase: str = "all"    # "all" or a phase index
    diaphragm_amp_mm: float = 12.0
    tumor_amp_mm: float = 9.0
    chest_lag: float = 0.1
    chest_enabled: bool = True
    seed: int = 42
    out_dir: str = "out"

    def __post_init__(self):
        if self.grid_n < 2 or self.num_phases < 2 or self.num_angles < 1:
            raise ConfigurationError("grid_n, num_phases and num_angles must be positive")
        if not 0 < self.holdout_stride:
            raise ConfigurationError(f"holdout_stride must be positive, got {self.holdout_stride}")
        if not 0 <= self.holdout_offset < self.holdout_stride:
            raise ConfigurationError(
                f"holdout_offset must lie in [0, {self.holdout_stride}), got {self.holdout_offset}"
            )
        if self.holdout_phase != "all":
            idx = _parse_int("holdout_phase", self.holdout_phase)
            if not 0 <= idx < self.num_phases:
                raise ConfigurationError(f"holdout_phase {idx} out of range")

    @property
    def holdout_phases(self) -> list[int]:
        if self.holdout_phase == "all":
            return list(range(self.num_phases))
        return [int(self.holdout_phase)]

    @property
    def test_angle_indices(self) -> list[int]:
        return [i for i in range(self.num_angles) if i % self.holdout_stride == self.holdout_offset]

    @property
    def retained_angle_indices(self) -> list[int]:
        return [i for i in range(self.num_angles) if i % self.holdout_stride != self.holdout_offset]

    def phantom_spec(self) -> PhantomSpec:
        n = self.grid_n
        return PhantomSpec(
            grid_dims=(n, n, n),
            spacing_mm=(self.voxel_mm,) * 3,
            diaphragm_amp_mm=self.diaphragm_amp_mm,
            tumor_amp_mm=self.tumor_amp_mm,
            chest_lag=self.chest_lag,
            chest_enabled=self.chest_enabled,
            phases=tuple(j / self.num_phases for j in range(self.num_phases)),
        )

    def geometry(self) -> DetectorGeometry:
        spec = self.phantom_spec()
        if self.detector_su > 0 and self.detector_sv > 0:
            return DetectorGeometry(
                nu=self.detector_nu, nv=self.detector_nv,
                su=self.detector_su, sv=self.detector_sv,
            )
        return detector_for_volume(
            spec.grid_dims, spec.spacing_mm, self.detector_nu, self.detector_nv
        )

    def angles(self) -> tuple[float, ...]:
        return tuple(i * 2.0 * math.pi / self.num_angles for i in range(self.num_angles))

    def trajectory(self) -> Trajectory:
        return Trajectory(angles=self.angles(), geometry=self.geometry())


DEFAULTS = ExperimentConfig()
_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _parse_int(key, value) -> int:
    try:
        return int(str(value))
    except ValueError as exc:
        raise ConfigurationError(f"{key} must be an integer, got {value!r}") from exc


def _parse_value(key: str, raw: str):
    kind = _FIELD_TYPES.get(key)
    if kind is None:
        raise ConfigurationError(f"unknown config key: {key}")
    raw = raw.strip()
    if key == "holdout_phase":
        if raw != "all":
            _parse_int(key, raw)
        return raw
    if kind == "bool":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"{key} must be a boolean, got {raw!r}")
    if kind == "int":
        return _parse_int(key, raw)
    if kind == "float":
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigurationError(f"{key} must be a number, got {raw!r}") from exc
    return raw


def read_config_file(path) -> dict:
    """Parse ``key=value`` lines; blank lines and ``#`` comments ignored."""
    values = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigurationError(f"{path}:{lineno}: expected key=value, got {stripped!r}")
        key, _, raw = stripped.partition("=")
        values[key.strip()] = _parse_value(key.strip(), raw)
    return values


def build_config(file_path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults, then config file values, then explicit overrides."""
    values = {}
    if file_path is not None:
        values.update(read_config_file(file_path))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigurationError(f"unknown config key: {key}")
        values[key] = _parse_value(key, str(value))
    return ExperimentConfig(**values)
