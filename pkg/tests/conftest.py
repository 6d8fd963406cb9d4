import math
from types import SimpleNamespace

import numpy as np
import pytest

from birex import (
    PhantomSpec,
    Trajectory,
    build_data_tensor,
    detector_for_volume,
    generate_4d,
    project_stack,
)


def circle_angles(n):
    return tuple(i * 2.0 * math.pi / n for i in range(n))


def make_pipeline(spec, nu, nv, n_angles):
    volumes = generate_4d(spec)
    geometry = detector_for_volume(spec.grid_dims, spec.spacing_mm, nu, nv)
    angles = circle_angles(n_angles)
    trajectory = Trajectory(angles=angles, geometry=geometry)
    stacks = [project_stack(v, trajectory) for _, v in volumes]
    return SimpleNamespace(
        spec=spec,
        volumes=[v for _, v in volumes],
        phases=spec.phases,
        geometry=geometry,
        angles=angles,
        trajectory=trajectory,
        stacks=stacks,
        tensor=build_data_tensor(stacks),
    )


@pytest.fixture(scope="session")
def small_pipeline():
    """Same anatomy on a coarse grid: fast enough for module-level tests."""
    spec = PhantomSpec(grid_dims=(32, 32, 32), spacing_mm=(8.0, 8.0, 8.0))
    return make_pipeline(spec, nu=24, nv=24, n_angles=16)


@pytest.fixture(scope="session")
def full_pipeline():
    """Default full-scale pipeline: 64^3 phantom, 64x64 detector, 60 angles."""
    return make_pipeline(PhantomSpec(), nu=64, nv=64, n_angles=60)
