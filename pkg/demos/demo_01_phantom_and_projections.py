"""Breathing phantom and its rotational projections.

Generates the phase-binned thorax phantom, reports how the moving
structures behave over the cycle, and forward-projects every phase along a
circular trajectory.  Writes a few graymaps so the geometry can be eyeballed.

Run:  python3 demos/demo_01_phantom_and_projections.py
Outputs land in demos/output/01_phantom/.
"""

import math
from pathlib import Path

import numpy as np

from birex import (
    PhantomSpec,
    Trajectory,
    detector_for_volume,
    generate_4d,
    phase_label,
    project_stack,
)
from birex.io import write_pgm, write_volume

OUT = Path(__file__).parent / "output" / "01_phantom"
OUT.mkdir(parents=True, exist_ok=True)

spec = PhantomSpec()
print(f"grid {spec.grid_dims} at {spec.spacing_mm} mm")
print(f"diaphragm amplitude {spec.diaphragm_amp_mm} mm, "
      f"tumour amplitude {spec.tumor_amp_mm} mm, chest lag {spec.chest_lag}")

print("\ngenerating", len(spec.phases), "phases:")
volumes = generate_4d(spec)
for t, vol in volumes:
    label = phase_label(t)
    # crude tumour locator: everything denser than the diaphragm dome
    mask = vol.data >= 0.5 * (spec.tumor_hu + spec.diaphragm_hu)
    nz = spec.grid_dims[2]
    zc = (np.arange(nz) - (nz - 1) / 2) * spec.spacing_mm[2]
    com = (mask * zc[None, None, :]).sum() / mask.sum()
    print(f"  t={t:5.3f} ({label:>5}): tumour centre z = {com:6.1f} mm")

# a coronal slice through the tumour for the two extreme phases
ix = int(round(spec.tumor_center_mm[0] / spec.spacing_mm[0] + (spec.grid_dims[0] - 1) / 2))
for idx in (0, 4):
    t, vol = volumes[idx]
    write_pgm(OUT / f"slice_{phase_label(t)}.pgm", vol.data[ix].T)
write_volume(OUT / "phase_0.mvol", volumes[0][1])

geometry = detector_for_volume(spec.grid_dims, spec.spacing_mm, 64, 64)
angles = tuple(i * 2 * math.pi / 24 for i in range(24))
trajectory = Trajectory(angles=angles, geometry=geometry)
print(f"\nprojecting at {len(angles)} angles, detector {geometry.nu}x{geometry.nv} "
      f"at ({geometry.su:.2f}, {geometry.sv:.2f}) mm")

stack = project_stack(volumes[0][1], trajectory)
for i in (0, 6, 12):
    write_pgm(OUT / f"projection_{round(math.degrees(angles[i])):03d}deg.pgm", stack[i].data)
    print(f"  angle {math.degrees(angles[i]):5.1f} deg: "
          f"mean gray {stack[i].data.mean():8.1f}, max {stack[i].data.max():8.1f}")

print(f"\nwrote graymaps and one volume to {OUT}")
