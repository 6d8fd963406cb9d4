"""File formats: volumes, projection stacks, model files, graymaps, CSV.

All binary payloads are little-endian 32-bit floats behind one-line ASCII
headers, so every format is parseable from any language and bit-exact to
test.  Floats in ASCII headers and CSV cells are written with ``repr``,
which round-trips exactly.

Formats:

* Volume: ``MVOL1 <nx> <ny> <nz> <sx> <sy> <sz>\\n`` then nx*ny*nz floats,
  x fastest.
* Projection stack: ``MPRJ1 <nu> <nv> <count>\\n``, a second ASCII line with
  the angles in radians, then count images of nu*nv floats each, u fastest.
* Model file: ``MBLM1`` header block (see ``write_model``) describing the
  bilinear model with its rotational spline, optionally a volume shape
  model and a regression map, then one binary blob.
* Graymap: binary PGM (P5, maxval 255) plus a ``<name>.window.txt`` sidecar
  recording the window used.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .bilinear import BilinearModel
from .bspline import SplineCurve
from .errors import InputError
from .projector import DetectorGeometry, Volume
from .regression import RegressionMap
from .ssm import ShapeModel

_F4 = "<f4"


def _fmt(x) -> str:
    return repr(float(x))


def _read_line(fh) -> str:
    raw = bytearray()
    while True:
        b = fh.read(1)
        if not b:
            raise InputError("unexpected end of file in header")
        if b == b"\n":
            break
        raw.extend(b)
    return raw.decode("ascii")


def _read_floats(fh, count: int) -> np.ndarray:
    data = fh.read(4 * count)
    if len(data) != 4 * count:
        raise InputError(f"expected {count} float32 values, file truncated")
    return np.frombuffer(data, dtype=_F4).astype(np.float64)


def write_volume(path, volume: Volume) -> None:
    nx, ny, nz = volume.dims
    sx, sy, sz = volume.spacing
    header = f"MVOL1 {nx} {ny} {nz} {_fmt(sx)} {_fmt(sy)} {_fmt(sz)}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(volume.values.astype(_F4).tobytes())


def read_volume(path) -> Volume:
    with open(path, "rb") as fh:
        parts = _read_line(fh).split()
        if len(parts) != 7 or parts[0] != "MVOL1":
            raise InputError(f"not a volume file: {path}")
        nx, ny, nz = (int(p) for p in parts[1:4])
        spacing = tuple(float(p) for p in parts[4:7])
        values = _read_floats(fh, nx * ny * nz)
    return Volume.from_values(values, (nx, ny, nz), spacing)


def write_projection_stack(path, angles, images) -> None:
    """``images``: iterable of (nv, nu) arrays or ProjectionImage objects."""
    arrays = [img.data if hasattr(img, "data") else np.asarray(img) for img in images]
    angles = [float(a) for a in angles]
    if len(arrays) != len(angles):
        raise InputError(f"{len(arrays)} images for {len(angles)} angles")
    nv, nu = arrays[0].shape
    with open(path, "wb") as fh:
        fh.write(f"MPRJ1 {nu} {nv} {len(arrays)}\n".encode("ascii"))
        fh.write((" ".join(_fmt(a) for a in angles) + "\n").encode("ascii"))
        for arr in arrays:
            if arr.shape != (nv, nu):
                raise InputError(f"image shape {arr.shape} differs from ({nv}, {nu})")
            fh.write(arr.astype(_F4).ravel().tobytes())


def read_projection_stack(path):
    """Returns (angles array, images array of shape (count, nv, nu))."""
    with open(path, "rb") as fh:
        parts = _read_line(fh).split()
        if len(parts) != 4 or parts[0] != "MPRJ1":
            raise InputError(f"not a projection stack file: {path}")
        nu, nv, count = (int(p) for p in parts[1:4])
        angles = np.array([float(p) for p in _read_line(fh).split()])
        if angles.size != count:
            raise InputError(f"{angles.size} angles for {count} images")
        images = _read_floats(fh, count * nu * nv).reshape(count, nv, nu)
    return angles, images


def write_model(
    path,
    model: BilinearModel,
    shape_model: ShapeModel | None = None,
    regression: RegressionMap | None = None,
) -> None:
    n_pix, f, g = model.core.dims
    det = model.detector
    spline = model.rot_spline
    lines = [
        "MBLM1",
        f"dims {n_pix} {f} {g} {len(model.phases)} {len(model.angles)}",
        f"detector {det.nu} {det.nv} {_fmt(det.su)} {_fmt(det.sv)}",
        f"truncation {_fmt(model.truncation_error)}",
        "angles " + " ".join(_fmt(a) for a in model.angles),
        "phases " + " ".join(_fmt(t) for t in model.phases),
        f"spline {spline.degree} {spline.knots.size} {spline.n_control} "
        f"{int(spline.periodic)} {_fmt(spline.angle_min)} {_fmt(spline.angle_max)}",
    ]
    if shape_model is not None:
        nx, ny, nz = shape_model.mean.dims
        sx, sy, sz = shape_model.mean.spacing
        lines.append(
            f"ssm {shape_model.n_modes} {nx} {ny} {nz} "
            f"{_fmt(sx)} {_fmt(sy)} {_fmt(sz)} {_fmt(shape_model.total_variance)}"
        )
    else:
        lines.append("ssm 0")
    if regression is not None:
        lines.append(
            f"regression {regression.n_outputs} {regression.n_inputs} {_fmt(regression.ridge)}"
        )
    else:
        lines.append("regression 0")
    lines.append("binary")

    blobs = [
        model.resp_weights.ravel(),
        model.rot_weights.ravel(),
        model.core.values,
        spline.knots,
        spline.control.ravel(),
    ]
    if shape_model is not None:
        blobs += [
            shape_model.mean.values,
            shape_model.basis.ravel(),
            shape_model.mode_variances,
            shape_model.training_weights.ravel(),
        ]
    if regression is not None:
        blobs += [regression.w.ravel(), regression.residual_norms]
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("ascii"))
        for blob in blobs:
            fh.write(np.asarray(blob, dtype=np.float64).astype(_F4).tobytes())


def read_model(path):
    """Returns (BilinearModel, ShapeModel | None, RegressionMap | None)."""
    with open(path, "rb") as fh:
        if _read_line(fh) != "MBLM1":
            raise InputError(f"not a model file: {path}")
        fields = {}
        while True:
            line = _read_line(fh)
            if line == "binary":
                break
            key, _, rest = line.partition(" ")
            fields[key] = rest.split()
        try:
            n_pix, f, g, n_phase, n_angle = (int(v) for v in fields["dims"])
            det_vals = fields["detector"]
            detector = DetectorGeometry(
                nu=int(det_vals[0]), nv=int(det_vals[1]),
                su=float(det_vals[2]), sv=float(det_vals[3]),
            )
            truncation = float(fields["truncation"][0])
            angles = tuple(float(v) for v in fields["angles"])
            phases = tuple(float(v) for v in fields["phases"])
            sp = fields["spline"]
            degree, n_knots, n_ctrl = int(sp[0]), int(sp[1]), int(sp[2])
            periodic = bool(int(sp[3]))
            angle_min, angle_max = float(sp[4]), float(sp[5])
            ssm_fields = fields["ssm"]
            reg_fields = fields["regression"]
        except (KeyError, IndexError, ValueError) as exc:
            raise InputError(f"malformed model header in {path}: {exc}") from exc
        if len(angles) != n_angle or len(phases) != n_phase:
            raise InputError(f"angle/phase counts disagree with dims in {path}")

        resp = _read_floats(fh, n_phase * f).reshape(n_phase, f)
        rot = _read_floats(fh, n_angle * g).reshape(n_angle, g)
        core_values = _read_floats(fh, n_pix * f * g)
        knots = _read_floats(fh, n_knots)
        control = _read_floats(fh, n_ctrl * g).reshape(n_ctrl, g)
        spline = SplineCurve(
            degree=degree, knots=knots, control=control,
            periodic=periodic, angle_min=angle_min, angle_max=angle_max,
        )
        from .tensor3 import Tensor3

        model = BilinearModel(
            core=Tensor3.from_values(core_values, (n_pix, f, g)),
            resp_weights=resp,
            rot_weights=rot,
            angles=angles,
            phases=phases,
            rot_spline=spline,
            detector=detector,
            truncation_error=truncation,
        )

        shape_model = None
        if int(ssm_fields[0]) > 0:
            e = int(ssm_fields[0])
            dims = tuple(int(v) for v in ssm_fields[1:4])
            spacing = tuple(float(v) for v in ssm_fields[4:7])
            total = float(ssm_fields[7])
            n_vox = dims[0] * dims[1] * dims[2]
            mean = _read_floats(fh, n_vox)
            basis = _read_floats(fh, n_vox * e).reshape(n_vox, e)
            variances = _read_floats(fh, e)
            train_w = _read_floats(fh, n_phase * e).reshape(n_phase, e)
            shape_model = ShapeModel(
                mean=Volume.from_values(mean, dims, spacing),
                basis=basis,
                mode_variances=variances,
                training_weights=train_w,
                total_variance=total,
            )

        regression = None
        if int(reg_fields[0]) > 0:
            e, n_in = int(reg_fields[0]), int(reg_fields[1])
            ridge = float(reg_fields[2])
            w = _read_floats(fh, e * n_in).reshape(e, n_in)
            residuals = _read_floats(fh, e)
            regression = RegressionMap(w=w, ridge=ridge, residual_norms=residuals)
    return model, shape_model, regression


def write_pgm(path, array, window: tuple[float, float] | None = None) -> None:
    """8-bit binary graymap with the display window noted in a sidecar."""
    arr = np.asarray(array, dtype=np.float64)
    if window is None:
        lo, hi = float(arr.min()), float(arr.max())
        if hi <= lo:
            hi = lo + 1.0
    else:
        lo, hi = (float(w) for w in window)
        if hi <= lo:
            raise InputError(f"empty display window ({lo}, {hi})")
    scaled = np.clip((arr - lo) / (hi - lo), 0.0, 1.0)
    pixels = np.round(scaled * 255.0).astype(np.uint8)
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
    Path(f"{path}.window.txt").write_text(f"min {_fmt(lo)}\nmax {_fmt(hi)}\n")


def write_csv(path, header, rows) -> None:
    """Comma-separated, '.' decimal; floats via repr so they round-trip."""

    def cell(value):
        if isinstance(value, (float, np.floating)):
            return _fmt(value)
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        return str(value)

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([cell(v) for v in row])


def read_csv(path):
    """Returns (header, rows of strings)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, list(reader)
