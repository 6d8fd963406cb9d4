import math

import numpy as np
import pytest

from birex import InputError, ProjectionImage, Tensor3, Volume, train_bilinear, train_ssm
from birex import fit_regression
from birex import io
from birex.projector import DetectorGeometry

from conftest import circle_angles


def small_volume(rng):
    return Volume(rng.standard_normal((5, 4, 3)), (1.0, 2.0, 2.5))


class TestVolumeFormat:
    def test_round_trip(self, tmp_path, rng=np.random.default_rng(0)):
        vol = small_volume(rng)
        path = tmp_path / "v.mvol"
        io.write_volume(path, vol)
        back = io.read_volume(path)
        assert back.dims == vol.dims
        assert back.spacing == vol.spacing
        assert np.array_equal(back.values, vol.values.astype("<f4").astype(np.float64))

    def test_write_read_write_is_stable(self, tmp_path):
        rng = np.random.default_rng(1)
        vol = small_volume(rng)
        p1, p2 = tmp_path / "a.mvol", tmp_path / "b.mvol"
        io.write_volume(p1, vol)
        io.write_volume(p2, io.read_volume(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_header_is_ascii_line(self, tmp_path):
        vol = Volume(np.zeros((2, 3, 4)), (1.5, 1.0, 1.0))
        path = tmp_path / "v.mvol"
        io.write_volume(path, vol)
        header = path.read_bytes().split(b"\n", 1)[0].decode()
        assert header == "MVOL1 2 3 4 1.5 1.0 1.0"

    def test_rejects_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.mvol"
        path.write_bytes(b"NOPE 1 1 1 1 1 1\n" + b"\x00" * 4)
        with pytest.raises(InputError):
            io.read_volume(path)

    def test_rejects_truncated(self, tmp_path):
        path = tmp_path / "short.mvol"
        path.write_bytes(b"MVOL1 2 2 2 1.0 1.0 1.0\n" + b"\x00" * 8)
        with pytest.raises(InputError):
            io.read_volume(path)


class TestProjectionStackFormat:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        images = [ProjectionImage(rng.standard_normal((3, 4)), (1.0, 1.0)) for _ in range(5)]
        angles = circle_angles(5)
        path = tmp_path / "s.mprj"
        io.write_projection_stack(path, angles, images)
        back_angles, back = io.read_projection_stack(path)
        assert np.array_equal(back_angles, np.array(angles))
        assert back.shape == (5, 3, 4)
        for img, arr in zip(images, back):
            assert np.array_equal(arr, img.data.astype("<f4").astype(np.float64))

    def test_counts_must_match(self, tmp_path):
        with pytest.raises(InputError):
            io.write_projection_stack(tmp_path / "s.mprj", [0.0, 1.0], [np.zeros((2, 2))])


class TestModelFormat:
    def _model(self, rng, n_pix=24, n_phase=5, n_angle=12):
        data = Tensor3(rng.standard_normal((n_pix, n_phase, n_angle)))
        geom = DetectorGeometry(nu=6, nv=4, su=1.5, sv=2.0)
        return train_bilinear(
            data, 3, 4, circle_angles(n_angle),
            tuple(j / n_phase for j in range(n_phase)), geom,
        )

    def test_bilinear_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        model = self._model(rng)
        path = tmp_path / "m.blm"
        io.write_model(path, model)
        back, ssm, reg = io.read_model(path)
        assert ssm is None and reg is None
        assert back.detector == model.detector
        assert back.angles == model.angles
        assert back.phases == model.phases
        f4 = lambda a: np.asarray(a, dtype=np.float64).astype("<f4").astype(np.float64)
        assert np.array_equal(back.resp_weights, f4(model.resp_weights))
        assert np.array_equal(back.rot_weights, f4(model.rot_weights))
        assert np.array_equal(back.core.values, f4(model.core.values))
        assert back.rot_spline.degree == model.rot_spline.degree
        assert back.rot_spline.periodic == model.rot_spline.periodic
        assert np.array_equal(back.rot_spline.knots, f4(model.rot_spline.knots))

    def test_save_load_save_is_stable(self, tmp_path):
        rng = np.random.default_rng(4)
        model = self._model(rng)
        p1, p2 = tmp_path / "a.blm", tmp_path / "b.blm"
        io.write_model(p1, model)
        back, _, _ = io.read_model(p1)
        io.write_model(p2, back)
        assert p1.read_bytes() == p2.read_bytes()

    def test_with_ssm_and_regression(self, tmp_path):
        rng = np.random.default_rng(5)
        model = self._model(rng)
        vols = [Volume(rng.standard_normal((3, 3, 3)), (2, 2, 2)) for _ in range(5)]
        ssm = train_ssm(vols, 3)
        reg = fit_regression(model.resp_weights, ssm.training_weights, ridge=0.5)
        path = tmp_path / "full.blm"
        io.write_model(path, model, ssm, reg)
        _, back_ssm, back_reg = io.read_model(path)
        f4 = lambda a: np.asarray(a, dtype=np.float64).astype("<f4").astype(np.float64)
        assert back_ssm is not None and back_reg is not None
        assert back_ssm.mean.dims == (3, 3, 3)
        assert np.array_equal(back_ssm.basis, f4(ssm.basis))
        assert np.array_equal(back_ssm.training_weights, f4(ssm.training_weights))
        assert back_reg.ridge == 0.5
        assert np.array_equal(back_reg.w, f4(reg.w))

    def test_rejects_wrong_magic(self, tmp_path):
        path = tmp_path / "bad.blm"
        path.write_bytes(b"WRONG\n")
        with pytest.raises(InputError):
            io.read_model(path)


class TestPgm:
    def test_header_payload_and_sidecar(self, tmp_path):
        arr = np.array([[0.0, 5.0], [10.0, 2.5]])
        path = tmp_path / "img.pgm"
        io.write_pgm(path, arr)
        raw = path.read_bytes()
        assert raw.startswith(b"P5\n2 2\n255\n")
        pixels = np.frombuffer(raw.split(b"255\n", 1)[1], dtype=np.uint8).reshape(2, 2)
        assert pixels[0, 0] == 0 and pixels[1, 0] == 255
        assert pixels[0, 1] == 128
        sidecar = (tmp_path / "img.pgm.window.txt").read_text()
        assert sidecar == "min 0.0\nmax 10.0\n"

    def test_explicit_window_clips(self, tmp_path):
        arr = np.array([[-5.0, 0.0, 5.0, 20.0]])
        path = tmp_path / "w.pgm"
        io.write_pgm(path, arr, window=(0.0, 10.0))
        pixels = np.frombuffer(path.read_bytes().split(b"255\n", 1)[1], dtype=np.uint8)
        assert list(pixels) == [0, 0, 128, 255]

    def test_flat_image_gets_nonempty_window(self, tmp_path):
        io.write_pgm(tmp_path / "flat.pgm", np.full((2, 2), 3.0))
        sidecar = (tmp_path / "flat.pgm.window.txt").read_text()
        assert sidecar == "min 3.0\nmax 4.0\n"


class TestCsv:
    def test_values_round_trip_exactly(self, tmp_path):
        path = tmp_path / "t.csv"
        values = [1.0 / 3.0, math.pi, 44.14, 1e-17]
        io.write_csv(path, ["name", "value"], [["row", v] for v in values])
        header, rows = io.read_csv(path)
        assert header == ["name", "value"]
        for (name, text), v in zip(rows, values):
            assert float(text) == v

    def test_deterministic_bytes(self, tmp_path):
        rows = [[1, "x", 0.1], [2, "y", 0.25]]
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        io.write_csv(p1, ["i", "s", "v"], rows)
        io.write_csv(p2, ["i", "s", "v"], rows)
        assert p1.read_bytes() == p2.read_bytes()
