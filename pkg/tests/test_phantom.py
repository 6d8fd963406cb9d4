import dataclasses
import math

import numpy as np
import pytest

from birex import ConfigurationError, InputError, PhantomSpec, generate, generate_4d, phase_label
from birex.phantom import CHEST_AMP_FRACTION, chest_expansion, displacement


@pytest.fixture(scope="module")
def spec():
    return PhantomSpec()


def pure_sin2_spec(**overrides):
    """Spec where every motion follows sin^2 with no lag."""
    return PhantomSpec(chest_lag=0.0, **overrides)


class TestSpec:
    def test_default_is_valid(self, spec):
        assert spec.grid_dims == (64, 64, 64)
        assert len(spec.phases) == 8

    def test_rejects_negative_amplitude(self):
        with pytest.raises(ConfigurationError):
            PhantomSpec(diaphragm_amp_mm=-1.0)

    def test_rejects_phase_out_of_range(self):
        with pytest.raises(ConfigurationError):
            PhantomSpec(phases=(0.0, 1.0))

    def test_rejects_hu_out_of_range(self):
        with pytest.raises(ConfigurationError):
            PhantomSpec(tumor_hu=5000.0)

    def test_rejects_structure_leaving_grid(self):
        with pytest.raises(ConfigurationError):
            PhantomSpec(diaphragm_amp_mm=60.0)
        with pytest.raises(ConfigurationError):
            PhantomSpec(body_semi_mm=(140.0, 85.0, 115.0))


class TestMotionLaws:
    def test_displacement_endpoints(self):
        assert displacement(20.0, 0.0) == 0.0
        assert math.isclose(displacement(20.0, 0.5), 20.0)
        assert math.isclose(displacement(20.0, 0.25), 10.0)

    def test_chest_zero_at_phase_zero(self, spec):
        assert chest_expansion(spec, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_chest_disabled(self):
        s = PhantomSpec(chest_enabled=False)
        assert chest_expansion(s, 0.3) == 0.0

    def test_labels(self):
        assert [phase_label(t) for t in PhantomSpec().phases] == [
            "0In", "15In", "50In", "85In", "100In", "85Ex", "50Ex", "15Ex",
        ]


class TestGenerate:
    def test_phase_zero_is_baseline(self, spec):
        frozen = dataclasses.replace(spec, diaphragm_amp_mm=0.0, tumor_amp_mm=0.0)
        moving = generate(spec, 0.0)
        baseline = generate(frozen, 0.37)
        assert np.array_equal(moving.data, baseline.data)

    def test_tumor_value_at_baseline_center(self, spec):
        vol = generate(spec, 0.0)
        idx = tuple(
            int(round(c / s + (n - 1) / 2))
            for c, s, n in zip(spec.tumor_center_mm, spec.spacing_mm, spec.grid_dims)
        )
        assert vol.data[idx] == spec.tumor_hu

    def test_peak_inhale_shifts_tumor_down(self, spec):
        base = generate(spec, 0.0)
        peak = generate(spec, 0.5)
        threshold = 0.5 * (spec.tumor_hu + spec.diaphragm_hu)
        nz, sz = spec.grid_dims[2], spec.spacing_mm[2]
        zc = (np.arange(nz) - (nz - 1) / 2) * sz

        def tumor_com_z(vol):
            mask = vol.data >= threshold
            return (mask * zc[None, None, :]).sum() / mask.sum()

        shift = tumor_com_z(peak) - tumor_com_z(base)
        assert shift == pytest.approx(-spec.tumor_amp_mm, abs=0.3 * sz)

    def test_rejects_phase_out_of_range(self, spec):
        with pytest.raises(InputError):
            generate(spec, 1.0)

    def test_deterministic(self, spec):
        a = generate(spec, 0.375)
        b = generate(spec, 0.375)
        assert np.array_equal(a.data, b.data)

    def test_sin2_symmetry_pairs(self):
        s = pure_sin2_spec()
        for t in (0.125, 0.25, 0.375):
            a = generate(s, t)
            b = generate(s, 1.0 - t)
            assert np.max(np.abs(a.data - b.data)) <= 1e-9

    def test_lag_breaks_symmetry(self, spec):
        a = generate(spec, 0.25)
        b = generate(spec, 0.75)
        assert np.max(np.abs(a.data - b.data)) > 1.0


class TestGenerate4d:
    def test_one_volume_per_phase(self, spec):
        out = generate_4d(spec)
        assert [t for t, _ in out] == list(spec.phases)
        dims = {v.dims for _, v in out}
        spacings = {v.spacing for _, v in out}
        assert dims == {spec.grid_dims}
        assert spacings == {spec.spacing_mm}

    def test_tumor_voxel_count_conserved(self, spec):
        # Voxels that are mostly tumor; rigid translation on a grid keeps
        # their number stable.
        threshold = 0.5 * (spec.tumor_hu + spec.diaphragm_hu)
        counts = np.array(
            [np.count_nonzero(v.data >= threshold) for _, v in generate_4d(spec)]
        )
        assert np.all(np.abs(counts - counts.mean()) <= 0.1 * counts.mean())

    def test_static_region_identical_across_phases(self):
        # Away from the diaphragm and tumour envelopes everything is frozen
        # (chest motion disabled so the body outline is static too).
        s = PhantomSpec(chest_enabled=False)
        vols = [v for _, v in generate_4d(s)]
        nx, ny, nz = s.grid_dims
        sx, sy, sz = s.spacing_mm
        ax = [(np.arange(n) - (n - 1) / 2) * sp for n, sp in zip(s.grid_dims, s.spacing_mm)]
        x = ax[0][:, None, None]
        y = ax[1][None, :, None]
        z = ax[2][None, None, :]

        def outside_envelope(center, semi, amp):
            pad = amp + 2.0 * max(s.spacing_mm)
            return (
                (np.abs(x - center[0]) > semi[0] + pad)
                | (np.abs(y - center[1]) > semi[1] + pad)
                | ((z - center[2] > semi[2] + pad) | (center[2] - z > semi[2] + amp + pad))
            )

        dome_center = (0.0, 0.0, s.diaphragm_apex_z_mm - s.diaphragm_semi_mm[2])
        r = s.tumor_radius_mm
        static = outside_envelope(dome_center, s.diaphragm_semi_mm, s.diaphragm_amp_mm)
        static &= outside_envelope(s.tumor_center_mm, (r, r, r), s.tumor_amp_mm)
        ref = vols[0].data
        for v in vols[1:]:
            assert np.array_equal(v.data[static], ref[static])
