import math

import numpy as np
import pytest

from birex import (
    DimensionError,
    InputError,
    PhantomSpec,
    Volume,
    explained_variance,
    generate_4d,
    reconstruct,
    train_ssm,
)


def small_volumes(rng, n_samples=6, n=5):
    return [Volume(rng.standard_normal((n, n, n)), (2, 2, 2)) for _ in range(n_samples)]


def smooth_two_mode_volumes():
    """Smooth phantom with a translating blob and a lagged dilating shell.

    Sub-voxel-scale smooth motion keeps the manifold nearly linear, so two
    principal components carry almost all the variance.
    """
    n, s = 32, 4.0
    ax = (np.arange(n) - (n - 1) / 2) * s
    x = ax[:, None, None]
    y = ax[None, :, None]
    z = ax[None, None, :]
    vols = []
    for t in np.arange(8) / 8.0:
        d = 6.0 * math.sin(math.pi * t) ** 2
        e = 1.0 + 0.08 * math.sin(math.pi * (t - 0.12)) ** 2
        blob = 1000 * np.exp(-(x**2 + y**2 + (z - 10 + d) ** 2) / (2 * 20.0**2))
        shell = 400 * np.exp(-((x / (40 * e)) ** 2 + (y / (30 * e)) ** 2 + (z / 45) ** 2))
        vols.append(Volume(blob + shell, (s, s, s)))
    return vols


class TestTrainSsm:
    def test_two_volume_model(self):
        rng = np.random.default_rng(0)
        v1, v2 = small_volumes(rng, 2)
        model = train_ssm([v1, v2], 1)
        assert np.allclose(model.mean.values, 0.5 * (v1.values + v2.values))
        w = model.training_weights[:, 0]
        half_dist = np.linalg.norm(v1.values - model.mean.values)
        assert np.allclose(np.abs(w), half_dist)
        assert np.allclose(w.sum(), 0.0, atol=1e-9 * half_dist)

    def test_full_rank_reconstructs_training_set(self):
        rng = np.random.default_rng(1)
        vols = small_volumes(rng)
        model = train_ssm(vols, len(vols) - 1)
        for j, v in enumerate(vols):
            rebuilt = reconstruct(model, model.training_weights[j])
            err = np.linalg.norm(rebuilt.values - v.values)
            assert err <= 1e-6 * np.linalg.norm(v.values)

    def test_matches_direct_svd_oracle(self):
        rng = np.random.default_rng(2)
        vols = small_volumes(rng)
        model = train_ssm(vols, 4)
        data = np.stack([v.values for v in vols])
        centered = data - data.mean(axis=0)
        _, s_ref, vt_ref = np.linalg.svd(centered, full_matrices=False)
        assert np.allclose(model.mode_variances, s_ref[:4] ** 2 / (len(vols) - 1), rtol=1e-8)
        overlap = np.abs(np.sum(model.basis * vt_ref[:4].T, axis=0))
        assert np.allclose(overlap, 1.0, atol=1e-8)

    def test_basis_orthonormal_weights_centered(self):
        rng = np.random.default_rng(3)
        model = train_ssm(small_volumes(rng), 3)
        assert np.allclose(model.basis.T @ model.basis, np.eye(3), atol=1e-10)
        col_norms = np.linalg.norm(model.training_weights, axis=0)
        assert np.all(np.abs(model.training_weights.mean(axis=0)) <= 1e-9 * col_norms)
        assert np.all(np.diff(model.mode_variances) <= 0)

    def test_phantom_first_mode_dominates(self):
        vols = [v for _, v in generate_4d(PhantomSpec())]
        model = train_ssm(vols, 7)
        ratios = np.diff(np.concatenate([[0.0], explained_variance(model)]))
        assert ratios[0] > 0.6

    def test_validation(self):
        rng = np.random.default_rng(4)
        vols = small_volumes(rng, 3)
        with pytest.raises(InputError):
            train_ssm(vols[:1], 1)
        with pytest.raises(DimensionError):
            train_ssm(vols, 3)
        with pytest.raises(DimensionError):
            train_ssm(vols, 0)
        other = Volume(np.zeros((4, 4, 4)), (2, 2, 2))
        with pytest.raises(DimensionError):
            train_ssm(vols + [other], 1)


class TestReconstruct:
    def test_zero_weights_give_mean(self):
        rng = np.random.default_rng(5)
        model = train_ssm(small_volumes(rng), 2)
        out = reconstruct(model, np.zeros(2))
        assert np.array_equal(out.values, model.mean.values)

    def test_affine_identity(self):
        rng = np.random.default_rng(6)
        model = train_ssm(small_volumes(rng), 3)
        w1, w2 = rng.standard_normal(3), rng.standard_normal(3)
        lhs = reconstruct(model, w1).values + reconstruct(model, w2).values - model.mean.values
        rhs = reconstruct(model, w1 + w2).values
        assert np.allclose(lhs, rhs, atol=1e-10 * np.linalg.norm(rhs))

    def test_weight_length_checked(self):
        rng = np.random.default_rng(7)
        model = train_ssm(small_volumes(rng), 2)
        with pytest.raises(DimensionError):
            reconstruct(model, np.zeros(3))


class TestExplainedVariance:
    def test_rank_one_data(self):
        rng = np.random.default_rng(8)
        base = rng.standard_normal(27)
        direction = rng.standard_normal(27)
        vols = [
            Volume((base + c * direction).reshape(3, 3, 3), (1, 1, 1))
            for c in (-1.0, 0.0, 0.5, 2.0)
        ]
        model = train_ssm(vols, 1)
        assert explained_variance(model)[0] == pytest.approx(1.0, abs=1e-9)

    def test_monotone_and_complete(self):
        rng = np.random.default_rng(9)
        model = train_ssm(small_volumes(rng), 5)
        ev = explained_variance(model)
        assert np.all(np.diff(ev) >= 0)
        assert ev[-1] == pytest.approx(1.0, abs=1e-9)
        assert np.all(ev > 0)

    def test_two_motion_modes_capture_nearly_all(self):
        model = train_ssm(smooth_two_mode_volumes(), 7)
        ev = explained_variance(model)
        assert ev[1] > 0.95
