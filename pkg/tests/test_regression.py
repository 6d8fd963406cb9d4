import numpy as np
import pytest

from birex import DimensionError, InputError, RegressionMap, fit_regression, predict


class TestFit:
    def test_identity_when_targets_equal_inputs(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((8, 4))
        m = fit_regression(x, x, ridge=0.0)
        assert np.allclose(m.w, np.eye(4), atol=1e-8)

    def test_recovers_exact_linear_map(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((10, 6))
        c = rng.standard_normal((5, 6))
        m = fit_regression(x, x @ c.T, ridge=0.0)
        assert np.allclose(m.w, c, atol=1e-8)
        assert np.all(m.residual_norms <= 1e-8)

    def test_beats_mean_baseline_in_small_sample_regime(self):
        # Seven pairs, six inputs, five outputs: residuals must not exceed
        # those of always predicting the column mean.
        rng = np.random.default_rng(2)
        x = rng.standard_normal((7, 6))
        y = x @ rng.standard_normal((6, 5)) + 0.1 * rng.standard_normal((7, 5))
        m = fit_regression(x, y, ridge=0.0)
        baseline = np.linalg.norm(y - y.mean(axis=0), axis=0)
        assert np.all(m.residual_norms <= baseline + 1e-12)

    def test_ridge_monotone_on_training_residuals(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((7, 6))
        y = rng.standard_normal((7, 5))
        prev = None
        for lam in (1.0, 0.1, 0.01, 0.0):
            res = np.linalg.norm(fit_regression(x, y, ridge=lam).residual_norms)
            if prev is not None:
                assert res <= prev + 1e-12
            prev = res

    def test_validation(self):
        with pytest.raises(InputError):
            fit_regression(np.zeros((1, 3)), np.zeros((1, 2)))
        with pytest.raises(DimensionError):
            fit_regression(np.zeros((4, 3)), np.zeros((5, 2)))
        with pytest.raises(InputError):
            fit_regression(np.zeros((4, 3)), np.zeros((4, 2)), ridge=-1.0)


class TestPredict:
    def test_identity_map(self):
        m = RegressionMap(w=np.eye(3), ridge=0.0, residual_norms=np.zeros(3))
        v = np.array([1.0, -2.0, 0.5])
        assert np.array_equal(predict(m, v), v)

    def test_zero_weights(self):
        rng = np.random.default_rng(4)
        m = RegressionMap(w=rng.standard_normal((2, 5)), ridge=0.0, residual_norms=np.zeros(2))
        assert np.array_equal(predict(m, np.zeros(5)), np.zeros(2))

    def test_linearity(self):
        rng = np.random.default_rng(5)
        m = RegressionMap(w=rng.standard_normal((3, 4)), ridge=0.0, residual_norms=np.zeros(3))
        a, b = rng.standard_normal(4), rng.standard_normal(4)
        lhs = predict(m, 2.0 * a - 3.0 * b)
        rhs = 2.0 * predict(m, a) - 3.0 * predict(m, b)
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_training_rows_reproduced(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((9, 4))
        c = rng.standard_normal((3, 4))
        m = fit_regression(x, x @ c.T)
        for k in range(9):
            assert np.allclose(predict(m, x[k]), (x @ c.T)[k], atol=1e-8)

    def test_length_checked(self):
        m = RegressionMap(w=np.eye(3), ridge=0.0, residual_norms=np.zeros(3))
        with pytest.raises(DimensionError):
            predict(m, np.zeros(4))
