import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlct.model import (GridGeometry, MeasurementSet, NoiseSpec, Signal,
                        beer_lambert, beer_lambert_subgrad, grad_loss, loss,
                        measure)
from nlct.operators import MatrixOperator

mpmath.mp.dps = 50


def mp_response(t):
    """High-precision reference for the absorbed fraction."""
    t = mpmath.mpf(t)
    return float(1 - mpmath.e ** (-max(t, 0)))


class TestBeerLambert:
    def test_zero(self):
        assert beer_lambert(0.0) == 0.0

    def test_negative_clipped(self):
        assert beer_lambert(-3.0) == 0.0

    def test_log_two(self):
        assert beer_lambert(math.log(2.0)) == pytest.approx(0.5, abs=1e-15)

    def test_matches_high_precision_reference(self):
        for t in [1e-8, 0.1, 1.0, 2.5, 10.0, 50.0]:
            assert beer_lambert(t) == pytest.approx(mp_response(t), rel=1e-14)

    def test_nonfinite_rejected(self):
        for bad in (np.nan, np.inf, -np.inf):
            with pytest.raises(ValueError):
                beer_lambert(bad)
        with pytest.raises(ValueError):
            beer_lambert(np.array([0.0, np.nan]))

    @given(st.floats(-50, 50), st.floats(-50, 50))
    @settings(max_examples=200, deadline=None)
    def test_monotone_and_lipschitz(self, a, b):
        fa, fb = beer_lambert(a), beer_lambert(b)
        if a <= b:
            assert fa <= fb
        assert abs(fa - fb) <= abs(a - b) + 1e-15

    @given(st.floats(-1e6, 1e6))
    @settings(max_examples=200, deadline=None)
    def test_range(self, t):
        v = beer_lambert(t)
        assert 0.0 <= v < 1.0


class TestSubgradient:
    def test_negative(self):
        assert beer_lambert_subgrad(-1.0) == 0.0

    def test_tie_value(self):
        assert beer_lambert_subgrad(0.0) == 0.5

    def test_log_two(self):
        assert beer_lambert_subgrad(math.log(2.0)) == pytest.approx(0.5, abs=1e-15)

    def test_range(self):
        ts = np.linspace(-5, 20, 101)
        vals = beer_lambert_subgrad(ts)
        assert np.all((vals >= 0) & (vals <= 1))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            beer_lambert_subgrad(np.inf)


class TestSignalTypes:
    def test_geometry_size_mismatch(self):
        with pytest.raises(ValueError):
            Signal(values=np.zeros(5), geometry=GridGeometry((2, 3)))

    def test_nonneg_flag_enforced(self):
        with pytest.raises(ValueError):
            Signal(values=np.array([1.0, -0.1]), nonneg=True)

    def test_measurement_vector_only(self):
        with pytest.raises(ValueError):
            MeasurementSet(y=np.zeros((2, 2)))

    def test_noise_spec_validation(self):
        with pytest.raises(ValueError):
            NoiseSpec(sigma=-1.0)
        with pytest.raises(ValueError):
            NoiseSpec(quant_bits=0)


class TestMeasure:
    def test_zero_signal(self):
        op = MatrixOperator(np.random.default_rng(0).standard_normal((7, 4)))
        mset = measure(op, np.zeros(4))
        assert np.array_equal(mset.y, np.zeros(7))

    def test_single_row_log_two(self):
        op = MatrixOperator(np.array([[1.0]]))
        mset = measure(op, np.array([math.log(2.0)]))
        assert mset.y[0] == pytest.approx(0.5, abs=1e-15)

    def test_two_row_example(self):
        # rows [[1,0],[0,-5]] on x=[1,1]: expectations from the mpmath reference
        op = MatrixOperator(np.array([[1.0, 0.0], [0.0, -5.0]]))
        mset = measure(op, np.array([1.0, 1.0]))
        assert mset.y[0] == pytest.approx(mp_response(1.0), rel=1e-14)
        assert mset.y[1] == 0.0

    def test_shape_error(self):
        op = MatrixOperator(np.eye(3))
        with pytest.raises(ValueError):
            measure(op, np.zeros(4))

    def test_deterministic_given_seed(self):
        op = MatrixOperator(np.random.default_rng(1).standard_normal((20, 6)))
        x = np.abs(np.random.default_rng(2).standard_normal(6))
        a = measure(op, x, noise_spec=NoiseSpec(sigma=0.01), seed=42)
        b = measure(op, x, noise_spec=NoiseSpec(sigma=0.01), seed=42)
        assert np.array_equal(a.y, b.y)
        c = measure(op, x, noise_spec=NoiseSpec(sigma=0.01), seed=43)
        assert not np.array_equal(a.y, c.y)

    def test_noise_clamped_to_range(self):
        op = MatrixOperator(np.random.default_rng(3).standard_normal((50, 4)))
        x = np.full(4, 2.0)
        mset = measure(op, x, noise_spec=NoiseSpec(sigma=0.5), seed=0)
        assert mset.y.min() >= 0.0
        assert mset.y.max() <= 1.0 - 2.0 ** -52

    def test_quantization(self):
        op = MatrixOperator(np.random.default_rng(4).standard_normal((30, 4)))
        x = np.abs(np.random.default_rng(5).standard_normal(4))
        mset = measure(op, x, noise_spec=NoiseSpec(quant_bits=8), seed=0)
        levels = mset.y * (2 ** 8 - 1)
        assert np.allclose(levels, np.round(levels), atol=1e-9)

    def test_float32_storage_mode(self):
        op = MatrixOperator(np.random.default_rng(6).standard_normal((30, 4)))
        x = np.abs(np.random.default_rng(7).standard_normal(4))
        mset = measure(op, x, store_dtype=np.float32)
        assert mset.y.dtype == np.float64
        assert np.array_equal(mset.y, mset.y.astype(np.float32).astype(np.float64))


class TestLoss:
    def rand_instance(self, m=12, n=5, seed=0):
        rng = np.random.default_rng(seed)
        op = MatrixOperator(rng.standard_normal((m, n)))
        x = rng.standard_normal(n)
        return op, x, measure(op, x)

    def test_perfect_fit_is_exact_zero(self):
        op, x, mset = self.rand_instance()
        assert loss(op, mset, x) == 0.0

    def test_zero_zero(self):
        op = MatrixOperator(np.random.default_rng(1).standard_normal((6, 3)))
        assert loss(op, np.zeros(6), np.zeros(3)) == 0.0

    def test_hand_evaluated_example(self):
        # m=2, y=[0.5, 0], z chosen so both model responses are 0
        op = MatrixOperator(np.array([[1.0], [2.0]]))
        z = np.array([-1.0])
        assert loss(op, np.array([0.5, 0.0]), z) == pytest.approx(0.0625, abs=1e-18)

    def test_dimension_mismatch(self):
        op = MatrixOperator(np.eye(3))
        with pytest.raises(ValueError):
            loss(op, np.zeros(4), np.zeros(3))
        with pytest.raises(ValueError):
            loss(op, np.zeros(3), np.zeros(2))


class TestGradLoss:
    def test_zero_residual_gives_zero_gradient(self):
        rng = np.random.default_rng(0)
        op = MatrixOperator(rng.standard_normal((15, 6)))
        x = rng.standard_normal(6)
        mset = measure(op, x)
        g = grad_loss(op, mset, x)
        assert np.allclose(g, 0.0, atol=1e-16)

    def test_gradient_at_zero_start(self):
        # grad(0) = -(1/2m) * sum_i a_i y_i  (response 0, derivative 1/2 at ties)
        rng = np.random.default_rng(1)
        A = rng.standard_normal((25, 7))
        op = MatrixOperator(A)
        x = rng.standard_normal(7)
        mset = measure(op, x)
        g = grad_loss(op, mset, np.zeros(7))
        expected = -(A.T @ mset.y) / (2.0 * 25)
        assert np.allclose(g, expected, rtol=1e-12)

    def test_matches_finite_differences(self):
        # central differences of the loss, step 1e-6, away from response kinks
        rng = np.random.default_rng(2)
        A = rng.standard_normal((40, 6))
        op = MatrixOperator(A)
        x = rng.standard_normal(6)
        mset = measure(op, x)
        z = None
        while z is None or np.min(np.abs(A @ z)) <= 0.01:
            z = rng.standard_normal(6)
        g = grad_loss(op, mset, z)
        h = 1e-6
        fd = np.empty(6)
        for j in range(6):
            e = np.zeros(6)
            e[j] = h
            fd[j] = (loss(op, mset, z + e) - loss(op, mset, z - e)) / (2 * h)
        assert np.linalg.norm(fd - g) / np.linalg.norm(g) < 1e-5
