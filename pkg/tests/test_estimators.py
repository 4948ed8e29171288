import numpy as np
import pytest
from sklearn.base import clone

from nlct.estimators import LinearizedCTRegressor, NonlinearCTRegressor
from nlct.model import beer_lambert, measure
from nlct.operators import GaussianOperator
from nlct.optimize import l1_ball


def dense_instance(n=24, m=192, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    y = beer_lambert(A @ x)
    return A, x, y


class TestSklearnContract:
    def test_get_set_params_roundtrip(self):
        est = NonlinearCTRegressor(step_mode="theorem", step_size=8.0, max_iter=50)
        params = est.get_params()
        assert params["step_mode"] == "theorem"
        assert params["step_size"] == 8.0
        est2 = NonlinearCTRegressor().set_params(**params)
        assert est2.get_params() == params

    def test_clone(self):
        est = LinearizedCTRegressor(eps=1e-6, tv_weight=0.1, grid_shape=(4, 4))
        cl = clone(est)
        assert cl.get_params() == est.get_params()

    def test_predict_requires_fit(self):
        from sklearn.exceptions import NotFittedError
        with pytest.raises(NotFittedError):
            NonlinearCTRegressor().predict(np.eye(3))


class TestNonlinearRegressor:
    def test_recovers_dense_signal(self):
        A, x, y = dense_instance()
        est = NonlinearCTRegressor(step_mode="theorem", norm_x=1.0,
                                   max_iter=6000, tol=1e-13)
        est.fit(A, y)
        assert np.linalg.norm(est.coef_ - x) < 1e-5
        assert est.n_iter_ <= 6000
        assert est.trajectory_.loss[-1] < 1e-9

    def test_theorem_mode_estimates_norm_when_missing(self):
        A, x, y = dense_instance(n=16, m=4000, seed=3)
        est = NonlinearCTRegressor(step_mode="theorem", max_iter=500)
        est.fit(A, y)
        assert np.linalg.norm(est.coef_ - x) < 0.05

    def test_predict_reproduces_measurements(self):
        A, x, y = dense_instance(seed=1)
        est = NonlinearCTRegressor(step_mode="theorem", norm_x=1.0, max_iter=4000)
        est.fit(A, y)
        assert np.allclose(est.predict(A), y, atol=1e-5)
        assert est.score(A, y) > 0.999

    def test_constraint_path(self):
        # compressive instance: m = 130 rows for n = 200 unknowns, 3-sparse
        rng = np.random.default_rng(5)
        n, s, m = 200, 3, 130
        A = rng.standard_normal((m, n))
        x = np.zeros(n)
        x[rng.choice(n, s, replace=False)] = rng.standard_normal(s)
        x /= np.linalg.norm(x)
        y = beer_lambert(A @ x)
        est = NonlinearCTRegressor(step_mode="constant", step_size=1.0,
                                   constraint=l1_ball(float(np.abs(x).sum())),
                                   max_iter=1500)
        est.fit(A, y)
        assert np.linalg.norm(est.coef_ - x) < 1e-3
        assert np.abs(est.coef_).sum() <= np.abs(x).sum() + 1e-9

    def test_operator_input(self):
        op = GaussianOperator(120, 12, seed=2)
        rng = np.random.default_rng(2)
        x = rng.standard_normal(12)
        x /= np.linalg.norm(x)
        mset = measure(op, x)
        est = NonlinearCTRegressor(step_mode="theorem", norm_x=1.0, max_iter=3000)
        est.fit(op, mset.y)
        assert np.linalg.norm(est.coef_ - x) < 1e-3

    def test_rejects_bad_measurements(self):
        A, x, y = dense_instance()
        est = NonlinearCTRegressor()
        with pytest.raises(ValueError):
            est.fit(A, y + 2.0)


class TestLinearizedRegressor:
    def test_exact_on_nonnegative_ray_data(self):
        # log-linearization is exact only when line integrals are nonnegative
        # (ray physics); build a nonnegative instance
        rng = np.random.default_rng(7)
        A = np.abs(rng.standard_normal((160, 20)))
        x = rng.random(20)
        x /= x.sum()
        y = beer_lambert(A @ x)
        li = LinearizedCTRegressor(step_mode="auto", step_size=1.0, max_iter=2000,
                                   tol=1e-14)
        li.fit(A, y)
        assert li.n_clamped_ == 0
        assert np.linalg.norm(li.coef_ - x) < 1e-6
        assert np.allclose(li.predict(A), A @ x, atol=1e-6)

    def test_clamp_count_exposed(self):
        A = np.eye(3)
        y = np.array([0.0, 0.5, 1.0 - 1e-15])
        est = LinearizedCTRegressor(eps=1e-9, max_iter=10)
        est.fit(A, y)
        assert est.n_clamped_ == 1
