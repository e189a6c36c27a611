"""The fit/predict facade: sklearn conventions over the band machinery."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from hessband.estimators import BootstrapBandRegressor, HessianBandRegressor


def toy_problem(n=40, d=2, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    y = X @ np.array([1.0, -0.5][:d]) + 0.05 * rng.standard_normal(n)
    return X, y


def fast_params():
    return dict(hidden=(), activation="identity", use_bias=False,
                optimizer="gd", schedule="constant", learning_rate=0.2,
                epochs=800, init="glorot", lam=0.01)


class TestHessianBandRegressor:
    def test_get_set_clone_roundtrip(self):
        est = HessianBandRegressor(hidden=(8,), lam=0.5, delta=0.02)
        params = est.get_params()
        assert params["hidden"] == (8,)
        assert params["lam"] == 0.5
        est.set_params(lam=0.1)
        assert est.lam == 0.1
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_fit_predict_shapes(self):
        X, y = toy_problem()
        est = HessianBandRegressor(**fast_params()).fit(X, y)
        preds = est.predict(X[:7])
        assert preds.shape == (7,)
        assert est.n_features_in_ == 2
        assert est.alignment_residual_ < 1e-6

    def test_predict_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            HessianBandRegressor().predict(np.zeros((2, 2)))

    def test_interval_brackets_prediction(self):
        X, y = toy_problem()
        est = HessianBandRegressor(**fast_params()).fit(X, y)
        Xq = X[:5]
        lower, upper = est.predict_interval(Xq)
        preds = est.predict(Xq)
        assert np.all(lower < preds)
        assert np.all(preds < upper)

    def test_band_details_diagnostics(self):
        X, y = toy_problem()
        est = HessianBandRegressor(**fast_params()).fit(X, y)
        details = est.band_details(X[:3])
        assert len(details) == 3
        for b in details:
            assert b.weighted_norm.value >= 0
            assert b.weighted_norm.cg_iterations >= 1
            assert not b.weighted_norm.curvature_flag
            assert b.band_mode == "pointwise_subgamma"
            # split across the 3 query points
            assert b.delta == pytest.approx(est.delta / 3)

    def test_split_delta_off_keeps_full_budget(self):
        X, y = toy_problem()
        est = HessianBandRegressor(split_delta=False, **fast_params()).fit(X, y)
        details = est.band_details(X[:3])
        assert details[0].delta == pytest.approx(est.delta)

    def test_feature_count_mismatch(self):
        X, y = toy_problem(d=2)
        est = HessianBandRegressor(**fast_params()).fit(X, y)
        with pytest.raises(ValueError):
            est.predict(np.zeros((3, 5)))

    def test_deterministic_given_seed(self):
        X, y = toy_problem()
        a = HessianBandRegressor(seed=3, **fast_params()).fit(X, y)
        b = HessianBandRegressor(seed=3, **fast_params()).fit(X, y)
        assert np.array_equal(a.model_.theta, b.model_.theta)

    def test_score_is_r2(self):
        X, y = toy_problem()
        est = HessianBandRegressor(**fast_params()).fit(X, y)
        assert est.score(X, y) > 0.9


class TestBootstrapBandRegressor:
    def test_fit_predict_interval(self):
        X, y = toy_problem(n=30)
        est = BootstrapBandRegressor(replicates=4, level=0.1, **fast_params()).fit(X, y)
        lower, upper = est.predict_interval(X[:6])
        assert lower.shape == (6,)
        assert np.all(lower <= upper)
        preds = est.predict(X[:6])
        assert preds.shape == (6,)

    def test_clone_and_params(self):
        est = BootstrapBandRegressor(replicates=7, level=0.05)
        cloned = clone(est)
        assert cloned.get_params()["replicates"] == 7
        assert cloned.get_params()["level"] == 0.05

    def test_unfitted_raises(self):
        with pytest.raises(NotFittedError):
            BootstrapBandRegressor().predict(np.zeros((2, 2)))

    def test_ensemble_exposed(self):
        X, y = toy_problem(n=25)
        est = BootstrapBandRegressor(replicates=3, **fast_params()).fit(X, y)
        assert est.ensemble_.survived == 3
