"""scikit-learn style front door for the band machinery.

Two regressors with the usual fit/predict/get_params surface so they
compose with pipelines, clones, and grid search:

- HessianBandRegressor: one ridge-trained MLP whose predict_interval
  derives half-widths from inverse-Hessian weighted gradient norms.
- BootstrapBandRegressor: the resampled-ensemble baseline with
  nearest-rank quantile intervals.

Both treat the noise scale sigma as known (it is a hyperparameter, not
estimated) and keep the training sample around after fit: the interval
geometry depends on the design, not just on theta.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .bands import BoundParams, band_batch
from .bootstrap import bands_from_ensemble, fit_replicates
from .cg import CgConfig
from .mlp import Dataset, MlpArch, forward
from .training import TrainConfig, train


def _validated(X, y=None):
    if y is None:
        return check_array(X, dtype=np.float64, ensure_2d=True)
    return check_X_y(X, y, dtype=np.float64, y_numeric=True)


class HessianBandRegressor(RegressorMixin, BaseEstimator):
    """MLP least-squares fit with curvature-weighted confidence bands.

    Parameters mirror the training and band stages; see fit. The interval
    covers the noise-driven deviation of the fit around its mean, at
    per-point failure budget delta (split across points when
    split_delta is set and predict_interval gets a batch).
    """

    def __init__(
        self,
        hidden=(64,),
        activation="tanh",
        use_bias=True,
        lam=1e-3,
        optimizer="adamw",
        learning_rate=1e-3,
        epochs=2000,
        schedule="cosine",
        init="glorot",
        init_std=1.0,
        sigma=0.1,
        delta=0.01,
        v=1.0,
        c=1.0,
        band_mode="pointwise_subgamma",
        cg_max_iters=1000,
        cg_tol=1e-12,
        split_delta=True,
        seed=0,
    ):
        self.hidden = hidden
        self.activation = activation
        self.use_bias = use_bias
        self.lam = lam
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.schedule = schedule
        self.init = init
        self.init_std = init_std
        self.sigma = sigma
        self.delta = delta
        self.v = v
        self.c = c
        self.band_mode = band_mode
        self.cg_max_iters = cg_max_iters
        self.cg_tol = cg_tol
        self.split_delta = split_delta
        self.seed = seed

    def fit(self, X, y):
        X, y = _validated(X, y)
        arch = MlpArch(
            in_dim=X.shape[1],
            hidden=tuple(self.hidden),
            activation=self.activation,
            use_bias=self.use_bias,
        )
        config = TrainConfig(
            optimizer=self.optimizer,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            schedule=self.schedule,
            lam=self.lam,
            init=self.init,
            init_std=self.init_std,
            seed=self.seed,
        )
        data = Dataset(inputs=X, responses=y, sigma=self.sigma)
        self.model_, self.trace_ = train(arch, data, config)
        self.train_data_ = data
        self.alignment_residual_ = self.trace_.final_alignment
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = _validated(X)
        return forward(self.model_, X)

    def band_details(self, X):
        """Full per-point diagnostics (weighted norm, CG iterations, ...)."""
        check_is_fitted(self, "model_")
        X = _validated(X)
        params = BoundParams(
            sigma=self.sigma, delta=self.delta, n=self.train_data_.n, v=self.v, c=self.c
        )
        return band_batch(
            self.model_,
            self.train_data_,
            self.lam,
            X,
            params,
            cg_config=CgConfig(max_iters=self.cg_max_iters, tol=self.cg_tol),
            band_mode=self.band_mode,
            split_delta=self.split_delta,
        )

    def predict_interval(self, X):
        """(lower, upper) arrays, one band per row of X."""
        bands = self.band_details(X)
        return (
            np.array([b.lower for b in bands]),
            np.array([b.upper for b in bands]),
        )


class BootstrapBandRegressor(RegressorMixin, BaseEstimator):
    """Resampled-ensemble baseline with quantile intervals at level."""

    def __init__(
        self,
        hidden=(64,),
        activation="tanh",
        use_bias=True,
        lam=1e-3,
        optimizer="adamw",
        learning_rate=1e-3,
        epochs=2000,
        schedule="cosine",
        init="glorot",
        init_std=1.0,
        sigma=0.1,
        replicates=10,
        level=0.01,
        share_init=False,
        seed=0,
    ):
        self.hidden = hidden
        self.activation = activation
        self.use_bias = use_bias
        self.lam = lam
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.schedule = schedule
        self.init = init
        self.init_std = init_std
        self.sigma = sigma
        self.replicates = replicates
        self.level = level
        self.share_init = share_init
        self.seed = seed

    def fit(self, X, y):
        X, y = _validated(X, y)
        arch = MlpArch(
            in_dim=X.shape[1],
            hidden=tuple(self.hidden),
            activation=self.activation,
            use_bias=self.use_bias,
        )
        config = TrainConfig(
            optimizer=self.optimizer,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            schedule=self.schedule,
            lam=self.lam,
            init=self.init,
            init_std=self.init_std,
            seed=self.seed,
        )
        data = Dataset(inputs=X, responses=y, sigma=self.sigma)
        self.ensemble_ = fit_replicates(
            arch, data, config, replicates=self.replicates, seed=self.seed,
            share_init=self.share_init,
        )
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "ensemble_")
        X = _validated(X)
        return bands_from_ensemble(self.ensemble_, X, self.level).center

    def predict_interval(self, X):
        check_is_fitted(self, "ensemble_")
        X = _validated(X)
        result = bands_from_ensemble(self.ensemble_, X, self.level)
        return result.lower, result.upper
