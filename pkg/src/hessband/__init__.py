"""Confidence bands for least-squares MLPs via inverse-Hessian weighted norms."""

from .bands import (
    BoundParams,
    ConfidenceBand,
    WeightedNormResult,
    band,
    band_batch,
    halfwidth_poly,
    halfwidth_sub_gamma,
    halfwidth_sub_gamma_oracle,
    sensitivity_check,
    uniform_logterm,
    uniform_logterm_network,
    weighted_norm,
)
from .benchmark import BenchmarkSpec, MaternSpec, generate, sample_truth
from .bootstrap import bootstrap_bands
from .cg import CgConfig, CgResult, cg_solve, estimate_iterations
from .errors import ConfigError, HessbandError
from .estimators import BootstrapBandRegressor, HessianBandRegressor
from .experiment import ExperimentConfig, load_config, run_experiment
from .linalg import Rng, dense_sym_solve, gaussian_vector, quantile
from .metrics import MetricsReport, coverage, filtered_width, winkler
from .mlp import Dataset, MlpArch, MlpModel, forward, hvp_loss, lipschitz_bound, loss
from .ridge import mc_coverage, ridge_ci, ridge_fit, ridge_weighted_norm
from .training import TrainConfig, TrainTrace, alignment_residual, init_params, train

__version__ = "0.1.0"

__all__ = [
    "BoundParams",
    "ConfidenceBand",
    "WeightedNormResult",
    "band",
    "band_batch",
    "halfwidth_poly",
    "halfwidth_sub_gamma",
    "halfwidth_sub_gamma_oracle",
    "sensitivity_check",
    "uniform_logterm",
    "uniform_logterm_network",
    "weighted_norm",
    "BenchmarkSpec",
    "MaternSpec",
    "generate",
    "sample_truth",
    "bootstrap_bands",
    "CgConfig",
    "CgResult",
    "cg_solve",
    "estimate_iterations",
    "ConfigError",
    "HessbandError",
    "BootstrapBandRegressor",
    "HessianBandRegressor",
    "ExperimentConfig",
    "load_config",
    "run_experiment",
    "Rng",
    "dense_sym_solve",
    "gaussian_vector",
    "quantile",
    "MetricsReport",
    "coverage",
    "filtered_width",
    "winkler",
    "Dataset",
    "MlpArch",
    "MlpModel",
    "forward",
    "hvp_loss",
    "lipschitz_bound",
    "loss",
    "mc_coverage",
    "ridge_ci",
    "ridge_fit",
    "ridge_weighted_norm",
    "TrainConfig",
    "TrainTrace",
    "alignment_residual",
    "init_params",
    "train",
]
