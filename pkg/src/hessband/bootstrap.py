"""Nonparametric bootstrap baseline: retrain on resamples, take quantiles.

B replicates are drawn with replacement from the training sample, each
retrained from scratch, and the band at a test point is the nearest-rank
[alpha/2, 1 - alpha/2] quantile range of the replicate predictions. With
the defaults (B = 10, alpha = 0.01) that degenerates to the ensemble
min/max, which is the baseline's documented weakness, not a bug here.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DivergenceError, DomainError, EnsembleError
from .linalg import Rng, derive_seed, quantile
from .mlp import Dataset, MlpArch, MlpModel, forward
from .training import TrainConfig, train


@dataclass
class BootstrapEnsemble:
    models: list[MlpModel]
    alignments: np.ndarray
    dropped: int

    @property
    def survived(self) -> int:
        return len(self.models)


@dataclass
class BootstrapBands:
    lower: np.ndarray
    upper: np.ndarray
    center: np.ndarray
    predictions: np.ndarray  # (survived, m) replicate predictions
    alpha: float
    survived: int
    dropped: int
    alignments: np.ndarray


def fit_replicates(
    arch: MlpArch,
    data: Dataset,
    config: TrainConfig,
    replicates: int = 10,
    seed: int = 0,
    share_init: bool = False,
) -> BootstrapEnsemble:
    """Train one model per with-replacement resample of the data.

    Replicates whose training diverges are dropped; fewer than two
    survivors make quantiles meaningless and raise EnsembleError. With
    share_init every replicate reuses the caller's init seed, otherwise
    each gets an independent one.
    """
    if replicates < 2:
        raise DomainError(f"replicates must be >= 2, got {replicates}")
    models: list[MlpModel] = []
    aligns = []
    dropped = 0
    for b in range(replicates):
        resample_rng = Rng(derive_seed(seed, "bootstrap-resample", b))
        idx = resample_rng.generator.integers(0, data.n, size=data.n)
        resampled = Dataset(
            inputs=data.inputs[idx],
            responses=data.responses[idx],
            sigma=data.sigma,
            truth=None if data.truth is None else data.truth[idx],
        )
        init_seed = config.seed if share_init else derive_seed(seed, "bootstrap-init", b)
        try:
            model, trace = train(arch, resampled, replace(config, seed=init_seed))
        except DivergenceError:
            dropped += 1
            continue
        models.append(model)
        aligns.append(trace.final_alignment)
    if len(models) < 2:
        raise EnsembleError(f"only {len(models)} of {replicates} replicates survived training")
    return BootstrapEnsemble(models=models, alignments=np.array(aligns), dropped=dropped)


def bands_from_ensemble(
    ensemble: BootstrapEnsemble, xs: np.ndarray, alpha: float = 0.01
) -> BootstrapBands:
    """Nearest-rank quantile band of the replicate predictions at xs; the
    center reported is the ensemble mean."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    matrix = np.vstack([forward(m, xs) for m in ensemble.models])
    m = xs.shape[0]
    lower = np.empty(m)
    upper = np.empty(m)
    for j in range(m):
        lower[j] = quantile(matrix[:, j], alpha / 2.0)
        upper[j] = quantile(matrix[:, j], 1.0 - alpha / 2.0)
    return BootstrapBands(
        lower=lower,
        upper=upper,
        center=matrix.mean(axis=0),
        predictions=matrix,
        alpha=alpha,
        survived=ensemble.survived,
        dropped=ensemble.dropped,
        alignments=ensemble.alignments,
    )


def bootstrap_bands(
    arch: MlpArch,
    data: Dataset,
    config: TrainConfig,
    xs: np.ndarray,
    replicates: int = 10,
    alpha: float = 0.01,
    seed: int = 0,
    share_init: bool = False,
) -> BootstrapBands:
    """fit_replicates followed by bands_from_ensemble, in one call."""
    ensemble = fit_replicates(arch, data, config, replicates, seed, share_init)
    return bands_from_ensemble(ensemble, xs, alpha)
