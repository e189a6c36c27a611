"""Band quality metrics: coverage, matched-width summaries, Winkler score.

Coverage is the fraction of test points whose noiseless truth lands
inside the band (endpoints count as covered).

Width summaries are computed on the nearest-neighbour-matched subset of
test points: for every training input take its nearest test point, drop
matches whose distance is above the 99th percentile of all match
distances, and collapse duplicates. That scores band width where the
design actually has data instead of averaging over empty space.

The Winkler interval score for level alpha adds to the width a penalty
of (2/alpha) per unit of exceedance whenever the response falls outside:

    (ub - lb) + (2/alpha) max(0, y - ub) + (2/alpha) max(0, lb - y)

averaged over points. Lower is better; it is minimized in expectation by
the true [alpha/2, 1-alpha/2] quantile interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionError, DomainError, EmptyInputError
from .linalg import quantile

MATCH_PERCENTILE = 0.99


@dataclass
class MetricsReport:
    coverage: float
    avg_width: float
    median_width: float
    winkler: float
    test_mse: float
    matched_points: int


def _check_bands(lower: np.ndarray, upper: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lower = np.asarray(lower, dtype=np.float64).ravel()
    upper = np.asarray(upper, dtype=np.float64).ravel()
    if lower.size != upper.size:
        raise DimensionError("lower and upper have different lengths")
    if lower.size == 0:
        raise EmptyInputError("no bands to score")
    return lower, upper


def coverage(lower: np.ndarray, upper: np.ndarray, truth: np.ndarray) -> float:
    """Mean of 1{lb <= truth <= ub}, endpoints inclusive."""
    lower, upper = _check_bands(lower, upper)
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if truth.size != lower.size:
        raise DimensionError("truth length does not match bands")
    return float(np.mean((lower <= truth) & (truth <= upper)))


def matched_test_indices(train_inputs: np.ndarray, test_inputs: np.ndarray) -> np.ndarray:
    """Indices of test points retained by the nearest-neighbour match.

    Each training input votes for its nearest test point; votes farther
    than the 99th nearest-rank percentile of match distances are
    discarded and duplicate votes collapse to one index.
    """
    train_inputs = np.atleast_2d(np.asarray(train_inputs, dtype=np.float64))
    test_inputs = np.atleast_2d(np.asarray(test_inputs, dtype=np.float64))
    if train_inputs.shape[0] == 0 or test_inputs.shape[0] == 0:
        raise EmptyInputError("matching needs non-empty train and test inputs")
    if train_inputs.shape[1] != test_inputs.shape[1]:
        raise DimensionError("train and test input widths differ")
    dists = cdist(train_inputs, test_inputs)
    nearest = dists.argmin(axis=1)
    nearest_dist = dists[np.arange(dists.shape[0]), nearest]
    eps = quantile(nearest_dist, MATCH_PERCENTILE)
    return np.unique(nearest[nearest_dist <= eps])


def filtered_width(
    lower: np.ndarray,
    upper: np.ndarray,
    train_inputs: np.ndarray,
    test_inputs: np.ndarray,
) -> tuple[float, float, int]:
    """(mean width, nearest-rank median width, matched count) over the
    matched subset of test points."""
    lower, upper = _check_bands(lower, upper)
    test_inputs = np.atleast_2d(np.asarray(test_inputs, dtype=np.float64))
    if test_inputs.shape[0] != lower.size:
        raise DimensionError("bands do not match test inputs")
    kept = matched_test_indices(train_inputs, test_inputs)
    widths = upper[kept] - lower[kept]
    return float(widths.mean()), quantile(widths, 0.5), int(kept.size)


def winkler(lower: np.ndarray, upper: np.ndarray, responses: np.ndarray, alpha: float) -> float:
    """Mean Winkler interval score at level alpha (see module docstring)."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}")
    lower, upper = _check_bands(lower, upper)
    responses = np.asarray(responses, dtype=np.float64).ravel()
    if responses.size != lower.size:
        raise DimensionError("responses length does not match bands")
    width = upper - lower
    if np.any(width < 0):
        raise DomainError("upper < lower in at least one band")
    over = np.maximum(responses - upper, 0.0)
    under = np.maximum(lower - responses, 0.0)
    return float(np.mean(width + (2.0 / alpha) * (over + under)))


def score_bands(
    lower: np.ndarray,
    upper: np.ndarray,
    centers: np.ndarray,
    truth: np.ndarray,
    responses: np.ndarray,
    train_inputs: np.ndarray,
    test_inputs: np.ndarray,
    alpha: float,
) -> MetricsReport:
    """Bundle every benchmark metric for one set of bands."""
    centers = np.asarray(centers, dtype=np.float64).ravel()
    truth_arr = np.asarray(truth, dtype=np.float64).ravel()
    avg_w, med_w, matched = filtered_width(lower, upper, train_inputs, test_inputs)
    return MetricsReport(
        coverage=coverage(lower, upper, truth_arr),
        avg_width=avg_w,
        median_width=med_w,
        winkler=winkler(lower, upper, responses, alpha),
        test_mse=float(np.mean((centers - truth_arr) ** 2)),
        matched_points=matched,
    )
