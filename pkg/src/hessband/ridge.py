"""Closed-form ridge regression used as the exactly-solvable reference.

For f(x; theta) = x^T theta everything the band machinery estimates has a
dense formula: theta_hat = Sigma_lam^{-1} (1/n) X^T Y with
Sigma_lam = (1/n) X^T X + lambda I, the fit's mean is
E f(x) = x^T theta* - lambda x^T Sigma_lam^{-1} theta*, and the weighted
norm is exactly x^T Sigma_lam^{-1} Sigma_hat Sigma_lam^{-1} x, which by
Sigma_hat = Sigma_lam - lambda I collapses to
x^T (Sigma_lam^{-1} - lambda Sigma_lam^{-2}) x <= x^T Sigma_lam^{-1} x.
The deviation of the prediction is Gaussian here, so the sub-gamma
constants vanish (v = c = 0) and the half-width needs only the norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bands import HALF_PI_SQ
from .errors import DimensionError, DomainError
from .linalg import Rng, dense_sym_solve


@dataclass
class RidgeInterval:
    center: float
    bias: float
    halfwidth: float

    @property
    def lower(self) -> float:
        return self.center - self.bias - self.halfwidth

    @property
    def upper(self) -> float:
        return self.center + self.bias + self.halfwidth


def _design_matrices(inputs: np.ndarray, lam: float) -> tuple[np.ndarray, np.ndarray]:
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    n, d = x.shape
    sigma_hat = x.T @ x / n
    return sigma_hat, sigma_hat + lam * np.eye(d)


def ridge_fit(inputs: np.ndarray, responses: np.ndarray, lam: float) -> np.ndarray:
    """theta_hat = (Sigma_hat + lambda I)^{-1} (1/n) X^T Y."""
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    y = np.asarray(responses, dtype=np.float64).ravel()
    if x.shape[0] != y.size:
        raise DimensionError(f"{x.shape[0]} inputs vs {y.size} responses")
    if lam < 0:
        raise DomainError(f"lambda must be >= 0, got {lam}")
    _, sigma_lam = _design_matrices(x, lam)
    return dense_sym_solve(sigma_lam, x.T @ y / x.shape[0])


def ridge_mean_prediction(inputs: np.ndarray, theta_star: np.ndarray, lam: float, x: np.ndarray) -> float:
    """E f(x; theta_hat) = x^T theta* - lambda x^T Sigma_lam^{-1} theta*."""
    theta_star = np.asarray(theta_star, dtype=np.float64).ravel()
    x = np.asarray(x, dtype=np.float64).ravel()
    _, sigma_lam = _design_matrices(inputs, lam)
    shrink = dense_sym_solve(sigma_lam, theta_star)
    return float(x @ theta_star - lam * x @ shrink)


def ridge_weighted_norm(inputs: np.ndarray, lam: float, x: np.ndarray) -> tuple[float, float]:
    """(exact, upper) = (x^T S^{-1} Sigma_hat S^{-1} x, x^T S^{-1} x) with
    S = Sigma_lam; exact <= upper always, equal when lambda = 0."""
    x = np.asarray(x, dtype=np.float64).ravel()
    sigma_hat, sigma_lam = _design_matrices(inputs, lam)
    u = dense_sym_solve(sigma_lam, x)
    exact = float(u @ sigma_hat @ u)
    upper = float(x @ u)
    return exact, upper


def ridge_ci(
    inputs: np.ndarray,
    theta_star: np.ndarray,
    lam: float,
    x: np.ndarray,
    sigma: float,
    delta: float,
    responses: np.ndarray | None = None,
) -> RidgeInterval:
    """Oracle interval around the ridge prediction at x.

    bias = lambda |x^T Sigma_lam^{-1} theta*| covers the shrinkage of the
    mean away from the truth; the stochastic half-width uses the upper
    norm x^T Sigma_lam^{-1} x with the v = c = 0 bound
    sigma sqrt( (pi^2/2) ln(2/delta) / n ) * ||x||_{Sigma_lam^{-1}}.
    """
    if sigma < 0:
        raise DomainError(f"sigma must be >= 0, got {sigma}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must be in (0, 1), got {delta}")
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    theta_star = np.asarray(theta_star, dtype=np.float64).ravel()
    x = np.asarray(x, dtype=np.float64).ravel()
    n = inputs.shape[0]
    _, sigma_lam = _design_matrices(inputs, lam)
    u = dense_sym_solve(sigma_lam, x)
    shrink = dense_sym_solve(sigma_lam, theta_star)
    bias = lam * abs(float(x @ shrink))
    halfwidth = sigma * math.sqrt(HALF_PI_SQ * math.log(2.0 / delta) / n) * math.sqrt(
        max(float(x @ u), 0.0)
    )
    if responses is None:
        center = float(x @ theta_star) - lam * float(x @ shrink)
    else:
        center = float(x @ ridge_fit(inputs, responses, lam))
    return RidgeInterval(center=center, bias=bias, halfwidth=halfwidth)


def mc_coverage(
    inputs: np.ndarray,
    theta_star: np.ndarray,
    lam: float,
    x: np.ndarray,
    sigma: float,
    delta: float,
    trials: int,
    rng: Rng,
) -> float:
    """Fraction of noise redraws where |x^T(theta_hat - theta*)| stays
    within bias + halfwidth; the guarantee is a lower bound 1 - delta.

    Vectorized over redraws: x^T theta_hat is an affine map of the noise.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    theta_star = np.asarray(theta_star, dtype=np.float64).ravel()
    x = np.asarray(x, dtype=np.float64).ravel()
    n = inputs.shape[0]
    _, sigma_lam = _design_matrices(inputs, lam)
    # row vector e with x^T theta_hat = e @ Y
    e = dense_sym_solve(sigma_lam, x) @ inputs.T / n
    truth_mean = inputs @ theta_star
    ci = ridge_ci(inputs, theta_star, lam, x, sigma, delta)
    radius = ci.bias + ci.halfwidth
    target = float(x @ theta_star)
    gen = rng.generator if isinstance(rng, Rng) else rng
    noise = gen.standard_normal((trials, n))
    projections = (truth_mean + sigma * noise) @ e
    return float(np.mean(np.abs(projections - target) <= radius))
