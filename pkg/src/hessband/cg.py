"""Conjugate gradients against a matrix-free SPD operator.

Solves A h = v where A is only available as z -> A z (here: regularized
loss Hessians applied through exact Hessian-vector products). Iterations
start at h_0 = 0, stop at relative residual ||A h - v|| / ||v|| <= tol or
at the iteration cap, and bail out with a flag (not an error) when a
direction of non-positive curvature shows up; the caller decides what a
flagged result is worth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionError, DomainError, EmptyInputError

DEFAULT_MAX_ITERS = 1000
DEFAULT_TOL = 1e-12


@dataclass
class CgConfig:
    max_iters: int = DEFAULT_MAX_ITERS
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.max_iters < 1:
            raise DomainError(f"max_iters must be >= 1, got {self.max_iters}")
        if not 0.0 < self.tol < 1.0:
            raise DomainError(f"tol must be in (0, 1), got {self.tol}")


@dataclass
class CgResult:
    solution: np.ndarray
    iterations: int
    final_residual: float
    curvature_flag: bool
    tol_used: float = DEFAULT_TOL

    @property
    def converged(self) -> bool:
        return not self.curvature_flag and self.final_residual <= self.tol_used


def cg_solve(
    apply_a: Callable[[np.ndarray], np.ndarray],
    rhs: np.ndarray,
    config: CgConfig | None = None,
) -> CgResult:
    """Standard CG from a zero start with a true-residual exit check.

    The recursive residual drives the loop; once it dips under tol the
    true residual ||A h - v|| is recomputed and, if drift pushed it back
    above tol, iteration continues from the corrected residual. The
    reported final_residual is always the true one.
    """
    config = config or CgConfig()
    v = np.asarray(rhs, dtype=np.float64).ravel()
    if v.size == 0:
        raise EmptyInputError("empty right-hand side")
    vnorm = float(np.linalg.norm(v))
    if vnorm == 0.0:
        return CgResult(np.zeros_like(v), 0, 0.0, False, tol_used=config.tol)

    h = np.zeros_like(v)
    r = v.copy()
    p = r.copy()
    rs = float(r @ r)
    iterations = 0
    flagged = False

    while iterations < config.max_iters:
        ap = apply_a(p)
        if ap.shape != v.shape:
            raise DimensionError("operator changed the vector length")
        curvature = float(p @ ap)
        if curvature <= 0.0 or not math.isfinite(curvature):
            flagged = True
            break
        alpha = rs / curvature
        h += alpha * p
        r -= alpha * ap
        iterations += 1
        rs_next = float(r @ r)
        if math.sqrt(rs_next) <= config.tol * vnorm:
            true_r = v - apply_a(h)
            true_norm = float(np.linalg.norm(true_r))
            if true_norm <= config.tol * vnorm:
                return CgResult(h, iterations, true_norm / vnorm, False, tol_used=config.tol)
            # drift: restart direction from the corrected residual
            r = true_r
            rs_next = true_norm * true_norm
            p = r.copy()
            rs = rs_next
            continue
        beta = rs_next / rs
        rs = rs_next
        p = r + beta * p

    final = float(np.linalg.norm(v - apply_a(h))) / vnorm
    return CgResult(h, iterations, final, flagged, tol_used=config.tol)


def estimate_iterations(max_grad_norm: float, lam: float, tol: float) -> int:
    """Iteration budget ceil(sqrt(1 + B^2 / lambda) * ln(1 / tol)) for a
    regularized Gauss-Newton spectrum with per-sample gradient cap B."""
    if lam <= 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    if not 0.0 < tol < 1.0:
        raise DomainError(f"tol must be in (0, 1), got {tol}")
    if max_grad_norm < 0:
        raise DomainError(f"max_grad_norm must be >= 0, got {max_grad_norm}")
    return math.ceil(math.sqrt(1.0 + max_grad_norm**2 / lam) * math.log(1.0 / tol))
