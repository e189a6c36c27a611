"""Small deterministic numeric kernel: SPD solves, seeded draws, quantiles.

Everything here is 64-bit and bit-reproducible for a fixed seed; the rest
of the library builds on these three primitives plus numpy itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DefinitenessError, DimensionError, DomainError, EmptyInputError

# Relative asymmetry tolerated before a matrix is rejected as non-symmetric.
SYMMETRY_RTOL = 1e-12


@dataclass
class Rng:
    """Named, reproducible random stream (PCG64 under a fixed seed)."""

    seed: int
    algorithm: str = "pcg64"
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.algorithm != "pcg64":
            raise DomainError(f"unknown rng algorithm: {self.algorithm!r}")
        self.generator = np.random.Generator(np.random.PCG64(self.seed))


def derive_seed(*parts: int | str) -> int:
    """Deterministically mix labelled parts into a 63-bit child seed.

    Strings are folded through their UTF-8 bytes so role labels like
    "noise" or "trial" can key independent streams off one base seed.
    """
    entropy: list[int] = []
    for part in parts:
        if isinstance(part, str):
            entropy.extend(part.encode("utf-8"))
        else:
            entropy.append(int(part) & 0xFFFFFFFFFFFFFFFF)
    ss = np.random.SeedSequence(entropy)
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def dense_sym_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve A x = b for symmetric positive definite A via Cholesky.

    Rejects non-square or asymmetric A (relative asymmetry above
    SYMMETRY_RTOL) with DimensionError/DefinitenessError, and raises
    DefinitenessError when the factorization fails.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise DimensionError(f"rhs length {b.shape[0]} != matrix size {a.shape[0]}")
    scale = np.abs(a).max()
    if scale > 0 and np.abs(a - a.T).max() > SYMMETRY_RTOL * scale:
        raise DefinitenessError("matrix is not symmetric")
    try:
        factor = cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise DefinitenessError(f"matrix is not positive definite: {exc}") from exc
    return cho_solve(factor, b, check_finite=False)


def gaussian_vector(rng: Rng | np.random.Generator, dim: int) -> np.ndarray:
    """Draw a standard normal vector of length dim (float64)."""
    if dim < 1:
        raise DomainError(f"dim must be >= 1, got {dim}")
    gen = rng.generator if isinstance(rng, Rng) else rng
    return gen.standard_normal(dim)


def quantile(values: np.ndarray, q: float) -> float:
    """Nearest-rank quantile: sorted[ceil(q * len) - 1], clamped to range.

    The rank index is computed with a 1e-9 slack so products like 0.2 * 5
    that are integers in exact arithmetic do not round upward through
    floating-point noise.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise EmptyInputError("quantile of an empty collection")
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"quantile level must be in [0, 1], got {q}")
    idx = math.ceil(q * values.size - 1e-9) - 1
    idx = min(max(idx, 0), values.size - 1)
    return float(np.sort(values)[idx])
