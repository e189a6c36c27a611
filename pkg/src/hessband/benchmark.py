"""Synthetic regression benchmark with a known smooth truth.

The ground truth is a kernel interpolant pinned at m Gaussian anchor
locations: values at the anchors are one draw of the Matern-3/2 process,
and f*(x) = k(x, C) K(C, C)^{-1} g extends them smoothly, so the truth is
an explicit function with a finite kernel-space norm that can be stored,
re-evaluated, and reproduced bit-for-bit from its seed.

Training and validation inputs are N(0, I_d) with an axis-aligned box
around the origin cut out (rejection sampling), which plants a hole in
the design for bands to widen over. Test points are never filtered.

Three independent seed streams (design, truth, noise) keep the fixed
design fixed while noise is redrawn.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky
from scipy.spatial.distance import cdist

from .errors import DimensionError, DomainError, GenerationError
from .linalg import Rng, derive_seed
from .mlp import Dataset

_SQRT3 = math.sqrt(3.0)
_JITTER_REL = 1e-10


@dataclass(frozen=True)
class MaternSpec:
    """Matern kernel family; only smoothness 1.5 is implemented."""

    length_scale: float = 1.0
    output_scale: float = 1.0
    smoothness: float = 1.5

    def __post_init__(self):
        if self.length_scale <= 0 or self.output_scale <= 0:
            raise DomainError("length_scale and output_scale must be > 0")
        if self.smoothness != 1.5:
            raise DomainError(f"only smoothness 1.5 is supported, got {self.smoothness}")


def matern_kernel(spec: MaternSpec, r: np.ndarray | float) -> np.ndarray | float:
    """k(r) = s^2 (1 + sqrt(3) r / l) exp(-sqrt(3) r / l) on distances r."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0):
        raise DomainError("distances must be >= 0")
    z = _SQRT3 * r / spec.length_scale
    out = spec.output_scale**2 * (1.0 + z) * np.exp(-z)
    return float(out) if out.ndim == 0 else out


@dataclass
class GroundTruth:
    """Evaluable kernel interpolant f*(x) = k(x, C) alpha."""

    spec: MaternSpec
    anchors: np.ndarray
    values: np.ndarray
    coefficients: np.ndarray
    jitter: float  # 0.0 when the gram matrix factorized cleanly

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.anchors.shape[1]:
            raise DimensionError(
                f"inputs of width {x.shape[1]} vs anchors of width {self.anchors.shape[1]}"
            )
        k = matern_kernel(self.spec, cdist(x, self.anchors))
        return k @ self.coefficients

    @property
    def rkhs_sq_norm(self) -> float:
        """g^T K^{-1} g = g^T alpha, the interpolant's squared kernel norm."""
        return float(self.values @ self.coefficients)


def sample_truth(spec: MaternSpec, d: int, anchors: int, rng: Rng) -> GroundTruth:
    """Draw anchor locations and process values, then interpolate.

    The gram matrix gets a recorded jitter of 1e-10 s^2 on the diagonal
    only if the clean Cholesky fails.
    """
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    if anchors < 1:
        raise DomainError(f"anchors must be >= 1, got {anchors}")
    gen = rng.generator if isinstance(rng, Rng) else rng
    locations = gen.standard_normal((anchors, d))
    gram = matern_kernel(spec, cdist(locations, locations))
    jitter = 0.0
    try:
        lower = cholesky(gram, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        jitter = _JITTER_REL * spec.output_scale**2
        lower = cholesky(gram + jitter * np.eye(anchors), lower=True, check_finite=False)
    values = lower @ gen.standard_normal(anchors)
    coefficients = cho_solve((lower, True), values, check_finite=False)
    return GroundTruth(
        spec=spec, anchors=locations, values=values, coefficients=coefficients, jitter=jitter
    )


@dataclass(frozen=True)
class BenchmarkSpec:
    """Everything that determines one synthetic dataset draw."""

    d: int
    n_train: int
    n_val: int
    n_test: int
    sigma: float = 0.1
    cutout: float = 0.5
    test_mode: str = "gaussian"  # or "grid" (1-d only)
    grid_lo: float = -3.0
    grid_hi: float = 3.0
    matern: MaternSpec = field(default_factory=MaternSpec)
    anchors: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.d < 1 or self.n_train < 1 or self.n_val < 0 or self.n_test < 1:
            raise DomainError("d, n_train, n_test must be >= 1 and n_val >= 0")
        if self.sigma < 0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")
        if self.cutout < 0:
            raise DomainError(f"cutout must be >= 0, got {self.cutout}")
        if self.test_mode not in ("gaussian", "grid"):
            raise DomainError(f"test_mode must be gaussian or grid, got {self.test_mode!r}")
        if self.test_mode == "grid" and self.d != 1:
            raise DomainError("grid test mode is 1-d only")
        if self.test_mode == "grid" and not self.grid_lo < self.grid_hi:
            raise DomainError("grid_lo must be < grid_hi")


@dataclass
class SeedBundle:
    design: int
    truth: int
    noise: int


@dataclass
class BenchmarkData:
    train: Dataset
    val: Dataset
    test_inputs: np.ndarray
    test_truth: np.ndarray
    test_responses: np.ndarray
    truth_fn: GroundTruth
    seeds: SeedBundle


def _sample_outside_box(gen: np.random.Generator, count: int, d: int, cutout: float):
    """Rejection-sample N(0, I_d) with the box [-cutout, cutout]^d removed."""
    if count == 0:
        return np.empty((0, d))
    kept: list[np.ndarray] = []
    have = 0
    drawn = 0
    while have < count:
        batch = max(count - have, 64)
        draws = gen.standard_normal((batch, d))
        drawn += batch
        outside = np.abs(draws).max(axis=1) > cutout
        accepted = draws[outside]
        kept.append(accepted)
        have += accepted.shape[0]
        if drawn >= max(10_000, 50 * count) and have < 0.001 * drawn:
            raise GenerationError(
                f"cutout {cutout} rejects {1 - have / drawn:.4%} of draws in d={d}"
            )
    return np.vstack(kept)[:count]


def generate(spec: BenchmarkSpec, noise_seed: int | None = None) -> BenchmarkData:
    """Draw truth, design, and noise from three independent seed streams.

    Passing noise_seed redraws the responses while keeping inputs and
    truth fixed; that is what makes coverage a Monte-Carlo-able quantity
    here.
    """
    seeds = SeedBundle(
        design=derive_seed(spec.seed, "design"),
        truth=derive_seed(spec.seed, "truth"),
        noise=derive_seed(spec.seed, "noise") if noise_seed is None else noise_seed,
    )
    truth_fn = sample_truth(spec.matern, spec.d, spec.anchors, Rng(seeds.truth))
    design_gen = Rng(seeds.design).generator
    train_x = _sample_outside_box(design_gen, spec.n_train, spec.d, spec.cutout)
    val_x = _sample_outside_box(design_gen, spec.n_val, spec.d, spec.cutout)
    if spec.test_mode == "grid":
        test_x = np.linspace(spec.grid_lo, spec.grid_hi, spec.n_test).reshape(-1, 1)
    else:
        test_x = design_gen.standard_normal((spec.n_test, spec.d))

    noise_gen = Rng(seeds.noise).generator
    train_truth = truth_fn(train_x)
    val_truth = truth_fn(val_x)
    test_truth = truth_fn(test_x)
    train_y = train_truth + spec.sigma * noise_gen.standard_normal(spec.n_train)
    val_y = val_truth + spec.sigma * noise_gen.standard_normal(spec.n_val)
    test_y = test_truth + spec.sigma * noise_gen.standard_normal(spec.n_test)

    return BenchmarkData(
        train=Dataset(inputs=train_x, responses=train_y, sigma=spec.sigma, truth=train_truth),
        val=Dataset(inputs=val_x, responses=val_y, sigma=spec.sigma, truth=val_truth),
        test_inputs=test_x,
        test_truth=test_truth,
        test_responses=test_y,
        truth_fn=truth_fn,
        seeds=seeds,
    )


# ---------------------------------------------------------------------------
# dataset container files (.npz) and a CSV export for eyeballing
# ---------------------------------------------------------------------------


def save_dataset(path, data: Dataset, seeds: SeedBundle | None = None) -> None:
    """Self-describing .npz with d, n, sigma, arrays, and the seed triple."""
    payload = {
        "d": np.int64(data.d),
        "n": np.int64(data.n),
        "sigma": np.float64(data.sigma),
        "inputs": data.inputs,
        "responses": data.responses,
    }
    if data.truth is not None:
        payload["truth"] = data.truth
    if seeds is not None:
        payload["design_seed"] = np.int64(seeds.design)
        payload["truth_seed"] = np.int64(seeds.truth)
        payload["noise_seed"] = np.int64(seeds.noise)
    np.savez(path, **payload)


def load_dataset(path) -> tuple[Dataset, SeedBundle | None]:
    with np.load(path) as archive:
        data = Dataset(
            inputs=archive["inputs"],
            responses=archive["responses"],
            sigma=float(archive["sigma"]),
            truth=archive["truth"] if "truth" in archive else None,
        )
        seeds = None
        if "design_seed" in archive:
            seeds = SeedBundle(
                design=int(archive["design_seed"]),
                truth=int(archive["truth_seed"]),
                noise=int(archive["noise_seed"]),
            )
    return data, seeds


def export_dataset_csv(path, data: Dataset) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = [f"x_{j}" for j in range(data.d)] + ["y"]
        if data.truth is not None:
            header.append("truth")
        writer.writerow(header)
        for i in range(data.n):
            row = [str(float(v)) for v in data.inputs[i]] + [str(float(data.responses[i]))]
            if data.truth is not None:
                row.append(str(float(data.truth[i])))
            writer.writerow(row)
