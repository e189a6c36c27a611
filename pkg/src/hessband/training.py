"""Full-batch training of the ridge loss with GD or AdamW.

Both optimizers target L_lambda = L + (lambda/2)||theta||^2; GD takes the
plain step theta <- (1 - eta lambda) theta - eta grad L, AdamW applies
lambda as decoupled decay with rate eta * lambda so both share the
stationarity condition lambda theta = -grad L. How close a fit got to it
is tracked as the alignment residual ||grad L + lambda theta||.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, DomainError
from .linalg import Rng
from .mlp import Dataset, MlpArch, MlpModel, _backward, _forward_state, split_params

_OPTIMIZERS = ("gd", "adamw")
_SCHEDULES = ("constant", "cosine")
_INIT_SCHEMES = ("glorot", "variance_scaling", "zeros")


@dataclass
class TrainConfig:
    optimizer: str = "adamw"
    learning_rate: float = 1e-3
    epochs: int = 10_000
    schedule: str = "cosine"
    lam: float = 1e-3
    init: str = "glorot"
    init_std: float = 1.0
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.optimizer not in _OPTIMIZERS:
            raise DomainError(f"optimizer must be one of {_OPTIMIZERS}, got {self.optimizer!r}")
        if self.schedule not in _SCHEDULES:
            raise DomainError(f"schedule must be one of {_SCHEDULES}, got {self.schedule!r}")
        if self.init not in _INIT_SCHEMES:
            raise DomainError(f"init must be one of {_INIT_SCHEMES}, got {self.init!r}")
        if self.learning_rate <= 0:
            raise DomainError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise DomainError(f"epochs must be >= 1, got {self.epochs}")
        if self.lam < 0:
            raise DomainError(f"lambda must be >= 0, got {self.lam}")


@dataclass
class TrainTrace:
    """Per-epoch scalars; index t is the state entering epoch t, the last
    row is the final iterate (step_size 0 there by convention)."""

    epoch: np.ndarray
    loss: np.ndarray
    reg_loss: np.ndarray
    step_size: np.ndarray
    alignment_residual: np.ndarray

    @property
    def initial_reg_loss(self) -> float:
        """L_lambda at the initialization, the C in capacity-based bounds."""
        return float(self.reg_loss[0])

    @property
    def final_alignment(self) -> float:
        return float(self.alignment_residual[-1])

    def to_csv(self, path, every: int = 1) -> None:
        """Write rows sampled every `every` epochs, always keeping the last."""
        if every < 1:
            raise DomainError(f"every must be >= 1, got {every}")
        last = len(self.epoch) - 1
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "loss", "reg_loss", "step_size", "alignment_residual"])
            for t in range(len(self.epoch)):
                if t % every == 0 or t == last:
                    writer.writerow(
                        [
                            int(self.epoch[t]),
                            str(float(self.loss[t])),
                            str(float(self.reg_loss[t])),
                            str(float(self.step_size[t])),
                            str(float(self.alignment_residual[t])),
                        ]
                    )


def init_params(arch: MlpArch, scheme: str, rng: Rng, std: float = 1.0) -> np.ndarray:
    """Draw a flat parameter vector; biases always start at zero.

    glorot: W_ij ~ N(0, 2 / (fan_in + fan_out)).
    variance_scaling: W_ij ~ N(0, std^2 / fan_in).
    zeros: everything zero (useful for convex warm starts).
    """
    if scheme not in _INIT_SCHEMES:
        raise DomainError(f"init must be one of {_INIT_SCHEMES}, got {scheme!r}")
    gen = rng.generator if isinstance(rng, Rng) else rng
    widths = arch.layer_widths
    pieces = []
    for k in range(arch.n_layers):
        fan_in, fan_out = widths[k], widths[k + 1]
        if scheme == "glorot":
            scale = math.sqrt(2.0 / (fan_in + fan_out))
        elif scheme == "variance_scaling":
            scale = std / math.sqrt(fan_in)
        else:
            scale = 0.0
        w = scale * gen.standard_normal((fan_out, fan_in))
        pieces.append(w.ravel())
        if arch.use_bias:
            pieces.append(np.zeros(fan_out))
    return np.concatenate(pieces)


def step_size_at(config: TrainConfig, epoch: int) -> float:
    """Learning rate for epoch t: constant, or the half-cosine ramp
    eta (1 + cos(pi t / epochs)) / 2 that starts at eta and ends near 0."""
    if config.schedule == "constant":
        return config.learning_rate
    return config.learning_rate * 0.5 * (1.0 + math.cos(math.pi * epoch / config.epochs))


def alignment_residual(model: MlpModel, data: Dataset, lam: float) -> float:
    """||grad L(theta) + lambda theta||, zero exactly at ridge stationarity."""
    from .mlp import grad_theta_loss

    return float(np.linalg.norm(grad_theta_loss(model, data, lam)))


def train(arch: MlpArch, data: Dataset, config: TrainConfig) -> tuple[MlpModel, TrainTrace]:
    """Run the configured optimizer; returns the fit and its full trace.

    Raises DivergenceError (carrying the last finite iterate) as soon as
    the loss or gradient stops being finite.
    """
    theta = init_params(arch, config.init, Rng(config.seed), config.init_std)
    lam = config.lam
    n = data.n
    epochs = config.epochs

    ep = np.arange(epochs + 1)
    tr_loss = np.empty(epochs + 1)
    tr_reg = np.empty(epochs + 1)
    tr_step = np.zeros(epochs + 1)
    tr_align = np.empty(epochs + 1)

    if config.optimizer == "adamw":
        m = np.zeros_like(theta)
        v = np.zeros_like(theta)

    x = data.inputs
    y = data.responses
    for t in range(epochs + 1):
        params = split_params(arch, theta)
        # overflow here is the divergence signal, not a defect; let it
        # reach the finiteness check below without a warning
        with np.errstate(over="ignore", invalid="ignore"):
            state = _forward_state(arch, params, x)
            residual = state.f - y
            data_loss = 0.5 * float(residual @ residual) / n
            grad = _backward(arch, params, state, residual / n)
            sq_theta = float(theta @ theta)
        align_vec = grad + lam * theta if lam > 0 else grad
        align = float(np.linalg.norm(align_vec))

        tr_loss[t] = data_loss
        tr_reg[t] = data_loss + 0.5 * lam * sq_theta
        tr_align[t] = align
        if not (math.isfinite(data_loss) and math.isfinite(align)):
            raise DivergenceError(
                f"non-finite loss or gradient at epoch {t}",
                theta=last_finite if t > 0 else theta.copy(),
                epoch=t,
            )
        if t == epochs:
            break
        last_finite = theta.copy()

        eta = step_size_at(config, t)
        tr_step[t] = eta
        if config.optimizer == "gd":
            theta = theta - eta * align_vec
        else:
            m = config.beta1 * m + (1.0 - config.beta1) * grad
            v = config.beta2 * v + (1.0 - config.beta2) * grad * grad
            mhat = m / (1.0 - config.beta1 ** (t + 1))
            vhat = v / (1.0 - config.beta2 ** (t + 1))
            theta = theta * (1.0 - eta * lam) - eta * mhat / (np.sqrt(vhat) + config.adam_eps)

    model = MlpModel(arch=arch, theta=theta)
    trace = TrainTrace(
        epoch=ep, loss=tr_loss, reg_loss=tr_reg, step_size=tr_step, alignment_residual=tr_align
    )
    return model, trace
