"""Pointwise confidence bands from inverse-Hessian weighted gradient norms.

The band half-width at a test point x is driven by

    W(x) = (1/n) sum_i ( grad f(x_i)^T h )^2,
    h    = (hess L(theta) + lambda I)^{-1} grad f(x; theta),

the empirical norm of grad f(x) in the sandwich metric
(H + lambda I)^{-1} Sigma_hat (H + lambda I)^{-1}. The linear solve is
matrix-free CG over exact Hessian-vector products; per point that costs
O(p) memory and O(n p) per iteration. When the fit interpolates
(lambda = 0, training loss ~ 0) the sandwich collapses and
W(x) = grad f(x)^T h is the cheaper equivalent.

Half-widths come in three flavours: the sub-gamma pointwise bound with
plug-in constants (v, c), a polynomial-in-1/delta variant, and a uniform
variant whose log term pays for a cover of the test domain.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .cg import CgConfig, CgResult, cg_solve
from .errors import DomainError, NumericError, StationarityError
from .mlp import (
    Dataset,
    MlpArch,
    MlpModel,
    batch_jvp,
    forward,
    grad_theta_f,
    lipschitz_bound,
    loss,
    make_hvp_operator,
)

HALF_PI_SQ = math.pi * math.pi / 2.0

# Training loss below this (with lambda = 0) counts as interpolation.
INTERPOLATION_LOSS_TOL = 1e-10

MODES = ("regularized", "interpolation")
BAND_MODES = ("pointwise_subgamma", "pointwise_poly", "uniform")
# canonical band-mode name kept short in CSVs
_MODE_CSV = {"pointwise_subgamma": "subgamma", "pointwise_poly": "poly", "uniform": "uniform"}


@dataclass
class BoundParams:
    """Everything the half-width formulas need besides W(x) itself.

    sigma is the known noise scale, delta the per-point failure budget,
    n the training sample size, and (v, c) the sub-gamma variance and
    scale proxies of W's deviation (0 in the linear case, 1 as the
    default plug-in for small networks).
    """

    sigma: float
    delta: float
    n: int
    v: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.sigma < 0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")
        if not 0.0 < self.delta <= 1.0:
            raise DomainError(f"delta must be in (0, 1], got {self.delta}")
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if self.v < 0 or self.c < 0:
            raise DomainError(f"v and c must be >= 0, got v={self.v}, c={self.c}")


@dataclass
class WeightedNormResult:
    value: float
    mode: str
    cg_iterations: int
    cg_residual: float
    curvature_flag: bool
    solution: np.ndarray


@dataclass
class ConfidenceBand:
    x: np.ndarray
    center: float
    lower: float
    upper: float
    half_width: float
    weighted_norm: WeightedNormResult | None
    band_mode: str
    delta: float


def select_mode(lam: float, training_loss: float) -> str:
    """Interpolation shortcut only when there is nothing to regularize:
    lambda exactly 0 and the fit sits on the data."""
    if lam == 0.0 and training_loss <= INTERPOLATION_LOSS_TOL:
        return "interpolation"
    return "regularized"


def _weighted_norm_with_op(
    apply_h,
    model: MlpModel,
    data: Dataset,
    x: np.ndarray,
    mode: str,
    cg_config: CgConfig,
) -> WeightedNormResult:
    g = grad_theta_f(model, x)
    res: CgResult = cg_solve(apply_h, g, cg_config)
    h = res.solution
    if mode == "interpolation":
        value = float(g @ h)
        scale = max(1.0, float(np.linalg.norm(g)) * float(np.linalg.norm(h)))
        if value < -1e-12 * scale:
            raise NumericError(
                f"interpolation-mode weighted norm is negative ({value}); CG did not converge"
            )
        value = max(value, 0.0)
    else:
        proj = batch_jvp(model, data.inputs, h)
        value = float(np.mean(proj * proj))
    return WeightedNormResult(
        value=value,
        mode=mode,
        cg_iterations=res.iterations,
        cg_residual=res.final_residual,
        curvature_flag=res.curvature_flag,
        solution=h,
    )


def weighted_norm(
    model: MlpModel,
    data: Dataset,
    lam: float,
    x: np.ndarray,
    cg_config: CgConfig | None = None,
    mode: str | None = None,
) -> WeightedNormResult:
    """W(x) and its solver diagnostics for one test point."""
    if mode is None:
        mode = select_mode(lam, loss(model, data))
    elif mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    apply_h = make_hvp_operator(model, data, lam)
    return _weighted_norm_with_op(apply_h, model, data, x, mode, cg_config or CgConfig())


# ---------------------------------------------------------------------------
# half-width formulas
# ---------------------------------------------------------------------------


def _halfwidth_core(effective_norm: float, params: BoundParams, t: float) -> float:
    """sigma sqrt( (pi^2/2) t / n * E ) + sigma^2 ( sqrt(2 t) v + (2/3) t c ) / n."""
    if effective_norm < 0:
        raise DomainError(f"effective norm must be >= 0, got {effective_norm}")
    if t < 0:
        raise DomainError(f"log term must be >= 0, got {t}")
    first = params.sigma * math.sqrt(HALF_PI_SQ * t / params.n * effective_norm)
    second = (
        params.sigma**2
        * (math.sqrt(2.0 * t) * params.v + (2.0 / 3.0) * t * params.c)
        / params.n
    )
    return first + second


def halfwidth_sub_gamma(w: float, params: BoundParams, logterm: float | None = None) -> float:
    """Pointwise half-width with the empirical substitution
    E = W + sqrt(2 v^2 t) + c t for the unobserved mean weighted norm."""
    if w < 0:
        raise DomainError(f"weighted norm must be >= 0, got {w}")
    t = math.log(2.0 / params.delta) if logterm is None else logterm
    if t < 0:
        raise DomainError(f"log term must be >= 0, got {t}")
    effective = w + math.sqrt(2.0 * params.v**2 * t) + params.c * t
    return _halfwidth_core(effective, params, t)


def halfwidth_sub_gamma_oracle(
    expected_sq_norm: float, params: BoundParams, logterm: float | None = None
) -> float:
    """Same bound with a caller-supplied E[ ||grad f||^2_M ] instead of the
    empirical substitution (linear models, pilot Monte-Carlo estimates)."""
    t = math.log(2.0 / params.delta) if logterm is None else logterm
    return _halfwidth_core(expected_sq_norm, params, t)


def halfwidth_poly(w: float, params: BoundParams) -> float:
    """Chebyshev-style width sigma sqrt( W / (delta n) ): polynomial in
    1/delta, no (v, c) constants, wider at small delta."""
    if w < 0:
        raise DomainError(f"weighted norm must be >= 0, got {w}")
    return params.sigma * math.sqrt(w / (params.delta * params.n))


def uniform_logterm(d: int, n: int, lip: float, delta: float) -> tuple[float, float]:
    """Log term d ln(3 n Lip / delta) paying for an epsilon-cover of the
    domain, plus the 1/n discretization slack to add to the half-width.
    Pass the first element as the logterm of halfwidth_sub_gamma."""
    if d < 1 or n < 1:
        raise DomainError(f"d and n must be >= 1, got d={d}, n={n}")
    if lip <= 0:
        raise DomainError(f"Lipschitz constant must be > 0, got {lip}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must be in (0, 1), got {delta}")
    return d * math.log(3.0 * n * lip / delta), 1.0 / n


def uniform_logterm_network(
    d: int, n: int, n_layers: int, initial_reg_loss: float, lam: float, delta: float
) -> tuple[float, float]:
    """Network form d ln(6 n / delta) + (K d / 2) ln(C / (lambda K)) with C
    the ridge loss at initialization; equals uniform_logterm evaluated at
    the capacity surrogate Lip = 2 (C / (lambda K))^(K/2)."""
    if d < 1 or n < 1:
        raise DomainError(f"d and n must be >= 1, got d={d}, n={n}")
    if n_layers < 1:
        raise DomainError(f"n_layers must be >= 1, got {n_layers}")
    if lam <= 0 or initial_reg_loss <= 0:
        raise DomainError("lambda and initial_reg_loss must be > 0")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must be in (0, 1), got {delta}")
    logterm = d * math.log(6.0 * n / delta) + 0.5 * n_layers * d * math.log(
        initial_reg_loss / (lam * n_layers)
    )
    return logterm, 1.0 / n


# ---------------------------------------------------------------------------
# bands
# ---------------------------------------------------------------------------


def default_lip(lam: float, n_layers: int, initial_reg_loss: float) -> float:
    """Capacity surrogate 2 (C / (lambda K))^(K/2) for the deviation
    f - E f, with C the ridge loss at initialization."""
    return 2.0 * lipschitz_bound(lam, n_layers, initial_reg_loss)


def _band_from_norm(
    center: float,
    x: np.ndarray,
    wres: WeightedNormResult,
    params: BoundParams,
    band_mode: str,
    lip: float | None,
    d: int,
) -> ConfidenceBand:
    if band_mode == "pointwise_subgamma":
        hw = halfwidth_sub_gamma(wres.value, params)
    elif band_mode == "pointwise_poly":
        hw = halfwidth_poly(wres.value, params)
    elif band_mode == "uniform":
        if lip is None:
            raise DomainError("uniform mode needs lip (see default_lip)")
        t, slack = uniform_logterm(d, params.n, lip, params.delta)
        hw = halfwidth_sub_gamma(wres.value, params, logterm=max(t, 0.0)) + slack
    else:
        raise DomainError(f"band mode must be one of {BAND_MODES}, got {band_mode!r}")
    return ConfidenceBand(
        x=np.asarray(x, dtype=np.float64),
        center=center,
        lower=center - hw,
        upper=center + hw,
        half_width=hw,
        weighted_norm=wres,
        band_mode=band_mode,
        delta=params.delta,
    )


def band(
    model: MlpModel,
    data: Dataset,
    lam: float,
    x: np.ndarray,
    params: BoundParams,
    cg_config: CgConfig | None = None,
    band_mode: str = "pointwise_subgamma",
    norm_mode: str | None = None,
    lip: float | None = None,
) -> ConfidenceBand:
    """Two-sided band for the point variance of the fit at x.

    The interval covers f(x; theta_hat) - E f(x; theta_hat) (noise-driven
    wobble of the training procedure); the approximation bias of the
    model class is deliberately not included.
    """
    wres = weighted_norm(model, data, lam, x, cg_config, norm_mode)
    center = float(forward(model, x)[0])
    return _band_from_norm(center, x, wres, params, band_mode, lip, data.d)


def band_batch(
    model: MlpModel,
    data: Dataset,
    lam: float,
    xs: np.ndarray,
    params: BoundParams,
    cg_config: CgConfig | None = None,
    band_mode: str = "pointwise_subgamma",
    norm_mode: str | None = None,
    lip: float | None = None,
    split_delta: bool = True,
) -> list[ConfidenceBand]:
    """Bands at m test points; with split_delta the per-point budget is
    delta / m so the whole batch fails with probability at most delta."""
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    m = xs.shape[0]
    if split_delta:
        params = replace(params, delta=params.delta / m)
    if norm_mode is None:
        norm_mode = select_mode(lam, loss(model, data))
    cg_config = cg_config or CgConfig()
    apply_h = make_hvp_operator(model, data, lam)
    centers = forward(model, xs)
    out = []
    for j in range(m):
        wres = _weighted_norm_with_op(apply_h, model, data, xs[j], norm_mode, cg_config)
        out.append(
            _band_from_norm(float(centers[j]), xs[j], wres, params, band_mode, lip, data.d)
        )
    return out


BAND_CSV_COLUMNS = [
    "method",
    "test_index",
    "x",
    "center",
    "lb",
    "ub",
    "half_width",
    "W",
    "cg_iters",
    "cg_residual",
    "curvature_flag",
    "mode",
]


def write_band_csv(path, bands: list[ConfidenceBand], method: str = "proposed") -> None:
    """One row per test point; the x column is written for 1-d inputs only,
    higher dimensions are keyed by test_index."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BAND_CSV_COLUMNS)
        for j, b in enumerate(bands):
            x_field = str(float(b.x.ravel()[0])) if b.x.size == 1 else ""
            if b.weighted_norm is not None:
                wn = b.weighted_norm
                tail = [
                    str(wn.value),
                    str(wn.cg_iterations),
                    str(wn.cg_residual),
                    str(int(wn.curvature_flag)),
                    _MODE_CSV.get(b.band_mode, b.band_mode) + ":" + wn.mode,
                ]
            else:
                tail = ["", "", "", "", ""]
            writer.writerow(
                [
                    method,
                    j,
                    x_field,
                    str(b.center),
                    str(b.lower),
                    str(b.upper),
                    str(b.half_width),
                    *tail,
                ]
            )


# ---------------------------------------------------------------------------
# sensitivity of the fit to single noise draws
# ---------------------------------------------------------------------------


@dataclass
class SensitivityResult:
    analytic: float
    empirical: float
    rel_error: float
    base_alignment: float


def sensitivity_check(
    arch: MlpArch,
    data: Dataset,
    config,
    x: np.ndarray,
    i: int,
    step: float = 1e-2,
    stationarity_tol: float = 1e-8,
    cg_config: CgConfig | None = None,
) -> SensitivityResult:
    """Compare d f(x; theta_hat) / d eps_i computed two ways.

    Analytic route: differentiate the stationarity condition, giving
    (sigma / n) grad f(x)^T (H + lambda I)^{-1} grad f(x_i). Empirical
    route: retrain with Y_i shifted by +/- sigma * step and take the
    centered difference. Each fit must reach the stationarity tolerance
    or the comparison is meaningless (StationarityError).
    """
    from .training import train

    if not 0 <= i < data.n:
        raise DomainError(f"sample index {i} out of range for n={data.n}")
    if step <= 0:
        raise DomainError(f"step must be > 0, got {step}")

    model, trace = train(arch, data, config)
    if trace.final_alignment > stationarity_tol:
        raise StationarityError(
            f"base fit alignment {trace.final_alignment:.3e} above {stationarity_tol:.1e}"
        )
    g_x = grad_theta_f(model, x)
    g_i = grad_theta_f(model, data.inputs[i])
    apply_h = make_hvp_operator(model, data, config.lam)
    res = cg_solve(apply_h, g_i, cg_config or CgConfig())
    analytic = data.sigma / data.n * float(g_x @ res.solution)

    preds = []
    for sign in (1.0, -1.0):
        shifted = data.responses.copy()
        shifted[i] += sign * data.sigma * step
        perturbed = Dataset(
            inputs=data.inputs, responses=shifted, sigma=data.sigma, truth=data.truth
        )
        pmodel, ptrace = train(arch, perturbed, config)
        if ptrace.final_alignment > stationarity_tol:
            raise StationarityError(
                f"perturbed fit alignment {ptrace.final_alignment:.3e} above {stationarity_tol:.1e}"
            )
        preds.append(float(forward(pmodel, x)[0]))
    empirical = (preds[0] - preds[1]) / (2.0 * step)
    denom = max(abs(empirical), 1e-6)
    return SensitivityResult(
        analytic=analytic,
        empirical=empirical,
        rel_error=abs(analytic - empirical) / denom,
        base_alignment=trace.final_alignment,
    )
