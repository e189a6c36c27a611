"""Fully-connected scalar-output networks with exact derivative operators.

The predictor is f(x) = w_K^T h_{K-1}, h_k = a(W_k h_{k-1} + b_k), h_0 = x:
hidden layers share one activation, the output layer is linear with a
single unit. Parameters live in one flat 64-bit vector so the whole
model can be treated as a point in R^p.

Derivatives are computed in closed form, vectorized over the batch:

- reverse pass for parameter gradients of f and of the squared loss,
- forward (directional) pass for batch Jacobian-vector products,
- a forward-over-reverse pass for exact Hessian-vector products of the
  regularized loss. Finite differences are never used here; they are
  reserved for test oracles.

The squared loss is L(theta) = (1/2n) sum_i (f(x_i) - Y_i)^2 and its
ridge form L_lambda = L + (lambda/2) ||theta||^2.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import DimensionError, DomainError, NumericError

# ---------------------------------------------------------------------------
# activations: value, first and second derivative, all elementwise
# ---------------------------------------------------------------------------


def _relu(u):
    return np.maximum(u, 0.0)


def _drelu(u):
    return (u > 0.0).astype(np.float64)


def _zero(u):
    return np.zeros_like(u)


def _dtanh(u):
    t = np.tanh(u)
    return 1.0 - t * t


def _d2tanh(u):
    t = np.tanh(u)
    return -2.0 * t * (1.0 - t * t)


def _softplus(u):
    return np.logaddexp(0.0, u)


def _d2softplus(u):
    s = expit(u)
    return s * (1.0 - s)


ACTIVATIONS = {
    "identity": (lambda u: u, lambda u: np.ones_like(u), _zero),
    "relu": (_relu, _drelu, _zero),
    "tanh": (np.tanh, _dtanh, _d2tanh),
    "softplus": (_softplus, expit, _d2softplus),
}


# ---------------------------------------------------------------------------
# architecture, model, dataset
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MlpArch:
    """Shape of the network: input width, hidden widths, activation, bias."""

    in_dim: int
    hidden: tuple[int, ...] = ()
    activation: str = "tanh"
    use_bias: bool = False

    def __post_init__(self):
        if self.in_dim < 1:
            raise DomainError(f"in_dim must be >= 1, got {self.in_dim}")
        if any(w < 1 for w in self.hidden):
            raise DomainError(f"hidden widths must be >= 1, got {self.hidden}")
        if self.activation not in ACTIVATIONS:
            raise DomainError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "hidden", tuple(int(w) for w in self.hidden))

    @property
    def layer_widths(self) -> tuple[int, ...]:
        return (self.in_dim, *self.hidden, 1)

    @property
    def n_layers(self) -> int:
        """Number of weight matrices K (hidden layers + output layer)."""
        return len(self.hidden) + 1

    @property
    def n_params(self) -> int:
        widths = self.layer_widths
        p = sum(widths[k + 1] * widths[k] for k in range(self.n_layers))
        if self.use_bias:
            p += sum(widths[1:])
        return p


@dataclass
class MlpModel:
    """An architecture plus one flat parameter vector."""

    arch: MlpArch
    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64).ravel()
        if self.theta.size != self.arch.n_params:
            raise DimensionError(
                f"theta has {self.theta.size} entries, arch needs {self.arch.n_params}"
            )


@dataclass
class Dataset:
    """Fixed-design regression sample: inputs, noisy responses, noise scale.

    When the noiseless truth is known (synthetic data) it rides along so
    coverage can be scored later; responses - truth are then the realized
    noise values sigma * eps.
    """

    inputs: np.ndarray
    responses: np.ndarray
    sigma: float
    truth: np.ndarray | None = None

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=np.float64))
        self.responses = np.asarray(self.responses, dtype=np.float64).ravel()
        if self.inputs.shape[0] != self.responses.size:
            raise DimensionError(
                f"{self.inputs.shape[0]} inputs vs {self.responses.size} responses"
            )
        if self.sigma < 0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")
        if self.truth is not None:
            self.truth = np.asarray(self.truth, dtype=np.float64).ravel()
            if self.truth.size != self.responses.size:
                raise DimensionError("truth length does not match responses")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]


# ---------------------------------------------------------------------------
# parameter packing
# ---------------------------------------------------------------------------


def split_params(arch: MlpArch, theta: np.ndarray) -> list[tuple[np.ndarray, np.ndarray | None]]:
    """View the flat vector as per-layer (W, b) pairs; W is (out, in)."""
    widths = arch.layer_widths
    out: list[tuple[np.ndarray, np.ndarray | None]] = []
    pos = 0
    for k in range(arch.n_layers):
        rows, cols = widths[k + 1], widths[k]
        w = theta[pos : pos + rows * cols].reshape(rows, cols)
        pos += rows * cols
        b = None
        if arch.use_bias:
            b = theta[pos : pos + rows]
            pos += rows
        out.append((w, b))
    return out


def _as_batch(arch: MlpArch, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(1, -1) if x.size == arch.in_dim else x.reshape(-1, 1)
    if x.ndim != 2 or x.shape[1] != arch.in_dim:
        raise DimensionError(f"inputs of width {x.shape[-1]} fed to in_dim {arch.in_dim}")
    return x


# ---------------------------------------------------------------------------
# forward / reverse / forward-over-reverse passes
# ---------------------------------------------------------------------------


class _ForwardState:
    """Cached activations of one batch: hs[k] is layer-k output, us the
    hidden pre-activations, f the predictions."""

    __slots__ = ("hs", "us", "f")

    def __init__(self, hs, us, f):
        self.hs = hs
        self.us = us
        self.f = f


def _forward_state(arch: MlpArch, params, x: np.ndarray) -> _ForwardState:
    act, _, _ = ACTIVATIONS[arch.activation]
    hs = [x]
    us = []
    h = x
    for w, b in params[:-1]:
        u = h @ w.T
        if b is not None:
            u = u + b
        us.append(u)
        h = act(u)
        hs.append(h)
    w, b = params[-1]
    f = h @ w.T
    if b is not None:
        f = f + b
    return _ForwardState(hs, us, f.ravel())


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Predictions f(x; theta) for a batch of inputs, shape (n,)."""
    x = _as_batch(model.arch, x)
    params = split_params(model.arch, model.theta)
    return _forward_state(model.arch, params, x).f


def _backward(arch: MlpArch, params, state: _ForwardState, cotangent: np.ndarray) -> np.ndarray:
    """Flat parameter gradient of sum_i cotangent_i * f(x_i; theta)."""
    _, dact, _ = ACTIVATIONS[arch.activation]
    k_out = arch.n_layers - 1
    grads_w = [None] * arch.n_layers
    grads_b = [None] * arch.n_layers
    c = cotangent[:, None]
    grads_w[k_out] = c.T @ state.hs[k_out]
    if arch.use_bias:
        grads_b[k_out] = c.sum(axis=0)
    g = c * params[k_out][0]
    for k in range(k_out - 1, -1, -1):
        delta = g * dact(state.us[k])
        grads_w[k] = delta.T @ state.hs[k]
        if arch.use_bias:
            grads_b[k] = delta.sum(axis=0)
        g = delta @ params[k][0]
    return _flatten(arch, grads_w, grads_b)


def _flatten(arch: MlpArch, grads_w, grads_b) -> np.ndarray:
    pieces = []
    for k in range(arch.n_layers):
        pieces.append(grads_w[k].ravel())
        if arch.use_bias:
            pieces.append(grads_b[k].ravel())
    return np.concatenate(pieces)


def grad_theta_f(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Flat gradient of the prediction at a single input x."""
    x = _as_batch(model.arch, x)
    if x.shape[0] != 1:
        raise DimensionError("grad_theta_f expects a single input point")
    params = split_params(model.arch, model.theta)
    state = _forward_state(model.arch, params, x)
    return _backward(model.arch, params, state, np.ones(1))


def batch_jvp(model: MlpModel, x: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Directional derivatives grad_theta f(x_i)^T z for the whole batch.

    One forward pass, O(n p); this is how weighted norms and Hessian
    products touch per-sample gradients without ever materializing them.
    """
    x = _as_batch(model.arch, x)
    params = split_params(model.arch, model.theta)
    zparams = split_params(model.arch, np.asarray(direction, dtype=np.float64).ravel())
    state = _forward_state(model.arch, params, x)
    return _r_forward(model.arch, params, zparams, state)[1]


def _r_forward(arch: MlpArch, params, zparams, state: _ForwardState):
    """Directional derivative of every layer output along a parameter
    direction; returns (list of R(h_k) for hidden layers incl. input, Rf,
    list of R(u_k))."""
    _, dact, _ = ACTIVATIONS[arch.activation]
    rhs = [np.zeros_like(state.hs[0])]
    rus = []
    rh = rhs[0]
    for k in range(arch.n_layers - 1):
        w, _ = params[k]
        zw, zb = zparams[k]
        ru = state.hs[k] @ zw.T + rh @ w.T
        if zb is not None:
            ru = ru + zb
        rus.append(ru)
        rh = dact(state.us[k]) * ru
        rhs.append(rh)
    w, _ = params[-1]
    zw, zb = zparams[-1]
    rf = state.hs[-1] @ zw.T + rh @ w.T
    if zb is not None:
        rf = rf + zb
    return rhs, rf.ravel(), rus


def _r_backward(
    arch: MlpArch,
    params,
    zparams,
    state: _ForwardState,
    rhs,
    rus,
    cotangent: np.ndarray,
    r_cotangent: np.ndarray,
) -> np.ndarray:
    """Directional derivative of the flat gradient sum_i c_i grad f_i along
    the parameter direction, with the cotangent itself varying as Rc."""
    _, dact, d2act = ACTIVATIONS[arch.activation]
    k_out = arch.n_layers - 1
    rg_w = [None] * arch.n_layers
    rg_b = [None] * arch.n_layers
    c = cotangent[:, None]
    rc = r_cotangent[:, None]
    rg_w[k_out] = rc.T @ state.hs[k_out] + c.T @ rhs[k_out]
    if arch.use_bias:
        rg_b[k_out] = rc.sum(axis=0)
    g = c * params[k_out][0]
    rg = rc * params[k_out][0] + c * zparams[k_out][0]
    for k in range(k_out - 1, -1, -1):
        du = dact(state.us[k])
        delta = g * du
        rdelta = rg * du + g * d2act(state.us[k]) * rus[k]
        rg_w[k] = rdelta.T @ state.hs[k] + delta.T @ rhs[k]
        if arch.use_bias:
            rg_b[k] = rdelta.sum(axis=0)
        g = delta @ params[k][0]
        rg = rdelta @ params[k][0] + delta @ zparams[k][0]
    return _flatten(arch, rg_w, rg_b)


# ---------------------------------------------------------------------------
# losses and their derivative operators
# ---------------------------------------------------------------------------


def loss(model: MlpModel, data: Dataset) -> float:
    """Mean squared residual with the 1/(2n) convention."""
    r = forward(model, data.inputs) - data.responses
    return float(0.5 * np.mean(r * r))


def loss_reg(model: MlpModel, data: Dataset, lam: float) -> float:
    """Ridge loss L + (lambda/2) ||theta||^2."""
    if lam < 0:
        raise DomainError(f"lambda must be >= 0, got {lam}")
    return loss(model, data) + 0.5 * lam * float(model.theta @ model.theta)


def grad_theta_loss(model: MlpModel, data: Dataset, lam: float) -> np.ndarray:
    """Flat gradient of the ridge loss, (1/n) sum r_i grad f_i + lambda theta."""
    if lam < 0:
        raise DomainError(f"lambda must be >= 0, got {lam}")
    x = _as_batch(model.arch, data.inputs)
    params = split_params(model.arch, model.theta)
    state = _forward_state(model.arch, params, x)
    r = state.f - data.responses
    g = _backward(model.arch, params, state, r / data.n)
    if lam > 0:
        g = g + lam * model.theta
    return g


def make_hvp_operator(model: MlpModel, data: Dataset, lam: float):
    """Return z -> (hess L + lambda I) z with the forward pass cached.

    The Hessian of the squared loss splits as
    (1/n) sum_i [ (grad f_i^T z) grad f_i + r_i (hess f_i) z ];
    both pieces come out of one forward-over-reverse sweep with cotangent
    r and cotangent-derivative Rf. Exact, no finite differences.
    """
    if lam < 0:
        raise DomainError(f"lambda must be >= 0, got {lam}")
    arch = model.arch
    x = _as_batch(arch, data.inputs)
    params = split_params(arch, model.theta)
    state = _forward_state(arch, params, x)
    residual = state.f - data.responses
    inv_n = 1.0 / data.n

    def apply(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64).ravel()
        if z.size != arch.n_params:
            raise DimensionError(f"direction has {z.size} entries, need {arch.n_params}")
        zparams = split_params(arch, z)
        rhs, rf, rus = _r_forward(arch, params, zparams, state)
        hv = _r_backward(arch, params, zparams, state, rhs, rus, residual, rf)
        hv *= inv_n
        if lam > 0:
            hv += lam * z
        return hv

    return apply


def hvp_loss(model: MlpModel, data: Dataset, lam: float, z: np.ndarray) -> np.ndarray:
    """One exact product (hess L(theta) + lambda I) z."""
    return make_hvp_operator(model, data, lam)(z)


def per_sample_grad_sq_norms(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """||grad_theta f(x_i)||^2 for every sample, without forming gradients.

    The per-sample gradient of W_k is the outer product delta_k h_{k-1}^T,
    whose squared norm factorizes as ||delta_k||^2 ||h_{k-1}||^2.
    """
    arch = model.arch
    x = _as_batch(arch, x)
    params = split_params(arch, model.theta)
    _, dact, _ = ACTIVATIONS[arch.activation]
    state = _forward_state(arch, params, x)
    bias = 1.0 if arch.use_bias else 0.0
    k_out = arch.n_layers - 1
    sq = (state.hs[k_out] ** 2).sum(axis=1) + bias
    g = np.broadcast_to(params[k_out][0], (x.shape[0], params[k_out][0].shape[1]))
    for k in range(k_out - 1, -1, -1):
        delta = g * dact(state.us[k])
        sq = sq + (delta**2).sum(axis=1) * ((state.hs[k] ** 2).sum(axis=1) + bias)
        g = delta @ params[k][0]
    return sq


def max_grad_norm(model: MlpModel, x: np.ndarray) -> float:
    """max_i ||grad_theta f(x_i)||, the B entering CG iteration estimates."""
    return float(np.sqrt(per_sample_grad_sq_norms(model, x).max()))


# ---------------------------------------------------------------------------
# Lipschitz surrogates
# ---------------------------------------------------------------------------


def operator_norm_product(model: MlpModel) -> float:
    """Product of layer spectral norms, an input-Lipschitz bound for
    1-Lipschitz activations."""
    params = split_params(model.arch, model.theta)
    out = 1.0
    for w, _ in params:
        out *= float(np.linalg.norm(w, 2))
    return out


def lipschitz_bound(lam: float, n_layers: int, loss_value: float) -> float:
    """Loss-level Lipschitz surrogate (L_lambda / (lambda K))^(K/2).

    Follows from AM-GM over layer norms once the ridge penalty is at most
    the data term; K is the number of weight matrices.
    """
    if lam <= 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    if n_layers < 1:
        raise DomainError(f"n_layers must be >= 1, got {n_layers}")
    if loss_value < 0:
        raise DomainError(f"loss_value must be >= 0, got {loss_value}")
    return float((loss_value / (lam * n_layers)) ** (n_layers / 2.0))


# ---------------------------------------------------------------------------
# checkpoint file format (documented in README: "File formats")
# ---------------------------------------------------------------------------

_MAGIC = b"MLPCKPT1"
_ACT_CODES = {"identity": 0, "relu": 1, "tanh": 2, "softplus": 3}
_ACT_NAMES = {v: k for k, v in _ACT_CODES.items()}


def save_model(path, model: MlpModel) -> None:
    """Write magic, layer widths, activation code, bias flag, then theta
    as little-endian float64. Byte layout is fixed across versions."""
    widths = model.arch.layer_widths
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(widths)))
        fh.write(struct.pack(f"<{len(widths)}I", *widths))
        fh.write(struct.pack("<BB", _ACT_CODES[model.arch.activation], int(model.arch.use_bias)))
        fh.write(struct.pack("<Q", model.theta.size))
        fh.write(model.theta.astype("<f8").tobytes())


def load_model(path) -> MlpModel:
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise NumericError(f"{path} is not a model checkpoint")
        (n_widths,) = struct.unpack("<I", fh.read(4))
        widths = struct.unpack(f"<{n_widths}I", fh.read(4 * n_widths))
        act_code, bias_flag = struct.unpack("<BB", fh.read(2))
        (p,) = struct.unpack("<Q", fh.read(8))
        theta = np.frombuffer(fh.read(8 * p), dtype="<f8").astype(np.float64)
    arch = MlpArch(
        in_dim=widths[0],
        hidden=tuple(widths[1:-1]),
        activation=_ACT_NAMES[act_code],
        use_bias=bool(bias_flag),
    )
    return MlpModel(arch=arch, theta=theta)
