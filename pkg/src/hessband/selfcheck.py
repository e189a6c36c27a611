"""Fast internal consistency battery behind the `check` subcommand.

Each check recomputes a quantity through an independent route (finite
differences, dense linear algebra, a closed form) and compares it with
the production path. The battery is meant to finish in a few seconds and
to catch a broken install or a numerically miscompiled stack before a
long experiment is launched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bands import BoundParams, halfwidth_sub_gamma, weighted_norm
from .benchmark import BenchmarkSpec, MaternSpec, generate, matern_kernel
from .cg import cg_solve
from .linalg import Rng, dense_sym_solve
from .mlp import (
    Dataset,
    MlpArch,
    MlpModel,
    forward,
    grad_theta_f,
    grad_theta_loss,
    make_hvp_operator,
)
from .ridge import ridge_fit, ridge_weighted_norm
from .training import TrainConfig, train


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str


def _tiny_model(seed: int = 0, in_dim: int = 2, hidden=(5, 3)) -> MlpModel:
    arch = MlpArch(in_dim=in_dim, hidden=hidden, activation="tanh", use_bias=True)
    rng = Rng(seed)
    theta = 0.5 * rng.generator.standard_normal(arch.n_params)
    return MlpModel(arch=arch, theta=theta)


def _tiny_data(seed: int = 1, n: int = 12, d: int = 2) -> Dataset:
    rng = Rng(seed)
    inputs = rng.generator.standard_normal((n, d))
    responses = rng.generator.standard_normal(n)
    return Dataset(inputs=inputs, responses=responses, sigma=0.1)


def check_gradient_fd() -> CheckResult:
    model = _tiny_model()
    x = np.array([0.3, -0.7])
    grad = grad_theta_f(model, x)
    h = 1e-6
    fd = np.empty_like(grad)
    for j in range(grad.size):
        up = model.theta.copy()
        dn = model.theta.copy()
        up[j] += h
        dn[j] -= h
        fd[j] = (
            forward(MlpModel(model.arch, up), x[None, :])[0]
            - forward(MlpModel(model.arch, dn), x[None, :])[0]
        ) / (2 * h)
    err = np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-12)
    return CheckResult("gradient_vs_fd", err <= 1e-5, f"rel err {err:.3e}")


def check_hvp_fd() -> CheckResult:
    model = _tiny_model(seed=2)
    data = _tiny_data(seed=3)
    hvp = make_hvp_operator(model, data, lam=0.0)
    rng = Rng(4)
    v = rng.generator.standard_normal(model.arch.n_params)
    h = 1e-5
    g_up = grad_theta_loss(MlpModel(model.arch, model.theta + h * v), data, 0.0)
    g_dn = grad_theta_loss(MlpModel(model.arch, model.theta - h * v), data, 0.0)
    fd = (g_up - g_dn) / (2 * h)
    got = hvp(v)
    err = np.linalg.norm(got - fd) / max(np.linalg.norm(fd), 1e-12)
    return CheckResult("hvp_vs_fd", err <= 1e-4, f"rel err {err:.3e}")


def check_cg_dense() -> CheckResult:
    rng = Rng(5)
    q, _ = np.linalg.qr(rng.generator.standard_normal((40, 40)))
    a = q @ np.diag(np.geomspace(1.0, 1e3, 40)) @ q.T
    a = 0.5 * (a + a.T)
    b = rng.generator.standard_normal(40)
    direct = dense_sym_solve(a, b)
    iterative = cg_solve(lambda v: a @ v, b)
    err = np.linalg.norm(iterative.solution - direct) / np.linalg.norm(direct)
    return CheckResult("cg_vs_dense", err <= 1e-8, f"rel err {err:.3e}")


def check_weighted_norm_dense() -> CheckResult:
    model = _tiny_model(seed=6, hidden=(4,))
    data = _tiny_data(seed=7, n=10)
    x = np.array([0.2, 0.4])

    # dense route: g^T Hinv Ghat Hinv g assembled by finite differencing
    # the gradient map column by column
    p = model.arch.n_params
    hess = np.empty((p, p))
    h = 1e-5
    for j in range(p):
        up = model.theta.copy()
        dn = model.theta.copy()
        up[j] += h
        dn[j] -= h
        hess[:, j] = (
            grad_theta_loss(MlpModel(model.arch, up), data, 0.0)
            - grad_theta_loss(MlpModel(model.arch, dn), data, 0.0)
        ) / (2 * h)
    hess = 0.5 * (hess + hess.T)
    # shift past any residual negative curvature so CG and the dense
    # solve invert the same positive definite matrix
    lam = 0.5 - min(0.0, float(np.linalg.eigvalsh(hess).min()))
    hess = hess + lam * np.eye(p)
    grads = np.vstack([grad_theta_f(model, xi) for xi in data.inputs])
    gram = grads.T @ grads / data.n
    g = grad_theta_f(model, x)
    hinv_g = np.linalg.solve(hess, g)
    dense = float(hinv_g @ gram @ hinv_g)

    res = weighted_norm(model, data, lam, x)
    err = abs(res.value - dense) / max(abs(dense), 1e-12)
    return CheckResult("weighted_norm_vs_dense", err <= 1e-4, f"rel err {err:.3e}")


def check_ridge_closed_form() -> CheckResult:
    rng = Rng(8)
    inputs = rng.generator.standard_normal((30, 3))
    responses = rng.generator.standard_normal(30)
    lam = 0.2
    data = Dataset(inputs=inputs, responses=responses, sigma=0.1)
    arch = MlpArch(in_dim=3, hidden=(), activation="identity", use_bias=False)
    model = MlpModel(arch=arch, theta=ridge_fit(inputs, responses, lam))
    x = np.array([0.5, -1.0, 0.25])
    exact, _ = ridge_weighted_norm(inputs, lam, x)
    res = weighted_norm(model, data, lam, x)
    err = abs(res.value - exact) / max(abs(exact), 1e-12)
    return CheckResult("weighted_norm_vs_ridge", err <= 1e-8, f"rel err {err:.3e}")


def check_halfwidth_formula() -> CheckResult:
    params = BoundParams(sigma=0.3, delta=0.05, n=200, v=1.5, c=0.7)
    w = 2.25
    log_term = math.log(2.0 / params.delta)
    effective = w + math.sqrt(2.0 * params.v**2 * log_term) + params.c * log_term
    expected = params.sigma * math.sqrt(
        (math.pi**2 / 2.0) * log_term / params.n * effective
    ) + params.sigma**2 * (
        math.sqrt(2.0 * log_term) * params.v + (2.0 / 3.0) * log_term * params.c
    ) / params.n
    got = halfwidth_sub_gamma(w, params)
    err = abs(got - expected)
    return CheckResult("halfwidth_formula", err <= 1e-12, f"abs err {err:.3e}")


def check_matern_value() -> CheckResult:
    got = float(matern_kernel(MaternSpec(), 1.0))
    expected = (1.0 + math.sqrt(3.0)) * math.exp(-math.sqrt(3.0))
    err = abs(got - expected)
    return CheckResult("matern_value", err <= 1e-12, f"abs err {err:.3e}")


def check_benchmark_determinism() -> CheckResult:
    spec = BenchmarkSpec(d=2, n_train=20, n_val=5, n_test=10, seed=11)
    a = generate(spec)
    b = generate(spec)
    same = (
        np.array_equal(a.train.inputs, b.train.inputs)
        and np.array_equal(a.train.responses, b.train.responses)
        and np.array_equal(a.test_inputs, b.test_inputs)
        and np.array_equal(a.test_responses, b.test_responses)
    )
    return CheckResult("benchmark_determinism", same, "regenerated draw matches")


def check_training_stationarity() -> CheckResult:
    rng = Rng(12)
    inputs = rng.generator.standard_normal((25, 2))
    responses = inputs @ np.array([1.0, -2.0]) + 0.05 * rng.generator.standard_normal(25)
    data = Dataset(inputs=inputs, responses=responses, sigma=0.05)
    arch = MlpArch(in_dim=2, hidden=(), activation="identity", use_bias=False)
    config = TrainConfig(
        optimizer="gd", learning_rate=0.3, epochs=4000, schedule="constant",
        lam=0.1, init="zeros", seed=0,
    )
    model, trace = train(arch, data, config)
    closed = ridge_fit(inputs, responses, 0.1)
    err = np.linalg.norm(model.theta - closed) / np.linalg.norm(closed)
    ok = err <= 1e-6 and trace.final_alignment <= 1e-8
    return CheckResult(
        "training_stationarity",
        ok,
        f"rel err {err:.3e}, alignment {trace.final_alignment:.3e}",
    )


ALL_CHECKS = (
    check_gradient_fd,
    check_hvp_fd,
    check_cg_dense,
    check_weighted_norm_dense,
    check_ridge_closed_form,
    check_halfwidth_formula,
    check_matern_value,
    check_benchmark_determinism,
    check_training_stationarity,
)


def run_all(stream=None) -> bool:
    """Run every check, print one line each; True when all pass."""
    import sys

    out = stream if stream is not None else sys.stdout
    all_ok = True
    for fn in ALL_CHECKS:
        result = fn()
        all_ok &= result.ok
        status = "ok" if result.ok else "FAIL"
        print(f"{status:4s} {result.name:28s} {result.detail}", file=out)
    print("all checks passed" if all_ok else "some checks FAILED", file=out)
    return all_ok
