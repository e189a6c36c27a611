"""Acceptance gate: eleven end-to-end criteria, one test each.

Every test prints (and appends to acceptance_report.txt) a single
verdict line carrying the measured quantities, the tolerance it was
held to, and the wall-time budget. The desk-scale experiment criteria
(8, 9) run the shipped configs through the real pipeline, so this
module is the slow part of the suite.
"""

from __future__ import annotations

import math
import time
from pathlib import Path

import numpy as np
import pytest

import conftest
from hessband.bands import (
    BoundParams,
    halfwidth_sub_gamma_oracle,
    sensitivity_check,
    weighted_norm,
)
from hessband.cg import CgConfig, cg_solve
from hessband.experiment import RESULTS_COLUMNS, load_config, run_experiment
from hessband.linalg import Rng, dense_sym_solve, quantile
from hessband.metrics import coverage, filtered_width, winkler
from hessband.mlp import Dataset, MlpArch, MlpModel, forward, grad_theta_f, hvp_loss
from hessband.mlp import grad_theta_loss, loss_reg, make_hvp_operator
from hessband.ridge import mc_coverage, ridge_weighted_norm
from hessband.training import TrainConfig, train

from oracles import (
    dense_hessian,
    dense_weighted_norm,
    fd_directional,
    fd_gradient,
    random_model,
)

ROOT = Path(__file__).resolve().parents[1]
REPORT_PATH = ROOT / "acceptance_report.txt"


def _record(num: int, ok: bool, elapsed: float, limit: float, detail: str) -> None:
    verdict = "PASS" if ok and elapsed < limit else "FAIL"
    line = f"criterion {num:02d} {verdict} ({elapsed:.1f}s / limit {limit:.0f}s) {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    REPORT_PATH.write_text("\n".join(conftest.ACCEPTANCE_LINES) + "\n")
    print(line)
    assert ok, line
    assert elapsed < limit, line


def _rel(got: np.ndarray | float, want: np.ndarray | float) -> float:
    got = np.asarray(got, dtype=np.float64)
    want = np.asarray(want, dtype=np.float64)
    scale = float(np.linalg.norm(want.ravel()))
    return float(np.linalg.norm((got - want).ravel())) / max(scale, 1e-300)


def _random_tanh_net(rng: np.random.Generator) -> tuple[MlpModel, Dataset, float]:
    in_dim = int(rng.integers(1, 5))
    if rng.random() < 0.5:
        hidden = (int(rng.integers(2, 61)),)
    else:
        hidden = (int(rng.integers(2, 15)), int(rng.integers(2, 11)))
    model = random_model(rng, in_dim, hidden, use_bias=bool(rng.random() < 0.5))
    assert model.arch.n_params <= 500
    n = int(rng.integers(4, 11))
    data = Dataset(
        inputs=rng.standard_normal((n, in_dim)),
        responses=rng.standard_normal(n),
        sigma=0.1,
    )
    lam = 0.05 if rng.random() < 0.5 else 0.0
    return model, data, lam


def test_criterion_01_gradients_and_hvps_match_finite_differences():
    t0 = time.time()
    rng = np.random.default_rng(10)
    worst_grad = 0.0
    worst_hvp = 0.0
    for _ in range(100):
        model, data, lam = _random_tanh_net(rng)
        analytic = grad_theta_loss(model, data, lam)
        fd = fd_gradient(
            lambda th: loss_reg(MlpModel(arch=model.arch, theta=th), data, lam),
            model.theta,
        )
        worst_grad = max(worst_grad, _rel(analytic, fd))
        z = rng.standard_normal(model.theta.size)
        z /= np.linalg.norm(z)
        hv = hvp_loss(model, data, lam, z)
        hv_fd = fd_directional(
            lambda th: grad_theta_loss(MlpModel(arch=model.arch, theta=th), data, lam),
            model.theta,
            z,
        )
        worst_hvp = max(worst_hvp, _rel(hv, hv_fd))
    _record(
        1,
        worst_grad <= 1e-5 and worst_hvp <= 1e-4,
        time.time() - t0,
        60,
        f"100 tanh nets p<=500: grad vs central FD max rel {worst_grad:.2e} "
        f"(tol 1e-5), hvp vs grad FD max rel {worst_hvp:.2e} (tol 1e-4)",
    )


def test_criterion_02_cg_matches_dense_solver():
    t0 = time.time()
    rng = np.random.default_rng(20)
    worst = 0.0
    for _ in range(20):
        dim = int(rng.integers(20, 201))
        q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
        eigs = 10.0 ** rng.uniform(-1.5, 1.5, size=dim)
        a = (q * eigs) @ q.T
        a = 0.5 * (a + a.T)
        b = rng.standard_normal(dim)
        want = dense_sym_solve(a, b)
        res = cg_solve(lambda v: a @ v, b, CgConfig(max_iters=20 * dim, tol=1e-13))
        assert res.converged
        worst = max(worst, _rel(res.solution, want))
    worst_net = 0.0
    for _ in range(5):
        model, data, _ = _random_tanh_net(rng)
        while model.arch.n_params > 60:
            model, data, _ = _random_tanh_net(rng)
        hess = dense_hessian(model, data, 0.0)
        # shift past the spectrum's negative tail so both routes invert a PD matrix
        lam = 0.5 - min(0.0, float(np.linalg.eigvalsh(hess).min()))
        g = rng.standard_normal(model.arch.n_params)
        want = dense_sym_solve(hess + lam * np.eye(hess.shape[0]), g)
        res = cg_solve(
            make_hvp_operator(model, data, lam), g, CgConfig(max_iters=2000, tol=1e-13)
        )
        assert res.converged
        worst_net = max(worst_net, _rel(res.solution, want))
    _record(
        2,
        worst <= 1e-8 and worst_net <= 1e-8,
        time.time() - t0,
        30,
        f"20 SPD systems <=200x200 max rel {worst:.2e}, 5 tiny-net Hessians "
        f"max rel {worst_net:.2e} (tol 1e-8)",
    )


def test_criterion_03_weighted_norm_matches_dense_and_ridge_oracles():
    t0 = time.time()
    rng = np.random.default_rng(30)
    worst_dense = 0.0
    for _ in range(10):
        in_dim = int(rng.integers(1, 3))
        hidden = (int(rng.integers(3, 7)),)
        model = random_model(rng, in_dim, hidden, use_bias=True)
        assert model.arch.n_params <= 60
        n = int(rng.integers(5, 12))
        data = Dataset(
            inputs=rng.standard_normal((n, in_dim)),
            responses=rng.standard_normal(n),
            sigma=0.1,
        )
        hess = dense_hessian(model, data, 0.0)
        lam = 0.3 - min(0.0, float(np.linalg.eigvalsh(hess).min()))
        x = rng.standard_normal(in_dim)
        want = dense_weighted_norm(model, data, lam, x)
        got = weighted_norm(
            model, data, lam, x, cg_config=CgConfig(max_iters=2000, tol=1e-13)
        )
        assert not got.curvature_flag
        worst_dense = max(worst_dense, abs(got.value - want) / max(abs(want), 1e-300))
    worst_ridge = 0.0
    for _ in range(10):
        d = int(rng.integers(2, 6))
        n = int(rng.integers(6, 26))
        inputs = rng.standard_normal((n, d))
        data = Dataset(inputs=inputs, responses=rng.standard_normal(n), sigma=0.1)
        arch = MlpArch(in_dim=d, hidden=(), activation="identity", use_bias=False)
        model = MlpModel(arch=arch, theta=rng.standard_normal(d))
        lam = float(10.0 ** rng.uniform(-2, 0))
        x = rng.standard_normal(d)
        exact, _ = ridge_weighted_norm(inputs, lam, x)
        got = weighted_norm(
            model, data, lam, x, cg_config=CgConfig(max_iters=2000, tol=1e-13)
        )
        worst_ridge = max(worst_ridge, abs(got.value - exact) / max(abs(exact), 1e-300))
    _record(
        3,
        worst_dense <= 1e-6 and worst_ridge <= 1e-6,
        time.time() - t0,
        60,
        f"10 tiny nets vs dense evaluation max rel {worst_dense:.2e}, 10 linear "
        f"models vs ridge closed form max rel {worst_ridge:.2e} (tol 1e-6)",
    )


def test_criterion_04_gd_linear_reaches_stationarity_with_monotone_loss():
    t0 = time.time()
    rng = np.random.default_rng(40)
    arch = MlpArch(in_dim=3, hidden=(), activation="identity", use_bias=False)
    data = Dataset(
        inputs=rng.standard_normal((30, 3)),
        responses=rng.standard_normal(30),
        sigma=0.1,
    )
    config = TrainConfig(
        optimizer="gd",
        learning_rate=0.1,
        epochs=4000,
        schedule="constant",
        lam=0.3,
        init="zeros",
    )
    _, trace = train(arch, data, config)
    align = trace.final_alignment
    increases = int(np.sum(np.diff(trace.reg_loss) > 1e-12 * max(1.0, trace.reg_loss[0])))
    _record(
        4,
        align <= 1e-8 and increases == 0,
        time.time() - t0,
        30,
        f"gd on a linear model: alignment residual {align:.2e} (tol 1e-8), "
        f"regularized-loss increases {increases} (need 0)",
    )


def test_criterion_05_sensitivity_analytic_matches_retraining():
    t0 = time.time()
    rng = np.random.default_rng(11)
    arch = MlpArch(in_dim=1, hidden=(8,), activation="tanh", use_bias=False)
    assert arch.n_params <= 40
    x_train = rng.uniform(-2.0, 2.0, size=(20, 1))
    responses = np.sin(x_train[:, 0]) + 0.1 * rng.standard_normal(20)
    data = Dataset(inputs=x_train, responses=responses, sigma=0.1)
    config = TrainConfig(
        optimizer="gd",
        learning_rate=0.5,
        epochs=25_000,
        schedule="constant",
        lam=0.1,
        init="glorot",
        seed=1,
    )
    pair_rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(5):
        x = np.array([pair_rng.uniform(-2.0, 2.0)])
        i = int(pair_rng.integers(0, 20))
        result = sensitivity_check(arch, data, config, x, i=i, stationarity_tol=1e-8)
        worst = max(
            worst,
            abs(result.analytic - result.empirical) / (abs(result.empirical) + 1e-6),
        )
    _record(
        5,
        worst <= 1e-2,
        time.time() - t0,
        300,
        f"tanh net p=16 n=20 lam=0.1, 5 random (x, i) pairs, analytic vs "
        f"retraining FD max rel {worst:.2e} (tol 1e-2 with 1e-6 floor)",
    )


def test_criterion_06_linear_interval_monte_carlo_coverage():
    t0 = time.time()
    inputs = np.array(
        [
            [1.0, 0.0],
            [0.0, 1.0],
            [1.0, 1.0],
            [1.0, -1.0],
            [0.5, 2.0],
            [2.0, 0.5],
            [-1.0, 0.5],
            [0.3, -1.2],
        ]
    )
    theta_star = np.array([0.7, -0.4])
    x = np.array([1.0, 0.5])
    results = []
    ok = True
    for delta in (0.1, 0.05, 0.01):
        cov = mc_coverage(inputs, theta_star, 0.2, x, 0.5, delta, 2000, Rng(321))
        slack = 3.0 * math.sqrt(delta * (1.0 - delta) / 2000.0)
        ok = ok and cov >= 1.0 - delta - slack
        results.append(f"delta={delta:g}: {cov:.4f} (need >= {1.0 - delta - slack:.4f})")
    _record(
        6,
        ok,
        time.time() - t0,
        60,
        "2000 noise redraws on a fixed 2-d design, coverage within 3 binomial "
        "standard errors of target: " + "; ".join(results),
    )


def test_criterion_07_nonlinear_monte_carlo_with_pilot_oracle_halfwidth():
    t0 = time.time()
    arch = MlpArch(in_dim=1, hidden=(4,), activation="tanh", use_bias=False)
    design = np.linspace(-2.0, 2.0, 20).reshape(-1, 1)
    truth = np.sin(design[:, 0])
    sigma, lam, delta = 0.1, 0.1, 0.05
    xs = np.array([[-1.2], [0.5], [1.7]])
    cg = CgConfig(max_iters=200, tol=1e-12)

    def fit(eps: np.ndarray):
        data = Dataset(inputs=design, responses=truth + sigma * eps, sigma=sigma)
        config = TrainConfig(
            optimizer="gd",
            learning_rate=0.5,
            epochs=3000,
            schedule="constant",
            lam=lam,
            init="glorot",
            seed=3,
        )
        model, trace = train(arch, data, config)
        return model, data, trace.final_alignment

    pilot_rng = np.random.default_rng(101)
    norms = np.zeros((500, len(xs)))
    preds = np.zeros((500, len(xs)))
    worst_align = 0.0
    for k in range(500):
        model, data, align = fit(pilot_rng.standard_normal(20))
        worst_align = max(worst_align, align)
        preds[k] = forward(model, xs)
        for j, x in enumerate(xs):
            res = weighted_norm(model, data, lam, x, cg_config=cg)
            assert not res.curvature_flag
            norms[k, j] = res.value
    expected_sq = norms.mean(axis=0)
    mean_pred = preds.mean(axis=0)
    params = BoundParams(sigma=sigma, delta=delta, n=20, v=0.0, c=0.0)
    halfwidths = np.array([halfwidth_sub_gamma_oracle(e, params) for e in expected_sq])

    eval_rng = np.random.default_rng(202)
    hits = np.zeros(len(xs))
    for _ in range(500):
        model, _, align = fit(eval_rng.standard_normal(20))
        worst_align = max(worst_align, align)
        hits += np.abs(forward(model, xs) - mean_pred) <= halfwidths
    freqs = hits / 500.0
    _record(
        7,
        bool(np.all(freqs >= 1.0 - delta)),
        time.time() - t0,
        600,
        f"tiny tanh net, 500 pilot + 500 eval redraws, v=c=0: frequencies "
        f"{np.round(freqs, 4).tolist()} at x in {xs.ravel().tolist()} "
        f"(need >= {1.0 - delta}), max alignment {worst_align:.1e}",
    )


def _mean_coverage_by_method(rows: list[list[str]]) -> dict[str, float]:
    idx_method = RESULTS_COLUMNS.index("method")
    idx_cov = RESULTS_COLUMNS.index("coverage")
    sums: dict[str, list[float]] = {}
    for row in rows:
        sums.setdefault(row[idx_method], []).append(float(row[idx_cov]))
    return {method: sum(vals) / len(vals) for method, vals in sums.items()}


def test_criterion_08_proposed_coverage_beats_bootstrap(tmp_path):
    t0 = time.time()
    config = load_config(ROOT / "configs" / "desk_d10.yaml")
    result = run_experiment(config, tmp_path / "d10")
    assert not result.failures
    means = _mean_coverage_by_method(result.rows)
    gap = means["proposed"] - means["bootstrap"]
    _record(
        8,
        gap >= 0.10 and means["proposed"] >= 0.85,
        time.time() - t0,
        1800,
        f"d=10 n=100, 3 trials, 2000 epochs, B=5: proposed {means['proposed']:.3f} "
        f"vs bootstrap {means['bootstrap']:.3f}, gap {gap:.3f} "
        f"(need >= 0.10 and proposed >= 0.85)",
    )


def _region_medians(path: Path) -> tuple[float, float]:
    rows = np.genfromtxt(path, delimiter=",", names=True)
    x = rows["x"]
    hw = rows["half_width"]
    cut = np.abs(x) < 0.5
    # in-support = the N(0,1) bulk outside the cut-out box, |x| in (0.5, 2]
    in_support = (np.abs(x) > 0.5) & (np.abs(x) <= 2.0)
    return float(np.median(hw[cut])), float(np.median(hw[in_support]))


def test_criterion_09_bands_widen_over_cutout_and_tighten_with_n(tmp_path):
    t0 = time.time()
    config = load_config(ROOT / "configs" / "desk_d1.yaml")
    result = run_experiment(config, tmp_path / "d1")
    assert not result.failures
    cut_100, in_100 = _region_medians(
        tmp_path / "d1" / "bands_proposed_t0_n100_lam0.001.csv"
    )
    cut_1000, in_1000 = _region_medians(
        tmp_path / "d1" / "bands_proposed_t0_n1000_lam0.001.csv"
    )
    ratio_100 = cut_100 / in_100
    ratio_1000 = cut_1000 / in_1000
    _record(
        9,
        ratio_100 >= 1.5 and ratio_1000 >= 1.5 and in_1000 < in_100,
        time.time() - t0,
        1800,
        f"d=1 cut-out/in-support median width ratio {ratio_100:.2f} at n=100 and "
        f"{ratio_1000:.2f} at n=1000 (need >= 1.5); in-support median "
        f"{in_100:.4f} -> {in_1000:.4f} (need decreasing)",
    )


def test_criterion_10_metric_examples_reproduce_exactly():
    t0 = time.time()
    zero = np.zeros(1)
    one = np.ones(1)

    # winkler: stated examples, held to the defining formula's own arithmetic
    assert winkler(zero, one, np.array([0.5]), 0.1) == 1.0
    got = winkler(zero, one, np.array([1.2]), 0.1)
    assert got == 1.0 + (2.0 / 0.1) * max(1.2 - 1.0, 0.0)
    assert got == pytest.approx(5.0, rel=1e-12)
    got = winkler(zero, one, np.array([-0.1]), 0.5)
    assert got == 1.0 + (2.0 / 0.5) * max(0.0 - (-0.1), 0.0)
    assert got == pytest.approx(1.4, rel=1e-12)

    # coverage: midpoints in, everything above, half in
    assert coverage(np.zeros(3), np.ones(3), np.full(3, 0.5)) == 1.0
    assert coverage(np.zeros(3), np.ones(3), np.full(3, 2.0)) == 0.0
    assert coverage(np.zeros(2), np.ones(2), np.array([0.5, 2.0])) == 0.5

    # filtered_width: coinciding sets keep everything
    points = np.array([[0.0], [1.0], [2.0], [3.0]])
    avg, med, count = filtered_width(
        np.zeros(4), np.array([1.0, 2.0, 3.0, 4.0]), points, points
    )
    assert (avg, med, count) == (2.5, 2.0, 4)
    # far outlier beyond the 99th-percentile match distance drops its index
    test_pts = np.linspace(0.0, 199.0, 200).reshape(-1, 1)
    train_pts = np.vstack([test_pts[:-1] + 0.01, [[2000.0]]])
    widths_ub = np.arange(200, dtype=np.float64)
    avg, med, count = filtered_width(np.zeros(200), widths_ub, train_pts, test_pts)
    assert count == 199  # index 199 matched only by the outlier, so excluded
    assert (avg, med) == (99.0, 99.0)
    # hand-enumerated 5-train/5-test nearest pairs: retained {0, 1, 3, 4}
    test_pts = np.array([[0.0], [1.0], [2.0], [3.0], [10.0]])
    train_pts = np.array([[0.1], [0.9], [1.1], [2.9], [30.0]])
    avg, med, count = filtered_width(
        np.zeros(5), np.array([1.0, 2.0, 3.0, 4.0, 5.0]), train_pts, test_pts
    )
    assert (avg, med, count) == (3.0, 2.0, 4)

    # quantile: nearest-rank examples
    assert quantile(np.array([1.0, 2.0, 3.0, 4.0]), 0.5) == 2.0
    for q in (0.0, 0.3, 1.0):
        assert quantile(np.array([5.0]), q) == 5.0
    assert quantile(np.array([3.0, 1.0, 2.0]), 0.99) == 3.0

    _record(
        10,
        True,
        time.time() - t0,
        5,
        "winkler, coverage, filtered_width, quantile reproduce all worked "
        "examples exactly",
    )


def test_criterion_11_smoke_config_runs_are_byte_identical(tmp_path):
    t0 = time.time()
    config = load_config(ROOT / "configs" / "smoke.yaml")
    first = run_experiment(config, tmp_path / "a")
    second = run_experiment(config, tmp_path / "b")
    assert not first.failures and not second.failures
    identical = first.results_path.read_bytes() == second.results_path.read_bytes()
    extras = sorted(p.name for p in (tmp_path / "a").iterdir())
    mismatched = [
        name
        for name in extras
        if (tmp_path / "a" / name).read_bytes() != (tmp_path / "b" / name).read_bytes()
    ]
    _record(
        11,
        identical and not mismatched,
        time.time() - t0,
        300,
        f"two smoke runs: results.csv byte-identical={identical}, "
        f"{len(extras)} files compared, mismatches {mismatched or 'none'}",
    )
