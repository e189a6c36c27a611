"""Experiment driver: config in, tables and figure data out.

One experiment is a grid over (trial seed, training size, method) on the
synthetic Matern benchmark. Every cell regenerates its dataset from the
config seed (design, truth, and noise streams derived separately), fits
the method, bands the test inputs, and contributes one row to
results.csv. A sweep repeats the grid over a lambda list and additionally
scores validation Winkler for the selection table.

All output is CSV with fixed column orders; identical config plus seeds
reproduces the files byte for byte (wallclock is zeroed when the config
sets deterministic_timing).

Config files are YAML mappings with scalar fields and short lists; every
recognized key and its default lives in CONFIG_DEFAULTS, and unknown keys
are rejected rather than ignored so typos cannot silently run the wrong
experiment.
"""

from __future__ import annotations

import csv
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .bands import (
    BAND_MODES,
    BoundParams,
    ConfidenceBand,
    band_batch,
    default_lip,
    write_band_csv,
)
from .benchmark import BenchmarkData, BenchmarkSpec, MaternSpec, generate
from .bootstrap import bands_from_ensemble, fit_replicates
from .cg import CgConfig
from .errors import ConfigError, HessbandError
from .linalg import derive_seed
from .metrics import score_bands, winkler as winkler_score
from .mlp import MlpArch
from .training import TrainConfig, train

RESULTS_COLUMNS = [
    "trial",
    "method",
    "d",
    "n_train",
    "lambda",
    "epochs",
    "coverage",
    "avg_width",
    "median_width",
    "winkler",
    "test_mse",
    "mean_cg_iters",
    "mean_alignment_residual",
    "wallclock_s",
]

FAILURE_COLUMNS = ["trial", "method", "n_train", "lambda", "stage", "error"]
SWEEP_VAL_COLUMNS = ["trial", "method", "n_train", "lambda", "val_winkler"]
SELECTION_COLUMNS = ["method", "lambda", "mean_val_winkler"]
FIG1_COLUMNS = ["method", "n_train", "trial", "x", "truth", "center", "lb", "ub"]
FIG2_COLUMNS = [
    "method",
    "lambda",
    "median_width_mean",
    "median_width_std",
    "coverage_mean",
    "coverage_std",
]

METHODS = ("proposed", "bootstrap")

# every legal config key with its default; _REQUIRED marks a key the file
# must set, None a default resolved from the other keys
_REQUIRED = object()
CONFIG_DEFAULTS: dict[str, object] = {
    "name": "experiment",
    "d": _REQUIRED,
    "n_train": _REQUIRED,
    "n_val": None,  # defaults to the run's n_train
    "n_test": None,  # defaults to 512 (d = 1) or 500 (d > 1)
    "sigma": 0.1,
    "cutout": 0.5,
    "test_mode": None,  # defaults to grid for d = 1, gaussian otherwise
    "grid_lo": -3.0,
    "grid_hi": 3.0,
    "anchors": 256,
    "length_scale": 1.0,
    "output_scale": 1.0,
    "trials": 1,
    "seed": 0,
    "methods": ["proposed", "bootstrap"],
    "hidden": [64],
    "activation": "tanh",
    "use_bias": True,
    "init": "glorot",
    "init_std": 1.0,
    "optimizer": "adamw",
    "learning_rate": 1e-3,
    "schedule": "cosine",
    "epochs": 1000,
    "lam": 1e-3,
    "delta": 0.01,
    "v": 1.0,
    "c": 1.0,
    "band_mode": "pointwise_subgamma",
    "cg_max_iters": 1000,
    "cg_tol": 1e-12,
    "replicates": 10,
    "alpha": 0.01,
    "share_init": False,
    "winkler_alpha": 0.01,
    "trace_every": 0,
    "deterministic_timing": False,
    "workers": 1,
}


@dataclass
class ExperimentConfig:
    """Validated experiment settings; see CONFIG_DEFAULTS for the keys."""

    values: dict[str, object]

    def __getattr__(self, key: str):
        try:
            return self.values[key]
        except KeyError:
            raise AttributeError(key) from None


def _type_check(key: str, value, kinds, predicate=None, hint: str = ""):
    if not isinstance(value, kinds) or isinstance(value, bool) and bool not in (
        kinds if isinstance(kinds, tuple) else (kinds,)
    ):
        raise ConfigError(f"config key {key!r}: expected {hint or kinds}, got {value!r}")
    if predicate is not None and not predicate(value):
        raise ConfigError(f"config key {key!r}: invalid value {value!r} ({hint})")


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML experiment config."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping, got {type(raw).__name__}")

    unknown = sorted(set(raw) - set(CONFIG_DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    missing = sorted(
        k for k, v in CONFIG_DEFAULTS.items() if v is _REQUIRED and k not in raw
    )
    if missing:
        raise ConfigError(f"missing required config keys: {', '.join(missing)}")

    values = {k: raw.get(k, v) for k, v in CONFIG_DEFAULTS.items()}
    return ExperimentConfig(values=_validated_values(values))


def _validated_values(v: dict[str, object]) -> dict[str, object]:
    num = (int, float)
    _type_check("name", v["name"], str)
    _type_check("d", v["d"], int, lambda x: x >= 1, ">= 1")
    if isinstance(v["n_train"], int):
        v["n_train"] = [v["n_train"]]
    _type_check("n_train", v["n_train"], list, lambda xs: len(xs) > 0, "non-empty list")
    for n in v["n_train"]:
        _type_check("n_train", n, int, lambda x: x >= 1, ">= 1")
    if v["n_val"] is not None:
        _type_check("n_val", v["n_val"], int, lambda x: x >= 0, ">= 0")
    if v["test_mode"] is None:
        v["test_mode"] = "grid" if v["d"] == 1 else "gaussian"
    if v["n_test"] is None:
        v["n_test"] = 512 if v["d"] == 1 else 500
    _type_check("n_test", v["n_test"], int, lambda x: x >= 1, ">= 1")
    _type_check("sigma", v["sigma"], num, lambda x: x >= 0, ">= 0")
    _type_check("cutout", v["cutout"], num, lambda x: x >= 0, ">= 0")
    _type_check("test_mode", v["test_mode"], str, lambda x: x in ("gaussian", "grid"),
                "gaussian or grid")
    if v["test_mode"] == "grid" and v["d"] != 1:
        raise ConfigError("test_mode 'grid' needs d = 1")
    _type_check("grid_lo", v["grid_lo"], num)
    _type_check("grid_hi", v["grid_hi"], num)
    _type_check("anchors", v["anchors"], int, lambda x: x >= 1, ">= 1")
    _type_check("length_scale", v["length_scale"], num, lambda x: x > 0, "> 0")
    _type_check("output_scale", v["output_scale"], num, lambda x: x > 0, "> 0")
    _type_check("trials", v["trials"], int, lambda x: x >= 1, ">= 1")
    _type_check("seed", v["seed"], int)
    _type_check("methods", v["methods"], list, lambda xs: len(xs) > 0, "non-empty list")
    for m in v["methods"]:
        if m not in METHODS:
            raise ConfigError(f"config key 'methods': unknown method {m!r}")
    if isinstance(v["hidden"], int):
        v["hidden"] = [v["hidden"]]
    _type_check("hidden", v["hidden"], list)
    for h in v["hidden"]:
        _type_check("hidden", h, int, lambda x: x >= 1, ">= 1")
    _type_check("activation", v["activation"], str)
    _type_check("use_bias", v["use_bias"], bool, hint="bool")
    _type_check("init", v["init"], str)
    _type_check("init_std", v["init_std"], num, lambda x: x > 0, "> 0")
    _type_check("optimizer", v["optimizer"], str)
    _type_check("learning_rate", v["learning_rate"], num, lambda x: x > 0, "> 0")
    _type_check("schedule", v["schedule"], str)
    _type_check("epochs", v["epochs"], int, lambda x: x >= 1, ">= 1")
    _type_check("lam", v["lam"], num, lambda x: x >= 0, ">= 0")
    _type_check("delta", v["delta"], num, lambda x: 0 < x <= 1, "in (0, 1]")
    _type_check("v", v["v"], num, lambda x: x >= 0, ">= 0")
    _type_check("c", v["c"], num, lambda x: x >= 0, ">= 0")
    _type_check("band_mode", v["band_mode"], str, lambda x: x in BAND_MODES,
                f"one of {BAND_MODES}")
    _type_check("cg_max_iters", v["cg_max_iters"], int, lambda x: x >= 1, ">= 1")
    _type_check("cg_tol", v["cg_tol"], num, lambda x: 0 < x < 1, "in (0, 1)")
    _type_check("replicates", v["replicates"], int, lambda x: x >= 2, ">= 2")
    _type_check("alpha", v["alpha"], num, lambda x: 0 < x < 1, "in (0, 1)")
    _type_check("share_init", v["share_init"], bool, hint="bool")
    _type_check("winkler_alpha", v["winkler_alpha"], num, lambda x: 0 < x < 1, "in (0, 1)")
    _type_check("trace_every", v["trace_every"], int, lambda x: x >= 0, ">= 0")
    _type_check("deterministic_timing", v["deterministic_timing"], bool, hint="bool")
    _type_check("workers", v["workers"], int, lambda x: x >= 1, ">= 1")
    return v


# ---------------------------------------------------------------------------
# single runs
# ---------------------------------------------------------------------------


@dataclass
class RunKey:
    trial: int
    method: str
    n_train: int
    lam: float

    def tag(self) -> str:
        base = f"{self.method}_t{self.trial}_n{self.n_train}"
        return f"{base}_lam{self.lam:g}"


@dataclass
class RunOutcome:
    key: RunKey
    row: list[str] | None = None
    val_winkler: float | None = None
    failure_stage: str | None = None
    failure_error: str | None = None


@dataclass
class ExperimentResult:
    out_dir: Path
    rows: list[list[str]] = field(default_factory=list)
    failures: list[list[str]] = field(default_factory=list)
    sweep_rows: list[list[str]] = field(default_factory=list)
    selection: list[list[str]] = field(default_factory=list)

    @property
    def results_path(self) -> Path:
        return self.out_dir / "results.csv"


def _benchmark_spec(cfg: dict, n_train: int, trial: int) -> BenchmarkSpec:
    n_val = n_train if cfg["n_val"] is None else cfg["n_val"]
    return BenchmarkSpec(
        d=cfg["d"],
        n_train=n_train,
        n_val=n_val,
        n_test=cfg["n_test"],
        sigma=cfg["sigma"],
        cutout=cfg["cutout"],
        test_mode=cfg["test_mode"],
        grid_lo=cfg["grid_lo"],
        grid_hi=cfg["grid_hi"],
        matern=MaternSpec(
            length_scale=cfg["length_scale"], output_scale=cfg["output_scale"]
        ),
        anchors=cfg["anchors"],
        seed=derive_seed(cfg["seed"], "trial", trial),
    )


def _train_config(cfg: dict, lam: float, trial: int, n_train: int) -> TrainConfig:
    return TrainConfig(
        optimizer=cfg["optimizer"],
        learning_rate=cfg["learning_rate"],
        epochs=cfg["epochs"],
        schedule=cfg["schedule"],
        lam=lam,
        init=cfg["init"],
        init_std=cfg["init_std"],
        seed=derive_seed(cfg["seed"], "train", trial, n_train),
    )


def _float_cell(value: float) -> str:
    return str(float(value))


def _proposed_run(cfg, key, data, out_dir, want_val):
    arch = MlpArch(
        in_dim=cfg["d"],
        hidden=tuple(cfg["hidden"]),
        activation=cfg["activation"],
        use_bias=cfg["use_bias"],
    )
    config = _train_config(cfg, key.lam, key.trial, key.n_train)
    model, trace = train(arch, data.train, config)

    cg_config = CgConfig(max_iters=cfg["cg_max_iters"], tol=cfg["cg_tol"])
    params = BoundParams(
        sigma=cfg["sigma"], delta=cfg["delta"], n=key.n_train, v=cfg["v"], c=cfg["c"]
    )
    lip = None
    if cfg["band_mode"] == "uniform":
        lip = default_lip(key.lam, arch.n_layers, trace.initial_reg_loss)
    bands = band_batch(
        model, data.train, key.lam, data.test_inputs, params,
        cg_config=cg_config, band_mode=cfg["band_mode"], lip=lip,
    )
    lower = np.array([b.lower for b in bands])
    upper = np.array([b.upper for b in bands])
    centers = np.array([b.center for b in bands])
    report = score_bands(
        lower, upper, centers, data.test_truth, data.test_responses,
        data.train.inputs, data.test_inputs, cfg["winkler_alpha"],
    )

    write_band_csv(out_dir / f"bands_{key.tag()}.csv", bands, method="proposed")
    if cfg["trace_every"] > 0:
        trace.to_csv(out_dir / f"trace_{key.tag()}.csv", every=cfg["trace_every"])

    val_winkler = None
    if want_val:
        val_bands = band_batch(
            model, data.train, key.lam, data.val.inputs, params,
            cg_config=cg_config, band_mode=cfg["band_mode"], lip=lip,
        )
        val_winkler = winkler_score(
            np.array([b.lower for b in val_bands]),
            np.array([b.upper for b in val_bands]),
            data.val.responses,
            cfg["winkler_alpha"],
        )

    mean_cg = float(np.mean([b.weighted_norm.cg_iterations for b in bands]))
    return report, mean_cg, trace.final_alignment, val_winkler


def _bootstrap_run(cfg, key, data, out_dir, want_val):
    arch = MlpArch(
        in_dim=cfg["d"],
        hidden=tuple(cfg["hidden"]),
        activation=cfg["activation"],
        use_bias=cfg["use_bias"],
    )
    config = _train_config(cfg, key.lam, key.trial, key.n_train)
    ens_seed = derive_seed(cfg["seed"], "bootstrap", key.trial, key.n_train)
    ensemble = fit_replicates(
        arch, data.train, config,
        replicates=cfg["replicates"], seed=ens_seed, share_init=cfg["share_init"],
    )
    result = bands_from_ensemble(ensemble, data.test_inputs, cfg["alpha"])
    report = score_bands(
        result.lower, result.upper, result.center, data.test_truth,
        data.test_responses, data.train.inputs, data.test_inputs,
        cfg["winkler_alpha"],
    )

    bands = [
        ConfidenceBand(
            x=data.test_inputs[j],
            center=float(result.center[j]),
            lower=float(result.lower[j]),
            upper=float(result.upper[j]),
            half_width=float(result.upper[j] - result.lower[j]) / 2.0,
            weighted_norm=None,
            band_mode="bootstrap",
            delta=cfg["alpha"],
        )
        for j in range(data.test_inputs.shape[0])
    ]
    write_band_csv(out_dir / f"bands_{key.tag()}.csv", bands, method="bootstrap")

    val_winkler = None
    if want_val:
        val = bands_from_ensemble(ensemble, data.val.inputs, cfg["alpha"])
        val_winkler = winkler_score(
            val.lower, val.upper, data.val.responses, cfg["winkler_alpha"]
        )

    mean_alignment = float(np.mean(ensemble.alignments))
    return report, None, mean_alignment, val_winkler


def _write_testset_csv(path, data: BenchmarkData) -> None:
    d = data.test_inputs.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["test_index"] + [f"x_{j}" for j in range(d)] + ["truth", "response"]
        )
        for j in range(data.test_inputs.shape[0]):
            writer.writerow(
                [j]
                + [_float_cell(value) for value in data.test_inputs[j]]
                + [_float_cell(data.test_truth[j]), _float_cell(data.test_responses[j])]
            )


def _execute_run(cfg: dict, key_tuple: tuple, want_val: bool, out_dir_str: str):
    """One (trial, method, n, lambda) cell. Top level so pools can pickle it."""
    key = RunKey(*key_tuple)
    out_dir = Path(out_dir_str)
    started = time.perf_counter()
    stage = "generate"
    try:
        data = generate(_benchmark_spec(cfg, key.n_train, key.trial))
        stage = "run"
        if key.method == "proposed":
            report, mean_cg, alignment, val_w = _proposed_run(
                cfg, key, data, out_dir, want_val
            )
        else:
            report, mean_cg, alignment, val_w = _bootstrap_run(
                cfg, key, data, out_dir, want_val
            )
    except HessbandError as exc:
        return RunOutcome(
            key=key, failure_stage=stage, failure_error=f"{type(exc).__name__}: {exc}"
        )
    elapsed = 0.0 if cfg["deterministic_timing"] else time.perf_counter() - started
    row = [
        str(key.trial),
        key.method,
        str(cfg["d"]),
        str(key.n_train),
        _float_cell(key.lam),
        str(cfg["epochs"]),
        _float_cell(report.coverage),
        _float_cell(report.avg_width),
        _float_cell(report.median_width),
        _float_cell(report.winkler),
        _float_cell(report.test_mse),
        "" if mean_cg is None else _float_cell(mean_cg),
        _float_cell(alignment),
        f"{elapsed:.3f}",
    ]
    return RunOutcome(key=key, row=row, val_winkler=val_w)


def _worker_count(cfg: dict) -> int:
    env = os.environ.get("HESSBAND_WORKERS")
    if env is not None:
        try:
            workers = int(env)
        except ValueError:
            raise ConfigError(f"HESSBAND_WORKERS must be an integer, got {env!r}")
        if workers < 1:
            raise ConfigError(f"HESSBAND_WORKERS must be >= 1, got {workers}")
        return workers
    return int(cfg["workers"])


def _write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def run_experiment(
    config: ExperimentConfig,
    out_dir,
    lambda_grid: list[float] | None = None,
) -> ExperimentResult:
    """Run the full grid; with lambda_grid also score validation Winkler
    per lambda and write the sweep selection tables."""
    cfg = config.values
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sweeping = lambda_grid is not None
    lambdas = [float(l) for l in (lambda_grid if sweeping else [cfg["lam"]])]
    if sweeping and cfg["n_val"] == 0:
        raise ConfigError("lambda sweep needs n_val >= 1 for validation scoring")
    if sweeping and len(lambdas) == 0:
        raise ConfigError("lambda sweep needs a non-empty grid")

    keys = [
        (trial, method, n, lam)
        for n in cfg["n_train"]
        for trial in range(cfg["trials"])
        for method in cfg["methods"]
        for lam in lambdas
    ]

    for n in cfg["n_train"]:
        for trial in range(cfg["trials"]):
            data = generate(_benchmark_spec(cfg, n, trial))
            _write_testset_csv(out_dir / f"testset_t{trial}_n{n}.csv", data)

    workers = _worker_count(cfg)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(
                pool.map(
                    _execute_run,
                    [cfg] * len(keys),
                    keys,
                    [sweeping] * len(keys),
                    [str(out_dir)] * len(keys),
                )
            )
    else:
        outcomes = [_execute_run(cfg, key, sweeping, str(out_dir)) for key in keys]

    order = {m: i for i, m in enumerate(METHODS)}
    outcomes.sort(
        key=lambda o: (o.key.n_train, o.key.trial, order[o.key.method], o.key.lam)
    )

    result = ExperimentResult(out_dir=out_dir)
    for outcome in outcomes:
        if outcome.row is not None:
            result.rows.append(outcome.row)
        else:
            result.failures.append(
                [
                    str(outcome.key.trial),
                    outcome.key.method,
                    str(outcome.key.n_train),
                    _float_cell(outcome.key.lam),
                    outcome.failure_stage or "",
                    outcome.failure_error or "",
                ]
            )
        if sweeping and outcome.val_winkler is not None:
            result.sweep_rows.append(
                [
                    str(outcome.key.trial),
                    outcome.key.method,
                    str(outcome.key.n_train),
                    _float_cell(outcome.key.lam),
                    _float_cell(outcome.val_winkler),
                ]
            )

    _write_csv(result.results_path, RESULTS_COLUMNS, result.rows)
    if result.failures:
        _write_csv(out_dir / "failures.csv", FAILURE_COLUMNS, result.failures)
    if sweeping:
        _write_csv(out_dir / "sweep_val.csv", SWEEP_VAL_COLUMNS, result.sweep_rows)
        result.selection = _select_lambdas(result.sweep_rows)
        _write_csv(out_dir / "selection.csv", SELECTION_COLUMNS, result.selection)
    return result


def _select_lambdas(sweep_rows: list[list[str]]) -> list[list[str]]:
    """Per method, the lambda minimizing mean validation Winkler."""
    sums: dict[tuple[str, float], list[float]] = {}
    for _, method, _, lam, val_w in sweep_rows:
        sums.setdefault((method, float(lam)), []).append(float(val_w))
    best: dict[str, tuple[float, float]] = {}
    for (method, lam), vals in sorted(sums.items()):
        mean = float(np.mean(vals))
        if method not in best or mean < best[method][1]:
            best[method] = (lam, mean)
    return [
        [method, _float_cell(lam), _float_cell(mean)]
        for method, (lam, mean) in sorted(best.items())
    ]


# ---------------------------------------------------------------------------
# figure data
# ---------------------------------------------------------------------------


def emit_figure_data(results_dir, out_dir=None) -> list[str]:
    """Build fig1.csv (1-d bands vs truth) and fig2.csv (width/coverage by
    lambda) from a results directory; returns human-readable warnings for
    anything missing instead of failing."""
    results_dir = Path(results_dir)
    out_dir = Path(out_dir) if out_dir is not None else results_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    warnings: list[str] = []

    fig1_rows = _fig1_rows(results_dir, warnings)
    _write_csv(out_dir / "fig1.csv", FIG1_COLUMNS, fig1_rows)

    fig2_rows = _fig2_rows(results_dir, warnings)
    _write_csv(out_dir / "fig2.csv", FIG2_COLUMNS, fig2_rows)
    return warnings


def _read_csv_dicts(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _fig1_rows(results_dir: Path, warnings: list[str]) -> list[list[str]]:
    rows: list[list[str]] = []
    band_files = sorted(results_dir.glob("bands_*.csv"))
    if not band_files:
        warnings.append(f"no band CSVs under {results_dir}; fig1.csv left empty")
        return rows
    for band_path in band_files:
        stem = band_path.stem[len("bands_"):]
        try:
            method, trial_part, n_part, _ = stem.split("_", 3)
            trial = int(trial_part[1:])
            n_train = int(n_part[1:])
        except ValueError:
            warnings.append(f"unrecognized band file name {band_path.name}; skipped")
            continue
        band_rows = _read_csv_dicts(band_path)
        if not band_rows or band_rows[0].get("x", "") == "":
            continue  # multi-d runs have no x column to plot against
        testset_path = results_dir / f"testset_t{trial}_n{n_train}.csv"
        if not testset_path.exists():
            warnings.append(f"missing {testset_path.name} for {band_path.name}; skipped")
            continue
        truth_by_index = {
            row["test_index"]: row["truth"] for row in _read_csv_dicts(testset_path)
        }
        for row in band_rows:
            truth = truth_by_index.get(row["test_index"])
            if truth is None:
                warnings.append(
                    f"test index {row['test_index']} absent from {testset_path.name}"
                )
                continue
            rows.append(
                [
                    method,
                    str(n_train),
                    str(trial),
                    row["x"],
                    truth,
                    row["center"],
                    row["lb"],
                    row["ub"],
                ]
            )
    rows.sort(key=lambda r: (r[0], int(r[1]), int(r[2]), float(r[3])))
    return rows


def _fig2_rows(results_dir: Path, warnings: list[str]) -> list[list[str]]:
    results_path = results_dir / "results.csv"
    if not results_path.exists():
        warnings.append(f"missing {results_path.name}; fig2.csv left empty")
        return []
    groups: dict[tuple[str, float], list[tuple[float, float]]] = {}
    for row in _read_csv_dicts(results_path):
        key = (row["method"], float(row["lambda"]))
        groups.setdefault(key, []).append(
            (float(row["median_width"]), float(row["coverage"]))
        )
    rows = []
    for (method, lam), pairs in sorted(groups.items()):
        widths = np.array([p[0] for p in pairs])
        covers = np.array([p[1] for p in pairs])
        rows.append(
            [
                method,
                _float_cell(lam),
                _float_cell(widths.mean()),
                _float_cell(widths.std()),
                _float_cell(covers.mean()),
                _float_cell(covers.std()),
            ]
        )
    return rows
