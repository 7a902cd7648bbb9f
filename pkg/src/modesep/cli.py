"""Command-line front end: experiment drivers, dataset I/O, serialization.

Every command reads an optional JSON config file (flat keys, or sections
named after commands), lets explicit flags override it, and emits a CSV
table with a JSON metadata sidecar carrying the resolved configuration,
seed and a config hash.  Unless ``--no-plot`` is given, a rendering of the
table is saved alongside as PNG.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import CalibrationDataset, calibration_report, fit_crosstalk
from .estimators import CountRecord
from .information import (
    NumericError,
    crlb,
    fi_direct,
    fi_hg_full,
    fi_two_mode_approx,
    fi_two_mode_exact,
    superres_param,
    superres_param_analytic,
)
from .model import CrosstalkMatrix
from .pulse import (
    apply_response,
    correct_waveform,
    read_response_csv,
    read_waveform_csv,
    write_waveform_csv,
)
from .statistics import (
    InsufficientDataError,
    SamplingConfig,
    bootstrap_mse,
    exact_mse,
    mc_error_stats,
    min_resolvable,
    subtract_noise,
)
from .tables import ResultTable, build_metadata

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

COUNTS_COLUMNS = (
    "epsilon_true",
    "phase",
    "control_mode",
    "retrieved_counts",
    "noise_counts",
)

DEFAULT_ALPHA = 0.9966  # calibrated crosstalk used by the theory commands
DEFAULT_BETA = 1.0


class ConfigError(ValueError):
    """Bad configuration: unknown keys, malformed values, invalid ranges."""


class DataError(ValueError):
    """Malformed or insufficient input data."""


@dataclass(frozen=True)
class Param:
    name: str
    kind: str  # float | int | str | floats
    default: object
    help: str


_COMMON = [
    Param("alpha", "float", DEFAULT_ALPHA, "channel-0 retention of mode 0"),
    Param("beta", "float", DEFAULT_BETA, "channel-1 retention of mode 1"),
    Param("seed", "int", 0, "64-bit unsigned RNG seed"),
]

_GRID = [
    Param("eps_start", "float", 0.0, "first separation on the grid"),
    Param("eps_stop", "float", 1.0, "last separation on the grid"),
    Param("eps_step", "float", 0.05, "grid spacing"),
]

SCHEMAS: dict[str, list[Param]] = {
    "fisher": _GRID + [Param("n_photons", "float", 1e4, "detections for the CRLB columns")] + _COMMON,
    "mse-scan": _GRID
    + [
        Param("n_list", "floats", [2e3, 1e4, 1e5], "photon budgets"),
        Param("trials", "int", 5000, "Monte Carlo trials per point"),
        Param("estimator", "str", "mle_closed", "raw | mle_closed | mle_grid"),
    ]
    + _COMMON,
    "per": [
        Param("eps_start", "float", 0.05, "first separation on the grid"),
        Param("eps_stop", "float", 1.0, "last separation on the grid"),
        Param("eps_step", "float", 0.05, "grid spacing"),
        Param("n_list", "floats", [2e3, 1e4, 1e5], "photon budgets"),
    ]
    + _COMMON,
    "enhance": [
        Param("eps_start", "float", 0.01, "first separation on the grid"),
        Param("eps_stop", "float", 1.0, "last separation on the grid"),
        Param("eps_step", "float", 0.01, "grid spacing"),
        Param("n_list", "floats", [2e3, 1e4, 1e5], "photon budgets for MSE ratios"),
    ]
    + _COMMON,
    "estimate": [
        Param("n_photons", "int", 10000, "detections per bootstrap resample"),
        Param("reps", "int", 50, "bootstrap resamples per round"),
        Param("outer", "int", 10, "rounds for the MSE uncertainty"),
    ]
    + _COMMON,
    "calibrate": [Param("seed", "int", 0, "64-bit unsigned RNG seed")],
    "pulse-correct": [],
    "bias-map": [
        Param("eps_start", "float", 0.0, "first separation on the grid"),
        Param("eps_stop", "float", 0.3, "last separation on the grid"),
        Param("eps_step", "float", 0.02, "grid spacing"),
        Param("n_list", "floats", [2e3, 1e4, 1e5], "photon budgets"),
    ]
    + _COMMON,
}


def _coerce(param: Param, value) -> object:
    try:
        if param.kind == "float":
            return float(value)
        if param.kind == "int":
            if isinstance(value, float) and value != int(value):
                raise ValueError(value)
            return int(value)
        if param.kind == "floats":
            if isinstance(value, str):
                value = [v for v in value.split(",") if v]
            return [float(v) for v in value]
        return str(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {param.name!r}: {value!r}") from exc


def load_config_file(path: str | Path, command: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    if any(key in SCHEMAS for key in raw):
        for key, value in raw.items():
            if key not in SCHEMAS:
                raise ConfigError(f"unknown config section {key!r}")
            if not isinstance(value, dict):
                raise ConfigError(f"config section {key!r} must be an object")
        return raw.get(command, {})
    return raw


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags; unknown keys rejected."""
    schema = {p.name: p for p in SCHEMAS[command]}
    resolved = {name: p.default for name, p in schema.items()}
    if args.config:
        section = load_config_file(args.config, command)
        for key, value in section.items():
            if key not in schema:
                raise ConfigError(f"unknown config key {key!r} for command {command!r}")
            resolved[key] = _coerce(schema[key], value)
    for name, param in schema.items():
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            resolved[name] = _coerce(param, flag_value)
    _validate_ranges(command, resolved)
    return resolved


def _validate_ranges(command: str, cfg: dict) -> None:
    if "seed" in cfg and not 0 <= cfg["seed"] < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if "eps_step" in cfg:
        if cfg["eps_step"] <= 0:
            raise ConfigError("eps_step must be > 0")
        if cfg["eps_stop"] < cfg["eps_start"] or cfg["eps_start"] < 0:
            raise ConfigError("need 0 <= eps_start <= eps_stop")
    for key in ("n_photons", "trials", "reps", "outer"):
        if key in cfg and cfg[key] <= 0:
            raise ConfigError(f"{key} must be > 0")
    if "n_list" in cfg:
        if not cfg["n_list"] or any(n <= 0 for n in cfg["n_list"]):
            raise ConfigError("n_list must hold positive photon budgets")
    if "estimator" in cfg and cfg["estimator"] not in ("raw", "mle_closed", "mle_grid"):
        raise ConfigError(f"unknown estimator {cfg['estimator']!r}")
    if "alpha" in cfg:
        try:
            CrosstalkMatrix(cfg["alpha"], cfg["beta"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _eps_grid(cfg: dict) -> np.ndarray:
    return np.arange(cfg["eps_start"], cfg["eps_stop"] + cfg["eps_step"] / 2.0, cfg["eps_step"])


def _xt(cfg: dict) -> CrosstalkMatrix:
    return CrosstalkMatrix(alpha=cfg["alpha"], beta=cfg["beta"])


def _emit(command: str, table: ResultTable, out_base: Path, no_plot: bool) -> None:
    csv_path, meta_path = table.write(out_base)
    written = [str(csv_path), str(meta_path)]
    if not no_plot:
        from . import plotting

        written.append(str(plotting.render(command, table, out_base.with_suffix(".png"))))
    print("wrote " + " ".join(written))


# ---------------------------------------------------------------------------
# dataset I/O


def read_counts_csv(path: str | Path):
    """Aggregated-counts rows with 1-based line numbers; schema enforced."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise DataError(f"dataset not found: {path}") from exc
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration as exc:
        raise DataError(f"{path}: empty dataset") from exc
    if [h.strip() for h in header] != list(COUNTS_COLUMNS):
        raise DataError(
            f"{path}: header must be exactly {','.join(COUNTS_COLUMNS)}, got {','.join(header)}"
        )
    rows = []
    for lineno, fields in enumerate(reader, start=2):
        if not fields:
            continue
        if len(fields) != len(COUNTS_COLUMNS):
            raise DataError(f"{path}:{lineno}: expected {len(COUNTS_COLUMNS)} fields")
        try:
            eps = float(fields[0])
            phase = float(fields[1])
            mode = int(fields[2])
            retrieved = int(fields[3])
            noise = int(fields[4])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        if eps < 0:
            raise DataError(f"{path}:{lineno}: epsilon_true must be >= 0")
        if mode not in (0, 1):
            raise DataError(f"{path}:{lineno}: control_mode must be 0 or 1")
        if retrieved < 0 or noise < 0:
            raise DataError(f"{path}:{lineno}: counts must be >= 0")
        if not -math.pi - 1e-9 <= phase <= math.pi + 1e-9:
            raise DataError(f"{path}:{lineno}: phase must lie in (-pi, pi]")
        rows.append((lineno, eps, phase, mode, retrieved, noise))
    if not rows:
        raise DataError(f"{path}: no data rows")
    return rows


def aggregate_counts(rows):
    """Noise-subtract each row, then pool phases per separation and channel."""
    pools: dict[float, list[int]] = {}
    clamped: dict[float, int] = {}
    for _, eps, _, mode, retrieved, noise in rows:
        channel = subtract_noise(CountRecord(retrieved, 0), CountRecord(noise, 0))
        pools.setdefault(eps, [0, 0])[mode] += channel.n0
        clamped[eps] = clamped.get(eps, 0) + int(channel.clamped)
    return {
        eps: (CountRecord(n0=pair[0], n1=pair[1]), clamped[eps])
        for eps, pair in pools.items()
    }


# ---------------------------------------------------------------------------
# commands


def cmd_fisher(cfg: dict) -> ResultTable:
    xt = _xt(cfg)
    n = cfg["n_photons"]
    rows = []
    for eps in _eps_grid(cfg):
        eps = float(eps)
        di = fi_direct(eps)
        hg = fi_hg_full(eps)
        exact = fi_two_mode_exact(eps, xt)
        approx = fi_two_mode_approx(eps, xt.alpha)
        rows.append(
            (
                eps,
                di.value,
                hg.value,
                exact.value,
                approx.value,
                crlb(eps, n, di).crlb_unbiased,
                crlb(eps, n, hg).crlb_unbiased,
                crlb(eps, n, exact).crlb_unbiased,
            )
        )
    return ResultTable(
        columns=[
            "epsilon",
            "fi_direct",
            "fi_hg",
            "fi_two_mode_exact",
            "fi_two_mode_approx",
            "crlb_direct",
            "crlb_hg",
            "crlb_two_mode",
        ],
        rows=rows,
        metadata=build_metadata("fisher", cfg, cfg["seed"]),
    )


def cmd_mse_scan(cfg: dict) -> ResultTable:
    xt = _xt(cfg)
    rows = []
    for n in cfg["n_list"]:
        for eps in _eps_grid(cfg):
            eps = float(eps)
            exact = exact_mse(eps, n, xt)
            mc = mc_error_stats(
                eps,
                xt,
                SamplingConfig(n_photons=int(n), trials=cfg["trials"], seed=cfg["seed"]),
                cfg["estimator"],
            )
            crlbn = 1.0 / fi_two_mode_exact(eps, xt).value if eps > 0 or xt.alpha == 1.0 else math.inf
            rows.append(
                (
                    eps,
                    n,
                    exact.mse,
                    exact.mse * n,
                    crlbn,
                    mc.mse,
                    mc.mse_se,
                    mc.mse * n,
                )
            )
    return ResultTable(
        columns=[
            "epsilon",
            "n_photons",
            "mse_exact",
            "msen_exact",
            "crlbn_two_mode",
            "mse_mc",
            "mse_mc_se",
            "msen_mc",
        ],
        rows=rows,
        metadata=build_metadata("mse-scan", cfg, cfg["seed"]),
    )


def cmd_per(cfg: dict) -> ResultTable:
    xt = _xt(cfg)
    grid = _eps_grid(cfg)
    rows = []
    smallest: dict[str, float | None] = {}
    for n in cfg["n_list"]:
        smallest[f"{n:g}"] = min_resolvable(n, xt, grid)
        for eps in grid:
            eps = float(eps)
            st = exact_mse(eps, n, xt)
            rows.append((eps, n, st.mse, st.per_linear, st.per_db, st.per_linear > 1.0))
    meta = build_metadata("per", cfg, cfg["seed"])
    meta["min_resolvable"] = smallest
    return ResultTable(
        columns=["epsilon", "n_photons", "mse_exact", "per_linear", "per_db", "resolvable"],
        rows=rows,
        metadata=meta,
    )


def cmd_enhance(cfg: dict) -> ResultTable:
    xt = _xt(cfg)
    grid = _eps_grid(cfg)
    n_list = cfg["n_list"]
    columns = ["epsilon", "fi_direct", "fi_two_mode_exact", "fi_ratio"] + [
        f"mse_ratio_n{n:g}" for n in n_list
    ]
    rows = []
    for eps in grid:
        eps = float(eps)
        di = fi_direct(eps).value
        exact = fi_two_mode_exact(eps, xt).value
        ratio = exact / di if di > 0.0 else math.inf
        mse_ratios = []
        for n in n_list:
            crlb_di = 1.0 / (n * di) if di > 0.0 else math.inf
            mse = exact_mse(eps, n, xt).mse
            mse_ratios.append(crlb_di / mse if mse > 0.0 else math.inf)
        rows.append((eps, di, exact, ratio) + tuple(mse_ratios))
    meta = build_metadata("enhance", cfg, cfg["seed"])
    if xt.alpha == 1.0:
        meta["superres_param"] = "inf"
        meta["superres_diverges"] = True
        print("superres_param: inf (leak-free device, ratio diverges as eps -> 0)")
    else:
        s = superres_param(xt)
        meta["superres_param"] = s
        meta["superres_param_analytic"] = superres_param_analytic(xt)
        print(f"superres_param: {s:.4g}")
    return ResultTable(columns=columns, rows=rows, metadata=meta)


def cmd_bias_map(cfg: dict) -> ResultTable:
    xt = _xt(cfg)
    rows = []
    for n in cfg["n_list"]:
        for eps in _eps_grid(cfg):
            eps = float(eps)
            st = exact_mse(eps, n, xt)
            bound = crlb(eps, n, fi_two_mode_exact(eps, xt))
            rows.append(
                (eps, n, st.mse, bound.crlb_unbiased, bound.crlb_unbiased - st.mse, st.bias)
            )
    return ResultTable(
        columns=["epsilon", "n_photons", "mse_exact", "crlb_unbiased", "crlb_minus_mse", "bias"],
        rows=rows,
        metadata=build_metadata("bias-map", cfg, cfg["seed"]),
    )


def cmd_estimate(cfg: dict, data_path: str) -> ResultTable:
    xt = _xt(cfg)
    pools = aggregate_counts(read_counts_csv(data_path))
    rows = []
    for eps in sorted(pools):
        pool, clamped_rows = pools[eps]
        raw = bootstrap_mse(
            pool, eps, xt, cfg["n_photons"], cfg["reps"], cfg["outer"], cfg["seed"], "raw"
        )
        mle = bootstrap_mse(
            pool, eps, xt, cfg["n_photons"], cfg["reps"], cfg["outer"], cfg["seed"], "mle_closed"
        )
        rows.append(
            (
                eps,
                pool.n0,
                pool.n1,
                clamped_rows,
                eps + raw.bias,
                math.sqrt(raw.variance),
                eps + mle.bias,
                math.sqrt(mle.variance),
                mle.mse,
                mle.mse_se,
            )
        )
    meta = build_metadata("estimate", cfg, cfg["seed"])
    meta["data_path"] = str(data_path)
    return ResultTable(
        columns=[
            "epsilon_true",
            "pool_n0",
            "pool_n1",
            "clamped_rows",
            "raw_mean",
            "raw_std",
            "mle_mean",
            "mle_std",
            "mle_mse",
            "mle_mse_se",
        ],
        rows=rows,
        metadata=meta,
    )


def cmd_calibrate(cfg: dict, data_path: str, out_base: Path) -> ResultTable:
    pools = aggregate_counts(read_counts_csv(data_path))
    if len(pools) < 2:
        raise DataError("calibration needs at least 2 distinct separations")
    rows = tuple(
        (eps, pools[eps][0].n0, pools[eps][0].n1) for eps in sorted(pools)
    )
    totals = [n0 + n1 for _, n0, n1 in rows]
    dataset = CalibrationDataset(rows=rows, photons_per_row=float(np.mean(totals)))
    result = fit_crosstalk(dataset)
    report = calibration_report(result, dataset)
    out_base.parent.mkdir(parents=True, exist_ok=True)
    report_path = out_base.with_suffix(".json")
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(
        f"alpha={result.alpha:.6f} beta={result.beta:.6f} "
        f"leakage={1.0 - result.alpha:.4%} superres_param={report['superres_param']}"
    )
    meta = build_metadata("calibrate", cfg, cfg.get("seed"))
    meta["data_path"] = str(data_path)
    meta["fit"] = {k: report[k] for k in ("alpha", "beta", "residual", "superres_param")}
    return ResultTable(
        columns=["epsilon", "f1_measured", "p1_fitted", "residual", "fisher_two_mode"],
        rows=[
            (r["epsilon"], r["f1_measured"], r["p1_fitted"], r["residual"], r["fisher_two_mode"])
            for r in report["rows"]
        ],
        metadata=meta,
    )


def cmd_pulse_correct(cfg: dict, target_path: str, response_path: str, out_base: Path, no_plot: bool) -> None:
    try:
        target = read_waveform_csv(target_path)
    except (OSError, ValueError) as exc:
        raise DataError(f"target waveform: {exc}") from exc
    try:
        response = read_response_csv(response_path, dt=target.dt)
    except (OSError, ValueError) as exc:
        raise DataError(f"response spectrum: {exc}") from exc
    if len(response.values) != len(target.samples):
        raise DataError(
            f"response grid length {len(response.values)} does not match "
            f"target length {len(target.samples)}"
        )
    corrected = correct_waveform(target, response)
    out_base.parent.mkdir(parents=True, exist_ok=True)
    write_waveform_csv(corrected, out_base.with_suffix(".csv"))
    meta = build_metadata("pulse-correct", cfg, None)
    meta["target_path"] = str(target_path)
    meta["response_path"] = str(response_path)
    forward = apply_response(corrected, response)
    residual = float(
        np.linalg.norm(forward.samples - target.samples) / np.linalg.norm(target.samples)
    )
    meta["forward_residual_l2"] = residual
    out_base.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    written = [str(out_base.with_suffix(".csv")), str(out_base.with_suffix(".meta.json"))]
    if not no_plot:
        from . import plotting

        table = ResultTable(
            columns=["time_s", "target", "corrected_input"],
            rows=list(zip(target.times, target.samples, corrected.samples)),
            metadata=meta,
        )
        written.append(str(plotting.render("pulse-correct", table, out_base.with_suffix(".png"))))
    print("wrote " + " ".join(written))


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modesep",
        description="Two-line separation estimation from mode-demultiplexed counts",
    )
    parser.add_argument("--version", action="version", version=f"modesep {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    descriptions = {
        "fisher": "tabulate Fisher information and CRLBs over a separation grid",
        "mse-scan": "exact and Monte Carlo MSE over separations and photon budgets",
        "per": "parameter-to-error ratio and the smallest resolvable separation",
        "enhance": "precision enhancement over direct intensity detection",
        "estimate": "raw and MLE estimates from an aggregated-counts dataset",
        "calibrate": "fit the crosstalk parameters from a counts dataset",
        "pulse-correct": "predistort a target waveform by a measured response",
        "bias-map": "exact MSE against the unbiased CRLB over (separation, N)",
    }
    for command, params in SCHEMAS.items():
        p = sub.add_parser(command, help=descriptions[command])
        p.add_argument("--config", help="JSON config file (flags override it)")
        p.add_argument("--out", help=f"output base path (default results/{command})")
        p.add_argument("--no-plot", action="store_true", help="skip the PNG rendering")
        if command in ("estimate", "calibrate"):
            p.add_argument("--data", required=True, help="aggregated-counts CSV")
        if command == "pulse-correct":
            p.add_argument("--target", required=True, help="target waveform CSV")
            p.add_argument("--response", required=True, help="response spectrum CSV")
        for param in params:
            p.add_argument(
                f"--{param.name.replace('_', '-')}",
                dest=param.name,
                default=None,
                help=f"{param.help} (default {param.default!r})",
            )
    return parser


def run(args: argparse.Namespace) -> int:
    command = args.command
    cfg = resolve_config(command, args)
    out_base = Path(args.out) if args.out else Path("results") / command
    if command == "pulse-correct":
        cmd_pulse_correct(cfg, args.target, args.response, out_base, args.no_plot)
        return EXIT_OK
    if command == "estimate":
        table = cmd_estimate(cfg, args.data)
    elif command == "calibrate":
        table = cmd_calibrate(cfg, args.data, out_base)
    elif command == "fisher":
        table = cmd_fisher(cfg)
    elif command == "mse-scan":
        table = cmd_mse_scan(cfg)
    elif command == "per":
        table = cmd_per(cfg)
    elif command == "enhance":
        table = cmd_enhance(cfg)
    else:
        table = cmd_bias_map(cfg)
    _emit(command, table, out_base, args.no_plot)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, InsufficientDataError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
