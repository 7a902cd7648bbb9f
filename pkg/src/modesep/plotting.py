"""Figure rendering for the CLI report path.

Each table-producing command gets a compact matplotlib rendering saved next
to the delimited output; figures are a convenience view of the CSV, never a
data source.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .tables import ResultTable

_N_COLORS = {2000.0: "tab:orange", 10000.0: "tab:green", 100000.0: "tab:blue"}


def _color_for(n: float, fallback_idx: int):
    return _N_COLORS.get(float(n), f"C{fallback_idx}")


def _finite(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(x) & np.isfinite(y)
    return x[keep], y[keep]


def _by_photon_number(table: ResultTable):
    eps = np.array(table.column("epsilon"), dtype=float)
    ns = np.array(table.column("n_photons"), dtype=float)
    for i, n in enumerate(sorted(set(ns))):
        yield i, n, eps[ns == n], ns == n


def plot_fisher(table: ResultTable, ax=None):
    ax = ax or plt.gca()
    eps = table.column("epsilon")
    for name, label in [
        ("fi_hg", "HG sorting (all modes)"),
        ("fi_two_mode_exact", "two-channel, with crosstalk"),
        ("fi_two_mode_approx", "two-channel, approximation"),
        ("fi_direct", "direct intensity"),
    ]:
        ax.plot(*_finite(eps, table.column(name)), label=label)
    ax.set_xlabel("separation (linewidths)")
    ax.set_ylabel("Fisher information per photon")
    ax.legend(fontsize=8)


def plot_mse_scan(table: ResultTable, ax=None):
    ax = ax or plt.gca()
    for i, n, eps, mask in _by_photon_number(table):
        color = _color_for(n, i)
        exact = np.array(table.column("msen_exact"), dtype=float)[mask]
        mc = np.array(table.column("msen_mc"), dtype=float)[mask]
        ax.plot(*_finite(eps, exact), color=color, label=f"exact, N={n:g}")
        ax.plot(*_finite(eps, mc), "o", ms=3, color=color, label=f"MC, N={n:g}")
    crlbn = np.array(table.column("crlbn_two_mode"), dtype=float)
    eps_all = np.array(table.column("epsilon"), dtype=float)
    order = np.argsort(eps_all)
    ax.plot(*_finite(eps_all[order], crlbn[order]), "r--", lw=1, label="CRLB x N")
    ax.set_yscale("log")
    ax.set_xlabel("separation (linewidths)")
    ax.set_ylabel("MSE x N")
    ax.legend(fontsize=7)


def plot_per(table: ResultTable, ax=None):
    ax = ax or plt.gca()
    for i, n, eps, mask in _by_photon_number(table):
        db = np.array(table.column("per_db"), dtype=float)[mask]
        ax.plot(*_finite(eps, db), color=_color_for(n, i), label=f"N={n:g}")
    ax.axhline(0.0, color="k", lw=0.8, ls=":")
    ax.set_xlabel("separation (linewidths)")
    ax.set_ylabel("parameter-to-error ratio (dB)")
    ax.legend(fontsize=8)


def plot_enhance(table: ResultTable, ax=None):
    ax = ax or plt.gca()
    eps = np.array(table.column("epsilon"), dtype=float)
    ax.plot(*_finite(eps, table.column("fi_ratio")), "r-", label="information ratio")
    idx = 0
    for name in table.columns:
        if name.startswith("mse_ratio_n"):
            n = float(name.removeprefix("mse_ratio_n"))
            ax.plot(
                *_finite(eps, table.column(name)),
                "o",
                ms=3,
                color=_color_for(n, idx),
                label=f"CRLB(DI)/MSE, N={n:g}",
            )
            idx += 1
    ax.set_xlabel("separation (linewidths)")
    ax.set_ylabel("precision enhancement over direct intensity")
    ax.set_yscale("log")
    ax.legend(fontsize=8)


def plot_bias_map(table: ResultTable, ax=None):
    ax = ax or plt.gca()
    for i, n, eps, mask in _by_photon_number(table):
        gap = np.array(table.column("crlb_minus_mse"), dtype=float)[mask]
        ax.plot(*_finite(eps, gap), color=_color_for(n, i), label=f"N={n:g}")
    ax.axhline(0.0, color="k", lw=0.8, ls=":")
    ax.set_xlabel("separation (linewidths)")
    ax.set_ylabel("CRLB - MSE")
    ax.set_yscale("symlog", linthresh=1e-6)
    ax.legend(fontsize=8)


def plot_estimates(table: ResultTable, ax=None):
    ax = ax or plt.gca()
    eps = np.array(table.column("epsilon_true"), dtype=float)
    for prefix, color, label in [("raw", "tab:olive", "raw"), ("mle", "tab:red", "MLE")]:
        mean = np.array(table.column(f"{prefix}_mean"), dtype=float)
        std = np.array(table.column(f"{prefix}_std"), dtype=float)
        ax.errorbar(eps, mean, yerr=std, fmt="o", ms=3, color=color, label=label)
    lim = [0.0, max(1.0, eps.max() * 1.05) if eps.size else 1.0]
    ax.plot(lim, lim, "k--", lw=0.8, label="truth")
    ax.set_xlabel("true separation (linewidths)")
    ax.set_ylabel("estimated separation")
    ax.legend(fontsize=8)


def plot_calibration(table: ResultTable, ax=None):
    ax = ax or plt.gca()
    eps = np.array(table.column("epsilon"), dtype=float)
    ax.plot(eps, table.column("f1_measured"), "ko", ms=3, label="measured")
    ax.plot(eps, table.column("p1_fitted"), "r-", lw=1, label="fitted model")
    ax.set_xlabel("separation (linewidths)")
    ax.set_ylabel("channel-1 frequency")
    ax.legend(fontsize=8)


def plot_waveforms(table: ResultTable, ax=None):
    ax = ax or plt.gca()
    t = np.array(table.column("time_s"), dtype=float)
    ax.plot(t * 1e9, table.column("target"), label="target output")
    ax.plot(t * 1e9, table.column("corrected_input"), label="predistorted input")
    ax.set_xlabel("time (ns)")
    ax.set_ylabel("field (arb.)")
    ax.legend(fontsize=8)


_RENDERERS = {
    "fisher": plot_fisher,
    "mse-scan": plot_mse_scan,
    "per": plot_per,
    "enhance": plot_enhance,
    "bias-map": plot_bias_map,
    "estimate": plot_estimates,
    "calibrate": plot_calibration,
    "pulse-correct": plot_waveforms,
}


def render(command: str, table: ResultTable, path: Path) -> Path:
    """Render the command's figure next to its table; returns the PNG path."""
    fig, ax = plt.subplots(figsize=(5.0, 3.4), dpi=150)
    try:
        _RENDERERS[command](table, ax)
        fig.tight_layout()
        fig.savefig(path)
    finally:
        plt.close(fig)
    return Path(path)
