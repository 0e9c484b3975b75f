"""Figure emission from the CSV artifacts.

Two entry points: `plot_series` renders the functional time series of one
run, `plot_sweep` renders the verdict map of a sweep.  Both validate the
header and name the first missing column on mismatch, and both accept files
with a valid header and no data rows, producing empty axes rather than
failing after a run that recorded nothing.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import read_series_csv

__all__ = ["plot_series", "plot_sweep"]

_SERIES_REQUIRED = (
    "t",
    "mass",
    "sup_u",
    "sup_v",
    "min_u",
    "min_v",
    "entropy",
    "dirichlet",
    "sup_grad_v",
    "dissipation",
)

_SWEEP_REQUIRED = (
    "m",
    "mu",
    "chi",
    "margin",
    "verdict",
    "peak_sup_u",
    "status",
)

_VERDICT_STYLE = {
    "Bounded": ("tab:blue", "o"),
    "Growing": ("tab:red", "^"),
    "Inconclusive": ("tab:gray", "s"),
    "Error": ("black", "x"),
}


def _require(cols, names, path) -> None:
    for name in names:
        if name not in cols:
            raise ValueError(f"{path}: missing column '{name}'")


def plot_series(csv_path, out_path=None) -> Path:
    """Plot extrema, mass, and the a-priori functionals of one run."""
    csv_path = Path(csv_path)
    cols = read_series_csv(csv_path)
    _require(cols, _SERIES_REQUIRED, csv_path)
    t = cols["t"]

    fig, axes = plt.subplots(2, 2, figsize=(11, 7), sharex=True)
    ax = axes[0, 0]
    ax.plot(t, cols["sup_u"], label="sup u")
    ax.plot(t, cols["sup_v"], label="sup v")
    ax.set_ylabel("extrema")
    ax.legend(loc="best")

    ax = axes[0, 1]
    ax.plot(t, cols["mass"], label="mass")
    extras = [k for k in cols if k.startswith("u_p")]
    for k in sorted(extras):
        ax.plot(t, cols[k], label=k)
    if len(t) and np.all(cols["mass"] > 0):
        ax.set_yscale("log")
    ax.set_ylabel("integrals of u")
    ax.legend(loc="best")

    ax = axes[1, 0]
    ax.plot(t, cols["entropy"], label="entropy")
    ax.plot(t, cols["dissipation"], label="dissipation")
    ax.set_xlabel("t")
    ax.set_ylabel("entropy / dissipation")
    ax.legend(loc="best")

    ax = axes[1, 1]
    ax.plot(t, cols["dirichlet"], label="dirichlet")
    ax.plot(t, cols["sup_grad_v"], label="sup |grad v|")
    for k in sorted(k for k in cols if k.startswith("gradv_b")):
        ax.plot(t, cols[k], label=k)
    ax.set_xlabel("t")
    ax.set_ylabel("attractant gradients")
    ax.legend(loc="best")

    fig.suptitle(csv_path.stem)
    fig.tight_layout()
    out = Path(out_path) if out_path is not None else csv_path.with_suffix(".png")
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return out


def plot_sweep(csv_path, out_path=None) -> Path:
    """Map sweep verdicts against the distance to the predicted threshold."""
    csv_path = Path(csv_path)
    cols = read_series_csv_strings(csv_path)
    _require(cols, _SWEEP_REQUIRED, csv_path)

    margin = np.array([_float_or_nan(x) for x in cols["margin"]])
    peak = np.array([_float_or_nan(x) for x in cols["peak_sup_u"]])
    m = np.array([_float_or_nan(x) for x in cols["m"]])
    verdicts = cols["verdict"]

    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(11, 4.5))
    for verdict, (color, marker) in _VERDICT_STYLE.items():
        mask = np.array([v == verdict for v in verdicts], dtype=bool)
        if mask.any():
            ax0.scatter(m[mask], margin[mask], c=color, marker=marker, label=verdict)
            ax1.scatter(margin[mask], peak[mask], c=color, marker=marker, label=verdict)
    ax0.axhline(0.0, color="black", lw=0.8)
    ax0.set_xlabel("diffusion exponent m")
    ax0.set_ylabel("margin above threshold")
    ax0.legend(loc="best")
    ax1.axvline(0.0, color="black", lw=0.8)
    ax1.set_xlabel("margin above threshold")
    ax1.set_ylabel("peak sup u")
    if np.isfinite(peak).any() and np.nanmin(peak) > 0:
        ax1.set_yscale("log")

    fig.suptitle(csv_path.stem)
    fig.tight_layout()
    out = Path(out_path) if out_path is not None else csv_path.with_suffix(".png")
    fig.savefig(out, dpi=130)
    plt.close(fig)
    return out


def _float_or_nan(x: str) -> float:
    try:
        return float(x)
    except ValueError:
        return float("nan")


def read_series_csv_strings(path) -> dict[str, list[str]]:
    """Columns as raw strings, for files that mix numbers and labels."""
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = list(reader)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise ValueError(f"{path}: row {i + 2} has {len(row)} cells, header has {len(header)}")
    return {name: [row[j] for row in rows] for j, name in enumerate(header)}
