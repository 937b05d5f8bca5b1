"""Matplotlib renderers for report files.

Figures are written next to the delimited output by the CLI report path;
everything here consumes finished report data and never feeds back into it.
Rendering uses the Agg backend so it works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .hmm import FilterTrace
from .kalman import KalmanState
from .lab import ExperimentReport

_FIG_SIZE = (7.0, 4.2)
_DPI = 150


def _new_axes(title: str):
    fig, ax = plt.subplots(figsize=_FIG_SIZE, dpi=_DPI)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path) -> Path:
    file_path = Path(path)
    fig.tight_layout()
    fig.savefig(file_path)
    plt.close(fig)
    return file_path


def render_distance_trace(records: list[dict], path, title: str) -> Path:
    """Distance-versus-step curves for trace-shaped experiment records."""
    steps = [r["step"] for r in records]
    fig, ax = _new_axes(title)
    series = [key for key in ("hilbert_distance", "thompson_distance", "bound")
              if key in records[0]]
    positive = True
    for key in series:
        values = [r[key] for r in records]
        if any(v is None for v in values):
            continue
        style = "--" if key == "bound" else "-"
        ax.plot(steps, values, style, marker=".", label=key.replace("_", " "))
        positive = positive and all(v > 0.0 for v in values)
    if positive:
        ax.set_yscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("distance")
    ax.legend()
    return _save(fig, path)


def render_ratio_histogram(records: list[dict], bound: float, path) -> Path:
    """Histogram of observed contraction ratios with the bound marked."""
    ratios = [r["ratio"] for r in records]
    fig, ax = _new_axes("observed contraction ratios")
    ax.hist(ratios, bins=min(60, max(10, len(ratios) // 20)), color="#4878b0")
    ax.axvline(bound, color="#c44e52", linestyle="--", label=f"bound = {bound:.6g}")
    ax.set_xlabel("ratio")
    ax.set_ylabel("count")
    ax.legend()
    return _save(fig, path)


def render_tightness(records: list[dict], path) -> Path:
    """Per-matrix sampled maxima against their Birkhoff bounds."""
    bounds = [r["bound"] for r in records]
    observed = [r["max_ratio"] for r in records]
    fig, ax = _new_axes("sampled maximum vs Birkhoff bound")
    top = max(bounds + observed + [0.01])
    line = np.linspace(0.0, top * 1.05, 50)
    ax.plot(line, line, "-", color="#999999", label="y = x")
    ax.plot(line, 0.95 * line, ":", color="#c44e52", label="0.95 bound")
    ax.plot(bounds, observed, "o", color="#4878b0", markersize=5)
    ax.set_xlabel("tanh(diameter / 4)")
    ax.set_ylabel("sampled maximum ratio")
    ax.legend()
    return _save(fig, path)


def render_window_ratios(records: list[dict], path) -> Path:
    """Per-window realized ratios next to their window-map bounds."""
    windows = [r["window"] for r in records]
    fig, ax = _new_axes("per-window contraction")
    ax.bar([w - 0.2 for w in windows], [r["ratio"] for r in records],
           width=0.4, label="realized ratio", color="#4878b0")
    ax.bar([w + 0.2 for w in windows], [r["window_bound"] for r in records],
           width=0.4, label="window bound", color="#dd8452")
    ax.set_xlabel("window")
    ax.set_ylabel("ratio")
    ax.legend()
    return _save(fig, path)


def render_experiment(report: ExperimentReport, out_dir) -> list[Path]:
    """Render the figures appropriate to an experiment report's kind."""
    out = Path(out_dir)
    kind = report.config["kind"]
    if kind in ("riccati-trace", "hmm-forgetting"):
        return [render_distance_trace(report.records, out / "trace.png", kind)]
    if kind == "orthant-nonexpansive":
        return [
            render_ratio_histogram(
                report.records, report.summary["bound"], out / "ratios.png"
            )
        ]
    if kind == "birkhoff-tightness":
        return [render_tightness(report.records, out / "tightness.png")]
    if kind == "horizon-contraction":
        return [render_window_ratios(report.records, out / "windows.png")]
    raise ValueError(f"no renderer for experiment kind {kind!r}")


def render_kalman_trace(states: list[KalmanState], path) -> Path:
    """Posterior means with 2-sigma bands, one panel per state coordinate."""
    times = [s.time for s in states]
    dim = states[0].mean.size
    fig, axes = plt.subplots(
        dim, 1, figsize=(_FIG_SIZE[0], 2.2 * dim), dpi=_DPI, sharex=True, squeeze=False
    )
    for i in range(dim):
        ax = axes[i, 0]
        means = np.array([s.mean[i] for s in states])
        sigmas = np.array([np.sqrt(s.covariance[i, i]) for s in states])
        ax.plot(times, means, "-", marker=".", color="#4878b0", label=f"mean[{i}]")
        ax.fill_between(times, means - 2 * sigmas, means + 2 * sigmas,
                        alpha=0.25, color="#4878b0", label="2 sigma")
        ax.grid(True, alpha=0.3)
        ax.legend(loc="upper right")
    axes[-1, 0].set_xlabel("time")
    fig.suptitle("posterior state estimate")
    return _save(fig, path)


def render_hmm_trace(trace: FilterTrace, path) -> Path:
    """Posterior state densities over time plus log-likelihood increments."""
    fig, (top, bottom) = plt.subplots(
        2, 1, figsize=(_FIG_SIZE[0], 5.6), dpi=_DPI, sharex=True,
        gridspec_kw={"height_ratios": [2, 1]},
    )
    image = top.imshow(
        trace.densities.T, aspect="auto", origin="lower", cmap="viridis",
        interpolation="nearest", vmin=0.0, vmax=1.0,
    )
    top.set_ylabel("state")
    top.set_title("filtering densities")
    fig.colorbar(image, ax=top, label="probability")
    bottom.plot(range(trace.steps), trace.log_likelihood_increments,
                "-", marker=".", color="#4878b0")
    bottom.set_xlabel("step")
    bottom.set_ylabel("log-lik increment")
    bottom.grid(True, alpha=0.3)
    return _save(fig, path)
