"""Four-panel training/evaluation curves from a metrics file.

Output is SVG with pinned hash salt and no date metadata, so reruns on the
same input are byte-identical.
"""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .harness import read_metrics

_PANELS = [
    ("train", "mean_reward", "Mean training reward"),
    ("train", "sum_throughput_mbps", "Mean training throughput [Mbps]"),
    ("eval", "mean_reward", "Mean evaluation reward"),
    ("eval", "sum_throughput_mbps", "Mean evaluation throughput [Mbps]"),
]


def moving_average(x: np.ndarray, window: int) -> np.ndarray:
    """Trailing mean over up to `window` samples; window=1 is the identity."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if window == 1 or len(x) == 0:
        return np.asarray(x, dtype=float)
    c = np.cumsum(np.concatenate([[0.0], x]))
    n = np.minimum(np.arange(1, len(x) + 1), window)
    lead = np.arange(1, len(x) + 1)
    return (c[lead] - c[lead - n]) / n


def render_curves(metrics_path, out_dir, window: int = 25) -> list[str]:
    """Writes one SVG per panel plus a combined figure; returns the paths."""
    rows = read_metrics(metrics_path)
    if not rows:
        raise ValueError(f"metrics file {metrics_path} has no rows")
    os.makedirs(out_dir, exist_ok=True)
    written = []
    with matplotlib.rc_context({"svg.hashsalt": "hapsim", "figure.dpi": 100}):
        fig, axes = plt.subplots(2, 2, figsize=(11, 7))
        for ax, (phase, col, title) in zip(axes.ravel(), _PANELS):
            _draw_panel(ax, rows, phase, col, title, window)
        fig.tight_layout()
        combined = os.path.join(out_dir, "curves.svg")
        fig.savefig(combined, metadata={"Date": None})
        plt.close(fig)
        written.append(combined)

        for phase, col, title in _PANELS:
            fig, ax = plt.subplots(figsize=(6, 4))
            _draw_panel(ax, rows, phase, col, title, window)
            fig.tight_layout()
            path = os.path.join(out_dir, f"{phase}_{col}.svg")
            fig.savefig(path, metadata={"Date": None})
            plt.close(fig)
            written.append(path)
    return written


def _draw_panel(ax, rows, phase, col, title, window):
    if phase == "train":
        data = [(r["episode"], r[col]) for r in rows if r["phase"] == "train"]
        if data:
            ep, val = map(np.array, zip(*data))
            w = min(window, len(val))
            ax.plot(ep, moving_average(val, w), lw=1.2)
    else:
        scen = sorted({r["scenario"] for r in rows if r["phase"] == "eval"})
        for sc in scen:
            data = [(r["episode"], r[col]) for r in rows
                    if r["phase"] == "eval" and r["scenario"] == sc]
            ep, val = map(np.array, zip(*data))
            w = min(window, len(val))
            ax.plot(ep, moving_average(val, w), lw=1.2, label=f"scenario {sc}")
        if scen:
            ax.legend(fontsize=8)
    ax.set_xlabel("episode")
    ax.set_title(title, fontsize=10)
    ax.grid(alpha=0.3)
