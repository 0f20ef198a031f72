"""Budget-sweep figures: global accuracy and QWK against human budget."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .core import ValidationError  # noqa: E402
from .experiments import SweepReportRow, summarize_sweep  # noqa: E402

METHOD_STYLE = {
    "random": {"color": "#4c72b0", "marker": "o"},
    "uncertainty": {"color": "#dd8452", "marker": "s"},
    "reward": {"color": "#55a868", "marker": "^"},
}

RC = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "scoretriage",
    "svg.fonttype": "path",
}


def sweep_figure(rows: Sequence[SweepReportRow]):
    """Two panels per model tag (accuracy, QWK), one curve per method.

    Curves are trial means; the shaded band spans the trial min to max.
    """
    if not rows:
        raise ValidationError("sweep report is empty")
    summary = summarize_sweep(rows)
    tags = list(dict.fromkeys(r.model_tag for r in rows))
    methods = list(dict.fromkeys(r.method for r in rows))
    with plt.rc_context(RC):
        fig, axes = plt.subplots(len(tags), 2, figsize=(8, 3.2 * len(tags)), squeeze=False)
        for row_axes, tag in zip(axes, tags):
            for ax, metric, label in ((row_axes[0], "accuracy", "Accuracy"), (row_axes[1], "qwk", "QWK")):
                before = None
                for method in methods:
                    keys = sorted(k for k in summary if k[0] == tag and k[1] == method)
                    if not keys:
                        continue
                    xs = [k[2] for k in keys]
                    stats = [summary[k] for k in keys]
                    before = stats[0][f"{metric}_before"]
                    style = METHOD_STYLE.get(method, {"marker": "o"})
                    ax.plot(xs, [s[f"{metric}_mean"] for s in stats], label=method, linewidth=1.5,
                            markersize=4, **style)
                    ax.fill_between(xs, [s[f"{metric}_min"] for s in stats], [s[f"{metric}_max"] for s in stats],
                                    color=style.get("color"), alpha=0.15, linewidth=0)
                ax.set_title(f"{tag}: {label} (before {before:.3f})")
                ax.set_xlabel("Human budget (fraction of responses)")
                ax.set_ylabel(f"Global {label}")
                ax.grid(True, alpha=0.3)
                ax.legend(loc="lower right", frameon=False)
        fig.tight_layout()
    return fig


def save_sweep_plot(rows: Sequence[SweepReportRow], path) -> None:
    fig = sweep_figure(rows)
    try:
        with plt.rc_context(RC):
            fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
