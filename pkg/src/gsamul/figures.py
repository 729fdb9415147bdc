"""Figure rendering for traces, fitted curves, and selection reports.

All functions write image files next to the delimited outputs; nothing
is shown interactively.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .data import Dataset
from .metrics import EvalReport
from .model import GsamulModel
from .optimizer import TrainTrace
from .selection import SelectionReport


def save_trace_figure(trace: TrainTrace, path: str | Path) -> Path:
    """Convergence curves: objectives, link-gradient norm, group norms."""
    path = Path(path)
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.4))

    axes[0].plot(trace.t, trace.inner_objective, label="training (penalized)")
    axes[0].plot(trace.t, trace.outer_objective, label="validation")
    axes[0].set_xlabel("iteration")
    axes[0].set_ylabel("objective")
    axes[0].legend(fontsize=8)

    positive = trace.grad_norm_sq[trace.grad_norm_sq > 0]
    if positive.size:
        axes[1].semilogy(trace.t, np.maximum(trace.grad_norm_sq, positive.min()))
    else:
        axes[1].plot(trace.t, trace.grad_norm_sq)
    axes[1].set_xlabel("iteration")
    axes[1].set_ylabel("squared link-gradient norm")

    for j in range(trace.group_norms.shape[1]):
        axes[2].plot(trace.t, trace.group_norms[:, j], lw=0.8)
    axes[2].set_xlabel("iteration")
    axes[2].set_ylabel("group norm")

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_fit_figure(
    model: GsamulModel, ds: Dataset, path: str | Path, max_components: int = 4
) -> Path:
    """Estimated component curves against ground truth (when stored),
    plus predicted vs. actual response."""
    path = Path(path)
    informative = list(ds.informative or range(1, min(ds.p, max_components) + 1))
    informative = informative[:max_components]
    n_panels = len(informative) + 1
    fig, axes = plt.subplots(1, n_panels, figsize=(3.2 * n_panels, 3.0))
    axes = np.atleast_1d(axes)

    est = model.component_values(ds.X)
    for ax, j in zip(axes[:-1], informative):
        col = ds.X[:, j - 1]
        order = np.argsort(col)
        est_c = est[:, j - 1] - est[:, j - 1].mean()
        ax.plot(col[order], est_c[order], color="tab:red", label="estimated")
        if ds.truth_components is not None:
            tru = ds.truth_components[:, j - 1]
            ax.plot(
                col[order], (tru - tru.mean())[order],
                color="tab:blue", ls="--", label="true",
            )
        ax.set_xlabel(ds.feature_names[j - 1])
        ax.set_ylabel("component (centered)")
        ax.legend(fontsize=7)

    target = ds.truth_link if ds.truth_link is not None else ds.y
    pred = model.predict_batch(ds.X)
    ax = axes[-1]
    ax.scatter(target, pred, s=6, alpha=0.5)
    lims = [min(target.min(), pred.min()), max(target.max(), pred.max())]
    ax.plot(lims, lims, color="k", lw=0.8)
    ax.set_xlabel("actual response")
    ax.set_ylabel("predicted")

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_selection_figure(report: SelectionReport, path: str | Path) -> Path:
    """Group-norm bars with the chosen threshold, and the kappa curve."""
    path = Path(path)
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2))

    p = len(report.group_norms)
    colors = [
        "tab:red" if (j + 1) in report.active_set else "tab:gray" for j in range(p)
    ]
    axes[0].bar(np.arange(1, p + 1), report.group_norms, color=colors)
    axes[0].axhline(report.threshold, color="k", ls="--", lw=0.8)
    axes[0].set_xlabel("feature")
    axes[0].set_ylabel("group norm")

    if report.kappa_curve:
        vs, ks = zip(*report.kappa_curve)
        axes[1].plot(vs, ks, marker=".", ms=3)
        axes[1].axvline(report.threshold, color="k", ls="--", lw=0.8)
    axes[1].set_xlabel("threshold")
    axes[1].set_ylabel("mean kappa")

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def metrics_caption(report: EvalReport) -> str:
    """One-line summary used in CLI output."""
    return (
        f"ase_link={report.ase_link:.3e} rsse={report.rsse:.3f} "
        f"n_eval={report.n_eval}"
    )
