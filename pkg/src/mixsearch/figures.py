"""Matplotlib renderings of the evaluation CSV content, written next to it."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .agent.core import Action
from .evaluate import EvalReport

__all__ = ["render_curves", "render_actions"]

_COLORS = {"RL": "tab:red", "WS": "tab:blue", "PRR": "tab:green", "SK_PRR": "tab:orange"}


def render_curves(reports: list[EvalReport], path: str | Path) -> Path:
    """Percentile-rank-per-iteration curves, one line per policy."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for r in reports:
        xs = np.arange(0, len(r.curve) + 1)
        ys = [r.iteration0_pr, *r.curve]
        ax.plot(xs, ys, marker="o", ms=3.5, label=f"{r.policy} (AUC {r.auc:.3f})",
                color=_COLORS.get(r.policy))
    ax.set_xlabel("iteration")
    ax.set_ylabel("mean percentile rank")
    ax.set_ylim(0.0, 1.0)
    ax.grid(alpha=0.3)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_actions(reports: list[EvalReport], path: str | Path) -> Path:
    """Per-iteration action shares as stacked bars, one panel per policy."""
    path = Path(path)
    fig, axes = plt.subplots(1, len(reports), figsize=(3.2 * len(reports), 3.2),
                             sharey=True, squeeze=False)
    action_colors = ["tab:blue", "tab:green", "tab:orange"]
    for ax, r in zip(axes[0], reports):
        fractions = r.action_fractions()
        xs = np.arange(1, fractions.shape[1] + 1)
        bottom = np.zeros(fractions.shape[1])
        for action in Action:
            vals = fractions[int(action)]
            ax.bar(xs, vals, bottom=bottom, label=action.name.lower(),
                   color=action_colors[int(action)])
            bottom += vals
        ax.set_title(r.policy, fontsize=10)
        ax.set_xlabel("iteration")
        ax.set_ylim(0.0, 1.05)
    axes[0][0].set_ylabel("action share")
    axes[0][-1].legend(fontsize=8, loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
