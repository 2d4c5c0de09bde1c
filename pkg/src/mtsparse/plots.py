"""Figures written next to the CSV outputs of the CLI."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}

# no timestamp or version strings, so reruns write identical bytes
_METADATA = {"Software": None}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, metadata=_METADATA)
    plt.close(fig)
    return path


def plot_trace(
    totals: Sequence[float],
    primal: Sequence[float],
    dual: Sequence[float],
    path: str | Path,
    eps_primal: float | None = None,
    eps_dual: float | None = None,
) -> Path:
    """Objective and residual history of one solve."""
    iters = np.arange(1, len(totals) + 1)
    with plt.rc_context(STYLE):
        fig, (ax_obj, ax_res) = plt.subplots(1, 2, figsize=(8, 3.2))
        ax_obj.plot(iters, totals, color="C0")
        ax_obj.set_xlabel("iteration")
        ax_obj.set_ylabel("objective")
        ax_obj.set_title("Regularized objective")

        ax_res.semilogy(iters, np.maximum(primal, 1e-300), label="primal", color="C1")
        ax_res.semilogy(iters, np.maximum(dual, 1e-300), label="dual", color="C2")
        if eps_primal is not None:
            ax_res.axhline(eps_primal, color="C1", ls=":", lw=0.8)
        if eps_dual is not None and eps_dual != eps_primal:
            ax_res.axhline(eps_dual, color="C2", ls=":", lw=0.8)
        ax_res.set_xlabel("iteration")
        ax_res.set_title("Residuals")
        ax_res.legend(frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def plot_report(reports, path: str | Path) -> Path:
    """Per-task F1 bars for each model, with precision marked as a black tick."""
    models = list(dict.fromkeys(r.model for r in reports))
    tasks = list(dict.fromkeys(r.task for r in reports))
    lookup = {(r.model, r.task): r for r in reports}
    x = np.arange(len(tasks))
    width = 0.8 / max(len(models), 1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(4.0, 1.4 * len(tasks) + 2), 3.2))
        for k, m in enumerate(models):
            f1 = [lookup[(m, t)].f1 if (m, t) in lookup else 0.0 for t in tasks]
            prec = [lookup[(m, t)].precision if (m, t) in lookup else 0.0 for t in tasks]
            offset = x - 0.4 + width * (k + 0.5)
            ax.bar(offset, f1, width * 0.9, color=f"C{k}", label=m)
            ax.scatter(offset, prec, marker="_", s=80, color="black", zorder=3)
        ax.set_xticks(x, tasks)
        ax.set_ylim(0, 1.05)
        ax.set_ylabel("F1 (bars), precision (ticks)")
        ax.legend(frameon=False, ncol=len(models), loc="upper center", bbox_to_anchor=(0.5, 1.15))
        fig.tight_layout()
        return _save(fig, path)
