"""Precision/F1 scoring and model comparison on train/test splits."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .admm import solve
from .baselines import BaselineConfig, fit, predict_dataset, predict_rows
from .core import CouplingGraph, HyperParams, MultiTaskDataset, TaskDataset

# lambda values searched for each single-task baseline
DEFAULT_GRID: dict[str, tuple[float, ...]] = {"lasso": (1.0, 10.0, 100.0), "ridge": (10.0, 100.0)}

REPORT_COLUMNS = ("model", "task", "precision", "f1", "tp", "fp", "tn", "fn")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")


@dataclass(frozen=True)
class TaskReport:
    model: str
    task: str
    precision: float
    f1: float
    counts: ConfusionCounts
    param: float | None = None

    @property
    def recall(self) -> float:
        return _ratio(self.counts.tp, self.counts.tp + self.counts.fn)


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def confusion(y_true, y_pred) -> ConfusionCounts:
    """Counts with +1 as the positive class."""
    y_true = np.asarray(y_true).ravel()
    y_pred = np.asarray(y_pred).ravel()
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.size} true labels, {y_pred.size} predictions")
    for name, arr in (("y_true", y_true), ("y_pred", y_pred)):
        if np.any((arr != 1) & (arr != -1)):
            raise ValueError(f"{name} must contain only -1 and +1")
    pos_t, pos_p = y_true == 1, y_pred == 1
    return ConfusionCounts(
        tp=int(np.sum(pos_t & pos_p)),
        fp=int(np.sum(~pos_t & pos_p)),
        tn=int(np.sum(~pos_t & ~pos_p)),
        fn=int(np.sum(pos_t & ~pos_p)),
    )


def precision_f1(c: ConfusionCounts) -> tuple[float, float]:
    """Precision and F1; every 0/0 is taken as 0."""
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    return precision, _ratio(2 * precision * recall, precision + recall)


def score(model: str, task: str, y_true, y_pred, param: float | None = None) -> TaskReport:
    counts = confusion(y_true, y_pred)
    p, f = precision_f1(counts)
    return TaskReport(model, task, p, f, counts, param)


def _split_task(task: TaskDataset, fraction: float) -> tuple[TaskDataset, TaskDataset]:
    n_val = max(1, int(round(task.m * fraction)))
    if n_val >= task.m:
        raise ValueError("validation split leaves no training rows")
    cut = task.m - n_val
    return TaskDataset(task.x[:cut], task.y[:cut]), TaskDataset(task.x[cut:], task.y[cut:])


def _best_baseline(kind, grid, train: TaskDataset, select: TaskDataset, refit_on: TaskDataset, task_name, test):
    best = None
    for lam in grid:
        res = fit(train, BaselineConfig(kind, lam))
        labels, _ = predict_rows(res.w, select.x, res.bias)
        rep = score(kind, task_name, select.y, labels, lam)
        if best is None or rep.f1 > best[0].f1:
            best = (rep, res)
    rep, res = best
    if refit_on is not train:
        res = fit(refit_on, BaselineConfig(kind, rep.param))
    labels, _ = predict_rows(res.w, test.x, res.bias)
    return score(kind, task_name, test.y, labels, rep.param)


def compare_models(
    ds_train: MultiTaskDataset,
    ds_test: MultiTaskDataset,
    g: CouplingGraph,
    hp: HyperParams,
    baseline_grid: Mapping[str, Sequence[float]] | None = None,
    selection: str = "test",
    val_fraction: float = 0.25,
) -> list[TaskReport]:
    """Fit the multi-task model once and every baseline per task per lambda.

    ``selection="test"`` keeps, per baseline and task, the lambda with the best
    test F1. ``selection="validation"`` picks lambda on the last ``val_fraction``
    of each training task and refits on the full training rows; this is the
    recommended mode since it never looks at the test labels.
    """
    if ds_train.task_names != ds_test.task_names or ds_train.n_features != ds_test.n_features:
        raise ValueError("train and test must share tasks and features")
    if selection not in ("test", "validation"):
        raise ValueError(f"unknown selection mode {selection!r}")
    grid = DEFAULT_GRID if baseline_grid is None else baseline_grid

    reports: list[TaskReport] = []
    for kind in sorted(grid):
        for name, train, test in zip(ds_train.task_names, ds_train.tasks, ds_test.tasks):
            if selection == "test":
                reports.append(_best_baseline(kind, grid[kind], train, test, train, name, test))
            else:
                fit_part, val_part = _split_task(train, val_fraction)
                reports.append(_best_baseline(kind, grid[kind], fit_part, val_part, train, name, test))

    model, _ = solve(ds_train, g, hp)
    for name, task, (labels, _) in zip(ds_test.task_names, ds_test.tasks, predict_dataset(model, ds_test)):
        reports.append(score("multitask", name, task.y, labels, hp.lambda_sparse))
    return reports


def write_report_csv(reports: Sequence[TaskReport], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            c = r.counts
            writer.writerow([r.model, r.task, f"{r.precision:.6f}", f"{r.f1:.6f}", c.tp, c.fp, c.tn, c.fn])
    return path


def format_table(reports: Sequence[TaskReport]) -> str:
    """Aligned table: one row per model, a Precision/F1 pair per task."""
    models = list(dict.fromkeys(r.model for r in reports))
    tasks = list(dict.fromkeys(r.task for r in reports))
    lookup = {(r.model, r.task): r for r in reports}
    width = max([len("Method"), *map(len, models)])
    head1 = f"{'':<{width}}" + "".join(f" | {t:^17}" for t in tasks)
    head2 = f"{'Method':<{width}}" + f" | {'Precision':>9} {'F1':>7}" * len(tasks)
    lines = [head1, head2, "-" * len(head2)]
    for m in models:
        cells = []
        for t in tasks:
            r = lookup.get((m, t))
            cells.append(f" | {'-':>9} {'-':>7}" if r is None else f" | {r.precision:>9.4f} {r.f1:>7.4f}")
        lines.append(f"{m:<{width}}" + "".join(cells))
    return "\n".join(lines)


def mean_f1(reports: Sequence[TaskReport], model: str) -> float:
    vals = [r.f1 for r in reports if r.model == model]
    return float(np.mean(vals)) if vals else 0.0
