"""Single-task ridge- and lasso-penalized logistic classifiers, plus prediction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ModelWeights, MultiTaskDataset, TaskDataset
from .objective import task_loss, task_loss_grad
from .proximal import prox_l1


@dataclass(frozen=True)
class BaselineConfig:
    kind: str  # "ridge" or "lasso"
    lam: float
    max_iter: int = 5000
    tol: float = 1e-6
    fit_intercept: bool = False

    def __post_init__(self):
        if self.kind not in ("ridge", "lasso"):
            raise ValueError(f"unknown baseline kind {self.kind!r}")
        if not self.lam > 0:
            raise ValueError("lambda must be > 0")
        if self.max_iter < 1 or not self.tol > 0:
            raise ValueError("max_iter and tol must be positive")


@dataclass(frozen=True)
class FitResult:
    w: np.ndarray
    bias: float
    converged: bool
    iterations: int
    objective: float


def ridge_objective(task: TaskDataset, w: np.ndarray, lam: float, bias: float = 0.0) -> float:
    return task_loss(task, w, bias) + lam * float(w @ w)


def lasso_objective(task: TaskDataset, w: np.ndarray, lam: float, bias: float = 0.0) -> float:
    return task_loss(task, w, bias) + lam * float(np.sum(np.abs(w)))


def fit_ridge(task: TaskDataset, cfg: BaselineConfig) -> FitResult:
    """Gradient descent with backtracking on ``loss + lam * ||w||^2``."""
    w = np.zeros(task.d)
    b = 0.0
    step = 1.0

    def evaluate(w, b):
        loss, g, gb = task_loss_grad(task, w, b)
        return loss + cfg.lam * float(w @ w), g + 2 * cfg.lam * w, gb if cfg.fit_intercept else 0.0

    value, g, gb = evaluate(w, b)
    for it in range(cfg.max_iter):
        gnorm_sq = float(g @ g) + gb * gb
        if math.sqrt(gnorm_sq) < cfg.tol:
            return FitResult(w, b, True, it, value)
        step = min(1.0, 2.0 * step)
        while True:
            w_new, b_new = w - step * g, b - step * gb
            new_value = task_loss(task, w_new, b_new) + cfg.lam * float(w_new @ w_new)
            if new_value <= value - 1e-4 * step * gnorm_sq or step < 1e-16:
                break
            step *= 0.5
        w, b = w_new, b_new
        value, g, gb = evaluate(w, b)
    return FitResult(w, b, math.sqrt(float(g @ g) + gb * gb) < cfg.tol, cfg.max_iter, value)


def fit_lasso(task: TaskDataset, cfg: BaselineConfig) -> FitResult:
    """Proximal gradient on ``loss + lam * ||w||_1``; stops when an iterate moves less than ``tol``."""
    w = np.zeros(task.d)
    b = 0.0
    step = 1.0
    loss, g, gb = task_loss_grad(task, w, b)
    gb = gb if cfg.fit_intercept else 0.0
    for it in range(cfg.max_iter):
        step = min(1.0, 2.0 * step)
        while True:
            w_new = prox_l1(w - step * g, step * cfg.lam)
            b_new = b - step * gb
            dw, db = w_new - w, b_new - b
            new_loss = task_loss(task, w_new, b_new)
            bound = loss + float(g @ dw) + gb * db + (float(dw @ dw) + db * db) / (2 * step)
            if new_loss <= bound + 1e-12 * abs(loss) or step < 1e-16:
                break
            step *= 0.5
        moved = math.sqrt(float(dw @ dw) + db * db)
        w, b = w_new, b_new
        loss, g, gb = task_loss_grad(task, w, b)
        gb = gb if cfg.fit_intercept else 0.0
        if moved < cfg.tol:
            return FitResult(w, b, True, it + 1, loss + cfg.lam * float(np.sum(np.abs(w))))
    return FitResult(w, b, False, cfg.max_iter, loss + cfg.lam * float(np.sum(np.abs(w))))


def fit(task: TaskDataset, cfg: BaselineConfig) -> FitResult:
    return fit_ridge(task, cfg) if cfg.kind == "ridge" else fit_lasso(task, cfg)


def predict(w, x, bias: float = 0.0) -> tuple[int, float]:
    """Score ``x . w + bias`` and its label; a score of exactly 0 maps to +1."""
    w = np.asarray(w, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    if w.shape != x.shape:
        raise ValueError(f"dimension mismatch: weights {w.shape[0]}, features {x.shape[0]}")
    score = float(x @ w) + bias
    return (1 if score >= 0 else -1), score


def predict_rows(w, x: np.ndarray, bias: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w, dtype=float).ravel()
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != w.shape[0]:
        raise ValueError(f"dimension mismatch: weights {w.shape[0]}, features {x.shape[-1]}")
    scores = x @ w + bias
    return np.where(scores >= 0, 1, -1), scores


def predict_dataset(model: ModelWeights, ds: MultiTaskDataset) -> list[tuple[np.ndarray, np.ndarray]]:
    """Labels and scores for every task of ``ds``, matched to the model by task name."""
    out = []
    for name, task in zip(ds.task_names, ds.tasks):
        try:
            c = model.task_names.index(name)
        except ValueError:
            raise ValueError(f"model has no task {name!r}") from None
        out.append(predict_rows(model.column(c), task.x, model.bias_of(c)))
    return out
