"""Multi-task logistic loss, task-coupling and row-sparsity penalties.

The loss for task c is ``sum_t log(1 + exp(-y_t * (x_t . W^c + b_c)))``, summed
(not averaged) over samples and tasks. The full objective adds
``sum_edges lambda_ij * ||W^i - W^j||^2`` and ``lambda_sparse * ||W||_{2,1}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CouplingGraph, DataError, HyperParams, ModelWeights, MultiTaskDataset, TaskDataset


@dataclass(frozen=True)
class ObjectiveValue:
    loss: float
    coupling: float
    sparsity: float
    total: float


def softplus(z: np.ndarray) -> np.ndarray:
    """``log(1 + exp(z))`` without overflow."""
    z = np.asarray(z, dtype=float)
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def _split(w) -> tuple[np.ndarray, np.ndarray | None]:
    if isinstance(w, ModelWeights):
        return w.w, w.bias
    w = np.asarray(w, dtype=float)
    if w.ndim == 1:
        w = w.reshape(-1, 1)
    return w, None


def _check(ds: MultiTaskDataset, w: np.ndarray) -> None:
    if w.shape[1] != ds.n_tasks:
        raise DataError(f"weights have {w.shape[1]} columns but the dataset has {ds.n_tasks} tasks")
    for name, task in zip(ds.task_names, ds.tasks):
        if task.x.shape[1] != w.shape[0]:
            raise DataError(f"task {name}: {task.x.shape[1]} features but weights have {w.shape[0]} rows")


def task_loss_grad(task: TaskDataset, col: np.ndarray, bias: float = 0.0) -> tuple[float, np.ndarray, float]:
    """Loss of one task plus its gradients with respect to the column and the bias."""
    margin = task.y * (task.x @ col + bias)
    z = -margin
    loss = float(np.sum(softplus(z)))
    coef = -task.y * sigmoid(z)
    return loss, task.x.T @ coef, float(np.sum(coef))


def task_loss(task: TaskDataset, col: np.ndarray, bias: float = 0.0) -> float:
    return float(np.sum(softplus(-task.y * (task.x @ col + bias))))


def logistic_loss(ds: MultiTaskDataset, w) -> float:
    mat, bias = _split(w)
    _check(ds, mat)
    return float(sum(
        task_loss(t, mat[:, c], 0.0 if bias is None else bias[c]) for c, t in enumerate(ds.tasks)
    ))


def logistic_grad(ds: MultiTaskDataset, w, task: int) -> np.ndarray:
    """Gradient of task ``task``'s loss term with respect to its weight column."""
    mat, bias = _split(w)
    _check(ds, mat)
    if not 0 <= task < ds.n_tasks:
        raise IndexError(f"task index {task} out of range")
    return task_loss_grad(ds.tasks[task], mat[:, task], 0.0 if bias is None else bias[task])[1]


def _check_graph(g: CouplingGraph, n_tasks: int) -> None:
    for e in g.edges:
        if not (0 <= e.i < n_tasks and 0 <= e.j < n_tasks):
            raise ValueError(f"edge ({e.i}, {e.j}) references a task outside 0..{n_tasks - 1}")


def coupling_penalty(w, g: CouplingGraph) -> float:
    mat, _ = _split(w)
    _check_graph(g, mat.shape[1])
    total = 0.0
    for e in g.edges:
        diff = mat[:, e.i] - mat[:, e.j]
        total += e.weight * float(diff @ diff)
    return total


def coupling_grad(w, g: CouplingGraph, task: int) -> np.ndarray:
    mat, _ = _split(w)
    _check_graph(g, mat.shape[1])
    if not 0 <= task < mat.shape[1]:
        raise IndexError(f"task index {task} out of range")
    grad = np.zeros(mat.shape[0])
    for other, weight in g.neighbors(task):
        grad += 2.0 * weight * (mat[:, task] - mat[:, other])
    return grad


def l21_norm(w) -> float:
    mat, _ = _split(w)
    return float(np.sum(np.linalg.norm(mat, axis=1)))


def full_objective(ds: MultiTaskDataset, w, g: CouplingGraph, hp: HyperParams) -> ObjectiveValue:
    loss = logistic_loss(ds, w)
    coupling = coupling_penalty(w, g)
    sparsity = hp.lambda_sparse * l21_norm(w)
    return ObjectiveValue(loss, coupling, sparsity, loss + coupling + sparsity)
