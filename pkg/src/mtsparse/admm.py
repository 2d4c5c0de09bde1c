"""ADMM solver for the coupled, row-sparse multi-task logistic model.

The problem is split as ``min f(W) + lambda_sparse * ||U||_{2,1}`` subject to
``W = U``, where ``f`` is the logistic loss plus the coupling penalty. Each outer
iteration does:

* a block-coordinate sweep over the task columns of ``W`` (gradient descent
  with Armijo backtracking on the augmented Lagrangian, one column at a time),
* ``U <- prox_l21(W + Lambda / rho, lambda_sparse / rho)``,
* ``Lambda <- Lambda + rho * (W - U)``,
* primal residual ``||W - U||_F`` and dual residual ``rho * ||U - U_prev||_F``.

``Lambda`` is the unscaled multiplier throughout.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import AdmmState, CouplingGraph, DataError, HyperParams, ModelWeights, MultiTaskDataset, NumericalError, validate_dataset
from .objective import ObjectiveValue, full_objective, l21_norm, softplus, task_loss_grad
from .proximal import prox_l21

log = logging.getLogger(__name__)

ARMIJO = 1e-4
BACKTRACK = 0.5
INITIAL_STEP = 1.0
MAX_HALVINGS = 60


@dataclass
class SolveReport:
    state: AdmmState
    converged: bool
    iterations: int
    objective_trace: list[ObjectiveValue] = field(default_factory=list)
    wall_time: float = 0.0

    def support(self, threshold: float = 1e-6) -> np.ndarray:
        """Indices of feature rows of the split variable ``U`` with norm above ``threshold``."""
        return np.flatnonzero(np.linalg.norm(self.state.u, axis=1) > threshold)


class _ColumnProblem:
    """Augmented Lagrangian restricted to one task column (others held fixed)."""

    def __init__(self, state: AdmmState, ds: MultiTaskDataset, g: CouplingGraph, hp: HyperParams, task: int):
        self.task = ds.tasks[task]
        self.rho = hp.rho
        self.mult = state.multiplier[:, task]
        self.u = state.u[:, task]
        self.nbrs = [(state.w[:, j].copy(), lam) for j, lam in g.neighbors(task)]
        self.fit_bias = state.bias is not None

    def value_grad(self, col: np.ndarray, bias: float, need_grad: bool = True):
        task = self.task
        z = -task.y * (task.x @ col + bias)
        value = float(np.sum(softplus(z)))
        prox = col - self.u
        value += float(self.mult @ prox) + 0.5 * self.rho * float(prox @ prox)
        for other, lam in self.nbrs:
            diff = col - other
            value += lam * float(diff @ diff)
        if not need_grad:
            return value, None, 0.0
        _, grad, gbias = task_loss_grad(task, col, bias)
        grad = grad + self.mult + self.rho * prox
        for other, lam in self.nbrs:
            grad += 2.0 * lam * (col - other)
        return value, grad, gbias if self.fit_bias else 0.0


def _minimize_column(problem: _ColumnProblem, col: np.ndarray, bias: float, hp: HyperParams):
    value, grad, gbias = problem.value_grad(col, bias)
    for _ in range(hp.inner_max_iter):
        gnorm_sq = float(grad @ grad) + gbias * gbias
        if not math.isfinite(gnorm_sq):
            raise NumericalError("non-finite gradient in the W-update")
        if math.sqrt(gnorm_sq) < hp.inner_grad_tol:
            break
        step = INITIAL_STEP
        for _ in range(MAX_HALVINGS):
            trial_col = col - step * grad
            trial_bias = bias - step * gbias
            trial_value = problem.value_grad(trial_col, trial_bias, need_grad=False)[0]
            if trial_value <= value - ARMIJO * step * gnorm_sq:
                break
            step *= BACKTRACK
        else:
            # no measurable descent left at double precision
            break
        col, bias = trial_col, trial_bias
        value, grad, gbias = problem.value_grad(col, bias)
    return col, bias


def update_w(state: AdmmState, ds: MultiTaskDataset, g: CouplingGraph, hp: HyperParams) -> np.ndarray:
    """One block-coordinate sweep over the task columns, in index order.

    Columns updated earlier in the sweep are seen by later ones. When the state
    carries intercepts, each task's bias is optimized jointly with its column
    and written back to ``state.bias``.
    """
    w = state.w.copy()
    work = AdmmState(w, state.u, state.multiplier, None if state.bias is None else state.bias.copy())
    for c in range(ds.n_tasks):
        problem = _ColumnProblem(work, ds, g, hp, c)
        bias = 0.0 if work.bias is None else float(work.bias[c])
        col, bias = _minimize_column(problem, w[:, c].copy(), bias, hp)
        w[:, c] = col
        if work.bias is not None:
            work.bias[c] = bias
    if state.bias is not None:
        state.bias = work.bias
    return w


def update_u(state: AdmmState, hp: HyperParams) -> np.ndarray:
    return prox_l21(state.w + state.multiplier / hp.rho, hp.lambda_sparse / hp.rho)


def update_multiplier(state: AdmmState, rho: float) -> np.ndarray:
    return state.multiplier + rho * (state.w - state.u)


def residuals(state: AdmmState, rho: float) -> tuple[float, float]:
    """Primal ``||W - U||_F`` and dual ``rho * ||U - U_prev||_F`` residuals."""
    prev = state.u_prev if state.u_prev is not None else np.zeros_like(state.u)
    return float(np.linalg.norm(state.w - state.u)), rho * float(np.linalg.norm(state.u - prev))


def augmented_lagrangian(state: AdmmState, ds: MultiTaskDataset, g: CouplingGraph, hp: HyperParams) -> float:
    weights = state.w if state.bias is None else _with_bias(state.w, state.bias, ds)
    obj = full_objective(ds, weights, g, HyperParams(lambda_sparse=0.0, rho=hp.rho))
    gap = state.w - state.u
    return (
        obj.total
        + hp.lambda_sparse * l21_norm(state.u)
        + float(np.sum(state.multiplier * gap))
        + 0.5 * hp.rho * float(np.sum(gap * gap))
    )


def _with_bias(w: np.ndarray, bias: np.ndarray, ds: MultiTaskDataset) -> ModelWeights:
    return ModelWeights(w, ds.feature_names, ds.task_names, bias)


def solve(ds: MultiTaskDataset, g: CouplingGraph, hp: HyperParams) -> tuple[ModelWeights, SolveReport]:
    """Run ADMM from ``W = U = Lambda = 0`` until both residuals drop below tolerance."""
    problems = validate_dataset(ds) + g.validate(ds.n_tasks)
    if problems:
        raise DataError("invalid input: " + "; ".join(problems))

    start = time.perf_counter()
    state = AdmmState.zeros(ds.n_features, ds.n_tasks, bias=hp.fit_intercept)
    trace: list[ObjectiveValue] = []
    converged = False

    for k in range(1, hp.max_iter + 1):
        try:
            state.w = update_w(state, ds, g, hp)
        except NumericalError as exc:
            raise NumericalError(f"{exc} at iteration {k}", iteration=k) from None
        state.u_prev = state.u
        state.u = update_u(state, hp)
        state.multiplier = update_multiplier(state, hp.rho)
        p, d = residuals(state, hp.rho)
        state.iteration = k
        state.primal_residuals.append(p)
        state.dual_residuals.append(d)

        current = state.w if state.bias is None else _with_bias(state.w, state.bias, ds)
        obj = full_objective(ds, current, g, hp)
        trace.append(obj)
        if not (math.isfinite(obj.total) and math.isfinite(p) and math.isfinite(d)):
            raise NumericalError(f"non-finite value at iteration {k}", iteration=k)
        if p < hp.eps_primal and d < hp.eps_dual:
            converged = True
            break

    if not converged:
        log.warning("ADMM stopped at max_iter=%d without meeting the residual tolerances", hp.max_iter)

    model = ModelWeights(
        state.w,
        ds.feature_names,
        ds.task_names,
        state.bias,
        hyperparams=hp.to_dict(),
    )
    report = SolveReport(state, converged, state.iteration, trace, time.perf_counter() - start)
    return model, report


TRACE_COLUMNS = ("iter", "loss", "coupling", "sparsity", "total", "primal_residual", "dual_residual")


def write_trace(report: SolveReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        rows = zip(report.objective_trace, report.state.primal_residuals, report.state.dual_residuals)
        for k, (obj, p, d) in enumerate(rows, start=1):
            writer.writerow([k, *(repr(v) for v in (obj.loss, obj.coupling, obj.sparsity, obj.total, p, d))])
    return path
