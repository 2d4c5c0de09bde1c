"""Shared data model: datasets, coupling graphs, hyperparameters and weights.

All containers are frozen dataclasses. Arrays handed to the constructors are
copied and marked read-only, so a value can be shared between readers without
defensive copies.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np


class DataError(ValueError):
    """Malformed or inconsistent input data."""


class NumericalError(ArithmeticError):
    """A solver produced a non-finite value."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class TaskDataset:
    """Design matrix ``x`` (m x d) and labels ``y`` in {-1, +1} for one task."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1) if x.size else x.reshape(0, 0)
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "y", _frozen(np.asarray(self.y).ravel(), dtype=np.int64))

    @property
    def m(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def __eq__(self, other):
        if not isinstance(other, TaskDataset):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)


@dataclass(frozen=True, eq=False)
class MultiTaskDataset:
    tasks: tuple[TaskDataset, ...]
    task_names: tuple[str, ...]
    feature_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "task_names", tuple(self.task_names))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def n_samples(self) -> int:
        return sum(t.m for t in self.tasks)

    def task_index(self, name: str) -> int:
        try:
            return self.task_names.index(name)
        except ValueError:
            raise KeyError(f"unknown task {name!r}") from None

    def __eq__(self, other):
        if not isinstance(other, MultiTaskDataset):
            return NotImplemented
        return (
            self.task_names == other.task_names
            and self.feature_names == other.feature_names
            and len(self.tasks) == len(other.tasks)
            and all(a == b for a, b in zip(self.tasks, other.tasks))
        )


@dataclass(frozen=True)
class Edge:
    i: int
    j: int
    weight: float


@dataclass(frozen=True)
class CouplingGraph:
    """Undirected weighted task graph; each edge adds ``weight * ||W^i - W^j||^2``."""

    edges: tuple[Edge, ...] = ()

    def __post_init__(self):
        edges = []
        for e in self.edges:
            if not isinstance(e, Edge):
                e = Edge(*e)
            i, j = int(e.i), int(e.j)
            if i > j:
                i, j = j, i
            edges.append(Edge(i, j, float(e.weight)))
        object.__setattr__(self, "edges", tuple(edges))

    @classmethod
    def complete(cls, n_tasks: int, weight: float = 1.0) -> "CouplingGraph":
        return cls(tuple(Edge(i, j, weight) for i in range(n_tasks) for j in range(i + 1, n_tasks)))

    def validate(self, n_tasks: int) -> list[str]:
        problems = []
        seen = set()
        for e in self.edges:
            if not (0 <= e.i < e.j < n_tasks):
                problems.append(f"edge ({e.i}, {e.j}) out of range for {n_tasks} tasks or a self-loop")
            if (e.i, e.j) in seen:
                problems.append(f"duplicate edge ({e.i}, {e.j})")
            seen.add((e.i, e.j))
            if not (e.weight >= 0 and math.isfinite(e.weight)):
                problems.append(f"edge ({e.i}, {e.j}) has invalid weight {e.weight}")
        return problems

    def neighbors(self, task: int) -> list[tuple[int, float]]:
        out = []
        for e in self.edges:
            if e.i == task:
                out.append((e.j, e.weight))
            elif e.j == task:
                out.append((e.i, e.weight))
        return out


@dataclass(frozen=True)
class HyperParams:
    """Solver settings.

    The loss is an unnormalized sum over samples, so ``lambda_sparse`` and the
    coupling weights scale with the number of training rows.
    """

    lambda_sparse: float = 1.0
    rho: float = 1.0
    eps_primal: float = 1e-4
    eps_dual: float = 1e-4
    max_iter: int = 1000
    inner_max_iter: int = 50
    inner_grad_tol: float = 1e-6
    fit_intercept: bool = False

    def __post_init__(self):
        if not self.lambda_sparse >= 0:
            raise ValueError("lambda_sparse must be >= 0")
        for name in ("rho", "eps_primal", "eps_dual", "inner_grad_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("max_iter", "inner_max_iter"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda_sparse": self.lambda_sparse,
            "rho": self.rho,
            "eps_primal": self.eps_primal,
            "eps_dual": self.eps_dual,
            "max_iter": self.max_iter,
            "inner_max_iter": self.inner_max_iter,
            "inner_grad_tol": self.inner_grad_tol,
            "fit_intercept": self.fit_intercept,
        }


@dataclass(frozen=True, eq=False)
class ModelWeights:
    """Weight matrix ``w`` (d x C); column c scores task c. ``bias`` is never penalized."""

    w: np.ndarray
    feature_names: tuple[str, ...]
    task_names: tuple[str, ...]
    bias: np.ndarray | None = None
    hyperparams: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 2:
            raise ValueError("w must be a d x C matrix")
        object.__setattr__(self, "w", _frozen(w))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "task_names", tuple(self.task_names))
        if self.bias is not None:
            object.__setattr__(self, "bias", _frozen(np.asarray(self.bias).ravel()))
        if w.shape != (len(self.feature_names), len(self.task_names)):
            raise ValueError(
                f"w has shape {w.shape}, names imply "
                f"({len(self.feature_names)}, {len(self.task_names)})"
            )
        if self.bias is not None and self.bias.shape != (w.shape[1],):
            raise ValueError("bias length must equal the number of tasks")
        if not np.all(np.isfinite(w)) or (self.bias is not None and not np.all(np.isfinite(self.bias))):
            raise ValueError("weights must be finite")

    @classmethod
    def zeros(cls, ds: MultiTaskDataset, bias: bool = False) -> "ModelWeights":
        return cls(
            np.zeros((ds.n_features, ds.n_tasks)),
            ds.feature_names,
            ds.task_names,
            np.zeros(ds.n_tasks) if bias else None,
        )

    def column(self, task: int) -> np.ndarray:
        return self.w[:, task]

    def bias_of(self, task: int) -> float:
        return 0.0 if self.bias is None else float(self.bias[task])

    def __eq__(self, other):
        if not isinstance(other, ModelWeights):
            return NotImplemented
        same_bias = (self.bias is None and other.bias is None) or (
            self.bias is not None and other.bias is not None and np.array_equal(self.bias, other.bias)
        )
        return (
            np.array_equal(self.w, other.w)
            and self.feature_names == other.feature_names
            and self.task_names == other.task_names
            and same_bias
        )


@dataclass
class AdmmState:
    """Mutable iterate owned by a single solve call."""

    w: np.ndarray
    u: np.ndarray
    multiplier: np.ndarray
    bias: np.ndarray | None = None
    iteration: int = 0
    primal_residuals: list[float] = field(default_factory=list)
    dual_residuals: list[float] = field(default_factory=list)
    u_prev: np.ndarray | None = None

    @classmethod
    def zeros(cls, d: int, c: int, bias: bool = False) -> "AdmmState":
        return cls(
            w=np.zeros((d, c)),
            u=np.zeros((d, c)),
            multiplier=np.zeros((d, c)),
            bias=np.zeros(c) if bias else None,
        )


def validate_dataset(ds: MultiTaskDataset) -> list[str]:
    """Return one message per violated dataset invariant; empty when valid."""
    problems: list[str] = []
    if len(ds.tasks) < 1:
        problems.append("dataset has no tasks")
    if len(ds.task_names) != len(ds.tasks):
        problems.append(f"{len(ds.task_names)} task names for {len(ds.tasks)} tasks")
    if len(set(ds.task_names)) != len(ds.task_names):
        problems.append("task names are not unique")
    if len(set(ds.feature_names)) != len(ds.feature_names):
        problems.append("feature names are not unique")

    d = len(ds.feature_names)
    dims = {t.x.shape[1] if t.x.ndim == 2 else None for t in ds.tasks}
    if len(dims) > 1:
        problems.append(f"inconsistent feature dimension across tasks: {sorted(dims, key=str)}")
    elif dims and dims != {d}:
        problems.append(f"feature dimension {dims.pop()} does not match {d} feature names")

    for k, t in enumerate(ds.tasks):
        name = ds.task_names[k] if k < len(ds.task_names) else f"#{k}"
        if t.x.ndim != 2:
            problems.append(f"task {name}: x is not a matrix")
            continue
        if t.x.shape[0] != t.y.shape[0]:
            problems.append(f"task {name}: x has {t.x.shape[0]} rows but y has {t.y.shape[0]} labels")
        bad = np.flatnonzero((t.y != 1) & (t.y != -1))
        for row in bad:
            problems.append(f"task {name}: label at row {row} is {t.y[row]}, expected -1 or +1")
        nonfinite = np.argwhere(~np.isfinite(t.x))
        if len(nonfinite):
            r, col = nonfinite[0]
            problems.append(f"task {name}: {len(nonfinite)} non-finite feature values (first at row {r}, column {col})")
    return problems


# --- file formats -----------------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v))


def _safe_name(name: str) -> str:
    if not name or any(ch in name for ch in "/\\\0") or name in (".", ".."):
        raise DataError(f"task name {name!r} cannot be used in a file name")
    return name


def write_dataset(ds: MultiTaskDataset, directory: str | Path) -> Path:
    """Write ``meta.json`` plus one ``task_<name>.csv`` per task."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "task_names": list(ds.task_names),
        "feature_names": list(ds.feature_names),
        "C": ds.n_tasks,
        "d": ds.n_features,
    }
    (directory / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    for name, task in zip(ds.task_names, ds.tasks):
        path = directory / f"task_{_safe_name(name)}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([*ds.feature_names, "label"])
            for row, label in zip(task.x, task.y):
                writer.writerow([*map(_fmt, row), int(label)])
    return directory


def read_dataset(directory: str | Path) -> MultiTaskDataset:
    directory = Path(directory)
    meta_path = directory / "meta.json"
    if not meta_path.is_file():
        raise FileNotFoundError(f"dataset directory {directory} has no meta.json")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        task_names = [str(t) for t in meta["task_names"]]
        feature_names = [str(f) for f in meta["feature_names"]]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"{meta_path}: malformed metadata ({exc})") from exc
    if meta.get("C", len(task_names)) != len(task_names) or meta.get("d", len(feature_names)) != len(feature_names):
        raise DataError(f"{meta_path}: C/d disagree with the name lists")

    tasks = []
    for name in task_names:
        path = directory / f"task_{_safe_name(name)}.csv"
        if not path.is_file():
            raise FileNotFoundError(f"missing task file {path}")
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != [*feature_names, "label"]:
                raise DataError(f"{path}: header does not match meta.json feature names")
            xs, ys = [], []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(feature_names) + 1:
                    raise DataError(f"{path}:{lineno}: expected {len(feature_names) + 1} fields, got {len(row)}")
                try:
                    xs.append([float(v) for v in row[:-1]])
                    ys.append(int(row[-1]))
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: {exc}") from exc
        x = np.array(xs, dtype=float).reshape(len(xs), len(feature_names))
        tasks.append(TaskDataset(x, np.array(ys, dtype=np.int64)))
    return MultiTaskDataset(tuple(tasks), tuple(task_names), tuple(feature_names))


def model_to_dict(model: ModelWeights) -> dict[str, Any]:
    out: dict[str, Any] = {
        "w": model.w.tolist(),
        "feature_names": list(model.feature_names),
        "task_names": list(model.task_names),
    }
    if model.bias is not None:
        out["bias"] = model.bias.tolist()
    out["hyperparams"] = dict(model.hyperparams)
    return out


def write_model(model: ModelWeights, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")
    return path


def read_model(path: str | Path) -> ModelWeights:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"model file {path} not found")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        feature_names = raw["feature_names"]
        task_names = raw["task_names"]
        w = np.array(raw["w"], dtype=float).reshape(len(feature_names), len(task_names))
        bias = raw.get("bias")
        return ModelWeights(w, feature_names, task_names, None if bias is None else np.array(bias, dtype=float),
                            raw.get("hyperparams") or {})
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed model file ({exc})") from exc


def write_edges(graph: CouplingGraph, task_names: Sequence[str], path: str | Path) -> Path:
    """Edge list CSV with columns ``task_a,task_b,weight`` (task names, not indices)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["task_a", "task_b", "weight"])
        for e in graph.edges:
            writer.writerow([task_names[e.i], task_names[e.j], _fmt(e.weight)])
    return path


def read_edges(path: str | Path, task_names: Sequence[str]) -> CouplingGraph:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"edge list {path} not found")
    index = {name: k for k, name in enumerate(task_names)}
    edges: list[Edge] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"task_a", "task_b", "weight"} <= set(reader.fieldnames):
            raise DataError(f"{path}: expected header task_a,task_b,weight")
        for lineno, row in enumerate(reader, start=2):
            try:
                i, j = index[row["task_a"]], index[row["task_b"]]
                weight = float(row["weight"])
            except KeyError as exc:
                raise DataError(f"{path}:{lineno}: unknown task {exc.args[0]!r}") from None
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            edges.append(Edge(min(i, j), max(i, j), weight))
    graph = CouplingGraph(tuple(edges))
    problems = graph.validate(len(task_names))
    if problems:
        raise DataError(f"{path}: " + "; ".join(problems))
    return graph

