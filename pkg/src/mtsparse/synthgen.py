"""Synthetic multi-task data with a planted sparse, coupled weight matrix.

Random numbers come from numpy's PCG64 bit generator (``np.random.default_rng``)
seeded with ``SynthConfig.seed``. Draws happen in a fixed order:

1. support rows (``choice`` without replacement, then sorted),
2. base magnitudes (uniform on [0.5, 2]) and signs for the support rows,
3. per-task gaussian perturbations of the support rows, task by task,
4. per task, the training features followed by the label-flip uniforms,
5. per task, the same for any extra test rows.

The training part therefore does not depend on how many test rows are asked for.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CouplingGraph, ModelWeights, MultiTaskDataset, TaskDataset


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    d: int = 50
    c: int = 4
    m_per_task: int = 200
    support_size: int = 10
    coupling_noise: float = 0.1
    label_noise: float = 0.05
    features: str = "gaussian"  # or "poisson" for count-like features
    poisson_rate: float = 2.0

    def validate(self) -> None:
        if self.d < 1 or self.c < 1 or self.m_per_task < 1:
            raise ValueError("d, c and m_per_task must be positive")
        if not 0 <= self.support_size <= self.d:
            raise ValueError("support_size must lie in [0, d]")
        if not self.coupling_noise >= 0:
            raise ValueError("coupling_noise must be >= 0")
        if not 0 <= self.label_noise < 0.5:
            raise ValueError("label_noise must lie in [0, 0.5)")
        if self.features not in ("gaussian", "poisson"):
            raise ValueError(f"unknown feature mode {self.features!r}")
        if self.features == "poisson" and not self.poisson_rate > 0:
            raise ValueError("poisson_rate must be > 0")


def task_names(c: int) -> tuple[str, ...]:
    return tuple(f"t{k}" for k in range(c))


def feature_names(d: int) -> tuple[str, ...]:
    width = len(str(d - 1))
    return tuple(f"x{k:0{width}d}" for k in range(d))


def _draw_rows(rng, cfg: SynthConfig, m: int, col: np.ndarray) -> TaskDataset:
    if cfg.features == "gaussian":
        x = rng.standard_normal((m, cfg.d))
    else:
        x = rng.poisson(cfg.poisson_rate, size=(m, cfg.d)).astype(float)
    y = np.where(x @ col >= 0, 1, -1)
    flip = rng.random(m) < cfg.label_noise
    y[flip] = -y[flip]
    return TaskDataset(x, y)


def _generate(cfg: SynthConfig, m_test: int):
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    support = np.sort(rng.choice(cfg.d, size=cfg.support_size, replace=False))
    magnitude = rng.uniform(0.5, 2.0, size=cfg.support_size)
    sign = np.where(rng.random(cfg.support_size) < 0.5, -1.0, 1.0)
    base = sign * magnitude

    w = np.zeros((cfg.d, cfg.c))
    for k in range(cfg.c):
        w[support, k] = base + cfg.coupling_noise * rng.standard_normal(cfg.support_size)

    train = [_draw_rows(rng, cfg, cfg.m_per_task, w[:, k]) for k in range(cfg.c)]
    test = [_draw_rows(rng, cfg, m_test, w[:, k]) for k in range(cfg.c)] if m_test else None

    names, feats = task_names(cfg.c), feature_names(cfg.d)
    planted = ModelWeights(w, feats, names, hyperparams={"support": support.tolist()})
    graph = CouplingGraph.complete(cfg.c, 1.0)
    train_ds = MultiTaskDataset(tuple(train), names, feats)
    test_ds = MultiTaskDataset(tuple(test), names, feats) if test else None
    return train_ds, test_ds, planted, graph


def generate(cfg: SynthConfig) -> tuple[MultiTaskDataset, ModelWeights, CouplingGraph]:
    """Draw a dataset, the planted weights that labelled it, and the all-pairs task graph."""
    train, _, planted, graph = _generate(cfg, 0)
    return train, planted, graph


def generate_split(cfg: SynthConfig, m_test: int):
    """Like :func:`generate` but also draws ``m_test`` held-out rows per task.

    Returns ``(train, test, planted, graph)``; ``train`` equals ``generate(cfg)[0]``.
    """
    if m_test < 1:
        raise ValueError("m_test must be positive")
    return _generate(cfg, m_test)


def planted_support(planted: ModelWeights) -> np.ndarray:
    return np.flatnonzero(np.any(planted.w != 0, axis=1))
