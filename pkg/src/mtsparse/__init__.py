"""Multi-task sparse logistic classification for text-based triggering-event detection."""

from .admm import SolveReport, solve
from .baselines import BaselineConfig, fit_lasso, fit_ridge, predict
from .core import (
    AdmmState,
    CouplingGraph,
    DataError,
    Edge,
    HyperParams,
    ModelWeights,
    MultiTaskDataset,
    NumericalError,
    TaskDataset,
    read_dataset,
    read_model,
    validate_dataset,
    write_dataset,
    write_model,
)
from .evaluation import ConfusionCounts, TaskReport, compare_models, confusion, precision_f1
from .objective import ObjectiveValue, full_objective, l21_norm, logistic_grad, logistic_loss
from .proximal import prox_l1, prox_l21
from .synthgen import SynthConfig, generate

__version__ = "0.1.0"
