"""Pool-based active learning for regression with Gaussian processes."""

from poolal.dataset import IndexSets, draw_initial_set, load_csv
from poolal.errors import PoolALError
from poolal.experiment import (
    ExperimentConfig,
    MethodResult,
    resume,
    run_benchmark,
    run_learn,
)
from poolal.gp import GPModel, Prediction, fit, predict
from poolal.kernels import KernelSpec

__all__ = [
    "ExperimentConfig",
    "GPModel",
    "IndexSets",
    "KernelSpec",
    "MethodResult",
    "PoolALError",
    "Prediction",
    "draw_initial_set",
    "fit",
    "load_csv",
    "predict",
    "resume",
    "run_benchmark",
    "run_learn",
]

__version__ = "0.1.0"
