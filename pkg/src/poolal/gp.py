"""Exact Gaussian-process regression on standardized targets."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from poolal.errors import DegenerateKernelError, KernelError, SnapshotError
from poolal.kernels import (
    DEFAULT_LENGTH_BOUNDS,
    DEFAULT_NOISE_BOUNDS,
    DEFAULT_SIGNAL_BOUNDS,
    JITTER,
    KernelSpec,
    kernel_gradient,
    kernel_matrix,
)

SNAPSHOT_VERSION = 1
STD_FLOOR = 1e-12
MAX_ITER = 200
_LOG_2PI = math.log(2.0 * math.pi)
_FAILED_OBJECTIVE = 1e25

_fit_calls = 0


def fit_count() -> int:
    """Number of :func:`fit` calls since the last :func:`reset_fit_count`."""
    return _fit_calls


def reset_fit_count() -> None:
    global _fit_calls
    _fit_calls = 0


class Prediction(NamedTuple):
    mean: float
    std: float


@dataclass(frozen=True, eq=False)
class GPModel:
    spec: KernelSpec
    train_indices: tuple[int, ...]
    train_features: np.ndarray
    train_targets: np.ndarray
    train_targets_std: np.ndarray
    target_mean: float
    target_std: float
    chol: np.ndarray
    dual: np.ndarray
    lml: float

    @property
    def n_train(self) -> int:
        return len(self.train_targets)


def _cholesky(K):
    try:
        return np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        raise DegenerateKernelError(
            "kernel matrix is not positive definite after adding jitter"
        ) from None


def log_marginal_likelihood(spec: KernelSpec, X, y_std):
    """Log marginal likelihood and its gradient w.r.t. the log-hyperparameters.

    Gradient order: (log signal_variance, log length_scale, log noise_variance).
    """
    X = np.asarray(X, dtype=float)
    y_std = np.asarray(y_std, dtype=float)
    n = len(y_std)
    if n == 0:
        raise KernelError("log marginal likelihood needs at least one sample")
    K = kernel_matrix(spec, X, add_noise=True)
    L = _cholesky(K)
    alpha = cho_solve((L, True), y_std)
    value = -0.5 * float(y_std @ alpha) - float(np.sum(np.log(np.diag(L)))) - 0.5 * n * _LOG_2PI

    K_inv = cho_solve((L, True), np.eye(n))
    inner = np.outer(alpha, alpha) - K_inv
    grads = kernel_gradient(spec, X)
    gradient = 0.5 * np.einsum("ij,kji->k", inner, grads)
    return value, gradient


def _standardize(y):
    mean = float(np.mean(y))
    std = float(np.std(y))
    if std < STD_FLOOR:
        std = 1.0
    return mean, std


def _build(spec, indices, X, y, target_mean, target_std) -> GPModel:
    X = np.array(X, dtype=float)
    y = np.array(y, dtype=float)
    y_std = (y - target_mean) / target_std
    K = kernel_matrix(spec, X, add_noise=True)
    L = _cholesky(K)
    dual = cho_solve((L, True), y_std)
    lml = -0.5 * float(y_std @ dual) - float(np.sum(np.log(np.diag(L)))) - 0.5 * len(y) * _LOG_2PI
    return GPModel(
        spec=spec,
        train_indices=tuple(int(i) for i in indices),
        train_features=X,
        train_targets=y,
        train_targets_std=y_std,
        target_mean=float(target_mean),
        target_std=float(target_std),
        chol=L,
        dual=dual,
        lml=lml,
    )


def _optimize(spec0, X, y_std, restarts, rng):
    bounds = spec0.log_bounds()
    starts = [np.clip(spec0.log_params(), [b[0] for b in bounds], [b[1] for b in bounds])]
    if restarts:
        if rng is None:
            raise ValueError("restarts > 0 requires an rng")
        for _ in range(restarts):
            starts.append(np.array([rng.uniform(lo, hi) for lo, hi in bounds]))

    def objective(theta):
        try:
            value, grad = log_marginal_likelihood(spec0.with_log_params(theta), X, y_std)
        except DegenerateKernelError:
            return _FAILED_OBJECTIVE, np.zeros_like(theta)
        return -value, -grad

    best_spec, best_lml = None, -math.inf
    for start in starts:
        res = minimize(objective, start, jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": MAX_ITER, "ftol": 1e-9, "gtol": 1e-8})
        if not np.all(np.isfinite(res.x)) or res.fun >= _FAILED_OBJECTIVE:
            continue
        candidate = spec0.with_log_params(res.x)
        try:
            lml, _ = log_marginal_likelihood(candidate, X, y_std)
        except DegenerateKernelError:
            continue
        if lml > best_lml:
            best_spec, best_lml = candidate, lml
    if best_spec is None:
        raise DegenerateKernelError("hyperparameter optimization failed from every start")
    return best_spec


def fit(X_rows, y, spec0: KernelSpec, optimize: bool = True, restarts: int = 0,
        rng: np.random.Generator | None = None, indices=None) -> GPModel:
    """Fit a GP to ``(X_rows, y)``.

    With ``optimize`` the hyperparameters maximize the log marginal likelihood
    by L-BFGS-B in log space, starting from ``spec0`` and from ``restarts``
    extra points drawn log-uniformly within the bounds. The first start with
    the strictly best likelihood wins. ``indices`` are the pool indices of the
    rows, recorded on the model for snapshots.
    """
    global _fit_calls
    _fit_calls += 1

    X = np.asarray(X_rows, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).ravel()
    if len(y) == 0 or X.shape[0] != len(y):
        raise ValueError(f"need matching nonempty X and y, got {X.shape[0]} rows and {len(y)} targets")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets must be finite")
    if indices is None:
        indices = range(len(y))
    elif len(indices) != len(y):
        raise ValueError("indices must match the number of training rows")

    mean, std = _standardize(y)
    spec = spec0
    if optimize:
        spec = _optimize(spec0, X, (y - mean) / std, restarts, rng)
    return _build(spec, indices, X, y, mean, std)


def predict_arrays(model: GPModel, X_query):
    """Posterior mean and standard deviation (target units) as arrays."""
    Xq = np.asarray(X_query, dtype=float)
    if Xq.ndim == 1:
        Xq = Xq[:, None]
    if Xq.shape[1] != model.train_features.shape[1]:
        raise KernelError(
            f"query dimension {Xq.shape[1]} != training dimension {model.train_features.shape[1]}"
        )
    spec = model.spec
    K_qt = kernel_matrix(spec, Xq, model.train_features)
    mean_std = K_qt @ model.dual
    v = solve_triangular(model.chol, K_qt.T, lower=True)
    var = spec.signal_variance + spec.noise_variance - np.sum(v * v, axis=0)
    np.maximum(var, 0.0, out=var)
    return model.target_mean + model.target_std * mean_std, model.target_std * np.sqrt(var)


def predict(model: GPModel, X_query) -> list[Prediction]:
    mean, std = predict_arrays(model, X_query)
    return [Prediction(float(m), float(s)) for m, s in zip(mean, std)]


def snapshot_dict(model: GPModel) -> dict:
    spec = model.spec
    return {
        "format_version": SNAPSHOT_VERSION,
        "kernel": {
            "kind": spec.kind,
            "signal_variance": spec.signal_variance,
            "length_scale": spec.length_scale,
            "noise_variance": spec.noise_variance,
            "bounds": {
                "signal_variance": list(spec.signal_bounds),
                "length_scale": list(spec.length_bounds),
                "noise_variance": list(spec.noise_bounds),
            },
        },
        "train_indices": list(model.train_indices),
        "train_features": model.train_features.tolist(),
        "train_targets": model.train_targets.tolist(),
        "target_mean": model.target_mean,
        "target_std": model.target_std,
    }


def snapshot_save(model: GPModel, path) -> None:
    Path(path).write_text(json.dumps(snapshot_dict(model)) + "\n", encoding="utf-8")


_REQUIRED = ("format_version", "kernel", "train_indices", "train_features", "train_targets",
             "target_mean", "target_std")


def snapshot_from_dict(data: dict, where: str = "snapshot") -> GPModel:
    if not isinstance(data, dict):
        raise SnapshotError(f"{where}: expected a JSON object")
    for key in _REQUIRED:
        if key not in data:
            raise SnapshotError(f"{where}: missing field {key!r}")
    if data["format_version"] != SNAPSHOT_VERSION:
        raise SnapshotError(
            f"{where}: unsupported format_version {data['format_version']!r}, expected {SNAPSHOT_VERSION}"
        )
    kernel = data["kernel"]
    try:
        bounds = kernel.get("bounds", {})
        spec = KernelSpec(
            kind=kernel["kind"],
            signal_variance=float(kernel["signal_variance"]),
            length_scale=float(kernel["length_scale"]),
            noise_variance=float(kernel["noise_variance"]),
            signal_bounds=tuple(bounds.get("signal_variance", DEFAULT_SIGNAL_BOUNDS)),
            length_bounds=tuple(bounds.get("length_scale", DEFAULT_LENGTH_BOUNDS)),
            noise_bounds=tuple(bounds.get("noise_variance", DEFAULT_NOISE_BOUNDS)),
        )
        X = np.array(data["train_features"], dtype=float)
        y = np.array(data["train_targets"], dtype=float)
        indices = [int(i) for i in data["train_indices"]]
        target_mean = float(data["target_mean"])
        target_std = float(data["target_std"])
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise SnapshotError(f"{where}: malformed field ({exc})") from None
    if X.ndim != 2 or X.shape[0] != len(y) or len(indices) != len(y) or len(y) == 0:
        raise SnapshotError(f"{where}: inconsistent training data shapes")
    if not target_std > 0:
        raise SnapshotError(f"{where}: target_std must be positive")
    return _build(spec, indices, X, y, target_mean, target_std)


def snapshot_load(path) -> GPModel:
    path = Path(path)
    if not path.is_file():
        raise SnapshotError(f"snapshot not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"{path}: invalid JSON ({exc})") from None
    return snapshot_from_dict(data, str(path))
