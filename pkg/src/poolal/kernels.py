"""Stationary covariance kernels and their log-hyperparameter gradients.

Three families are supported, each scaled by a signal variance:

* ``rbf``: ``s2 * exp(-d^2 / (2 l^2))``
* ``matern_half`` (nu = 1/2): ``s2 * exp(-d / l)``
* ``matern_three_halves`` (nu = 3/2): ``s2 * (1 + sqrt(3) d / l) * exp(-sqrt(3) d / l)``

The observation noise variance is carried on the spec but is only added on
the diagonal of training matrices (``kernel_matrix(..., add_noise=True)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import cdist

from poolal.errors import KernelError

JITTER = 1e-10

KINDS = ("rbf", "matern_half", "matern_three_halves")
PARAM_NAMES = ("signal_variance", "length_scale", "noise_variance")

DEFAULT_SIGNAL_BOUNDS = (1e-5, 1e5)
DEFAULT_LENGTH_BOUNDS = (1e-5, 1e5)
DEFAULT_NOISE_BOUNDS = (1e-10, 1e1)

_SQRT3 = math.sqrt(3.0)


def _check_bounds(name, bounds):
    lo, hi = bounds
    if not (math.isfinite(lo) and math.isfinite(hi) and 0 < lo <= hi):
        raise KernelError(f"{name} bounds must be a positive finite interval, got {bounds}")


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"
    signal_variance: float = 1.0
    length_scale: float = 1.0
    noise_variance: float = 1e-5
    signal_bounds: tuple[float, float] = DEFAULT_SIGNAL_BOUNDS
    length_bounds: tuple[float, float] = DEFAULT_LENGTH_BOUNDS
    noise_bounds: tuple[float, float] = DEFAULT_NOISE_BOUNDS

    def __post_init__(self):
        if self.kind not in KINDS:
            raise KernelError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        for name, bounds in zip(PARAM_NAMES, self.bounds):
            _check_bounds(name, bounds)
        for name, value, (lo, hi) in zip(PARAM_NAMES, self.params, self.bounds):
            if not lo <= value <= hi:
                raise KernelError(f"{name}={value!r} outside bounds [{lo!r}, {hi!r}]")

    @property
    def params(self) -> tuple[float, float, float]:
        return (self.signal_variance, self.length_scale, self.noise_variance)

    @property
    def bounds(self):
        return (self.signal_bounds, self.length_bounds, self.noise_bounds)

    def log_params(self) -> np.ndarray:
        return np.log(np.array(self.params, dtype=float))

    def log_bounds(self) -> list[tuple[float, float]]:
        return [(math.log(lo), math.log(hi)) for lo, hi in self.bounds]

    def with_log_params(self, theta) -> "KernelSpec":
        """Return a copy with hyperparameters ``exp(theta)``, clamped into bounds."""
        values = []
        for t, (lo, hi) in zip(theta, self.bounds):
            values.append(min(max(math.exp(float(t)), lo), hi))
        return replace(self, signal_variance=values[0], length_scale=values[1],
                       noise_variance=values[2])

    def hyperparams(self) -> dict[str, float]:
        """Hyperparameters as written to run-history files."""
        return {
            "signal_variance": self.signal_variance,
            "length_scale": self.length_scale,
            "noise_level": self.noise_variance,
        }


def euclidean_distance(x_i, x_j) -> float:
    x_i = np.asarray(x_i, dtype=float).ravel()
    x_j = np.asarray(x_j, dtype=float).ravel()
    if x_i.shape != x_j.shape:
        raise KernelError(f"dimension mismatch: {x_i.size} vs {x_j.size}")
    diff = x_i - x_j
    return math.sqrt(float(np.dot(diff, diff)))


def _profile(kind, dist, length_scale):
    """Unit-variance kernel value as a function of distance."""
    if kind == "rbf":
        return np.exp(-0.5 * (dist / length_scale) ** 2)
    if kind == "matern_half":
        return np.exp(-dist / length_scale)
    a = _SQRT3 * dist / length_scale
    return (1.0 + a) * np.exp(-a)


def kernel_eval(spec: KernelSpec, x_i, x_j) -> float:
    d = euclidean_distance(x_i, x_j)
    return float(spec.signal_variance * _profile(spec.kind, d, spec.length_scale))


def _as_matrix(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise KernelError(f"expected a 2-D feature matrix, got shape {X.shape}")
    return X


def pairwise_distances(X_a, X_b=None) -> np.ndarray:
    X_a = _as_matrix(X_a)
    X_b = X_a if X_b is None else _as_matrix(X_b)
    if X_a.shape[1] != X_b.shape[1]:
        raise KernelError(f"dimension mismatch: {X_a.shape[1]} vs {X_b.shape[1]}")
    return cdist(X_a, X_b, metric="euclidean")


def kernel_matrix(spec: KernelSpec, X_a, X_b=None, add_noise: bool = False,
                  jitter: float = JITTER) -> np.ndarray:
    """Covariance matrix between the rows of ``X_a`` and ``X_b``.

    ``X_b=None`` means ``X_b is X_a``; only then may ``add_noise`` put
    ``noise_variance + jitter`` on the diagonal.
    """
    same = X_b is None or X_b is X_a
    K = spec.signal_variance * _profile(spec.kind, pairwise_distances(X_a, None if same else X_b),
                                        spec.length_scale)
    if add_noise:
        if not same:
            raise KernelError("add_noise requires X_b to be X_a")
        K[np.diag_indices_from(K)] += spec.noise_variance + jitter
    return K


def kernel_gradient(spec: KernelSpec, X) -> np.ndarray:
    """Derivatives of the noisy training matrix w.r.t. each log-hyperparameter.

    Returns an array of shape ``(3, n, n)`` ordered as
    (log signal_variance, log length_scale, log noise_variance).
    """
    D = pairwise_distances(X)
    n = D.shape[0]
    s2, l = spec.signal_variance, spec.length_scale
    K = s2 * _profile(spec.kind, D, l)

    if spec.kind == "rbf":
        dK_dl = K * (D / l) ** 2
    elif spec.kind == "matern_half":
        dK_dl = K * (D / l)
    else:
        a = _SQRT3 * D / l
        dK_dl = s2 * a * a * np.exp(-a)

    grads = np.empty((3, n, n))
    grads[0] = K
    grads[1] = dK_dl
    grads[2] = spec.noise_variance * np.eye(n)
    return grads
