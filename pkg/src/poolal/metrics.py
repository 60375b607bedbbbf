"""Regression error metrics and the area under a metric-vs-iteration curve."""

from __future__ import annotations

import numpy as np

from poolal.errors import MetricError

METRICS = ("rmse", "r2")


def check_metric(name: str) -> str:
    if name not in METRICS:
        raise MetricError(f"unknown metric {name!r}; expected one of {METRICS}")
    return name


def _pair(predictions, truths):
    p = np.asarray(predictions, dtype=float).ravel()
    t = np.asarray(truths, dtype=float).ravel()
    if p.shape != t.shape:
        raise MetricError(f"length mismatch: {p.size} predictions vs {t.size} truths")
    if p.size == 0:
        raise MetricError("cannot score an empty set")
    return p, t


def rmse(predictions, truths) -> float:
    p, t = _pair(predictions, truths)
    return float(np.sqrt(np.mean((p - t) ** 2)))


def r2(predictions, truths) -> float:
    p, t = _pair(predictions, truths)
    if p.size < 2:
        raise MetricError("r2 needs at least 2 samples")
    total = float(np.sum((t - t.mean()) ** 2))
    if total == 0.0:
        raise MetricError("r2 is undefined when all truths are identical")
    return 1.0 - float(np.sum((p - t) ** 2)) / total


def score(metric: str, predictions, truths) -> float:
    return rmse(predictions, truths) if check_metric(metric) == "rmse" else r2(predictions, truths)


def auc(series) -> float:
    """Trapezoidal area with unit spacing; a single value has zero area."""
    e = [float(v) for v in series]
    if not e:
        raise MetricError("auc of an empty series")
    total = 0.0
    for prev, cur in zip(e, e[1:]):
        total += (prev + cur) / 2
    return total
