"""Pool-based sample-selection strategies.

All selectors return a pool index from the unlabeled set. Ties go to the
smallest pool index: candidates are scanned in ascending index order and the
first maximum wins.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from poolal.errors import SelectionError
from poolal.gp import GPModel, predict_arrays
from poolal.kernels import KernelSpec

METHODS = ("random", "uncertainty", "covariance", "qbc", "fft")

# above this many unlabeled samples the pairwise matrix is not stored
FULL_MATRIX_LIMIT = 8192


def check_method(name: str) -> str:
    if name not in METHODS:
        raise SelectionError(f"unknown selection method {name!r}; expected one of {METHODS}")
    return name


def default_committee() -> list[KernelSpec]:
    return [KernelSpec("matern_half"), KernelSpec("matern_three_halves"), KernelSpec("rbf")]


def check_committee(specs) -> list[KernelSpec]:
    specs = list(specs)
    if len(specs) < 2:
        raise SelectionError(f"a committee needs at least 2 members, got {len(specs)}")
    for i, a in enumerate(specs):
        for b in specs[i + 1:]:
            if a == b:
                raise SelectionError(f"committee members must be distinct, {a} appears twice")
    return specs


def _candidates(unlabeled) -> np.ndarray:
    cand = np.array(sorted(int(i) for i in unlabeled), dtype=int)
    if cand.size == 0:
        raise SelectionError("the unlabeled pool is empty")
    return cand


def _rows(X):
    X = np.asarray(X, dtype=float)
    return X[:, None] if X.ndim == 1 else X


def feature_covariance(x_i, x_j) -> float:
    """Sample covariance between the components of two feature vectors."""
    x_i = np.asarray(x_i, dtype=float).ravel()
    x_j = np.asarray(x_j, dtype=float).ravel()
    if x_i.shape != x_j.shape:
        raise SelectionError(f"dimension mismatch: {x_i.size} vs {x_j.size}")
    n = x_i.size
    if n < 2:
        raise SelectionError("feature covariance needs at least 2 feature dimensions")
    return float(np.dot(x_i - x_i.mean(), x_j - x_j.mean()) / (n - 1))


def _centered(X):
    X = _rows(X)
    if X.shape[1] < 2:
        raise SelectionError("covariance sampling needs at least 2 feature dimensions")
    return (X - X.mean(axis=1, keepdims=True)) / np.sqrt(X.shape[1] - 1)


class CovarianceCache:
    """Running sums ``S_i = sum_{j in U, j != i} cov(x_i, x_j)`` over the unlabeled pool.

    Build with :func:`cache_init`, update with :func:`cache_remove`.
    """

    def __init__(self, members, sums, centered, matrix=None, positions=None):
        self.members = members
        self.sums = sums
        self._centered = centered
        self._matrix = matrix
        self._positions = positions

    def __len__(self):
        return len(self.members)

    def as_dict(self) -> dict[int, float]:
        return {int(i): float(s) for i, s in zip(self.members, self.sums)}

    def _column(self, index, members):
        if self._matrix is not None:
            return self._matrix[self._positions[index], self._positions[members]]
        return self._centered[members] @ self._centered[index]


def cache_init(X, unlabeled, full_matrix_limit: int = FULL_MATRIX_LIMIT) -> CovarianceCache:
    members = np.array(sorted(int(i) for i in unlabeled), dtype=int)
    Z = _centered(X)
    Zu = Z[members]
    if len(members) <= full_matrix_limit:
        C = Zu @ Zu.T
        sums = C.sum(axis=1) - np.diag(C)
        positions = np.full(Z.shape[0], -1, dtype=int)
        positions[members] = np.arange(len(members))
        return CovarianceCache(members, sums, Z, C, positions)
    sums = Zu @ Zu.sum(axis=0) - np.einsum("ij,ij->i", Zu, Zu)
    return CovarianceCache(members, sums, Z)


def cache_remove(cache: CovarianceCache, X, removed_index: int) -> CovarianceCache:
    """Drop ``removed_index`` from the cache in place and return it.

    ``X`` is accepted for interface symmetry; the cache already holds the
    centered rows it needs.
    """
    removed_index = int(removed_index)
    pos = np.searchsorted(cache.members, removed_index)
    if pos >= len(cache.members) or cache.members[pos] != removed_index:
        raise SelectionError(f"index {removed_index} is not in the covariance cache")
    keep = np.ones(len(cache.members), dtype=bool)
    keep[pos] = False
    members = cache.members[keep]
    cache.sums = cache.sums[keep] - cache._column(removed_index, members)
    cache.members = members
    return cache


def select_uncertainty(model: GPModel, X, unlabeled) -> int:
    cand = _candidates(unlabeled)
    _, std = predict_arrays(model, _rows(X)[cand])
    return int(cand[np.argmax(std)])


def select_covariance(model: GPModel, X, unlabeled, cache: CovarianceCache) -> int:
    """Maximize predictive std times the summed feature covariance.

    Negative sums are used as they are. A single remaining sample is returned
    directly since its sum is empty.
    """
    cand = _candidates(unlabeled)
    if cand.size == 1:
        return int(cand[0])
    if len(cache.members) != len(cand) or not np.array_equal(cache.members, cand):
        raise SelectionError(
            f"stale covariance cache: {len(cache.members)} entries for {len(cand)} unlabeled samples"
        )
    _, std = predict_arrays(model, _rows(X)[cand])
    return int(cand[np.argmax(std * cache.sums)])


def select_qbc(committee_models, X, unlabeled) -> int:
    """Pick the sample where committee mean predictions spread the most."""
    if len(committee_models) < 2:
        raise SelectionError(f"QBC needs at least 2 committee models, got {len(committee_models)}")
    cand = _candidates(unlabeled)
    Xc = _rows(X)[cand]
    means = np.stack([predict_arrays(m, Xc)[0] for m in committee_models])
    spread = means.max(axis=0) - means.min(axis=0)
    return int(cand[np.argmax(spread)])


def select_random(unlabeled, rng: np.random.Generator) -> int:
    cand = _candidates(unlabeled)
    return int(cand[rng.integers(cand.size)])


def select_fft(X, labeled, unlabeled) -> int:
    """Farthest-first traversal anchored on the current labeled set."""
    labeled = np.array(sorted(int(i) for i in labeled), dtype=int)
    if labeled.size == 0:
        raise SelectionError("farthest-first traversal needs a nonempty labeled set")
    cand = _candidates(unlabeled)
    X = _rows(X)
    nearest = cdist(X[cand], X[labeled]).min(axis=1)
    return int(cand[np.argmax(nearest)])
