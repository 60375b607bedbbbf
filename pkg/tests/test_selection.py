from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    covariance_bruteforce,
    covariance_sums_bruteforce,
    fft_bruteforce,
    qbc_bruteforce,
)
from poolal import gp, selection
from poolal.errors import SelectionError
from poolal.kernels import KernelSpec


def fake_model_with_stds(monkeypatch, stds_by_index, X):
    """Patch predict_arrays so selectors see prescribed stds for rows of X."""
    lookup = {tuple(np.atleast_1d(X[i])): s for i, s in stds_by_index.items()}

    def fake(model, Xq):
        Xq = np.asarray(Xq)
        std = np.array([lookup[tuple(np.atleast_1d(row))] for row in Xq])
        return np.zeros(len(Xq)), std

    monkeypatch.setattr(selection, "predict_arrays", fake)
    return SimpleNamespace()


# -- feature covariance -------------------------------------------------------

def test_feature_covariance_examples():
    assert selection.feature_covariance([1, 2, 3], [1, 2, 3]) == 1.0
    assert selection.feature_covariance([1, 2, 3], [3, 2, 1]) == -1.0
    assert selection.feature_covariance([4, -1, 7], [2, 2, 2]) == 0.0
    with pytest.raises(SelectionError):
        selection.feature_covariance([1.0], [2.0])


# -- uncertainty --------------------------------------------------------------

def test_uncertainty_argmax_and_ties(monkeypatch):
    X = np.arange(12, dtype=float)[:, None]
    model = fake_model_with_stds(monkeypatch, {5: 0.1, 9: 0.5, 2: 0.2}, X)
    assert selection.select_uncertainty(model, X, {5, 9, 2}) == 9
    model = fake_model_with_stds(monkeypatch, {5: 0.3, 9: 0.3, 2: 0.3}, X)
    assert selection.select_uncertainty(model, X, {5, 9, 2}) == 2


def test_uncertainty_prefers_far_point():
    X = np.concatenate([np.linspace(0, 1, 15), [10.0]])[:, None]
    y = np.sin(3 * X[:, 0])
    train = [0, 4, 9, 14]
    model = gp.fit(X[train], y[train], KernelSpec(length_scale=0.3), optimize=False)
    unlabeled = set(range(16)) - set(train)
    pick = selection.select_uncertainty(model, X, unlabeled)
    assert pick == 15
    std = gp.predict_arrays(model, X)[1]
    assert std[15] == max(std[sorted(unlabeled)])


def test_uncertainty_empty_pool():
    with pytest.raises(SelectionError):
        selection.select_uncertainty(None, np.zeros((2, 1)), set())


# -- covariance cache ---------------------------------------------------------

def test_cache_matches_bruteforce_and_after_removal(rng):
    X = rng.normal(size=(30, 4))
    unl = set(range(30)) - {3, 7}
    cache = selection.cache_init(X, unl)
    ref = covariance_sums_bruteforce(X, unl)
    for i, s in cache.as_dict().items():
        assert abs(s - ref[i]) < 1e-9
    selection.cache_remove(cache, X, 11)
    unl.discard(11)
    fresh = selection.cache_init(X, unl).as_dict()
    assert cache.as_dict().keys() == fresh.keys()
    for i in fresh:
        assert abs(cache.as_dict()[i] - fresh[i]) < 1e-9


@pytest.mark.parametrize("limit", [selection.FULL_MATRIX_LIMIT, 0])
def test_cache_after_many_removals(limit):
    r = np.random.default_rng(limit + 1)
    X = r.normal(size=(80, 5))
    unl = set(range(80))
    cache = selection.cache_init(X, unl, full_matrix_limit=limit)
    for idx in r.choice(80, size=20, replace=False):
        selection.cache_remove(cache, X, int(idx))
        unl.discard(int(idx))
    fresh = covariance_sums_bruteforce(X, unl)
    got = cache.as_dict()
    assert got.keys() == fresh.keys()
    assert max(abs(got[i] - fresh[i]) for i in fresh) < 1e-9


def test_cache_identical_rows():
    row = np.array([1.0, 4.0, 2.0, 9.0])
    X = np.tile(row, (3, 1))
    var = np.var(row, ddof=1)
    cache = selection.cache_init(X, {0, 1, 2})
    np.testing.assert_allclose(cache.sums, 2 * var, rtol=1e-14)


def test_cache_remove_unknown_index(rng):
    X = rng.normal(size=(5, 3))
    cache = selection.cache_init(X, {0, 1, 2})
    with pytest.raises(SelectionError):
        selection.cache_remove(cache, X, 4)


# -- covariance selection -----------------------------------------------------

def test_covariance_product_ordering(monkeypatch):
    X = np.array([[0.0, 1.0], [1.0, 0.0], [5.0, 5.0]])
    model = fake_model_with_stds(monkeypatch, {0: 1.0, 1: 1.0}, X)
    cache = SimpleNamespace(members=np.array([0, 1]), sums=np.array([2.0, 3.0]))
    assert selection.select_covariance(model, X, {0, 1}, cache) == 1
    model = fake_model_with_stds(monkeypatch, {0: 3.0, 1: 1.0}, X)
    cache = SimpleNamespace(members=np.array([0, 1]), sums=np.array([1.0, 2.0]))
    assert selection.select_covariance(model, X, {0, 1}, cache) == 0


def test_covariance_singleton_and_stale_cache(rng):
    X = rng.normal(size=(6, 3))
    assert selection.select_covariance(None, X, {4}, None) == 4
    cache = selection.cache_init(X, {1, 2, 3})
    with pytest.raises(SelectionError, match="stale"):
        selection.select_covariance(None, X, {1, 2}, cache)


@pytest.mark.parametrize("seed", range(5))
def test_covariance_matches_bruteforce(seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(50, 3))
    y = X[:, 0] - X[:, 1] ** 2
    labeled = list(r.choice(50, size=6, replace=False))
    unl = set(range(50)) - set(labeled)
    model = gp.fit(X[labeled], y[labeled], KernelSpec(length_scale=1.5), optimize=False)
    cache = selection.cache_init(X, unl)
    std = gp.predict_arrays(model, X)[1]
    expected = covariance_bruteforce({i: std[i] for i in unl}, X, unl)
    assert selection.select_covariance(model, X, unl, cache) == expected


def test_covariance_scale_invariance(monkeypatch, rng):
    X = rng.normal(size=(20, 3))
    unl = set(range(20))
    cache = selection.cache_init(X, unl)
    stds = {i: float(v) for i, v in enumerate(rng.uniform(0.1, 1, 20))}
    a = selection.select_covariance(fake_model_with_stds(monkeypatch, stds, X), X, unl, cache)
    scaled = {i: 7.5 * v for i, v in stds.items()}
    b = selection.select_covariance(fake_model_with_stds(monkeypatch, scaled, X), X, unl, cache)
    assert a == b


# -- QBC ----------------------------------------------------------------------

class _MeanModel:
    def __init__(self, means):
        self.means = means


def fake_qbc(monkeypatch, X):
    rows = {tuple(X[i]): i for i in range(len(X))}

    def fake(model, Xq):
        idx = [rows[tuple(r)] for r in np.asarray(Xq)]
        return np.array([model.means[i] for i in idx]), np.zeros(len(idx))

    monkeypatch.setattr(selection, "predict_arrays", fake)


def test_qbc_spread(monkeypatch):
    X = np.array([[0.0], [1.0]])
    fake_qbc(monkeypatch, X)
    members = [_MeanModel({0: 1.0, 1: 1.0}), _MeanModel({0: 2.0, 1: 1.1}), _MeanModel({0: 1.5, 1: 1.05})]
    assert selection.select_qbc(members, X, {0, 1}) == 0
    same = [_MeanModel({0: 1.0, 1: 1.0})] * 3
    assert selection.select_qbc(same, X, {1, 0}) == 0


def test_qbc_errors():
    with pytest.raises(SelectionError):
        selection.select_qbc([object()], np.zeros((2, 1)), {0})


def test_qbc_default_committee_bruteforce():
    r = np.random.default_rng(9)
    X = np.sort(r.uniform(-2, 2, 20))[:, None]
    y = np.cos(2 * X[:, 0])
    labeled = [0, 7, 13, 19]
    unl = set(range(20)) - set(labeled)
    members = [gp.fit(X[labeled], y[labeled], spec, restarts=0) for spec in selection.default_committee()]
    means = [dict(zip(range(20), gp.predict_arrays(m, X)[0])) for m in members]
    assert selection.select_qbc(members, X, unl) == qbc_bruteforce(means, unl)
    assert selection.select_qbc(members[::-1], X, unl) == selection.select_qbc(members, X, unl)


def test_committee_validation():
    with pytest.raises(SelectionError):
        selection.check_committee([KernelSpec()])
    with pytest.raises(SelectionError):
        selection.check_committee([KernelSpec(), KernelSpec()])
    assert len(selection.check_committee(selection.default_committee())) == 3


# -- random -------------------------------------------------------------------

def test_random_singleton_and_determinism():
    assert selection.select_random({42}, np.random.default_rng(0)) == 42
    r1, r2 = np.random.default_rng(8), np.random.default_rng(8)
    a = [selection.select_random(set(range(50)), r1) for _ in range(30)]
    b = [selection.select_random(set(range(50)), r2) for _ in range(30)]
    assert a == b
    with pytest.raises(SelectionError):
        selection.select_random(set(), r1)


def test_random_is_uniform():
    r = np.random.default_rng(2024)
    counts = {i: 0 for i in (3, 8, 11, 20)}
    for _ in range(10_000):
        counts[selection.select_random(counts.keys(), r)] += 1
    sigma = np.sqrt(10_000 * 0.25 * 0.75)
    for c in counts.values():
        assert abs(c - 2500) <= 3 * sigma


# -- FFT ----------------------------------------------------------------------

def test_fft_examples():
    X = np.array([[0.0], [1.0], [2.0], [10.0]])
    assert selection.select_fft(X, [1], {0, 2, 3}) == 3
    X = np.array([[0.0], [0.0], [0.5], [3.0]])
    assert selection.select_fft(X, [0, 3], {1, 2}) == 2
    with pytest.raises(SelectionError):
        selection.select_fft(X, [], {1})


@pytest.mark.parametrize("seed", range(20))
def test_fft_matches_bruteforce(seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(100, 3))
    labeled = list(r.choice(100, size=5, replace=False))
    unl = set(range(100)) - set(labeled)
    assert selection.select_fft(X, labeled, unl) == fft_bruteforce(X, labeled, unl)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), perm_seed=st.integers(0, 10_000))
def test_fft_labeled_order_irrelevant(seed, perm_seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(40, 2))
    labeled = list(r.choice(40, size=6, replace=False))
    shuffled = list(np.random.default_rng(perm_seed).permutation(labeled))
    unl = set(range(40)) - set(labeled)
    assert selection.select_fft(X, labeled, unl) == selection.select_fft(X, shuffled, unl)


def test_selectors_return_unlabeled_members(rng):
    X = rng.normal(size=(25, 3))
    y = X.sum(axis=1)
    labeled = [0, 1, 2, 3]
    unl = set(range(4, 25))
    model = gp.fit(X[labeled], y[labeled], KernelSpec(), optimize=False)
    committee = [gp.fit(X[labeled], y[labeled], s, optimize=False) for s in selection.default_committee()]
    picks = [
        selection.select_random(unl, rng),
        selection.select_uncertainty(model, X, unl),
        selection.select_covariance(model, X, unl, selection.cache_init(X, unl)),
        selection.select_qbc(committee, X, unl),
        selection.select_fft(X, labeled, unl),
    ]
    assert all(p in unl for p in picks)
