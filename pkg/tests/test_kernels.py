import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poolal.errors import KernelError
from poolal.kernels import (
    JITTER,
    KINDS,
    KernelSpec,
    euclidean_distance,
    kernel_eval,
    kernel_gradient,
    kernel_matrix,
)


def loop_distance(a, b):
    total = 0.0
    for u, v in zip(a, b):
        total += (u - v) * (u - v)
    return math.sqrt(total)


def test_distance_examples(rng):
    assert euclidean_distance([0, 0], [3, 4]) == 5.0
    x = rng.normal(size=7)
    assert euclidean_distance(x, x) == 0.0
    a, b = rng.normal(size=225), rng.normal(size=225)
    assert abs(euclidean_distance(a, b) - loop_distance(a, b)) < 1e-12
    assert euclidean_distance(a, b) == euclidean_distance(b, a)


def test_distance_dimension_mismatch():
    with pytest.raises(KernelError):
        euclidean_distance([0, 0], [1, 2, 3])


def test_kernel_values():
    assert kernel_eval(KernelSpec("rbf", signal_variance=2.5), [1.0], [1.0]) == 2.5
    rbf = KernelSpec("rbf", 1.0, 1.0)
    assert kernel_eval(rbf, [0, 0], [1, 1]) == pytest.approx(math.exp(-1), rel=1e-15)
    m12 = KernelSpec("matern_half", 2.0, 2.0)
    assert kernel_eval(m12, [0.0], [2.0]) == pytest.approx(2 * math.exp(-1), rel=1e-15)
    m32 = KernelSpec("matern_three_halves", 1.5, 0.7)
    d = 0.9
    a = math.sqrt(3) * d / 0.7
    assert kernel_eval(m32, [0.0], [d]) == pytest.approx(1.5 * (1 + a) * math.exp(-a), rel=1e-14)


@pytest.mark.parametrize("kind", KINDS)
def test_kernel_at_zero_distance_is_signal_variance(kind):
    spec = KernelSpec(kind, signal_variance=3.7, length_scale=0.2)
    assert kernel_eval(spec, [0.3, -1.0], [0.3, -1.0]) == 3.7


@pytest.mark.parametrize("kind", KINDS)
@settings(max_examples=40, deadline=None)
@given(d1=st.floats(0, 50), d2=st.floats(0, 50), l=st.floats(1e-2, 1e2))
def test_kernel_monotone_in_distance(kind, d1, d2, l):
    spec = KernelSpec(kind, 1.0, l)
    lo, hi = sorted((d1, d2))
    assert kernel_eval(spec, [0.0], [lo]) >= kernel_eval(spec, [0.0], [hi])


def test_single_row_matrix_gets_noise_and_jitter():
    spec = KernelSpec("rbf", 1.0, 1.0, noise_variance=1e-10, noise_bounds=(1e-10, 10))
    K = kernel_matrix(spec, np.zeros((1, 2)), add_noise=True)
    assert K.shape == (1, 1)
    assert K[0, 0] == 1.0 + 1e-10 + JITTER


@pytest.mark.parametrize("kind", KINDS)
def test_matrix_matches_double_loop(kind, rng):
    spec = KernelSpec(kind, 1.3, 0.8)
    A, B = rng.normal(size=(4, 3)), rng.normal(size=(5, 3))
    K = kernel_matrix(spec, A, B)
    oracle = np.array([[kernel_eval(spec, a, b) for b in B] for a in A])
    np.testing.assert_allclose(K, oracle, rtol=0, atol=1e-12)
    S = kernel_matrix(spec, A)
    np.testing.assert_array_equal(S, S.T)


def test_matrix_dimension_mismatch(rng):
    with pytest.raises(KernelError):
        kernel_matrix(KernelSpec(), rng.normal(size=(2, 2)), rng.normal(size=(2, 3)))


def test_cholesky_succeeds_with_jitter(rng):
    X = rng.uniform(size=(500, 2))
    K = kernel_matrix(KernelSpec("rbf", 1.0, 0.5, noise_variance=1e-10), X, add_noise=True)
    np.linalg.cholesky(K)


def fd_gradient(spec, X, h=1e-6):
    theta = spec.log_params()
    out = []
    for j in range(3):
        up, down = theta.copy(), theta.copy()
        up[j] += h
        down[j] -= h
        Kp = kernel_matrix(spec.with_log_params(up), X, add_noise=True, jitter=0.0)
        Km = kernel_matrix(spec.with_log_params(down), X, add_noise=True, jitter=0.0)
        out.append((Kp - Km) / (2 * h))
    return np.array(out)


@pytest.mark.parametrize("kind", KINDS)
def test_gradient_matches_finite_differences(kind, rng):
    X = rng.normal(size=(3, 2))
    spec = KernelSpec(kind, 1.7, 0.9, noise_variance=0.05)
    G = kernel_gradient(spec, X)
    np.testing.assert_allclose(G, fd_gradient(spec, X), rtol=1e-5, atol=1e-9)


def test_gradient_closed_forms(rng):
    X = rng.normal(size=(4, 2))
    spec = KernelSpec("matern_three_halves", 2.0, 1.1, noise_variance=0.3)
    G = kernel_gradient(spec, X)
    np.testing.assert_array_equal(G[0], kernel_matrix(spec, X))
    np.testing.assert_array_equal(G[2], 0.3 * np.eye(4))


def test_spec_validation():
    with pytest.raises(KernelError):
        KernelSpec("periodic")
    with pytest.raises(KernelError):
        KernelSpec(length_scale=0.0)
    with pytest.raises(KernelError):
        KernelSpec(signal_bounds=(0.0, 1.0))
    spec = KernelSpec().with_log_params([100.0, -100.0, 0.0])
    assert spec.signal_variance == 1e5 and spec.length_scale == 1e-5
