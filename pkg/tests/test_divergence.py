import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divfact.divergence import i_divergence, objective
from divfact.errors import DefinitenessError, DimensionError
from divfact.harness import make_rng, random_spd
from divfact.model import FactorModel

from conftest import dense_divergence, spd

seeds = st.integers(0, 2**32 - 1)


def test_identical_arguments():
    S = spd(4, 1)
    assert i_divergence(S, S) == pytest.approx(0.0, abs=1e-14)


def test_scalar_hand_values():
    assert i_divergence([[2.0]], [[1.0]]) == pytest.approx((1 - math.log(2)) / 2, abs=1e-15)
    assert i_divergence([[2.0]], [[1.0]]) == pytest.approx(0.153426, abs=1e-6)
    # asymmetry witness
    assert i_divergence([[1.0]], [[2.0]]) == pytest.approx(0.5 * (math.log(2) + 0.5 - 1), abs=1e-15)
    assert i_divergence([[1.0]], [[2.0]]) == pytest.approx(0.096574, abs=1e-6)


def test_errors():
    with pytest.raises(DimensionError):
        i_divergence(np.eye(2), np.eye(3))
    with pytest.raises(DefinitenessError):
        i_divergence(np.eye(2), np.diag([1.0, -1.0]))
    with pytest.raises(DefinitenessError):
        i_divergence(np.diag([1.0, 0.0]), np.eye(2))


@settings(max_examples=80)
@given(seeds, st.integers(1, 10))
def test_nonnegative_and_matches_dense(seed, n):
    rng = make_rng(seed)
    S1, S2 = random_spd(n, rng, 50.0), random_spd(n, rng, 50.0)
    d = i_divergence(S1, S2)
    assert d >= 0.0
    assert d == pytest.approx(dense_divergence(S1, S2), abs=1e-10)
    assert i_divergence(S1, S1) == pytest.approx(0.0, abs=1e-14)


@settings(max_examples=60)
@given(seeds, st.integers(1, 8))
def test_congruence_invariance(seed, n):
    rng = make_rng(seed)
    S1, S2 = random_spd(n, rng), random_spd(n, rng)
    T = np.eye(n) + 0.5 * rng.standard_normal((n, n))
    if np.linalg.cond(T) > 1e3:
        T = np.eye(n) + 0.1 * rng.standard_normal((n, n))
    assert i_divergence(T @ S1 @ T.T, T @ S2 @ T.T) == pytest.approx(i_divergence(S1, S2), abs=1e-10)


def test_objective_exact_model_is_zero(rng):
    H = rng.standard_normal((5, 2))
    D = rng.uniform(0.5, 1.5, 5)
    assert objective(H @ H.T + np.diag(D), FactorModel(H, D)) == pytest.approx(0.0, abs=1e-13)


def test_objective_zero_loadings_is_diagonal_baseline():
    S0 = spd(4, 2)
    model = FactorModel(np.zeros((4, 1)), np.diag(S0))
    assert objective(S0, model) == pytest.approx(i_divergence(S0, np.diag(np.diag(S0))), abs=1e-14)


def test_objective_matches_dense_formula():
    rng = make_rng(99)
    S0 = random_spd(4, rng)
    model = FactorModel(rng.standard_normal((4, 1)), rng.uniform(0.3, 2.0, 4))
    Sig = model.H @ model.H.T + np.diag(model.D)
    assert objective(S0, model) == pytest.approx(dense_divergence(S0, Sig), abs=1e-12)


@settings(max_examples=60)
@given(seeds, st.integers(2, 12), st.data())
def test_objective_woodbury_route(seed, n, data):
    k = data.draw(st.integers(1, n - 1))
    rng = make_rng(seed)
    S0 = random_spd(n, rng)
    model = FactorModel(rng.standard_normal((n, k)), rng.uniform(0.3, 2.0, n))
    assert objective(S0, model) == pytest.approx(i_divergence(S0, model.cov()), abs=1e-11)


def test_objective_dimension_check():
    with pytest.raises(DimensionError):
        objective(np.eye(3), FactorModel(np.ones((4, 1)), np.ones(4)))


def test_nearly_equal_covariances_are_accurate():
    # D(S || c S) = n/2 (log c + 1/c - 1) ~ n delta^2 / 4 for c = 1 + delta
    S = random_spd(6, make_rng(5), 50.0)
    delta = 1e-7
    expected = 3.0 * (np.log1p(delta) - delta / (1.0 + delta))
    series = 3.0 * (delta**2 / 2 - 2 * delta**3 / 3)
    assert i_divergence(S, (1.0 + delta) * S) == pytest.approx(series, rel=1e-6)
    assert i_divergence(S, (1.0 - delta) * S) > 0.0
    assert expected == pytest.approx(series, rel=1e-2)
