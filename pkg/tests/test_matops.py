import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divfact.errors import DefinitenessError, DimensionError, SingularityError
from divfact.harness import make_rng, random_model, random_spd
from divfact.lifted import assemble_lifted
from divfact.matops import (BlockPartition, delta_diag, fa_logdet, fa_solve, logdet, max_abs,
                            partitioned_inverse, psd_dominates, sqrt_factor, symmetrize, woodbury_inv)

from conftest import cofactor_det, spd

seeds = st.integers(0, 2**32 - 1)


def test_delta_diag_examples():
    np.testing.assert_array_equal(delta_diag(np.eye(3)), [1, 1, 1])
    np.testing.assert_array_equal(delta_diag([[1, 2], [3, 4]]), [1, 4])
    d = np.array([3.0, 0.5, 2.0])
    np.testing.assert_array_equal(np.diag(delta_diag(np.diag(d))), np.diag(d))


def test_delta_diag_rejects_non_square():
    with pytest.raises(DimensionError):
        delta_diag(np.ones((2, 3)))


@given(seeds, st.integers(1, 8))
def test_delta_diag_idempotent(seed, n):
    M = make_rng(seed).standard_normal((n, n))
    once = np.diag(delta_diag(M))
    np.testing.assert_array_equal(delta_diag(once), delta_diag(M))


def test_symmetrize_records_asymmetry():
    S, asym = symmetrize([[1.0, 2.0], [2.5, 1.0]])
    np.testing.assert_array_equal(S, S.T)
    assert asym == pytest.approx(0.5)


def test_sqrt_factor_examples():
    np.testing.assert_array_equal(sqrt_factor(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(sqrt_factor([[4.0]]), [[2.0]])
    P = spd(5, 3)
    S = sqrt_factor(P)
    assert max_abs(S.T @ S - P) < 1e-12
    np.testing.assert_array_equal(S, np.triu(S))
    np.testing.assert_array_equal(S, sqrt_factor(P))


@settings(max_examples=50)
@given(seeds, st.integers(1, 12))
def test_sqrt_factor_multiplies_back(seed, n):
    P = spd(n, seed, cond=1e3)
    S = sqrt_factor(P)
    assert max_abs(S.T @ S - P) <= 1e-12 * max_abs(P)


def test_sqrt_factor_reports_failing_pivot():
    P = np.diag([1.0, 2.0, -1.0, 3.0])
    with pytest.raises(DefinitenessError) as info:
        sqrt_factor(P)
    assert info.value.index == 2


def test_definiteness_threshold_is_relative():
    # pivot 1e-14 is below 1e-13 * max diag
    with pytest.raises(DefinitenessError) as info:
        sqrt_factor(np.diag([1.0, 1e-14]))
    assert info.value.index == 1
    sqrt_factor(np.diag([1.0, 1e-12]))


def test_partitioned_inverse_block_diagonal():
    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    Dm = np.array([[3.0]])
    M = np.block([[A, np.zeros((2, 1))], [np.zeros((1, 2)), Dm]])
    inv = partitioned_inverse(M, BlockPartition(2, 1))
    np.testing.assert_allclose(inv[:2, :2], np.linalg.inv(A), atol=1e-15)
    np.testing.assert_allclose(inv[2:, 2:], [[1 / 3]], atol=1e-15)
    np.testing.assert_array_equal(inv[:2, 2:], 0.0)


def test_partitioned_inverse_two_by_two():
    inv = partitioned_inverse([[2.0, 1.0], [1.0, 2.0]], BlockPartition(1, 1))
    np.testing.assert_allclose(inv, [[2 / 3, -1 / 3], [-1 / 3, 2 / 3]], atol=1e-15)


def test_partitioned_inverse_random():
    M = spd(6, 7)
    inv = partitioned_inverse(M, BlockPartition(4, 2))
    assert max_abs(M @ inv - np.eye(6)) < 1e-11
    np.testing.assert_array_equal(inv, inv.T)


@settings(max_examples=60)
@given(seeds, st.integers(2, 20), st.data())
def test_partitioned_inverse_property(seed, n, data):
    top = data.draw(st.integers(1, n - 1))
    M = spd(n, seed)
    inv = partitioned_inverse(M, BlockPartition(top, n - top))
    assert max_abs(inv @ M - np.eye(n)) < 1e-11


def test_partitioned_inverse_errors():
    with pytest.raises(DimensionError):
        partitioned_inverse(np.eye(3), BlockPartition(1, 1))
    M = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    with pytest.raises(SingularityError) as info:
        partitioned_inverse(M, BlockPartition(1, 2))
    assert info.value.block == "D"
    # invertible D but singular Schur complement A - C D^-1 B
    M = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(SingularityError) as info:
        partitioned_inverse(M, BlockPartition(1, 1))
    assert "A - C D^-1 B" in info.value.block


def test_woodbury_zero_update():
    d = np.array([2.0, 4.0, 5.0])
    out = woodbury_inv(d, np.zeros((3, 2)), np.eye(2), np.zeros((2, 3)))
    np.testing.assert_allclose(out, np.diag(1 / d), atol=1e-15)


def test_woodbury_scalar():
    # (3 - 1*1*1)^-1 = 1/3 + (1/3)(1 - 1/3)^-1(1/3) = 1/2
    assert woodbury_inv([3.0], [[1.0]], [[1.0]], [[1.0]])[0, 0] == pytest.approx(0.5, abs=1e-15)


def test_woodbury_factor_route(rng):
    H = rng.standard_normal((6, 2))
    d = rng.uniform(0.5, 2.0, size=6)
    dense = np.linalg.inv(H @ H.T + np.diag(d)) @ H
    route = (H / d[:, None]) @ np.linalg.inv(np.eye(2) + H.T @ (H / d[:, None]))
    assert max_abs(dense - route) < 1e-11
    # same quantity through woodbury_inv with A = -I
    via = woodbury_inv(d, H, -np.eye(2), H.T) @ H
    assert max_abs(dense - via) < 1e-11
    assert max_abs(fa_solve(H, d, H) - dense) < 1e-11


@settings(max_examples=60)
@given(seeds, st.integers(2, 20), st.data())
def test_woodbury_matches_dense(seed, n, data):
    m = data.draw(st.integers(1, n))
    rng = make_rng(seed)
    d = rng.uniform(1.0, 3.0, size=n)
    B = 0.3 * rng.standard_normal((n, m))
    C = 0.3 * rng.standard_normal((m, n))
    A = np.eye(m) + 0.1 * rng.standard_normal((m, m))
    dense = np.linalg.inv(np.diag(d) - B @ A @ C)
    assert max_abs(woodbury_inv(d, B, A, C) - dense) < 1e-11


def test_logdet_examples():
    assert logdet(np.eye(4)) == 0.0
    assert logdet(np.diag([2.0, 0.5])) == pytest.approx(0.0, abs=1e-15)
    P = spd(5, 11)
    assert np.exp(logdet(P)) == pytest.approx(cofactor_det(P), rel=1e-10)
    with pytest.raises(DefinitenessError):
        logdet(-np.eye(2))


@settings(max_examples=40)
@given(seeds, st.integers(2, 10), st.data())
def test_logdet_block_identity(seed, n, data):
    k = data.draw(st.integers(1, n - 1))
    model = random_model(n, k, make_rng(seed))
    whole = assemble_lifted(model).whole
    assert logdet(whole) == pytest.approx(np.sum(np.log(model.D)) + logdet(model.P), abs=1e-10)
    assert fa_logdet(model.H, model.D) == pytest.approx(logdet(model.cov()), abs=1e-10)


def test_psd_dominates_examples():
    I = np.eye(3)
    assert psd_dominates(2 * I, I, 0.0)
    assert not psd_dominates(I, 2 * I, 0.0)
    with pytest.raises(DimensionError):
        psd_dominates(np.eye(2), np.eye(3))
