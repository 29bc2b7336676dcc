import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divfact.divergence import i_divergence
from divfact.errors import DefinitenessError
from divfact.harness import (SyntheticSpec, make_rng, plant_model, probe_oracle_first_min,
                             probe_oracle_second_min, random_lifted, random_spd, sample_covariance)
from divfact.lifted import assemble_lifted, exact_fa_diagnostic, second_partial_min
from divfact.model import FactorModel


def test_plant_exact():
    truth, S0 = plant_model(SyntheticSpec(6, 2, seed=0))
    assert exact_fa_diagnostic(S0, truth)
    assert np.all((truth.D > 0.1) & (truth.D < 1.1))
    assert np.all(np.abs(truth.H) <= 1.0)


def test_plant_deterministic():
    a = plant_model(SyntheticSpec(6, 2, perturbation=0.1, seed=7))
    b = plant_model(SyntheticSpec(6, 2, perturbation=0.1, seed=7))
    assert a[1].tobytes() == b[1].tobytes()
    assert a[0].H.tobytes() == b[0].H.tobytes()


def test_plant_perturbed():
    truth, S0 = plant_model(SyntheticSpec(6, 2, perturbation=0.1, seed=1))
    assert np.linalg.eigvalsh(S0)[0] > 0
    assert not exact_fa_diagnostic(S0, truth)


def test_plant_scales():
    truth, _ = plant_model(SyntheticSpec(5, 1, loading_scale=3.0, noise_scale=2.0, seed=0))
    assert np.all(np.abs(truth.H) <= 3.0)
    assert np.all((truth.D > 0.2) & (truth.D < 2.2))


@pytest.mark.parametrize("kwargs", [dict(n=3, k=3), dict(n=3, k=0), dict(n=4, k=1, noise_scale=0.0),
                                    dict(n=4, k=1, perturbation=-1.0)])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        SyntheticSpec(**kwargs)


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 5.0))
def test_plant_always_spd(seed, perturbation):
    _, S0 = plant_model(SyntheticSpec(5, 2, perturbation=perturbation, seed=seed))
    assert np.linalg.eigvalsh(S0)[0] > 0


def test_sample_covariance_hand_value():
    S = sample_covariance(np.array([[1.0], [2.0], [3.0]]))
    assert S[0, 0] == pytest.approx(2.0 / 3.0, abs=1e-15)


def test_sample_covariance_degenerate():
    with pytest.raises(DefinitenessError, match="ridge"):
        sample_covariance(np.ones((10, 3)))
    X = make_rng(0).standard_normal((2, 4))
    with pytest.raises(DefinitenessError):
        sample_covariance(X)
    S = sample_covariance(X, ridge=True)
    assert np.linalg.eigvalsh(S)[0] > 0


def test_sample_covariance_monte_carlo():
    truth, S0 = plant_model(SyntheticSpec(4, 1, seed=3))
    rng = make_rng(42)
    m = 1000
    Y = rng.standard_normal((m, 1)) @ truth.H.T + rng.standard_normal((m, 4)) * np.sqrt(truth.D)
    S = sample_covariance(Y)
    # standard error of a Gaussian sample covariance entry
    se = np.sqrt((np.outer(np.diag(S0), np.diag(S0)) + S0 ** 2) / m)
    assert np.all(np.abs(S - S0) <= 5 * se)


def test_second_probe_self_probe_is_zero():
    Sigma = random_lifted(4, 2, make_rng(1))
    assert probe_oracle_second_min(Sigma, 1, seed=0, max_scale=0.0) == pytest.approx(0.0, abs=1e-12)
    assert probe_oracle_first_min(Sigma.s11 * 1.1, Sigma, 1, seed=0, max_scale=0.0) == pytest.approx(0.0, abs=1e-12)


def test_second_probe_sweep():
    Sigma = random_lifted(4, 2, make_rng(2))
    assert probe_oracle_second_min(Sigma, 1000, seed=3) >= -1e-10


def test_rescaled_minimizer_is_worse():
    Sigma = random_lifted(4, 2, make_rng(3))
    best, star = second_partial_min(Sigma)
    opt = i_divergence(Sigma.whole, star.whole)
    for c in (0.5, 2.0):
        scaled = FactorModel(best.H * c, best.D, best.Q)
        assert i_divergence(Sigma.whole, assemble_lifted(scaled).whole) > opt + 1e-6


def test_generators_are_seed_deterministic():
    a = random_spd(5, make_rng(9))
    b = random_spd(5, make_rng(9))
    assert a.tobytes() == b.tobytes()
    assert probe_oracle_second_min(random_lifted(3, 1, make_rng(1)), 50, seed=5) == \
        probe_oracle_second_min(random_lifted(3, 1, make_rng(1)), 50, seed=5)
