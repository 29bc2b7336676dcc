"""I-divergence between zero-mean Gaussian laws, given their covariances."""

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionError, InternalConsistencyError
from .matops import cho_solve_lower, cholesky_lower, fa_capacitance
from .model import as_covariance

# Negative values down to -CLAMP_TOL are rounding noise and reported as 0.
CLAMP_TOL = 1e-12


def _clamp(value):
    if value < 0.0:
        if value < -CLAMP_TOL:
            raise InternalConsistencyError(f"I-divergence evaluated to {value:.3g} < 0")
        return 0.0
    return value


def _mu_minus_log1p(mu):
    # mu - log(1 + mu) >= 0; the series avoids cancellation near mu = 0
    small = np.abs(mu) < 1e-3
    series = mu**2 * (0.5 - mu * (1.0 / 3.0 - mu * (0.25 - mu * (0.2 - mu / 6.0))))
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = mu - np.log1p(mu)
    return np.where(small, series, direct)


def i_divergence(S1, S2):
    """``D(S1 || S2) = 1/2 log(|S2|/|S1|) + 1/2 tr(S2^{-1} S1) - n/2``.

    Both arguments must be SPD of the same dimension. Not symmetric in its
    arguments. Evaluated as ``1/2 sum(mu - log(1 + mu))`` over the
    eigenvalues ``mu`` of ``L2^{-1} (S1 - S2) L2^{-T}``, which keeps every
    term nonnegative and avoids cancelling the log-determinant against the
    trace when the two covariances are close.
    """
    S1 = as_covariance(S1, "first covariance")
    S2 = as_covariance(S2, "second covariance")
    if S1.shape != S2.shape:
        raise DimensionError(f"dimension mismatch: {S1.shape[0]} vs {S2.shape[0]}")
    L2 = cholesky_lower(S2)
    X = solve_triangular(L2, S1 - S2, lower=True)
    E = solve_triangular(L2, X.T, lower=True)
    mu = np.linalg.eigvalsh((E + E.T) / 2.0)
    if mu.size and mu[0] <= -1.0:
        raise InternalConsistencyError(f"generalized eigenvalue {1.0 + mu[0]:.3g} <= 0 for SPD arguments")
    return _clamp(float(0.5 * np.sum(_mu_minus_log1p(mu))))


def _objective_terms(S0, H, D, logdet_s0):
    # tr((HH^T+D)^{-1} S0) via Woodbury, log|HH^T+D| = log|D| + log|I + H^T D^-1 H|
    L = fa_capacitance(H, D)
    Hs = H / D[:, None]
    trace = float(np.sum(np.diag(S0) / D))
    G = Hs.T @ S0 @ Hs
    trace -= float(np.trace(cho_solve_lower(L, G)))
    logdet_model = float(np.sum(np.log(D))) + 2.0 * float(np.sum(np.log(np.diag(L))))
    n = S0.shape[0]
    return 0.5 * (logdet_model - logdet_s0 + trace - n)


def objective(S0, model, logdet_s0=None):
    """``D(S0 || H H^T + diag(D))`` without forming an n x n inverse.

    ``logdet_s0`` may be passed to avoid refactorizing ``S0`` inside loops.
    """
    S0 = as_covariance(S0, "S0") if logdet_s0 is None else np.asarray(S0, dtype=float)
    model.check_compatible(S0)
    if logdet_s0 is None:
        logdet_s0 = 2.0 * float(np.sum(np.log(np.diag(cholesky_lower(S0)))))
    return _clamp(_objective_terms(S0, model.H, model.D, logdet_s0))
