"""Factor model parameters ``(H, D, Q)`` and covariance validation."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DefinitenessError, DimensionError, SingularityError
from .matops import cholesky_lower, max_abs, symmetrize

# Inputs whose asymmetry exceeds this (relative to max|entry|) are rejected.
ASYMMETRY_RTOL = 1e-6


def as_covariance(S, name="covariance"):
    """Validate ``S`` as a symmetric positive definite matrix and return it.

    The result is symmetrized. Raises :class:`DefinitenessError` if the
    Cholesky factorization fails its pivot threshold.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim == 0:
        S = S.reshape(1, 1)
    S, asym = symmetrize(S)
    if asym > ASYMMETRY_RTOL * max(max_abs(S), np.finfo(float).tiny):
        raise DimensionError(f"{name} is not symmetric (asymmetry {asym:.3g})")
    cholesky_lower(S, name)
    return S


@dataclass(frozen=True, eq=False)
class FactorModel:
    """Loadings ``H`` (n x k), noise variances ``D`` (n,) and optional mixing ``Q`` (k x k).

    The implied covariance of the observed vector is ``H H^T + diag(D)``. When
    ``Q`` is present the model also names the lifted covariance
    ``[[H H^T + D, H Q], [(H Q)^T, Q^T Q]]``.
    """

    H: np.ndarray
    D: np.ndarray
    Q: Optional[np.ndarray] = None

    def __post_init__(self):
        H = np.array(self.H, dtype=float, ndmin=2)
        D = np.array(self.D, dtype=float).reshape(-1)
        if H.ndim != 2:
            raise DimensionError(f"H must be a matrix, got shape {H.shape}")
        n, k = H.shape
        if D.shape != (n,):
            raise DimensionError(f"D has length {D.shape[0]}, expected {n}")
        if not np.all(np.isfinite(H)) or not np.all(np.isfinite(D)):
            raise ValueError("model has non-finite entries")
        if np.any(D <= 0.0):
            raise DefinitenessError(f"D must be positive, min entry {D.min():.3g}", index=int(np.argmin(D)))
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "D", D)
        if self.Q is not None:
            Q = np.array(self.Q, dtype=float, ndmin=2)
            if Q.shape != (k, k):
                raise DimensionError(f"Q has shape {Q.shape}, expected {(k, k)}")
            sv = np.linalg.svd(Q, compute_uv=False)
            if sv[-1] <= k * np.finfo(float).eps * sv[0]:
                raise SingularityError("Q is singular", block="Q")
            object.__setattr__(self, "Q", Q)

    @property
    def n(self):
        return self.H.shape[0]

    @property
    def k(self):
        return self.H.shape[1]

    @property
    def K(self):
        if self.Q is None:
            raise ValueError("model has no Q")
        return self.H @ self.Q

    @property
    def P(self):
        if self.Q is None:
            raise ValueError("model has no Q")
        return self.Q.T @ self.Q

    def loading_gram(self):
        return self.H @ self.H.T

    def cov(self):
        """``H H^T + diag(D)``."""
        return self.loading_gram() + np.diag(self.D)

    def with_q(self, Q):
        return FactorModel(self.H, self.D, Q)

    def without_q(self):
        return FactorModel(self.H, self.D)

    def check_compatible(self, S0):
        if S0.shape != (self.n, self.n):
            raise DimensionError(f"model has n={self.n} but covariance is {S0.shape[0]}x{S0.shape[1]}")
