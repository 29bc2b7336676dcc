"""Lifted (n+k)-dimensional covariances and the two closed-form partial minimizations.

A lifted covariance has blocks ``S11`` (n x n), ``S12`` (n x k) and ``S22``
(k x k). Two subsets matter: covariances whose ``S11`` equals a given
``S0``, and covariances generated by a factor model,
``[[H H^T + D, H Q], [(H Q)^T, Q^T Q]]``. Alternating between the two
closed-form projections below is the fitting algorithm.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .divergence import i_divergence
from .errors import DimensionError
from .matops import cho_solve_lower, cholesky_lower, max_abs, sqrt_factor, symmetrize
from .model import FactorModel, as_covariance

EXACT_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class LiftedCovariance:
    """Positive definite ``(n+k) x (n+k)`` matrix with a fixed ``n | k`` split."""

    whole: np.ndarray
    n: int

    def __post_init__(self):
        W = as_covariance(self.whole, "lifted covariance")
        if not 1 <= self.n < W.shape[0]:
            raise DimensionError(f"cannot split a {W.shape[0]}-dim covariance at n={self.n}")
        object.__setattr__(self, "whole", W)

    @classmethod
    def from_blocks(cls, s11, s12, s22):
        s11 = np.atleast_2d(s11)
        s12 = np.atleast_2d(s12)
        s22 = np.atleast_2d(s22)
        n, k = s12.shape
        if s11.shape != (n, n) or s22.shape != (k, k):
            raise DimensionError(f"block shapes {s11.shape}, {s12.shape}, {s22.shape} do not fit")
        W = np.block([[s11, s12], [s12.T, s22]])
        return cls(W, n)

    @property
    def k(self):
        return self.whole.shape[0] - self.n

    @property
    def s11(self):
        return self.whole[:self.n, :self.n]

    @property
    def s12(self):
        return self.whole[:self.n, self.n:]

    @property
    def s21(self):
        return self.whole[self.n:, :self.n]

    @property
    def s22(self):
        return self.whole[self.n:, self.n:]

    def schur_lower(self):
        """``S22 - S21 S11^{-1} S12``, the conditional covariance of the hidden block."""
        L = cholesky_lower(self.s11, "S11")
        X = solve_triangular(L, self.s12, lower=True)
        return symmetrize(self.s22 - X.T @ X)[0]

    def schur_upper(self):
        """``S11 - S12 S22^{-1} S21``."""
        L = cholesky_lower(self.s22, "S22")
        X = solve_triangular(L, self.s21, lower=True)
        return symmetrize(self.s11 - X.T @ X)[0]


def assemble_lifted(model):
    """The lifted covariance ``Sigma(H, D, Q)`` of a model carrying ``Q``."""
    if model.Q is None:
        raise ValueError("lifting requires the model to carry Q")
    K = model.K
    return LiftedCovariance.from_blocks(model.cov(), K, model.P)


def first_partial_min(S0, Sigma):
    """Minimize ``D(Sigma' || Sigma)`` over lifted ``Sigma'`` whose top-left block is ``S0``.

    The minimizer keeps the conditional law of the hidden block given the
    observed block and swaps the observed marginal for ``S0``::

        S*11 = S0
        S*12 = S0 S11^{-1} S12
        S*22 = S22 - S21 S11^{-1} (S11 - S0) S11^{-1} S12

    Its value equals ``D(S0 || S11)``.
    """
    S0 = as_covariance(S0, "S0")
    if S0.shape[0] != Sigma.n:
        raise DimensionError(f"S0 is {S0.shape[0]}x{S0.shape[0]} but lifted n={Sigma.n}")
    L = cholesky_lower(Sigma.s11, "S11")
    G = cho_solve_lower(L, Sigma.s12)  # S11^{-1} S12
    s12 = S0 @ G
    s22 = Sigma.s22 - Sigma.s21 @ G + G.T @ S0 @ G
    s22 = (s22 + s22.T) / 2.0
    W = np.block([[S0, s12], [s12.T, s22]])
    # LiftedCovariance validates positive definiteness of the assembled matrix
    return LiftedCovariance(W, Sigma.n)


def second_partial_min(Sigma):
    """Minimize ``D(Sigma || Sigma(H, D, Q))`` over factor-model lifted covariances.

    Returns the canonical minimizing parameters and the minimizing lifted
    covariance. ``Q*`` is the transposed Cholesky factor of ``S22``, so
    ``Q*^T Q* = S22``; ``H* = S12 Q*^{-1}`` and
    ``D* = diag(S11 - S12 S22^{-1} S21)``. The minimizer shares ``S12`` and
    ``S22`` with ``Sigma``.
    """
    Q = sqrt_factor(Sigma.s22)
    # H Q = S12  <=>  Q^T H^T = S21, with Q^T lower triangular
    H = solve_triangular(Q.T, Sigma.s21, lower=True).T
    gram = H @ H.T
    D = np.diag(Sigma.s11) - np.diag(gram)
    model = FactorModel(H, D, Q)
    s11 = gram + np.diag(D)
    W = Sigma.whole.copy()
    W[:Sigma.n, :Sigma.n] = (s11 + s11.T) / 2.0
    return model, LiftedCovariance(W, Sigma.n)


def pythagoras_first(s_prime, s_star, sigma):
    """``|D(S'||S) - D(S'||S*) - D(S*||S)|`` for the first projection."""
    _check_same_split(s_prime, s_star, sigma)
    lhs = i_divergence(s_prime.whole, sigma.whole)
    rhs = i_divergence(s_prime.whole, s_star.whole) + i_divergence(s_star.whole, sigma.whole)
    return abs(lhs - rhs)


def pythagoras_second(sigma, s_star1, candidate):
    """``|D(S||S(H,D,Q)) - D(S||S1*) - D(S1*||S(H,D,Q))|`` for the second projection."""
    cand = assemble_lifted(candidate)
    _check_same_split(sigma, s_star1, cand)
    lhs = i_divergence(sigma.whole, cand.whole)
    rhs = i_divergence(sigma.whole, s_star1.whole) + i_divergence(s_star1.whole, cand.whole)
    return abs(lhs - rhs)


def _check_same_split(*mats):
    shapes = {(m.n, m.k) for m in mats}
    if len(shapes) != 1:
        raise DimensionError(f"lifted covariances have different splits: {sorted(shapes)}")


def exact_fa_diagnostic(S0, model):
    """True if ``model`` reproduces ``S0`` to ``1e-10`` relative max-abs error.

    This certifies an exact factor model through an explicit witness; it does
    not decide whether one exists.
    """
    S0 = np.asarray(S0, dtype=float)
    model.check_compatible(S0)
    return max_abs(S0 - model.cov()) < EXACT_RTOL * max_abs(S0)
