"""Dense symmetric and partitioned matrix helpers.

Everything here works on plain ``numpy`` arrays. Diagonal matrices are passed
around as 1-d vectors of their diagonal entries.
"""

from typing import NamedTuple

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve, solve_triangular

from .errors import DefinitenessError, DimensionError, SingularityError

# Cholesky pivots below this fraction of the largest diagonal entry are
# treated as a definiteness failure.
PIVOT_RTOL = 1e-13


class BlockPartition(NamedTuple):
    top: int
    bottom: int

    @property
    def dim(self):
        return self.top + self.bottom


def max_abs(a):
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def _square(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    return M


def symmetrize(M):
    """Return ``((M + M.T) / 2, asymmetry)`` where asymmetry is max|M - M.T|."""
    M = _square(M)
    if M.shape[0] == 0:
        raise DimensionError("matrix must have dimension >= 1")
    asym = max_abs(M - M.T)
    return (M + M.T) / 2.0, asym


def delta_diag(M):
    """Diagonal of a square matrix as a vector; a vector is returned as is."""
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        return M.copy()
    return np.diag(_square(M)).copy()


def cholesky_lower(P, name="matrix"):
    """Lower Cholesky factor ``L`` with ``L @ L.T == P``.

    Raises :class:`DefinitenessError` carrying the index of the first pivot
    that fails or falls below ``PIVOT_RTOL * max(diag(P))``.
    """
    P = _square(P, name)
    n = P.shape[0]
    if n == 0:
        raise DimensionError(f"{name} must have dimension >= 1")
    if not np.all(np.isfinite(P)):
        raise DefinitenessError(f"{name} has non-finite entries")
    scale = float(np.max(np.diag(P)))
    if scale <= 0.0:
        raise DefinitenessError(f"{name} is not positive definite: non-positive diagonal", index=0)
    L, info = lapack.dpotrf(P, lower=1, clean=1)
    if info > 0:
        raise DefinitenessError(
            f"{name} is not positive definite: pivot {info - 1} failed", index=info - 1)
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    pivots = np.diag(L) ** 2
    small = np.flatnonzero(pivots < PIVOT_RTOL * scale)
    if small.size:
        raise DefinitenessError(
            f"{name} is not positive definite: pivot {small[0]} = {pivots[small[0]]:.3g} "
            f"below threshold", index=int(small[0]))
    return L


def is_positive_definite(P):
    try:
        cholesky_lower(P)
    except DefinitenessError:
        return False
    return True


def sqrt_factor(P):
    """Upper-triangular ``S`` with ``S.T @ S == P`` (transposed Cholesky factor)."""
    return cholesky_lower(P).T.copy()


def cho_solve_lower(L, B):
    """Solve ``(L L^T) X = B`` given the lower Cholesky factor."""
    Y = solve_triangular(L, B, lower=True)
    return solve_triangular(L.T, Y, lower=False)


def spd_inv(P, name="matrix"):
    L = cholesky_lower(P, name)
    X = cho_solve_lower(L, np.eye(L.shape[0]))
    return (X + X.T) / 2.0


def logdet(P):
    """Natural log-determinant of an SPD matrix via its Cholesky factor."""
    L = cholesky_lower(P)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def _lu(M, name):
    M = _square(M, name)
    scale = max_abs(M)
    if scale == 0.0:
        raise SingularityError(f"block {name} is zero", block=name)
    lu, piv = lu_factor(M, check_finite=True)
    if np.min(np.abs(np.diag(lu))) <= M.shape[0] * np.finfo(float).eps * scale:
        raise SingularityError(f"block {name} is singular", block=name)
    return lu, piv


def _solve(M, B, name):
    return lu_solve(_lu(M, name), B)


def partitioned_inverse(M, part):
    """Inverse of ``[[A, C], [B, D]]`` through the Schur complement of ``D``.

    Blocks follow ``part``: ``A`` is ``top x top`` and ``D`` is
    ``bottom x bottom``. With ``S = A - C D^{-1} B`` the inverse is::

        [[ S^{-1},             -S^{-1} C D^{-1}                  ],
         [ -D^{-1} B S^{-1},    D^{-1} B S^{-1} C D^{-1} + D^{-1} ]]
    """
    M, _ = symmetrize(M)
    top, bottom = part
    if top < 1 or bottom < 1 or top + bottom != M.shape[0]:
        raise DimensionError(f"partition {tuple(part)} does not split a {M.shape[0]}x{M.shape[0]} matrix")
    A = M[:top, :top]
    C = M[:top, top:]
    B = M[top:, :top]
    Dm = M[top:, top:]
    Dinv_B = _solve(Dm, B, "D")
    S = A - C @ Dinv_B
    Dinv = _solve(Dm, np.eye(bottom), "D")
    Sinv = _solve(S, np.eye(top), "A - C D^-1 B")
    Dinv_B_Sinv = Dinv_B @ Sinv
    out = np.empty_like(M)
    out[:top, :top] = Sinv
    out[:top, top:] = -Sinv @ (C @ Dinv)
    out[top:, :top] = -Dinv_B_Sinv
    out[top:, top:] = Dinv_B_Sinv @ C @ Dinv + Dinv
    return symmetrize(out)[0]


def woodbury_inv(Dm, B, A, C):
    """``(Dm - B A C)^{-1}`` as ``Dm^{-1} + Dm^{-1} B (A^{-1} - C Dm^{-1} B)^{-1} C Dm^{-1}``.

    ``Dm`` is a diagonal given by its entries; ``A`` is square and invertible.
    """
    d = np.asarray(Dm, dtype=float)
    if d.ndim == 2:
        d = delta_diag(d)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = d.shape[0]
    m = A.shape[0]
    if B.shape != (n, m) or C.shape != (m, n) or A.shape != (m, m):
        raise DimensionError(f"incompatible shapes Dm:{d.shape} B:{B.shape} A:{A.shape} C:{C.shape}")
    if np.any(d == 0.0):
        raise SingularityError("diagonal Dm has a zero entry", block="Dm")
    dinv = 1.0 / d
    Ainv = _solve(A, np.eye(m), "A")
    inner = Ainv - (C * dinv) @ B
    mid = _solve(inner, C * dinv, "A^-1 - C Dm^-1 B")
    return np.diag(dinv) + (dinv[:, None] * B) @ mid


def psd_dominates(a_large, a_small, slack=0.0):
    """True iff ``a_large - a_small + slack*I`` has no negative eigenvalue."""
    a_large = _square(a_large)
    a_small = _square(a_small)
    if a_large.shape != a_small.shape:
        raise DimensionError(f"shape mismatch {a_large.shape} vs {a_small.shape}")
    return min_eig(a_large - a_small) + slack >= 0.0


def min_eig(M):
    M, _ = symmetrize(M)
    return float(np.linalg.eigvalsh(M)[0])


# --- low-rank-plus-diagonal kernels -------------------------------------------

def fa_capacitance(H, D):
    """Lower Cholesky factor of ``I + H^T D^{-1} H``."""
    Hs = H / D[:, None]
    return cholesky_lower(np.eye(H.shape[1]) + H.T @ Hs, "I + H^T D^-1 H")


def fa_solve(H, D, X):
    """``(H H^T + diag(D))^{-1} X`` using the Woodbury identity."""
    X = np.asarray(X, dtype=float)
    L = fa_capacitance(H, D)
    DX = X / D[:, None] if X.ndim == 2 else X / D
    Hs = H / D[:, None]
    return DX - Hs @ cho_solve_lower(L, H.T @ DX)


def fa_logdet(H, D):
    """``log|H H^T + diag(D)| = log|D| + log|I + H^T D^{-1} H|``."""
    L = fa_capacitance(H, D)
    return float(np.sum(np.log(D))) + 2.0 * float(np.sum(np.log(np.diag(L))))
