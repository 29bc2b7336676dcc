"""Synthetic problems and random-probe oracles for tests and experiments.

All randomness comes from ``numpy.random.Generator(Philox(seed))``: Philox is
a counter-based 64-bit generator, so a seed reproduces the same stream on
every platform.
"""

from dataclasses import dataclass

import numpy as np

from .divergence import i_divergence
from .errors import DefinitenessError, SingularityError
from .matops import cholesky_lower, min_eig, symmetrize
from .model import FactorModel, as_covariance

EIG_CLIP = 1e-6


def make_rng(seed):
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    k: int
    loading_scale: float = 1.0
    noise_scale: float = 1.0
    perturbation: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.k < self.n):
            raise ValueError(f"need 1 <= k < n, got n={self.n}, k={self.k}")
        if not (self.loading_scale > 0 and self.noise_scale > 0):
            raise ValueError("scales must be > 0")
        if not self.perturbation >= 0:
            raise ValueError("perturbation must be >= 0")


def plant_model(spec):
    """Ground-truth ``(H, D)`` and ``S0 = H H^T + D (+ symmetric noise)``.

    ``H ~ U(-1, 1) * loading_scale`` and ``D ~ U(0.1, 1.1) * noise_scale``.
    With ``perturbation > 0`` a symmetric Gaussian matrix scaled by it is
    added and the eigenvalues of the sum are clipped at ``1e-6``.
    """
    rng = make_rng(spec.seed)
    H = rng.uniform(-1.0, 1.0, size=(spec.n, spec.k)) * spec.loading_scale
    D = rng.uniform(0.1, 1.1, size=spec.n) * spec.noise_scale
    truth = FactorModel(H, D)
    S0 = truth.cov()
    if spec.perturbation > 0:
        G = rng.standard_normal((spec.n, spec.n))
        S0 = S0 + spec.perturbation * (G + G.T) / 2.0
        w, V = np.linalg.eigh(S0)
        S0 = symmetrize((V * np.maximum(w, EIG_CLIP)) @ V.T)[0]
    try:
        S0 = as_covariance(S0, "synthetic S0")
    except DefinitenessError as exc:
        raise ValueError(f"synthetic covariance is not SPD after clipping: {exc}") from exc
    return truth, S0


def sample_covariance(data, ridge=False):
    """Biased (divisor m) covariance of the rows of ``data`` after centering.

    A rank-deficient result raises :class:`DefinitenessError` unless ``ridge``
    is set, in which case ``1e-8 * trace / n`` is added to the diagonal.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    m, n = X.shape
    Xc = X - X.mean(axis=0)
    S = symmetrize(Xc.T @ Xc / m)[0]
    if ridge:
        S = S + (1e-8 * max(np.trace(S), np.finfo(float).tiny) / n) * np.eye(n)
    try:
        return as_covariance(S, "sample covariance")
    except DefinitenessError as exc:
        raise DefinitenessError(
            f"{exc}; the sample covariance is rank deficient (m={m}, n={n}), "
            "enable ridge regularization to proceed", index=exc.index) from exc


def random_spd(dim, rng, cond=10.0):
    """Random SPD matrix with eigenvalues log-uniform in ``[1, cond]``."""
    Qm, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    w = np.exp(rng.uniform(0.0, np.log(cond), size=dim))
    return symmetrize((Qm * w) @ Qm.T)[0]


def random_model(n, k, rng, with_q=True):
    """Random factor model with a well-conditioned ``Q`` (optional)."""
    H = rng.standard_normal((n, k))
    D = rng.uniform(0.2, 2.0, size=n)
    Q = None
    if with_q:
        Q = np.linalg.qr(rng.standard_normal((k, k)))[0] * rng.uniform(0.5, 2.0, size=k)
    return FactorModel(H, D, Q)


def random_lifted(n, k, rng, cond=10.0):
    from .lifted import LiftedCovariance
    return LiftedCovariance(random_spd(n + k, rng, cond), n)


def _probe_scales(rng, trials, max_scale):
    return max_scale * np.exp(rng.uniform(np.log(1e-4), 0.0, size=trials))


def probe_oracle_second_min(Sigma, trials, seed, max_scale=1.0):
    """Best random ``Sigma(H, D, Q)`` value minus the closed-form optimum.

    Probes perturb the closed-form ``(H*, D*, Q*)`` at log-uniform scales up
    to ``max_scale`` (multiplicatively for ``D``). A negative result means a
    probe beat the closed form.
    """
    from .lifted import assemble_lifted, second_partial_min

    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = make_rng(seed)
    best_model, best = second_partial_min(Sigma)
    opt = i_divergence(Sigma.whole, best.whole)
    H0, D0, Q0 = best_model.H, best_model.D, best_model.Q
    lowest = np.inf
    for s in _probe_scales(rng, trials, max_scale):
        H = H0 + s * rng.standard_normal(H0.shape)
        D = D0 * np.exp(s * rng.standard_normal(D0.shape))
        Q = Q0 + s * rng.standard_normal(Q0.shape)
        try:
            cand = assemble_lifted(FactorModel(H, D, Q))
        except (DefinitenessError, SingularityError):
            continue
        lowest = min(lowest, i_divergence(Sigma.whole, cand.whole))
    return lowest - opt


def probe_oracle_first_min(S0, Sigma, trials, seed, max_scale=1.0):
    """Best random ``D(Sigma' || Sigma)`` over ``Sigma'`` with top-left block ``S0``, minus the optimum.

    Probes perturb the off-diagonal block of the closed-form minimizer and
    rescale its conditional covariance by a random SPD congruence, which
    keeps every probe positive definite.
    """
    from .lifted import LiftedCovariance, first_partial_min

    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = make_rng(seed)
    star = first_partial_min(S0, Sigma)
    opt = i_divergence(star.whole, Sigma.whole)
    n, k = Sigma.n, Sigma.k
    S0 = star.s11
    L0 = cholesky_lower(S0)
    cond_cov = star.schur_lower()
    lowest = np.inf
    for s in _probe_scales(rng, trials, max_scale):
        s12 = star.s12 + s * rng.standard_normal((n, k)) * np.sqrt(np.diag(S0))[:, None]
        T = np.eye(k) + s * rng.standard_normal((k, k))
        C = T @ cond_cov @ T.T
        X = np.linalg.solve(L0, s12)
        s22 = C + X.T @ X
        try:
            cand = LiftedCovariance.from_blocks(S0, s12, s22)
        except DefinitenessError:
            continue
        lowest = min(lowest, i_divergence(cand.whole, Sigma.whole))
    return lowest - opt


def is_spd(S):
    return min_eig(S) > 0
