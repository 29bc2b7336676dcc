"""Alternating minimization for the I-divergence factor analysis problem.

Given an SPD ``S0`` and ``k < n``, find ``H`` (n x k) and positive ``D``
minimizing ``D(S0 || H H^T + diag(D))``. Each iteration is the composition
of the two partial minimizations in :mod:`divfact.lifted`, written out in
closed form so that only ``k x k`` systems are factorized.

Two equivalent parametrizations are provided. ``alg1`` updates ``(H, D)``
and takes a matrix square root every step; ``alg2`` updates ``(K, P, D)``
with ``K = H Q`` and ``P = Q^T Q`` and needs no square root until the end.
"""

import hashlib
import math
import warnings
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import List, Optional, Union

import numpy as np
from scipy.linalg import solve_triangular

from .divergence import objective
from .errors import DefinitenessError, DimensionError, NumericalBreakdown, SingularityError
from .harness import make_rng
from .lifted import exact_fa_diagnostic
from .matops import cho_solve_lower, cholesky_lower, max_abs, min_eig, sqrt_factor
from .model import FactorModel, as_covariance

VARIANTS = ("alg1", "alg2")
INITS = ("pca", "random")

MONOTONE_SLACK = 1e-12
DIAG_BOUND_SLACK = 1e-12
PSD_BOUND_SLACK = 1e-9
STALL_FACTOR = 10.0


class Termination(str, Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    EXACT_MODEL_STOP = "exact_model_stop"
    NUMERICAL_BREAKDOWN = "numerical_breakdown"


@dataclass
class FitConfig:
    """Solver settings.

    ``init`` is ``"pca"``, ``"random"`` (seeded by ``seed``) or an explicit
    :class:`FactorModel`. ``diag_floor`` is relative: noise variances are
    kept at or above ``diag_floor * max(diag(S0))``.
    """

    k: int
    variant: str = "alg1"
    init: Union[str, FactorModel] = "pca"
    seed: int = 0
    max_iter: int = 10000
    tol_divergence_decrement: float = 1e-12
    tol_fixed_point: float = 1e-9
    diag_floor: float = 1e-10
    validate: bool = True
    keep_iterates: bool = False

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not isinstance(self.init, FactorModel) and self.init not in INITS:
            raise ValueError(f"init must be one of {INITS} or a FactorModel, got {self.init!r}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        for name in ("tol_divergence_decrement", "tol_fixed_point", "diag_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    def to_dict(self):
        d = asdict(self) if not isinstance(self.init, FactorModel) else {
            **{k: v for k, v in asdict(self).items() if k != "init"}, "init": "explicit"}
        d.pop("keep_iterates", None)
        return d


@dataclass
class IterRecord:
    iteration: int
    objective: float
    decrement: float
    residual_h: float
    residual_d: float
    min_d: float
    psd_slack: float
    floor_hits: int = 0
    min_sv_h: float = float("nan")
    bounds_ok: bool = True

    def to_dict(self):
        return {k: (None if isinstance(v, float) and math.isnan(v) else v)
                for k, v in asdict(self).items()}


@dataclass
class FitTrace:
    records: List[IterRecord] = field(default_factory=list)
    termination: Optional[Termination] = None
    reason: str = ""
    models: List[FactorModel] = field(default_factory=list)

    @property
    def objectives(self):
        return np.array([r.objective for r in self.records])

    @property
    def decrements(self):
        return np.array([r.decrement for r in self.records[1:]])

    @property
    def floor_hits(self):
        return sum(r.floor_hits for r in self.records)


@dataclass
class FitResult:
    model: FactorModel
    objective: float
    trace: FitTrace
    config: FitConfig
    fingerprint: str

    @property
    def termination(self):
        return self.trace.termination

    @property
    def iterations(self):
        return self.trace.records[-1].iteration if self.trace.records else 0


def fingerprint(S0):
    """SHA-256 of the float64 bytes of ``S0`` (C order)."""
    return hashlib.sha256(np.ascontiguousarray(S0, dtype=np.float64).tobytes()).hexdigest()


def _abs_floor(S0, rel):
    return rel * float(np.max(np.diag(S0)))


def _full_rank(H):
    sv = np.linalg.svd(H, compute_uv=False)
    return sv[-1] > max(H.shape) * np.finfo(float).eps * max(sv[0], np.finfo(float).tiny)


def init_model(S0, cfg):
    """Starting point with full-column-rank ``H`` and positive ``D``.

    ``pca`` scales the top-k eigenvectors of ``S0`` by ``sqrt(0.5 * eigenvalue)``
    and sets ``D = max(diag(S0 - H H^T), floor)``.
    """
    S0 = as_covariance(S0, "S0")
    n = S0.shape[0]
    if cfg.k >= n:
        raise DimensionError(f"k must be < n (k={cfg.k}, n={n})")
    floor = _abs_floor(S0, cfg.diag_floor)
    if isinstance(cfg.init, FactorModel):
        cfg.init.check_compatible(S0)
        if cfg.init.k != cfg.k:
            raise DimensionError(f"initial model has k={cfg.init.k}, config has k={cfg.k}")
        if not _full_rank(cfg.init.H):
            raise SingularityError("initial H is not of full column rank", block="H")
        return cfg.init

    rng = make_rng(cfg.seed)
    if cfg.init == "pca":
        w, V = np.linalg.eigh(S0)
        w, V = w[::-1][:cfg.k], V[:, ::-1][:, :cfg.k]
        H = V * np.sqrt(0.5 * w)
    else:
        scale = math.sqrt(float(np.mean(np.diag(S0))) / (2.0 * cfg.k))
        H = rng.standard_normal((n, cfg.k)) * scale
    for _ in range(3):
        if _full_rank(H):
            break
        H = H + 1e-6 * math.sqrt(float(np.max(np.diag(S0)))) * rng.standard_normal(H.shape)
    else:
        raise SingularityError("could not build a full-rank initial H", block="H")
    if cfg.init == "pca":
        D = np.maximum(np.diag(S0) - np.sum(H * H, axis=1), floor)
    else:
        D = np.maximum(0.5 * np.diag(S0), floor)
    return FactorModel(H, D)


def _floor_d(d, floor):
    hits = int(np.count_nonzero(d < floor))
    return np.maximum(d, floor), hits


def _alg1(S0, H, D, floor):
    k = H.shape[1]
    Hs = H / D[:, None]
    C = cholesky_lower(np.eye(k) + H.T @ Hs, "I + H^T D^-1 H")
    Cinv = cho_solve_lower(C, np.eye(k))
    M = Hs @ Cinv  # (H H^T + D)^{-1} H, Woodbury form
    S0M = S0 @ M
    # R = I - M^T (HH^T + D - S0) M, rewritten with I - H^T M = (I + H^T D^-1 H)^-1
    R = Cinv + M.T @ S0M
    R = (R + R.T) / 2.0
    try:
        U = sqrt_factor(R)
    except DefinitenessError as exc:
        raise NumericalBreakdown(f"R lost definiteness: {exc}") from exc
    H_new = solve_triangular(U.T, S0M.T, lower=True).T  # S0 M R^{-1/2}
    D_new, hits = _floor_d(np.diag(S0) - np.sum(H_new * H_new, axis=1), floor)
    return H_new, D_new, hits


def r_matrix(S0, model):
    """``I - H^T Sig^{-1} (Sig - S0) Sig^{-1} H`` with ``Sig = H H^T + D``."""
    k = model.k
    Hs = model.H / model.D[:, None]
    Cinv = cho_solve_lower(cholesky_lower(np.eye(k) + model.H.T @ Hs), np.eye(k))
    M = Hs @ Cinv
    R = Cinv + M.T @ S0 @ M
    return (R + R.T) / 2.0


def alg1_step(S0, model, floor=None):
    """One ``(H, D)`` update. ``floor`` is the absolute lower bound on ``D``."""
    S0 = np.asarray(S0, dtype=float)
    model.check_compatible(S0)
    if floor is None:
        floor = _abs_floor(S0, FitConfig.diag_floor)
    H, D, _ = _alg1(S0, model.H, model.D, floor)
    return FactorModel(H, D)


def _alg2(S0, K, P, D, floor):
    Ks = K / D[:, None]
    LA = cholesky_lower(P + K.T @ Ks, "P + K^T D^-1 K")
    AinvP = cho_solve_lower(LA, P)
    N = Ks @ AinvP  # (K P^-1 K^T + D)^{-1} K
    K_new = S0 @ N
    # P - N^T (K P^-1 K^T - S0) N, rewritten as P (P + K^T D^-1 K)^-1 P + N^T S0 N
    P_new = P @ AinvP + N.T @ S0 @ N
    P_new = (P_new + P_new.T) / 2.0
    try:
        LP = cholesky_lower(P_new, "P")
    except DefinitenessError as exc:
        raise NumericalBreakdown(f"P lost definiteness: {exc}", iterate=(K, P, D)) from exc
    X = solve_triangular(LP, K_new.T, lower=True)
    D_new, hits = _floor_d(np.diag(S0) - np.sum(X * X, axis=0), floor)
    return K_new, P_new, D_new, hits


def alg2_step(S0, K, P, D, floor=None):
    """One ``(K, P, D)`` update; returns the new triple."""
    S0 = np.asarray(S0, dtype=float)
    K = np.atleast_2d(np.asarray(K, dtype=float))
    P = np.atleast_2d(np.asarray(P, dtype=float))
    D = np.asarray(D, dtype=float)
    if K.shape[0] != S0.shape[0] or P.shape != (K.shape[1],) * 2 or D.shape != (S0.shape[0],):
        raise DimensionError(f"incompatible shapes K:{K.shape} P:{P.shape} D:{D.shape}")
    if floor is None:
        floor = _abs_floor(S0, FitConfig.diag_floor)
    K_new, P_new, D_new, _ = _alg2(S0, K, P, D, floor)
    return K_new, P_new, D_new


def extract_loadings(K, P):
    """``H = K Q^{-1}`` with ``Q`` the transposed Cholesky factor of ``P``."""
    Q = sqrt_factor(P)
    return solve_triangular(Q.T, K.T, lower=True).T


def fixed_point_residual(S0, model):
    """Relative violations of ``H = (S0 - H H^T) D^{-1} H`` and ``D = diag(S0 - H H^T)``."""
    S0 = np.asarray(S0, dtype=float)
    model.check_compatible(S0)
    H, D = model.H, model.D
    E = S0 - H @ H.T
    rh = max_abs(H - E @ (H / D[:, None])) / max(1.0, max_abs(H))
    rd = max_abs(D - np.diag(E)) / max(1.0, max_abs(D))
    return rh, rd


def stationarity_check(S0, model, h=1e-6):
    """Max-abs central-difference gradient of the objective in ``(H, D)``.

    Steps are ``h * max(1, |x|)``; steps in ``D`` are capped at half the entry
    so the perturbed model stays valid.
    """
    S0 = as_covariance(S0, "S0")
    model.check_compatible(S0)
    logdet0 = 2.0 * float(np.sum(np.log(np.diag(cholesky_lower(S0)))))
    H0, D0 = model.H, model.D

    def f(H, D):
        return objective(S0, FactorModel(H, D), logdet_s0=logdet0)

    grad = 0.0
    for idx in np.ndindex(H0.shape):
        step = h * max(1.0, abs(H0[idx]))
        Hp, Hm = H0.copy(), H0.copy()
        Hp[idx] += step
        Hm[idx] -= step
        grad = max(grad, abs(f(Hp, D0) - f(Hm, D0)) / (2.0 * step))
    for i in range(D0.shape[0]):
        step = min(h * max(1.0, D0[i]), 0.5 * D0[i])
        Dp, Dm = D0.copy(), D0.copy()
        Dp[i] += step
        Dm[i] -= step
        grad = max(grad, abs(f(H0, Dp) - f(H0, Dm)) / (2.0 * step))
    return grad


def _record(S0, model, t, obj, prev, hits, logdet0, cfg):
    rh, rd = fixed_point_residual(S0, model)
    psd = min_eig(S0 - model.loading_gram()) if cfg.validate else float("nan")
    sv = np.linalg.svd(model.H, compute_uv=False)[-1] if cfg.validate else float("nan")
    bounds_ok = True
    if cfg.validate and t >= 1:
        bounds_ok = bool(np.all(model.D > 0)
                         and np.all(model.D <= np.diag(S0) + DIAG_BOUND_SLACK)
                         and psd >= -PSD_BOUND_SLACK)
    return IterRecord(
        iteration=t, objective=obj,
        decrement=float("nan") if prev is None else prev - obj,
        residual_h=rh, residual_d=rd, min_d=float(np.min(model.D)),
        psd_slack=psd, floor_hits=hits, min_sv_h=float(sv), bounds_ok=bounds_ok)


def fit(S0, cfg):
    """Run the alternating minimization from ``init_model(S0, cfg)``.

    Stops when the objective decrement drops below
    ``cfg.tol_divergence_decrement``, when both fixed-point residuals drop
    below ``cfg.tol_fixed_point``, when the iterate reproduces ``S0`` exactly,
    or after ``cfg.max_iter`` steps. Raises :class:`NumericalBreakdown` with
    the partial trace and last accepted iterate if a factorization fails or,
    with ``cfg.validate``, if an iterate leaves the region
    ``0 < D <= diag(S0)``, ``H H^T <= S0``.
    """
    S0 = as_covariance(S0, "S0")
    n = S0.shape[0]
    if cfg.k >= n:
        raise DimensionError(f"k must be < n (k={cfg.k}, n={n})")
    floor = _abs_floor(S0, cfg.diag_floor)
    logdet0 = 2.0 * float(np.sum(np.log(np.diag(cholesky_lower(S0)))))
    model = init_model(S0, cfg)
    trace = FitTrace()

    def done(termination, reason=""):
        trace.termination = termination
        trace.reason = reason
        return FitResult(model.without_q(), obj, trace, cfg, fingerprint(S0))

    obj = objective(S0, model, logdet_s0=logdet0)
    trace.records.append(_record(S0, model, 0, obj, None, 0, logdet0, cfg))
    if cfg.keep_iterates:
        trace.models.append(model)
    if exact_fa_diagnostic(S0, model):
        return done(Termination.EXACT_MODEL_STOP)

    if cfg.variant == "alg2":
        if model.Q is not None:
            K, P = model.K, model.P
        else:
            K, P = model.H.copy(), np.eye(cfg.k)
    D = model.D
    H = model.H
    for t in range(1, cfg.max_iter + 1):
        try:
            if cfg.variant == "alg1":
                H, D, hits = _alg1(S0, H, D, floor)
                new = FactorModel(H, D)
            else:
                K, P, D, hits = _alg2(S0, K, P, D, floor)
                new = FactorModel(extract_loadings(K, P), D)
            new_obj = objective(S0, new, logdet_s0=logdet0)
        except (NumericalBreakdown, DefinitenessError, SingularityError) as exc:
            trace.termination = Termination.NUMERICAL_BREAKDOWN
            trace.reason = f"iteration {t}: {exc}"
            raise NumericalBreakdown(trace.reason, trace=trace, iterate=model) from exc
        rec = _record(S0, new, t, new_obj, obj, hits, logdet0, cfg)
        trace.records.append(rec)
        if cfg.keep_iterates:
            trace.models.append(new)
        if cfg.validate and not rec.bounds_ok:
            trace.termination = Termination.NUMERICAL_BREAKDOWN
            trace.reason = f"iteration {t}: iterate violates 0 < D <= diag(S0) or H H^T <= S0"
            raise NumericalBreakdown(trace.reason, trace=trace, iterate=new)
        if cfg.validate and not rec.min_sv_h > 0:
            warnings.warn(f"iteration {t}: H lost full column rank", RuntimeWarning)
        model, obj = new, new_obj
        if exact_fa_diagnostic(S0, model):
            return done(Termination.EXACT_MODEL_STOP)
        residual = max(rec.residual_h, rec.residual_d)
        if residual < cfg.tol_fixed_point:
            return done(Termination.CONVERGED, "fixed-point residuals below tolerance")
        # objective changes drown in rounding well before the iterates settle,
        # so a stalled objective only counts once the residuals are near tolerance
        if rec.decrement < cfg.tol_divergence_decrement and residual < STALL_FACTOR * cfg.tol_fixed_point:
            return done(Termination.CONVERGED, "objective stalled at a near-stationary point")
    return done(Termination.MAX_ITER)
