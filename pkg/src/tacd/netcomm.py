"""Network-communication phase estimators.

Clock skew and offset are estimated from two-way timestamp exchanges by a
Gaussian-sum filter whose measurement-noise mixture is refined each period
with conjugate Dirichlet / inverse-Wishart mean-field updates (partial
variational Bayes). Plain gPTP arithmetic and a fixed-noise Kalman filter
are provided as baselines.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.special import digamma

from .clock import StateSpace
from .scenario import ExchangeRecord

_DIM = 2
_LOG_2PI = np.log(2.0 * np.pi)
# Smallest inverse-Wishart dof with a finite mean margin for 2x2 matrices;
# dofs at or below dim+1 are clamped here when the point covariance is formed.
MIN_IW_DOF = 4.0
SPD_EIGENVALUE_FLOOR = 1e-30


@dataclass(frozen=True)
class GaussianBelief:
    """Posterior state belief: mean (skew s/s, offset s) and 2x2 covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (_DIM,) or cov.shape != (_DIM, _DIM):
            raise ValueError("belief must be a 2-vector mean with 2x2 covariance")
        if cov[0, 0] <= 0.0 or cov[1, 1] <= 0.0:
            raise ValueError("covariance diagonal must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


@dataclass(frozen=True)
class VbSettings:
    """Mean-field iteration controls for the noise-model refinement."""

    max_iterations: int = 5
    convergence_tol: float = 1e-6
    forgetting_factor: float = 0.95

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not 0.0 < self.forgetting_factor <= 1.0:
            raise ValueError("forgetting_factor must be in (0, 1]")


@dataclass(frozen=True)
class MixtureNoiseModel:
    """Dirichlet / inverse-Wishart hyperparameters of the GMM measurement noise.

    point_weights and point_covariances are the plug-in values used by the
    Gaussian-sum filter: the Dirichlet mean and the inverse-Wishart mean
    V / (dof - 3) with dof clamped at MIN_IW_DOF when the mean would not
    exist.
    """

    dirichlet_concentration: np.ndarray
    iw_dof: np.ndarray
    iw_scale: np.ndarray
    dof_clamped: bool = False

    def __post_init__(self) -> None:
        chi = np.asarray(self.dirichlet_concentration, dtype=float)
        dof = np.asarray(self.iw_dof, dtype=float)
        scale = np.asarray(self.iw_scale, dtype=float)
        n = chi.shape[0]
        if dof.shape != (n,) or scale.shape != (n, _DIM, _DIM):
            raise ValueError("hyperparameter shapes disagree on the component count")
        if np.any(chi <= 0.0):
            raise ValueError("Dirichlet concentrations must be > 0")
        object.__setattr__(self, "dirichlet_concentration", chi)
        object.__setattr__(self, "iw_dof", dof)
        object.__setattr__(self, "iw_scale", scale)

    @property
    def num_components(self) -> int:
        return self.dirichlet_concentration.shape[0]

    @property
    def point_weights(self) -> np.ndarray:
        chi = self.dirichlet_concentration
        return chi / chi.sum()

    @property
    def point_covariances(self) -> np.ndarray:
        dof = np.maximum(self.iw_dof, MIN_IW_DOF)
        return self.iw_scale / (dof - (_DIM + 1.0))[:, None, None]

    @classmethod
    def from_point_estimates(cls, weights, stddevs) -> "MixtureNoiseModel":
        """Sharp model with the given weights and per-component stddevs."""
        w = np.asarray(weights, dtype=float)
        corr = np.array([[1.0, 0.5], [0.5, 1.0]])
        scale = np.array([(s * s) * corr for s in np.asarray(stddevs, dtype=float)])
        dof = np.full(w.shape, MIN_IW_DOF)
        return cls(dirichlet_concentration=w * 100.0, iw_dof=dof, iw_scale=scale)


def isotropic_mixture_model(chi, dof, scale_diag, unit_scale: float = 1e-6) -> MixtureNoiseModel:
    """Model with per-component isotropic scales V_i = s_i * unit_scale^2 * I."""
    scale = np.array([s * unit_scale**2 * np.eye(_DIM) for s in np.asarray(scale_diag, dtype=float)])
    return MixtureNoiseModel(
        dirichlet_concentration=np.asarray(chi, dtype=float),
        iw_dof=np.asarray(dof, dtype=float),
        iw_scale=scale,
        dof_clamped=bool(np.any(np.asarray(dof) <= _DIM + 1)),
    )


def build_measurement(current: ExchangeRecord, previous: ExchangeRecord, d: float) -> np.ndarray:
    """Measurement vector from two consecutive exchanges.

    z = (t2_k - t2_{k-1} - t1_k + t1_{k-1},  t2_k + t3_k - t1_k - t4_k - d)
    """
    if current.period_index != previous.period_index + 1:
        raise ValueError(
            f"records must come from consecutive periods, got "
            f"{previous.period_index} then {current.period_index}"
        )
    z1 = current.t2 - previous.t2 - current.t1 + previous.t1
    z2 = current.t2 + current.t3 - current.t1 - current.t4 - d
    return np.array([z1, z2])


def gptp_offset(rec: ExchangeRecord, d: float) -> float:
    """Plain two-way offset estimate: ((t2 + t3 - t1 - t4) - d) / 2."""
    return ((rec.t2 + rec.t3 - rec.t1 - rec.t4) - d) / 2.0


def gptp_skew(current: ExchangeRecord, previous: ExchangeRecord, tau: float) -> float:
    """Plain forward-path skew estimate from consecutive exchanges."""
    if current.period_index != previous.period_index + 1:
        raise ValueError("records must come from consecutive periods")
    return (current.t2 - previous.t2 - current.t1 + previous.t1) / tau


def enforce_spd(cov: np.ndarray, floor: float = SPD_EIGENVALUE_FLOOR) -> tuple[np.ndarray, bool]:
    """Symmetrize and floor eigenvalues; returns (matrix, whether flooring fired)."""
    sym = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(sym)
    if vals[0] >= floor:
        return sym, False
    vals = np.maximum(vals, floor)
    return (vecs * vals) @ vecs.T, True


def gsf_predict(belief: GaussianBelief, ss: StateSpace) -> GaussianBelief:
    """Time update: mean' = A mean, P' = A P A^T + Q_v (symmetrized)."""
    mean = ss.A @ belief.mean
    cov = ss.A @ belief.cov @ ss.A.T + ss.Q_v
    return GaussianBelief(mean=mean, cov=0.5 * (cov + cov.T))


@dataclass
class GsfUpdateResult:
    belief: GaussianBelief
    epsilon: float
    responsibilities: np.ndarray
    underflow: bool = False
    spd_repairs: int = 0


def gsf_update(
    belief: GaussianBelief, z: np.ndarray, noise: MixtureNoiseModel, ss: StateSpace
) -> GsfUpdateResult:
    """Measurement update: one Kalman update per mixture component, combined
    by posterior component weights and moment-matched to a single Gaussian.

    epsilon is the (skew, skew) entry of the returned covariance. If every
    component likelihood underflows, the weights fall back to uniform and
    the underflow flag is set.
    """
    H = ss.H
    x, P = belief.mean, belief.cov
    a = noise.point_weights
    covs = noise.point_covariances
    n = noise.num_components

    innov = z - H @ x
    PHt = P @ H.T
    means = np.empty((n, _DIM))
    posts = np.empty((n, _DIM, _DIM))
    logw = np.empty(n)
    eye = np.eye(_DIM)
    spd_repairs = 0

    for j in range(n):
        S = H @ PHt + covs[j]
        S = 0.5 * (S + S.T)
        sign, logdet = np.linalg.slogdet(S)
        if sign <= 0:
            logw[j] = -np.inf
            means[j] = x
            posts[j] = P
            continue
        Sinv_innov = np.linalg.solve(S, innov)
        with np.errstate(over="ignore", invalid="ignore"):
            logw[j] = np.log(a[j]) - 0.5 * (innov @ Sinv_innov + logdet + _DIM * _LOG_2PI)
        K = np.linalg.solve(S, PHt.T).T
        means[j] = x + K @ innov
        # Joseph form keeps the per-component covariance symmetric PSD
        IKH = eye - K @ H
        posts[j] = IKH @ P @ IKH.T + K @ covs[j] @ K.T

    underflow = not np.any(np.isfinite(logw))
    if underflow:
        w = np.full(n, 1.0 / n)
    else:
        logw -= logw.max()
        w = np.exp(logw)
        w /= w.sum()

    mean = w @ means
    dev = means - mean
    cov = np.einsum("j,jab->ab", w, posts) + np.einsum("j,ja,jb->ab", w, dev, dev)
    cov, repaired = enforce_spd(cov)
    spd_repairs += int(repaired)

    out = GaussianBelief(mean=mean, cov=cov)
    return GsfUpdateResult(
        belief=out,
        epsilon=float(cov[0, 0]),
        responsibilities=w,
        underflow=underflow,
        spd_repairs=spd_repairs,
    )


def vb_refine(
    noise: MixtureNoiseModel,
    z: np.ndarray,
    belief: GaussianBelief,
    ss: StateSpace,
    settings: VbSettings,
) -> MixtureNoiseModel:
    """Conjugate mean-field refinement of the noise mixture for one period.

    Hyperparameters are first discounted by the forgetting factor (the
    prediction distribution for the non-stationary noise), then updated with
    the responsibility-weighted residual statistic
    S = (z - H x)(z - H x)^T + H P H^T built from the current posterior.
    """
    rho = settings.forgetting_factor
    chi_pred = rho * noise.dirichlet_concentration
    dof_pred = rho * noise.iw_dof + (1.0 - rho) * MIN_IW_DOF
    scale_pred = rho * noise.iw_scale

    resid = z - ss.H @ belief.mean
    S = np.outer(resid, resid) + ss.H @ belief.cov @ ss.H.T

    chi, dof, scale = chi_pred, dof_pred, scale_pred.copy()
    q_prev: Optional[np.ndarray] = None
    for _ in range(settings.max_iterations):
        e_logdet_prec = (
            digamma(0.5 * dof)
            + digamma(0.5 * (dof - 1.0))
            + _DIM * np.log(2.0)
            - np.array([np.linalg.slogdet(V)[1] for V in scale])
        )
        e_log_pi = digamma(chi) - digamma(chi.sum())
        tr_term = dof * np.array([np.trace(np.linalg.solve(V, S)) for V in scale])
        logq = e_log_pi + 0.5 * e_logdet_prec - 0.5 * tr_term
        logq -= logq.max()
        q = np.exp(logq)
        q /= q.sum()

        chi = chi_pred + q
        dof = dof_pred + q
        scale = scale_pred + q[:, None, None] * S

        if q_prev is not None and np.max(np.abs(q - q_prev)) < settings.convergence_tol:
            break
        q_prev = q

    return MixtureNoiseModel(
        dirichlet_concentration=chi,
        iw_dof=dof,
        iw_scale=scale,
        dof_clamped=bool(np.any(dof <= _DIM + 1)),
    )


@dataclass
class StepResult:
    belief: GaussianBelief
    epsilon: float
    skew: float
    offset: float
    responsibilities: np.ndarray
    underflow: bool = False


class GsfVbFilter:
    """Alternating state / noise estimator over a stream of exchanges.

    Each period: predict, Gaussian-sum update, then (when VB settings are
    given) one round of noise-model refinement. With a single component and
    VB disabled the trajectory coincides with a textbook Kalman filter.
    """

    def __init__(
        self,
        ss: StateSpace,
        noise: MixtureNoiseModel,
        belief: GaussianBelief,
        vb: Optional[VbSettings] = None,
    ):
        self.ss = ss
        self.noise = noise
        self.belief = belief
        self.vb = vb
        self.spd_repairs = 0
        self.underflow_periods = 0

    def step(self, current: ExchangeRecord, previous: ExchangeRecord, d: float) -> StepResult:
        z = build_measurement(current, previous, d)
        self.belief = gsf_predict(self.belief, self.ss)
        upd = gsf_update(self.belief, z, self.noise, self.ss)
        self.belief = upd.belief
        self.spd_repairs += upd.spd_repairs
        self.underflow_periods += int(upd.underflow)
        if self.vb is not None:
            self.noise = vb_refine(self.noise, z, self.belief, self.ss, self.vb)
        return StepResult(
            belief=self.belief,
            epsilon=upd.epsilon,
            skew=float(self.belief.mean[0]),
            offset=float(self.belief.mean[1]),
            responsibilities=upd.responsibilities,
            underflow=upd.underflow,
        )

    def condition_on_skew(self, skew: float) -> None:
        """Replace the belief-mean skew entry, leaving the covariance alone."""
        mean = self.belief.mean.copy()
        mean[0] = skew
        self.belief = replace(self.belief, mean=mean)


class KalmanBaseline:
    """Textbook Kalman filter with a fixed single-Gaussian measurement noise.

    Written out directly (no mixture machinery) so it doubles as an
    independent cross-check of the Gaussian-sum path.
    """

    def __init__(self, ss: StateSpace, r_fixed: np.ndarray, belief: GaussianBelief):
        self.ss = ss
        self.R = np.asarray(r_fixed, dtype=float)
        self.x = belief.mean.copy()
        self.P = belief.cov.copy()

    def step(self, current: ExchangeRecord, previous: ExchangeRecord, d: float) -> StepResult:
        z = build_measurement(current, previous, d)
        A, H, Q = self.ss.A, self.ss.H, self.ss.Q_v
        x_pred = A @ self.x
        P_pred = A @ self.P @ A.T + Q
        P_pred = 0.5 * (P_pred + P_pred.T)
        S = H @ P_pred @ H.T + self.R
        K = np.linalg.solve(S.T, (P_pred @ H.T).T).T
        self.x = x_pred + K @ (z - H @ x_pred)
        IKH = np.eye(_DIM) - K @ H
        P = IKH @ P_pred @ IKH.T + K @ self.R @ K.T
        self.P = 0.5 * (P + P.T)
        belief = GaussianBelief(mean=self.x.copy(), cov=self.P.copy())
        return StepResult(
            belief=belief,
            epsilon=float(self.P[0, 0]),
            skew=float(self.x[0]),
            offset=float(self.x[1]),
            responsibilities=np.array([1.0]),
        )


def kalman_baseline_step(
    filt: KalmanBaseline, current: ExchangeRecord, previous: ExchangeRecord, d: float
) -> StepResult:
    """Advance the fixed-noise baseline one period."""
    return filt.step(current, previous, d)


def nominal_noise_cov(stddev: float) -> np.ndarray:
    """Fixed measurement covariance for the baseline from a nominal stddev."""
    return stddev**2 * np.array([[1.0, 0.5], [0.5, 1.0]])
