"""Seeded Monte-Carlo execution of the estimator pipelines.

Each run draws its own RNG stream from (master_seed, run_index), generates
the scenario once, and steps every selected estimator over the shared
records, so estimator comparisons are paired and adding an estimator never
changes another's trajectory.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bclb import FusionBclbParams, OracleNoiseTruth, bclb_trajectory
from .clock import build_state_space
from .config import RunConfig
from .fusion import PhaseErrorStats, fuse_skew, pareto_beta
from .netcomm import (
    GaussianBelief,
    GsfVbFilter,
    KalmanBaseline,
    gptp_offset,
    gptp_skew,
    isotropic_mixture_model,
    nominal_noise_cov,
)
from .scenario import generate_scenario
from .thermal import skew_from_temperature


@dataclass
class RunTrajectory:
    """One run's per-period truth, phase estimates, and bound values."""

    run: int
    theta_true: np.ndarray
    delta_true: np.ndarray
    temp_osc: np.ndarray
    temp_meas: np.ndarray
    theta_L: np.ndarray
    theta_T: np.ndarray
    theta_F: np.ndarray
    delta_hat: np.ndarray
    epsilon: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    bclb_L: np.ndarray
    bclb_F: np.ndarray
    est_skew: dict[str, np.ndarray] = field(default_factory=dict)
    est_offset: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.theta_true.shape[0]


@dataclass
class RmseSummary:
    """Per-estimator steady-state RMSEs (offset NaN where undefined)."""

    window: int
    rows: list[tuple[str, float, float]]

    def as_dict(self) -> dict[str, tuple[float, float]]:
        return {name: (s, o) for name, s, o in self.rows}


@dataclass
class FusionStudyResult:
    """Per-period study curves plus the steady-state comparison numbers."""

    rmse_single1: np.ndarray
    rmse_single2: np.ndarray
    rmse_fusion: np.ndarray
    bclb_single: np.ndarray
    bclb_fusion: np.ndarray
    steady_rmse_single1: float
    steady_rmse_single2: float
    steady_rmse_fusion: float
    steady_bclb_reduction: float

    @property
    def horizon(self) -> int:
        return self.rmse_single1.shape[0]


def _run_rng(master_seed: int, run_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=master_seed, spawn_key=(run_index,)))


def simulate_run(cfg: RunConfig, run_index: int) -> RunTrajectory:
    """Generate one scenario and step every selected estimator over it."""
    rng = _run_rng(cfg.master_seed, run_index)
    data = generate_scenario(cfg.scenario, rng)
    h = data.horizon
    sel = set(cfg.estimators)
    ss = build_state_space(cfg.dynamics)
    model = cfg.temp_model
    init = cfg.netcomm_init
    d = data.link.d

    nan = np.full(h, np.nan)
    theta_L, theta_T, theta_F = nan.copy(), nan.copy(), nan.copy()
    delta_hat, epsilon = nan.copy(), nan.copy()
    alpha, beta = nan.copy(), nan.copy()
    est_skew: dict[str, np.ndarray] = {name: nan.copy() for name in sel}
    est_offset: dict[str, np.ndarray] = {name: nan.copy() for name in sel}

    def fresh_filter() -> GsfVbFilter:
        return GsfVbFilter(
            ss,
            isotropic_mixture_model(init.chi0, init.dof0, init.scale0, init.unit_scale),
            GaussianBelief(mean=np.array(init.x0), cov=np.diag(init.p0_diag)),
            vb=cfg.vb,
        )

    tacd_f = fresh_filter() if "tacd" in sel else None
    lin_f = fresh_filter() if "linear-only" in sel else None
    kal_f = (
        KalmanBaseline(
            ss,
            nominal_noise_cov(cfg.kalman_nominal_stddev),
            GaussianBelief(mean=np.array(init.x0), cov=np.diag(init.p0_diag)),
        )
        if "kalman" in sel
        else None
    )
    need_thermal = ("tacd" in sel) or ("thermal-only" in sel)

    for k in range(h):
        rec = data.records[k]
        th_T = skew_from_temperature(data.temp_meas[k], model) if need_thermal else np.nan

        if "thermal-only" in sel:
            est_skew["thermal-only"][k] = th_T
        if "gptp" in sel:
            est_offset["gptp"][k] = gptp_offset(rec, d)
            if k > 0:
                est_skew["gptp"][k] = gptp_skew(rec, data.records[k - 1], cfg.scenario.tau)
        if kal_f is not None:
            if k > 0:
                res = kal_f.step(rec, data.records[k - 1], d)
                est_skew["kalman"][k] = res.skew
                est_offset["kalman"][k] = res.offset
            else:
                est_skew["kalman"][k] = init.x0[0]
                est_offset["kalman"][k] = init.x0[1]
        if lin_f is not None:
            if k > 0:
                res = lin_f.step(rec, data.records[k - 1], d)
                est_skew["linear-only"][k] = res.skew
                est_offset["linear-only"][k] = res.offset
            else:
                est_skew["linear-only"][k] = init.x0[0]
                est_offset["linear-only"][k] = init.x0[1]

        if tacd_f is not None:
            if k > 0:
                res = tacd_f.step(rec, data.records[k - 1], d)
                th_L, eps, d_hat = res.skew, res.epsilon, res.offset
            else:
                th_L, eps, d_hat = init.x0[0], init.p0_diag[0], init.x0[1]
            stats = PhaseErrorStats(linear_variance=eps, temp_gap=data.temp_meas[k] - model.T0)
            wts = pareto_beta(stats, model, cfg.fusion.lam)
            th_F = fuse_skew(th_L, th_T, wts)
            if cfg.fusion.feedback:
                tacd_f.condition_on_skew(th_F)
            theta_L[k], theta_F[k] = th_L, th_F
            epsilon[k], alpha[k], beta[k] = eps, wts.alpha, wts.beta
            delta_hat[k] = d_hat
            est_skew["tacd"][k] = th_F
            est_offset["tacd"][k] = d_hat
        if need_thermal:
            theta_T[k] = th_T

    bclb_l = np.full(h, np.nan)
    bclb_f = np.full(h, np.nan)
    if data.pdv_weights is not None:
        oracle = OracleNoiseTruth(weights=data.pdv_weights, stddevs=data.pdv_stddevs, tau=cfg.scenario.tau)
        if cfg.bclb.alpha_mode == "runtime" and "tacd" in sel:
            alpha_seq: object = np.clip(np.nan_to_num(alpha, nan=1.0), 1e-12, 1.0)
        else:
            alpha_seq = cfg.bclb.alpha_value
        params = None
        if model.sigma_T_sq > 0.0:  # the fusion bound needs a proper sensor-noise model
            params = FusionBclbParams(
                alpha=alpha_seq,
                sigma_m_sq=cfg.bclb.sigma_m_sq,
                sigma_T_sq=model.sigma_T_sq,
                kappa=model.kappa,
                T0=model.T0,
                theta0=model.theta0,
            )
        bclb_l, bclb_f = bclb_trajectory(oracle, cfg.dynamics, params, init.p0_diag[0])

    return RunTrajectory(
        run=run_index,
        theta_true=data.skew_true,
        delta_true=data.offset_true,
        temp_osc=data.temp_osc,
        temp_meas=data.temp_meas,
        theta_L=theta_L,
        theta_T=theta_T,
        theta_F=theta_F,
        delta_hat=delta_hat,
        epsilon=epsilon,
        alpha=alpha,
        beta=beta,
        bclb_L=bclb_l,
        bclb_F=bclb_f,
        est_skew=est_skew,
        est_offset=est_offset,
    )


def _worker(args: tuple[RunConfig, int]) -> RunTrajectory:
    cfg, run_index = args
    return simulate_run(cfg, run_index)


def run_case(cfg: RunConfig) -> list[RunTrajectory]:
    """Execute all Monte-Carlo runs; output is identical for any worker count."""
    if cfg.workers <= 1 or cfg.runs == 1:
        return [simulate_run(cfg, r) for r in range(cfg.runs)]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        results = list(pool.map(_worker, [(cfg, r) for r in range(cfg.runs)], chunksize=8))
    return results


def trajectory_rows(trajectories: Sequence[RunTrajectory]):
    """Flatten runs into trajectory CSV rows (run-major, then period)."""
    for t in trajectories:
        for k in range(t.horizon):
            yield (
                t.run, k, t.theta_true[k], t.delta_true[k], t.temp_osc[k], t.temp_meas[k],
                t.theta_L[k], t.theta_T[k], t.theta_F[k], t.delta_hat[k], t.epsilon[k],
                t.alpha[k], t.beta[k], t.bclb_L[k], t.bclb_F[k],
            )


def _window_slice(horizon: int, window: int) -> slice:
    if window < 1 or window > horizon:
        raise ValueError(f"window must lie in [1, horizon={horizon}], got {window}")
    return slice(horizon - window, horizon)


def evaluate_rmse(
    trajectories: Sequence[RunTrajectory],
    window: int,
    estimators: Optional[Sequence[str]] = None,
) -> RmseSummary:
    """Steady-state RMSE over the last `window` periods, across all runs."""
    if not trajectories:
        raise ValueError("no trajectories to evaluate")
    h = trajectories[0].horizon
    sl = _window_slice(h, window)
    names = list(estimators) if estimators is not None else sorted(trajectories[0].est_skew)
    rows = []
    for name in names:
        sk_err, of_err = [], []
        for t in trajectories:
            sk_err.append(t.est_skew[name][sl] - t.theta_true[sl])
            of_err.append(t.est_offset[name][sl] - t.delta_true[sl])
        sk = np.concatenate(sk_err)
        of = np.concatenate(of_err)
        sk_rmse = float(np.sqrt(np.mean(sk**2)))
        of_rmse = float(np.sqrt(np.mean(of**2))) if np.any(np.isfinite(of)) else float("nan")
        rows.append((name, sk_rmse, of_rmse))
    return RmseSummary(window=window, rows=rows)


def summary_rows(summary: RmseSummary):
    for name, sk, of in summary.rows:
        yield (name, sk, of)


def fusion_study(cfg: RunConfig) -> tuple[FusionStudyResult, list[RunTrajectory]]:
    """Per-period RMSE of the three estimator variants plus both bounds.

    Runs the fused pipeline, the isolated network-phase filter, and the
    thermal phase on shared scenario draws; bound curves follow the
    configured alpha mode ("fixed" reference weight by default, "runtime"
    uses the Monte-Carlo mean of the produced alpha sequence).
    """
    study_cfg = cfg.with_overrides(estimators=("tacd", "linear-only", "thermal-only"))
    trajs = run_case(study_cfg)
    h = trajs[0].horizon

    def per_period_rmse(pick) -> np.ndarray:
        err = np.stack([pick(t) for t in trajs])
        return np.sqrt(np.mean(err**2, axis=0))

    r1 = per_period_rmse(lambda t: t.est_skew["linear-only"] - t.theta_true)
    r2 = per_period_rmse(lambda t: t.est_skew["thermal-only"] - t.theta_true)
    rf = per_period_rmse(lambda t: t.est_skew["tacd"] - t.theta_true)

    if trajs[0].bclb_L is None or not np.any(np.isfinite(trajs[0].bclb_L)):
        raise ValueError("fusion study requires a synthetic PDV profile (oracle bounds)")
    bclb_l = trajs[0].bclb_L
    if cfg.bclb.alpha_mode == "runtime":
        # rebuild the bound with the Monte-Carlo mean alpha sequence
        mean_alpha = np.clip(np.mean(np.stack([t.alpha for t in trajs]), axis=0), 1e-12, 1.0)
        from .scenario import pdv_params_table

        weights, stddevs = pdv_params_table(cfg.scenario.pdv, h)
        oracle = OracleNoiseTruth(weights=weights, stddevs=stddevs, tau=cfg.scenario.tau)
        params = FusionBclbParams(
            alpha=mean_alpha,
            sigma_m_sq=cfg.bclb.sigma_m_sq,
            sigma_T_sq=cfg.temp_model.sigma_T_sq,
            kappa=cfg.temp_model.kappa,
            T0=cfg.temp_model.T0,
        )
        bclb_l, bclb_f = bclb_trajectory(oracle, cfg.dynamics, params, cfg.netcomm_init.p0_diag[0])
    else:
        bclb_f = trajs[0].bclb_F

    sl = _window_slice(h, cfg.steady_window)
    reduction = 1.0 - float(np.mean(bclb_f[sl]) / np.mean(bclb_l[sl]))
    result = FusionStudyResult(
        rmse_single1=r1,
        rmse_single2=r2,
        rmse_fusion=rf,
        bclb_single=bclb_l,
        bclb_fusion=bclb_f,
        steady_rmse_single1=float(np.sqrt(np.mean(r1[sl] ** 2))),
        steady_rmse_single2=float(np.sqrt(np.mean(r2[sl] ** 2))),
        steady_rmse_fusion=float(np.sqrt(np.mean(rf[sl] ** 2))),
        steady_bclb_reduction=reduction,
    )
    return result, trajs


def fusion_study_rows(result: FusionStudyResult):
    for k in range(result.horizon):
        yield (
            k,
            result.rmse_single1[k],
            result.rmse_single2[k],
            result.rmse_fusion[k],
            result.bclb_single[k],
            result.bclb_fusion[k],
        )


def bclb_rows(cfg: RunConfig) -> list[tuple]:
    """Bound-only evaluation from the configured scenario (no estimators)."""
    if cfg.scenario.pdv is None:
        raise ValueError("bclb evaluation requires a synthetic PDV profile")
    if cfg.bclb.alpha_mode == "runtime":
        raise ValueError("bclb subcommand needs a fixed alpha (set bclb.alpha_mode='fixed')")
    from .scenario import pdv_params_table

    weights, stddevs = pdv_params_table(cfg.scenario.pdv, cfg.scenario.horizon)
    oracle = OracleNoiseTruth(weights=weights, stddevs=stddevs, tau=cfg.scenario.tau)
    params = FusionBclbParams(
        alpha=cfg.bclb.alpha_value,
        sigma_m_sq=cfg.bclb.sigma_m_sq,
        sigma_T_sq=cfg.temp_model.sigma_T_sq,
        kappa=cfg.temp_model.kappa,
        T0=cfg.temp_model.T0,
    )
    bclb_l, bclb_f = bclb_trajectory(oracle, cfg.dynamics, params, cfg.netcomm_init.p0_diag[0])
    return [(k, bclb_l[k], bclb_f[k]) for k in range(len(bclb_l))]
