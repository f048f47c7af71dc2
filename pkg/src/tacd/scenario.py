"""Ground-truth scenario generation.

Produces two-way timestamp exchanges under non-stationary Gaussian-mixture
delay variation with a known fixed delay asymmetry, oscillator temperature
trajectories with Newton cooling, and (optionally) one-way delays resampled
from an empirical CSV table.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .clock import ClockParams
from .thermal import TempSkewModel

WEIGHT_TOLERANCE = 0.05
DEFAULT_STDDEV_FLOOR = 1e-7

# Cholesky factor of [[1, 0.5], [0.5, 1]]: the shared forward-delay term in
# the measurement noise vector induces cross-correlation Lambda^2/2.
_NOISE_CORR_CHOL = np.linalg.cholesky(np.array([[1.0, 0.5], [0.5, 1.0]]))

_THERMAL_KINDS = ("constant", "multimodal", "colored-noise", "first-order")


class DelayCsvError(ValueError):
    """Raised for malformed empirical delay CSV input."""


@dataclass(frozen=True)
class RateSegment:
    """Per-period parameter changing rates in effect for periods start..end."""

    start: int
    end: int
    stddev_rates: tuple[float, ...]
    weight_rates: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"segment start {self.start} > end {self.end}")


@dataclass(frozen=True)
class PdvProfile:
    """Non-stationary GMM parameters of the packet-delay-variation noise.

    Stddevs and weights evolve incrementally: within a rate segment each
    period adds the segment rate to the previous period's value. The last
    weight is derived so the simplex is preserved, raw weights are clipped
    and renormalized, and stddevs are clamped at the floor.
    """

    initial_stddevs: tuple[float, ...]
    initial_weights: tuple[float, ...]
    rate_schedule: tuple[RateSegment, ...] = ()
    stddev_floor: float = DEFAULT_STDDEV_FLOOR

    def __post_init__(self) -> None:
        n = len(self.initial_stddevs)
        if n < 1:
            raise ValueError("at least one mixture component required")
        if len(self.initial_weights) != n:
            raise ValueError("initial_weights and initial_stddevs lengths differ")
        if self.stddev_floor <= 0.0:
            raise ValueError("stddev_floor must be > 0")
        w = np.asarray(self.initial_weights)
        if abs(w.sum() - 1.0) > 1e-12 or np.any(w < 0.0) or np.any(w > 1.0):
            raise ValueError(f"initial weights must lie on the simplex, got {self.initial_weights}")
        if any(s < self.stddev_floor for s in self.initial_stddevs):
            raise ValueError("initial stddevs must be >= stddev_floor")
        spans = []
        for seg in self.rate_schedule:
            if len(seg.stddev_rates) != n or len(seg.weight_rates) != n - 1:
                raise ValueError("rate vector lengths must match the component count")
            spans.append((seg.start, seg.end))
        spans.sort()
        for (s0, e0), (s1, _) in zip(spans, spans[1:]):
            if s1 <= e0:
                raise ValueError(f"overlapping rate segments near period {s1}")

    @property
    def num_components(self) -> int:
        return len(self.initial_stddevs)

    def _rates_at(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        for seg in self.rate_schedule:
            if seg.start <= k <= seg.end:
                return np.asarray(seg.stddev_rates), np.asarray(seg.weight_rates)
        z = np.zeros(self.num_components)
        return z, np.zeros(max(self.num_components - 1, 0))


def pdv_params_table(profile: PdvProfile, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Evolved (weights, stddevs) arrays of shape (horizon, N_g)."""
    n = profile.num_components
    weights = np.empty((horizon, n))
    stddevs = np.empty((horizon, n))
    lead = np.asarray(profile.initial_weights[: n - 1], dtype=float)
    std = np.asarray(profile.initial_stddevs, dtype=float)
    for k in range(horizon):
        if k > 0:
            srate, wrate = profile._rates_at(k)
            std = np.maximum(std + srate, profile.stddev_floor)
            lead = lead + wrate
        raw = np.append(lead, 1.0 - lead.sum())
        if np.any(raw < -WEIGHT_TOLERANCE) or np.any(raw > 1.0 + WEIGHT_TOLERANCE):
            raise ValueError(
                f"raw mixture weights {raw} leave [0, 1] beyond tolerance "
                f"{WEIGHT_TOLERANCE} at period {k}"
            )
        w = np.clip(raw, 0.0, 1.0)
        weights[k] = w / w.sum()
        stddevs[k] = std
    return weights, stddevs


def pdv_params_at(profile: PdvProfile, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Mixture (weights, stddevs) in effect at period k."""
    if k < 0:
        raise ValueError("period index must be >= 0")
    w, s = pdv_params_table(profile, k + 1)
    return w[k], s[k]


def sample_measurement_noise(
    weights: Sequence[float],
    stddevs: Sequence[float],
    rng: np.random.Generator,
    size: Optional[int] = None,
) -> np.ndarray:
    """Draw the two-component measurement noise vector from the mixture.

    A component j is selected with probability weights[j]; the vector is
    zero-mean with covariance stddevs[j]^2 * [[1, 0.5], [0.5, 1]]. With
    `size` given, returns (size, 2) i.i.d. draws.
    """
    w = np.asarray(weights, dtype=float)
    s = np.asarray(stddevs, dtype=float)
    if size is None:
        j = int(np.searchsorted(np.cumsum(w), rng.random() * w.sum(), side="right"))
        j = min(j, len(w) - 1)
        return s[j] * (_NOISE_CORR_CHOL @ rng.standard_normal(2))
    comps = np.searchsorted(np.cumsum(w), rng.random(size) * w.sum(), side="right")
    comps = np.minimum(comps, len(w) - 1)
    return s[comps, None] * (rng.standard_normal((size, 2)) @ _NOISE_CORR_CHOL.T)


@dataclass(frozen=True)
class ThermalSegment:
    """One piece of the external temperature trajectory (periods start..end)."""

    start: int
    end: int
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"segment start {self.start} > end {self.end}")
        if self.kind not in _THERMAL_KINDS:
            raise ValueError(f"unknown thermal curve kind {self.kind!r}, expected one of {_THERMAL_KINDS}")


@dataclass(frozen=True)
class ThermalProfile:
    """External temperature segments plus the oscillator cooling model."""

    segments: tuple[ThermalSegment, ...]
    cooling_constant: float = 10.0
    initial_oscillator_temp: float = 30.0

    def __post_init__(self) -> None:
        if self.cooling_constant <= 0.0:
            raise ValueError("cooling_constant must be > 0")
        spans = sorted((s.start, s.end) for s in self.segments)
        for (s0, e0), (s1, _) in zip(spans, spans[1:]):
            if s1 <= e0:
                raise ValueError(f"overlapping thermal segments near period {s1}")

    def validate_horizon(self, horizon: int) -> None:
        """Segments must tile 0..horizon-1 with no gaps."""
        covered = np.zeros(horizon, dtype=bool)
        for seg in self.segments:
            lo, hi = max(seg.start, 0), min(seg.end, horizon - 1)
            if lo <= hi:
                covered[lo : hi + 1] = True
        if not covered.all():
            gap = int(np.flatnonzero(~covered)[0])
            raise ValueError(f"thermal segments leave period {gap} uncovered")

    def _segment_at(self, k: int) -> ThermalSegment:
        for seg in self.segments:
            if seg.start <= k <= seg.end:
                return seg
        raise ValueError(f"no thermal segment covers period {k}")


def temperature_at(
    profile: ThermalProfile, k: int, rng: Optional[np.random.Generator] = None
) -> float:
    """External temperature at period k (degC); colored-noise segments draw from rng."""
    seg = profile._segment_at(k)
    p = seg.params
    if seg.kind == "constant":
        return float(p.get("value", 30.0))
    if seg.kind == "multimodal":
        amp = p.get("amp", 1.1)
        quad = p.get("quad", 0.005)
        offset = p.get("offset", 40.0)
        return amp * np.sin(2.0 * k + np.pi) - quad * (2.0 * k + 2.0) ** 2 + offset
    if seg.kind == "colored-noise":
        if rng is None:
            raise ValueError("colored-noise segment requires an rng")
        mean = p.get("mean", 20.0)
        var = p.get("var_base", 0.02) + (k - p.get("var_ref_k", 30.0)) * p.get("var_slope", 1e-2)
        if var <= 0.0:
            raise ValueError(f"colored-noise variance is non-positive ({var}) at period {k}")
        return mean + rng.standard_normal() * np.sqrt(var)
    # first-order
    return p.get("slope", 1.0) * k + p.get("intercept", -30.0)


def oscillator_temp_step(t_osc_prev: float, t_ext_now: float, cooling_constant: float, dt: float = 1.0) -> float:
    """Newton cooling relaxation of the oscillator temperature toward ambient."""
    if cooling_constant <= 0.0:
        raise ValueError("cooling_constant must be > 0")
    return t_ext_now + (t_osc_prev - t_ext_now) * np.exp(-dt / cooling_constant)


@dataclass(frozen=True)
class LinkConfig:
    """Fixed one-way delays; the asymmetry d = d1 - d2 is known to estimators."""

    d1: float
    d2: float

    @property
    def d(self) -> float:
        return self.d1 - self.d2


@dataclass(frozen=True)
class ExchangeRecord:
    """Four timestamps of one two-way exchange at period k (local timeline)."""

    t1: float
    t2: float
    t3: float
    t4: float
    period_index: int

    def __post_init__(self) -> None:
        if not self.t4 > self.t1:
            raise ValueError("t4 must follow t1 on the local timeline")


def simulate_exchange(
    truth: ClockParams,
    link: LinkConfig,
    w1: float,
    w2: float,
    k: int,
    tau: float,
    turnaround: Optional[float] = None,
) -> ExchangeRecord:
    """Build the period-k exchange timestamps.

    t1 and t4 sit on the local timeline at k*tau and k*tau + turnaround
    (default tau/100, small enough that the offset is constant within the
    period). w1, w2 are the random one-way delay parts; in synthetic mode
    they are deviations from the fixed part and may be negative.
    """
    if turnaround is None:
        turnaround = tau / 100.0
    t1 = k * tau
    t4 = t1 + turnaround
    t2 = t1 + link.d1 + w1 + truth.offset
    t3 = t4 - link.d2 - w2 + truth.offset
    return ExchangeRecord(t1=t1, t2=t2, t3=t3, t4=t4, period_index=k)


class EmpiricalDelayTable:
    """One-way delay samples grouped by (packet_bytes, load_percent) cell."""

    def __init__(self, cells: dict[tuple[int, float], np.ndarray]):
        if not cells:
            raise DelayCsvError("empty delay table: no sample rows")
        for key, samples in cells.items():
            if np.any(np.asarray(samples) <= 0.0):
                raise DelayCsvError(f"non-positive delay sample in cell {key}")
        self._cells = {k: np.sort(np.asarray(v, dtype=float)) for k, v in cells.items()}

    @property
    def cells(self) -> dict[tuple[int, float], np.ndarray]:
        return self._cells

    def samples(self, packet_bytes: int, load_percent: float) -> np.ndarray:
        key = (int(packet_bytes), float(load_percent))
        if key not in self._cells:
            raise KeyError(f"no delay samples for cell {key}; available: {sorted(self._cells)}")
        return self._cells[key]

    def fixed_delay(self, packet_bytes: int, load_percent: float) -> float:
        """Fixed part of a cell's delay: the cell minimum."""
        return float(self.samples(packet_bytes, load_percent)[0])

    def __len__(self) -> int:
        return sum(len(v) for v in self._cells.values())


_CSV_HEADER = ["packet_bytes", "load_percent", "delay_seconds"]


def load_delay_csv(path) -> EmpiricalDelayTable:
    """Parse an empirical delay CSV (header packet_bytes,load_percent,delay_seconds)."""
    cells: dict[tuple[int, float], list[float]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DelayCsvError(f"{path}: empty file, expected header {','.join(_CSV_HEADER)}")
        if [h.strip() for h in header] != _CSV_HEADER:
            raise DelayCsvError(f"{path}: bad header {header!r}, expected {_CSV_HEADER}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DelayCsvError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            if any(cell.strip() == "" for cell in row):
                raise DelayCsvError(f"{path}:{lineno}: empty cell")
            try:
                packet = int(row[0])
                load = float(row[1])
                delay = float(row[2])
            except ValueError as exc:
                raise DelayCsvError(f"{path}:{lineno}: {exc}") from None
            if delay <= 0.0:
                raise DelayCsvError(f"{path}:{lineno}: delay must be > 0, got {delay}")
            cells.setdefault((packet, load), []).append(delay)
    if not cells:
        raise DelayCsvError(f"{path}: header-only file, no sample rows")
    return EmpiricalDelayTable({k: np.asarray(v) for k, v in cells.items()})


@dataclass(frozen=True)
class EmpiricalSource:
    """Empirical delay-resampling mode: one table cell per direction."""

    table: EmpiricalDelayTable
    forward_cell: tuple[int, float]
    reverse_cell: tuple[int, float]


@dataclass(frozen=True)
class TruthOptions:
    """Truth-trajectory options.

    With thermal_coupling the true skew is theta0 + kappa*(T_osc - T0)^2 plus
    a Gauss-Markov residual of per-period variance process_noise_sq; without
    it the residual alone is the skew.
    """

    initial_offset: float = 1e-6
    initial_skew_residual: float = 0.0
    process_noise_sq: float = 0.0
    thermal_coupling: bool = True


@dataclass(frozen=True)
class ScenarioConfig:
    tau: float
    horizon: int
    link: LinkConfig
    pdv: Optional[PdvProfile]
    thermal: ThermalProfile
    temp_model: TempSkewModel
    truth: TruthOptions = TruthOptions()
    gm_coefficient: float = 1.0
    empirical: Optional[EmpiricalSource] = None

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.pdv is None and self.empirical is None:
            raise ValueError("either a PDV profile or an empirical source is required")
        self.thermal.validate_horizon(self.horizon)


@dataclass
class ScenarioData:
    """One run's ground truth: per-period states, temperatures, and exchanges."""

    tau: float
    skew_true: np.ndarray
    offset_true: np.ndarray
    temp_ext: np.ndarray
    temp_osc: np.ndarray
    temp_meas: np.ndarray
    records: list[ExchangeRecord]
    link: LinkConfig
    pdv_weights: Optional[np.ndarray]
    pdv_stddevs: Optional[np.ndarray]

    @property
    def horizon(self) -> int:
        return len(self.records)


def generate_scenario(cfg: ScenarioConfig, rng: np.random.Generator) -> ScenarioData:
    """Generate one seeded run: truth trajectories plus exchange records.

    The per-period draw order is fixed (skew residual, mixture component and
    noise vector or empirical delays, external temperature, sensor noise) so
    a given (config, seed) reproduces bit-identical records.
    """
    h = cfg.horizon
    model = cfg.temp_model
    truth = cfg.truth

    if cfg.empirical is not None:
        src = cfg.empirical
        fwd = src.table.samples(*src.forward_cell)
        rev = src.table.samples(*src.reverse_cell)
        link = LinkConfig(d1=float(fwd[0]), d2=float(rev[0]))
        weights_tbl = stddevs_tbl = None
    else:
        link = cfg.link
        weights_tbl, stddevs_tbl = pdv_params_table(cfg.pdv, h)

    skew = np.empty(h)
    offset = np.empty(h)
    t_ext = np.empty(h)
    t_osc = np.empty(h)
    t_meas = np.empty(h)
    records: list[ExchangeRecord] = []

    sig_u = np.sqrt(truth.process_noise_sq)
    sig_T = np.sqrt(model.sigma_T_sq)
    gamma = truth.initial_skew_residual
    w1_prev = 0.0

    for k in range(h):
        u_k = rng.standard_normal() * sig_u
        if k > 0:
            gamma = cfg.gm_coefficient * gamma + u_k

        if cfg.empirical is not None:
            w1 = float(fwd[rng.integers(len(fwd))]) - link.d1
            w2 = float(rev[rng.integers(len(rev))]) - link.d2
        else:
            n_k = sample_measurement_noise(weights_tbl[k], stddevs_tbl[k], rng)
            w1 = w1_prev + n_k[0] if k > 0 else 0.0
            w2 = w1 - n_k[1]
        w1_prev = w1

        t_ext[k] = temperature_at(cfg.thermal, k, rng)
        if k == 0:
            t_osc[k] = cfg.thermal.initial_oscillator_temp
        else:
            t_osc[k] = oscillator_temp_step(t_osc[k - 1], t_ext[k], cfg.thermal.cooling_constant)
        t_meas[k] = t_osc[k] + rng.standard_normal() * sig_T

        if truth.thermal_coupling:
            dT = t_osc[k] - model.T0
            skew[k] = model.theta0 + model.kappa * dT * dT + gamma
        else:
            skew[k] = gamma
        offset[k] = truth.initial_offset if k == 0 else offset[k - 1] + cfg.tau * skew[k]

        records.append(
            simulate_exchange(
                ClockParams(skew=skew[k], offset=offset[k]), link, w1, w2, k, cfg.tau
            )
        )

    return ScenarioData(
        tau=cfg.tau,
        skew_true=skew,
        offset_true=offset,
        temp_ext=t_ext,
        temp_osc=t_osc,
        temp_meas=t_meas,
        records=records,
        link=link,
        pdv_weights=weights_tbl,
        pdv_stddevs=stddevs_tbl,
    )
