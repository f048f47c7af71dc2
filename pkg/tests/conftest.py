import numpy as np
import pytest

from tacd.clock import ClockDynamics, build_state_space
from tacd.scenario import PdvProfile, RateSegment, ThermalProfile, ThermalSegment
from tacd.thermal import TempSkewModel

# Reference oscillator constants used across the suite
M_GM = (1.0 - 2e-6) ** (1.0 / 30.0)
SIGMA_U_SQ = (1.0 - M_GM**2) * 1e-3


@pytest.fixture
def dyn() -> ClockDynamics:
    return ClockDynamics(m=M_GM, sigma_u_sq=SIGMA_U_SQ, tau=1.0)


@pytest.fixture
def ss(dyn):
    return build_state_space(dyn)


@pytest.fixture
def temp_model() -> TempSkewModel:
    return TempSkewModel(kappa=4e-8, T0=25.0, theta0=0.0, sigma_T_sq=0.1)


def study_pdv_profile() -> PdvProfile:
    return PdvProfile(
        initial_stddevs=(5e-6, 3e-6, 5e-6),
        initial_weights=(0.4, 0.3, 0.3),
        rate_schedule=(
            RateSegment(1, 15, (-0.6e-7, 2.4e-7, 8e-7), (-11.6e-3, -2.8e-3)),
            RateSegment(16, 35, (0.0, 0.0, 0.0), (0.0, 0.0)),
            RateSegment(36, 55, (-7.25e-7, -1.1e-7, -5.5e-7), (11.7e-3, -4e-3)),
            RateSegment(56, 75, (4.5e-7, -1.3e-7, 7e-7), (-11.5e-3, -3.5e-3)),
        ),
    )


def study_thermal_profile(horizon: int = 75) -> ThermalProfile:
    return ThermalProfile(
        segments=(
            ThermalSegment(0, 20, "constant", {"value": 30.0}),
            ThermalSegment(21, 30, "multimodal", {}),
            ThermalSegment(31, 50, "colored-noise", {}),
            ThermalSegment(51, 60, "first-order", {}),
            ThermalSegment(61, max(61, horizon - 1), "constant", {"value": 30.0}),
        ),
        cooling_constant=10.0,
        initial_oscillator_temp=30.0,
    )


def constant_thermal(horizon: int, value: float = 25.0) -> ThermalProfile:
    return ThermalProfile(
        segments=(ThermalSegment(0, horizon - 1, "constant", {"value": value}),),
        cooling_constant=10.0,
        initial_oscillator_temp=value,
    )
