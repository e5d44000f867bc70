"""Temperature perturbation from a CO2 pulse.

The response of global mean temperature to a 1 GtC pulse is approximated by a
constant minus three decaying exponentials; the constant is chosen so the
perturbation starts at exactly zero in the pulse year and approaches
-(a1 + a2 + a3) = 1.756 mK per GtC as t goes to infinity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PulseOutsideAxis
from .climate import GlobalTrajectory

# tonnes of CO2 per GtC: molar-mass ratio 44.01/12.011 times 1e9 t/Gt,
# = 3.66414120e9 (not a tunable).
TCO2_PER_GTC = 44.01 / 12.011 * 1e9


@dataclass(frozen=True)
class PulseParams:
    """Three-exponential response constants (amplitudes in mK/GtC)."""

    a1: float = -2.308
    a2: float = 0.743
    a3: float = -0.191
    tau1: float = 2.241
    tau2: float = 35.750
    tau3: float = 97.180
    t0: int = 2010
    size_gtc: float = 1.0
    ecs_scaling: bool = False  # optional sensitivity mode, off by default

    def __post_init__(self):
        if min(self.tau1, self.tau2, self.tau3) <= 0.0:
            raise ValueError("pulse timescales must be positive")
        if self.size_gtc <= 0.0:
            raise ValueError("pulse size must be positive")

    @property
    def tonnes_co2(self) -> float:
        return self.size_gtc * TCO2_PER_GTC


def pulse_delta_t(params: PulseParams, years, ecs: float = 3.0):
    """Warming caused by the pulse in degC; zero for years before the pulse.

    delta(t) = [-(a1+a2+a3) + sum_i a_i exp(-(t-t0)/tau_i)] * size * 1e-3
    """
    arr = np.asarray(years, dtype=float)
    elapsed = np.maximum(arr - params.t0, 0.0)
    response_mk = (
        -(params.a1 + params.a2 + params.a3)
        + params.a1 * np.exp(-elapsed / params.tau1)
        + params.a2 * np.exp(-elapsed / params.tau2)
        + params.a3 * np.exp(-elapsed / params.tau3)
    )
    out = np.where(arr < params.t0, 0.0, response_mk) * (params.size_gtc * 1e-3)
    if params.ecs_scaling:
        out = out * (ecs / 3.0)
    if np.ndim(years) == 0:
        return float(out)
    return out


def perturbed_trajectory(base: GlobalTrajectory, params: PulseParams,
                         ecs: float = 3.0) -> GlobalTrajectory:
    """Baseline trajectory plus the pulse response, pointwise."""
    if params.t0 not in base.years:
        raise PulseOutsideAxis(
            f"pulse year {params.t0} not on the trajectory axis "
            f"[{base.years[0]}, {base.years[-1]}]"
        )
    delta = pulse_delta_t(params, base.years, ecs)
    return GlobalTrajectory(
        years=base.years,
        anomaly=base.anomaly + delta,
        label=f"{base.label}+pulse" if base.label else "pulse",
    )
