"""Per-cell warming: pattern scaling, climate sensitivity, urban heat island.

Local greenhouse warming is a fixed per-cell slope times the global anomaly.
Urban cells additionally receive a population-driven heat-island term
a * P**b, which is zero wherever the urban mask is false.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError, MissingPattern, NonPositiveEcs
from .scenario import Scenario, UrbanMask

REFERENCE_ECS = 3.0  # degC per CO2 doubling, the anchor of the input trajectory


@dataclass(frozen=True)
class EcsDistribution:
    """Triangular uncertainty on equilibrium climate sensitivity, in degC."""

    lower: float = 2.0
    mode: float = 3.0
    upper: float = 5.0

    def __post_init__(self):
        if not self.lower < self.mode < self.upper:
            raise ValueError("triangular distribution needs lower < mode < upper")


def sample_ecs(dist: EcsDistribution, u):
    """Inverse CDF of the triangular distribution, deterministic in u.

    Accepts a scalar or an array of uniform deviates in [0, 1].
    """
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("uniform deviates must lie in [0, 1]")
    span = dist.upper - dist.lower
    f_mode = (dist.mode - dist.lower) / span
    left = dist.lower + np.sqrt(arr * span * (dist.mode - dist.lower))
    right = dist.upper - np.sqrt((1.0 - arr) * span * (dist.upper - dist.mode))
    out = np.where(arr <= f_mode, left, right)
    if np.ndim(u) == 0:
        return float(out)
    return out


@dataclass
class GlobalTrajectory:
    """Global mean warming above pre-industrial, one value per year."""

    years: np.ndarray   # (T,) ascending integers
    anomaly: np.ndarray  # (T,) degC
    label: str = ""

    def __post_init__(self):
        self.years = np.asarray(self.years, dtype=int)
        self.anomaly = np.asarray(self.anomaly, dtype=float)
        if self.years.shape != self.anomaly.shape:
            raise DataError("trajectory years and anomaly must align")
        if not np.all(np.isfinite(self.anomaly)):
            raise DataError("trajectory anomaly contains non-finite values")
        if self.years.size > 1 and np.any(np.diff(self.years) <= 0):
            raise DataError("trajectory years must be strictly increasing")

    def value(self, year: int) -> float:
        pos = np.searchsorted(self.years, year)
        if pos >= self.years.size or self.years[pos] != year:
            raise DataError(f"year {year} not on trajectory axis")
        return float(self.anomaly[pos])

    def aligned(self, years) -> np.ndarray:
        """Anomaly values for the requested years; every year must be present."""
        idx = np.searchsorted(self.years, years)
        idx = np.clip(idx, 0, self.years.size - 1)
        if not np.array_equal(self.years[idx], np.asarray(years)):
            raise DataError("trajectory does not cover the requested year axis")
        return self.anomaly[idx]


def load_trajectory(path, label: str = "") -> GlobalTrajectory:
    """Read a `year,anomaly_degC` CSV."""
    df = pd.read_csv(path)
    for col in ("year", "anomaly_degC"):
        if col not in df.columns:
            raise DataError(f"trajectory file {path} lacks column {col!r}")
    df = df.sort_values("year")
    return GlobalTrajectory(
        years=df["year"].to_numpy(dtype=int),
        anomaly=df["anomaly_degC"].to_numpy(dtype=float),
        label=label,
    )


def scale_trajectory(reference: GlobalTrajectory, ecs: float,
                     reference_ecs: float = REFERENCE_ECS) -> GlobalTrajectory:
    """First-order sensitivity adjustment: anomaly scaled by ecs/reference_ecs."""
    if reference_ecs <= 0.0 or ecs <= 0.0:
        raise NonPositiveEcs("climate sensitivity must be positive")
    return GlobalTrajectory(
        years=reference.years,
        anomaly=reference.anomaly * (ecs / reference_ecs),
        label=reference.label,
    )


@dataclass
class PatternField:
    """Per-cell warming slope (local degC per global degC) for one model."""

    cell_ids: np.ndarray
    slope: np.ndarray
    model_tag: str = ""

    def __post_init__(self):
        self.cell_ids = np.asarray(self.cell_ids, dtype=int)
        self.slope = np.asarray(self.slope, dtype=float)
        if not np.all(np.isfinite(self.slope)):
            raise DataError(f"pattern {self.model_tag!r} has non-finite slopes")
        order = np.argsort(self.cell_ids)
        self.cell_ids = self.cell_ids[order]
        self.slope = self.slope[order]
        if np.any(np.diff(self.cell_ids) == 0):
            raise DataError(f"pattern {self.model_tag!r} has duplicate cell ids")

    def slope_for(self, cell_id: int) -> float:
        pos = np.searchsorted(self.cell_ids, cell_id)
        if pos >= self.cell_ids.size or self.cell_ids[pos] != cell_id:
            raise MissingPattern(f"no pattern slope for cell {cell_id}")
        return float(self.slope[pos])

    def aligned(self, cell_ids) -> np.ndarray:
        idx = np.searchsorted(self.cell_ids, cell_ids)
        idx = np.clip(idx, 0, self.cell_ids.size - 1)
        found = self.cell_ids[idx] == np.asarray(cell_ids)
        if not np.all(found):
            missing = np.asarray(cell_ids)[~found]
            raise MissingPattern(
                f"pattern {self.model_tag!r} misses {missing.size} cells "
                f"(first: {missing[:5].tolist()})"
            )
        return self.slope[idx]

    @classmethod
    def uniform(cls, cell_ids, slope: float = 1.0, model_tag: str = "uniform"):
        ids = np.asarray(cell_ids, dtype=int)
        return cls(cell_ids=ids, slope=np.full(ids.size, slope), model_tag=model_tag)


def load_pattern(path) -> PatternField:
    """Read a `cell_id,slope` CSV; temperature slopes only."""
    df = pd.read_csv(path)
    expected = {"cell_id", "slope"}
    if set(df.columns) != expected:
        raise DataError(
            f"pattern file {path} must have exactly columns cell_id,slope "
            f"(got {list(df.columns)})"
        )
    return PatternField(
        cell_ids=df["cell_id"].to_numpy(dtype=int),
        slope=df["slope"].to_numpy(dtype=float),
        model_tag=Path(path).stem,
    )


def local_temperature(trajectory: GlobalTrajectory, pattern: PatternField,
                      cell_id: int, year: int) -> float:
    """Greenhouse warming for one cell-year: slope(cell) * anomaly(year)."""
    return pattern.slope_for(cell_id) * trajectory.value(year)


@dataclass(frozen=True)
class UhiParams:
    """Heat-island intensity a * P**b.

    The default amplitude is a placeholder calibrated so a 10-million-person
    cell sits near 2.6 degC; treat it as a configuration input, not a measured
    constant. With `ratchet` set, intensity follows the running maximum of
    population instead of tracking declines.
    """

    a: float = 1.85e-3
    b: float = 0.45
    ratchet: bool = False

    def __post_init__(self):
        if self.a < 0.0:
            raise ValueError("uhi amplitude must be non-negative")
        if not 0.0 < self.b < 1.0:
            raise ValueError("uhi exponent must lie in (0, 1)")


def uhi_intensity(params: UhiParams, population):
    """Heat-island warming in degC; zero at zero population."""
    pop = np.asarray(population, dtype=float)
    out = params.a * pop ** params.b
    if np.ndim(population) == 0:
        return float(out)
    return out


@dataclass
class ClimateField:
    """Cell-by-year warming split into greenhouse and heat-island parts."""

    years: np.ndarray   # (T,)
    t_ghg: np.ndarray   # (N, T) degC
    t_uhi: np.ndarray   # (N, T) degC, exactly zero off the urban mask


def effective_population(scenario: Scenario, params: UhiParams) -> np.ndarray:
    if params.ratchet:
        return np.maximum.accumulate(scenario.population, axis=1)
    return scenario.population


def uhi_field(scenario: Scenario, mask: UrbanMask, params: UhiParams) -> np.ndarray:
    """(N, T) heat-island warming, exactly zero off the urban mask.

    The power law is only evaluated on rows that are urban at some point;
    population does not depend on the trajectory, so one field can be shared
    across baseline and pulsed runs.
    """
    population = effective_population(scenario, params)
    ever_urban = mask.flags.any(axis=1)
    intensity = np.zeros_like(population)
    intensity[ever_urban] = uhi_intensity(params, population[ever_urban])
    return np.where(mask.flags, intensity, 0.0)


def build_climate_field(scenario: Scenario, mask: UrbanMask,
                        trajectory: GlobalTrajectory, pattern: PatternField,
                        params: UhiParams,
                        t_uhi: np.ndarray | None = None) -> ClimateField:
    """Assemble the warming field for every cell-year of the scenario.

    Pass a precomputed `t_uhi` (from uhi_field) to share the heat-island
    term between runs that differ only in the global trajectory.
    """
    slope = pattern.aligned(scenario.cell_ids)
    anomaly = trajectory.aligned(scenario.years)
    t_ghg = slope[:, None] * anomaly[None, :]
    if t_uhi is None:
        t_uhi = uhi_field(scenario, mask, params)
    return ClimateField(years=scenario.years, t_ghg=t_ghg, t_uhi=t_uhi)
