"""Gridded socioeconomic scenario: exposure layer plus region bookkeeping.

A scenario is a rectangular panel of cells by years carrying population and
GDP, with each cell assigned to one of thirteen world regions. Cells whose
population clears a threshold count as urban; the flag is re-evaluated every
year, so cells can urbanize (or de-urbanize) mid-century.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import (
    DataError,
    DuplicateRow,
    MissingColumn,
    NegativeExposure,
    OutOfRange,
    UnknownRegion,
)

log = logging.getLogger(__name__)

REGIONS = (
    "US", "EU", "JAPAN", "RUSSIA", "EURASIA", "CHINA", "INDIA",
    "MEAST", "AFRICA", "LAM", "OHI", "OASIA", "MX",
)
REGION_INDEX = {code: i for i, code in enumerate(REGIONS)}
N_REGIONS = len(REGIONS)

DEFAULT_URBAN_THRESHOLD = 250_000.0  # persons per cell

SCENARIO_COLUMNS = ("cell_id", "lat", "lon", "region", "year", "population", "gdp")


@dataclass
class Scenario:
    """Columnar panel of cells (rows) by years (columns)."""

    label: str
    years: np.ndarray          # (T,) ascending integers
    cell_ids: np.ndarray       # (N,) unique integers, ascending
    lat: np.ndarray            # (N,) degrees
    lon: np.ndarray            # (N,) degrees
    region_index: np.ndarray   # (N,) index into REGIONS
    population: np.ndarray     # (N, T) persons
    gdp: np.ndarray            # (N, T) USD-2005
    meta: dict = field(default_factory=dict)

    @property
    def n_cells(self) -> int:
        return self.cell_ids.size

    @property
    def n_years(self) -> int:
        return self.years.size

    def year_pos(self, year: int) -> int:
        pos = int(np.searchsorted(self.years, year))
        if pos >= self.years.size or self.years[pos] != year:
            raise OutOfRange(f"year {year} not on the scenario axis")
        return pos

    def region_codes(self) -> np.ndarray:
        return np.asarray(REGIONS, dtype=object)[self.region_index]

    @cached_property
    def region_onehot(self) -> np.ndarray:
        """(13, N) indicator matrix; region sums become one matmul."""
        out = np.zeros((N_REGIONS, self.n_cells))
        out[self.region_index, np.arange(self.n_cells)] = 1.0
        return out

    def missing_regions(self) -> list[str]:
        present = set(np.unique(self.region_index).tolist())
        return [code for i, code in enumerate(REGIONS) if i not in present]

    def world_gdp(self) -> np.ndarray:
        return self.gdp.sum(axis=0)


@dataclass
class UrbanMask:
    """Per cell-year urban flag at a fixed population threshold."""

    threshold: float
    flags: np.ndarray  # (N, T) bool


def _meta_sidecar(path: Path) -> dict:
    sidecar = path.with_suffix(".meta.json")
    if not sidecar.exists():
        return {}
    try:
        return json.loads(sidecar.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed scenario sidecar {sidecar}: {exc}") from exc


def load_scenario(path) -> Scenario:
    """Load and validate a scenario CSV.

    Expected header: cell_id,lat,lon,region,year,population,gdp with
    population in persons and GDP in USD-2005. A `<name>.meta.json` sidecar
    may carry label, base_year, horizon and an urban-threshold override.

    Raises MissingColumn, NegativeExposure, DuplicateRow or UnknownRegion on
    the corresponding defects.
    """
    path = Path(path)
    df = pd.read_csv(path)
    missing = [c for c in SCENARIO_COLUMNS if c not in df.columns]
    if missing:
        raise MissingColumn(f"scenario file {path} lacks columns {missing}")

    dup = df.duplicated(subset=["cell_id", "year"])
    if dup.any():
        first = df.loc[dup, ["cell_id", "year"]].iloc[0]
        raise DuplicateRow(
            f"duplicate (cell_id, year) rows, first at cell "
            f"{int(first['cell_id'])}, year {int(first['year'])}"
        )

    bad_regions = sorted(set(df["region"].astype(str)) - set(REGIONS))
    if bad_regions:
        raise UnknownRegion(f"unknown region codes {bad_regions}; expected one of {REGIONS}")

    for col in ("population", "gdp"):
        values = pd.to_numeric(df[col], errors="coerce")
        bad = values.isna() | (values < 0)
        if bad.any():
            row = df.loc[bad].iloc[0]
            raise NegativeExposure(
                f"{col} is negative or not a number at cell "
                f"{int(row['cell_id'])}, year {int(row['year'])}"
            )

    years = np.sort(df["year"].unique()).astype(int)
    cell_ids = np.sort(df["cell_id"].unique()).astype(int)

    pop = df.pivot(index="cell_id", columns="year", values="population")
    gdp = df.pivot(index="cell_id", columns="year", values="gdp")
    if pop.isna().any().any() or gdp.isna().any().any():
        raise DataError(f"scenario {path} is ragged: every cell needs every year")
    pop = pop.loc[cell_ids, years]
    gdp = gdp.loc[cell_ids, years]

    per_cell = df.drop_duplicates("cell_id").set_index("cell_id").loc[cell_ids]
    consistency = df.groupby("cell_id")[["lat", "lon", "region"]].nunique()
    if (consistency > 1).any().any():
        raise DataError(f"scenario {path}: lat/lon/region vary within a cell_id")

    meta = _meta_sidecar(path)
    scenario = Scenario(
        label=str(meta.get("label", path.stem)),
        years=years,
        cell_ids=cell_ids,
        lat=per_cell["lat"].to_numpy(dtype=float),
        lon=per_cell["lon"].to_numpy(dtype=float),
        region_index=np.array([REGION_INDEX[r] for r in per_cell["region"]], dtype=int),
        population=pop.to_numpy(dtype=float),
        gdp=gdp.to_numpy(dtype=float),
        meta=meta,
    )
    absent = scenario.missing_regions()
    if absent:
        log.warning(
            "scenario %s has no cells in regions %s; their SCC will be reported as 0",
            scenario.label, absent,
        )
    return scenario


def interpolate_annual(support_years, values, target_years) -> np.ndarray:
    """Piecewise-linear interpolation along the last axis, no extrapolation.

    Support years must be strictly increasing with at least two entries;
    support points are reproduced bit-exactly. Raises OutOfRange when a
    target falls outside the support span.
    """
    support = np.asarray(support_years, dtype=float)
    targets = np.asarray(target_years, dtype=float)
    data = np.asarray(values, dtype=float)
    if support.size < 2:
        raise DataError("interpolation needs at least two support years")
    if np.any(np.diff(support) <= 0):
        raise DataError("support years must be strictly increasing")
    if data.shape[-1] != support.size:
        raise DataError("values and support years must align on the last axis")
    if np.any(targets < support[0]) or np.any(targets > support[-1]):
        raise OutOfRange(
            f"target years outside support [{support[0]:.0f}, {support[-1]:.0f}]"
        )

    idx = np.searchsorted(support, targets, side="right") - 1
    idx = np.clip(idx, 0, support.size - 2)
    y0 = support[idx]
    y1 = support[idx + 1]
    w = (targets - y0) / (y1 - y0)
    lower = data[..., idx]
    upper = data[..., idx + 1]
    return lower * (1.0 - w) + upper * w


def annualize(scenario: Scenario, target_years) -> Scenario:
    """Resample population and GDP onto a (typically annual) year axis."""
    targets = np.asarray(target_years, dtype=int)
    return Scenario(
        label=scenario.label,
        years=targets,
        cell_ids=scenario.cell_ids,
        lat=scenario.lat,
        lon=scenario.lon,
        region_index=scenario.region_index,
        population=interpolate_annual(scenario.years, scenario.population, targets),
        gdp=interpolate_annual(scenario.years, scenario.gdp, targets),
        meta=scenario.meta,
    )


def classify_urban(scenario: Scenario,
                   threshold: float = DEFAULT_URBAN_THRESHOLD) -> UrbanMask:
    """Flag cell-years whose population reaches the threshold (inclusive)."""
    if threshold <= 0.0:
        raise DataError("urban threshold must be positive")
    return UrbanMask(threshold=threshold, flags=scenario.population >= threshold)


def urban_shares(scenario: Scenario, mask: UrbanMask, year: int) -> tuple[float, float]:
    """Urban share of population and GDP in one year, each in [0, 1]."""
    j = scenario.year_pos(year)
    flags = mask.flags[:, j]
    pop = scenario.population[:, j]
    gdp = scenario.gdp[:, j]
    pop_total = pop.sum()
    gdp_total = gdp.sum()
    pop_share = float(pop[flags].sum() / pop_total) if pop_total > 0 else 0.0
    gdp_share = float(gdp[flags].sum() / gdp_total) if gdp_total > 0 else 0.0
    return pop_share, gdp_share
