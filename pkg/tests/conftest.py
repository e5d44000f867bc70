"""Shared fixtures: a small two-region grid in both oracle and engine form."""

import numpy as np
import pytest

from gridscc.climate import GlobalTrajectory, PatternField, UhiParams
from gridscc.damages import GlobalDf, PersistenceParams, RegionalDamageParams
from gridscc.scenario import REGION_INDEX, REGIONS, Scenario

from oracle import REGIONS as ORACLE_REGIONS

assert tuple(ORACLE_REGIONS) == tuple(REGIONS)


def make_four_cell_fixture(df=("quadratic", 0.00236), years=(2010, 2011, 2012)):
    """Two US cells and two CHINA cells, one urban and one rural apiece."""
    years = list(years)
    anomaly = {y: 1.0 + 0.1 * (y - years[0]) for y in years}

    def series(start, step):
        return {y: start + step * (y - years[0]) for y in years}

    cells = [
        {"id": 0, "region": "US", "slope": 1.1,
         "pop": series(2.0e6, 5.0e4), "gdp": series(5.0e10, 1.0e9)},
        {"id": 1, "region": "US", "slope": 0.9,
         "pop": series(1.0e5, 1.0e3), "gdp": series(8.0e9, 2.0e8)},
        {"id": 2, "region": "CHINA", "slope": 1.3,
         "pop": series(8.0e6, 2.0e5), "gdp": series(3.0e10, 2.0e9)},
        {"id": 3, "region": "CHINA", "slope": 1.0,
         "pop": series(2.0e5, 4.0e3), "gdp": series(4.0e9, 1.0e8)},
    ]
    alpha_r = {r: 0.0 for r in REGIONS}
    alpha_u = {r: 0.0 for r in REGIONS}
    phi = {r: 0.0 for r in REGIONS}
    alpha_r.update({"US": 0.008, "CHINA": 0.012})
    alpha_u.update({"US": 0.010, "CHINA": 0.015})
    phi.update({"US": 0.4, "CHINA": 0.6})
    return {
        "years": years,
        "cells": cells,
        "anomaly": anomaly,
        "threshold": 250_000.0,
        "uhi_a": 2.0e-3,
        "uhi_b": 0.45,
        "alpha_r": alpha_r,
        "alpha_u": alpha_u,
        "phi": phi,
        "df": df,
    }


def fixture_to_engine(fix):
    """Convert the plain-dict fixture into engine-side objects."""
    years = np.array(fix["years"], dtype=int)
    cells = fix["cells"]
    scenario = Scenario(
        label="fixture",
        years=years,
        cell_ids=np.array([c["id"] for c in cells], dtype=int),
        lat=np.zeros(len(cells)),
        lon=np.zeros(len(cells)),
        region_index=np.array([REGION_INDEX[c["region"]] for c in cells], dtype=int),
        population=np.array([[c["pop"][y] for y in fix["years"]] for c in cells]),
        gdp=np.array([[c["gdp"][y] for y in fix["years"]] for c in cells]),
    )
    trajectory = GlobalTrajectory(
        years=years,
        anomaly=np.array([fix["anomaly"][y] for y in fix["years"]]),
        label="fixture",
    )
    pattern = PatternField(
        cell_ids=scenario.cell_ids,
        slope=np.array([c["slope"] for c in cells]),
        model_tag="fixture",
    )
    uhi = UhiParams(a=fix["uhi_a"], b=fix["uhi_b"])
    params = RegionalDamageParams(
        alpha_r=np.array([fix["alpha_r"][r] for r in REGIONS]),
        alpha_u=np.array([fix["alpha_u"][r] for r in REGIONS]),
    )
    phi = PersistenceParams(phi=np.array([fix["phi"][r] for r in REGIONS]))
    kind, p = fix["df"]
    if kind == "quadratic":
        df = GlobalDf.quadratic(p)
    else:
        df = GlobalDf.weitzman(*p)
    return scenario, trajectory, pattern, uhi, params, phi, df


@pytest.fixture
def four_cell():
    return make_four_cell_fixture()


@pytest.fixture
def four_cell_engine(four_cell):
    return fixture_to_engine(four_cell)
