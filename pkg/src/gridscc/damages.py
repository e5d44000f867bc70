"""Temperature-to-loss mapping, calibration to a global damage function,
and persistence of shocks.

Four variants share one quadratic core. "R" maps greenhouse warming alone
through a regional quadratic. "RU" adds the heat-island expansion on urban
cells: the loss fraction gains 2*alpha_u*T_ghg*T_uhi + alpha_u*T_uhi**2.
"RP" and "RPU" additionally carry a fraction phi of last period's losses
forward through a first-order recursion applied at the region level.

Grid losses are calibrated so the world aggregate of the plain variant
reproduces a chosen global damage function exactly, via a per-year scaling
factor (global damages divided by the plain-variant world aggregate). The
factor is always derived from the plain variant and reused for the richer
ones; it multiplies per-period losses before any persistence is applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .climate import ClimateField, GlobalTrajectory
from .errors import (
    DataError,
    NonMonotoneTable,
    PhiOutOfRange,
    ZeroDenominator,
)
from .scenario import N_REGIONS, REGION_INDEX, REGIONS, Scenario, UrbanMask

VARIANTS = ("R", "RP", "RU", "RPU")

# Default quadratic coefficient (fraction of GDP per degC^2); standard
# conservative calibration. Regional coefficients are configuration inputs,
# immaterial to world totals once the scaling factor is applied.
DEFAULT_QUADRATIC_COEFF = 0.00236

# Catastrophe-oriented calibration for the rational damage form
# d/(1+d), d = (T/s1)^2 + (T/s2)^p; externally sourced defaults.
WEITZMAN_S1 = 20.46
WEITZMAN_S2 = 6.081
WEITZMAN_POWER = 6.754


def has_uhi(variant: str) -> bool:
    return variant in ("RU", "RPU")


def has_persistence(variant: str) -> bool:
    return variant in ("RP", "RPU")


@dataclass
class RegionalDamageParams:
    """Quadratic loss coefficients per region, rural and urban."""

    alpha_r: np.ndarray  # (13,) fraction of GDP per degC^2
    alpha_u: np.ndarray  # (13,)

    def __post_init__(self):
        self.alpha_r = np.asarray(self.alpha_r, dtype=float)
        self.alpha_u = np.asarray(self.alpha_u, dtype=float)
        if self.alpha_r.shape != (N_REGIONS,) or self.alpha_u.shape != (N_REGIONS,):
            raise DataError("damage coefficients must cover all 13 regions")
        if np.any(self.alpha_r < 0) or np.any(self.alpha_u < 0):
            raise DataError("damage coefficients must be non-negative")

    @classmethod
    def uniform(cls, alpha: float = DEFAULT_QUADRATIC_COEFF,
                alpha_urban: float | None = None):
        base = np.full(N_REGIONS, alpha)
        urban = np.full(N_REGIONS, alpha if alpha_urban is None else alpha_urban)
        return cls(alpha_r=base, alpha_u=urban)


@dataclass
class PersistenceParams:
    """Per-region carry-over of losses, each in [0, 1]."""

    phi: np.ndarray  # (13,)

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        if self.phi.shape != (N_REGIONS,):
            raise DataError("persistence parameters must cover all 13 regions")
        if np.any(self.phi < 0.0) or np.any(self.phi > 1.0):
            raise PhiOutOfRange("persistence must lie in [0, 1]")

    @classmethod
    def uniform(cls, phi: float = 0.5):
        return cls(phi=np.full(N_REGIONS, phi))


def load_damage_params(path) -> tuple[RegionalDamageParams, PersistenceParams]:
    """Read a `region,alpha_r,alpha_u,phi` CSV covering all 13 regions."""
    df = pd.read_csv(path)
    needed = ["region", "alpha_r", "alpha_u", "phi"]
    missing = [c for c in needed if c not in df.columns]
    if missing:
        raise DataError(f"damage parameter file {path} lacks columns {missing}")
    listed = set(df["region"].astype(str))
    if listed != set(REGIONS) or len(df) != N_REGIONS:
        raise DataError(
            f"damage parameter file {path} must list each of the 13 regions exactly once"
        )
    alpha_r = np.empty(N_REGIONS)
    alpha_u = np.empty(N_REGIONS)
    phi = np.empty(N_REGIONS)
    for _, row in df.iterrows():
        i = REGION_INDEX[str(row["region"])]
        alpha_r[i] = row["alpha_r"]
        alpha_u[i] = row["alpha_u"]
        phi[i] = row["phi"]
    return RegionalDamageParams(alpha_r, alpha_u), PersistenceParams(phi)


@dataclass
class GlobalDf:
    """Global damage function: GDP loss fraction as a function of warming."""

    kind: str  # "quadratic" | "weitzman" | "external-table"
    coefficient: float = DEFAULT_QUADRATIC_COEFF
    s1: float = WEITZMAN_S1
    s2: float = WEITZMAN_S2
    power: float = WEITZMAN_POWER
    table_t: np.ndarray | None = None
    table_d: np.ndarray | None = None

    @classmethod
    def quadratic(cls, coefficient: float = DEFAULT_QUADRATIC_COEFF):
        return cls(kind="quadratic", coefficient=coefficient)

    @classmethod
    def weitzman(cls, s1: float = WEITZMAN_S1, s2: float = WEITZMAN_S2,
                 power: float = WEITZMAN_POWER):
        return cls(kind="weitzman", s1=s1, s2=s2, power=power)

    @classmethod
    def from_table(cls, temperatures, losses):
        t = np.asarray(temperatures, dtype=float)
        d = np.asarray(losses, dtype=float)
        if t.size < 2 or t[0] != 0.0 or d[0] != 0.0:
            raise NonMonotoneTable("damage table must start at (0, 0)")
        if np.any(np.diff(t) <= 0):
            raise NonMonotoneTable("damage table temperatures must be strictly increasing")
        if np.any(np.diff(d) < 0):
            raise NonMonotoneTable("damage table losses must be non-decreasing")
        return cls(kind="external-table", table_t=t, table_d=d)

    @classmethod
    def from_config(cls, spec: dict):
        kind = spec.get("kind", "quadratic")
        if kind == "quadratic":
            return cls.quadratic(float(spec.get("coefficient", DEFAULT_QUADRATIC_COEFF)))
        if kind == "weitzman":
            return cls.weitzman(
                float(spec.get("s1", WEITZMAN_S1)),
                float(spec.get("s2", WEITZMAN_S2)),
                float(spec.get("power", WEITZMAN_POWER)),
            )
        if kind == "external-table":
            return cls.from_table(spec["temperatures"], spec["losses"])
        raise DataError(f"unknown global damage function kind {kind!r}")


def global_df_eval(df: GlobalDf, t_global):
    """Loss fraction at a global warming level (scalar or array)."""
    t = np.asarray(t_global, dtype=float)
    if df.kind == "quadratic":
        out = df.coefficient * t * t
    elif df.kind == "weitzman":
        d = (t / df.s1) ** 2 + (t / df.s2) ** df.power
        out = d / (1.0 + d)
    elif df.kind == "external-table":
        out = np.interp(t, df.table_t, df.table_d)
    else:
        raise DataError(f"unknown global damage function kind {df.kind!r}")
    if np.ndim(t_global) == 0:
        return float(out)
    return out


def cell_damage_fraction_r(alpha_r, t_ghg):
    """Plain regional loss fraction alpha_r * T_ghg**2."""
    return alpha_r * t_ghg * t_ghg


def _uhi_expansion(alpha_u, t_ghg, t_uhi):
    # 2*alpha_u*T_ghg*T_uhi + alpha_u*T_uhi**2, factored
    return alpha_u * t_uhi * (2.0 * t_ghg + t_uhi)


def cell_damage_fraction_ru(alpha_r, alpha_u, t_ghg, t_uhi):
    """Urban loss fraction: the plain term plus the heat-island expansion.

    Equals the plain fraction whenever t_uhi is zero; with alpha_u == alpha_r
    it collapses to alpha * (T_ghg + T_uhi)**2.
    """
    return cell_damage_fraction_r(alpha_r, t_ghg) + _uhi_expansion(alpha_u, t_ghg, t_uhi)


@dataclass
class ScalingSeries:
    """Per-year calibration factor tying grid losses to the global function."""

    years: np.ndarray
    s: np.ndarray


def scaling_series(years, world_gdp, df: GlobalDf, t_global, r_aggregate) -> ScalingSeries:
    """s(t) = global damages / plain-variant world aggregate, 1 where both vanish."""
    years = np.asarray(years, dtype=int)
    world_gdp = np.asarray(world_gdp, dtype=float)
    t_global = np.asarray(t_global, dtype=float)
    agg = np.asarray(r_aggregate, dtype=float)
    if not (years.shape == world_gdp.shape == t_global.shape == agg.shape):
        raise DataError("scaling inputs must share one year axis")
    target = global_df_eval(df, t_global) * world_gdp
    bad = (agg == 0.0) & (target != 0.0)
    if np.any(bad):
        raise ZeroDenominator(
            f"plain-variant aggregate is zero in years {years[bad].tolist()} "
            "while the global damage function is not"
        )
    s = np.ones_like(agg)
    np.divide(target, agg, out=s, where=agg != 0.0)
    return ScalingSeries(years=years, s=s)


def apply_persistence(per_period, phi):
    """Carry losses forward: out[t] = loss[t] + phi * out[t-1], seeded at t=0.

    Accepts a (regions, years) matrix with per-region phi, or a single series
    with scalar phi. Raises PhiOutOfRange outside [0, 1].
    """
    data = np.asarray(per_period, dtype=float)
    phi_arr = np.asarray(phi, dtype=float)
    if np.any(phi_arr < 0.0) or np.any(phi_arr > 1.0):
        raise PhiOutOfRange("persistence must lie in [0, 1]")
    single = data.ndim == 1
    if single:
        data = data[None, :]
    out = np.empty_like(data)
    out[:, 0] = data[:, 0]
    for t in range(1, data.shape[1]):
        out[:, t] = data[:, t] + phi_arr * out[:, t - 1]
    return out[0] if single else out


@dataclass
class DamageLedger:
    """Per-cell, per-year losses under one variant, plus region aggregates.

    loss_fraction and loss_usd are per-period (already calibrated); the
    persistence recursion lives at the region level in persistence_state.
    """

    variant: str
    years: np.ndarray
    loss_fraction: np.ndarray         # (N, T)
    loss_usd: np.ndarray              # (N, T)
    region_period_losses: np.ndarray  # (13, T) per-period USD
    phi: np.ndarray | None = None     # (13,) for RP/RPU
    persistence_state: np.ndarray | None = None  # (13, T) recursion output
    scaling: ScalingSeries | None = None  # calibration actually applied

    @property
    def region_losses(self) -> np.ndarray:
        """Region-by-year losses as reported: persistent where applicable."""
        if self.persistence_state is not None:
            return self.persistence_state
        return self.region_period_losses


def apply_scaling(ledger: DamageLedger, scaling: ScalingSeries) -> DamageLedger:
    """Multiply per-period losses by s(t); re-runs persistence when present."""
    if not np.array_equal(ledger.years, scaling.years):
        raise DataError("scaling series does not match the ledger year axis")
    s = scaling.s[None, :]
    period = ledger.region_period_losses * scaling.s
    return DamageLedger(
        variant=ledger.variant,
        years=ledger.years,
        loss_fraction=ledger.loss_fraction * s,
        loss_usd=ledger.loss_usd * s,
        region_period_losses=period,
        phi=ledger.phi,
        persistence_state=(
            apply_persistence(period, ledger.phi) if ledger.phi is not None else None
        ),
        scaling=scaling,
    )


def aggregate_region_losses(scenario: Scenario, loss_usd: np.ndarray,
                            flags: np.ndarray | None = None,
                            invert: bool = False) -> np.ndarray:
    """(13, T) region sums of cell losses, optionally restricted by a mask."""
    if flags is None:
        masked = loss_usd
    elif invert:
        masked = np.where(flags, 0.0, loss_usd)
    else:
        masked = np.where(flags, loss_usd, 0.0)
    return scenario.region_onehot @ masked


def ledger_subset_series(ledger: DamageLedger, scenario: Scenario, mask: UrbanMask,
                         subset: str) -> np.ndarray:
    """Region-by-year losses over "all", "urban" or "nonurban" cells.

    For persistent variants the recursion runs on the subset aggregate; the
    recursion is linear, so urban plus non-urban reproduces the total.
    """
    if subset == "all":
        period = ledger.region_period_losses
    elif subset == "urban":
        period = aggregate_region_losses(scenario, ledger.loss_usd, mask.flags)
    elif subset == "nonurban":
        period = aggregate_region_losses(scenario, ledger.loss_usd, mask.flags, invert=True)
    else:
        raise ValueError(f"unknown subset {subset!r}")
    if ledger.phi is not None:
        return apply_persistence(period, ledger.phi)
    return period


def plain_fraction(scenario: Scenario, field: ClimateField,
                   params: RegionalDamageParams) -> np.ndarray:
    """(N, T) loss fraction of the plain variant; the shared building block."""
    alpha_r = params.alpha_r[scenario.region_index][:, None]
    return cell_damage_fraction_r(alpha_r, field.t_ghg)


def build_ledger(scenario: Scenario, mask: UrbanMask, field: ClimateField,
                 variant: str, params: RegionalDamageParams,
                 phi: PersistenceParams | None = None,
                 df: GlobalDf | None = None,
                 trajectory: GlobalTrajectory | None = None,
                 scaling: ScalingSeries | None = None,
                 plain: np.ndarray | None = None) -> DamageLedger:
    """Evaluate one variant over the whole grid.

    Calibration: pass a precomputed `scaling` series, or a global `df`
    together with the `trajectory` it should be evaluated on; with neither,
    losses are left uncalibrated. Persistence variants require `phi`.
    Callers that evaluate several variants on one field can precompute and
    share `plain` (see plain_fraction) without changing any result.
    """
    if variant not in VARIANTS:
        raise DataError(f"unknown damage variant {variant!r}")
    if has_persistence(variant) and phi is None:
        raise DataError(f"variant {variant} requires persistence parameters")

    if plain is None:
        plain = plain_fraction(scenario, field, params)
    if scaling is None and df is not None:
        if trajectory is None:
            raise DataError("calibration needs the global trajectory")
        r_aggregate = np.einsum("ct,ct->t", plain, scenario.gdp)
        scaling = scaling_series(
            scenario.years, scenario.world_gdp(), df,
            trajectory.aligned(scenario.years), r_aggregate,
        )
    if has_uhi(variant):
        alpha_u = params.alpha_u[scenario.region_index][:, None]
        frac = plain + _uhi_expansion(alpha_u, field.t_ghg, field.t_uhi)
    else:
        frac = plain

    usd = frac * scenario.gdp
    if scaling is not None:
        frac = frac * scaling.s
        usd = usd * scaling.s

    period = aggregate_region_losses(scenario, usd)
    phi_arr = phi.phi if (phi is not None and has_persistence(variant)) else None
    state = apply_persistence(period, phi_arr) if phi_arr is not None else None
    return DamageLedger(
        variant=variant,
        years=scenario.years,
        loss_fraction=frac,
        loss_usd=usd,
        region_period_losses=period,
        phi=phi_arr,
        persistence_state=state,
        scaling=scaling,
    )
