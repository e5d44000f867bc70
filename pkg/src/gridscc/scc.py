"""Discounted marginal-damage accounting.

The social cost of carbon is the discounted difference between pulsed and
baseline losses, per tonne of CO2, summed region by region with no equity
weighting (the world value is the plain sum of regional values). The urban
decomposition splits the total into a non-urban part, an exposure part (what
urban cells would lose under the plain damage function), and the heat-island
plus interaction remainder.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .climate import ClimateField, UhiParams, effective_population
from .damages import (
    DamageLedger,
    ScalingSeries,
    has_persistence,
    has_uhi,
    ledger_subset_series,
)
from .errors import (
    EmptyEnsemble,
    VariantMismatch,
    YearOutOfRange,
    ZeroPopulation,
)
from .pulse import PulseParams
from .scenario import N_REGIONS, Scenario, UrbanMask


@dataclass(frozen=True)
class DiscountSpec:
    """Constant consumption discounting between a base year and a horizon."""

    rate: float = 0.015
    base_year: int = 2010
    horizon: int = 2100

    def __post_init__(self):
        if self.rate <= -1.0:
            raise ValueError("discount rate must exceed -1")
        if self.horizon < self.base_year:
            raise ValueError("horizon must not precede the base year")


def discount_factor(spec: DiscountSpec, year: int) -> float:
    """(1 + rate) ** -(year - base_year) within the report window."""
    if year < spec.base_year or year > spec.horizon:
        raise YearOutOfRange(
            f"year {year} outside [{spec.base_year}, {spec.horizon}]"
        )
    return (1.0 + spec.rate) ** (-(year - spec.base_year))


def discount_weights(spec: DiscountSpec, years) -> np.ndarray:
    """Vector of discount factors, zero outside the report window."""
    arr = np.asarray(years, dtype=int)
    inside = (arr >= spec.base_year) & (arr <= spec.horizon)
    weights = (1.0 + spec.rate) ** (-(arr - spec.base_year).astype(float))
    return np.where(inside, weights, 0.0)


@dataclass
class SccReport:
    """Regional and world SCC for one variant at one discount rate."""

    variant: str
    rate: float
    per_region: np.ndarray  # (13,) USD-2005 per tCO2
    world: float
    fractions: np.ndarray   # (13,) share of the world value

    @classmethod
    def from_regions(cls, variant: str, rate: float, per_region: np.ndarray):
        world = float(per_region.sum())
        fractions = per_region / world if world != 0.0 else np.zeros(N_REGIONS)
        return cls(variant=variant, rate=rate, per_region=per_region,
                   world=world, fractions=fractions)


def _scc_from_series(base: np.ndarray, pulsed: np.ndarray, years,
                     spec: DiscountSpec, pulse: PulseParams) -> np.ndarray:
    weights = discount_weights(spec, years)
    return (pulsed - base) @ weights / pulse.tonnes_co2


def scc(base_ledger: DamageLedger, pulsed_ledger: DamageLedger,
        spec: DiscountSpec, pulse: PulseParams) -> SccReport:
    """Discounted pulsed-minus-baseline losses per tonne of CO2."""
    if base_ledger.variant != pulsed_ledger.variant:
        raise VariantMismatch(
            f"cannot difference {pulsed_ledger.variant} against {base_ledger.variant}"
        )
    if not np.array_equal(base_ledger.years, pulsed_ledger.years):
        raise VariantMismatch("ledgers do not share a year axis")
    per_region = _scc_from_series(
        base_ledger.region_losses, pulsed_ledger.region_losses,
        base_ledger.years, spec, pulse,
    )
    return SccReport.from_regions(base_ledger.variant, spec.rate, per_region)


@dataclass
class Decomposition:
    """Urban/non-urban split of the SCC for one plain/urban variant pair.

    Invariants by construction: nu + u == total, exposure == u_nouhi - nu,
    uhi_int == u - u_nouhi.
    """

    pair: str   # "RU" or "RPU"
    rate: float
    nu: np.ndarray        # (13,) non-urban cells, plain variant
    u: np.ndarray         # (13,) urban cells, urban variant
    u_nouhi: np.ndarray   # (13,) urban cells, plain variant
    exposure: np.ndarray = field(init=False)
    uhi_int: np.ndarray = field(init=False)

    def __post_init__(self):
        self.exposure = self.u_nouhi - self.nu
        self.uhi_int = self.u - self.u_nouhi
        # A region with no urban activity at all has no urban/non-urban
        # exposure differential to report.
        vacuous = (self.u == 0.0) & (self.u_nouhi == 0.0)
        self.exposure = np.where(vacuous, 0.0, self.exposure)

    @property
    def total(self) -> np.ndarray:
        return self.nu + self.u

    def world(self, component: str) -> float:
        return float(getattr(self, component).sum())


_PAIRS = {"R": "RU", "RP": "RPU"}


def decompose(scenario: Scenario, mask: UrbanMask,
              base_plain: DamageLedger, pulsed_plain: DamageLedger,
              base_urban: DamageLedger, pulsed_urban: DamageLedger,
              spec: DiscountSpec, pulse: PulseParams) -> Decomposition:
    """Split the SCC of the urban variant into its urban and non-urban parts.

    The plain pair supplies the non-urban term and the exposure-only urban
    term; the urban pair supplies the full urban term. Ledger subsets under
    persistent variants rerun the recursion on the subset aggregates.
    """
    plain = base_plain.variant
    if _PAIRS.get(plain) != base_urban.variant:
        raise VariantMismatch(
            f"decomposition needs (R, RU) or (RP, RPU); got "
            f"({base_plain.variant}, {base_urban.variant})"
        )
    for a, b in ((base_plain, pulsed_plain), (base_urban, pulsed_urban)):
        if a.variant != b.variant:
            raise VariantMismatch("baseline and pulsed ledgers disagree on variant")

    years = base_plain.years

    def subset_scc(base_ledger, pulsed_ledger, subset):
        base_series = ledger_subset_series(base_ledger, scenario, mask, subset)
        pulsed_series = ledger_subset_series(pulsed_ledger, scenario, mask, subset)
        return _scc_from_series(base_series, pulsed_series, years, spec, pulse)

    return Decomposition(
        pair=base_urban.variant,
        rate=spec.rate,
        nu=subset_scc(base_plain, pulsed_plain, "nonurban"),
        u=subset_scc(base_urban, pulsed_urban, "urban"),
        u_nouhi=subset_scc(base_plain, pulsed_plain, "urban"),
    )


def scuhi_marginal_a(scenario: Scenario, mask: UrbanMask, field: ClimateField,
                     uhi: UhiParams, alpha_u: np.ndarray, spec: DiscountSpec,
                     scaling: ScalingSeries | None = None) -> float:
    """Discounted derivative of urban damages in the heat-island amplitude.

    Per urban cell-year the integrand is 2*alpha_u*(T_ghg + T_uhi)*P**b,
    GDP-weighted; USD per unit of the amplitude a.
    """
    au = np.asarray(alpha_u, dtype=float)[scenario.region_index][:, None]
    pop_pow = effective_population(scenario, uhi) ** uhi.b
    integrand = 2.0 * au * (field.t_ghg + field.t_uhi) * pop_pow * scenario.gdp
    integrand = np.where(mask.flags, integrand, 0.0)
    weights = discount_weights(spec, scenario.years)
    if scaling is not None:
        weights = weights * scaling.s
    return float(integrand.sum(axis=0) @ weights)


def scuhi_marginal_p(scenario: Scenario, mask: UrbanMask, field: ClimateField,
                     uhi: UhiParams, alpha_u: np.ndarray, spec: DiscountSpec,
                     scaling: ScalingSeries | None = None) -> np.ndarray:
    """Per-cell discounted derivative of damages in the cell's population.

    The derivative is 2*alpha_u*a*b*(T_ghg + T_uhi)*P**(b-1), GDP-weighted;
    the result is one USD-per-person value per cell (zero for never-urban
    cells). Raises ZeroPopulation if an urban cell-year has no inhabitants.
    """
    pop = effective_population(scenario, uhi)
    if np.any((pop <= 0.0) & mask.flags):
        raise ZeroPopulation("urban cell-year with zero population")
    au = np.asarray(alpha_u, dtype=float)[scenario.region_index][:, None]
    pop_pow = np.where(mask.flags, pop, 1.0) ** (uhi.b - 1.0)
    integrand = (
        2.0 * au * uhi.a * uhi.b * (field.t_ghg + field.t_uhi) * pop_pow * scenario.gdp
    )
    integrand = np.where(mask.flags, integrand, 0.0)
    weights = discount_weights(spec, scenario.years)
    if scaling is not None:
        weights = weights * scaling.s
    return integrand @ weights


@dataclass
class ScuhiReport:
    """Present-value benefit of a fractional heat-island reduction."""

    variant: str
    rate: float
    reduction: float
    per_region: np.ndarray            # (13,) USD-2005
    world: float
    per_dweller_region: np.ndarray    # (13,) USD-2005 per urban inhabitant
    per_dweller_world: float
    reference_population: np.ndarray  # (13,) urban dwellers at the reference year


def reference_urban_population(scenario: Scenario, mask: UrbanMask,
                               year: int) -> np.ndarray:
    """(13,) urban population by region in the reference year."""
    j = scenario.year_pos(year)
    urban_pop = np.where(mask.flags[:, j], scenario.population[:, j], 0.0)
    return scenario.region_onehot @ urban_pop


def scuhi_one_percent(years, full_series: np.ndarray, reduced_series: np.ndarray,
                      spec: DiscountSpec, reference_population: np.ndarray,
                      variant: str, reduction: float = 0.01) -> ScuhiReport:
    """NPV of urban losses avoided by scaling the heat-island amplitude down.

    `full_series` and `reduced_series` are (13, T) urban-cell region losses
    from two otherwise identical runs.
    """
    if not has_uhi(variant):
        raise VariantMismatch(f"variant {variant} carries no heat island to reduce")
    weights = discount_weights(spec, years)
    per_region = (full_series - reduced_series) @ weights
    world = float(per_region.sum())
    ref = np.asarray(reference_population, dtype=float)
    per_dweller = np.divide(per_region, ref, out=np.zeros(N_REGIONS), where=ref > 0)
    world_pop = float(ref.sum())
    return ScuhiReport(
        variant=variant,
        rate=spec.rate,
        reduction=reduction,
        per_region=per_region,
        world=world,
        per_dweller_region=per_dweller,
        per_dweller_world=world / world_pop if world_pop > 0 else 0.0,
        reference_population=ref,
    )


@dataclass
class PercentileSummary:
    """Univariate quantiles of the SCC across ensemble members."""

    variant: str
    rate: float
    quantiles: tuple
    per_region: np.ndarray  # (Q, 13)
    world: np.ndarray       # (Q,)


def ensemble_percentiles(reports: list[SccReport],
                         quantiles=(0.05, 0.5, 0.95)) -> PercentileSummary:
    """Linear-interpolation quantiles over an ensemble of reports."""
    if not reports:
        raise EmptyEnsemble("no ensemble members to summarize")
    variant = reports[0].variant
    rate = reports[0].rate
    if any(r.variant != variant or r.rate != rate for r in reports):
        raise VariantMismatch("ensemble mixes variants or discount rates")
    regions = np.stack([r.per_region for r in reports])  # (M, 13)
    worlds = np.array([r.world for r in reports])
    qs = np.asarray(quantiles, dtype=float)
    return PercentileSummary(
        variant=variant,
        rate=rate,
        quantiles=tuple(float(q) for q in qs),
        per_region=np.quantile(regions, qs, axis=0),
        world=np.quantile(worlds, qs),
    )
