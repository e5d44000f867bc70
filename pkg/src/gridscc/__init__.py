"""Gridded climate-economy kernel: SCC, urban decomposition, SCUHI."""

__version__ = "0.1.0"

from .climate import (
    ClimateField,
    EcsDistribution,
    GlobalTrajectory,
    PatternField,
    UhiParams,
    build_climate_field,
    local_temperature,
    sample_ecs,
    scale_trajectory,
    uhi_intensity,
)
from .damages import (
    DamageLedger,
    GlobalDf,
    PersistenceParams,
    RegionalDamageParams,
    ScalingSeries,
    apply_persistence,
    apply_scaling,
    build_ledger,
    cell_damage_fraction_r,
    cell_damage_fraction_ru,
    global_df_eval,
    scaling_series,
)
from .pulse import TCO2_PER_GTC, PulseParams, perturbed_trajectory, pulse_delta_t
from .scc import (
    Decomposition,
    DiscountSpec,
    SccReport,
    ScuhiReport,
    decompose,
    discount_factor,
    ensemble_percentiles,
    scc,
    scuhi_marginal_a,
    scuhi_marginal_p,
    scuhi_one_percent,
)
from .scenario import (
    DEFAULT_URBAN_THRESHOLD,
    REGIONS,
    Scenario,
    UrbanMask,
    annualize,
    classify_urban,
    interpolate_annual,
    load_scenario,
    urban_shares,
)
from .runner import RunConfig, run, validate_config

__all__ = [
    "__version__",
    "ClimateField", "EcsDistribution", "GlobalTrajectory", "PatternField",
    "UhiParams", "build_climate_field", "local_temperature", "sample_ecs",
    "scale_trajectory", "uhi_intensity",
    "DamageLedger", "GlobalDf", "PersistenceParams", "RegionalDamageParams",
    "ScalingSeries", "apply_persistence", "apply_scaling", "build_ledger",
    "cell_damage_fraction_r", "cell_damage_fraction_ru", "global_df_eval",
    "scaling_series",
    "TCO2_PER_GTC", "PulseParams", "perturbed_trajectory", "pulse_delta_t",
    "Decomposition", "DiscountSpec", "SccReport", "ScuhiReport", "decompose",
    "discount_factor", "ensemble_percentiles", "scc", "scuhi_marginal_a",
    "scuhi_marginal_p", "scuhi_one_percent",
    "DEFAULT_URBAN_THRESHOLD", "REGIONS", "Scenario", "UrbanMask", "annualize",
    "classify_urban", "interpolate_annual", "load_scenario", "urban_shares",
    "RunConfig", "run", "validate_config",
]
