"""Batch orchestration: resolve a run configuration, execute the ensemble,
and emit the report files.

A run evaluates, for every ensemble member (one climate-sensitivity draw
paired with one warming pattern), a baseline and a pulsed trajectory, builds
damage ledgers for the requested variants, and reduces them to SCC tables,
the urban decomposition, and the heat-island reduction benefit. Members are
independent; reductions use fixed ordering so results do not depend on the
worker count.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .climate import (
    ClimateField,
    EcsDistribution,
    GlobalTrajectory,
    PatternField,
    UhiParams,
    build_climate_field,
    load_pattern,
    load_trajectory,
    sample_ecs,
    scale_trajectory,
)
from .damages import (
    VARIANTS,
    DEFAULT_QUADRATIC_COEFF,
    GlobalDf,
    PersistenceParams,
    RegionalDamageParams,
    build_ledger,
    cell_damage_fraction_r,
    has_uhi,
    ledger_subset_series,
    load_damage_params,
    scaling_series,
)
from .errors import (
    ConfigError,
    DataError,
    GridSccError,
    InvalidRange,
    IoFailure,
    MissingFile,
    ParseError,
)
from .pulse import PulseParams, perturbed_trajectory
from .scc import (
    Decomposition,
    DiscountSpec,
    PercentileSummary,
    SccReport,
    ScuhiReport,
    _scc_from_series,
    ensemble_percentiles,
    reference_urban_population,
    scuhi_one_percent,
)
from .scenario import (
    DEFAULT_URBAN_THRESHOLD,
    REGIONS,
    Scenario,
    UrbanMask,
    annualize,
    classify_urban,
    load_scenario,
)

log = logging.getLogger(__name__)

REPORT_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)
REPORT_FILES = ("table1.csv", "table2.csv", "scuhi.csv", "percentiles.csv")

_KNOWN_KEYS = {
    "scenario", "patterns", "trajectory", "variants", "global_df",
    "discount_rate", "discount_rates", "ecs", "pulse", "uhi",
    "urban_threshold", "damage_params", "default_alpha", "default_phi",
    "scuhi", "horizon", "output_dir",
}

_SCUHI_REFERENCES = ("pulse_year", "horizon_year", "mean")


@dataclass
class RunConfig:
    """Fully resolved run configuration with defaults applied."""

    scenario_path: Path
    trajectory_path: Path
    pattern_paths: tuple[Path, ...]
    damage_params_path: Path | None
    variants: tuple[str, ...]
    global_df: dict
    discount_rates: tuple[float, ...]
    ecs_mode: str
    ecs_value: float
    ecs_draws: int
    seed: int
    pulse_year: int
    pulse_size_gtc: float
    uhi_a: float
    uhi_b: float
    uhi_ratchet: bool
    urban_threshold: float
    default_alpha: float
    default_phi: float
    scuhi_reduction: float
    scuhi_start_year: int | None
    scuhi_reference: str
    horizon: int
    output_dir: Path

    def echo(self) -> dict:
        data = asdict(self)
        for key, value in data.items():
            if isinstance(value, Path):
                data[key] = str(value)
        data["pattern_paths"] = [str(p) for p in self.pattern_paths]
        data["damage_params_path"] = (
            str(self.damage_params_path) if self.damage_params_path else None
        )
        data["variants"] = list(self.variants)
        data["discount_rates"] = list(self.discount_rates)
        return data


def _resolve_file(base_dir: Path, value, key: str) -> Path:
    path = Path(value)
    if not path.is_absolute():
        path = base_dir / path
    if not path.exists():
        raise MissingFile(f"{key}: file not found: {path}")
    return path


def validate_config(raw, base_dir=".") -> RunConfig:
    """Parse, default and range-check a run configuration.

    `raw` is JSON text or an already-decoded mapping; relative paths resolve
    against `base_dir`. Raises ParseError, MissingFile or InvalidRange.
    """
    base_dir = Path(base_dir)
    if isinstance(raw, (str, bytes)):
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"config is not valid JSON: {exc}") from exc
    elif isinstance(raw, dict):
        data = dict(raw)
    else:
        raise ParseError(f"config must be JSON text or a mapping, got {type(raw)!r}")
    if not isinstance(data, dict):
        raise ParseError("config root must be an object")

    unknown = sorted(set(data) - _KNOWN_KEYS)
    if unknown:
        raise ParseError(f"unknown config keys {unknown}")

    for key in ("scenario", "trajectory"):
        if key not in data:
            raise ParseError(f"config lacks required key {key!r}")
    scenario_path = _resolve_file(base_dir, data["scenario"], "scenario")
    trajectory_path = _resolve_file(base_dir, data["trajectory"], "trajectory")
    pattern_paths = tuple(
        _resolve_file(base_dir, p, "patterns") for p in data.get("patterns", [])
    )
    damage_params_path = (
        _resolve_file(base_dir, data["damage_params"], "damage_params")
        if data.get("damage_params")
        else None
    )

    requested = data.get("variants", list(VARIANTS))
    if not isinstance(requested, (list, tuple)) or not requested:
        raise ParseError("variants must be a non-empty list")
    bad = [v for v in requested if v not in VARIANTS]
    if bad:
        raise ParseError(f"unknown variants {bad}; choose from {list(VARIANTS)}")
    variants = tuple(v for v in VARIANTS if v in set(requested))

    df_spec = data.get("global_df", {"kind": "quadratic"})
    try:
        GlobalDf.from_config(df_spec)  # fail fast on a bad specification
    except (DataError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad global_df specification: {exc}") from exc

    if "discount_rates" in data:
        rates = tuple(float(r) for r in data["discount_rates"])
    elif "discount_rate" in data:
        rates = (float(data["discount_rate"]),)
    else:
        rates = (0.015,)
    if not rates:
        raise ParseError("discount_rates must not be empty")
    for rate in rates:
        if rate <= -1.0:
            raise InvalidRange(f"discount rate {rate} must exceed -1")

    ecs = data.get("ecs", {})
    ecs_mode = ecs.get("mode", "fixed")
    if ecs_mode not in ("fixed", "sample"):
        raise ParseError(f"ecs mode must be 'fixed' or 'sample', got {ecs_mode!r}")
    ecs_value = float(ecs.get("value", 3.0))
    if ecs_value <= 0.0:
        raise InvalidRange("ecs value must be positive")
    ecs_draws = int(ecs.get("draws", 1))
    if ecs_draws < 1:
        raise InvalidRange("ecs draws must be at least 1")
    seed = int(ecs.get("seed", 0))

    pulse = data.get("pulse", {})
    pulse_year = int(pulse.get("year", 2010))
    pulse_size = float(pulse.get("size_gtc", 1.0))
    if pulse_size <= 0.0:
        raise InvalidRange("pulse size must be positive")

    uhi = data.get("uhi", {})
    uhi_a = float(uhi.get("a", 1.85e-3))
    uhi_b = float(uhi.get("b", 0.45))
    if uhi_a < 0.0:
        raise InvalidRange("uhi amplitude must be non-negative")
    if not 0.0 < uhi_b < 1.0:
        raise InvalidRange("uhi exponent must lie in (0, 1)")
    uhi_ratchet = bool(uhi.get("ratchet", False))

    threshold = float(data.get("urban_threshold", DEFAULT_URBAN_THRESHOLD))
    if threshold <= 0.0:
        raise InvalidRange("urban threshold must be positive")

    default_alpha = float(data.get("default_alpha", DEFAULT_QUADRATIC_COEFF))
    if default_alpha < 0.0:
        raise InvalidRange("default_alpha must be non-negative")
    default_phi = float(data.get("default_phi", 0.5))
    if not 0.0 <= default_phi <= 1.0:
        raise InvalidRange("default_phi must lie in [0, 1]")

    horizon = int(data.get("horizon", 2100))
    if horizon < pulse_year:
        raise InvalidRange("horizon must not precede the pulse year")

    scuhi = data.get("scuhi", {})
    reduction = float(scuhi.get("reduction", 0.01))
    if not 0.0 <= reduction < 1.0:
        raise InvalidRange("scuhi reduction must lie in [0, 1)")
    start_year = scuhi.get("start_year")
    if start_year is not None:
        start_year = int(start_year)
        if not pulse_year <= start_year <= horizon:
            raise InvalidRange("scuhi start_year must lie between pulse year and horizon")
    reference = scuhi.get("reference_population", "pulse_year")
    if reference not in _SCUHI_REFERENCES:
        raise ParseError(
            f"scuhi reference_population must be one of {_SCUHI_REFERENCES}"
        )

    output_dir = Path(data.get("output_dir", "out"))
    if not output_dir.is_absolute():
        output_dir = base_dir / output_dir

    return RunConfig(
        scenario_path=scenario_path,
        trajectory_path=trajectory_path,
        pattern_paths=pattern_paths,
        damage_params_path=damage_params_path,
        variants=variants,
        global_df=df_spec,
        discount_rates=rates,
        ecs_mode=ecs_mode,
        ecs_value=ecs_value,
        ecs_draws=ecs_draws,
        seed=seed,
        pulse_year=pulse_year,
        pulse_size_gtc=pulse_size,
        uhi_a=uhi_a,
        uhi_b=uhi_b,
        uhi_ratchet=uhi_ratchet,
        urban_threshold=threshold,
        default_alpha=default_alpha,
        default_phi=default_phi,
        scuhi_reduction=reduction,
        scuhi_start_year=start_year,
        scuhi_reference=reference,
        horizon=horizon,
        output_dir=output_dir,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"config file not found: {path}")
    return validate_config(path.read_text(), base_dir=path.parent)


def compute_scaling(scenario: Scenario, field: ClimateField,
                    params: RegionalDamageParams, df: GlobalDf,
                    trajectory: GlobalTrajectory, plain=None):
    """Calibration series for one run, derived from the plain variant."""
    if plain is None:
        plain = plain_fraction(scenario, field, params)
    aggregate = np.einsum("ct,ct->t", plain, scenario.gdp)
    return scaling_series(
        scenario.years, scenario.world_gdp(), df,
        trajectory.aligned(scenario.years), aggregate,
    )


@dataclass
class MemberContext:
    """Shared inputs for every ensemble member."""

    scenario: Scenario
    mask: UrbanMask
    trajectory: GlobalTrajectory
    pulse: PulseParams
    uhi: UhiParams
    params: RegionalDamageParams
    phi: PersistenceParams
    df: GlobalDf
    rates: tuple[float, ...]
    variants: tuple[str, ...]
    horizon: int
    scuhi_reduction: float
    scuhi_start_year: int
    scuhi_reference: str


@dataclass
class MemberResult:
    """Small per-member summary; the big per-cell arrays never leave a member."""

    ecs: float
    pattern_tag: str
    scc: dict           # (variant, rate) -> SccReport
    decompositions: dict  # (pair, rate) -> Decomposition
    scuhi: dict         # (variant, rate) -> ScuhiReport


def _decomposition_pairs(variants) -> list[tuple[str, str]]:
    pairs = []
    if "RU" in variants:
        pairs.append(("R", "RU"))
    if "RPU" in variants:
        pairs.append(("RP", "RPU"))
    return pairs


def _subset_plan(variants) -> dict[str, set]:
    plan = {v: {"all"} for v in variants}
    for plain, urban in _decomposition_pairs(variants):
        plan.setdefault(plain, set()).update({"urban", "nonurban"})
        plan.setdefault(urban, set()).add("urban")
    return plan


def _reference_population(ctx: MemberContext) -> np.ndarray:
    scenario, mask = ctx.scenario, ctx.mask
    if ctx.scuhi_reference == "horizon_year":
        year = int(min(ctx.horizon, scenario.years[-1]))
        return reference_urban_population(scenario, mask, year)
    if ctx.scuhi_reference == "mean":
        urban_pop = np.where(mask.flags, scenario.population, 0.0)
        return (scenario.region_onehot @ urban_pop).mean(axis=1)
    return reference_urban_population(scenario, mask, ctx.pulse.t0)


def compute_member(ctx: MemberContext, ecs: float, pattern: PatternField) -> MemberResult:
    """Baseline plus pulsed evaluation of one ensemble member."""
    scenario, mask = ctx.scenario, ctx.mask
    base_traj = scale_trajectory(ctx.trajectory, ecs)
    pulsed_traj = perturbed_trajectory(base_traj, ctx.pulse, ecs)

    plan = _subset_plan(ctx.variants)
    ordered = [v for v in VARIANTS if v in plan]
    series: dict = {}
    base_field = None
    base_scaling = None
    for run_key, traj in (("base", base_traj), ("pulsed", pulsed_traj)):
        field = build_climate_field(scenario, mask, traj, pattern, ctx.uhi)
        scaling = compute_scaling(scenario, field, ctx.params, ctx.df, traj)
        for variant in ordered:
            ledger = build_ledger(
                scenario, mask, field, variant, ctx.params,
                phi=ctx.phi, scaling=scaling,
            )
            for subset in plan[variant]:
                series[(run_key, variant, subset)] = ledger_subset_series(
                    ledger, scenario, mask, subset
                )
            del ledger
        if run_key == "base":
            base_field = field
            base_scaling = scaling
        del field

    specs = {
        rate: DiscountSpec(rate=rate, base_year=ctx.pulse.t0, horizon=ctx.horizon)
        for rate in ctx.rates
    }
    years = scenario.years

    scc_reports = {}
    for variant in ctx.variants:
        base_all = series[("base", variant, "all")]
        pulsed_all = series[("pulsed", variant, "all")]
        for rate, spec in specs.items():
            per_region = _scc_from_series(base_all, pulsed_all, years, spec, ctx.pulse)
            scc_reports[(variant, rate)] = SccReport.from_regions(variant, rate, per_region)

    decompositions = {}
    for plain, urban in _decomposition_pairs(ctx.variants):
        for rate, spec in specs.items():
            def part(variant, subset):
                return _scc_from_series(
                    series[("base", variant, subset)],
                    series[("pulsed", variant, subset)],
                    years, spec, ctx.pulse,
                )
            decompositions[(urban, rate)] = Decomposition(
                pair=urban,
                rate=rate,
                nu=part(plain, "nonurban"),
                u=part(urban, "urban"),
                u_nouhi=part(plain, "urban"),
            )

    scuhi_reports = {}
    uhi_variants = [v for v in ctx.variants if has_uhi(v)]
    if uhi_variants and ctx.uhi.a > 0.0:
        keep = years < ctx.scuhi_start_year
        factor = np.where(keep, 1.0, 1.0 - ctx.scuhi_reduction)
        reduced_field = ClimateField(
            years=base_field.years,
            t_ghg=base_field.t_ghg,
            t_uhi=base_field.t_uhi * factor[None, :],
        )
        ref_pop = _reference_population(ctx)
        for variant in uhi_variants:
            ledger = build_ledger(
                scenario, mask, reduced_field, variant, ctx.params,
                phi=ctx.phi, scaling=base_scaling,
            )
            reduced_urban = ledger_subset_series(ledger, scenario, mask, "urban")
            del ledger
            for rate, spec in specs.items():
                scuhi_reports[(variant, rate)] = scuhi_one_percent(
                    years, series[("base", variant, "urban")], reduced_urban,
                    spec, ref_pop, variant, ctx.scuhi_reduction,
                )
    elif uhi_variants:
        ref_pop = _reference_population(ctx)
        zero = np.zeros((len(REGIONS), years.size))
        for variant in uhi_variants:
            for rate, spec in specs.items():
                scuhi_reports[(variant, rate)] = scuhi_one_percent(
                    years, zero, zero, spec, ref_pop, variant, ctx.scuhi_reduction,
                )

    return MemberResult(
        ecs=ecs,
        pattern_tag=pattern.model_tag,
        scc=scc_reports,
        decompositions=decompositions,
        scuhi=scuhi_reports,
    )


@dataclass
class RunResult:
    """Ensemble results: per-member details plus closure-preserving means."""

    config: RunConfig
    members: list[MemberResult]
    scc: dict           # (variant, rate) -> SccReport, ensemble mean
    decompositions: dict  # (pair, rate) -> Decomposition, ensemble mean
    scuhi: dict         # (variant, rate) -> ScuhiReport, ensemble mean
    percentiles: dict   # (variant, rate) -> PercentileSummary
    ecs_values: tuple[float, ...]


def _combine(config: RunConfig, members: list[MemberResult],
             ecs_values) -> RunResult:
    # The central estimate is the ensemble mean: means are linear, so the
    # regional values still sum to the world value and the decomposition
    # identities survive aggregation.
    scc_keys = members[0].scc.keys()
    mean_scc = {}
    percentiles = {}
    for key in scc_keys:
        variant, rate = key
        stack = np.stack([m.scc[key].per_region for m in members])
        mean_scc[key] = SccReport.from_regions(variant, rate, stack.mean(axis=0))
        percentiles[key] = ensemble_percentiles(
            [m.scc[key] for m in members], REPORT_QUANTILES
        )

    mean_decomp = {}
    for key in members[0].decompositions.keys():
        pair, rate = key
        mean_decomp[key] = Decomposition(
            pair=pair,
            rate=rate,
            nu=np.stack([m.decompositions[key].nu for m in members]).mean(axis=0),
            u=np.stack([m.decompositions[key].u for m in members]).mean(axis=0),
            u_nouhi=np.stack(
                [m.decompositions[key].u_nouhi for m in members]
            ).mean(axis=0),
        )

    mean_scuhi = {}
    for key in members[0].scuhi.keys():
        variant, rate = key
        first = members[0].scuhi[key]
        per_region = np.stack([m.scuhi[key].per_region for m in members]).mean(axis=0)
        ref = first.reference_population
        per_dweller = np.divide(
            per_region, ref, out=np.zeros_like(per_region), where=ref > 0
        )
        world = float(per_region.sum())
        world_pop = float(ref.sum())
        mean_scuhi[key] = ScuhiReport(
            variant=variant,
            rate=rate,
            reduction=first.reduction,
            per_region=per_region,
            world=world,
            per_dweller_region=per_dweller,
            per_dweller_world=world / world_pop if world_pop > 0 else 0.0,
            reference_population=ref,
        )

    return RunResult(
        config=config,
        members=members,
        scc=mean_scc,
        decompositions=mean_decomp,
        scuhi=mean_scuhi,
        percentiles=percentiles,
        ecs_values=tuple(float(e) for e in ecs_values),
    )


def prepare_inputs(config: RunConfig):
    """Load and align everything a run needs; shared by run() and the CLI."""
    scenario_raw = load_scenario(config.scenario_path)
    trajectory = load_trajectory(config.trajectory_path, label=scenario_raw.label)
    run_years = trajectory.years[
        (trajectory.years >= config.pulse_year) & (trajectory.years <= config.horizon)
    ]
    if run_years.size == 0 or run_years[0] != config.pulse_year:
        raise DataError(
            f"trajectory must cover the pulse year {config.pulse_year} "
            f"through the horizon {config.horizon}"
        )
    scenario = annualize(scenario_raw, run_years)
    trajectory = GlobalTrajectory(
        years=run_years, anomaly=trajectory.aligned(run_years), label=trajectory.label
    )

    threshold = config.urban_threshold
    sidecar = scenario.meta.get("urban_threshold")
    if sidecar is not None and threshold == DEFAULT_URBAN_THRESHOLD:
        threshold = float(sidecar)
    mask = classify_urban(scenario, threshold)

    if config.pattern_paths:
        patterns = [load_pattern(p) for p in config.pattern_paths]
        for pattern in patterns:
            pattern.aligned(scenario.cell_ids)  # missing cells fail fast
    else:
        patterns = [PatternField.uniform(scenario.cell_ids)]

    if config.damage_params_path is not None:
        params, phi = load_damage_params(config.damage_params_path)
    else:
        params = RegionalDamageParams.uniform(config.default_alpha)
        phi = PersistenceParams.uniform(config.default_phi)

    ctx = MemberContext(
        scenario=scenario,
        mask=mask,
        trajectory=trajectory,
        pulse=PulseParams(t0=config.pulse_year, size_gtc=config.pulse_size_gtc),
        uhi=UhiParams(a=config.uhi_a, b=config.uhi_b, ratchet=config.uhi_ratchet),
        params=params,
        phi=phi,
        df=GlobalDf.from_config(config.global_df),
        rates=config.discount_rates,
        variants=config.variants,
        horizon=config.horizon,
        scuhi_reduction=config.scuhi_reduction,
        scuhi_start_year=(
            config.scuhi_start_year if config.scuhi_start_year is not None
            else config.pulse_year
        ),
        scuhi_reference=config.scuhi_reference,
    )
    return ctx, patterns


def draw_ecs_values(config: RunConfig) -> tuple[float, ...]:
    if config.ecs_mode == "fixed":
        return (config.ecs_value,)
    rng = np.random.default_rng(config.seed)
    deviates = rng.random(config.ecs_draws)
    return tuple(float(v) for v in sample_ecs(EcsDistribution(), deviates))


def execute(ctx: MemberContext, patterns, ecs_values, threads: int = 1) -> list[MemberResult]:
    """Run all ensemble members, optionally in parallel, in a fixed order."""
    jobs = [(ecs, pattern) for pattern in patterns for ecs in ecs_values]
    if threads <= 1 or len(jobs) == 1:
        return [compute_member(ctx, ecs, pattern) for ecs, pattern in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: compute_member(ctx, *job), jobs))


def run(config: RunConfig, threads: int = 1) -> RunResult:
    """Execute the configured run and write all report files."""
    started = time.time()
    ctx, patterns = prepare_inputs(config)
    ecs_values = draw_ecs_values(config)
    members = execute(ctx, patterns, ecs_values, threads)
    result = _combine(config, members, ecs_values)

    contents = render_reports(result)
    contents["manifest.json"] = _render_manifest(config, result, started, threads)
    write_reports(contents, config.output_dir)
    return result


# ---------------------------------------------------------------------------
# report emission


def _fmt(x) -> str:
    return repr(float(x))


def _table1(result: RunResult) -> str:
    variants = result.config.variants
    header = ["discount_rate", "region"]
    for variant in variants:
        header += [f"{variant}_usd_per_tco2", f"{variant}_pct_of_world"]
    lines = [",".join(header)]
    for rate in result.config.discount_rates:
        rows = {region: [_fmt(rate), region] for region in REGIONS}
        world_row = [_fmt(rate), "WORLD"]
        for variant in variants:
            report = result.scc[(variant, rate)]
            for i, region in enumerate(REGIONS):
                rows[region] += [
                    _fmt(report.per_region[i]),
                    _fmt(report.fractions[i] * 100.0),
                ]
            world_pct = 100.0 if report.world != 0.0 else 0.0
            world_row += [_fmt(report.world), _fmt(world_pct)]
        for region in REGIONS:
            lines.append(",".join(rows[region]))
        lines.append(",".join(world_row))
    return "\n".join(lines) + "\n"


def _table2(result: RunResult) -> str:
    header = (
        "discount_rate,pair,region,non_urban,urban,urban_no_uhi,"
        "exposure,uhi_plus_interaction,total"
    )
    lines = [header]
    for (pair, rate), decomp in sorted(
        result.decompositions.items(), key=lambda kv: (kv[0][1], kv[0][0])
    ):
        closure = decomp.nu + decomp.u_nouhi + decomp.uhi_int - decomp.total
        tol = 1e-6 * np.maximum(1.0, np.abs(decomp.total))
        if np.any(np.abs(closure) > tol):
            raise GridSccError(
                "decomposition identity violated before emission "
                f"(pair {pair}, rate {rate})"
            )
        total = decomp.total
        for i, region in enumerate(REGIONS):
            lines.append(",".join([
                _fmt(rate), pair, region,
                _fmt(decomp.nu[i]), _fmt(decomp.u[i]), _fmt(decomp.u_nouhi[i]),
                _fmt(decomp.exposure[i]), _fmt(decomp.uhi_int[i]), _fmt(total[i]),
            ]))
        lines.append(",".join([
            _fmt(rate), pair, "WORLD",
            _fmt(decomp.world("nu")), _fmt(decomp.world("u")),
            _fmt(decomp.world("u_nouhi")), _fmt(decomp.world("exposure")),
            _fmt(decomp.world("uhi_int")), _fmt(float(total.sum())),
        ]))
    return "\n".join(lines) + "\n"


def _scuhi_csv(result: RunResult) -> str:
    header = (
        "discount_rate,variant,region,reduction,total_npv_usd,per_urban_dweller_usd"
    )
    lines = [header]
    for (variant, rate), report in sorted(
        result.scuhi.items(), key=lambda kv: (kv[0][1], kv[0][0])
    ):
        for i, region in enumerate(REGIONS):
            lines.append(",".join([
                _fmt(rate), variant, region, _fmt(report.reduction),
                _fmt(report.per_region[i]), _fmt(report.per_dweller_region[i]),
            ]))
        lines.append(",".join([
            _fmt(rate), variant, "WORLD", _fmt(report.reduction),
            _fmt(report.world), _fmt(report.per_dweller_world),
        ]))
    return "\n".join(lines) + "\n"


def _percentiles_csv(result: RunResult) -> str:
    labels = [f"p{int(round(q * 100)):02d}" for q in REPORT_QUANTILES]
    lines = ["discount_rate,variant,region," + ",".join(labels)]
    for (variant, rate), summary in sorted(
        result.percentiles.items(), key=lambda kv: (kv[0][1], kv[0][0])
    ):
        for i, region in enumerate(REGIONS):
            values = [_fmt(summary.per_region[q, i]) for q in range(len(labels))]
            lines.append(",".join([_fmt(rate), variant, region] + values))
        world = [_fmt(summary.world[q]) for q in range(len(labels))]
        lines.append(",".join([_fmt(rate), variant, "WORLD"] + world))
    return "\n".join(lines) + "\n"


def render_reports(result: RunResult) -> dict[str, str]:
    contents = {
        "table1.csv": _table1(result),
        "scuhi.csv": _scuhi_csv(result),
        "percentiles.csv": _percentiles_csv(result),
    }
    if result.decompositions:
        contents["table2.csv"] = _table2(result)
    return contents


def _hash_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _render_manifest(config: RunConfig, result: RunResult, started: float,
                     threads: int) -> str:
    hashed = [config.scenario_path, config.trajectory_path, *config.pattern_paths]
    if config.damage_params_path is not None:
        hashed.append(config.damage_params_path)
    manifest = {
        "tool": "gridscc",
        "version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "elapsed_seconds": round(time.time() - started, 3),
        "threads": threads,
        "seed": config.seed,
        "ecs_values": list(result.ecs_values),
        "members": len(result.members),
        "config": config.echo(),
        "input_hashes": {str(p): _hash_file(p) for p in hashed},
    }
    return json.dumps(manifest, indent=2, sort_keys=True) + "\n"


def write_reports(contents: dict[str, str], out_dir) -> list[Path]:
    """Write every report atomically; on failure leave no partial outputs."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create output directory {out_dir}: {exc}") from exc
    placed: list[Path] = []
    try:
        for name, content in contents.items():
            tmp = out_dir / f".{name}.tmp"
            tmp.write_text(content)
            os.replace(tmp, out_dir / name)
            placed.append(out_dir / name)
    except OSError as exc:
        for path in placed:
            path.unlink(missing_ok=True)
        for name in contents:
            (out_dir / f".{name}.tmp").unlink(missing_ok=True)
        raise IoFailure(f"failed writing reports to {out_dir}: {exc}") from exc
    return placed
