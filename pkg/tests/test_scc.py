"""Discounting, SCC, urban decomposition, SCUHI, ensemble quantiles."""

import numpy as np
import pytest

import oracle
from conftest import fixture_to_engine, make_four_cell_fixture
from gridscc.climate import ClimateField, build_climate_field
from gridscc.damages import GlobalDf, build_ledger
from gridscc.errors import (
    EmptyEnsemble,
    VariantMismatch,
    YearOutOfRange,
    ZeroPopulation,
)
from gridscc.pulse import PulseParams, perturbed_trajectory
from gridscc.runner import compute_scaling
from gridscc.scc import (
    Decomposition,
    DiscountSpec,
    SccReport,
    decompose,
    discount_factor,
    ensemble_percentiles,
    reference_urban_population,
    scc,
    scuhi_marginal_a,
    scuhi_marginal_p,
    scuhi_one_percent,
)
from gridscc.scenario import REGIONS, classify_urban


class TestDiscounting:
    def test_base_year_factor_is_one(self):
        assert discount_factor(DiscountSpec(), 2010) == 1.0

    def test_zero_rate(self):
        spec = DiscountSpec(rate=0.0)
        for year in (2010, 2050, 2100):
            assert discount_factor(spec, year) == 1.0

    def test_ten_year_factor_by_hand(self):
        assert discount_factor(DiscountSpec(rate=0.015), 2020) == pytest.approx(
            0.86167, abs=5e-6
        )
        assert discount_factor(DiscountSpec(rate=0.015), 2020) == 1.015**-10

    def test_out_of_window(self):
        with pytest.raises(YearOutOfRange):
            discount_factor(DiscountSpec(), 2009)
        with pytest.raises(YearOutOfRange):
            discount_factor(DiscountSpec(horizon=2100), 2101)

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            DiscountSpec(rate=-2.0)
        with pytest.raises(ValueError):
            DiscountSpec(base_year=2050, horizon=2040)


def build_run(fix, variant, anomaly=None):
    """Ledger for one run of the fixture (baseline unless anomaly given)."""
    scenario, trajectory, pattern, uhi, params, phi, df = fixture_to_engine(fix)
    if anomaly is not None:
        trajectory.anomaly = np.array([anomaly[y] for y in fix["years"]])
    mask = classify_urban(scenario)
    field = build_climate_field(scenario, mask, trajectory, pattern, uhi)
    ledger = build_ledger(
        scenario, mask, field, variant, params, phi=phi, df=df, trajectory=trajectory
    )
    return scenario, mask, field, trajectory, ledger


def fixture_pair(fix, variant, pulse=None):
    pulse = pulse or PulseParams(t0=fix["years"][0])
    base = build_run(fix, variant)
    pulsed_anomaly = oracle.pulsed_anomaly(fix, pulse.t0, pulse.size_gtc)
    pulsed = build_run(fix, variant, anomaly=pulsed_anomaly)
    return base, pulsed, pulse


class TestScc:
    def test_identical_runs_give_zero(self, four_cell):
        (_, _, _, _, base), (_, _, _, _, _), pulse = fixture_pair(four_cell, "R")
        report = scc(base, base, DiscountSpec(horizon=2012), pulse)
        assert report.world == 0.0
        assert np.all(report.per_region == 0.0)

    def test_unit_construction(self):
        # one region, one year, loss difference of exactly one pulse worth
        pulse = PulseParams()
        years = np.array([2010])
        zero = np.zeros((13, 1))
        delta = np.zeros((13, 1))
        delta[0, 0] = pulse.tonnes_co2  # USD
        from gridscc.scc import _scc_from_series

        out = _scc_from_series(zero, delta, years, DiscountSpec(), pulse)
        assert out[0] == pytest.approx(1.0, rel=1e-12)

    def test_variant_mismatch_rejected(self, four_cell):
        (_, _, _, _, base_r), _, pulse = fixture_pair(four_cell, "R")
        (_, _, _, _, base_ru), _, _ = fixture_pair(four_cell, "RU")
        with pytest.raises(VariantMismatch):
            scc(base_r, base_ru, DiscountSpec(horizon=2012), pulse)

    @pytest.mark.parametrize("variant", ["R", "RU", "RP", "RPU"])
    def test_matches_enumeration_oracle(self, four_cell, variant):
        (_, _, _, _, base), (_, _, _, _, pulsed), pulse = fixture_pair(four_cell, variant)
        spec = DiscountSpec(rate=0.015, base_year=2010, horizon=2012)
        report = scc(base, pulsed, spec, pulse)
        expected = oracle.scc(four_cell, variant, 0.015, 2010, 2012)
        for i, region in enumerate(REGIONS):
            assert report.per_region[i] == pytest.approx(
                expected[region], rel=1e-9, abs=1e-15
            )
        assert report.world == pytest.approx(expected["WORLD"], rel=1e-9)

    def test_fractions_sum_to_one(self, four_cell):
        (_, _, _, _, base), (_, _, _, _, pulsed), pulse = fixture_pair(four_cell, "RU")
        report = scc(base, pulsed, DiscountSpec(horizon=2012), pulse)
        assert report.fractions.sum() == pytest.approx(1.0, abs=1e-9)

    def test_world_is_sum_of_regions(self, four_cell):
        (_, _, _, _, base), (_, _, _, _, pulsed), pulse = fixture_pair(four_cell, "RP")
        report = scc(base, pulsed, DiscountSpec(horizon=2012), pulse)
        assert report.world == pytest.approx(report.per_region.sum(), rel=1e-15)


class TestDecomposition:
    def run_decomposition(self, fix, plain="R", urban="RU", rate=0.015):
        (scenario, mask, _, _, base_p), (_, _, _, _, pulsed_p), pulse = fixture_pair(fix, plain)
        (_, _, _, _, base_u), (_, _, _, _, pulsed_u), _ = fixture_pair(fix, urban)
        spec = DiscountSpec(rate=rate, base_year=2010, horizon=2012)
        return decompose(
            scenario, mask, base_p, pulsed_p, base_u, pulsed_u, spec, pulse
        ), pulse, spec

    @pytest.mark.parametrize("pair", [("R", "RU"), ("RP", "RPU")])
    def test_matches_enumeration_oracle(self, four_cell, pair):
        plain, urban = pair
        decomp, _, _ = self.run_decomposition(four_cell, plain, urban)
        expected = oracle.decompose(four_cell, plain, urban, 0.015, 2010, 2012)
        for i, region in enumerate(REGIONS):
            assert decomp.nu[i] == pytest.approx(expected["nu"][region], rel=1e-9, abs=1e-15)
            assert decomp.u[i] == pytest.approx(expected["u"][region], rel=1e-9, abs=1e-15)
            assert decomp.u_nouhi[i] == pytest.approx(
                expected["u_nouhi"][region], rel=1e-9, abs=1e-15
            )
            assert decomp.exposure[i] == pytest.approx(
                expected["exposure"][region], rel=1e-9, abs=1e-15
            )
            assert decomp.uhi_int[i] == pytest.approx(
                expected["uhi_int"][region], rel=1e-9, abs=1e-15
            )

    def test_additivity_against_full_run(self, four_cell):
        decomp, pulse, spec = self.run_decomposition(four_cell)
        (_, _, _, _, base), (_, _, _, _, pulsed), _ = fixture_pair(four_cell, "RU")
        total = scc(base, pulsed, spec, pulse)
        np.testing.assert_allclose(
            decomp.total, total.per_region, rtol=1e-9, atol=1e-15
        )

    def test_identities_hold_by_construction(self, four_cell):
        decomp, _, _ = self.run_decomposition(four_cell)
        np.testing.assert_allclose(
            decomp.exposure, decomp.u_nouhi - decomp.nu, rtol=0, atol=0
        )
        np.testing.assert_allclose(
            decomp.uhi_int, decomp.u - decomp.u_nouhi, rtol=0, atol=0
        )

    def test_all_rural_collapses_to_nonurban(self):
        fix = make_four_cell_fixture()
        for cell in fix["cells"]:
            cell["pop"] = {y: 1e4 for y in fix["years"]}
        decomp, pulse, spec = self.run_decomposition(fix)
        assert np.all(decomp.u == 0.0)
        assert np.all(decomp.u_nouhi == 0.0)
        assert np.all(decomp.exposure == 0.0)
        assert np.all(decomp.uhi_int == 0.0)
        assert np.any(decomp.nu > 0.0)
        np.testing.assert_array_equal(decomp.total, decomp.nu)

    def test_wrong_pair_rejected(self, four_cell):
        (scenario, mask, _, _, base_r), (_, _, _, _, pulsed_r), pulse = fixture_pair(four_cell, "R")
        (_, _, _, _, base_rpu), (_, _, _, _, pulsed_rpu), _ = fixture_pair(four_cell, "RPU")
        with pytest.raises(VariantMismatch):
            decompose(
                scenario, mask, base_r, pulsed_r, base_rpu, pulsed_rpu,
                DiscountSpec(horizon=2012), pulse,
            )


class TestScuhiMarginals:
    def test_vanishes_without_warming(self, four_cell_engine):
        scenario, trajectory, pattern, uhi, params, _, _ = four_cell_engine
        trajectory.anomaly = np.zeros_like(trajectory.anomaly)
        from gridscc.climate import UhiParams

        cold = UhiParams(a=0.0, b=uhi.b)  # no heat island at all
        mask = classify_urban(scenario)
        field = build_climate_field(scenario, mask, trajectory, pattern, cold)
        spec = DiscountSpec(horizon=2012)
        value = scuhi_marginal_a(scenario, mask, field, cold, params.alpha_u, spec)
        assert value == 0.0

    def test_single_cell_hand_value(self):
        # alpha_u=0.01, T_ghg=2, T_uhi=1, P**b=50, gdp=1e9, delta=1
        from gridscc.climate import UhiParams
        from gridscc.scenario import Scenario

        scenario = Scenario(
            label="one",
            years=np.array([2010]),
            cell_ids=np.array([0]),
            lat=np.zeros(1),
            lon=np.zeros(1),
            region_index=np.array([0]),
            population=np.array([[2_500_000.0]]),
            gdp=np.array([[1e9]]),
        )
        mask = classify_urban(scenario)
        uhi = UhiParams(a=0.02, b=1.0 - 1e-12)  # P**b == P up to rounding
        # want P**b = 50: easier to check against the formula directly
        pb = scenario.population[0, 0] ** uhi.b
        field = ClimateField(
            years=scenario.years,
            t_ghg=np.array([[2.0]]),
            t_uhi=np.array([[1.0]]),
        )
        alpha_u = np.full(13, 0.01)
        got = scuhi_marginal_a(scenario, mask, field, uhi, alpha_u, DiscountSpec(rate=0.0))
        assert got == pytest.approx(2.0 * 0.01 * 3.0 * pb * 1e9, rel=1e-12)

    def test_matches_oracle(self, four_cell, four_cell_engine):
        scenario, trajectory, pattern, uhi, params, _, df = four_cell_engine
        mask = classify_urban(scenario)
        field = build_climate_field(scenario, mask, trajectory, pattern, uhi)
        scaling = compute_scaling(scenario, field, params, df, trajectory)
        spec = DiscountSpec(rate=0.015, base_year=2010, horizon=2012)
        got = scuhi_marginal_a(scenario, mask, field, uhi, params.alpha_u, spec, scaling)
        assert got == pytest.approx(oracle.scuhi_marginal_a(four_cell, 0.015, 2010, 2012), rel=1e-11)

    def test_central_difference_is_exact_for_quadratic(self, four_cell):
        self._derivative_check(make_four_cell_fixture(), rel_tol=1e-9, step=1e-4)

    def test_central_difference_weitzman(self):
        fix = make_four_cell_fixture(df=("weitzman", (20.46, 6.081, 6.754)))
        self._derivative_check(fix, rel_tol=1e-6, step=1e-4)

    @staticmethod
    def _npv_urban_damages(fix, uhi_scale, rate=0.015):
        series = oracle.region_series(fix, fix["anomaly"], "RU", "urban", uhi_scale)
        total = 0.0
        for region, by_year in series.items():
            for year, usd in by_year.items():
                total += oracle.discount(rate, year, fix["years"][0]) * usd
        return total

    def _derivative_check(self, fix, rel_tol, step):
        scenario, trajectory, pattern, uhi, params, _, df = fixture_to_engine(fix)
        mask = classify_urban(scenario)
        field = build_climate_field(scenario, mask, trajectory, pattern, uhi)
        scaling = compute_scaling(scenario, field, params, df, trajectory)
        spec = DiscountSpec(rate=0.015, base_year=2010, horizon=2012)
        analytic = scuhi_marginal_a(
            scenario, mask, field, uhi, params.alpha_u, spec, scaling
        )
        up = self._npv_urban_damages(fix, 1.0 + step)
        down = self._npv_urban_damages(fix, 1.0 - step)
        finite = (up - down) / (2.0 * step * fix["uhi_a"])
        assert analytic == pytest.approx(finite, rel=rel_tol)

    def test_marginal_population_hand_value(self):
        from gridscc.climate import UhiParams
        from gridscc.scenario import Scenario

        pop = 3_000_000.0
        scenario = Scenario(
            label="one",
            years=np.array([2010]),
            cell_ids=np.array([0]),
            lat=np.zeros(1),
            lon=np.zeros(1),
            region_index=np.array([0]),
            population=np.array([[pop]]),
            gdp=np.array([[2e9]]),
        )
        mask = classify_urban(scenario)
        uhi = UhiParams(a=1.5e-3, b=0.45)
        t_ghg, t_uhi = 2.0, uhi.a * pop**uhi.b
        field = ClimateField(
            years=scenario.years,
            t_ghg=np.array([[t_ghg]]),
            t_uhi=np.array([[t_uhi]]),
        )
        alpha_u = np.full(13, 0.012)
        got = scuhi_marginal_p(scenario, mask, field, uhi, alpha_u, DiscountSpec(rate=0.0))
        expected = 2.0 * 0.012 * uhi.a * uhi.b * (t_ghg + t_uhi) * pop ** (uhi.b - 1.0) * 2e9
        assert got[0] == pytest.approx(expected, rel=1e-12)

    def test_marginal_population_zero_amplitude(self, four_cell_engine):
        scenario, trajectory, pattern, _, params, _, _ = four_cell_engine
        from gridscc.climate import UhiParams

        uhi = UhiParams(a=0.0, b=0.45)
        mask = classify_urban(scenario)
        field = build_climate_field(scenario, mask, trajectory, pattern, uhi)
        out = scuhi_marginal_p(scenario, mask, field, uhi, params.alpha_u, DiscountSpec(horizon=2012))
        # zero amplitude still exposes greenhouse warming through the chain rule
        assert out.shape == (4,)
        assert np.all(out == 0.0)

    def test_zero_population_urban_cell_rejected(self):
        from gridscc.climate import UhiParams
        from gridscc.scenario import Scenario, UrbanMask

        scenario = Scenario(
            label="one",
            years=np.array([2010]),
            cell_ids=np.array([0]),
            lat=np.zeros(1),
            lon=np.zeros(1),
            region_index=np.array([0]),
            population=np.array([[0.0]]),
            gdp=np.array([[1e9]]),
        )
        mask = UrbanMask(threshold=1.0, flags=np.array([[True]]))
        field = ClimateField(scenario.years, np.array([[1.0]]), np.array([[0.5]]))
        with pytest.raises(ZeroPopulation):
            scuhi_marginal_p(
                scenario, mask, field, UhiParams(), np.full(13, 0.01), DiscountSpec()
            )


class TestScuhiOnePercent:
    def run_benefit(self, fix, variant="RU", reduction=0.01, rate=0.015):
        scenario, trajectory, pattern, uhi, params, phi, df = fixture_to_engine(fix)
        mask = classify_urban(scenario)
        field = build_climate_field(scenario, mask, trajectory, pattern, uhi)
        scaling = compute_scaling(scenario, field, params, df, trajectory)
        reduced_field = ClimateField(
            years=field.years, t_ghg=field.t_ghg, t_uhi=field.t_uhi * (1.0 - reduction)
        )
        from gridscc.damages import ledger_subset_series

        full = ledger_subset_series(
            build_ledger(scenario, mask, field, variant, params, phi=phi, scaling=scaling),
            scenario, mask, "urban",
        )
        reduced = ledger_subset_series(
            build_ledger(scenario, mask, reduced_field, variant, params, phi=phi, scaling=scaling),
            scenario, mask, "urban",
        )
        spec = DiscountSpec(rate=rate, base_year=2010, horizon=2012)
        ref_pop = reference_urban_population(scenario, mask, 2010)
        return scuhi_one_percent(
            scenario.years, full, reduced, spec, ref_pop, variant, reduction
        )

    def test_zero_amplitude_means_zero_benefit(self):
        fix = make_four_cell_fixture()
        fix["uhi_a"] = 0.0
        report = self.run_benefit(fix)
        assert report.world == 0.0

    @pytest.mark.parametrize("variant", ["RU", "RPU"])
    def test_matches_enumeration_oracle(self, four_cell, variant):
        report = self.run_benefit(four_cell, variant)
        expected = oracle.scuhi_one_percent(four_cell, variant, 0.015, 2010, 2012)
        for i, region in enumerate(REGIONS):
            assert report.per_region[i] == pytest.approx(
                expected["total_npv"][region], rel=1e-9, abs=1e-12
            )
            assert report.per_dweller_region[i] == pytest.approx(
                expected["per_dweller"][region], rel=1e-9, abs=1e-15
            )
        assert report.world == pytest.approx(expected["total_npv"]["WORLD"], rel=1e-9)
        assert report.per_dweller_world == pytest.approx(
            expected["per_dweller"]["WORLD"], rel=1e-9
        )

    def test_benefit_non_negative(self, four_cell):
        report = self.run_benefit(four_cell, "RPU")
        assert report.world >= 0.0
        assert np.all(report.per_region >= 0.0)

    def test_first_order_taylor_link(self, four_cell):
        # benefit of an eps reduction ~= eps * a * d(damages)/da
        scenario, trajectory, pattern, uhi, params, phi, df = fixture_to_engine(four_cell)
        mask = classify_urban(scenario)
        field = build_climate_field(scenario, mask, trajectory, pattern, uhi)
        scaling = compute_scaling(scenario, field, params, df, trajectory)
        spec = DiscountSpec(rate=0.015, base_year=2010, horizon=2012)
        marginal = scuhi_marginal_a(
            scenario, mask, field, uhi, params.alpha_u, spec, scaling
        )
        report = self.run_benefit(four_cell, "RU", reduction=0.01)
        assert report.world == pytest.approx(0.01 * uhi.a * marginal, rel=0.02)

    def test_variant_without_uhi_rejected(self, four_cell):
        with pytest.raises(VariantMismatch):
            scuhi_one_percent(
                np.array([2010]), np.zeros((13, 1)), np.zeros((13, 1)),
                DiscountSpec(), np.zeros(13), "R",
            )


class TestEnsemblePercentiles:
    def report(self, world_value):
        per_region = np.zeros(13)
        per_region[0] = world_value
        return SccReport.from_regions("R", 0.015, per_region)

    def test_single_member_collapses(self):
        summary = ensemble_percentiles([self.report(100.0)], (0.05, 0.5, 0.95))
        assert np.all(summary.world == 100.0)

    def test_two_member_median(self):
        summary = ensemble_percentiles([self.report(100.0), self.report(200.0)], (0.5,))
        assert summary.world[0] == 150.0

    def test_seven_member_sorted_oracle(self):
        values = [3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.0]
        reports = [self.report(v) for v in values]
        quantiles = (0.05, 0.25, 0.5, 0.75, 0.95)
        summary = ensemble_percentiles(reports, quantiles)
        for k, q in enumerate(quantiles):
            assert summary.world[k] == pytest.approx(
                oracle.quantile_sorted(values, q), rel=1e-12
            )
            assert summary.per_region[k, 0] == pytest.approx(
                oracle.quantile_sorted(values, q), rel=1e-12
            )

    def test_empty_rejected(self):
        with pytest.raises(EmptyEnsemble):
            ensemble_percentiles([])

    def test_mixed_variants_rejected(self):
        a = self.report(1.0)
        b = SccReport.from_regions("RU", 0.015, np.zeros(13))
        with pytest.raises(VariantMismatch):
            ensemble_percentiles([a, b])
