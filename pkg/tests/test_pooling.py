"""Tests for annuity equivalent wealth, the utility oracle and sweeps."""

import math

import numpy as np
import pytest
from scipy import integrate

from lifepool.mortality import AgeAnchoredLaw, GompertzLaw, from_hg, survival, truncation_horizon
from lifepool.pooling import (
    ClamLine,
    Participant,
    PoolingResult,
    Preferences,
    aew_group,
    aew_homogeneous,
    delta_vs_g_sweep,
    subsidy_table,
    utility_oracle_delta,
    wtp,
)
from lifepool.pricing import annuity_factor_mb

GROUP_A = GompertzLaw(75.02, 11.87)
GROUP_B = GompertzLaw(91.72, 12.87)
POOLED = GompertzLaw(85.45, 12.41)
R, GAMMA = 0.03, 3.0


class TestWorkedExample:
    def test_fair_deltas(self):
        assert aew_homogeneous(R, GROUP_A, 65.0, GAMMA).delta == pytest.approx(
            0.8932, rel=5e-3
        )
        assert aew_homogeneous(R, GROUP_B, 65.0, GAMMA).delta == pytest.approx(
            0.4839, rel=5e-3
        )

    def test_group_deltas(self):
        assert aew_group(R, GROUP_A, POOLED, 65.0, GAMMA).delta == pytest.approx(
            0.3232, rel=5e-3
        )
        assert aew_group(R, GROUP_B, POOLED, 65.0, GAMMA).delta == pytest.approx(
            0.7448, rel=5e-3
        )

    def test_result_fields(self):
        res = aew_group(R, GROUP_A, POOLED, 65.0, GAMMA)
        assert isinstance(res, PoolingResult)
        assert res.aew == pytest.approx(1.0 + res.delta, rel=1e-14)
        assert res.wtp == pytest.approx(res.delta / (1 + res.delta), rel=1e-14)
        assert res.factor_individual == pytest.approx(9.493, rel=5e-3)
        assert res.factor_group == pytest.approx(13.583, rel=5e-3)

    def test_table_median_male_row(self):
        law = from_hg(AgeAnchoredLaw(x=65.0, h=0.0106, g=0.0883))
        fair = aew_homogeneous(R, law, 65.0, GAMMA).delta
        grouped = aew_group(R, law, law, 65.0, GAMMA).delta
        assert fair == pytest.approx(0.5053, rel=1e-2)
        assert grouped == pytest.approx(fair, rel=1e-12)


class TestClosedFormStructure:
    def test_group_collapses_to_homogeneous(self):
        for law in (GROUP_A, GROUP_B, POOLED):
            hom = aew_homogeneous(R, law, 65.0, GAMMA).delta
            grp = aew_group(R, law, law, 65.0, GAMMA).delta
            assert grp == pytest.approx(hom, rel=1e-12)

    def test_risk_neutral_limit(self):
        res = aew_homogeneous(R, GROUP_A, 65.0, 1e-6)
        assert abs(res.delta) < 1e-4

    def test_homogeneous_positive_for_all_gamma(self):
        for gamma in (0.25, 0.5, 0.999, 1.0, 1.001, 2.0, 3.0, 5.0, 8.0):
            for law in (GROUP_A, GROUP_B):
                assert aew_homogeneous(R, law, 65.0, gamma).delta > 0.0

    def test_denominator_age_identity(self):
        # a(r, x - b*ln(gamma), m, b) equals quadrature of e^{-rt} p^{1/gamma}
        for gamma in (0.5, 2.0, 3.0, 5.0):
            for law in (GROUP_A, GROUP_B):
                setback = 65.0 - law.b * math.log(gamma)
                closed = annuity_factor_mb(R, setback, law.m, law.b)
                horizon = truncation_horizon(law, 65.0 - law.b * math.log(max(gamma, 1.0)))
                direct, _ = integrate.quad(
                    lambda t: math.exp(-R * t) * survival(law, 65.0, t) ** (1 / gamma),
                    0, horizon, limit=300,
                )
                assert closed == pytest.approx(direct, rel=1e-8)

    def test_gamma_one_continuity(self):
        lo = aew_homogeneous(R, GROUP_A, 65.0, 0.999).delta
        hi = aew_homogeneous(R, GROUP_A, 65.0, 1.001).delta
        mid = aew_homogeneous(R, GROUP_A, 65.0, 1.0).delta
        assert min(lo, hi) < mid < max(lo, hi)

    def test_gamma_validation(self):
        with pytest.raises(ValueError):
            aew_homogeneous(R, GROUP_A, 65.0, 0.0)
        with pytest.raises(ValueError):
            aew_homogeneous(R, GROUP_A, 65.0, -2.0)
        with pytest.raises(ValueError):
            Preferences(gamma=-1.0, rho=R)


class TestUtilityOracle:
    def test_reproduces_fair_worked_example(self):
        got = utility_oracle_delta(R, GROUP_A, GROUP_A, 65.0, GAMMA)
        assert got == pytest.approx(0.8932, abs=1e-3)

    def test_reproduces_group_worked_example(self):
        got = utility_oracle_delta(R, GROUP_A, POOLED, 65.0, GAMMA)
        assert got == pytest.approx(0.3232, abs=1e-3)

    @pytest.mark.parametrize("gamma", [0.5, 2.0, 3.0, 5.0])
    def test_agrees_with_closed_form(self, gamma):
        for ind, grp in [(GROUP_A, GROUP_A), (GROUP_B, POOLED), (GROUP_A, POOLED)]:
            closed = aew_group(R, ind, grp, 65.0, gamma).delta
            oracle = utility_oracle_delta(R, ind, grp, 65.0, gamma)
            assert (1 + oracle) == pytest.approx(1 + closed, rel=1e-5)

    def test_near_risk_neutral(self):
        got = utility_oracle_delta(R, GROUP_B, GROUP_B, 65.0, 1e-6)
        assert abs(got) < 1e-4

    def test_log_utility_bracketed(self):
        mid = utility_oracle_delta(R, GROUP_A, GROUP_A, 65.0, 1.0)
        lo = aew_homogeneous(R, GROUP_A, 65.0, 0.999).delta
        hi = aew_homogeneous(R, GROUP_A, 65.0, 1.001).delta
        assert min(lo, hi) < mid < max(lo, hi)


class TestWtp:
    def test_published_mapping(self):
        assert wtp(0.25) == pytest.approx(0.20)

    def test_zero(self):
        assert wtp(0.0) == 0.0

    def test_direct_ratio(self):
        assert wtp(0.8932) == pytest.approx(0.4718, abs=1e-4)

    def test_domain(self):
        with pytest.raises(ValueError):
            wtp(-1.0)


class TestSubsidy:
    def test_two_participant_published_numbers(self):
        rows = subsidy_table(
            [Participant("short", 25000.0, 10.0), Participant("long", 25000.0, 30.0)],
            r=0.03,
        )
        by_label = {row.label: row for row in rows}
        assert by_label["short"].present_value == pytest.approx(212750, rel=0.01)
        assert by_label["long"].present_value == pytest.approx(487250, rel=0.01)
        assert abs(by_label["short"].net_transfer) == pytest.approx(137250, rel=0.01)
        assert by_label["short"].net_transfer > 0  # funds the longer-lived
        assert sum(row.net_transfer for row in rows) == pytest.approx(0.0, abs=1e-9)

    def test_identical_participants_no_transfers(self):
        rows = subsidy_table(
            [Participant(f"p{i}", 25000.0, 20.0) for i in range(3)], r=0.03
        )
        for row in rows:
            assert row.net_transfer == pytest.approx(0.0, abs=1e-9)

    def test_three_participants_conserve(self):
        rows = subsidy_table(
            [
                Participant("a", 10000.0, 15.0),
                Participant("b", 10000.0, 30.0),
                Participant("c", 10000.0, 15.0),
            ],
            r=0.02,
        )
        assert sum(row.net_transfer for row in rows) == pytest.approx(0.0, abs=1e-9)

    def test_law_based_horizon(self):
        rows = subsidy_table(
            [
                Participant("lawful", 25000.0, (GROUP_A, 65.0)),
                Participant("fixed", 25000.0, 30.0),
            ],
            r=0.03,
        )
        assert rows[0].horizon == pytest.approx(11.95, rel=5e-3)

    def test_explicit_contributions(self):
        rows = subsidy_table(
            [
                Participant("a", 25000.0, 10.0, contribution=350000.0),
                Participant("b", 25000.0, 30.0, contribution=350000.0),
            ],
            r=0.03,
        )
        assert rows[0].contribution == 350000.0

    def test_validation(self):
        with pytest.raises(ValueError):
            subsidy_table([Participant("solo", 1000.0, 10.0)], r=0.03)
        with pytest.raises(ValueError):
            subsidy_table(
                [Participant("a", 1.0, -2.0), Participant("b", 1.0, 10.0)], r=0.03
            )
        with pytest.raises(ValueError):
            subsidy_table(
                [
                    Participant("a", 1.0, 10.0, contribution=5.0),
                    Participant("b", 1.0, 10.0),
                ],
                r=0.03,
            )


class TestSweep:
    def test_fixed_hazard_series_ordering(self):
        points = delta_vs_g_sweep(
            R, GAMMA, 65.0, [0.06, 0.09, 0.12], [0.005, 0.03]
        )
        by = {}
        for pt in points:
            by.setdefault(pt.source, {})[pt.g] = pt.delta
        for g in (0.06, 0.09, 0.12):
            assert by["h=0.03"][g] > by["h=0.005"][g]

    def test_clam_line_monotone_decreasing(self):
        line = ClamLine(intercept=-1.234, lifespan=99.98)
        grid = np.linspace(0.0596, 0.1049, 10)
        points = delta_vs_g_sweep(R, GAMMA, 65.0, grid, line)
        deltas = [pt.delta for pt in points]
        assert all(a > b for a, b in zip(deltas, deltas[1:]))

    def test_single_point_matches_homogeneous(self):
        h, g = 0.0106, 0.0883
        [pt] = delta_vs_g_sweep(R, GAMMA, 65.0, [g], [h])
        law = from_hg(AgeAnchoredLaw(x=65.0, h=h, g=g))
        assert pt.delta == pytest.approx(
            aew_homogeneous(R, law, 65.0, GAMMA).delta, rel=1e-12
        )

    def test_clam_hazard_uses_evaluation_age(self):
        line = ClamLine(intercept=-1.234, lifespan=99.98)
        g = 0.09
        assert line.hazard_at(g, 65.0) == pytest.approx(
            math.exp(-1.234 - 99.98 * g) * math.exp(g * 65.0), rel=1e-14
        )

    def test_validation(self):
        with pytest.raises(ValueError):
            delta_vs_g_sweep(R, GAMMA, 65.0, [], [0.01])
        with pytest.raises(ValueError):
            delta_vs_g_sweep(R, GAMMA, 65.0, [0.09], [0.0])
