from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pevkit import normal
from pevkit.decision import DecisionRule
from pevkit.regression import RegressionScenario, probit_pev_reg, probit_pev_reg_many
from pevkit.simple import SimpleProbitModel
from pevkit.solvers import (
    DEFAULT_GRID,
    FocalParameter,
    NoSignChange,
    ThresholdRow,
    bound_pev,
    solve_alpha,
    solve_generic,
    solve_n_un,
    solve_pi,
    sweep,
)

from conftest import simple_example, regression_example

Z = DecisionRule.statistical("positive", z=1.96)


def humped_scenario():
    """Fixed-threshold probit that rises until n_un near 700 and falls afterwards."""
    base = regression_example()
    un = base.unobserved.with_entry("cov", "W", "Y", value=0.4656)
    return RegressionScenario(base.observed, un, 32.0), DecisionRule.fixed(0.0)


def model_probit(scn, rule=Z):
    return SimpleProbitModel.build(scn, rule)(scn.alpha, scn.pi_r)


class TestSolveAlpha:
    def test_alpha_sweep_median(self):
        row = solve_alpha(0.5, simple_example(pi_r=0.46), Z)
        assert abs(row.threshold - 0.9966) <= 1e-3
        assert abs(row.ybar_t_un - 609.42) <= 0.05
        assert abs(row.delta_id - 2.56) <= 0.05
        assert np.isclose(row.effect_un, (row.threshold - 1) * 611.5)

    def test_alpha_sweep_low(self):
        assert abs(solve_alpha(0.1, simple_example(pi_r=0.46), Z).threshold - 1.0017) <= 1e-3

    @pytest.mark.parametrize("direction", ["positive", "negative"])
    @pytest.mark.parametrize("target", [0.05, 0.3, 0.5, 0.77, 0.95])
    def test_round_trip(self, direction, target):
        rule = DecisionRule.statistical(direction, z=1.96)
        row = solve_alpha(target, simple_example(pi_r=0.46), rule)
        scn = simple_example(row.threshold, 0.46)
        assert abs(model_probit(scn, rule) - normal.ppf(target)) <= 1e-9

    def test_no_alpha_dependence_at_pi_one(self):
        with pytest.raises(ValueError):
            solve_alpha(0.5, simple_example(pi_r=1.0), Z)

    @pytest.mark.parametrize("target", [0.0, 1.0, -0.2])
    def test_target_range(self, target):
        with pytest.raises(ValueError):
            solve_alpha(target, simple_example(), Z)


class TestSolvePi:
    def test_pi_sweep_median(self):
        row = solve_pi(0.5, simple_example(alpha=1.0), Z)
        assert abs(row.threshold - 0.2228) <= 2e-3
        assert abs(row.delta_id - 1.78) <= 0.05

    def test_pi_sweep_low_needs_unrounded(self):
        row = solve_pi(0.1, simple_example(alpha=1.0), Z)
        assert abs(row.threshold - 0.6095) <= 2e-3
        # the rounded two-decimal coefficients land visibly lower
        rounded = ((1.96 - normal.ppf(0.1)) / (321.54 - 317.38)) ** 2
        assert abs(rounded - 0.607) <= 1e-3

    def test_alpha_one_closed_form(self):
        c = 8 / simple_example().base_se
        for t in (0.2, 0.6):
            expected = ((1.96 - normal.ppf(t)) / c) ** 2
            assert np.isclose(solve_pi(t, simple_example(alpha=1.0), Z).threshold, expected, rtol=1e-12)

    def test_infeasible_is_a_row(self):
        # at alpha = 1 the PEV at pi_r = 1 is 0.0142; no pi_r can push it lower
        row = solve_pi(0.01, simple_example(alpha=1.0), Z)
        assert row.status == "infeasible"
        assert row.threshold is None
        assert not row.feasible

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.02, 0.98), st.floats(0.990, 1.003))
    def test_round_trip(self, target, alpha):
        row = solve_pi(target, simple_example(alpha=alpha), Z)
        if row.feasible:
            scn = simple_example(alpha, row.threshold)
            assert abs(model_probit(scn) - normal.ppf(target)) <= 1e-6
            assert 0 < row.threshold <= 1

    def test_two_roots_flagged(self):
        # for 1 < alpha < 1 + d/Yc the probit peaks inside (0, 1), so a target just under the peak has two roots
        alpha = 1.002
        scn = simple_example(alpha=alpha)
        model = SimpleProbitModel.build(scn, Z)
        grid = np.linspace(1e-3, 1, 2000)
        vals = np.array([model(alpha, g) for g in grid])
        peak = grid[vals.argmax()]
        target = float(normal.cdf(vals.max() - 0.3))
        row = solve_pi(target, scn, Z)
        assert row.feasible
        assert any("second root" in note for note in row.notes)
        assert abs(model(alpha, row.threshold) - normal.ppf(target)) <= 1e-6
        # the reported root is the one past which the PEV stays below target
        assert row.threshold > peak


class TestSolveNUn:
    def test_n_un_sweep_median(self):
        row = solve_n_un(0.5, regression_example(), Z)
        assert row.threshold == 91
        assert abs(row.delta_id - 1.89) <= 0.02

    def test_n_un_sweep_low(self):
        row = solve_n_un(0.1, regression_example(), Z)
        assert row.threshold == 36
        assert abs(row.delta_id - 4.00) <= 0.02

    def test_infeasible_below_start(self):
        row = solve_n_un(0.001, regression_example(), Z)
        assert row.status == "infeasible"

    def test_never_reaches_target_within_cap(self):
        scn = RegressionScenario(regression_example().observed, regression_example().observed, 32.0)
        row = solve_n_un(0.5, scn, Z, cap=1000)
        assert row.status == "infeasible"

    @pytest.mark.parametrize("target", DEFAULT_GRID)
    def test_integer_semantics(self, target):
        scn = regression_example()
        n = solve_n_un(target, scn, Z).threshold
        q = normal.ppf(target)
        assert probit_pev_reg(scn, n, Z) < q <= probit_pev_reg(scn, n + 1, Z)

    def test_non_monotone_reports_crossings(self):
        # the PEV peaks near n_un = 700, between two doubling probes, then falls again
        scn, rule = humped_scenario()
        probits = probit_pev_reg_many(scn, np.arange(5001), rule)
        q = probits.max() - 0.001
        row = solve_n_un(float(normal.cdf(q)), scn, rule, cap=5000)
        assert row.feasible
        assert len(row.crossings) == 2
        n = row.threshold
        assert probits[n] < q <= probits[n + 1]
        assert row.crossings == tuple(int(i) for i in np.nonzero(np.diff(probits < q))[0])

    def test_non_monotone_never_reaching_target(self):
        scn, rule = humped_scenario()
        peak = probit_pev_reg_many(scn, np.arange(5001), rule).max()
        row = solve_n_un(float(normal.cdf(peak + 0.1)), scn, rule, cap=5000)
        assert row.status == "infeasible"
        assert "not monotone" in row.notes[0]


class TestSolveGeneric:
    def test_identity(self):
        assert abs(solve_generic(lambda x: x, 0.5, (-1, 1))) <= 1e-10

    def test_no_sign_change(self):
        with pytest.raises(NoSignChange):
            solve_generic(lambda x: x, 0.5, (1, 2))

    def test_bad_bracket(self):
        with pytest.raises(ValueError):
            solve_generic(lambda x: x, 0.5, (2, 1))

    @pytest.mark.parametrize("target", [0.1, 0.5, 0.9])
    def test_matches_solve_alpha(self, target):
        closed = solve_alpha(target, simple_example(pi_r=0.46), Z).threshold
        generic = solve_generic(lambda a: model_probit(simple_example(a, 0.46)), target, (0.9, 1.1))
        assert abs(generic - closed) <= 1e-9

    @pytest.mark.parametrize("target", [0.1, 0.5, 0.9])
    def test_matches_solve_pi(self, target):
        closed = solve_pi(target, simple_example(alpha=1.0), Z).threshold
        generic = solve_generic(lambda p: model_probit(simple_example(1.0, p)), target, (1e-6, 1.0))
        assert abs(generic - closed) <= 1e-6


class TestSweep:
    def test_alpha_sweep(self):
        rows = sweep(DEFAULT_GRID, FocalParameter("alpha"), simple_example(pi_r=0.46), Z)
        assert [r.pev_target for r in rows] == list(DEFAULT_GRID)
        alphas = [r.threshold for r in rows]
        assert all(np.diff(alphas) < 0)
        assert all(np.diff([r.delta_id for r in rows]) < 0)

    def test_pi_sweep_monotone(self):
        rows = sweep(DEFAULT_GRID, FocalParameter("pi_r"), simple_example(alpha=1.0), Z)
        assert all(np.diff([r.threshold for r in rows]) < 0)
        assert all(np.diff([r.delta_id for r in rows]) < 0)

    def test_n_un_sweep(self):
        rows = sweep(DEFAULT_GRID, FocalParameter("n_un"), regression_example(), Z)
        assert [r.threshold for r in rows] == [36, 51, 64, 77, 91, 107, 126, 152, 195]
        assert all(np.diff([r.delta_id for r in rows]) < 0)

    def test_empty(self):
        assert sweep([], FocalParameter("alpha"), simple_example(), Z) == []

    def test_errors_stay_in_row(self):
        rows = sweep([0.5, 1.5], FocalParameter("alpha"), simple_example(pi_r=0.46), Z)
        assert rows[0].feasible
        assert rows[1].status == "error"

    def test_wrong_scenario_kind(self):
        rows = sweep([0.5], FocalParameter("n_un"), simple_example(), Z)
        assert rows[0].status == "error"

    def test_custom_simple(self):
        focal = FocalParameter("custom", "ybar_c_un", (600.0, 620.0))
        rows = sweep([0.5], focal, simple_example(alpha=0.9966, pi_r=0.46), Z)
        row = rows[0]
        assert row.feasible
        scn = simple_example(0.9966, 0.46)
        assert abs(model_probit(replace(scn, ybar_c_un=row.threshold)) - 0.0) <= 1e-6

    def test_custom_regression(self):
        focal = FocalParameter("custom", "cov:W,Y", (-1.0, 2.33))
        scn = regression_example(91)
        row = sweep([0.3], focal, scn, Z)[0]
        assert row.feasible
        moved = RegressionScenario(scn.observed, scn.unobserved.with_entry("cov", "W", "Y", value=row.threshold), 32.0)
        assert abs(probit_pev_reg(moved, None, Z) - normal.ppf(0.3)) <= 1e-6

    def test_custom_no_crossing_is_infeasible(self):
        focal = FocalParameter("custom", "cov:W,Y", (0.0, 0.1))
        row = sweep([0.01], focal, regression_example(91), Z)[0]
        assert row.status == "infeasible"

    def test_focal_validation(self):
        with pytest.raises(ValueError):
            FocalParameter("beta")
        with pytest.raises(ValueError):
            FocalParameter("custom")


class TestBound:
    def test_pi_interval(self):
        b = bound_pev((0.2, 0.5), FocalParameter("pi_r"), simple_example(alpha=1.0), Z)
        assert abs(b.pev[0] - 0.16) <= 5e-3
        assert abs(b.pev[1] - 0.54) <= 5e-3
        assert abs(b.delta_id[0] - 1.6) <= 0.01
        assert abs(b.delta_id[1] - 4.0) <= 0.01
        assert b.monotone

    def test_degenerate_interval(self):
        b = bound_pev((0.3, 0.3), FocalParameter("pi_r"), simple_example(alpha=1.0), Z)
        assert b.pev[0] == b.pev[1]

    def test_n_un_interval(self):
        b = bound_pev((36, 91), FocalParameter("n_un"), regression_example(), Z)
        assert abs(b.pev[0] - 0.1) <= 0.01
        assert abs(b.pev[1] - 0.5) <= 0.01

    def test_non_monotone_envelope(self):
        scn, rule = humped_scenario()
        b = bound_pev((0, 2000), FocalParameter("n_un"), scn, rule)
        pevs = normal.cdf(probit_pev_reg_many(scn, np.arange(2001), rule))
        assert not b.monotone
        assert b.pev[0] == pytest.approx(pevs.min(), abs=1e-12)
        assert b.pev[1] == pytest.approx(pevs.max(), abs=1e-5)
        assert b.pev[1] > max(pevs[0], pevs[-1])

    def test_reversed_interval(self):
        with pytest.raises(ValueError):
            bound_pev((0.5, 0.2), FocalParameter("pi_r"), simple_example(), Z)


class TestThresholdRow:
    def test_default_feasible(self):
        assert ThresholdRow(0.5, 1.0).feasible
