import math

import numpy as np
import pytest

from pmflab.core import LossExponent, Pmf
from pmflab.estimators import add_constant_l2_risk
from pmflab.asymptotics import (
    RateConstant,
    RiskTable,
    bernstein,
    binomial_tail_bounds,
    exact_l2_risk_table,
    gap_bound,
    mass_risk_curve,
    mle_risk_upper,
    plugin_risk_curve,
    rate_constants,
)
from pmflab.risk import adversarial_marginal_objective

L2 = LossExponent(2.0)


class TestRiskTable:
    def test_entry_window_and_bounds(self):
        table = RiskTable(np.array([0.5, 0.12, 0.06]), np.array([0.0, 0.02, 0.02]), 2, L2)
        lo, hi = table.entry(1)
        assert (lo, hi) == (pytest.approx(0.11), pytest.approx(0.13))
        rows = table.window(1, 2)
        assert [r[0] for r in rows] == [1, 2]
        assert table.max_n == 2 and len(table) == 3

    def test_rejects_increasing_values(self):
        with pytest.raises(ValueError):
            RiskTable(np.array([0.1, 0.3]), np.zeros(2), 2, L2)

    def test_rejects_negative_width(self):
        with pytest.raises(ValueError):
            RiskTable(np.array([0.3, 0.1]), np.array([0.0, -0.1]), 2, L2)

    def test_exact_l2_table(self):
        table = exact_l2_risk_table(16, 3)
        assert np.all(table.widths == 0.0)
        for n in (0, 1, 9, 16):
            assert table.values[n] == pytest.approx(add_constant_l2_risk(n, 3), abs=1e-15)


class TestMassRiskCurve:
    def test_endpoints(self):
        r = np.array([0.5, 0.125, 1 / 18])
        assert mass_risk_curve(0.0, 2, L2, r) == 0.0
        assert mass_risk_curve(1.0, 2, L2, r) == pytest.approx(1 / 18, abs=1e-15)

    def test_hand_computed_value(self):
        r = np.array([0.5, 0.125, 1 / 18])
        got = mass_risk_curve(0.5, 2, L2, r)
        assert got == pytest.approx(0.050347222222, abs=1e-12)

    def test_accepts_risk_table(self):
        table = exact_l2_risk_table(2, 2)
        direct = mass_risk_curve(0.4, 2, L2, table.values)
        assert mass_risk_curve(0.4, 2, L2, table) == pytest.approx(direct, abs=1e-15)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mass_risk_curve(0.5, 3, L2, np.array([0.5, 0.1]))

    def test_matches_adversarial_summand(self):
        r = np.array([add_constant_l2_risk(i, 2) for i in range(5)])
        probs = Pmf(np.array([0.3, 0.25, 0.45]))
        total = adversarial_marginal_objective(probs, r, L2)
        summed = sum(mass_risk_curve(t, 4, L2, r) for t in probs.probs)
        assert total == summed


class TestPluginRiskCurve:
    def test_endpoints(self):
        r = np.array([0.5, 0.125, 1 / 18])
        assert plugin_risk_curve(0.0, 2, L2, r) == 0.0
        assert plugin_risk_curve(1.0, 2, L2, r) == pytest.approx(1 / 18, abs=1e-15)

    def test_gap_to_mass_curve_shrinks_like_sqrt_log(self):
        # |H - G| <= H * c / sqrt(log n) with c = 0.03 on this window
        for n in (50, 100, 200, 400):
            table = exact_l2_risk_table(n, 2)
            h = mass_risk_curve(0.5, n, L2, table)
            g = plugin_risk_curve(0.5, n, L2, table)
            assert abs(h - g) <= h * 0.03 / math.sqrt(math.log(n))


class TestBernstein:
    def test_reproduces_affine(self):
        for x in np.linspace(0, 1, 11):
            got = bernstein(lambda t: 3.0 * t - 1.0, 40, x)
            assert got == pytest.approx(3.0 * x - 1.0, abs=1e-12)

    def test_square_identity(self):
        for x in (0.0, 0.3, 0.5, 0.9, 1.0):
            got = bernstein(lambda t: t * t, 25, x)
            assert got == pytest.approx(x * x + x * (1 - x) / 25, abs=1e-12)

    def test_monotone_in_f(self):
        f = lambda t: t**2
        g = lambda t: t**2 + 0.1
        for x in (0.2, 0.7):
            assert bernstein(f, 30, x) <= bernstein(g, 30, x)

    def test_linear_in_f(self):
        f = lambda t: t**1.5
        g = lambda t: math.sin(t)
        x = 0.4
        combined = bernstein(lambda t: 2 * f(t) + 3 * g(t), 30, x)
        assert combined == pytest.approx(2 * bernstein(f, 30, x) + 3 * bernstein(g, 30, x), abs=1e-12)


class TestBinomialTails:
    def test_zero_deviation(self):
        assert binomial_tail_bounds(10.0, 0.0) == (1.0, 1.0)

    def test_plug_in_values(self):
        lo, hi = binomial_tail_bounds(10.0, 5.0)
        assert lo == pytest.approx(math.exp(-25 / 20), abs=1e-15)
        assert hi == pytest.approx(math.exp(-25 / (2 * (10 + 5 / 3))), abs=1e-15)

    def test_zero_expectation_edges(self):
        assert binomial_tail_bounds(0.0, 0.0) == (1.0, 1.0)
        assert binomial_tail_bounds(0.0, 2.0) == (0.0, 0.0)

    def test_bounded_and_decreasing(self):
        prev = (1.0, 1.0)
        for lam in np.linspace(0, 30, 16):
            pair = binomial_tail_bounds(25.0, float(lam))
            assert pair[0] <= 1.0 and pair[1] <= 1.0
            assert pair[0] <= prev[0] + 1e-15 and pair[1] <= prev[1] + 1e-15
            prev = pair


class TestRateConstants:
    def test_exact_scaling_recovered(self):
        pts = [(n, 0.37 * n**-1.5, 0.37 * n**-1.5) for n in range(4, 20)]
        rc = rate_constants(pts, LossExponent(3.0))
        assert rc.c_inf == pytest.approx(0.37, abs=1e-12)
        assert rc.c_sup == pytest.approx(0.37, abs=1e-12)

    def test_closed_form_window(self):
        pts = [(n, add_constant_l2_risk(n, 2), add_constant_l2_risk(n, 2)) for n in range(16, 65)]
        rc = rate_constants(pts, L2)
        assert rc.c_sup - rc.c_inf < 0.05
        assert 0.3 < rc.c_inf <= rc.c_sup < 0.5

    def test_accepts_risk_table(self):
        rc = rate_constants(exact_l2_risk_table(64, 2), L2)
        assert rc.c_inf <= 64 * add_constant_l2_risk(64, 2) <= rc.c_sup + 1e-12

    def test_needs_enough_points(self):
        pts = [(n, 0.1 / n, 0.1 / n) for n in (1, 2, 3)]
        with pytest.raises(ValueError):
            rate_constants(pts, L2)

    def test_rate_constant_fields(self):
        rc = RateConstant(points=((4, 0.4, 0.5), (8, 0.42, 0.48)), c_inf=0.4, c_sup=0.5)
        assert rc.c_mid == pytest.approx(0.45)
        assert rc.spread == pytest.approx(0.1)


class TestMleRiskUpper:
    def test_p2_hand_value(self):
        # (1/16) * 2 * 2 * gamma(1) = 0.25
        assert mle_risk_upper(8, 2, L2) == pytest.approx(0.25, abs=1e-15)

    def test_dominates_exact_worst_case(self):
        assert 0.5 / 8 <= mle_risk_upper(8, 2, L2)

    def test_p3_gamma_factor(self):
        want = (2 * 4) ** -1.5 * 3 * 2 * math.gamma(1.5)
        assert mle_risk_upper(4, 2, LossExponent(3.0)) == pytest.approx(want, abs=1e-15)

    def test_decreasing_in_n(self):
        vals = [mle_risk_upper(n, 3, LossExponent(2.5)) for n in range(1, 20)]
        assert vals == sorted(vals, reverse=True)


class TestGapBound:
    def test_zero_pooled_risk(self):
        assert gap_bound(0.3, 0.0, L2, 2) == 0.0

    def test_monotone_in_both_arguments(self):
        base = gap_bound(0.2, 0.01, LossExponent(2.5), 2)
        assert gap_bound(0.3, 0.01, LossExponent(2.5), 2) >= base
        assert gap_bound(0.2, 0.02, LossExponent(2.5), 2) >= base

    def test_rate_slope(self):
        ns = [2**e for e in range(6, 15)]
        vals = []
        for n in ns:
            m = max(2, int(round(math.sqrt(n))))
            vals.append(gap_bound(1 / m, 1 / (m + n), L2, 2))
        slope = np.polyfit(np.log(ns), np.log(vals), 1)[0]
        assert slope == pytest.approx(-0.75, abs=0.075)


def _ratio_interval(table, loss, x):
    """Bounds on H / (C (x/n)^{p/2}) honest to the table's bracket widths."""
    n = table.max_n
    rc = rate_constants(table, loss)
    scale = (x / n) ** (loss.p / 2)
    lo = mass_risk_curve(x, n, loss, table.lower()) / (rc.c_sup * scale)
    hi = mass_risk_curve(x, n, loss, table.upper()) / (rc.c_inf * scale)
    mid = mass_risk_curve(x, n, loss, table.values) / (rc.c_mid * scale)
    return lo, mid, hi


class TestConvergenceToRateForm:
    """H_n(x) tracks C_p (x/n)^{p/2} by n = 512, within 10% widened by the
    table's bracket widths."""

    def test_p2_exact_within_ten_percent(self):
        table = exact_l2_risk_table(512, 2)
        for x in (0.3, 0.6, 0.9):
            _, mid, _ = _ratio_interval(table, L2, x)
            assert abs(mid - 1.0) < 0.10, (x, mid)

    @pytest.mark.parametrize("x", [0.3, 0.6, 0.9])
    def test_p3_solved_table(self, solved_table_p3, x):
        loss = LossExponent(3.0)
        lo, mid, hi = _ratio_interval(solved_table_p3.table, loss, x)
        assert lo <= 1.1 and hi >= 0.9, (x, lo, mid, hi)
        assert 0.7 < mid < 1.3

    @pytest.mark.parametrize("x", [0.3, 0.6, 0.9])
    def test_p4_solved_table(self, solved_table_p4, x):
        loss = LossExponent(4.0)
        lo, mid, hi = _ratio_interval(solved_table_p4.table, loss, x)
        assert lo <= 1.1 and hi >= 0.9, (x, lo, mid, hi)
        assert 0.7 < mid < 1.3

    def test_solved_tables_bracket_sane(self, solved_table_p3, solved_table_p4):
        for solved in (solved_table_p3, solved_table_p4):
            table = solved.table
            assert table.max_n == 512
            assert np.all(table.lower() >= 0.0)
            assert np.all(table.upper() <= 2.0)
            # solved sizes converged to the requested relative width
            for n, bracket in solved.brackets.items():
                assert bracket.lower <= bracket.upper + 1e-9
