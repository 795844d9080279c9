import numpy as np
import pytest

from pmflab.core import Counts, LossExponent, Pmf
from pmflab.estimators import add_constant_l2_risk
from pmflab.game import (
    GameBracket,
    NatureStrategy,
    bayes_response,
    fictitious_play,
    geometric_sizes,
    nature_best_response,
    solution_from_json,
    solution_to_json,
    solve_risk_table,
)
from pmflab.risk import worst_case_risk

L2 = LossExponent(2.0)


class TestNatureStrategy:
    def test_uniform_atom(self):
        prior = NatureStrategy.uniform_atom(3)
        assert prior.k == 3
        assert prior.weights.tolist() == [1.0]

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            NatureStrategy(((0.5, Pmf.uniform(2)), (0.4, Pmf.point_mass(2, 0))))

    def test_duplicate_atoms_rejected(self):
        atoms = ((0.5, Pmf.uniform(2)), (0.5, Pmf(np.array([0.5, 0.5]))))
        with pytest.raises(ValueError):
            NatureStrategy(atoms)

    def test_negative_weight_rejected(self):
        atoms = ((1.5, Pmf.uniform(2)), (-0.5, Pmf.point_mass(2, 0)))
        with pytest.raises(ValueError):
            NatureStrategy(atoms)


class TestGameBracket:
    def test_orders_enforced(self):
        with pytest.raises(ValueError):
            GameBracket(0.5, 0.4, 3, True)

    def test_contains_and_width(self):
        br = GameBracket(0.1, 0.2, 5, False)
        assert br.contains(0.15)
        assert not br.contains(0.25)
        assert br.width == pytest.approx(0.1)
        assert br.midpoint == pytest.approx(0.15)


class TestBayesResponse:
    def test_single_atom_returns_the_atom(self):
        atom = Pmf(np.array([0.3, 0.7]))
        table = bayes_response(NatureStrategy(((1.0, atom),)), 2, L2)
        assert np.allclose(table.estimates, [0.3, 0.7])

    def test_two_atoms_posterior_mean_at_n0(self):
        atoms = ((0.5, Pmf(np.array([0.2, 0.8]))), (0.5, Pmf(np.array([0.6, 0.4]))))
        table = bayes_response(NatureStrategy(atoms), 0, L2)
        assert np.allclose(table.estimates[0], [0.4, 0.6])

    def test_p4_symmetric_prior_gives_center(self):
        # matches a 1-D grid minimization of the two-atom l4 objective
        atoms = ((0.5, Pmf(np.array([0.2, 0.8]))), (0.5, Pmf(np.array([0.8, 0.2]))))
        table = bayes_response(NatureStrategy(atoms), 0, LossExponent(4.0))
        assert np.allclose(table.estimates[0], [0.5, 0.5], atol=1e-9)

    def test_unreachable_outcome_gets_uniform(self):
        # the atom never produces symbol 1, so outcome (0, 3) has no posterior
        table = bayes_response(NatureStrategy(((1.0, Pmf.point_mass(2, 0)),)), 3, L2)
        row = table(Counts(np.array([0, 3])))
        assert np.allclose(row.probs, 0.5)

    def test_k3_descent_path_symmetric(self):
        loss = LossExponent(3.0)
        atoms = tuple((1 / 3, Pmf(np.roll([0.6, 0.2, 0.2], i))) for i in range(3))
        table = bayes_response(NatureStrategy(atoms), 0, loss)
        assert np.allclose(table.estimates[0], 1 / 3, atol=1e-6)

    def test_nature_best_response_delegates(self):
        prior = NatureStrategy.uniform_atom(2)
        est = bayes_response(prior, 2, L2)
        direct = worst_case_risk(est, 2, L2)
        via_game = nature_best_response(est, 2, L2)
        assert via_game.risk.value == pytest.approx(direct.risk.value, abs=1e-12)


class TestFictitiousPlay:
    def test_n1_closed_form(self):
        bracket, est = fictitious_play(2, 1, L2, max_iters=500, tol=0.005 * 0.125)
        assert bracket.contains(0.125)
        assert bracket.width < 0.005
        assert est.n == 1

    def test_n0_closed_form(self):
        bracket, _ = fictitious_play(2, 0, L2, max_iters=500, tol=0.02)
        assert bracket.contains(0.5) or abs(bracket.upper - 0.5) < 1e-9
        assert bracket.width <= 0.02 + 1e-12

    def test_bracket_ordering_always(self):
        for n in (0, 1, 3):
            bracket, _ = fictitious_play(2, n, L2, max_iters=40, tol=1e-9)
            assert bracket.lower <= bracket.upper + 1e-9

    def test_upper_is_achieved_by_returned_estimator(self):
        bracket, est = fictitious_play(2, 2, L2, max_iters=60, tol=1e-4)
        replay = worst_case_risk(est, 2, L2)
        assert replay.risk.value == pytest.approx(bracket.upper, abs=1e-9)

    def test_closed_form_containment_small_sizes(self):
        for k in (2, 3):
            for n in (0, 1, 2):
                truth = add_constant_l2_risk(n, k)
                bracket, _ = fictitious_play(k, n, L2, max_iters=500, tol=0.04 * truth)
                assert bracket.contains(truth), (k, n, bracket)
                assert bracket.width <= 0.05 * truth

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            fictitious_play(1, 2, L2)
        with pytest.raises(ValueError):
            fictitious_play(2, -1, L2)


class TestGeometricSizes:
    def test_dense_then_geometric(self):
        sizes = geometric_sizes(100, dense_upto=8, ratio=1.5)
        assert sizes[:9] == tuple(range(9))
        assert sizes[-1] == 100
        assert list(sizes) == sorted(set(sizes))

    def test_small_max_is_fully_dense(self):
        assert geometric_sizes(5) == (0, 1, 2, 3, 4, 5)


class TestSolveRiskTable:
    def test_exact_closed_form_containment(self):
        solved = solve_risk_table(2, 8, L2, max_iters=200, rel_tol=0.05)
        table = solved.table
        lo, hi = table.lower(), table.upper()
        for n in range(9):
            truth = add_constant_l2_risk(n, 2)
            assert lo[n] - 1e-9 <= truth <= hi[n] + 1e-9, (n, lo[n], hi[n])
        assert table.max_n == 8

    def test_monotone_midpoints(self):
        solved = solve_risk_table(2, 8, L2, max_iters=200, rel_tol=0.05)
        values = solved.table.values
        assert all(values[i + 1] <= values[i] + 1e-9 for i in range(8))

    def test_sparse_sizes_fill_gaps(self):
        solved = solve_risk_table(2, 12, L2, sizes=[0, 1, 2, 4, 8, 12], max_iters=200, rel_tol=0.05)
        assert len(solved.table) == 13
        assert set(solved.brackets) == {0, 1, 2, 4, 8, 12}
        # filled entries carry the neighbor bracket, hence nonzero width
        assert solved.table.widths[3] > 0

    def test_sizes_must_cover_range(self):
        with pytest.raises(ValueError):
            solve_risk_table(2, 8, L2, sizes=[1, 2, 8])

    def test_serialization_roundtrip(self):
        solved = solve_risk_table(2, 6, L2, sizes=[0, 1, 2, 4, 6], max_iters=150, rel_tol=0.05)
        doc = solution_to_json(solved)
        assert doc["kind"] == "game-table-family"
        back = solution_from_json(doc)
        assert np.allclose(back.table.values, solved.table.values)
        assert np.allclose(back.table.widths, solved.table.widths)
        assert set(back.estimators) == set(solved.estimators)
        for n, est in solved.estimators.items():
            assert np.allclose(back.estimators[n].estimates, est.estimates)
            assert back.brackets[n].lower == pytest.approx(solved.brackets[n].lower)
