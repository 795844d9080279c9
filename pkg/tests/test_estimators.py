import numpy as np
import pytest

from pmflab.core import Counts, JointCounts, LossExponent, Pmf, ShapeMismatch
from pmflab.estimators import (
    AddConstantL2Estimator,
    EmptySample,
    GameTableEstimator,
    MleEstimator,
    UniformEstimator,
    add_constant_family,
    add_constant_l2,
    add_constant_l2_risk,
    conditional_composition,
    game_family,
    joint_composition,
    mle,
    mle_family,
    mle_l2_risk,
    uniform_family,
    zero_sample_estimate,
)
from pmflab.risk import exact_risk_univariate


class TestMle:
    def test_frequencies(self):
        assert mle(Counts(np.array([2, 1, 1]))).probs.tolist() == [0.5, 0.25, 0.25]

    def test_empty_sample_raises(self):
        with pytest.raises(EmptySample):
            mle(Counts(np.array([0, 0])))

    def test_batch_matches_single(self):
        est = MleEstimator(3)
        rows = np.array([[1, 0, 2], [0, 4, 0]])
        got = est.estimate_batch(rows)
        assert np.allclose(got[0], [1 / 3, 0, 2 / 3])
        assert np.allclose(got[1], [0, 1, 0])


class TestAddConstant:
    def test_formula_hand_value(self):
        # n = 4, k = 2: (c + 1) / (4 + 2) with c = sqrt(4)/2 = 1
        got = add_constant_l2(Counts(np.array([3, 1])))
        assert np.allclose(got.probs, [4 / 6, 2 / 6])

    def test_zero_sample_is_uniform(self):
        got = AddConstantL2Estimator(3)(Counts.zeros(3))
        assert np.allclose(got.probs, 1 / 3)

    def test_closed_form_risk_value(self):
        assert add_constant_l2_risk(4, 2) == pytest.approx(1 / 18, abs=1e-15)
        assert add_constant_l2_risk(0, 2) == pytest.approx(0.5)

    def test_risk_flat_across_truths(self):
        # the value 1/18 at n=4, k=2 must show up at every truth
        loss = LossExponent(2.0)
        est = AddConstantL2Estimator(2)
        for truth in ([0.5, 0.5], [0.9, 0.1], [1.0, 0.0]):
            got = exact_risk_univariate(est, Pmf(np.array(truth)), 4, loss)
            assert got.value == pytest.approx(1 / 18, abs=1e-12)


class TestMleRisk:
    def test_closed_form(self):
        truth = Pmf(np.array([0.7, 0.3]))
        assert mle_l2_risk(truth, 5) == pytest.approx(0.42 / 5)

    def test_needs_samples(self):
        with pytest.raises(ValueError):
            mle_l2_risk(Pmf.uniform(2), 0)


class TestGameTable:
    def test_lookup(self):
        outcomes = np.array([[2, 0], [1, 1], [0, 2]])
        estimates = np.array([[0.8, 0.2], [0.5, 0.5], [0.2, 0.8]])
        est = GameTableEstimator(2, 2, outcomes, estimates)
        assert est(Counts(np.array([1, 1]))).probs.tolist() == [0.5, 0.5]

    def test_incomplete_coverage_rejected(self):
        with pytest.raises(ValueError, match="cover all"):
            GameTableEstimator(2, 2, np.array([[2, 0]]), np.array([[1.0, 0.0]]))

    def test_wrong_total_rejected(self):
        outcomes = np.array([[1, 0], [0, 1], [2, 0]])
        estimates = np.full((3, 2), 0.5)
        with pytest.raises(ValueError):
            GameTableEstimator(2, 1, outcomes, estimates)


class TestFamilies:
    def test_mle_family_zero_size_falls_back_to_uniform(self):
        fam = mle_family(3)
        assert isinstance(fam.at(0), UniformEstimator)
        assert isinstance(fam.at(2), MleEstimator)

    def test_at_caches(self):
        fam = add_constant_family(2)
        assert fam.at(5) is fam.at(5)

    def test_uniform_family(self):
        est = uniform_family(4).at(9)
        assert np.allclose(est(Counts(np.array([9, 0, 0, 0]))).probs, 0.25)

    def test_game_family_missing_size(self):
        outcomes = np.array([[1, 0], [0, 1]])
        tables = {1: GameTableEstimator(2, 1, outcomes, np.full((2, 2), 0.5))}
        fam = game_family(tables)
        assert fam.at(1).n == 1
        with pytest.raises(KeyError):
            fam.at(2)

    def test_zero_sample_estimate(self):
        assert np.allclose(zero_sample_estimate(5).probs, 0.2)


class TestConditionalComposition:
    def test_identity_slices(self):
        labeled = JointCounts(np.array([[1, 0], [0, 1]]))
        rows = conditional_composition(mle_family(2), labeled)
        assert rows.matrix.tolist() == [[1.0, 0.0], [0.0, 1.0]]

    def test_empty_slice_gets_uniform(self):
        labeled = JointCounts(np.array([[3, 1], [0, 0]]))
        rows = conditional_composition(mle_family(2), labeled)
        assert rows.rows[0].probs.tolist() == [0.75, 0.25]
        assert rows.rows[1].probs.tolist() == [0.5, 0.5]

    def test_locality(self):
        # touching slice 1 must leave row 0 bit-identical
        fam = add_constant_family(2)
        before = conditional_composition(fam, JointCounts(np.array([[2, 1], [0, 1]])))
        after = conditional_composition(fam, JointCounts(np.array([[2, 1], [4, 2]])))
        assert np.array_equal(before.rows[0].probs, after.rows[0].probs)

    def test_alphabet_mismatch(self):
        with pytest.raises(ShapeMismatch):
            conditional_composition(mle_family(3), JointCounts(np.array([[1, 0], [0, 1]])))


class TestJointComposition:
    def test_pooled_marginal_example(self):
        # unlabeled (2,0) + labeled x-counts (1,1) -> marginal (3/4, 1/4)
        unlabeled = Counts(np.array([2, 0]))
        labeled = JointCounts(np.array([[1, 0], [0, 1]]))
        joint = joint_composition(mle_family(2), unlabeled, labeled)
        assert np.allclose(joint.probs, [[0.75, 0.0], [0.0, 0.25]])

    def test_degenerate_marginal(self):
        unlabeled = Counts(np.array([0, 0]))
        labeled = JointCounts(np.array([[5, 0], [0, 0]]))
        joint = joint_composition(mle_family(2), unlabeled, labeled)
        assert np.allclose(joint.marginal_x().probs, [1.0, 0.0])

    def test_output_is_valid_joint(self):
        rng = np.random.default_rng(5)
        fam = add_constant_family(3)
        for _ in range(50):
            labeled = JointCounts(rng.multinomial(8, np.full(6, 1 / 6)).reshape(2, 3))
            unlabeled = Counts(rng.multinomial(5, [0.5, 0.5]))
            joint = joint_composition(fam, unlabeled, labeled)
            assert joint.probs.sum() == pytest.approx(1.0, abs=1e-12)
            assert joint.probs.min() >= 0.0

    def test_marginal_consistency(self):
        unlabeled = Counts(np.array([3, 1]))
        labeled = JointCounts(np.array([[0, 2], [1, 1]]))
        joint = joint_composition(add_constant_family(2), unlabeled, labeled)
        pooled = np.array([5, 3]) / 8
        assert np.allclose(joint.marginal_x().probs, pooled, atol=1e-12)

    def test_both_empty_raises(self):
        with pytest.raises(EmptySample):
            joint_composition(mle_family(2), Counts.zeros(2), JointCounts.zeros(2, 2))
