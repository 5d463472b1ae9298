import math
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest

from conftest import random_dataset
from toolwear.forest import Forest, Hyperparams, train
from toolwear.shapley import (CallableValue, InterventionalValue,
                              RetrainingValue, ShapleyExplanation, explain,
                              explain_class, global_importance,
                              shapley_weight, shapley_weight_exact,
                              train_subset_models, value_interventional,
                              value_retraining)


def permutation_oracle(value_fn, m, x):
    """Average marginal contribution over all m! feature orderings."""
    phi = [0.0] * m
    for perm in permutations(range(m)):
        mask = 0
        for i in perm:
            before = value_fn.value(mask, x)
            mask |= 1 << i
            phi[i] += value_fn.value(mask, x) - before
    fact = math.factorial(m)
    return np.array(phi) / fact


def random_table_value(rng, m):
    table = rng.random(1 << m)
    return CallableValue(lambda mask, x: table[mask], m)


def symmetric_table_value(rng, m, i, j):
    """Random set function symmetric in players i and j: the value depends
    only on how many of {i, j} are present, not which."""
    others = [k for k in range(m) if k not in (i, j)]
    base = rng.random(1 << len(others))
    bonus = rng.random(3)

    def fn(mask, x):
        sub = 0
        for pos, k in enumerate(others):
            if mask >> k & 1:
                sub |= 1 << pos
        count_ij = (mask >> i & 1) + (mask >> j & 1)
        return base[sub] + bonus[count_ij]

    return CallableValue(fn, m)


class TestWeights:
    def test_m7_values(self):
        assert shapley_weight_exact(7, 0) == Fraction(1, 7)
        assert shapley_weight_exact(7, 3) == Fraction(1, 140)
        assert shapley_weight(7, 0) == pytest.approx(1 / 7)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            shapley_weight_exact(7, 7)
        with pytest.raises(ValueError):
            shapley_weight_exact(7, -1)
        with pytest.raises(ValueError):
            shapley_weight_exact(0, 0)

    def test_layer_identity_exact(self):
        # each coalition-size layer contributes exactly 1/m, all of them 1
        for m in range(1, 11):
            total = Fraction(0)
            for s in range(m):
                layer = math.comb(m - 1, s) * shapley_weight_exact(m, s)
                assert layer == Fraction(1, m)
                total += layer
            assert total == 1


class TestInterventionalValue:
    @pytest.fixture()
    def model_and_background(self):
        rng = np.random.default_rng(6)
        ds = random_dataset(rng, n=40, m=4)
        model = train(ds, Hyperparams(tree_count=15), seed=9)
        return model, ds.X[:12]

    def test_full_coalition_is_model_output(self, model_and_background):
        model, bg = model_and_background
        full = (1 << model.m) - 1
        x = np.array([0.3, -1.0, 0.2, 2.0])
        v = value_interventional(model, x, full, bg)
        assert v == model.vote_fraction(x)
        other_bg = bg[:3] + 5.0
        assert value_interventional(model, x, full, other_bg) == v

    def test_empty_coalition_ignores_instance(self, model_and_background):
        model, bg = model_and_background
        iv = InterventionalValue(model, bg)
        a = iv.value(0, np.zeros(4))
        b = iv.value(0, np.full(4, 100.0))
        assert a == b
        mean_fraction = float(np.mean(model.vote_fractions(bg)))
        assert a == pytest.approx(mean_fraction, abs=1e-12)

    def test_stump_hand_case(self):
        # stump on feature 1; background rows straddle the threshold
        stump = ("split", 1, 10.0, ("leaf", 3, 0), ("leaf", 0, 3))
        model = Forest.from_trees([stump], m=2)
        bg = np.array([[0.0, 5.0], [0.0, 15.0]])
        x = np.array([99.0, 12.0])
        iv = InterventionalValue(model, bg)
        # feature 1 pinned from x: both hybrids go right -> vote 1
        assert iv.value(0b10, x) == 1.0
        # feature 1 marginalized: one hybrid each side -> mean 0.5
        assert iv.value(0b01, x) == 0.5
        assert iv.value(0b00, x) == 0.5

    def test_empty_background_errors(self, model_and_background):
        model, _ = model_and_background
        with pytest.raises(ValueError, match="empty"):
            InterventionalValue(model, np.empty((0, 4)))


class TestRetrainingValue:
    def test_table_sizes(self):
        rng = np.random.default_rng(14)
        ds1 = random_dataset(rng, n=20, m=1)
        table = train_subset_models(ds1, Hyperparams(tree_count=4), seed=3)
        assert len(table.models) == 1  # plus the empty-coalition constant
        ds7 = random_dataset(rng, n=20, m=7)
        table7 = train_subset_models(ds7, Hyperparams(tree_count=2), seed=3)
        assert len(table7.models) == 127
        assert sorted(table7.models) == list(range(1, 128))

    def test_empty_and_full_values(self):
        rng = np.random.default_rng(15)
        ds = random_dataset(rng, n=24, m=3)
        table = train_subset_models(ds, Hyperparams(tree_count=6), seed=8)
        rv = RetrainingValue(table)
        x = rng.normal(size=3)
        c1 = int(ds.y.sum())
        assert rv.value(0, x) == c1 / ds.n
        full = 0b111
        assert rv.value(full, x) == table.models[full].vote_fraction(x)

    def test_uninformative_feature_does_not_change_value(self):
        # feature 1 constant; deterministic purity-grown forests must agree
        rng = np.random.default_rng(16)
        X = np.column_stack([rng.normal(size=30), np.full(30, 2.0)])
        y = (X[:, 0] > 0).astype(int)
        from toolwear.signalprep import LabeledDataset
        ds = LabeledDataset(["a", "b"], X, y)
        hp = Hyperparams(tree_count=5, bootstrap=False, features_per_split=2)
        table = train_subset_models(ds, hp, seed=4)
        rv = RetrainingValue(table)
        for x in rng.normal(size=(20, 2)) * 3:
            assert rv.value(0b01, x) == rv.value(0b11, x)

    def test_determinism(self):
        rng = np.random.default_rng(17)
        ds = random_dataset(rng, n=22, m=3)
        hp = Hyperparams(tree_count=4)
        a = train_subset_models(ds, hp, seed=5)
        b = train_subset_models(ds, hp, seed=5)
        for mask in a.models:
            assert a.models[mask].structurally_equal(b.models[mask])

    def test_feature_cap(self):
        rng = np.random.default_rng(18)
        ds = random_dataset(rng, n=40, m=17)
        with pytest.raises(ValueError, match="capped"):
            train_subset_models(ds, Hyperparams(tree_count=1), seed=0)

    def test_missing_mask_errors(self):
        rng = np.random.default_rng(19)
        ds = random_dataset(rng, n=20, m=2)
        table = train_subset_models(ds, Hyperparams(tree_count=2), seed=1)
        del table.models[2]
        with pytest.raises(KeyError, match="no model"):
            value_retraining(table, np.zeros(2), 2)


class TestExplain:
    def test_constant_model(self):
        model = Forest.from_trees([("leaf", 0, 3)], m=3)
        bg = np.zeros((4, 3))
        expl = explain(InterventionalValue(model, bg), np.ones(3))
        assert np.array_equal(expl.phi, np.zeros(3))
        assert expl.base_value == 1.0
        assert expl.explained_output == 1.0

    def test_stump_gets_single_attribution(self):
        stump = ("split", 2, 0.0, ("leaf", 5, 0), ("leaf", 0, 5))
        model = Forest.from_trees([stump], m=4)
        rng = np.random.default_rng(20)
        bg = rng.normal(size=(10, 4))
        iv = InterventionalValue(model, bg)
        x = np.array([1.0, 1.0, 2.0, 1.0])
        expl = explain(iv, x)
        for i in (0, 1, 3):
            assert expl.phi[i] == 0.0  # dummy features: exactly zero
        v_full = iv.value(0b1111, x)
        v_empty = iv.value(0, x)
        assert expl.phi[2] == pytest.approx(v_full - v_empty, abs=1e-12)

    def test_efficiency_random_models(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            m = int(rng.integers(1, 6))
            ds = random_dataset(rng, n=25, m=m)
            model = train(ds, Hyperparams(tree_count=8), seed=2)
            iv = InterventionalValue(model, ds.X)
            x = rng.normal(size=m)
            expl = explain(iv, x)
            resid = expl.base_value + expl.phi.sum() - expl.explained_output
            assert abs(resid) <= 1e-9

    def test_each_mask_evaluated_exactly_once(self):
        m = 5
        calls = []

        def fn(mask, x):
            calls.append(mask)
            return float(mask % 3)

        explain(CallableValue(fn, m), np.zeros(m))
        assert len(calls) == 1 << m
        assert sorted(calls) == list(range(1 << m))

    def test_additivity_enforced_at_construction(self):
        with pytest.raises(ValueError, match="additivity"):
            ShapleyExplanation(base_value=0.0, phi=np.array([0.5]),
                               explained_output=0.0)

    def test_feature_cap(self):
        with pytest.raises(ValueError, match="capped"):
            explain(CallableValue(lambda mask, x: 0.0, 17), np.zeros(17))


class TestExplainClass:
    def test_affine_complement_example(self):
        expl = ShapleyExplanation(base_value=0.4, phi=np.array([0.2, -0.1]),
                                  explained_output=0.5)
        flipped = explain_class(expl, 0)
        assert flipped.base_value == pytest.approx(0.6)
        assert flipped.phi == pytest.approx([-0.2, 0.1])
        assert flipped.explained_output == pytest.approx(0.5)
        assert flipped.target_class == 0
        # efficiency identity: 0.6 + (-0.2 + 0.1) == 1 - (0.4 + 0.2 - 0.1)
        assert flipped.base_value + flipped.phi.sum() == pytest.approx(
            1.0 - (expl.base_value + expl.phi.sum()))

    def test_involution(self):
        expl = ShapleyExplanation(base_value=0.3, phi=np.array([0.1, 0.2]),
                                  explained_output=0.6)
        back = explain_class(explain_class(expl, 0), 1)
        assert back.base_value == pytest.approx(expl.base_value)
        assert back.phi == pytest.approx(expl.phi)
        assert back.target_class == 1

    def test_identity_when_same_class(self):
        expl = ShapleyExplanation(base_value=0.3, phi=np.array([0.3]),
                                  explained_output=0.6)
        assert explain_class(expl, 1) is expl


class TestGlobalImportance:
    def make(self, phis):
        return [ShapleyExplanation(base_value=0.0, phi=np.array(p),
                                   explained_output=float(np.sum(p)))
                for p in phis]

    def test_single_explanation_ranking(self):
        names = ["ax", "ay", "az", "s1", "s2", "theta", "rpm"]
        expl = self.make([[0, 0, 0, 0, 0, 0.5, 0]])
        gi = global_importance(expl, names)
        assert gi.ranking[0] == 5
        assert names[gi.ranking[0]] == "theta"

    def test_absolute_values_not_signed_mean(self):
        expl = self.make([[0.3, 0.0], [-0.3, 0.0]])
        gi = global_importance(expl, ["a", "b"])
        assert gi.mean_abs_phi[0] == pytest.approx(0.3)

    def test_tie_broken_by_index(self):
        expl = self.make([[0.2, 0.2, 0.1]])
        gi = global_importance(expl, ["a", "b", "c"])
        assert gi.ranking == [0, 1, 2]

    def test_empty_errors(self):
        with pytest.raises(ValueError, match="no explanations"):
            global_importance([], ["a"])


class TestAxioms:
    def test_symmetry(self):
        rng = np.random.default_rng(30)
        for _ in range(20):
            m = int(rng.integers(2, 7))
            i, j = rng.choice(m, size=2, replace=False)
            vf = symmetric_table_value(rng, m, int(i), int(j))
            expl = explain(vf, np.zeros(m))
            assert abs(expl.phi[i] - expl.phi[j]) <= 1e-9

    def test_dummy_is_exactly_zero(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            m = int(rng.integers(2, 6))
            dead = int(rng.integers(0, m))
            ds = random_dataset(rng, n=25, m=m, constant_col=dead)
            model = train(ds, Hyperparams(tree_count=10), seed=6)
            expl = explain(InterventionalValue(model, ds.X),
                           rng.normal(size=m))
            assert expl.phi[dead] == 0.0

    def test_linearity(self):
        rng = np.random.default_rng(32)
        for _ in range(15):
            m = int(rng.integers(1, 6))
            v1 = random_table_value(rng, m)
            v2 = random_table_value(rng, m)
            a, b = rng.normal(size=2) * 3
            combo = CallableValue(
                lambda mask, x: a * v1.fn(mask, x) + b * v2.fn(mask, x), m)
            x = np.zeros(m)
            p1 = explain(v1, x).phi
            p2 = explain(v2, x).phi
            pc = explain(combo, x).phi
            assert np.allclose(pc, a * p1 + b * p2, rtol=0, atol=1e-9)

    def test_matches_permutation_oracle(self):
        rng = np.random.default_rng(33)
        for _ in range(10):
            m = int(rng.integers(1, 5))
            vf = random_table_value(rng, m)
            x = np.zeros(m)
            expl = explain(vf, x)
            oracle = permutation_oracle(vf, m, x)
            assert np.allclose(expl.phi, oracle, rtol=0, atol=1e-9)
