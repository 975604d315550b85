import numpy as np
import pytest

from plausibility import (INF, Comparison, ConditionedMeasure, CustomMeasure, PreferenceMeasure, ProbabilityMeasure,
                          RankedMeasure, belief_worlds, believes, check_klm, check_qualitative, compare,
                          conditional_holds, from_table, preferential_satisfies, rational_monotonicity_witness,
                          to_table)
from util.errors import CarrierTooLarge

STANDARD = {"11": 0, "10": 1, "01": 1, "00": 2}
DIAMOND = [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")]
BROKEN_DIAMOND = [("a", "b"), ("a", "c"), ("b", "d")]


def all_subsets(elements):
    elements = list(elements)
    return [frozenset(e for i, e in enumerate(elements) if (mask >> i) & 1) for mask in range(1 << len(elements))]


def random_order(rng, size):
    """A random strict partial order: edges only from lower to higher index."""
    matrix = np.triu(rng.random((size, size)) < 0.35, k=1)
    return PreferenceMeasure(list(range(size)), matrix)


class TestCompare:
    def test_ranked(self):
        m = RankedMeasure(STANDARD)
        assert compare(m, {"11"}, {"10"}).order == Comparison.GT
        assert compare(m, {"10"}, {"01"}).order == Comparison.EQ

    def test_reflexive(self):
        m = PreferenceMeasure.from_edges("abcd", DIAMOND)
        for a in all_subsets("abcd"):
            assert compare(m, a, a).order == Comparison.EQ

    def test_incomparable(self):
        m = PreferenceMeasure.from_edges("abc", [("a", "b"), ("a", "c")])
        assert compare(m, {"b"}, {"c"}).order == Comparison.INCOMPARABLE

    def test_bottom_flags(self):
        m = RankedMeasure({"x": 0, "y": INF})
        result = compare(m, {"y"}, set())
        assert result.left_bottom and result.right_bottom
        assert result.order == Comparison.EQ

    def test_ranked_never_incomparable(self, rng):
        ranks = {i: int(r) for i, r in enumerate(rng.integers(0, 3, size=5))}
        m = RankedMeasure(ranks)
        for a in all_subsets(range(5)):
            for b in all_subsets(range(5)):
                assert compare(m, a, b).order != Comparison.INCOMPARABLE

    def test_monotone(self):
        m = PreferenceMeasure.from_edges("abcd", DIAMOND)
        for b in all_subsets("abcd"):
            for a in all_subsets(b):
                assert compare(m, a, b).order in (Comparison.LT, Comparison.EQ)

    def test_cycle_rejected(self):
        with pytest.raises(ValueError):
            PreferenceMeasure.from_edges("ab", [("a", "b"), ("b", "a")])


class TestConditionals:
    def test_ranked_conditional(self):
        m = RankedMeasure(STANDARD)
        p, q = {"11", "10"}, {"11", "01"}
        assert conditional_holds(m, p, q)
        assert conditional_holds(m, set(STANDARD), {"11"})

    def test_vacuous_antecedent(self):
        m = RankedMeasure(STANDARD)
        assert conditional_holds(m, set(), set())
        assert conditional_holds(m, set(), {"00"})

    def test_belief_worlds(self):
        assert belief_worlds(RankedMeasure(STANDARD)) == {"11"}
        assert belief_worlds(RankedMeasure({w: 0 for w in STANDARD})) == set(STANDARD)
        assert belief_worlds(PreferenceMeasure.from_edges("abc", [("a", "b"), ("a", "c")])) == {"a"}

    def test_believes(self):
        m = RankedMeasure(STANDARD)
        assert believes(m, {"11", "10"})
        assert not believes(m, {"10"})

    def test_belief_worlds_are_minimal(self, rng):
        for _ in range(10):
            m = random_order(rng, 5)
            assert belief_worlds(m) == m.minimal()


class TestPreferentialSatisfies:
    def test_minimal_satisfies(self):
        m = PreferenceMeasure.from_edges("ab", [("a", "b")])
        assert preferential_satisfies(m, {"a", "b"}, {"a"})

    def test_empty_antecedent(self):
        m = PreferenceMeasure.from_edges("ab", [("a", "b")])
        assert preferential_satisfies(m, set(), {"b"})

    def test_diamond_fails(self):
        m = PreferenceMeasure.from_edges("abcd", DIAMOND)
        assert not preferential_satisfies(m, {"b", "c", "d"}, {"b"})

    def test_agrees_with_conditionals(self, rng):
        for _ in range(25):
            size = int(rng.integers(2, 6))
            m = random_order(rng, size)
            sets = all_subsets(range(size))
            for phi in sets:
                for psi in sets:
                    assert preferential_satisfies(m, phi, psi) == conditional_holds(m, phi, psi)


class TestQualitative:
    def test_ranked_passes(self):
        assert check_qualitative(RankedMeasure(STANDARD)).passed

    def test_preference_passes(self):
        assert check_qualitative(PreferenceMeasure.from_edges("abcd", DIAMOND)).passed

    def test_probability_breaks_union_property(self):
        report = check_qualitative(ProbabilityMeasure({"x": 1, "y": 1, "z": 1}))
        assert not report.get("A2").passed
        assert set(report.get("A2").witness) == {"A", "B", "C"}

    def test_hand_built_comparison(self):
        # Pl(A) >= Pl(B) when A is at least as large, ignoring contents
        m = CustomMeasure("xyz", lambda a, b: len(a) >= len(b))
        assert not check_qualitative(m).passed

    def test_carrier_bound(self):
        with pytest.raises(CarrierTooLarge):
            check_qualitative(RankedMeasure({i: 0 for i in range(9)}))


class TestKLM:
    def test_ranked_passes_including_rm(self):
        report = check_klm(RankedMeasure(STANDARD))
        assert report.passed
        assert report.get("RM").passed

    def test_diamond_passes(self):
        assert check_klm(PreferenceMeasure.from_edges("abcd", DIAMOND)).passed

    def test_rational_monotonicity_fails_off_ranked_orders(self):
        m = PreferenceMeasure.from_edges("abcd", BROKEN_DIAMOND)
        report = check_klm(m)
        assert report.passed
        witness = rational_monotonicity_witness(m)
        assert witness is not None
        assert set(witness) == {"phi", "psi", "chi"}

    def test_carrier_bound(self):
        with pytest.raises(CarrierTooLarge):
            check_klm(RankedMeasure({i: 0 for i in range(6)}))


class TestTables:
    def test_ranked_table(self):
        m = from_table("11 0\n10 1\n01 1\n00 inf\n")
        assert isinstance(m, RankedMeasure)
        assert m.rank["00"] == INF
        assert to_table(m).splitlines()[-1] == "00 inf"

    def test_preference_table(self, data_dir):
        m = from_table((data_dir / "measures" / "diamond.txt").read_text())
        assert isinstance(m, PreferenceMeasure)
        assert m.before("a", "d")
        assert not m.before("b", "c")

    def test_mixed_table_rejected(self):
        with pytest.raises(ValueError):
            from_table("a 0\na < b\n")


def loop_table(m, elements):
    sets = all_subsets(elements)
    return np.array([[m.geq(a, b) for b in sets] for a in sets])


class TestSubsetTables:
    def test_ranked_matches_pairwise(self):
        m = RankedMeasure({"11": 0, "10": 1, "01": 1, "00": INF})
        elements = ["00", "01", "10", "11"]
        np.testing.assert_array_equal(m.geq_table(elements), loop_table(m, elements))

    def test_preference_matches_pairwise(self, rng):
        for _ in range(5):
            m = random_order(rng, 5)
            np.testing.assert_array_equal(m.geq_table(range(5)), loop_table(m, range(5)))

    def test_diamond_subset_of_carrier(self):
        m = PreferenceMeasure.from_edges("abcd", DIAMOND)
        np.testing.assert_array_equal(m.geq_table("bcd"), loop_table(m, "bcd"))

    def test_dominance_carrier_bound(self):
        m = PreferenceMeasure(list(range(16)), np.zeros((16, 16), dtype=bool))
        with pytest.raises(CarrierTooLarge):
            m.geq_table(range(16))


class TestConditioned:
    def test_ignores_outside_condition(self):
        m = ConditionedMeasure(RankedMeasure(STANDARD), ["10", "01", "00"])
        assert compare(m, {"10"}, {"01"}).order == Comparison.EQ
        assert compare(m, {"11", "00"}, {"01"}).order == Comparison.LT
        assert m.is_bottom({"11"})
        assert not m.is_bottom({"00"})

    def test_beliefs_follow_condition(self):
        m = ConditionedMeasure(RankedMeasure(STANDARD), ["10", "00"])
        assert believes(m, {"10"})
        assert not believes(RankedMeasure(STANDARD), {"10"})

    def test_table_on_condition_uses_base(self):
        base = PreferenceMeasure.from_edges("abcd", DIAMOND)
        m = ConditionedMeasure(base, "bcd")
        np.testing.assert_array_equal(m.geq_table("bcd"), base.geq_table("bcd"))
        np.testing.assert_array_equal(m.geq_table("abcd"), loop_table(m, "abcd"))
