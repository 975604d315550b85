import pytest

from constants.limits import Settings
from kernel import FALSE, TRUE, BeliefSet, Not, Var, Vocabulary, belief_set, parse
from revision import (RevisionRanking, check_agm, check_agm_primed, check_belief_set_dependence, check_round_trip,
                      drastic_oracle, empty_oracle, epistemic_bs, epistemic_oracle, extract_ranking, f_suffix,
                      full_meet_oracle, grove_oracle, grove_revise, initial_belief, raw_conditioning_bs,
                      reinforcement_es_oracle, table_oracle)
from util.errors import CarrierTooLarge, NotTotalPreorder, PreconditionViolated

FAST = Settings(sample_count=300)


def random_ranking(rng, atoms):
    vocab = Vocabulary([f"a{i}" for i in range(atoms)])
    ranks = {w: int(r) for w, r in zip(vocab.all_worlds(), rng.integers(0, 4, size=vocab.size))}
    return RevisionRanking(vocab, ranks).normalized()


class TestGroveRevise:
    def test_minimum_rank_models(self, pq, standard_ranking):
        K = grove_revise(standard_ranking, parse("!p", pq))
        assert K.bitstrings() == ["01"]
        assert K.contains(parse("!p & q", pq))

    def test_revising_by_true_keeps_beliefs(self, standard_ranking):
        assert grove_revise(standard_ranking, TRUE).worlds == initial_belief(standard_ranking).worlds

    def test_inconsistent_input(self, pq, standard_ranking):
        assert not grove_revise(standard_ranking, parse("p & !p", pq)).is_consistent()

    def test_infinite_rank_rejected(self, pq):
        with pytest.raises(ValueError):
            RevisionRanking(pq, {0: 0, 1: float("inf"), 2: 1, 3: 1})

    def test_missing_rank_rejected(self, pq):
        with pytest.raises(ValueError):
            RevisionRanking(pq, {0: 0}, universe=pq.all_worlds())


class TestSuffix:
    def test_drops_inconsistent_prefix(self, pq):
        p, q = Var("p"), Var("q")
        universe = pq.all_worlds()
        assert f_suffix((p, Not(p)), pq, universe) == (Not(p),)
        assert f_suffix((p, q), pq, universe) == (p, q)
        assert f_suffix((p, FALSE), pq, universe) == (FALSE,)
        assert f_suffix((), pq, universe) == ()


class TestEpistemicBeliefs:
    def test_examples(self, pq, standard_ranking):
        p, q = Var("p"), Var("q")
        assert epistemic_bs(standard_ranking, (p,)).bitstrings() == ["11"]
        assert epistemic_bs(standard_ranking, (p, Not(p))).bitstrings() == ["01"]
        assert epistemic_bs(standard_ranking, (q, p)).bitstrings() == ["11"]
        assert epistemic_bs(standard_ranking, ()).bitstrings() == ["11"]

    def test_recovers_where_conditioning_does_not(self, standard_ranking):
        p = Var("p")
        assert not raw_conditioning_bs(standard_ranking, (p, Not(p))).is_consistent()
        assert epistemic_bs(standard_ranking, (p, Not(p))).is_consistent()

    def test_revision_depends_on_more_than_beliefs(self, pq, standard_ranking):
        summary = check_belief_set_dependence(epistemic_oracle(standard_ranking), (Var("q"),), (Var("p"),),
                                              parse("!(p & q)", pq))
        assert summary["same_belief_set"]
        assert summary["dependent"]
        assert summary["after_first"] != summary["after_second"]


class TestAGM:
    def test_grove_passes_for_random_rankings(self, rng):
        for atoms in (2, 3):
            for _ in range(5):
                rk = random_ranking(rng, atoms)
                report = check_agm(grove_oracle(rk), rk.universe, rk.initial_belief(), FAST, rng)
                assert report.passed, report.first_violation()

    def test_full_meet_passes(self, pq):
        K = belief_set(pq, pq.all_worlds(), parse("p & q", pq))
        assert check_agm(full_meet_oracle(), pq.all_worlds(), K).passed

    def test_drastic_breaks_r4(self, pq):
        K = belief_set(pq, pq.all_worlds(), parse("p & q", pq))
        report = check_agm(drastic_oracle(), pq.all_worlds(), K)
        assert not report.passed
        assert not report.get("R4").passed
        assert report.get("R4").witness["K"] == "{11}"

    def test_empty_oracle_breaks_success(self, pq):
        K = belief_set(pq, pq.all_worlds(), parse("p", pq))
        report = check_agm(empty_oracle(), pq.all_worlds(), K)
        assert not report.get("R5").passed

    def test_table_oracle_missing_entry(self, pq):
        K = belief_set(pq, pq.all_worlds(), parse("p & q", pq))
        report = check_agm(table_oracle({}), pq.all_worlds(), K)
        assert not report.get("oracle").passed

    def test_universe_bound(self):
        vocab = Vocabulary.of("a", "b", "c", "d")
        K = belief_set(vocab, vocab.all_worlds())
        with pytest.raises(CarrierTooLarge):
            check_agm(full_meet_oracle(), vocab.all_worlds(), K)


class TestExtraction:
    def test_round_trip(self, rng):
        for atoms in (2, 3):
            for _ in range(5):
                rk = random_ranking(rng, atoms)
                assert extract_ranking(grove_oracle(rk), rk.initial_belief()) == rk
                assert check_round_trip(grove_oracle(rk), rk.initial_belief()).passed

    def test_empty_oracle_is_not_a_preorder(self, pq):
        K = belief_set(pq, pq.all_worlds(), parse("p & q", pq))
        with pytest.raises(NotTotalPreorder):
            extract_ranking(empty_oracle(), K)
        report = check_round_trip(empty_oracle(), K)
        assert not report.get("total-preorder").passed

    def test_drastic_flattens_the_ranking(self, pq):
        K = belief_set(pq, pq.all_worlds(), parse("p & q", pq))
        report = check_round_trip(drastic_oracle(), K)
        assert report.get("total-preorder").passed
        assert not report.get("minimal-layer").passed

    def test_inconsistent_belief_set(self, pq):
        K = BeliefSet(pq, frozenset(), frozenset(pq.all_worlds()))
        with pytest.raises(PreconditionViolated):
            extract_ranking(full_meet_oracle(), K)


class TestPrimedPostulates:
    def test_epistemic_states_pass(self, rng):
        for _ in range(3):
            rk = random_ranking(rng, 2)
            report = check_agm_primed(epistemic_oracle(rk), rk.universe, rk.vocab, depth=2)
            assert report.passed, report.first_violation()

    def test_depth_three(self, standard_ranking, pq):
        assert check_agm_primed(epistemic_oracle(standard_ranking), standard_ranking.universe, pq, depth=3).passed

    def test_reinforcement_breaks_conjunction(self, pq):
        base = {pq.world("11"): 0, pq.world("10"): 4, pq.world("01"): 1, pq.world("00"): 2}
        report = check_agm_primed(reinforcement_es_oracle(pq, base), frozenset(base), pq, depth=2)
        assert not report.passed
        assert not report.get("R9'").passed

    def test_reinforcement_step(self, pq):
        base = {pq.world("11"): 0, pq.world("10"): 4, pq.world("01"): 1, pq.world("00"): 2}
        oracle = reinforcement_es_oracle(pq, base)
        p_only = parse("p", pq)
        stepwise = oracle((p_only,), parse("p & !q | !p & q", pq))
        conjoined = oracle((), parse("p & !q", pq))
        assert stepwise.bitstrings() == ["01"]
        assert conjoined.bitstrings() == ["10"]

    def test_depth_bound(self, standard_ranking, pq):
        with pytest.raises(CarrierTooLarge):
            check_agm_primed(epistemic_oracle(standard_ranking), standard_ranking.universe, pq, depth=4)
