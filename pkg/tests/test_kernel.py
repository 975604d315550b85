import pytest

from constants.limits import get_settings
from kernel import (FALSE, TRUE, And, Atom, BeliefSet, Implies, Not, Theory, Var, Vocabulary, belief_set,
                    enumerate_worlds, evaluate, literals, models, parse, set_formula, to_text, truth_table)
from util.errors import EmptyTheoryModels, FormulaSyntaxError, UnknownAtom, VocabularyTooLarge


@pytest.fixture
def small_atom_limit(monkeypatch):
    monkeypatch.setenv("BELIEF_MAX_ATOMS", "2")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


class TestParse:
    def test_precedence(self):
        vocab = Vocabulary.of("p", "q", "r")
        f = parse("(p & !q) => r", vocab)
        assert f == Implies(And(Var("p"), Not(Var("q"))), Var("r"))

    def test_literals(self, pq):
        assert parse("true", pq) == TRUE
        assert parse("false", pq) == FALSE

    def test_implication_is_right_associative(self):
        vocab = Vocabulary.of("p", "q", "r")
        assert parse("p => q => r", vocab) == Implies(Var("p"), Implies(Var("q"), Var("r")))

    def test_whitespace_insensitive(self, pq):
        assert parse("p&!q", pq) == parse("  p &  ! q ", pq)

    def test_syntax_error_position(self, pq):
        with pytest.raises(FormulaSyntaxError) as exc:
            parse("p & & q", pq)
        assert exc.value.position == 3

    def test_unknown_atom(self, pq):
        with pytest.raises(UnknownAtom) as exc:
            parse("p & z", pq)
        assert exc.value.name == "z"

    def test_timestamped_atoms(self):
        vocab = Vocabulary([Atom("p", 0), Atom("p", 1)])
        f = parse("p@0 & !p@1", vocab)
        assert to_text(f) == "p@0 & !p@1"

    def test_print_then_parse_is_equivalent(self):
        vocab = Vocabulary.of("p", "q", "r")
        for text in ["!(p | q) & r", "p => (q => r)", "(p => q) => r", "p <=> !q", "!!p", "(p <=> q) <=> r"]:
            f = parse(text, vocab)
            again = parse(to_text(f), vocab)
            assert models(vocab, f, vocab.all_worlds()) == models(vocab, again, vocab.all_worlds())


class TestWorlds:
    def test_all_assignments(self, pq):
        assert enumerate_worlds(pq) == (0b00, 0b01, 0b10, 0b11)

    def test_theory_restricts(self, pq):
        theory = Theory(pq, [parse("p => q", pq)])
        assert [pq.bits(w) for w in enumerate_worlds(pq, theory)] == ["00", "01", "11"]

    def test_contradictory_theory(self):
        vocab = Vocabulary.of("p")
        with pytest.raises(EmptyTheoryModels):
            Theory(vocab, [Var("p"), Not(Var("p"))])

    def test_first_atom_is_the_high_bit(self, pq):
        assert evaluate(pq, pq.world("10"), Var("p"))
        assert not evaluate(pq, pq.world("10"), Var("q"))

    def test_models(self, pq):
        universe = pq.all_worlds()
        assert evaluate(pq, pq.world("11"), parse("p & q", pq))
        assert models(pq, Var("p"), universe) == {pq.world("10"), pq.world("11")}
        assert models(pq, parse("p & !p", pq), universe) == frozenset()

    def test_vocabulary_limit(self):
        with pytest.raises(VocabularyTooLarge):
            Vocabulary([f"a{i}" for i in range(17)])

    def test_vocabulary_limit_from_settings(self, small_atom_limit):
        assert len(Vocabulary.of("a", "b")) == 2
        with pytest.raises(VocabularyTooLarge):
            Vocabulary.of("a", "b", "c")
        assert len(Vocabulary(["a", "b", "c"], max_atoms=3)) == 3

    def test_truth_table_cache_bounded(self):
        # one bool per world at the largest vocabulary
        assert truth_table.cache_info().maxsize * (1 << 16) <= 128 * 2 ** 20

    def test_duplicate_atoms(self):
        with pytest.raises(ValueError):
            Vocabulary.of("p", "p")

    def test_literals_order(self, pq):
        assert [to_text(f) for f in literals(pq)] == ["p", "!p", "q", "!q"]


class TestBeliefSet:
    def test_contains(self, pq):
        K = belief_set(pq, pq.all_worlds(), parse("p & q", pq))
        assert K.contains(Var("p"))
        assert K.is_complete()

    def test_cl_add(self, pq):
        K = belief_set(pq, pq.all_worlds(), Var("p"))
        assert K.cl_add(Var("q")).bitstrings() == ["11"]

    def test_inconsistent_contains_everything(self, pq):
        K = BeliefSet(pq, frozenset(), frozenset(pq.all_worlds()))
        assert K.contains(FALSE)
        assert not K.is_consistent()
        assert str(K) == "false"

    def test_char_formula_round_trip(self, pq):
        universe = frozenset(pq.all_worlds())
        for mask in range(16):
            worlds = frozenset(w for w in range(4) if (mask >> w) & 1)
            K = BeliefSet(pq, worlds, universe)
            assert models(pq, K.char_formula(), universe) == worlds

    def test_canonical_dnf(self, pq):
        assert to_text(set_formula(pq, [pq.world("01"), pq.world("10")])) == "!p & q | p & !q"

    def test_modus_ponens(self, pq):
        K = belief_set(pq, pq.all_worlds(), parse("p & (p => q)", pq))
        assert K.contains(Var("p")) and K.contains(parse("p => q", pq))
        assert K.contains(Var("q"))

    def test_worlds_outside_universe(self, pq):
        with pytest.raises(ValueError):
            BeliefSet(pq, frozenset({0b00}), frozenset({0b11}))
