import numpy as np
import pytest

from constants.limits import Settings
from kernel import TRUE, Not, Var, belief_set, parse, to_text
from revision import epistemic_bs
from systems import (Believes, Cond, Knows, Learn, LexRunPrior, Next, RankedRunPrior, Run, SystemModel, bel,
                     build_revision_system, build_update_system, dump_system, model_check, run_filter, statify,
                     states_possible, timestamp)
from update import km_update_seq
from util.errors import EmptyAlphabet, HorizonExceeded, PreconditionViolated, StateSpaceTooLarge


@pytest.fixture
def revision_system(pq, standard_ranking):
    return build_revision_system(standard_ranking, [TRUE, Var("p"), Not(Var("p"))], 2)


@pytest.fixture
def car_system(car, car_structure):
    alphabet = [TRUE, parse("parked", car), parse("!full", car)]
    return build_update_system(car_structure, alphabet, 2, parse("parked & full", car))


class TestRevisionSystem:
    def test_runs(self, pq, standard_ranking):
        sys = build_revision_system(standard_ranking, [TRUE, Var("p")], 1)
        # worlds satisfying p can also observe p
        assert sys.size == 6
        assert sys.horizon == 1
        assert all(len(set(r.env)) == 1 for r in sys.runs)

    def test_beliefs_match_conditioning(self, revision_system, standard_ranking):
        for m in range(revision_system.horizon + 1):
            for local in revision_system.local_states(m):
                assert bel(revision_system, local).worlds == epistemic_bs(standard_ranking, local).worlds

    def test_unattainable_local_state(self, revision_system):
        p = Var("p")
        assert not bel(revision_system, (p, Not(p))).worlds
        assert states_possible(revision_system, (p, p, p)) == frozenset()

    def test_initial_beliefs(self, revision_system):
        assert bel(revision_system, ()).bitstrings() == ["11"]

    def test_negative_horizon(self, standard_ranking):
        with pytest.raises(ValueError):
            build_revision_system(standard_ranking, [TRUE], -1)

    def test_alphabet_checks(self, standard_ranking, pq):
        with pytest.raises(EmptyAlphabet):
            build_revision_system(standard_ranking, [], 1)
        with pytest.raises(PreconditionViolated):
            build_revision_system(standard_ranking, [Var("p")], 1)
        with pytest.raises(PreconditionViolated):
            build_revision_system(standard_ranking, [TRUE, parse("p & !p", pq)], 1)

    def test_state_space_cap(self, standard_ranking):
        with pytest.raises(StateSpaceTooLarge):
            build_revision_system(standard_ranking, [TRUE, Var("p")], 3, Settings(state_space_cap=5))


class TestUpdateSystem:
    def test_borrowed_car(self, car, car_system):
        parked, not_full = parse("parked", car), parse("!full", car)
        assert bel(car_system, ()).bitstrings() == ["11"]
        assert bel(car_system, (TRUE,)).bitstrings() == ["11"]
        assert bel(car_system, (parked,)).bitstrings() == ["11"]
        assert bel(car_system, (parked, not_full)).bitstrings() == ["10"]

    def test_agrees_with_km_update(self, car, car_structure, car_system):
        mu = belief_set(car, car_structure.universe, parse("parked & full", car))
        for m in range(car_system.horizon + 1):
            for local in car_system.local_states(m):
                assert bel(car_system, local).worlds == km_update_seq(car_structure, mu, local).worlds

    def test_initial_condition_restricts_start(self, car, car_system):
        assert {r.env[0] for r in car_system.runs} == {car.world("11")}

    def test_initial_without_models(self, car, car_structure):
        with pytest.raises(PreconditionViolated):
            build_update_system(car_structure, [TRUE], 1, parse("parked & !parked", car))

    def test_state_space_cap(self, car_structure):
        with pytest.raises(StateSpaceTooLarge):
            build_update_system(car_structure, [TRUE], 2, settings=Settings(state_space_cap=10))

    def test_lex_prior_prefers_smaller_steps(self, car, car_system):
        stay = next(i for i, r in enumerate(car_system.runs) if r.env == (3, 3, 3) and r.obs == (TRUE, TRUE))
        jump = next(i for i, r in enumerate(car_system.runs) if r.env == (3, 0, 0) and r.obs == (TRUE, TRUE))
        assert car_system.prior.geq([stay], [jump])
        assert not car_system.prior.geq([jump], [stay])

    def test_lex_order_independent_of_row_block(self, monkeypatch, car_system):
        expected = car_system.prior.precedes.copy()
        monkeypatch.setattr(LexRunPrior, "row_block", 1)
        rebuilt = LexRunPrior(car_system.structure, car_system.env)
        np.testing.assert_array_equal(rebuilt.precedes, expected)


class TestModelCheck:
    def test_knowledge_and_belief(self, pq, standard_ranking):
        sys = build_revision_system(standard_ranking, [TRUE, Var("p")], 1)
        p, q = Var("p"), Var("q")
        saw_p = int(sys.runs_with_local_state((p,))[0])
        assert model_check(sys, (saw_p, 1), Knows(p))
        assert model_check(sys, (saw_p, 1), Believes(q))
        assert model_check(sys, (saw_p, 1), Learn(p))
        assert not model_check(sys, (saw_p, 0), Knows(p))
        assert model_check(sys, (saw_p, 0), Believes(parse("p & q", pq)))
        assert model_check(sys, (saw_p, 0), Cond(p, q))

    def test_next_past_horizon(self, standard_ranking):
        sys = build_revision_system(standard_ranking, [TRUE], 1)
        assert model_check(sys, (0, 0), Next(TRUE))
        with pytest.raises(HorizonExceeded):
            model_check(sys, (0, 1), Next(TRUE))

    def test_cell_outside_horizon(self, standard_ranking):
        sys = build_revision_system(standard_ranking, [TRUE], 1)
        with pytest.raises(HorizonExceeded):
            sys.cell_of(0, 2)
        assert not sys.runs_with_local_state((TRUE, TRUE)).size


class TestConstruction:
    def test_run_length(self):
        with pytest.raises(ValueError):
            Run((0,), (TRUE,))

    def test_mixed_horizons(self, pq):
        runs = [Run((0,), ()), Run((1, 1), (TRUE,))]
        with pytest.raises(ValueError):
            SystemModel(pq, runs, RankedRunPrior([0, 0]))

    def test_prior_must_match_runs(self, pq):
        with pytest.raises(ValueError):
            SystemModel(pq, [Run((0,), ())], RankedRunPrior([0, 1]))

    def test_run_filter(self, car, car_system):
        parked = parse("parked", car)
        moved = run_filter(car_system, [TRUE, Not(parked)])
        assert moved.size
        assert all(car_system.runs[i].env[1] in (car.world("01"), car.world("00")) for i in moved)
        assert set(run_filter(car_system, [], (parked,))) == set(car_system.runs_with_local_state((parked,)))


class TestStatify:
    def test_timestamped_runs(self, car, car_system):
        static = statify(car_system)
        assert static.vocab.n == 6
        assert static.size == car_system.size
        assert static.prior is car_system.prior
        assert static.source is car_system
        run, source = static.runs[5], car_system.runs[5]
        assert len(set(run.env)) == 1
        assert run.obs == tuple(timestamp(o, m + 1) for m, o in enumerate(source.obs))

    def test_timestamp(self, car):
        assert to_text(timestamp(parse("parked & !full", car), 1)) == "parked@1 & !full@1"


class TestDump:
    def test_ranked_dump(self, standard_ranking):
        text = dump_system(build_revision_system(standard_ranking, [TRUE], 1))
        lines = text.splitlines()
        assert len(lines) == 4
        assert lines[0] == "r0 env=<00,00> obs=<true> rank=2"

    def test_lex_dump(self, car_system):
        text = dump_system(car_system)
        assert "order:" in text
        assert "class=e" in text.splitlines()[0]
