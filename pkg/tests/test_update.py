import pytest

from constants.limits import Settings
from kernel import BeliefSet, Vocabulary, belief_set, parse
from update import (DistanceFunction, UpdateStructure, check_km, grove_update_oracle, km_oracle, km_update,
                    km_update_seq, min_u, sufficient_information, validate_update_structure)
from util.errors import CarrierTooLarge, PreconditionViolated, UnknownDistanceValue
from util.scenario_parser import load_structure, parse_distance_matrix


def state(vocab, *bits):
    return BeliefSet(vocab, frozenset(vocab.world(b) for b in bits), frozenset(vocab.all_worlds()))


class TestKMUpdate:
    def test_borrowed_car(self, car, car_structure):
        mu = belief_set(car, car_structure.universe, parse("parked & full", car))
        assert km_update(car_structure, mu, parse("parked", car)).bitstrings() == ["11"]
        assert km_update(car_structure, mu, parse("!full", car)).bitstrings() == ["10"]

    def test_sequence(self, car, car_structure):
        mu = state(car, "11")
        obs = [parse(text, car) for text in ("true", "parked", "!full")]
        assert km_update_seq(car_structure, mu, obs).bitstrings() == ["10"]
        assert km_update_seq(car_structure, mu, []).worlds == mu.worlds

    def test_each_world_updated_separately(self, car, car_structure):
        mu = state(car, "11", "00")
        assert km_update(car_structure, mu, parse("parked", car)).bitstrings() == ["10", "11"]

    def test_empty_inputs(self, car, car_structure):
        empty = state(car)
        assert not km_update(car_structure, empty, parse("parked", car)).worlds
        assert not km_update(car_structure, state(car, "11"), parse("parked & !parked", car)).worlds
        assert min_u(car_structure, [], car_structure.universe) == frozenset()

    def test_weighted_distance(self, car):
        U = UpdateStructure(car, DistanceFunction.weighted_hamming(car, {"parked": 5}))
        # leaving "parked" costs more than losing fuel
        assert km_update(U, state(car, "11"), parse("!parked | !full", car)).bitstrings() == ["10"]

    def test_weights_must_be_positive(self, car):
        with pytest.raises(ValueError):
            DistanceFunction.weighted_hamming(car, {"full": 0})

    def test_poset_distance(self, pq, data_dir):
        U = load_structure(data_dir / "structures" / "poset2.json")
        # a and b are incomparable, so both one-step neighbours of 00 survive
        assert km_update(U, state(pq, "00"), parse("p | q", pq)).bitstrings() == ["01", "10"]
        assert km_update(U, state(pq, "11"), parse("!p | !q", pq)).bitstrings() == ["01", "10"]


class TestSufficientInformation:
    def test_closest_world(self, car, car_structure):
        phi = parse("!full", car)
        assert sufficient_information(car_structure, car.world("11"), car.world("10"), phi)
        assert not sufficient_information(car_structure, car.world("11"), car.world("00"), phi)

    def test_world_must_satisfy_observation(self, car, car_structure):
        with pytest.raises(PreconditionViolated):
            sufficient_information(car_structure, car.world("11"), car.world("11"), parse("!full", car))


class TestKMPostulates:
    def test_hamming_passes(self, pq):
        report = check_km(km_oracle(UpdateStructure(pq)), pq.all_worlds(), pq)
        assert report.passed, report.first_violation()
        assert [o.name for o in report.checks] == ["U1", "U2", "U3", "U4", "U5", "U6", "U7", "U8"]

    def test_poset_passes(self, pq, data_dir):
        U = load_structure(data_dir / "structures" / "poset2.json")
        assert check_km(km_oracle(U), U.universe, pq).passed

    def test_three_atoms_sampled(self, rng):
        vocab = Vocabulary.of("a", "b", "c")
        settings = Settings(sample_count=400)
        report = check_km(km_oracle(UpdateStructure(vocab)), vocab.all_worlds(), vocab, settings, rng)
        assert report.passed
        assert report.get("U5").note

    def test_three_atoms_exhaustive_pairs_and_disjunctions(self, rng):
        vocab = Vocabulary.of("a", "b", "c")
        report = check_km(km_oracle(UpdateStructure(vocab)), vocab.all_worlds(), vocab, Settings(sample_count=50), rng)
        for name in ("U1", "U2", "U3", "U4"):
            assert report.get(name).cases == 256 ** 2, name
            assert report.get(name).note is None, name
        assert report.get("U7").cases == 8 * 256 ** 2
        assert report.get("U8").cases == 256 ** 3
        assert report.get("U8").note is None
        assert report.get("U6").cases == 50

    def test_global_minimisation_breaks_disjunction(self, pq):
        oracle = grove_update_oracle(UpdateStructure(pq))
        assert oracle(state(pq, "11", "00"), parse("p", pq)).bitstrings() == ["11"]
        report = check_km(oracle, pq.all_worlds(), pq)
        assert not report.get("U8").passed
        witness = report.get("U8").witness
        assert witness["joint"] != witness["separate"]

    def test_grove_update_needs_numbers(self, pq, data_dir):
        with pytest.raises(ValueError):
            grove_update_oracle(load_structure(data_dir / "structures" / "poset2.json"))

    def test_universe_bound(self):
        vocab = Vocabulary.of("a", "b", "c", "d")
        with pytest.raises(CarrierTooLarge):
            check_km(km_oracle(UpdateStructure(vocab)), vocab.all_worlds(), vocab)


class TestDistanceTables:
    def test_numeric_matrix(self, pq):
        d = parse_distance_matrix("00 01 10 11\n00 0 1 1 2\n01 1 0 2 1\n10 1 2 0 1\n11 2 1 1 0\n", pq)
        assert d.numeric
        assert d.value(pq.world("00"), pq.world("11")) == 2.0

    def test_fractions(self, pq):
        d = parse_distance_matrix("00 01 10 11\n00 0 1/2 1 2\n01 1 0 2 1\n10 1 2 0 1\n11 2 1 1 0\n", pq)
        assert d.value(pq.world("00"), pq.world("01")) == 0.5

    def test_unknown_label(self, pq, data_dir):
        U = load_structure(data_dir / "structures" / "poset2.json")
        with pytest.raises(UnknownDistanceValue):
            U.d.less("a", "z")


class TestValidateStructure:
    def test_hamming_is_well_formed(self, car_structure):
        assert validate_update_structure(car_structure).passed

    def test_poset_is_well_formed(self, data_dir):
        assert validate_update_structure(load_structure(data_dir / "structures" / "poset2.json")).passed

    def test_zero_off_diagonal(self, pq):
        worlds = pq.all_worlds()
        entries = {(w, v): (0 if w == v or {w, v} == {0, 1} else 1) for w in worlds for v in worlds}
        report = validate_update_structure(UpdateStructure(pq, DistanceFunction.from_matrix(pq, entries)))
        assert not report.get("zero-only-on-diagonal").passed
        assert report.get("total").passed

    def test_missing_entry(self, pq):
        worlds = pq.all_worlds()
        entries = {(w, v): bin(w ^ v).count("1") for w in worlds for v in worlds if (w, v) != (0, 3)}
        report = validate_update_structure(UpdateStructure(pq, DistanceFunction.from_matrix(pq, entries)))
        assert not report.get("total").passed
        assert report.get("total").witness == {"pair": "00->11"}

    def test_cyclic_order(self, pq):
        worlds = pq.all_worlds()
        entries = {(w, v): ("0" if w == v else "a" if (w ^ v) != 3 else "b") for w in worlds for v in worlds}
        d = DistanceFunction.from_poset(pq, entries, [("a", "b"), ("b", "a")])
        assert not validate_update_structure(UpdateStructure(pq, d)).get("poset-order").passed

    def test_partial_universe(self, pq):
        U = UpdateStructure(pq, universe=[0, 1, 2])
        assert not validate_update_structure(U).get("coverage").passed
