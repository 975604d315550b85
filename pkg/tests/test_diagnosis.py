import pytest

from constants.gate_kinds import GateKind
from diagnosis import (Circuit, Gate, check_prop_2_4, circuit_theory, diagnoses, diagnoses_bcs, diagnosis_trace,
                       fault_free_attitude, gate_formula, random_circuit, random_observations)
from kernel import Var, evaluate, parse
from util.errors import CyclicCircuit, ScenarioError
from util.scenario_parser import load_circuit, load_observations, parse_circuit

CHAIN = """
gate c1 AND a b -> m
gate c2 NOT m -> o
"""


@pytest.fixture
def and1(data_dir):
    return load_circuit(data_dir / "circuits" / "and1.cir")


@pytest.fixture
def and1_obs(and1, data_dir):
    return load_observations(data_dir / "circuits" / "and1_obs.txt", and1.vocab)


class TestCircuit:
    def test_lines(self, and1):
        assert and1.input_lines == ("a", "b")
        assert and1.output_lines == ("o",)
        assert and1.fault_atoms == ("f1",)
        assert [str(a) for a in and1.vocab.atoms] == ["f1", "a", "b", "o"]

    def test_theory(self, and1):
        # faulty: any valuation of a, b, o; working: o follows a & b
        assert len(circuit_theory(and1).worlds) == 12

    def test_duplicate_driver(self):
        with pytest.raises(ValueError):
            Circuit([Gate("c1", GateKind.AND, ("a", "b"), "o"), Gate("c2", GateKind.OR, ("a", "b"), "o")])

    def test_duplicate_ids(self):
        with pytest.raises(ValueError):
            Circuit([Gate("c1", GateKind.AND, ("a", "b"), "x"), Gate("c1", GateKind.OR, ("a", "b"), "y")])

    def test_cycle(self):
        with pytest.raises(CyclicCircuit):
            Circuit([Gate("c1", GateKind.AND, ("a", "x"), "y"), Gate("c2", GateKind.NOT, ("y",), "x")])

    def test_arity(self):
        with pytest.raises(ValueError):
            Gate("c1", GateKind.NOT, ("a", "b"), "o")
        with pytest.raises(ValueError):
            Gate("c1", GateKind.AND, ("a",), "o")

    def test_fault_atom_clash(self):
        with pytest.raises(ValueError):
            Circuit([Gate("c1", GateKind.AND, ("f1", "b"), "o")])

    def test_bad_gate_line(self):
        with pytest.raises(ScenarioError):
            parse_circuit("gate c1 MAJ a b -> o")
        with pytest.raises(ScenarioError):
            parse_circuit("# nothing here\n")

    def test_gate_functions(self):
        vocab_circuit = parse_circuit("gate c1 XOR a b -> o")
        vocab = vocab_circuit.vocab
        xor = gate_formula(GateKind.XOR, [Var("a"), Var("b")])
        nand = gate_formula(GateKind.NAND, [Var("a"), Var("b")])
        assert evaluate(vocab, vocab.world("0100"), xor)
        assert not evaluate(vocab, vocab.world("0110"), xor)
        assert not evaluate(vocab, vocab.world("0110"), nand)


class TestDiagnoses:
    def test_and_gate(self, and1, and1_obs):
        assert diagnoses(and1, []) == {frozenset()}
        assert diagnoses(and1, and1_obs[:1]) == {frozenset()}
        assert diagnoses(and1, and1_obs) == {frozenset({"c1"})}

    def test_chain_has_two_single_faults(self):
        c = parse_circuit(CHAIN)
        obs = [parse("a & b & o", c.vocab)]
        assert diagnoses(c, obs) == {frozenset({"c1"}), frozenset({"c2"})}

    def test_belief_change_system_agrees(self, and1, and1_obs):
        assert diagnoses_bcs(and1, and1_obs) == diagnoses(and1, and1_obs)

    def test_random_circuits_agree(self, rng):
        for _ in range(8):
            c = random_circuit(rng, 3)
            obs = random_observations(rng, c, 3)
            for m in range(len(obs) + 1):
                assert diagnoses_bcs(c, obs[:m]) == diagnoses(c, obs[:m])

    def test_fault_free_attitude(self, and1, and1_obs):
        assert fault_free_attitude(and1, and1_obs[:1]) == (False, True)
        assert fault_free_attitude(and1, and1_obs) == (False, False)


class TestEvolution:
    def test_and_gate(self, and1, and1_obs):
        report = check_prop_2_4(and1, and1_obs)
        assert report.passed
        assert report.get("filtering").cases == 1
        assert report.get("disjoint").cases == 1
        assert report.notes == ["observation 2 (a & b & !o) is surprising"]

    def test_random_circuits(self, rng):
        for _ in range(8):
            c = random_circuit(rng, 3)
            assert check_prop_2_4(c, random_observations(rng, c, 3)).passed

    def test_trace(self, and1, and1_obs):
        frame = diagnosis_trace(and1, and1_obs)
        assert frame["diagnoses"].tolist() == ["{{}}", "{{}}", "{{c1}}"]
        assert frame["surprising"].tolist() == [False, False, True]
        assert frame.loc[2, "cardinality"] == 1
