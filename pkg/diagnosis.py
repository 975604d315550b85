"""
Circuit diagnosis as belief change.

Components may fail persistently; a fault atom ``f<i>`` marks component ``i``
(1-based, in declaration order) as faulty. A working component forces its
output line to the gate function of its inputs; a faulty one constrains
nothing. The agent observes line values and believes the fault sets of
minimum cardinality that are consistent with everything observed so far.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import reduce
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np
import pandas as pd

from constants.gate_kinds import GateKind
from kernel import (TRUE, Formula, Iff, Implies, Not, Theory, Var, Vocabulary, conj, disj,
                    models, set_formula, to_text)
from revision import RevisionRanking
from systems import Knows, Believes, bel, build_revision_system, model_check
from util.errors import CyclicCircuit
from util.report import CheckReport

logger = logging.getLogger(__name__)

FaultSet = FrozenSet[str]


@dataclass(frozen=True)
class Gate:
    id: str
    kind: GateKind
    inputs: Tuple[str, ...]
    output: str

    def __post_init__(self):
        if self.kind.arity is not None and len(self.inputs) != self.kind.arity:
            raise ValueError(f"Gate {self.id} ({self.kind.value}) takes {self.kind.arity} input(s)")
        if self.kind.arity is None and len(self.inputs) < 2:
            raise ValueError(f"Gate {self.id} ({self.kind.value}) needs at least two inputs")


class Circuit:
    """
    Gates in declaration order. Lines driven by no gate are inputs; lines
    read by no gate are outputs.

    Raises:
        ValueError: a line is driven twice or a gate id repeats
        CyclicCircuit: the wiring has a cycle
    """

    def __init__(self, gates: Sequence[Gate]):
        self.gates = tuple(gates)
        ids = [g.id for g in self.gates]
        if len(set(ids)) != len(ids):
            raise ValueError(f"Duplicate gate ids in {ids}")
        drivers: Dict[str, str] = {}
        for g in self.gates:
            if g.output in drivers:
                raise ValueError(f"Line {g.output} is driven by both {drivers[g.output]} and {g.id}")
            drivers[g.output] = g.id
        self.drivers = drivers
        lines: List[str] = []
        for g in self.gates:
            for line in g.inputs + (g.output,):
                if line not in lines:
                    lines.append(line)
        self.lines = tuple(lines)
        self.input_lines = tuple(l for l in lines if l not in drivers)
        read = {l for g in self.gates for l in g.inputs}
        self.output_lines = tuple(l for l in lines if l in drivers and l not in read)
        self.order = self._topological_order()
        self.fault_atoms = tuple(f"f{i + 1}" for i in range(len(self.gates)))
        clash = set(self.fault_atoms) & set(self.lines)
        if clash:
            raise ValueError(f"Line names {sorted(clash)} clash with fault atoms")
        self.vocab = Vocabulary(self.fault_atoms + self.lines)

    def _topological_order(self) -> Tuple[Gate, ...]:
        by_output = {g.output: g for g in self.gates}
        done: Set[str] = set()
        visiting: Set[str] = set()
        order: List[Gate] = []

        def visit(g: Gate):
            if g.id in done:
                return
            if g.id in visiting:
                raise CyclicCircuit(g.output)
            visiting.add(g.id)
            for line in g.inputs:
                if line in by_output:
                    visit(by_output[line])
            visiting.discard(g.id)
            done.add(g.id)
            order.append(g)

        for g in self.gates:
            visit(g)
        return tuple(order)

    @property
    def n(self) -> int:
        return len(self.gates)

    def fault_atom(self, gate_id: str) -> str:
        return self.fault_atoms[[g.id for g in self.gates].index(gate_id)]

    def __repr__(self) -> str:
        return f"Circuit({', '.join(f'{g.id}:{g.kind.value}' for g in self.gates)})"


def gate_formula(kind: GateKind, inputs: Sequence[Formula]) -> Formula:
    if kind == GateKind.NOT:
        return Not(inputs[0])
    if kind in (GateKind.AND, GateKind.NAND):
        f = conj(inputs)
    elif kind in (GateKind.OR, GateKind.NOR):
        f = disj(inputs)
    else:
        f = reduce(lambda a, b: Not(Iff(a, b)), inputs)
    return Not(f) if kind in (GateKind.NAND, GateKind.NOR) else f


def circuit_theory(c: Circuit) -> Theory:
    """One axiom per gate: not faulty implies output equals the gate function of the inputs."""
    axioms = [Implies(Not(Var(c.fault_atoms[i])),
                      Iff(Var(g.output), gate_formula(g.kind, [Var(l) for l in g.inputs])))
              for i, g in enumerate(c.gates)]
    return Theory(c.vocab, axioms)


def _fault_part(c: Circuit, w: int) -> FaultSet:
    shift = len(c.lines)
    return frozenset(g.id for i, g in enumerate(c.gates) if (w >> (shift + c.n - 1 - i)) & 1)


def _all_fault_sets(c: Circuit) -> List[FaultSet]:
    return [frozenset(g.id for i, g in enumerate(c.gates) if (mask >> i) & 1) for mask in range(1 << c.n)]


def consistent_faults(c: Circuit, obs: Sequence[Formula], theory: Optional[Theory] = None) -> Set[FaultSet]:
    """Fault sets that, held fixed, admit a line valuation satisfying each observation."""
    theory = theory or circuit_theory(c)
    result = set(_all_fault_sets(c))
    for o in obs:
        result &= {_fault_part(c, w) for w in models(c.vocab, o, theory.worlds)}
    return result


def _minimum_cardinality(sets: Set[FaultSet]) -> Set[FaultSet]:
    if not sets:
        return set()
    least = min(len(s) for s in sets)
    return {s for s in sets if len(s) == least}


def diagnoses(c: Circuit, obs: Sequence[Formula], theory: Optional[Theory] = None) -> Set[FaultSet]:
    """Minimum-cardinality consistent fault sets."""
    return _minimum_cardinality(consistent_faults(c, obs, theory))


class FaultProjection:
    """
    The diagnosis problem seen over fault atoms only: worlds are fault sets
    ranked by cardinality, and each line observation becomes the set of
    fault sets consistent with it.
    """

    def __init__(self, c: Circuit, theory: Optional[Theory] = None):
        self.circuit = c
        self.theory = theory or circuit_theory(c)
        self.vocab = Vocabulary(c.fault_atoms)
        self.ranking = RevisionRanking(self.vocab, {w: bin(w).count("1") for w in range(1 << c.n)})

    def world(self, faults: FaultSet) -> int:
        return sum(1 << (self.circuit.n - 1 - i) for i, g in enumerate(self.circuit.gates) if g.id in faults)

    def faults(self, w: int) -> FaultSet:
        return frozenset(g.id for i, g in enumerate(self.circuit.gates) if (w >> (self.circuit.n - 1 - i)) & 1)

    def translate(self, o: Formula) -> Formula:
        consistent = consistent_faults(self.circuit, [o], self.theory)
        return set_formula(self.vocab, (self.world(f) for f in consistent))

    def system(self, obs: Sequence[Formula]):
        translated = [self.translate(o) for o in obs]
        alphabet = [TRUE] + [t for t in translated if t != TRUE and models(self.vocab, t, self.vocab.all_worlds())]
        return build_revision_system(self.ranking, alphabet, len(obs)), tuple(translated)


def diagnoses_bcs(c: Circuit, obs: Sequence[Formula], theory: Optional[Theory] = None) -> Set[FaultSet]:
    """Diagnoses read off the beliefs of a belief change system over fault atoms."""
    projection = FaultProjection(c, theory)
    sys, translated = projection.system(obs)
    return {projection.faults(w) for w in bel(sys, translated).worlds}


def fault_free_attitude(c: Circuit, obs: Sequence[Formula], theory: Optional[Theory] = None) -> Tuple[bool, bool]:
    """(knows fault-free, believes fault-free) after ``obs``, evaluated in the fault-atom system."""
    projection = FaultProjection(c, theory)
    sys, translated = projection.system(obs)
    runs = sys.runs_with_local_state(translated)
    if not runs.size:
        return True, True
    fault_free = conj(Not(Var(a)) for a in c.fault_atoms)
    point = (int(runs[0]), len(translated))
    return model_check(sys, point, Knows(fault_free)), model_check(sys, point, Believes(fault_free))


def show_faults(sets: Set[FaultSet]) -> str:
    ordered = sorted(sets, key=lambda s: (len(s), sorted(s)))
    return "{" + ", ".join("{" + ",".join(sorted(s)) + "}" for s in ordered) + "}"


def check_prop_2_4(c: Circuit, obs: Sequence[Formula]) -> CheckReport:
    """
    Diagnoses evolve by filtering while some current diagnosis survives the
    next observation; otherwise they are replaced by strictly larger fault
    sets disjoint from the old ones.
    """
    theory = circuit_theory(c)
    report = CheckReport(kind="prop24")
    filtering, disjoint, growth = None, None, None
    filter_cases = jump_cases = 0
    current = diagnoses(c, [], theory)
    for m in range(len(obs)):
        upcoming = diagnoses(c, obs[:m + 1], theory)
        still = consistent_faults(c, obs[:m + 1], theory)
        survivors = {f for f in current if f in still}
        if survivors:
            filter_cases += 1
            if upcoming != survivors and filtering is None:
                filtering = {"step": str(m + 1), "expected": show_faults(survivors), "found": show_faults(upcoming)}
        else:
            jump_cases += 1
            report.note(f"observation {m + 1} ({to_text(obs[m])}) is surprising")
            if current & upcoming and disjoint is None:
                disjoint = {"step": str(m + 1), "before": show_faults(current), "after": show_faults(upcoming)}
            before = min((len(f) for f in current), default=-1)
            after = min((len(f) for f in upcoming), default=-1)
            if upcoming and not after > before and growth is None:
                growth = {"step": str(m + 1), "before": str(before), "after": str(after)}
        current = upcoming
    report.add("filtering", filtering is None, filter_cases, filtering)
    report.add("disjoint", disjoint is None, jump_cases, disjoint)
    report.add("cardinality-increase", growth is None, jump_cases, growth)
    return report


def diagnosis_trace(c: Circuit, obs: Sequence[Formula]) -> pd.DataFrame:
    """The diagnosis set after each prefix of ``obs``, with surprising steps flagged."""
    theory = circuit_theory(c)
    rows = []
    previous: Optional[Set[FaultSet]] = None
    for m in range(len(obs) + 1):
        current = diagnoses(c, obs[:m], theory)
        rows.append({
            "step": m,
            "observation": to_text(obs[m - 1]) if m else "",
            "diagnoses": show_faults(current),
            "cardinality": min((len(f) for f in current), default=""),
            "surprising": bool(previous) and not (previous & current),
        })
        previous = current
    return pd.DataFrame(rows, columns=["step", "observation", "diagnoses", "cardinality", "surprising"])


def random_circuit(rng: np.random.Generator, gates: int = 3) -> Circuit:
    """A random acyclic circuit; every gate reads the circuit inputs or earlier gate outputs."""
    kinds = list(GateKind)
    available = ["h1", "h2"]
    built = []
    for i in range(gates):
        kind = kinds[int(rng.integers(len(kinds)))]
        count = 1 if kind == GateKind.NOT else 2
        picks = rng.choice(len(available), size=count, replace=False)
        output = f"h{len(available) + 1}"
        built.append(Gate(f"c{i + 1}", kind, tuple(available[int(p)] for p in picks), output))
        available.append(output)
    return Circuit(built)


def random_observations(rng: np.random.Generator, c: Circuit, length: int = 3) -> List[Formula]:
    """Conjunctions of literals over a random nonempty subset of lines."""
    result = []
    for _ in range(length):
        chosen = [l for l in c.lines if rng.random() < 0.6] or [c.lines[-1]]
        result.append(conj(Var(l) if rng.random() < 0.5 else Not(Var(l)) for l in chosen))
    return result
