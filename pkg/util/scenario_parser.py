"""
Parsing of scenario documents and the engine's text file formats.

Scenario files are JSON documents validated by the ``Scenario`` model;
validation problems surface as ``ScenarioError`` carrying the dotted field
path. Distance matrices, oracle tables, circuits and observation lists are
plain text.
"""
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import pandas as pd
from pydantic import BaseModel, Field, ValidationError, model_validator

from constants.gate_kinds import GateKind
from diagnosis import Circuit, Gate
from kernel import TRUE, Formula, Theory, Vocabulary, literals, models, parse
from revision import RevisionRanking
from update import DistanceFunction, UpdateStructure
from util.errors import EngineError, ScenarioError

ORDER_LINE = re.compile(r"^\s*(\S+)\s*<\s*(\S+)\s*$")
GATE_LINE = re.compile(r"^gate\s+(\S+)\s+(\S+)\s+(.+?)\s*->\s*(\S+)$")


class DistanceSpec(BaseModel):
    kind: Literal["hamming", "weighted", "matrix", "poset"] = "hamming"
    weights: Dict[str, float] = Field(default_factory=dict)
    file: Optional[str] = None
    entries: Optional[Dict[str, Dict[str, Union[float, str]]]] = None
    order: List[str] = Field(default_factory=list)
    zero: str = "0"

    @model_validator(mode="after")
    def check_source(self):
        if self.kind in ("matrix", "poset") and self.file is None and self.entries is None:
            raise ValueError(f"a {self.kind} distance needs 'file' or 'entries'")
        return self


class PriorSpec(BaseModel):
    kind: Literal["ranked", "distance", "lex"]
    ranks: Dict[str, int] = Field(default_factory=dict)
    distance: DistanceSpec = Field(default_factory=DistanceSpec)


class Scenario(BaseModel):
    vocabulary: List[str]
    theory: List[str] = Field(default_factory=list)
    mode: Literal["revision", "update", "simulate"]
    prior: PriorSpec
    initial: Optional[str] = None
    observations: List[str] = Field(default_factory=list)
    horizon: Optional[int] = None
    alphabet: Optional[List[str]] = None

    @model_validator(mode="after")
    def check_prior_kind(self):
        if self.mode == "revision" and self.prior.kind != "ranked":
            raise ValueError("revision scenarios need a ranked prior")
        if self.mode == "update" and self.prior.kind == "ranked":
            raise ValueError("update scenarios need a distance prior")
        if self.horizon is not None and self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if self.mode == "simulate" and self.horizon is not None and self.horizon < len(self.observations):
            raise ValueError(f"horizon {self.horizon} is shorter than the {len(self.observations)} observations")
        return self


@dataclass
class ScenarioContext:
    """A validated scenario with every formula parsed and its prior built."""
    scenario: Scenario
    vocab: Vocabulary
    theory: Theory
    observations: List[Formula]
    ranking: Optional[RevisionRanking] = None
    structure: Optional[UpdateStructure] = None
    initial: Optional[Formula] = None
    alphabet: List[Formula] = field(default_factory=list)
    source: Optional[Path] = None

    @property
    def universe(self) -> frozenset:
        return self.theory.universe

    @property
    def horizon(self) -> int:
        return self.scenario.horizon if self.scenario.horizon is not None else len(self.observations)


def parse_field(path: str, text: str, vocab: Vocabulary) -> Formula:
    try:
        return parse(text, vocab)
    except EngineError as exc:
        raise ScenarioError(path, str(exc))


def parse_scenario(document: dict, base: Optional[Path] = None) -> ScenarioContext:
    try:
        scenario = Scenario.model_validate(document)
    except ValidationError as exc:
        error = exc.errors()[0]
        raise ScenarioError(".".join(str(p) for p in error["loc"]), error["msg"])

    try:
        vocab = Vocabulary(scenario.vocabulary)
    except (EngineError, ValueError) as exc:
        raise ScenarioError("vocabulary", str(exc))
    formulas = [parse_field(f"theory.{i}", t, vocab) for i, t in enumerate(scenario.theory)]
    try:
        theory = Theory(vocab, formulas)
    except EngineError as exc:
        raise ScenarioError("theory", str(exc))
    observations = [parse_field(f"observations.{i}", t, vocab) for i, t in enumerate(scenario.observations)]
    context = ScenarioContext(scenario, vocab, theory, observations, source=base)

    if scenario.initial is not None:
        context.initial = parse_field("initial", scenario.initial, vocab)
    if scenario.alphabet is not None:
        context.alphabet = [parse_field(f"alphabet.{i}", t, vocab) for i, t in enumerate(scenario.alphabet)]
    elif observations:
        context.alphabet = list(dict.fromkeys([TRUE] + observations))
    else:
        context.alphabet = [TRUE] + literals(vocab)

    if scenario.prior.kind == "ranked":
        context.ranking = _ranking(scenario.prior, vocab, theory)
    else:
        d = build_distance(scenario.prior.distance, vocab, base)
        context.structure = UpdateStructure(vocab, d, theory)
    return context


def _ranking(prior: PriorSpec, vocab: Vocabulary, theory: Theory) -> RevisionRanking:
    ranks = {}
    for bits, rank in prior.ranks.items():
        try:
            w = vocab.world(bits)
        except ValueError as exc:
            raise ScenarioError(f"prior.ranks.{bits}", str(exc))
        if w not in theory.universe:
            raise ScenarioError(f"prior.ranks.{bits}", "world violates the theory")
        ranks[w] = rank
    missing = theory.universe - set(ranks)
    if missing:
        raise ScenarioError("prior.ranks", f"no rank for worlds {vocab.render(missing)}")
    return RevisionRanking(vocab, ranks, theory.universe)


def build_distance(spec: DistanceSpec, vocab: Vocabulary, base: Optional[Path] = None) -> DistanceFunction:
    if spec.kind == "hamming":
        return DistanceFunction.hamming(vocab)
    if spec.kind == "weighted":
        try:
            return DistanceFunction.weighted_hamming(vocab, spec.weights)
        except (EngineError, ValueError) as exc:
            raise ScenarioError("prior.distance.weights", str(exc))
    if spec.file is not None:
        path = Path(spec.file) if base is None else base / spec.file
        return load_distance_matrix(path, vocab)
    table = {(vocab.world(a), vocab.world(b)): value
             for a, row in spec.entries.items() for b, value in row.items()}
    if spec.kind == "matrix":
        return DistanceFunction.from_matrix(vocab, {k: float(Fraction(str(v))) for k, v in table.items()})
    order = [_order_pair(line) for line in spec.order]
    return DistanceFunction.from_poset(vocab, {k: str(v) for k, v in table.items()}, order, spec.zero)


def _order_pair(line: str) -> Tuple[str, str]:
    match = ORDER_LINE.match(line)
    if not match:
        raise ScenarioError("prior.distance.order", f"expected 'a < b', got {line!r}")
    return match.group(1), match.group(2)


def parse_distance_matrix(text: str, vocab: Vocabulary, zero: str = "0") -> DistanceFunction:
    """
    Table with a header row and column of world bitstrings. Entries are
    nonnegative rationals, or labels when an ``order:`` block follows.
    """
    table_text, _, order_text = text.partition("order:")
    rows = [line.split() for line in table_text.splitlines() if line.strip() and not line.lstrip().startswith("#")]
    if len(rows) < 2:
        raise ScenarioError("distance", "matrix needs a header row and at least one data row")
    header = rows[0] if len(rows[0]) == len(rows[1]) - 1 else rows[0][1:]
    if any(len(r) != len(header) + 1 for r in rows[1:]):
        raise ScenarioError("distance", "matrix rows do not match the header width")
    frame = pd.DataFrame([r[1:] for r in rows[1:]], index=[r[0] for r in rows[1:]], columns=header)
    entries = {}
    for row, values in frame.iterrows():
        for column, value in values.items():
            entries[(vocab.world(str(row)), vocab.world(str(column)))] = value
    order = [_order_pair(line) for line in order_text.splitlines() if line.strip()]
    if not order_text.strip():
        try:
            numeric = {k: float(Fraction(v)) for k, v in entries.items()}
        except ValueError as exc:
            raise ScenarioError("distance", f"non-numeric entry without an order block ({exc})")
        return DistanceFunction.from_matrix(vocab, numeric)
    return DistanceFunction.from_poset(vocab, entries, order, zero)


def load_distance_matrix(path: Path, vocab: Vocabulary) -> DistanceFunction:
    if not Path(path).exists():
        raise FileNotFoundError(f"Distance matrix not found: {path}")
    return parse_distance_matrix(Path(path).read_text(encoding="utf-8"), vocab)


def load_scenario(path: str) -> ScenarioContext:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Scenario file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            document = json.load(f)
        except json.JSONDecodeError as exc:
            raise ScenarioError("", f"{path} is not valid JSON: {exc}")
    return parse_scenario(document, path.parent)


def load_structure(path: str) -> UpdateStructure:
    """``{"vocabulary": [...], "theory": [...], "distance": {...}}`` as an update structure."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Structure file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        document = json.load(f)
    try:
        vocab = Vocabulary(document["vocabulary"])
        spec = DistanceSpec.model_validate(document.get("distance", {}))
    except KeyError:
        raise ScenarioError("vocabulary", "missing")
    except ValidationError as exc:
        error = exc.errors()[0]
        raise ScenarioError("distance." + ".".join(str(p) for p in error["loc"]), error["msg"])
    theory = Theory(vocab, [parse_field(f"theory.{i}", t, vocab) for i, t in enumerate(document.get("theory", []))])
    return UpdateStructure(vocab, build_distance(spec, vocab, path.parent), theory)


def parse_oracle_table(text: str, vocab: Vocabulary, universe) -> Dict[Tuple[frozenset, frozenset], frozenset]:
    """Lines ``K=<formula> ; phi=<formula> ; result=<formula>``; ``#`` starts a comment."""
    rows = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = dict(part.strip().split("=", 1) for part in line.split(";") if "=" in part)
        if set(fields) != {"K", "phi", "result"}:
            raise ScenarioError(f"line {number}", "expected K=... ; phi=... ; result=...")
        k, phi, result = (models(vocab, parse_field(f"line {number}.{key}", fields[key], vocab), universe)
                          for key in ("K", "phi", "result"))
        rows[(k, phi)] = result
    return rows


def parse_circuit(text: str) -> Circuit:
    """``gate <id> <kind> <in...> -> <out>`` per line; ``#`` starts a comment."""
    gates = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = GATE_LINE.match(line)
        if not match:
            raise ScenarioError(f"line {number}", f"expected 'gate <id> <kind> <in...> -> <out>', got {line!r}")
        gate_id, kind, inputs, output = match.groups()
        try:
            gates.append(Gate(gate_id, GateKind(kind.upper()), tuple(inputs.split()), output))
        except ValueError as exc:
            raise ScenarioError(f"line {number}", str(exc))
    if not gates:
        raise ScenarioError("", "circuit has no gates")
    return Circuit(gates)


def load_circuit(path: str) -> Circuit:
    if not Path(path).exists():
        raise FileNotFoundError(f"Circuit file not found: {path}")
    return parse_circuit(Path(path).read_text(encoding="utf-8"))


def load_observations(path: str, vocab: Vocabulary) -> List[Formula]:
    """One formula per non-empty line; ``#`` starts a comment."""
    if not Path(path).exists():
        raise FileNotFoundError(f"Observation file not found: {path}")
    result = []
    for number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            result.append(parse_field(f"line {number}", line, vocab))
    return result
