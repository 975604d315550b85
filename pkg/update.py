"""
KM update over update structures.

An update structure pairs the theory-consistent worlds with a distance
function. Updating ``mu`` by ``phi`` keeps, for every world of ``mu``
separately, the ``phi``-worlds no other ``phi``-world is strictly closer to.
"""
from __future__ import annotations

import logging
from typing import Callable, Dict, Iterable, Optional, Sequence, Tuple

import numpy as np

from constants.distance_kinds import DistanceKind
from constants.limits import Settings, get_settings
from kernel import (Atom, BeliefSet, Formula, Not, Theory, Vocabulary, enumerate_worlds, evaluate, models,
                    set_formula)
from plausibility import Comparison, ComparisonResult, transitive_closure
from util.errors import CarrierTooLarge, EngineError, PreconditionViolated, UnknownDistanceValue
from util.report import CheckReport

logger = logging.getLogger(__name__)

UpdateOracle = Callable[[BeliefSet, Formula], BeliefSet]


class DistanceFunction:
    """
    Distance on worlds: Hamming, weighted Hamming, an explicit numeric matrix
    or an explicit table of labels drawn from a partial order.

    Use the ``hamming``, ``weighted_hamming``, ``from_matrix`` and
    ``from_poset`` constructors rather than ``__init__``.
    """

    def __init__(self, kind: DistanceKind, vocab: Vocabulary, weights: Optional[np.ndarray] = None,
                 entries: Optional[Dict[Tuple[int, int], object]] = None,
                 labels: Sequence[str] = (), order: Iterable[Tuple[str, str]] = (), zero: str = "0"):
        self.kind = kind
        self.vocab = vocab
        self.weights = weights
        self.entries = dict(entries or {})
        self.zero = zero
        self.declared_order = tuple(order)
        self.labels: Tuple[str, ...] = ()
        self.strict = np.zeros((0, 0), dtype=bool)
        if kind == DistanceKind.POSET:
            names = [zero] + [l for l in labels if l != zero]
            for a, b in self.declared_order:
                for label in (a, b):
                    if label not in names:
                        names.append(label)
            self.labels = tuple(names)
            self._label_index = {l: i for i, l in enumerate(self.labels)}
            relation = np.zeros((len(names), len(names)), dtype=bool)
            for a, b in self.declared_order:
                relation[self._label_index[a], self._label_index[b]] = True
            self.declared = relation.copy()
            # zero sits below every other label
            relation[0, 1:] = True
            self.strict = transitive_closure(relation)

    @classmethod
    def hamming(cls, vocab: Vocabulary) -> "DistanceFunction":
        return cls(DistanceKind.HAMMING, vocab)

    @classmethod
    def weighted_hamming(cls, vocab: Vocabulary, weights: Dict[str, float]) -> "DistanceFunction":
        """Sum of per-atom weights over the atoms on which two worlds differ; unlisted atoms weigh 1."""
        vector = np.ones(vocab.n, dtype=float)
        for name, weight in weights.items():
            if weight <= 0:
                raise ValueError(f"Weight of atom {name} must be positive, got {weight}")
            vector[vocab.index(Atom.of(name))] = float(weight)
        return cls(DistanceKind.WEIGHTED, vocab, weights=vector)

    @classmethod
    def from_matrix(cls, vocab: Vocabulary, entries: Dict[Tuple[int, int], float]) -> "DistanceFunction":
        return cls(DistanceKind.MATRIX, vocab, entries={k: float(v) for k, v in entries.items()})

    @classmethod
    def from_poset(cls, vocab: Vocabulary, entries: Dict[Tuple[int, int], str],
                   order: Iterable[Tuple[str, str]], zero: str = "0") -> "DistanceFunction":
        labels = sorted(set(entries.values()) | {zero})
        return cls(DistanceKind.POSET, vocab, entries=entries, labels=labels, order=order, zero=zero)

    @property
    def numeric(self) -> bool:
        return self.kind.numeric

    def describe(self) -> str:
        if self.kind == DistanceKind.WEIGHTED:
            return "weighted hamming (" + ", ".join(
                f"{a}={w:g}" for a, w in zip(self.vocab.atoms, self.weights)) + ")"
        if self.kind == DistanceKind.POSET:
            return f"poset over labels {{{', '.join(self.labels)}}}"
        return self.kind.value

    def value(self, w: int, v: int):
        if self.kind == DistanceKind.HAMMING:
            return bin(w ^ v).count("1")
        if self.kind == DistanceKind.WEIGHTED:
            return float(self.pairwise([w], [v])[0, 0])
        if (w, v) not in self.entries:
            raise ValueError(f"No distance given from {self.vocab.bits(w)} to {self.vocab.bits(v)}")
        return self.entries[(w, v)]

    def pairwise(self, sources: Sequence[int], targets: Sequence[int]) -> np.ndarray:
        """Numeric distance matrix with rows ``sources`` and columns ``targets``."""
        if not self.numeric:
            raise ValueError("pairwise distances need a numeric distance function")
        if self.kind == DistanceKind.MATRIX:
            return np.array([[self.value(w, v) for v in targets] for w in sources], dtype=float).reshape(
                len(sources), len(targets))
        table = self.vocab.table()
        diff = table[np.asarray(sources, dtype=np.int64)][:, None, :] != \
            table[np.asarray(targets, dtype=np.int64)][None, :, :]
        if self.kind == DistanceKind.HAMMING:
            return diff.sum(axis=2).astype(float)
        return diff.astype(float) @ self.weights

    def label_id(self, label) -> int:
        if label not in self._label_index:
            raise UnknownDistanceValue(label)
        return self._label_index[label]

    def label_matrix(self, sources: Sequence[int], targets: Sequence[int]) -> np.ndarray:
        return np.array([[self.label_id(self.value(w, v)) for v in targets] for w in sources],
                        dtype=np.int64).reshape(len(sources), len(targets))

    def less(self, a, b) -> bool:
        """Strict order on distance values."""
        if self.numeric:
            for x in (a, b):
                if isinstance(x, bool) or not isinstance(x, (int, float, np.integer, np.floating)) or x < 0:
                    raise UnknownDistanceValue(x)
            return a < b
        return bool(self.strict[self.label_id(a), self.label_id(b)])

    def is_zero(self, a) -> bool:
        return a == 0 if self.numeric else a == self.zero


class UpdateStructure:
    """
    Worlds plus a distance function. ``universe`` defaults to the models of
    ``theory``; an explicit universe is accepted as given so that
    ``validate_update_structure`` can report coverage problems.
    """

    def __init__(self, vocab: Vocabulary, d: Optional[DistanceFunction] = None,
                 theory: Optional[Theory] = None, universe: Optional[Iterable[int]] = None):
        self.vocab = vocab
        self.d = d or DistanceFunction.hamming(vocab)
        self.theory = theory
        self.universe = frozenset(enumerate_worlds(vocab, theory) if universe is None else universe)
        self.worlds = tuple(sorted(self.universe))

    def __repr__(self) -> str:
        return f"UpdateStructure({self.vocab!r}, {self.d.describe()}, {len(self.worlds)} worlds)"


def compare_distance(U: UpdateStructure, v1, v2) -> ComparisonResult:
    less, greater = U.d.less(v1, v2), U.d.less(v2, v1)
    if less:
        order = Comparison.LT
    elif greater:
        order = Comparison.GT
    elif v1 == v2 or U.d.numeric:
        order = Comparison.EQ
    else:
        order = Comparison.INCOMPARABLE
    return ComparisonResult(order, U.d.is_zero(v1), U.d.is_zero(v2))


def min_u(U: UpdateStructure, A: Iterable[int], B: Iterable[int]) -> frozenset:
    """
    Worlds of ``B`` that some world of ``A`` sees at a distance no other
    ``B`` world strictly undercuts.
    """
    sources, targets = sorted(A), sorted(B)
    if not sources or not targets:
        return frozenset()
    if U.d.numeric:
        dist = U.d.pairwise(sources, targets)
        keep = (dist <= dist.min(axis=1, keepdims=True)).any(axis=0)
    else:
        ids = U.d.label_matrix(sources, targets)
        # closer[a, j, k]: target j is strictly closer to source a than target k
        closer = U.d.strict[ids[:, :, None], ids[:, None, :]]
        keep = (~closer.any(axis=1)).any(axis=0)
    return frozenset(w for w, k in zip(targets, keep) if k)


def km_update(U: UpdateStructure, mu: BeliefSet, phi: Formula) -> BeliefSet:
    return BeliefSet(U.vocab, min_u(U, mu.worlds, models(U.vocab, phi, U.universe)), U.universe)


def km_update_seq(U: UpdateStructure, mu: BeliefSet, obs: Sequence[Formula]) -> BeliefSet:
    for phi in obs:
        mu = km_update(U, mu, phi)
    return mu


def sufficient_information(U: UpdateStructure, w: int, w2: int, phi: Formula) -> bool:
    """
    True when no ``phi``-world is strictly closer to ``w`` than ``w2``.

    Raises:
        PreconditionViolated: ``w2`` does not satisfy ``phi``
    """
    if not evaluate(U.vocab, w2, phi):
        raise PreconditionViolated(f"{U.vocab.bits(w2)} does not satisfy {phi}")
    reference = U.d.value(w, w2)
    return not any(U.d.less(U.d.value(w, v), reference) for v in models(U.vocab, phi, U.universe))


def grove_update_oracle(U: UpdateStructure) -> UpdateOracle:
    """
    Update by global minimisation: rank every world by its distance to the
    nearest world of ``mu`` and keep the best ``phi``-worlds. This is revision
    in disguise and breaks the disjunction postulate.
    """
    if not U.d.numeric:
        raise ValueError("grove_update_oracle needs a numeric distance function")

    def update(mu: BeliefSet, phi: Formula) -> BeliefSet:
        sources, targets = sorted(mu.worlds), sorted(models(U.vocab, phi, U.universe))
        if not sources or not targets:
            return mu.with_worlds(())
        rank = U.d.pairwise(sources, targets).min(axis=0)
        return mu.with_worlds(w for w, r in zip(targets, rank) if r == rank.min())

    return update


def km_oracle(U: UpdateStructure) -> UpdateOracle:
    return lambda mu, phi: km_update(U, mu, phi)


def _subset_of(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a & ~b) == 0


def check_km(oracle: UpdateOracle, universe: Iterable[int], vocab: Vocabulary,
             settings: Optional[Settings] = None, rng: Optional[np.random.Generator] = None) -> CheckReport:
    """
    Check U1-U8 for an update oracle over every world-set formula.

    World sets are bitmasks over the sorted universe. The oracle is queried
    once per (mu, phi) pair and once more per pair for U4. U1-U4, U7 and U8
    are exhaustive over the whole universe; U5 and U6 are exhaustive up to
    ``settings.km_triple_exhaustive`` worlds and sampled above it.
    """
    settings = settings or get_settings()
    worlds = sorted(universe)
    universe = frozenset(worlds)
    n = len(worlds)
    if n > settings.km_universe:
        raise CarrierTooLarge(n, settings.km_universe)
    rng = rng or np.random.default_rng(settings.seed)
    size = 1 << n
    masks = np.arange(size, dtype=np.int64)
    sets = [frozenset(w for i, w in enumerate(worlds) if (m >> i) & 1) for m in range(size)]
    formulas = [set_formula(vocab, s) for s in sets]
    position = {w: i for i, w in enumerate(worlds)}
    report = CheckReport(kind="km")

    def mask_of(worlds_: Iterable[int]) -> int:
        return sum(1 << position[w] for w in worlds_)

    def show(**kw) -> Dict[str, str]:
        return {k: vocab.render(sets[int(v)]) for k, v in kw.items()}

    try:
        table = np.zeros((size, size), dtype=np.int64)
        for mu in range(size):
            state = BeliefSet(vocab, sets[mu], universe)
            for phi in range(size):
                table[mu, phi] = mask_of(oracle(state, formulas[phi]).worlds)
    except EngineError as exc:
        report.add("oracle", False, 0, {"error": str(exc)}, "oracle could not answer a query")
        return report

    mu_grid, phi_grid = np.meshgrid(masks, masks, indexing="ij")
    pair_cases = size * size

    def first(bad: np.ndarray, *grids) -> Optional[Tuple[int, ...]]:
        hits = np.argwhere(bad)
        if not len(hits):
            return None
        return tuple(int(g[tuple(hits[0])]) for g in grids)

    hit = first(~_subset_of(table, phi_grid), mu_grid, phi_grid)
    report.add("U1", hit is None, pair_cases,
               hit and show(mu=hit[0], phi=hit[1], result=table[hit]))

    bad = _subset_of(mu_grid, phi_grid) & (table != mu_grid)
    hit = first(bad, mu_grid, phi_grid)
    report.add("U2", hit is None, pair_cases, hit and show(mu=hit[0], phi=hit[1], result=table[hit]))

    bad = (table == 0) != ((mu_grid == 0) | (phi_grid == 0))
    hit = first(bad, mu_grid, phi_grid)
    report.add("U3", hit is None, pair_cases, hit and show(mu=hit[0], phi=hit[1], result=table[hit]))

    # U4: a syntactic variant of phi must give the same result
    witness = None
    try:
        for mu in range(size):
            state = BeliefSet(vocab, sets[mu], universe)
            for phi in range(size):
                variant = mask_of(oracle(state, Not(Not(formulas[phi]))).worlds)
                if variant != table[mu, phi]:
                    witness = show(mu=mu, phi=phi, result=table[mu, phi], variant=variant)
                    break
            if witness:
                break
    except EngineError as exc:
        witness = {"error": str(exc)}
    report.add("U4", witness is None, pair_cases, witness)

    exhaustive = n <= settings.km_triple_exhaustive
    note = None if exhaustive else f"{settings.sample_count} sampled cases"
    if exhaustive:
        a, b, c = (g.ravel() for g in np.meshgrid(masks, masks, masks, indexing="ij"))
    else:
        a, b, c = rng.integers(0, size, size=(3, settings.sample_count))
    triples = len(a)

    # U5: (mu o phi) & psi entails mu o (phi & psi)
    bad = ~_subset_of(table[a, b] & c, table[a, b & c])
    hit = first(bad, a, b, c)
    report.add("U5", hit is None, triples,
               hit and show(mu=hit[0], phi=hit[1], psi=hit[2], left=table[hit[0], hit[1]] & hit[2],
                            right=table[hit[0], hit[1] & hit[2]]), note)

    # U6: results that entail each other's inputs coincide
    r1, r2 = table[a, b], table[a, c]
    bad = _subset_of(r1, c) & _subset_of(r2, b) & (r1 != r2)
    hit = first(bad, a, b, c)
    report.add("U6", hit is None, triples,
               hit and show(mu=hit[0], phi1=hit[1], phi2=hit[2], left=table[hit[0], hit[1]],
                            right=table[hit[0], hit[2]]), note)

    # U7: complete mu only
    singletons = np.array([1 << i for i in range(n)], dtype=np.int64)
    s, p1, p2 = (g.ravel() for g in np.meshgrid(singletons, masks, masks, indexing="ij"))
    bad = ~_subset_of(table[s, p1] & table[s, p2], table[s, p1 | p2])
    hit = first(bad, s, p1, p2)
    report.add("U7", hit is None, len(s),
               hit and show(mu=hit[0], phi1=hit[1], phi2=hit[2], left=table[hit[0], hit[1]] & table[hit[0], hit[2]],
                            right=table[hit[0], hit[1] | hit[2]]))

    # U8: updating a disjunction is the union of the updates; one mu1 at a time
    hit = None
    for mu1 in range(size):
        bad = table[mu1 | mu_grid, phi_grid] != (table[mu1, phi_grid] | table[mu_grid, phi_grid])
        found = first(bad, mu_grid, phi_grid)
        if found:
            hit = (mu1,) + found
            break
    report.add("U8", hit is None, size ** 3,
               hit and show(mu1=hit[0], mu2=hit[1], phi=hit[2], joint=table[hit[0] | hit[1], hit[2]],
                            separate=table[hit[0], hit[2]] | table[hit[1], hit[2]]))
    logger.info("KM check over %d worlds: %s", n, "pass" if report.passed else "violation")
    return report


def validate_update_structure(U: UpdateStructure) -> CheckReport:
    """Structural findings for an update structure; problems are reported, never raised."""
    report = CheckReport(kind="update-structure")
    vocab, d, worlds = U.vocab, U.d, U.worlds
    if d.kind == DistanceKind.MATRIX or d.kind == DistanceKind.POSET:
        missing = [(w, v) for w in worlds for v in worlds if (w, v) not in d.entries]
        report.add("total", not missing, len(worlds) ** 2,
                   {"pair": f"{vocab.bits(missing[0][0])}->{vocab.bits(missing[0][1])}"} if missing else None)
    else:
        missing = []
    given = [(w, v) for w in worlds for v in worlds if (w, v) not in missing]

    self_bad = next(((w, w) for w in worlds if (w, w) in given and not d.is_zero(d.value(w, w))), None)
    report.add("zero-self-distance", self_bad is None, len(worlds),
               {"world": vocab.bits(self_bad[0]), "distance": str(d.value(*self_bad))} if self_bad else None)

    zero_bad = next(((w, v) for w, v in given if w != v and d.is_zero(d.value(w, v))), None)
    report.add("zero-only-on-diagonal", zero_bad is None, len(given),
               {"pair": f"{vocab.bits(zero_bad[0])}->{vocab.bits(zero_bad[1])}"} if zero_bad else None)

    if d.numeric:
        negative = next(((w, v) for w, v in given if d.value(w, v) < 0), None)
        report.add("zero-minimal", negative is None, len(given),
                   {"pair": f"{vocab.bits(negative[0])}->{vocab.bits(negative[1])}",
                    "distance": str(d.value(*negative))} if negative else None)
    else:
        below_zero = [d.labels[i] for i in np.flatnonzero(d.declared[:, 0])]
        report.add("zero-minimal", not below_zero, len(d.labels),
                   {"labels": ",".join(below_zero)} if below_zero else None)
        cyclic = [d.labels[i] for i in np.flatnonzero(np.diag(d.strict))]
        report.add("poset-order", not cyclic, len(d.labels) ** 2,
                   {"cycle": ",".join(cyclic)} if cyclic else None)
        closure = transitive_closure(d.declared)
        if (closure & ~d.declared).any():
            report.note("declared distance order is not transitively closed; its closure is used")

    expected = frozenset(enumerate_worlds(vocab, U.theory))
    missing_models = expected - U.universe
    stray = U.universe - expected
    report.add("coverage", not missing_models and not stray, len(expected),
               {"missing": vocab.render(missing_models), "extra": vocab.render(stray)}
               if missing_models or stray else None)
    return report
