"""
AGM revision over ranked priors on worlds.

Covers Grove-style revision from a ranking, revision of epistemic states
(observation sequences) through the longest-consistent-suffix rule, recovery
of a ranking from a black-box revision oracle, and the exhaustive AGM
postulate checkers for belief sets and for epistemic states.
"""
from __future__ import annotations

import logging
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from constants.limits import Settings, get_settings
from kernel import (FALSE, TRUE, BeliefSet, Formula, Not, Or, Vocabulary, conj, models,
                    set_formula, world_formula)
from plausibility import INF, RankedMeasure
from util.errors import CarrierTooLarge, EngineError, NotTotalPreorder, PreconditionViolated
from util.report import CheckReport

logger = logging.getLogger(__name__)

RevisionOracle = Callable[[BeliefSet, Formula], BeliefSet]
EpistemicOracle = Callable[[Tuple[Formula, ...], Formula], BeliefSet]


class RevisionRanking:
    """
    A ranked measure over the theory-constrained universe with every world at
    finite rank. The rank-0 layer is the initial belief set.
    """

    def __init__(self, vocab: Vocabulary, ranks: Dict[int, int], universe: Optional[Iterable[int]] = None):
        self.vocab = vocab
        self.universe = frozenset(ranks.keys() if universe is None else universe)
        missing = self.universe - set(ranks)
        if missing:
            raise ValueError(f"Worlds {vocab.render(missing)} have no rank")
        stray = set(ranks) - self.universe
        if stray:
            raise ValueError(f"Ranked worlds {vocab.render(stray)} are outside the universe")
        if any(r == INF or r is None for r in ranks.values()):
            raise ValueError("Revision rankings need a finite rank on every world")
        self.ranks = {w: int(ranks[w]) for w in sorted(self.universe)}
        self.measure = RankedMeasure(self.ranks)

    @classmethod
    def from_bits(cls, vocab: Vocabulary, ranks: Dict[str, int],
                  universe: Optional[Iterable[int]] = None) -> "RevisionRanking":
        return cls(vocab, {vocab.world(bits): r for bits, r in ranks.items()}, universe)

    def rank(self, w: int) -> int:
        return self.ranks[w]

    def initial_belief(self) -> BeliefSet:
        return BeliefSet(self.vocab, self.measure.minimal(), self.universe)

    def layers(self) -> List[frozenset]:
        values = sorted(set(self.ranks.values()))
        return [frozenset(w for w, r in self.ranks.items() if r == v) for v in values]

    def normalized(self) -> "RevisionRanking":
        """Same preorder with ranks renumbered 0, 1, 2, ..."""
        position = {v: i for i, v in enumerate(sorted(set(self.ranks.values())))}
        return RevisionRanking(self.vocab, {w: position[r] for w, r in self.ranks.items()}, self.universe)

    def __eq__(self, other) -> bool:
        return (isinstance(other, RevisionRanking) and self.universe == other.universe
                and self.normalized().ranks == other.normalized().ranks)

    def __repr__(self) -> str:
        return "RevisionRanking(" + ", ".join(f"{self.vocab.bits(w)}:{r}" for w, r in self.ranks.items()) + ")"


def initial_belief(rk: RevisionRanking) -> BeliefSet:
    return rk.initial_belief()


def grove_revise(rk: RevisionRanking, phi: Formula) -> BeliefSet:
    """Minimum-rank models of ``phi``; the empty belief set when ``phi`` has no models."""
    return BeliefSet(rk.vocab, rk.measure.minimal(models(rk.vocab, phi, rk.universe)), rk.universe)


def _consistent(vocab: Vocabulary, universe: frozenset, f: Formula) -> bool:
    return bool(models(vocab, f, universe))


def f_suffix(E: Sequence[Formula], vocab: Vocabulary, universe: Iterable[int]) -> Tuple[Formula, ...]:
    """
    Longest consistent suffix of an observation sequence.

    Returns ``()`` for the empty sequence and ``(false,)`` when the last
    observation is itself inconsistent.
    """
    E = tuple(E)
    universe = frozenset(universe)
    if not E:
        return ()
    if not _consistent(vocab, universe, E[-1]):
        return (FALSE,)
    for k in range(len(E)):
        if _consistent(vocab, universe, conj(E[k:])):
            return E[k:]
    return E[-1:]


def epistemic_bs(rk: RevisionRanking, E: Sequence[Formula]) -> BeliefSet:
    """Belief set of an epistemic state: grove revision by the conjunction of its suffix."""
    return grove_revise(rk, conj(f_suffix(E, rk.vocab, rk.universe)))


def raw_conditioning_bs(rk: RevisionRanking, E: Sequence[Formula]) -> BeliefSet:
    """Conditioning on the whole sequence; once inconsistent it stays inconsistent."""
    return grove_revise(rk, conj(E))


def grove_oracle(rk: RevisionRanking) -> RevisionOracle:
    """Revision oracle of the ranking; the belief set argument is ignored."""
    return lambda K, phi: grove_revise(rk, phi)


def full_meet_oracle() -> RevisionOracle:
    def revise(K: BeliefSet, phi: Formula) -> BeliefSet:
        kept = K.cl_add(phi)
        return kept if kept.is_consistent() else K.with_worlds(models(K.vocab, phi, K.universe))
    return revise


def drastic_oracle() -> RevisionOracle:
    return lambda K, phi: K.with_worlds(models(K.vocab, phi, K.universe))


def empty_oracle() -> RevisionOracle:
    return lambda K, phi: K.with_worlds(())


def table_oracle(rows: Dict[Tuple[frozenset, frozenset], frozenset]) -> RevisionOracle:
    """Oracle from ``(K worlds, phi models) -> result worlds`` entries."""
    def revise(K: BeliefSet, phi: Formula) -> BeliefSet:
        key = (K.worlds, models(K.vocab, phi, K.universe))
        if key not in rows:
            raise PreconditionViolated(
                f"Oracle table has no entry for K={K.vocab.render(key[0])}, phi={K.vocab.render(key[1])}")
        return K.with_worlds(rows[key])
    return revise


def epistemic_oracle(rk: RevisionRanking) -> EpistemicOracle:
    return lambda E, phi: epistemic_bs(rk, tuple(E) + (phi,))


def reinforcement_es_oracle(vocab: Vocabulary, base: Dict[int, int], boost: int = 3) -> EpistemicOracle:
    """
    A non-AGM epistemic oracle: every observation re-ranks the worlds.

    After observing ``o`` the ``o``-worlds are shifted so their best one sits
    at 0 and the other worlds are shifted to start at ``boost``. The belief
    set after ``E . phi`` is the minimum-rank ``phi``-worlds of the ranking
    reached after ``E``. Each single step behaves like AGM revision, but the
    ranking carries the order of observations, so revising by ``phi`` then
    ``psi`` need not match revising by ``phi & psi``.
    """
    universe = frozenset(base)

    def ranking_after(E: Sequence[Formula]) -> Dict[int, int]:
        ranks = dict(base)
        for o in E:
            inside = models(vocab, o, universe)
            outside = universe - inside
            if not inside:
                continue
            low_in = min(ranks[w] for w in inside)
            low_out = min((ranks[w] for w in outside), default=0)
            ranks = {w: (r - low_in if w in inside else r - low_out + boost) for w, r in ranks.items()}
        return ranks

    def revise(E: Tuple[Formula, ...], phi: Formula) -> BeliefSet:
        ranks = ranking_after(E)
        candidates = models(vocab, phi, universe)
        best = min((ranks[w] for w in candidates), default=None)
        worlds = frozenset(w for w in candidates if ranks[w] == best)
        return BeliefSet(vocab, worlds, universe)

    return revise


def check_belief_set_dependence(es_oracle: EpistemicOracle, E1: Sequence[Formula], E2: Sequence[Formula],
                                phi: Formula) -> Dict[str, object]:
    """
    Compare two epistemic states that hold the same beliefs.

    Returns a summary whose ``dependent`` flag is set when the belief sets
    agree but revising both by ``phi`` gives different results, i.e. the
    revision is not a function of the belief set alone.
    """
    bs1, bs2 = _bs(es_oracle, tuple(E1)), _bs(es_oracle, tuple(E2))
    after1, after2 = es_oracle(tuple(E1), phi), es_oracle(tuple(E2), phi)
    same_before = bs1.worlds == bs2.worlds
    return {
        "same_belief_set": same_before,
        "before": bs1.worlds,
        "after_first": after1.worlds,
        "after_second": after2.worlds,
        "dependent": same_before and after1.worlds != after2.worlds,
    }


def _bs(es_oracle: EpistemicOracle, E: Tuple[Formula, ...]) -> BeliefSet:
    """BS(E): the last observation revises the prefix; BS(<>) is revision by true."""
    if not E:
        return es_oracle((), TRUE)
    return es_oracle(E[:-1], E[-1])


def extract_ranking(oracle: RevisionOracle, K: BeliefSet, universe: Optional[Iterable[int]] = None) -> RevisionRanking:
    """
    Recover a ranking from pairwise oracle queries.

    World ``w`` is strictly preferred to ``v`` when revising ``K`` by
    ``char(w) | char(v)`` believes ``char(w)``. The weak order is the
    complement of the converse strict order; ranks are assigned by peeling
    maximal layers.

    Raises:
        PreconditionViolated: K is inconsistent
        NotTotalPreorder: the answers are not a total preorder
    """
    if not K.is_consistent():
        raise PreconditionViolated("extract_ranking needs a consistent belief set")
    vocab = K.vocab
    worlds = sorted(K.universe if universe is None else universe)
    size = len(worlds)
    strict = np.zeros((size, size), dtype=bool)
    for i in range(size):
        for j in range(i + 1, size):
            w, v = worlds[i], worlds[j]
            result = oracle(K, Or(world_formula(vocab, w), world_formula(vocab, v)))
            strict[i, j] = result.worlds <= {w}
            strict[j, i] = result.worlds <= {v}
            if strict[i, j] and strict[j, i]:
                raise NotTotalPreorder((vocab.bits(w), vocab.bits(v)), "both worlds strictly preferred")
    weak = ~strict.T
    composed = (weak.astype(np.int64) @ weak.astype(np.int64)) > 0
    broken = composed & ~weak
    if broken.any():
        i, j = np.argwhere(broken)[0]
        raise NotTotalPreorder((vocab.bits(worlds[i]), vocab.bits(worlds[j])), "weak order is not transitive")

    ranks: Dict[int, int] = {}
    remaining = list(range(size))
    level = 0
    while remaining:
        top = [i for i in remaining if all(weak[i, j] for j in remaining)]
        if not top:
            raise NotTotalPreorder(tuple(vocab.bits(worlds[i]) for i in remaining[:2]), "no maximal layer")
        for i in top:
            ranks[worlds[i]] = level
        remaining = [i for i in remaining if i not in top]
        level += 1
    logger.info("Extracted a ranking with %d layers from %d worlds", level, size)
    return RevisionRanking(vocab, ranks, worlds)


def check_round_trip(oracle: RevisionOracle, K: BeliefSet) -> CheckReport:
    """Extract a ranking and compare its grove revision with the oracle on every world set."""
    report = CheckReport(kind="round-trip")
    vocab = K.vocab
    try:
        rk = extract_ranking(oracle, K)
    except NotTotalPreorder as exc:
        report.add("total-preorder", False, 0, {"pair": ",".join(exc.witness)}, exc.reason)
        return report
    report.add("total-preorder", True, len(K.universe) ** 2)
    layer = rk.initial_belief().worlds
    report.add("minimal-layer", layer == K.worlds, 1,
               None if layer == K.worlds else {"K": vocab.render(K.worlds), "minimal": vocab.render(layer)})
    worlds = sorted(K.universe)
    witness, cases = None, 0
    for mask in range(1 << len(worlds)):
        subset = frozenset(w for i, w in enumerate(worlds) if (mask >> i) & 1)
        phi = set_formula(vocab, subset)
        cases += 1
        ours, theirs = grove_revise(rk, phi).worlds, oracle(K, phi).worlds
        if ours != theirs:
            witness = {"phi": vocab.render(subset), "extracted": vocab.render(ours), "oracle": vocab.render(theirs)}
            break
    report.add("round-trip", witness is None, cases, witness)
    return report


class _WorldSetOracle:
    """Memoizes an oracle on world-set formulas keyed by the subset itself."""

    def __init__(self, call: Callable[[Formula], BeliefSet], vocab: Vocabulary):
        self.call = call
        self.vocab = vocab
        self.formulas: Dict[frozenset, Formula] = {}
        self.results: Dict[frozenset, frozenset] = {}

    def formula(self, subset: frozenset) -> Formula:
        if subset not in self.formulas:
            self.formulas[subset] = set_formula(self.vocab, subset)
        return self.formulas[subset]

    def __call__(self, subset: frozenset) -> frozenset:
        if subset not in self.results:
            self.results[subset] = self.call(self.formula(subset)).worlds
        return self.results[subset]


def _agm_failures(K: frozenset, universe: frozenset, R: Callable[[frozenset], frozenset],
                  R_variant: Callable[[frozenset], frozenset], phi: frozenset):
    """Single-formula AGM postulates for one phi; yields (name, witness-dict)."""
    result = R(phi)
    if not result <= universe:
        yield "R1", {"result": result}
    if not result <= phi:
        yield "R2", {"result": result}
    meet = K & phi
    if not meet <= result:
        yield "R3", {"result": result, "K&phi": meet}
    if meet and not result <= meet:
        yield "R4", {"result": result, "K&phi": meet}
    if (not result) != (not phi):
        yield "R5", {"result": result}
    variant = R_variant(phi)
    if variant != result:
        yield "R6", {"result": result, "!!phi result": variant}


def check_agm(oracle: RevisionOracle, universe: Iterable[int], K: BeliefSet,
              settings: Optional[Settings] = None, rng: Optional[np.random.Generator] = None) -> CheckReport:
    """
    Check R1-R8 for ``oracle`` at belief set ``K`` over all world-set formulas.

    R7 and R8 range over formula pairs: exhaustive up to
    ``settings.agm_pair_exhaustive`` worlds, otherwise ``settings.sample_count``
    seeded samples.

    Returns:
        CheckReport with one outcome per postulate; witnesses print K, phi
        (and psi) with both sides of the failed inclusion
    """
    settings = settings or get_settings()
    universe = frozenset(universe)
    worlds = sorted(universe)
    n = len(worlds)
    if n > settings.agm_universe:
        raise CarrierTooLarge(n, settings.agm_universe)
    vocab = K.vocab
    rng = rng or np.random.default_rng(settings.seed)
    report = CheckReport(kind="agm")

    R = _WorldSetOracle(lambda f: oracle(K, f), vocab)
    variants: Dict[frozenset, frozenset] = {}

    def R_variant(subset: frozenset) -> frozenset:
        if subset not in variants:
            variants[subset] = oracle(K, Not(Not(R.formula(subset)))).worlds
        return variants[subset]

    sets = [frozenset(w for i, w in enumerate(worlds) if (mask >> i) & 1) for mask in range(1 << n)]
    render = vocab.render

    def show(d: Dict[str, frozenset], **extra) -> Dict[str, str]:
        base = {"K": render(K.worlds)}
        base.update({k: render(v) for k, v in extra.items()})
        base.update({k: render(v) for k, v in d.items()})
        return base

    try:
        first: Dict[str, Dict[str, str]] = {}
        for phi in sets:
            for name, witness in _agm_failures(K.worlds, universe, R, R_variant, phi):
                first.setdefault(name, show(witness, phi=phi))
        for name in ("R1", "R2", "R3", "R4", "R5", "R6"):
            report.add(name, name not in first, len(sets), first.get(name))

        if n <= settings.agm_pair_exhaustive:
            pairs = [(a, b) for a in range(len(sets)) for b in range(len(sets))]
            note = None
        else:
            draws = rng.integers(0, len(sets), size=(settings.sample_count, 2))
            pairs = [(int(a), int(b)) for a, b in draws]
            note = f"{len(pairs)} sampled pairs"
        r7, r8 = None, None
        for a, b in pairs:
            phi, psi = sets[a], sets[b]
            left = R(phi) & psi
            both = R(phi & psi)
            if r7 is None and not left <= both:
                r7 = show({"K*phi&psi": left, "K*(phi&psi)": both}, phi=phi, psi=psi)
            if r8 is None and left and not both <= left:
                r8 = show({"K*(phi&psi)": both, "K*phi&psi": left}, phi=phi, psi=psi)
            if r7 is not None and r8 is not None:
                break
        report.add("R7", r7 is None, len(pairs), r7, note)
        report.add("R8", r8 is None, len(pairs), r8, note)
    except EngineError as exc:
        report.add("oracle", False, 0, {"error": str(exc)}, "oracle could not answer a query")
    logger.info("AGM check over %d worlds: %s", n, "pass" if report.passed else "violation")
    return report


def check_agm_primed(es_oracle: EpistemicOracle, universe: Iterable[int], vocab: Vocabulary,
                     depth: int = 3, settings: Optional[Settings] = None) -> CheckReport:
    """
    Check R1'-R9' for an epistemic-state oracle.

    ``es_oracle(E, phi)`` is BS(E . phi). BS(E) is taken as
    ``es_oracle(E[:-1], E[-1])`` and BS(<>) as ``es_oracle((), true)``.
    Observation sequences are built from world-set formulas so that every
    revised sequence has length at most ``depth``.
    """
    settings = settings or get_settings()
    universe = frozenset(universe)
    worlds = sorted(universe)
    n = len(worlds)
    if n > settings.primed_universe:
        raise CarrierTooLarge(n, settings.primed_universe)
    if depth > settings.primed_depth:
        raise CarrierTooLarge(depth, settings.primed_depth)
    if depth < 1:
        raise ValueError("depth must be at least 1")

    sets = [frozenset(w for i, w in enumerate(worlds) if (mask >> i) & 1) for mask in range(1 << n)]
    formula = {s: set_formula(vocab, s) for s in sets}
    cache: Dict[Tuple[frozenset, ...], frozenset] = {}

    def BS(seq: Tuple[frozenset, ...]) -> frozenset:
        if seq not in cache:
            if seq:
                cache[seq] = es_oracle(tuple(formula[s] for s in seq[:-1]), formula[seq[-1]]).worlds
            else:
                cache[seq] = es_oracle((), TRUE).worlds
        return cache[seq]

    def sequences(max_len: int) -> List[Tuple[frozenset, ...]]:
        result = [()]
        frontier = [()]
        for _ in range(max_len):
            frontier = [seq + (s,) for seq in frontier for s in sets]
            result.extend(frontier)
        return result

    render = vocab.render
    report = CheckReport(kind="agm-primed")
    single = sequences(depth - 1)
    first: Dict[str, Dict[str, str]] = {}

    def fail(name: str, E, **sets_):
        if name not in first:
            witness = {"E": "<" + ", ".join(render(s) for s in E) + ">"}
            witness.update({k: render(v) for k, v in sets_.items()})
            first[name] = witness

    variants: Dict[Tuple, frozenset] = {}
    counts = {name: 0 for name in ("R1'", "R2'", "R3'", "R4'", "R5'", "R6'", "R7'", "R8'", "R9'")}
    for E in single:
        before = BS(E)
        for phi in sets:
            result = BS(E + (phi,))
            for name in ("R1'", "R2'", "R3'", "R4'", "R5'", "R6'"):
                counts[name] += 1
            if not result <= universe:
                fail("R1'", E, phi=phi, result=result)
            if not result <= phi:
                fail("R2'", E, phi=phi, result=result)
            meet = before & phi
            if not meet <= result:
                fail("R3'", E, phi=phi, result=result, **{"BS(E)&phi": meet})
            if meet and not result <= meet:
                fail("R4'", E, phi=phi, result=result, **{"BS(E)&phi": meet})
            if (not result) != (not phi):
                fail("R5'", E, phi=phi, result=result)
            key = E + (phi,)
            if key not in variants:
                variants[key] = es_oracle(tuple(formula[s] for s in E), Not(Not(formula[phi]))).worlds
            if variants[key] != result:
                fail("R6'", E, phi=phi, result=result, variant=variants[key])
            for psi in sets:
                counts["R7'"] += 1
                counts["R8'"] += 1
                left = result & psi
                both = BS(E + (phi & psi,))
                if not left <= both:
                    fail("R7'", E, phi=phi, psi=psi, left=left, right=both)
                if left and not both <= left:
                    fail("R8'", E, phi=phi, psi=psi, left=both, right=left)
                if len(E) <= depth - 2 and phi & psi:
                    counts["R9'"] += 1
                    stepwise = BS(E + (phi, psi))
                    if stepwise != both:
                        fail("R9'", E, phi=phi, psi=psi, stepwise=stepwise, conjoined=both)
    for name, count in counts.items():
        report.add(name, name not in first, count, first.get(name))
    logger.info("Primed postulates at depth %d over %d worlds: %s", depth, n,
                "pass" if report.passed else "violation")
    return report
