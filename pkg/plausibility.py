"""
Plausibility measures over finite carriers.

Three concrete measures share one interface: ``RankedMeasure`` (ordinal ranks,
lower is more plausible), ``PreferenceMeasure`` (a strict partial order with
set comparison by dominance) and ``ProbabilityMeasure`` (additive weights, a
deliberately non-qualitative example). ``CustomMeasure`` wraps any
set-comparison callable so hand-built comparisons can be fed to the checkers.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from itertools import product
from typing import Callable, Dict, Hashable, Iterable, Optional, Sequence, Tuple

import numpy as np

from util.errors import CarrierTooLarge
from util.report import CheckReport

logger = logging.getLogger(__name__)

INF = math.inf


class Comparison(Enum):
    LT = "<"
    EQ = "="
    GT = ">"
    INCOMPARABLE = "?"


@dataclass(frozen=True)
class ComparisonResult:
    order: Comparison
    left_bottom: bool
    right_bottom: bool


def transitive_closure(matrix: np.ndarray) -> np.ndarray:
    """Warshall closure of a square boolean relation matrix."""
    closure = np.array(matrix, dtype=bool, copy=True)
    for k in range(closure.shape[0]):
        closure |= closure[:, k:k + 1] & closure[k:k + 1, :]
    return closure


def min_rank_keys(ranks: Sequence[float]) -> np.ndarray:
    """Minimum rank of every subset in bitmask order; the empty set gets ``inf``."""
    ranks = np.asarray(ranks, dtype=float)
    keys = np.full(1 << len(ranks), INF)
    for i, r in enumerate(ranks):
        bit = 1 << i
        keys[bit:2 * bit] = np.minimum(keys[:bit], r)
    return keys


def dominance_table(relation: np.ndarray) -> np.ndarray:
    """
    Set comparison by dominance for every pair of subsets of a small carrier.

    ``relation[i, j]`` means element i is before element j. The result
    G[a, b] holds when every element of b - a is beaten by an element of a
    that nothing in b - a beats.
    """
    n = len(relation)
    if n > 15:
        raise CarrierTooLarge(n, 15)
    masks = np.arange(1 << n, dtype=np.uint16)
    beats = [sum(1 << j for j in range(n) if relation[i, j]) for i in range(n)]
    beaten_by = [sum(1 << j for j in range(n) if relation[j, i]) for i in range(n)]
    rest = masks[None, :] & ~masks[:, None]
    covered = np.zeros(rest.shape, dtype=np.uint16)
    for i in range(n):
        in_a = ((masks >> i) & 1).astype(bool)[:, None]
        hit = in_a & ((rest & beaten_by[i]) == 0)
        covered[hit] |= np.uint16(beats[i])
    return (rest & ~covered) == 0


class PlausibilityMeasure:
    """
    Base class: subclasses implement ``geq`` and ``is_bottom`` over element sets.

    ``geq(A, B)`` reads Pl(A) >= Pl(B).
    """
    ranked = False

    def __init__(self, carrier: Iterable[Hashable]):
        self.carrier = tuple(carrier)
        self._index = {e: i for i, e in enumerate(self.carrier)}
        if len(self._index) != len(self.carrier):
            raise ValueError("Carrier elements must be distinct")

    def __len__(self) -> int:
        return len(self.carrier)

    def geq(self, a: Iterable, b: Iterable) -> bool:
        raise NotImplementedError

    def is_bottom(self, a: Iterable) -> bool:
        raise NotImplementedError

    def _indices(self, elements: Iterable) -> np.ndarray:
        return np.fromiter((self._index[e] for e in elements), dtype=np.int64)

    def geq_table(self, elements: Sequence) -> np.ndarray:
        """G[a, b] = geq(A, B) for the subsets A, B of ``elements`` with bitmasks a and b."""
        _, sets = _subset_masks(elements)
        return np.array([[self.geq(a, b) for b in sets] for a in sets], dtype=bool).reshape(len(sets), len(sets))

    def compare(self, a: Iterable, b: Iterable) -> ComparisonResult:
        a, b = frozenset(a), frozenset(b)
        ge, le = self.geq(a, b), self.geq(b, a)
        if ge and le:
            order = Comparison.EQ
        elif ge:
            order = Comparison.GT
        elif le:
            order = Comparison.LT
        else:
            order = Comparison.INCOMPARABLE
        return ComparisonResult(order, self.is_bottom(a), self.is_bottom(b))


class RankedMeasure(PlausibilityMeasure):
    """Pl(A) is the minimum rank over A; ``inf`` ranks and the empty set are bottom."""
    ranked = True

    def __init__(self, ranks: Dict[Hashable, float]):
        super().__init__(ranks.keys())
        self.rank = {e: (INF if r is None else r) for e, r in ranks.items()}
        for e, r in self.rank.items():
            if r != INF and (r < 0 or int(r) != r):
                raise ValueError(f"Rank of {e!r} must be a natural number or inf, got {r!r}")
        if all(r == INF for r in self.rank.values()):
            raise ValueError("A ranked measure needs at least one element of finite rank")

    def min_rank(self, a: Iterable) -> float:
        return min((self.rank[e] for e in a), default=INF)

    def geq(self, a, b) -> bool:
        return self.min_rank(a) <= self.min_rank(b)

    def is_bottom(self, a) -> bool:
        return self.min_rank(a) == INF

    def geq_table(self, elements: Sequence) -> np.ndarray:
        keys = min_rank_keys([self.rank[e] for e in elements])
        return keys[:, None] <= keys[None, :]

    def minimal(self, a: Optional[Iterable] = None) -> frozenset:
        a = self.carrier if a is None else list(a)
        best = self.min_rank(a)
        if best == INF:
            return frozenset()
        return frozenset(e for e in a if self.rank[e] == best)


class PreferenceMeasure(PlausibilityMeasure):
    """
    Measure induced by a strict partial order ``precedes`` (a before b means a
    is more plausible).

    Pl(A) >= Pl(B) iff every e in B - A has some e' in A with e' before e and
    no element of B - A before e'. The relation may be given on classes, with
    ``classes[i]`` naming the class of carrier element ``i``; elements of one
    class are mutually incomparable.
    """

    def __init__(self, carrier: Iterable[Hashable], precedes: np.ndarray,
                 classes: Optional[Sequence[int]] = None, closed: bool = False):
        super().__init__(carrier)
        relation = np.asarray(precedes, dtype=bool)
        if not closed:
            relation = transitive_closure(relation)
        if np.any(np.diag(relation)):
            raise ValueError("Precedence relation has a cycle")
        self.precedes = relation
        if classes is None:
            classes = np.arange(len(self.carrier))
        self.classes = np.asarray(classes, dtype=np.int64)
        if len(self.classes) != len(self.carrier):
            raise ValueError("One class index is needed per carrier element")

    @classmethod
    def from_edges(cls, carrier: Iterable[Hashable], edges: Iterable[Tuple]) -> "PreferenceMeasure":
        carrier = tuple(carrier)
        index = {e: i for i, e in enumerate(carrier)}
        matrix = np.zeros((len(carrier), len(carrier)), dtype=bool)
        for a, b in edges:
            if a not in index or b not in index:
                raise ValueError(f"Edge {a!r} < {b!r} mentions an element outside the carrier")
            matrix[index[a], index[b]] = True
        return cls(carrier, matrix)

    def before(self, a: Hashable, b: Hashable) -> bool:
        return bool(self.precedes[self.classes[self._index[a]], self.classes[self._index[b]]])

    def geq(self, a, b) -> bool:
        a = frozenset(a)
        rest = [e for e in b if e not in a]
        if not rest:
            return True
        if not a:
            return False
        ca = self.classes[self._indices(a)]
        cd = self.classes[self._indices(rest)]
        unbeaten = ~self.precedes[np.ix_(cd, ca)].any(axis=0)
        if not unbeaten.any():
            return False
        return bool(self.precedes[np.ix_(ca[unbeaten], cd)].any(axis=0).all())

    def is_bottom(self, a) -> bool:
        return not any(True for _ in a)

    def geq_table(self, elements: Sequence) -> np.ndarray:
        classes = self.classes[self._indices(elements)]
        return dominance_table(self.precedes[np.ix_(classes, classes)])

    def minimal(self, a: Optional[Iterable] = None) -> frozenset:
        a = list(self.carrier if a is None else a)
        if not a:
            return frozenset()
        ca = self.classes[self._indices(a)]
        beaten = self.precedes[np.ix_(ca, ca)].any(axis=0)
        return frozenset(e for e, hit in zip(a, beaten) if not hit)


class ProbabilityMeasure(PlausibilityMeasure):
    """Additive measure; bottom is total weight zero."""

    def __init__(self, weights: Dict[Hashable, float]):
        super().__init__(weights.keys())
        self.weights = dict(weights)
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("Weights must be nonnegative")

    def mass(self, a) -> float:
        return sum(self.weights[e] for e in a)

    def geq(self, a, b) -> bool:
        return self.mass(a) >= self.mass(b) - 1e-12

    def is_bottom(self, a) -> bool:
        return self.mass(a) <= 1e-12


class CustomMeasure(PlausibilityMeasure):
    """Wraps ``geq_fn(A, B)``; bottom defaults to the empty set."""

    def __init__(self, carrier: Iterable[Hashable], geq_fn: Callable[[frozenset, frozenset], bool],
                 bottom_fn: Optional[Callable[[frozenset], bool]] = None):
        super().__init__(carrier)
        self.geq_fn = geq_fn
        self.bottom_fn = bottom_fn or (lambda s: not s)

    def geq(self, a, b) -> bool:
        return bool(self.geq_fn(frozenset(a), frozenset(b)))

    def is_bottom(self, a) -> bool:
        return bool(self.bottom_fn(frozenset(a)))


class ConditionedMeasure(PlausibilityMeasure):
    """
    ``base`` conditioned on ``condition``: Pl(A | C) >= Pl(B | C) iff
    Pl(A & C) >= Pl(B & C), and A is bottom given C iff A & C is bottom.
    """

    def __init__(self, base: PlausibilityMeasure, condition: Iterable[Hashable]):
        condition = list(condition)
        super().__init__(condition)
        self.base = base
        self.condition = frozenset(condition)
        self.ranked = base.ranked

    def _restrict(self, a: Iterable) -> list:
        return [e for e in a if e in self.condition]

    def geq(self, a, b) -> bool:
        return self.base.geq(self._restrict(a), self._restrict(b))

    def is_bottom(self, a) -> bool:
        return self.base.is_bottom(self._restrict(a))

    def geq_table(self, elements: Sequence) -> np.ndarray:
        if all(e in self.condition for e in elements):
            return self.base.geq_table(elements)
        return super().geq_table(elements)


def compare(m: PlausibilityMeasure, a: Iterable, b: Iterable) -> ComparisonResult:
    return m.compare(a, b)


def conditional_holds(m: PlausibilityMeasure, phi: Iterable, psi: Iterable) -> bool:
    """phi -> psi: phi is bottom, or phi & psi is strictly more plausible than phi & !psi."""
    phi, psi = frozenset(phi), frozenset(psi)
    if m.is_bottom(phi):
        return True
    return m.compare(phi & psi, phi - psi).order == Comparison.GT


def believes(m: PlausibilityMeasure, phi: Iterable, universe: Optional[Iterable] = None) -> bool:
    universe = frozenset(m.carrier if universe is None else universe)
    return conditional_holds(m, universe, phi)


def belief_worlds(m: PlausibilityMeasure, universe: Optional[Iterable] = None) -> frozenset:
    """Elements not ruled out: {w : not B(universe - {w})}."""
    universe = frozenset(m.carrier if universe is None else universe)
    return frozenset(w for w in universe if not believes(m, universe - {w}, universe))


def preferential_satisfies(order: PreferenceMeasure, phi: Iterable, psi: Iterable) -> bool:
    """
    Lewis-style clause over the preference order.

    For every w1 in phi there is w2 with (a) w2 equal to or before w1,
    (b) w2 in phi & psi, and (c) every w3 before w2 satisfies phi => psi.
    """
    size = len(order.carrier)
    phi_mask = np.zeros(size, dtype=bool)
    psi_mask = np.zeros(size, dtype=bool)
    phi_mask[order._indices(phi)] = True
    psi_mask[order._indices(psi)] = True
    if not phi_mask.any():
        return True
    relation = order.precedes[np.ix_(order.classes, order.classes)]
    bad = phi_mask & ~psi_mask
    clause_c = ~(relation & bad[:, None]).any(axis=0)
    candidates = phi_mask & psi_mask & clause_c
    at_or_below = relation | np.eye(size, dtype=bool)
    reach = at_or_below[candidates]
    return bool(reach[:, phi_mask].any(axis=0).all()) if candidates.any() else False


def _subset_masks(universe: Sequence) -> Tuple[list, list]:
    elements = list(universe)
    sets = [frozenset(e for i, e in enumerate(elements) if (mask >> i) & 1)
            for mask in range(1 << len(elements))]
    return elements, sets


def _render(sets: Dict[str, frozenset], render: Optional[Callable]) -> Dict[str, str]:
    show = render or (lambda s: "{" + ",".join(str(e) for e in sorted(s, key=str)) + "}")
    return {k: show(v) for k, v in sets.items()}


def check_qualitative(m: PlausibilityMeasure, universe: Optional[Iterable] = None,
                      bound: int = 8, render: Optional[Callable] = None) -> CheckReport:
    """
    Exhaustive A1 (monotonicity), A2 (the union property over pairwise disjoint
    sets) and A3 (bottom closed under union).

    Args:
        m: the measure under test
        universe: elements to range over (defaults to the carrier)
        bound: largest universe accepted
        render: optional set printer for witnesses

    Returns:
        CheckReport with one outcome per property
    """
    elements, sets = _subset_masks(m.carrier if universe is None else universe)
    n = len(elements)
    if n > bound:
        raise CarrierTooLarge(n, bound)
    report = CheckReport(kind="qualitative")
    cache: Dict[Tuple[int, int], bool] = {}

    def geq(i: int, j: int) -> bool:
        key = (i, j)
        if key not in cache:
            cache[key] = m.geq(sets[i], sets[j])
        return cache[key]

    bottom = [m.is_bottom(s) for s in sets]

    cases, witness = 0, None
    for b in range(1 << n):
        a = b
        while True:
            cases += 1
            if witness is None and not geq(b, a):
                witness = {"A": sets[a], "B": sets[b]}
            if a == 0:
                break
            a = (a - 1) & b
    report.add("A1", witness is None, cases, _render(witness, render) if witness else None,
               None if witness is None else "A is a subset of B but Pl(A) > Pl(B) or incomparable")

    a2_cases, a2_witness, a3_cases, a3_witness = 0, None, 0, None
    for assignment in product(range(4), repeat=n):
        a = sum(1 << i for i, x in enumerate(assignment) if x == 1)
        b = sum(1 << i for i, x in enumerate(assignment) if x == 2)
        c = sum(1 << i for i, x in enumerate(assignment) if x == 3)
        a2_cases += 1
        if a2_witness is None:
            ab_gt_c = geq(a | b, c) and not geq(c, a | b)
            ac_gt_b = geq(a | c, b) and not geq(b, a | c)
            if ab_gt_c and ac_gt_b and not (geq(a, b | c) and not geq(b | c, a)):
                a2_witness = {"A": sets[a], "B": sets[b], "C": sets[c]}
        if c == 0:
            a3_cases += 1
            if a3_witness is None and bottom[a] and bottom[b] and not bottom[a | b]:
                a3_witness = {"A": sets[a], "B": sets[b]}
    report.add("A2", a2_witness is None, a2_cases, _render(a2_witness, render) if a2_witness else None)
    report.add("A3", a3_witness is None, a3_cases, _render(a3_witness, render) if a3_witness else None)
    logger.info("Qualitative check over %d elements: %s", n, "pass" if report.passed else "violation")
    return report


def conditional_table(m: PlausibilityMeasure, elements: Sequence) -> np.ndarray:
    """H[i, j] is conditional_holds for the i-th and j-th subsets (bitmask order)."""
    _, sets = _subset_masks(elements)
    size = len(sets)
    table = np.zeros((size, size), dtype=bool)
    for i in range(size):
        for j in range(size):
            table[i, j] = conditional_holds(m, sets[i], sets[j])
    return table


def check_klm(m: PlausibilityMeasure, universe: Optional[Iterable] = None,
              bound: int = 5, render: Optional[Callable] = None) -> CheckReport:
    """
    KLM properties of the induced conditional relation over all world sets.

    LLE is structural (antecedents are sets, so equivalent antecedents are
    identical); RW, REF, AND, OR and CM are exhaustive. Rational monotonicity
    is checked for ranked measures and reported as information otherwise.
    """
    elements, sets = _subset_masks(m.carrier if universe is None else universe)
    n = len(elements)
    if n > bound:
        raise CarrierTooLarge(n, bound)
    size = 1 << n
    full = size - 1
    holds = conditional_table(m, elements)
    idx = np.arange(size)
    meet = idx[:, None] & idx[None, :]
    join = idx[:, None] | idx[None, :]
    subset = (idx[:, None] & ~idx[None, :]) == 0

    report = CheckReport(kind="klm")

    def witness(**kw) -> Dict[str, str]:
        return _render({k: sets[v] for k, v in kw.items()}, render)

    report.add("LLE", True, 0, note="antecedents are world sets")

    found = None
    for phi in range(size):
        bad = holds[phi][:, None] & subset & ~holds[phi][None, :]
        if bad.any():
            psi, chi = np.argwhere(bad)[0]
            found = witness(phi=phi, psi=int(psi), chi=int(chi))
            break
    report.add("RW", found is None, size ** 3, found)

    refl = holds[idx, idx]
    report.add("REF", bool(refl.all()), size,
               None if refl.all() else witness(phi=int(np.flatnonzero(~refl)[0])))

    found = None
    for phi in range(size):
        row = holds[phi]
        bad = row[:, None] & row[None, :] & ~row[meet]
        if bad.any():
            p1, p2 = np.argwhere(bad)[0]
            found = witness(phi=phi, psi1=int(p1), psi2=int(p2))
            break
    report.add("AND", found is None, size ** 3, found)

    found = None
    for psi in range(size):
        col = holds[:, psi]
        bad = col[:, None] & col[None, :] & ~holds[join, psi]
        if bad.any():
            f1, f2 = np.argwhere(bad)[0]
            found = witness(phi1=int(f1), phi2=int(f2), psi=psi)
            break
    report.add("OR", found is None, size ** 3, found)

    found = None
    for phi in range(size):
        row = holds[phi]
        bad = row[:, None] & row[None, :] & ~holds[meet[phi][:, None], idx[None, :]]
        if bad.any():
            p1, p2 = np.argwhere(bad)[0]
            found = witness(phi=phi, psi1=int(p1), psi2=int(p2))
            break
    report.add("CM", found is None, size ** 3, found)

    found = None
    for phi in range(size):
        row = holds[phi]
        # not (phi -> !chi) for each chi
        open_chi = ~row[full ^ idx]
        bad = row[:, None] & open_chi[None, :] & ~holds[meet[phi][None, :], idx[:, None]]
        if bad.any():
            psi, chi = np.argwhere(bad)[0]
            found = witness(phi=phi, psi=int(psi), chi=int(chi))
            break
    if m.ranked:
        report.add("RM", found is None, size ** 3, found)
    else:
        report.note("RM: " + ("holds" if found is None else
                              "fails with witness " + "; ".join(f"{k}={v}" for k, v in found.items())))
        report.add("RM (informational)", True, size ** 3, found,
                   note="rational monotonicity is not required of partial orders")
    logger.info("KLM check over %d elements: %s", n, "pass" if report.passed else "violation")
    return report


def rational_monotonicity_witness(m: PlausibilityMeasure, universe: Optional[Iterable] = None,
                                  bound: int = 5) -> Optional[Dict[str, str]]:
    """First (phi, psi, chi) violating rational monotonicity, or None."""
    report = check_klm(m, universe, bound)
    outcome = report.get("RM") or report.get("RM (informational)")
    return outcome.witness


def from_table(text: str, parse_element: Callable[[str], Hashable] = str) -> PlausibilityMeasure:
    """
    Read a measure text table.

    Ranked tables have one ``<element> <rank|inf>`` line per element;
    preference tables have ``<a> < <b>`` edge lines (a lone ``<element>``
    line declares an isolated element). ``#`` starts a comment.
    """
    ranks: Dict[Hashable, float] = {}
    edges = []
    elements = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 3 and parts[1] == "<":
            a, b = parse_element(parts[0]), parse_element(parts[2])
            edges.append((a, b))
            for e in (a, b):
                if e not in elements:
                    elements.append(e)
        elif len(parts) == 2:
            value = parts[1].lower()
            ranks[parse_element(parts[0])] = INF if value in ("inf", "∞") else int(value)
        elif len(parts) == 1:
            e = parse_element(parts[0])
            if e not in elements:
                elements.append(e)
        else:
            raise ValueError(f"Unreadable measure line: {raw!r}")
    if ranks and edges:
        raise ValueError("A measure table is either ranked or a preference order, not both")
    if ranks:
        return RankedMeasure(ranks)
    return PreferenceMeasure.from_edges(elements, edges)


def to_table(m: PlausibilityMeasure, show: Callable[[Hashable], str] = str) -> str:
    if isinstance(m, RankedMeasure):
        return "\n".join(f"{show(e)} {'inf' if r == INF else int(r)}" for e, r in m.rank.items())
    if isinstance(m, PreferenceMeasure):
        lines = []
        mentioned = set()
        for a in m.carrier:
            for b in m.carrier:
                if a != b and m.before(a, b):
                    lines.append(f"{show(a)} < {show(b)}")
                    mentioned.update((a, b))
        lines.extend(show(e) for e in m.carrier if e not in mentioned)
        return "\n".join(lines)
    raise ValueError(f"No table form for {type(m).__name__}")
