"""
Finite-horizon interpreted plausibility systems.

A system is a finite set of runs sharing a horizon ``T``. Each run carries
its environment states ``s_0 .. s_T`` (worlds) and the observations
``o_1 .. o_T`` the agent receives; the agent's local state at time ``m`` is
the observation prefix of length ``m``. Beliefs at a point come from one
prior over runs restricted to the point's knowledge cell.

Runs are addressed by index. Sets of runs are numpy index arrays; the priors
accept any iterable of indices.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import product
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from constants.limits import Settings, get_settings
from kernel import (TRUE, Atom, BeliefSet, Formula, Op, Theory, Vocabulary, enumerate_worlds,
                    evaluate, models, to_text, truth_table)
from plausibility import (INF, Comparison, ConditionedMeasure, PlausibilityMeasure, PreferenceMeasure,
                          min_rank_keys)
from revision import RevisionRanking
from update import UpdateStructure
from util.errors import EmptyAlphabet, HorizonExceeded, PreconditionViolated, StateSpaceTooLarge

logger = logging.getLogger(__name__)

Point = Tuple[int, int]
PointMeasure = Callable[[int, np.ndarray], PlausibilityMeasure]


@dataclass(frozen=True)
class Run:
    env: Tuple[int, ...]
    obs: Tuple[Formula, ...]

    def __post_init__(self):
        if len(self.env) != len(self.obs) + 1:
            raise ValueError(f"A run with {len(self.obs)} observations needs {len(self.obs) + 1} states")

    @property
    def horizon(self) -> int:
        return len(self.obs)

    def local_state(self, m: int) -> Tuple[Formula, ...]:
        return self.obs[:m]


def _as_index(runs: Iterable) -> np.ndarray:
    if isinstance(runs, np.ndarray):
        return runs.astype(np.int64, copy=False)
    return np.fromiter((int(r) for r in runs), dtype=np.int64)


class RankedRunPrior(PlausibilityMeasure):
    """Rank per run; a set of runs is as plausible as its best run."""
    ranked = True

    def __init__(self, ranks: Sequence[float]):
        self.ranks = np.asarray(ranks, dtype=float)
        super().__init__(range(len(self.ranks)))
        if len(self.ranks) and np.isinf(self.ranks).all():
            raise ValueError("A ranked prior needs at least one run of finite rank")

    def min_rank(self, runs) -> float:
        idx = _as_index(runs)
        return float(self.ranks[idx].min()) if idx.size else INF

    def geq(self, a, b) -> bool:
        return self.min_rank(a) <= self.min_rank(b)

    def is_bottom(self, a) -> bool:
        return self.min_rank(a) == INF

    def geq_table(self, elements: Sequence) -> np.ndarray:
        keys = min_rank_keys(self.ranks[_as_index(elements)])
        return keys[:, None] <= keys[None, :]

    def describe(self, run: int) -> str:
        r = self.ranks[run]
        return "inf" if r == INF else str(int(r))


class LexRunPrior(PreferenceMeasure):
    """
    Strict order on runs from an update structure.

    Run ``r`` precedes ``r'`` when their state sequences agree up to some time
    ``m``, split right after it, and the step taken by ``r`` out of the shared
    state ``s_m`` is strictly shorter than the one taken by ``r'``. Runs with
    the same state sequence are incomparable. Sequences that already differ
    at time 0 are incomparable. Sets of runs compare by dominance.
    """

    # classes compared against all others per block of rows
    row_block = 256

    def __init__(self, U: UpdateStructure, envs: np.ndarray):
        self.U = U
        self.env_classes, classes = np.unique(envs, axis=0, return_inverse=True)
        super().__init__(range(len(envs)), self._class_order(U, self.env_classes),
                         classes=np.asarray(classes).ravel(), closed=True)
        logger.debug("Lex prior over %d runs in %d state-sequence classes", len(envs), len(self.env_classes))

    @staticmethod
    def closer_tensor(U: UpdateStructure) -> np.ndarray:
        """closer[s, a, b]: from state ``s`` the step to ``a`` is strictly shorter than to ``b``."""
        worlds = list(U.worlds)
        if U.d.numeric:
            dist = U.d.pairwise(worlds, worlds)
            return dist[:, :, None] < dist[:, None, :]
        ids = U.d.label_matrix(worlds, worlds)
        return U.d.strict[ids[:, :, None], ids[:, None, :]]

    @classmethod
    def _class_order(cls, U: UpdateStructure, classes: np.ndarray) -> np.ndarray:
        position = {w: i for i, w in enumerate(U.worlds)}
        seqs = np.vectorize(position.__getitem__, otypes=[np.int64])(classes) if classes.size else classes
        closer = cls.closer_tensor(U)
        order = np.zeros((len(seqs), len(seqs)), dtype=bool)
        for start in range(0, len(seqs), cls.row_block):
            block = seqs[start:start + cls.row_block]
            diff = block[:, None, :] != seqs[None, :, :]
            first = diff.argmax(axis=2)
            i, j = np.nonzero(diff.any(axis=2) & (first >= 1))
            at = first[i, j]
            order[start + i, j] = closer[block[i, at - 1], block[i, at], seqs[j, at]]
        return order

    def geq(self, a, b) -> bool:
        a, b = _as_index(a), _as_index(b)
        rest = np.setdiff1d(b, a)
        if not rest.size:
            return True
        if not a.size:
            return False
        ca, cd = self.classes[a], self.classes[rest]
        unbeaten = ~self.precedes[np.ix_(cd, ca)].any(axis=0)
        if not unbeaten.any():
            return False
        return bool(self.precedes[np.ix_(ca[unbeaten], cd)].any(axis=0).all())

    def is_bottom(self, a) -> bool:
        return _as_index(a).size == 0

    def describe(self, run: int) -> str:
        return f"e{self.classes[run]}"


class SystemModel:
    """
    Runs, vocabulary and prior. ``universe`` is the set of theory-consistent
    environment states; ``alphabet`` the observations the runs may carry.

    The plausibility measure at a point is the prior conditioned on the
    point's knowledge cell. ``point_measures(m, cell)`` replaces it for
    hand-built systems whose measures are not derived from one prior.
    """

    def __init__(self, vocab: Vocabulary, runs: Sequence[Run], prior: PlausibilityMeasure,
                 theory: Optional[Theory] = None, universe: Optional[Iterable[int]] = None,
                 alphabet: Sequence[Formula] = (), origin: str = "custom",
                 structure: Optional[UpdateStructure] = None, initial: Optional[Formula] = None,
                 source: Optional["SystemModel"] = None, point_measures: Optional[PointMeasure] = None):
        self.vocab = vocab
        self.runs = tuple(runs)
        if not self.runs:
            raise ValueError("A system needs at least one run")
        horizons = {r.horizon for r in self.runs}
        if len(horizons) != 1:
            raise ValueError(f"All runs must share one horizon, got {sorted(horizons)}")
        self.horizon = horizons.pop()
        if len(prior.carrier) != len(self.runs):
            raise ValueError("The prior must rank exactly the runs of the system")
        self.prior = prior
        self.theory = theory
        self.universe = frozenset(enumerate_worlds(vocab, theory) if universe is None else universe)
        self.alphabet = tuple(alphabet)
        self.origin = origin
        self.structure = structure
        self.initial = initial
        self.source = source
        self.point_measures = point_measures
        self.env = np.array([r.env for r in self.runs], dtype=np.int64)
        self.cell_ids = self._cell_ids()
        self._cells: Dict[int, List[np.ndarray]] = {}

    def _cell_ids(self) -> np.ndarray:
        ids = np.zeros((len(self.runs), self.horizon + 1), dtype=np.int64)
        for m in range(1, self.horizon + 1):
            labels: Dict[Tuple[int, Formula], int] = {}
            for i, run in enumerate(self.runs):
                key = (int(ids[i, m - 1]), run.obs[m - 1])
                ids[i, m] = labels.setdefault(key, len(labels))
        return ids

    @property
    def size(self) -> int:
        return len(self.runs)

    @property
    def points(self) -> int:
        return len(self.runs) * (self.horizon + 1)

    def cells(self, m: int) -> List[np.ndarray]:
        """Knowledge cells at time ``m`` as run index arrays, ordered by cell id."""
        if m not in self._cells:
            ids = self.cell_ids[:, m]
            order = np.argsort(ids, kind="stable")
            bounds = np.flatnonzero(np.diff(ids[order])) + 1
            self._cells[m] = np.split(order, bounds)
        return self._cells[m]

    def cell_of(self, run: int, m: int) -> np.ndarray:
        self._check_time(m)
        return self.cells(m)[int(self.cell_ids[run, m])]

    def runs_with_local_state(self, local: Sequence[Formula]) -> np.ndarray:
        local = tuple(local)
        m = len(local)
        if m > self.horizon:
            return np.zeros(0, dtype=np.int64)
        return np.fromiter((i for i, r in enumerate(self.runs) if r.obs[:m] == local), dtype=np.int64)

    def local_states(self, m: int) -> List[Tuple[Formula, ...]]:
        return [self.runs[int(cell[0])].obs[:m] for cell in self.cells(m)]

    def _check_time(self, m: int):
        if not 0 <= m <= self.horizon:
            raise HorizonExceeded(m, self.horizon)

    def measure(self, m: int, cell: np.ndarray) -> PlausibilityMeasure:
        """Plausibility at the points of ``cell``, a knowledge cell at time ``m``."""
        if self.point_measures is not None:
            return self.point_measures(m, cell)
        return ConditionedMeasure(self.prior, cell.tolist())

    def believes(self, scope: np.ndarray, target: np.ndarray,
                 measure: Optional[PlausibilityMeasure] = None) -> bool:
        """B over ``scope``: it is bottom, or its ``target`` runs beat the rest."""
        measure = self.prior if measure is None else measure
        if measure.is_bottom(scope):
            return True
        result = measure.compare(target, np.setdiff1d(scope, target))
        return result.order == Comparison.GT

    def __repr__(self) -> str:
        return f"SystemModel({self.origin}, {self.size} runs, T={self.horizon})"


class KOp(Enum):
    BASE = "base"
    NOT = "not"
    AND = "and"
    OR = "or"
    IMPLIES = "implies"
    K = "K"
    B = "B"
    X = "X"
    COND = "->"
    LEARN = "learn"


@dataclass(frozen=True)
class KPTFormula:
    op: KOp
    args: Tuple["KPTFormula", ...] = ()
    formula: Optional[Formula] = None

    def __str__(self) -> str:
        if self.op == KOp.BASE:
            return to_text(self.formula)
        if self.op == KOp.LEARN:
            return f"learn({to_text(self.formula)})"
        if self.op in (KOp.K, KOp.B, KOp.X):
            return f"{self.op.value}({self.args[0]})"
        if self.op == KOp.NOT:
            return f"!({self.args[0]})"
        symbol = {KOp.AND: "&", KOp.OR: "|", KOp.IMPLIES: "=>", KOp.COND: "->"}[self.op]
        return f"({self.args[0]} {symbol} {self.args[1]})"


def _lift(f) -> KPTFormula:
    return f if isinstance(f, KPTFormula) else Base(f)


def Base(f: Formula) -> KPTFormula:
    return KPTFormula(KOp.BASE, formula=f)


def KNot(f) -> KPTFormula:
    return KPTFormula(KOp.NOT, (_lift(f),))


def KAnd(f, g) -> KPTFormula:
    return KPTFormula(KOp.AND, (_lift(f), _lift(g)))


def KOr(f, g) -> KPTFormula:
    return KPTFormula(KOp.OR, (_lift(f), _lift(g)))


def KImplies(f, g) -> KPTFormula:
    return KPTFormula(KOp.IMPLIES, (_lift(f), _lift(g)))


def Knows(f) -> KPTFormula:
    return KPTFormula(KOp.K, (_lift(f),))


def Believes(f) -> KPTFormula:
    return KPTFormula(KOp.B, (_lift(f),))


def Next(f) -> KPTFormula:
    return KPTFormula(KOp.X, (_lift(f),))


def Cond(f, g) -> KPTFormula:
    return KPTFormula(KOp.COND, (_lift(f), _lift(g)))


def Learn(f: Formula) -> KPTFormula:
    return KPTFormula(KOp.LEARN, formula=f)


def knowledge_cell(sys: SystemModel, point: Point) -> set:
    run, m = point
    return {(int(r), m) for r in sys.cell_of(run, m)}


def _evaluate(sys: SystemModel, f: KPTFormula, m: int) -> np.ndarray:
    """Truth value of ``f`` at time ``m`` of every run."""
    sys._check_time(m)
    if f.op == KOp.BASE:
        return truth_table(sys.vocab, f.formula)[sys.env[:, m]]
    if f.op == KOp.LEARN:
        if m == 0:
            return np.zeros(sys.size, dtype=bool)
        return np.fromiter((r.obs[m - 1] == f.formula for r in sys.runs), dtype=bool, count=sys.size)
    if f.op == KOp.X:
        if m + 1 > sys.horizon:
            raise HorizonExceeded(m + 1, sys.horizon)
        return _evaluate(sys, f.args[0], m + 1)
    if f.op == KOp.NOT:
        return ~_evaluate(sys, f.args[0], m)
    if f.op in (KOp.AND, KOp.OR, KOp.IMPLIES):
        left, right = (_evaluate(sys, a, m) for a in f.args)
        if f.op == KOp.AND:
            return left & right
        if f.op == KOp.OR:
            return left | right
        return ~left | right
    if f.op == KOp.K:
        inner = _evaluate(sys, f.args[0], m)
        ids = sys.cell_ids[:, m]
        failing = np.bincount(ids, weights=(~inner).astype(float), minlength=ids.max() + 1) > 0
        return ~failing[ids]
    if f.op in (KOp.B, KOp.COND):
        if f.op == KOp.B:
            condition, conclusion = np.ones(sys.size, dtype=bool), _evaluate(sys, f.args[0], m)
        else:
            condition, conclusion = (_evaluate(sys, a, m) for a in f.args)
        result = np.zeros(sys.size, dtype=bool)
        for cell in sys.cells(m):
            scope = cell[condition[cell]]
            result[cell] = sys.believes(scope, scope[conclusion[scope]], sys.measure(m, cell))
        return result
    raise ValueError(f"Unknown operator {f.op}")


def model_check(sys: SystemModel, point: Point, f) -> bool:
    """
    Evaluate a knowledge/plausibility/time formula at ``(run, m)``.

    Raises:
        HorizonExceeded: a next-time operator reaches past the horizon
    """
    run, m = point
    return bool(_evaluate(sys, _lift(f), m)[run])


def _possible(sys: SystemModel, cell: np.ndarray, m: int) -> frozenset:
    states = sys.env[cell, m]
    measure = sys.measure(m, cell)
    result = set()
    for w in np.unique(states):
        if not sys.believes(cell, cell[states != w], measure):
            result.add(int(w))
    return frozenset(result)


def states_possible(sys: SystemModel, local: Sequence[Formula]) -> frozenset:
    """Environment states not ruled out by the beliefs held at local state ``local``."""
    cell = sys.runs_with_local_state(local)
    if not cell.size:
        return frozenset()
    return _possible(sys, cell, len(tuple(local)))


def bel(sys: SystemModel, local: Sequence[Formula]) -> BeliefSet:
    """Belief set at local state ``local``; unattainable states believe everything (no worlds)."""
    return BeliefSet(sys.vocab, states_possible(sys, local), sys.universe)


def _check_alphabet(vocab: Vocabulary, universe: frozenset, alphabet: Sequence[Formula]) -> Tuple[Formula, ...]:
    alphabet = tuple(dict.fromkeys(alphabet))
    if not alphabet:
        raise EmptyAlphabet()
    if TRUE not in alphabet:
        raise PreconditionViolated("The observation alphabet must contain 'true'")
    for o in alphabet:
        if not models(vocab, o, universe):
            raise PreconditionViolated(f"Observation {to_text(o)} is inconsistent with the theory")
    return alphabet


def _observation_choices(vocab: Vocabulary, alphabet: Sequence[Formula], universe: Iterable[int]) -> Dict[int, list]:
    return {w: [o for o in alphabet if evaluate(vocab, w, o)] for w in universe}


def build_revision_system(rk: RevisionRanking, alphabet: Sequence[Formula], T: int,
                          settings: Optional[Settings] = None) -> SystemModel:
    """
    Constant-environment runs, one per world and admissible observation
    sequence, ranked by the world's rank.

    Raises:
        EmptyAlphabet: no observations given
        StateSpaceTooLarge: the run count exceeds ``settings.state_space_cap``
    """
    settings = settings or get_settings()
    if T < 0:
        raise ValueError(f"Horizon must be nonnegative, got {T}")
    alphabet = _check_alphabet(rk.vocab, rk.universe, alphabet)
    choices = _observation_choices(rk.vocab, alphabet, rk.universe)
    total = sum(len(c) ** T for c in choices.values())
    if total > settings.state_space_cap:
        raise StateSpaceTooLarge(total, settings.state_space_cap)

    runs, ranks = [], []
    for w in sorted(rk.universe):
        for obs in product(choices[w], repeat=T):
            runs.append(Run((w,) * (T + 1), tuple(obs)))
            ranks.append(rk.rank(w))
    logger.info("Built revision system with %d runs over %d worlds, T=%d", len(runs), len(rk.universe), T)
    return SystemModel(rk.vocab, runs, RankedRunPrior(ranks), universe=rk.universe,
                       alphabet=alphabet, origin="revision")


def build_update_system(U: UpdateStructure, alphabet: Sequence[Formula], T: int,
                        initial: Optional[Formula] = None, settings: Optional[Settings] = None) -> SystemModel:
    """
    Every state sequence over the universe, paired with every admissible
    observation sequence, under the lexicographic prior of ``U``.

    ``initial`` restricts the time-0 state.

    Raises:
        EmptyAlphabet: no observations given
        StateSpaceTooLarge: |universe|^(T+1) * |alphabet|^T exceeds ``settings.state_space_cap``
    """
    settings = settings or get_settings()
    if T < 0:
        raise ValueError(f"Horizon must be nonnegative, got {T}")
    alphabet = _check_alphabet(U.vocab, U.universe, alphabet)
    bound = len(U.universe) ** (T + 1) * len(alphabet) ** T
    if bound > settings.state_space_cap:
        raise StateSpaceTooLarge(bound, settings.state_space_cap)

    starts = U.worlds if initial is None else tuple(sorted(models(U.vocab, initial, U.universe)))
    if not starts:
        raise PreconditionViolated(f"Initial condition {to_text(initial)} has no models")
    choices = _observation_choices(U.vocab, alphabet, U.universe)
    runs = []
    for start in starts:
        for rest in product(U.worlds, repeat=T):
            env = (start,) + rest
            for obs in product(*(choices[s] for s in rest)):
                runs.append(Run(env, tuple(obs)))
    envs = np.array([r.env for r in runs], dtype=np.int64)
    prior = LexRunPrior(U, envs)
    logger.info("Built update system with %d runs (%d state sequences), T=%d",
                len(runs), len(prior.env_classes), T)
    return SystemModel(U.vocab, runs, prior, theory=U.theory, universe=U.universe, alphabet=alphabet,
                       origin="update", structure=U, initial=initial)


def timestamp(f: Formula, m: int) -> Formula:
    """Replace every atom ``p`` of ``f`` with ``p@m``."""
    if f.op == Op.ATOM:
        return Formula(Op.ATOM, atom=Atom(f.atom.name, m))
    if not f.args:
        return f
    return Formula(f.op, tuple(timestamp(a, m) for a in f.args))


@lru_cache(maxsize=8)
def statified_vocabulary(vocab: Vocabulary, T: int) -> Vocabulary:
    """Atoms ``p@m`` ordered by time, then by the source vocabulary order."""
    return Vocabulary([Atom(a.name, m) for m in range(T + 1) for a in vocab.atoms])


def statified_world(vocab: Vocabulary, env: Sequence[int]) -> int:
    """Concatenate the state bits in time order."""
    w = 0
    for s in env:
        w = (w << vocab.n) | int(s)
    return w


def statify(sys: SystemModel) -> SystemModel:
    """
    Turn a dynamic system into a static one over timestamped atoms.

    Each run keeps its index; its environment becomes the whole state sequence
    at every time and its observations are timestamped with their arrival
    time. The prior object is shared with the source system.

    Raises:
        VocabularyTooLarge: (T+1) * n exceeds the atom limit
    """
    T = sys.horizon
    vocab = statified_vocabulary(sys.vocab, T)
    runs = []
    for run in sys.runs:
        w = statified_world(sys.vocab, run.env)
        runs.append(Run((w,) * (T + 1), tuple(timestamp(o, m + 1) for m, o in enumerate(run.obs))))
    universe = frozenset(statified_world(sys.vocab, seq) for seq in product(sorted(sys.universe), repeat=T + 1))
    alphabet = tuple(dict.fromkeys(timestamp(o, m) for m in range(1, T + 1) for o in sys.alphabet))
    static = SystemModel(vocab, runs, sys.prior, universe=universe, alphabet=alphabet,
                         origin=f"statified-{sys.origin}", source=sys)
    logger.info("Statified %d runs into %d timestamped atoms", sys.size, vocab.n)
    return static


def dump_system(sys: SystemModel) -> str:
    """
    One run per line, ``env=<bits,...> obs=<f;...>`` plus ``rank=<n|inf>`` for
    ranked priors or ``class=e<k>`` for lexicographic priors. Lexicographic
    priors add an ``order:`` block listing the covering pairs of
    state-sequence classes.
    """
    lines = []
    for i, run in enumerate(sys.runs):
        env = ",".join(sys.vocab.bits(w) for w in run.env)
        obs = ";".join(to_text(o) for o in run.obs)
        if isinstance(sys.prior, RankedRunPrior):
            tail = f"rank={sys.prior.describe(i)}"
        elif hasattr(sys.prior, "describe"):
            tail = f"class={sys.prior.describe(i)}"
        else:
            tail = ""
        lines.append(f"r{i} env=<{env}> obs=<{obs}> {tail}".rstrip())
    if isinstance(sys.prior, LexRunPrior):
        order = sys.prior.precedes
        implied = (order.astype(np.int64) @ order.astype(np.int64)) > 0
        lines.append("order:")
        for a, b in np.argwhere(order & ~implied):
            lines.append(f"e{a} < e{b}")
    return "\n".join(lines)


def run_filter(sys: SystemModel, states: Sequence, obs: Sequence[Formula] = ()) -> np.ndarray:
    """
    Runs whose state at time ``i`` lies in ``states[i]`` and whose observation
    prefix is ``obs``. Each entry of ``states`` is a formula or a world set.
    """
    mask = np.ones(sys.size, dtype=bool)
    for i, condition in enumerate(states):
        sys._check_time(i)
        if isinstance(condition, Formula):
            mask &= truth_table(sys.vocab, condition)[sys.env[:, i]]
        else:
            mask &= np.isin(sys.env[:, i], np.fromiter(condition, dtype=np.int64))
    if obs:
        mask &= np.isin(np.arange(sys.size), sys.runs_with_local_state(obs))
    return np.flatnonzero(mask)
