"""
Finite propositional language: atoms, formulas, worlds, theories and belief sets.

Worlds are plain ints. Atom ``i`` of an ``n``-atom vocabulary lives at bit
``n - 1 - i`` so that ascending integer order is ascending bitstring order
and ``format(w, f"0{n}b")`` prints the world in vocabulary order.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache, reduce
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from constants.limits import get_settings
from util.errors import EmptyTheoryModels, FormulaSyntaxError, UnknownAtom, VocabularyTooLarge

logger = logging.getLogger(__name__)
ATOM_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(@\d+)?$")
TOKEN_PATTERN = re.compile(r"\s*(<=>|=>|[!&|()]|[A-Za-z_][A-Za-z0-9_]*(?:@\d+)?|\S)")


@dataclass(frozen=True)
class Atom:
    name: str
    timestamp: Optional[int] = None

    def __post_init__(self):
        if not re.match(r"^[A-Za-z_][A-Za-z0-9_]*$", self.name):
            raise ValueError(f"Invalid atom name: {self.name!r}")
        if self.timestamp is not None and self.timestamp < 0:
            raise ValueError(f"Negative timestamp on atom {self.name}")

    @classmethod
    def of(cls, text: str) -> "Atom":
        """Build an atom from ``p`` or ``p@3``."""
        if not ATOM_PATTERN.match(text):
            raise ValueError(f"Invalid atom: {text!r}")
        if "@" in text:
            name, stamp = text.split("@")
            return cls(name, int(stamp))
        return cls(text)

    def __str__(self) -> str:
        return self.name if self.timestamp is None else f"{self.name}@{self.timestamp}"


class Op(Enum):
    TRUE = "true"
    FALSE = "false"
    ATOM = "atom"
    NOT = "!"
    AND = "&"
    OR = "|"
    IMPLIES = "=>"
    IFF = "<=>"


# Binding strength used by the printer; higher binds tighter.
PRECEDENCE = {Op.IFF: 1, Op.IMPLIES: 2, Op.OR: 3, Op.AND: 4, Op.NOT: 5,
              Op.ATOM: 6, Op.TRUE: 6, Op.FALSE: 6}


@dataclass(frozen=True, eq=True)
class Formula:
    op: Op
    args: Tuple["Formula", ...] = ()
    atom: Optional[Atom] = None
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.op, self.args, self.atom)))

    def __hash__(self) -> int:
        return self._hash

    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)

    def __invert__(self) -> "Formula":
        return Not(self)

    def __rshift__(self, other: "Formula") -> "Formula":
        return Implies(self, other)

    def atoms(self) -> set:
        if self.op == Op.ATOM:
            return {self.atom}
        return set().union(*(a.atoms() for a in self.args)) if self.args else set()

    def __str__(self) -> str:
        return to_text(self)


TRUE = Formula(Op.TRUE)
FALSE = Formula(Op.FALSE)


def Var(atom) -> Formula:
    return Formula(Op.ATOM, atom=atom if isinstance(atom, Atom) else Atom.of(atom))


def Not(f: Formula) -> Formula:
    return Formula(Op.NOT, (f,))


def And(f: Formula, g: Formula) -> Formula:
    return Formula(Op.AND, (f, g))


def Or(f: Formula, g: Formula) -> Formula:
    return Formula(Op.OR, (f, g))


def Implies(f: Formula, g: Formula) -> Formula:
    return Formula(Op.IMPLIES, (f, g))


def Iff(f: Formula, g: Formula) -> Formula:
    return Formula(Op.IFF, (f, g))


def conj(formulas: Iterable[Formula]) -> Formula:
    """Left-folded conjunction; ``true`` when empty."""
    formulas = list(formulas)
    return reduce(And, formulas) if formulas else TRUE


def disj(formulas: Iterable[Formula]) -> Formula:
    """Left-folded disjunction; ``false`` when empty."""
    formulas = list(formulas)
    return reduce(Or, formulas) if formulas else FALSE


def to_text(f: Formula) -> str:
    """Print with the minimum parentheses the grammar needs."""
    if f.op == Op.TRUE:
        return "true"
    if f.op == Op.FALSE:
        return "false"
    if f.op == Op.ATOM:
        return str(f.atom)
    if f.op == Op.NOT:
        inner = f.args[0]
        text = to_text(inner)
        return f"!{text}" if PRECEDENCE[inner.op] >= PRECEDENCE[Op.NOT] else f"!({text})"

    prec = PRECEDENCE[f.op]
    left, right = f.args
    left_text, right_text = to_text(left), to_text(right)
    if f.op in (Op.AND, Op.OR):
        left_paren = PRECEDENCE[left.op] < prec
        right_paren = PRECEDENCE[right.op] < prec
    elif f.op == Op.IMPLIES:
        # right-associative
        left_paren = PRECEDENCE[left.op] <= prec
        right_paren = PRECEDENCE[right.op] < prec
    else:
        left_paren = PRECEDENCE[left.op] <= prec
        right_paren = PRECEDENCE[right.op] <= prec
    if left_paren:
        left_text = f"({left_text})"
    if right_paren:
        right_text = f"({right_text})"
    return f"{left_text} {f.op.value} {right_text}"


print_canonical = to_text


class Vocabulary:
    """Ordered, duplicate-free atom list; the order fixes the world bit layout."""

    def __init__(self, atoms: Iterable, max_atoms: Optional[int] = None):
        max_atoms = get_settings().max_atoms if max_atoms is None else max_atoms
        atoms = tuple(a if isinstance(a, Atom) else Atom.of(a) for a in atoms)
        if len(set(atoms)) != len(atoms):
            raise ValueError(f"Duplicate atoms in vocabulary: {[str(a) for a in atoms]}")
        if len(atoms) > max_atoms:
            raise VocabularyTooLarge(len(atoms), max_atoms)
        self.atoms = atoms
        self.n = len(atoms)
        self._index = {a: i for i, a in enumerate(atoms)}

    @classmethod
    def of(cls, *names) -> "Vocabulary":
        return cls(names)

    def __len__(self) -> int:
        return self.n

    def __iter__(self):
        return iter(self.atoms)

    def __contains__(self, atom) -> bool:
        return atom in self._index

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.atoms == other.atoms

    def __hash__(self) -> int:
        return hash(self.atoms)

    def __repr__(self) -> str:
        return f"Vocabulary({', '.join(str(a) for a in self.atoms)})"

    def index(self, atom: Atom) -> int:
        if atom not in self._index:
            raise UnknownAtom(str(atom))
        return self._index[atom]

    def bit(self, atom: Atom) -> int:
        return self.n - 1 - self.index(atom)

    @property
    def size(self) -> int:
        return 1 << self.n

    def all_worlds(self) -> Tuple[int, ...]:
        return tuple(range(self.size))

    def bits(self, w: int) -> str:
        return format(w, f"0{self.n}b") if self.n else ""

    def world(self, bits: str) -> int:
        bits = bits.strip()
        if len(bits) != self.n or any(c not in "01" for c in bits):
            raise ValueError(f"Expected a {self.n}-bit world, got {bits!r}")
        return int(bits, 2) if bits else 0

    def render(self, worlds: Iterable[int]) -> str:
        return "{" + ",".join(self.bits(w) for w in sorted(worlds)) + "}"

    def literal(self, w: int, atom: Atom) -> Formula:
        v = Var(atom)
        return v if (w >> self.bit(atom)) & 1 else Not(v)

    def table(self) -> np.ndarray:
        """Boolean matrix of shape (2^n, n): row w, column i is atom i at w."""
        return _bit_table(self.n)


@lru_cache(maxsize=32)
def _bit_table(n: int) -> np.ndarray:
    worlds = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    table = ((worlds[:, None] >> shifts[None, :]) & 1).astype(bool)
    table.setflags(write=False)
    return table


# at 16 atoms each table holds 64 KiB, so the cache stays under 128 MiB
@lru_cache(maxsize=2048)
def truth_table(vocab: Vocabulary, f: Formula) -> np.ndarray:
    """Vector of the truth value of ``f`` at every world of ``vocab``."""
    size = vocab.size
    if f.op == Op.TRUE:
        result = np.ones(size, dtype=bool)
    elif f.op == Op.FALSE:
        result = np.zeros(size, dtype=bool)
    elif f.op == Op.ATOM:
        result = vocab.table()[:, vocab.index(f.atom)].copy()
    elif f.op == Op.NOT:
        result = ~truth_table(vocab, f.args[0])
    else:
        left, right = (truth_table(vocab, a) for a in f.args)
        if f.op == Op.AND:
            result = left & right
        elif f.op == Op.OR:
            result = left | right
        elif f.op == Op.IMPLIES:
            result = ~left | right
        else:
            result = left == right
    result.setflags(write=False)
    return result


def evaluate(vocab: Vocabulary, w: int, f: Formula) -> bool:
    return bool(truth_table(vocab, f)[w])


def models(vocab: Vocabulary, f: Formula, universe: Iterable[int]) -> frozenset:
    table = truth_table(vocab, f)
    return frozenset(w for w in universe if table[w])


class Theory:
    """A satisfiable finite set of background formulas over a vocabulary."""

    def __init__(self, vocab: Vocabulary, formulas: Iterable[Formula] = ()):
        self.vocab = vocab
        self.formulas = tuple(formulas)
        mask = np.ones(vocab.size, dtype=bool)
        for f in self.formulas:
            mask &= truth_table(vocab, f)
        self.worlds = tuple(int(w) for w in np.flatnonzero(mask))
        if not self.worlds:
            raise EmptyTheoryModels(", ".join(to_text(f) for f in self.formulas))
        self.universe = frozenset(self.worlds)
        logger.debug("Theory with %d formulas has %d models", len(self.formulas), len(self.worlds))

    def consistent(self, f: Formula) -> bool:
        return bool(models(self.vocab, f, self.worlds))

    def __repr__(self) -> str:
        return f"Theory({[to_text(f) for f in self.formulas]})"


def enumerate_worlds(vocab: Vocabulary, theory: Optional[Theory] = None) -> Tuple[int, ...]:
    """Theory-consistent worlds in ascending bit order."""
    if theory is None:
        return vocab.all_worlds()
    if theory.vocab != vocab:
        theory = Theory(vocab, theory.formulas)
    return theory.worlds


def world_formula(vocab: Vocabulary, w: int) -> Formula:
    """The minterm of ``w``: one literal per atom, in vocabulary order."""
    return conj(vocab.literal(w, a) for a in vocab.atoms) if vocab.n else TRUE


def set_formula(vocab: Vocabulary, worlds: Iterable[int]) -> Formula:
    """Canonical full DNF: minterms in ascending world order, ``false`` when empty."""
    return disj(world_formula(vocab, w) for w in sorted(worlds))


@dataclass(frozen=True)
class BeliefSet:
    """Extensional belief set: the formulas true in every world of ``worlds``."""
    vocab: Vocabulary
    worlds: frozenset
    universe: frozenset

    def __post_init__(self):
        object.__setattr__(self, "worlds", frozenset(self.worlds))
        object.__setattr__(self, "universe", frozenset(self.universe))
        if not self.worlds <= self.universe:
            stray = self.vocab.render(self.worlds - self.universe)
            raise ValueError(f"Belief worlds {stray} are outside the universe")

    def contains(self, f: Formula) -> bool:
        return self.worlds <= models(self.vocab, f, self.worlds)

    def is_consistent(self) -> bool:
        return bool(self.worlds)

    def is_complete(self) -> bool:
        return len(self.worlds) == 1

    def cl_add(self, f: Formula) -> "BeliefSet":
        return self.with_worlds(self.worlds & models(self.vocab, f, self.universe))

    def char_formula(self) -> Formula:
        return set_formula(self.vocab, self.worlds)

    def with_worlds(self, worlds: Iterable[int]) -> "BeliefSet":
        return BeliefSet(self.vocab, frozenset(worlds), self.universe)

    def bitstrings(self) -> List[str]:
        return [self.vocab.bits(w) for w in sorted(self.worlds)]

    def __str__(self) -> str:
        return to_text(self.char_formula())


def belief_set(vocab: Vocabulary, universe: Iterable[int], f: Formula = TRUE) -> BeliefSet:
    universe = frozenset(universe)
    return BeliefSet(vocab, models(vocab, f, universe), universe)


class _Parser:
    """Recursive descent over the token list; positions are 1-based token indices."""

    def __init__(self, text: str, vocab: Vocabulary):
        self.vocab = vocab
        self.tokens = TOKEN_PATTERN.findall(text)
        self.pos = 0

    def peek(self) -> str:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else ""

    def fail(self, expected: str):
        raise FormulaSyntaxError(self.pos + 1, expected, self.peek())

    def parse(self) -> Formula:
        if not self.tokens:
            self.fail("a formula")
        f = self.iff()
        if self.pos < len(self.tokens):
            self.fail("end of input")
        return f

    def iff(self) -> Formula:
        f = self.implies()
        while self.peek() == "<=>":
            self.pos += 1
            f = Iff(f, self.implies())
        return f

    def implies(self) -> Formula:
        f = self.disjunction()
        if self.peek() == "=>":
            self.pos += 1
            return Implies(f, self.implies())
        return f

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.peek() == "|":
            self.pos += 1
            f = Or(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.unary()
        while self.peek() == "&":
            self.pos += 1
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        token = self.peek()
        if token == "!":
            self.pos += 1
            return Not(self.unary())
        if token == "(":
            self.pos += 1
            f = self.iff()
            if self.peek() != ")":
                self.fail("')'")
            self.pos += 1
            return f
        if token == "true":
            self.pos += 1
            return TRUE
        if token == "false":
            self.pos += 1
            return FALSE
        if token and ATOM_PATTERN.match(token):
            atom = Atom.of(token)
            if atom not in self.vocab:
                raise UnknownAtom(token)
            self.pos += 1
            return Var(atom)
        self.fail("an atom, 'true', 'false', '!' or '('")


def parse(text: str, vocab: Vocabulary) -> Formula:
    """
    Parse formula text over ``vocab``.

    Precedence from tightest: ``!``, ``&``, ``|``, ``=>`` (right-associative),
    ``<=>``. Atoms are ``p`` or ``p@3``.

    Raises:
        FormulaSyntaxError: position (1-based token index) and expected token
        UnknownAtom: the atom is not declared in ``vocab``
    """
    return _Parser(text, vocab).parse()


def literals(vocab: Vocabulary) -> List[Formula]:
    """Positive then negative literal of every atom, in vocabulary order."""
    result = []
    for atom in vocab.atoms:
        result.extend([Var(atom), Not(Var(atom))])
    return result


def subsets(elements: Sequence) -> List[frozenset]:
    """All subsets of ``elements`` in ascending bitmask order."""
    elements = list(elements)
    return [frozenset(e for i, e in enumerate(elements) if (mask >> i) & 1)
            for mask in range(1 << len(elements))]
