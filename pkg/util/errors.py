"""
Exception hierarchy for the belief-change engine.

Every error raised on purpose by the engine derives from ``EngineError`` so the
command-line driver can separate input problems (exit 2) from postulate
violations, which are never raised but returned inside a ``CheckReport``.
"""


class EngineError(Exception):
    """Base class for all engine errors."""


class FormulaSyntaxError(EngineError, ValueError):
    """Malformed formula text; ``position`` is the 1-based token index."""

    def __init__(self, position: int, expected: str, found: str = ""):
        self.position = position
        self.expected = expected
        self.found = found
        where = f"token {position}"
        got = f", found '{found}'" if found else ", found end of input"
        super().__init__(f"Syntax error at {where}: expected {expected}{got}")


class UnknownAtom(EngineError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Unknown atom: {name}")


class EmptyTheoryModels(EngineError):
    def __init__(self, detail: str = ""):
        super().__init__(f"Background theory has no models{': ' + detail if detail else ''}")


class CarrierTooLarge(EngineError):
    def __init__(self, size: int, bound: int):
        self.size = size
        self.bound = bound
        super().__init__(f"Carrier of size {size} exceeds the exhaustive bound {bound}")


class NotTotalPreorder(EngineError):
    """The pairwise answers of a revision oracle do not form a total preorder."""

    def __init__(self, witness: tuple, reason: str):
        self.witness = witness
        self.reason = reason
        super().__init__(f"Oracle answers are not a total preorder ({reason}): {witness}")


class UnknownDistanceValue(EngineError):
    def __init__(self, value):
        self.value = value
        super().__init__(f"Unknown distance value: {value!r}")


class PreconditionViolated(EngineError):
    pass


class HorizonExceeded(EngineError):
    def __init__(self, time: int, horizon: int):
        self.time = time
        self.horizon = horizon
        super().__init__(f"Time {time} is past the horizon {horizon}")


class EmptyAlphabet(EngineError):
    def __init__(self):
        super().__init__("Observation alphabet is empty")


class StateSpaceTooLarge(EngineError):
    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"State space of {size} runs exceeds the cap {cap} (raise it with --cap)")


class VocabularyTooLarge(EngineError):
    def __init__(self, size: int, bound: int = 16):
        self.size = size
        super().__init__(f"Vocabulary of {size} atoms exceeds the limit of {bound}")


class CyclicCircuit(EngineError):
    def __init__(self, line: str):
        self.line = line
        super().__init__(f"Circuit wiring is cyclic at line {line}")


class ScenarioError(EngineError):
    """Invalid scenario document; ``path`` is the dotted field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
