from enum import Enum


class GateKind(Enum):
    AND = "AND"
    OR = "OR"
    NOT = "NOT"
    XOR = "XOR"
    NAND = "NAND"
    NOR = "NOR"

    @property
    def arity(self):
        """Fixed input count, or None for gates taking two or more inputs."""
        return 1 if self is GateKind.NOT else None
