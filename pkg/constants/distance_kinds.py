from enum import Enum


class DistanceKind(Enum):
    HAMMING = "hamming"
    WEIGHTED = "weighted"
    MATRIX = "matrix"
    POSET = "poset"

    # Numeric kinds are totally ordered; poset values may be incomparable
    @property
    def numeric(self) -> bool:
        return self is not DistanceKind.POSET
