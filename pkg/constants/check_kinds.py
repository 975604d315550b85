from enum import Enum


class CheckKind(Enum):
    AGM = "agm"
    AGM_PRIMED = "agm-primed"
    KM = "km"
    KLM = "klm"
    QUALITATIVE = "qualitative"
    BCS = "bcs"
    REV = "rev"
    UPD = "upd"
    PREV_RULE = "prev-rule"
    PROP24 = "prop24"
    PROP71 = "prop71"
    LEMA8 = "lemA8"
    THM64 = "thm64"

    @classmethod
    def values(cls) -> list:
        return [kind.value for kind in cls]
