"""
Numeric bounds for exhaustive checkers and system construction.

Any field can be overridden from the environment as ``BELIEF_<FIELD>``,
for example ``BELIEF_STATE_SPACE_CAP=5000000``.
"""
import os
from dataclasses import dataclass, fields, replace
from functools import lru_cache


@dataclass(frozen=True)
class Settings:
    max_atoms: int = 16
    qualitative_carrier: int = 8
    klm_carrier: int = 5
    agm_universe: int = 8
    agm_pair_exhaustive: int = 4
    primed_depth: int = 3
    primed_universe: int = 4
    km_universe: int = 8
    km_triple_exhaustive: int = 4
    formula_universe: int = 4
    state_space_cap: int = 1_000_000
    prev_rule_cell: int = 12
    prev_rule_samples: int = 500
    sample_count: int = 10_000
    upd4_samples: int = 2_000
    kpt_point_bound: int = 200
    seed: int = 0

    @classmethod
    def from_env(cls) -> "Settings":
        overrides = {}
        for field in fields(cls):
            raw = os.environ.get(f"BELIEF_{field.name.upper()}")
            if raw is not None:
                try:
                    overrides[field.name] = int(raw)
                except ValueError:
                    raise ValueError(f"BELIEF_{field.name.upper()} must be an integer, got {raw!r}")
        return cls(**overrides)

    def with_overrides(self, **kwargs) -> "Settings":
        """Return a copy with the non-None keyword values applied."""
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings.from_env()
