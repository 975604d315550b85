"""
Check reports: the result document every checker and validator returns.

Violations are data, not exceptions. A report holds one ``CheckOutcome`` per
postulate or condition, each with the number of cases examined and, when it
failed, the first witness found.
"""
from typing import Dict, List, Optional

import pandas as pd
from pydantic import BaseModel, Field


class CheckOutcome(BaseModel):
    name: str
    passed: bool
    cases: int = 0
    witness: Optional[Dict[str, str]] = None
    note: Optional[str] = None


class CheckReport(BaseModel):
    kind: str
    checks: List[CheckOutcome] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def cases(self) -> int:
        return sum(c.cases for c in self.checks)

    def add(self, name: str, passed: bool, cases: int = 0,
            witness: Optional[Dict[str, str]] = None, note: Optional[str] = None) -> CheckOutcome:
        outcome = CheckOutcome(name=name, passed=passed, cases=cases, witness=witness, note=note)
        self.checks.append(outcome)
        return outcome

    def note(self, text: str):
        if text not in self.notes:
            self.notes.append(text)

    def extend(self, other: "CheckReport", prefix: str = ""):
        """Append every outcome of ``other``, optionally prefixing the names."""
        for c in other.checks:
            self.checks.append(c.model_copy(update={"name": f"{prefix}{c.name}"}))
        for n in other.notes:
            self.note(n)

    def get(self, name: str) -> Optional[CheckOutcome]:
        return next((c for c in self.checks if c.name == name), None)

    def first_violation(self) -> Optional[CheckOutcome]:
        return next((c for c in self.checks if not c.passed), None)

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for c in self.checks:
            witness = "" if not c.witness else "; ".join(f"{k}={v}" for k, v in c.witness.items())
            rows.append({
                "check": c.name,
                "result": "pass" if c.passed else "FAIL",
                "cases": c.cases,
                "witness": witness,
                "note": c.note or "",
            })
        return pd.DataFrame(rows, columns=["check", "result", "cases", "witness", "note"])

    def to_document(self) -> dict:
        """Machine-readable form, including the derived ``passed`` flag."""
        document = self.model_dump()
        document["passed"] = self.passed
        document["cases"] = self.cases
        return document
