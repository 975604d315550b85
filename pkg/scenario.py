"""
Scenario runner and the interactive stepping session.

A scenario is replayed one observation at a time; every step yields a
``StepReport`` with the current belief worlds, their canonical formula and
the surprise/inconsistency flags. The REPL drives the same stepping code so
a transcript replayed as a scenario reproduces its reports exactly.
"""
import json
import logging
from typing import Callable, List, Optional, Sequence, TextIO

from pydantic import BaseModel

from kernel import BeliefSet, Formula, belief_set, to_text
from revision import epistemic_bs
from systems import SystemModel, bel, build_revision_system, build_update_system
from update import km_update
from util.errors import EngineError, HorizonExceeded
from util.scenario_parser import ScenarioContext, parse_field

logger = logging.getLogger(__name__)


class StepReport(BaseModel):
    step: int
    observation: str
    worlds: List[str]
    formula: str
    surprising: bool = False
    inconsistent: bool = False

    def line(self) -> str:
        flags = [name for name in ("surprising", "inconsistent") if getattr(self, name)]
        shown = self.observation or "-"
        return f"[{self.step}] {shown:<16} -> {self.formula}  {{{','.join(self.worlds)}}}" + \
            (f"  ({', '.join(flags)})" if flags else "")


def _report(step: int, observation: Optional[Formula], current: BeliefSet,
            previous: Optional[BeliefSet]) -> StepReport:
    return StepReport(
        step=step,
        observation=to_text(observation) if observation is not None else "",
        worlds=current.bitstrings(),
        formula=str(current),
        surprising=previous is not None and bool(previous.worlds) and not (previous.worlds & current.worlds),
        inconsistent=not current.worlds,
    )


def build_system(ctx: ScenarioContext, settings=None, horizon: Optional[int] = None) -> SystemModel:
    """The revision or update system of a scenario's prior over its alphabet."""
    T = ctx.horizon if horizon is None else horizon
    if ctx.ranking is not None:
        return build_revision_system(ctx.ranking, ctx.alphabet, T, settings)
    return build_update_system(ctx.structure, ctx.alphabet, T, ctx.initial, settings)


class BeliefStepper:
    """
    Beliefs after each prefix of an observation sequence, for one scenario.

    Revision scenarios rerun the epistemic-state computation on the whole
    prefix; update scenarios fold ``km_update``; simulate scenarios condition
    the prior of a constructed system on the observed local state.
    """

    def __init__(self, ctx: ScenarioContext, settings=None):
        self.ctx = ctx
        self.mode = ctx.scenario.mode
        self.system: Optional[SystemModel] = build_system(ctx, settings) if self.mode == "simulate" else None
        self.observations: List[Formula] = []
        self.beliefs: List[BeliefSet] = [self._initial()]

    def _initial(self) -> BeliefSet:
        if self.mode == "revision":
            return epistemic_bs(self.ctx.ranking, ())
        if self.mode == "update":
            initial = self.ctx.initial
            return belief_set(self.ctx.vocab, self.ctx.universe) if initial is None \
                else belief_set(self.ctx.vocab, self.ctx.universe, initial)
        return bel(self.system, ())

    def _after(self, o: Formula) -> BeliefSet:
        prefix = tuple(self.observations) + (o,)
        if self.mode == "revision":
            return epistemic_bs(self.ctx.ranking, prefix)
        if self.mode == "update":
            return km_update(self.ctx.structure, self.beliefs[-1], o)
        if len(prefix) > self.system.horizon:
            raise HorizonExceeded(len(prefix), self.system.horizon)
        return bel(self.system, prefix)

    def step(self, o: Formula) -> StepReport:
        current = self._after(o)
        self.observations.append(o)
        self.beliefs.append(current)
        return _report(len(self.observations), o, current, self.beliefs[-2])

    def undo(self) -> bool:
        if not self.observations:
            return False
        self.observations.pop()
        self.beliefs.pop()
        return True

    def current(self) -> StepReport:
        previous = self.beliefs[-2] if len(self.beliefs) > 1 else None
        last = self.observations[-1] if self.observations else None
        return _report(len(self.observations), last, self.beliefs[-1], previous)


def run_scenario(ctx: ScenarioContext, settings=None) -> List[StepReport]:
    """Step 0 followed by one report per observation."""
    stepper = BeliefStepper(ctx, settings)
    reports = [stepper.current()]
    for o in ctx.observations:
        reports.append(stepper.step(o))
    logger.info("Scenario ran %d steps in %s mode", len(ctx.observations), ctx.scenario.mode)
    return reports


def reports_document(ctx: ScenarioContext, reports: Sequence[StepReport]) -> dict:
    return {
        "mode": ctx.scenario.mode,
        "vocabulary": [str(a) for a in ctx.vocab.atoms],
        "steps": [r.model_dump() for r in reports],
    }


def write_reports(path: str, ctx: ScenarioContext, reports: Sequence[StepReport]):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(reports_document(ctx, reports), f, indent=4)


class ReplSession:
    """
    Line-at-a-time stepping over a scenario's prior. Formula lines advance
    the state; ``:undo``, ``:worlds`` and ``:quit`` are commands. A line
    that fails to parse leaves the state unchanged.
    """

    def __init__(self, ctx: ScenarioContext, settings=None, write: Callable[[str], None] = print):
        self.ctx = ctx
        self.stepper = BeliefStepper(ctx, settings)
        self.write = write
        self.transcript: List[str] = []

    def handle(self, line: str) -> bool:
        """Process one input line; False once the session should end."""
        line = line.strip()
        if not line:
            return True
        if line == ":quit":
            return False
        if line == ":undo":
            if self.stepper.undo():
                self.transcript.pop()
            else:
                self.write("❌ Nothing to undo")
            self.write(self.stepper.current().line())
            return True
        if line == ":worlds":
            worlds = self.stepper.beliefs[-1].bitstrings()
            self.write("{" + ",".join(worlds) + "}")
            return True
        try:
            o = parse_field("input", line, self.ctx.vocab)
            report = self.stepper.step(o)
        except EngineError as exc:
            self.write(f"❌ {exc}")
            return True
        self.transcript.append(line)
        self.write(report.line())
        return True

    def run(self, stream: TextIO):
        self.write(self.stepper.current().line())
        for line in stream:
            if not self.handle(line):
                break

    def as_scenario(self) -> dict:
        """The session so far as a scenario document with the typed observations."""
        document = self.ctx.scenario.model_dump(exclude_none=True)
        document["observations"] = list(self.transcript)
        return document
