import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from constants.check_kinds import CheckKind
from constants.limits import Settings, get_settings
from diagnosis import check_prop_2_4, diagnoses, diagnoses_bcs, diagnosis_trace, fault_free_attitude, show_faults
from kernel import BeliefSet, Var, Vocabulary, belief_set, conj
from plausibility import check_klm, check_qualitative, from_table
from revision import (RevisionRanking, check_agm, check_agm_primed, check_round_trip, drastic_oracle, empty_oracle,
                      epistemic_oracle, full_meet_oracle, grove_oracle, reinforcement_es_oracle, table_oracle)
from scenario import ReplSession, build_system, run_scenario, write_reports
from system_checks import (check_belief_transfer, check_correctness_propagation, check_knowledge_axioms,
                           check_prev_rule, check_prop_7_1, cross_check_update, explain_propagation,
                           validate_bcs, validate_rev, validate_upd)
from systems import dump_system, statify
from update import check_km, grove_update_oracle, km_oracle, validate_update_structure
from util.errors import EngineError
from util.report import CheckReport
from util.scenario_parser import (ScenarioContext, load_circuit, load_observations, load_scenario,
                                  load_structure, parse_field, parse_oracle_table)

REVISION_ORACLES = ["grove", "full-meet", "drastic", "empty", "table"]
EPISTEMIC_ORACLES = ["grove", "reinforcement"]
UPDATE_ORACLES = ["km", "grove"]


class UsageError(ValueError):
    """Arguments that do not fit the chosen subcommand."""


class BeliefChangeDriver:
    """
    Driver for the belief-change engine.

    Loads scenarios and the auxiliary text files, runs the scenario modes,
    dispatches postulate and condition checks, and presents the results.
    """

    def __init__(self, settings: Optional[Settings] = None):
        """
        Initialize the driver.

        Args:
            settings: Bounds and caps; defaults to the environment-aware settings
        """
        self.settings = settings or get_settings()
        self.rng = np.random.default_rng(self.settings.seed)

    def load(self, path: Optional[str], required: bool = True) -> Optional[ScenarioContext]:
        if path is None:
            if required:
                raise UsageError("--scenario is required for this command")
            return None
        ctx = load_scenario(path)
        print(f"✅ Scenario loaded: {path}")
        print(f"   - Mode: {ctx.scenario.mode}")
        print(f"   - Vocabulary: {', '.join(str(a) for a in ctx.vocab.atoms)} ({len(ctx.universe)} worlds)")
        if ctx.structure is not None:
            print(f"   - Distance: {ctx.structure.d.describe()}")
        print(f"   - Observations: {len(ctx.observations)}")
        return ctx

    def run(self, ctx: ScenarioContext, mode: str, out: Optional[str] = None):
        """
        Replay a scenario's observations and print the step reports.

        Args:
            ctx: Loaded scenario
            mode: The subcommand used; must match the scenario mode
            out: Optional path for the JSON report document
        """
        if ctx.scenario.mode != mode:
            raise UsageError(f"Scenario mode is '{ctx.scenario.mode}', not '{mode}'")
        print(f"\n🔄 Running {mode} over {len(ctx.observations)} observation(s)")
        reports = run_scenario(ctx, self.settings)
        frame = pd.DataFrame([r.model_dump() for r in reports])
        frame["worlds"] = frame["worlds"].apply(lambda w: "{" + ",".join(w) + "}")
        print(f"\n📊 Belief trace:")
        print("=" * 60)
        print(frame.to_string(index=False))
        final = reports[-1]
        print(f"\n✅ Final belief: {final.formula}")
        surprising = [r.step for r in reports if r.surprising]
        if surprising:
            print(f"   - Surprising at step(s): {', '.join(str(s) for s in surprising)}")
        if out:
            write_reports(out, ctx, reports)
            print(f"   - Report written to {out}")
        return reports

    def _belief(self, ctx: Optional[ScenarioContext], vocab: Vocabulary, text: Optional[str],
                ranking: Optional[RevisionRanking]) -> BeliefSet:
        universe = ctx.universe if ctx else vocab.all_worlds()
        if text is not None:
            return belief_set(vocab, universe, parse_field("--belief", text, vocab))
        if ranking is not None:
            return ranking.initial_belief()
        return belief_set(vocab, universe, conj(Var(a) for a in vocab.atoms))

    def _ranking(self, ctx: Optional[ScenarioContext], vocab: Vocabulary) -> RevisionRanking:
        """The scenario's ranking, or the count of false atoms when there is none."""
        if ctx is not None and ctx.ranking is not None:
            return ctx.ranking
        return RevisionRanking(vocab, {w: vocab.n - bin(w).count("1") for w in vocab.all_worlds()})

    def _vocab(self, ctx: Optional[ScenarioContext], atoms: List[str]) -> Vocabulary:
        return ctx.vocab if ctx is not None else Vocabulary(atoms)

    def check(self, kind: CheckKind, args) -> CheckReport:
        """
        Run one check and return its report.

        Args:
            kind: Which postulates or conditions to check
            args: Parsed command-line arguments carrying the check target

        Returns:
            CheckReport with one outcome per postulate or condition
        """
        print(f"\n🔄 Checking {kind.value}")
        if kind == CheckKind.AGM:
            return self._check_agm(args)
        if kind == CheckKind.AGM_PRIMED:
            ctx = self.load(args.scenario, required=False)
            vocab = self._vocab(ctx, args.vocab)
            if args.oracle not in (None, *EPISTEMIC_ORACLES):
                raise UsageError(f"agm-primed takes --oracle {' or '.join(EPISTEMIC_ORACLES)}")
            rk = self._ranking(ctx, vocab)
            oracle = epistemic_oracle(rk) if args.oracle in (None, "grove") else \
                reinforcement_es_oracle(vocab, {w: rk.rank(w) for w in rk.universe})
            return check_agm_primed(oracle, rk.universe, vocab, args.depth, self.settings)
        if kind == CheckKind.KM:
            if args.structure is None:
                raise UsageError("check km needs --structure")
            U = load_structure(args.structure)
            if args.oracle not in (None, *UPDATE_ORACLES):
                raise UsageError(f"km takes --oracle {' or '.join(UPDATE_ORACLES)}")
            oracle = grove_update_oracle(U) if args.oracle == "grove" else km_oracle(U)
            report = check_km(oracle, U.universe, U.vocab, self.settings, self.rng)
            report.extend(validate_update_structure(U), prefix="structure ")
            return report
        if kind in (CheckKind.KLM, CheckKind.QUALITATIVE):
            if args.measure is None:
                raise UsageError(f"check {kind.value} needs --measure")
            path = Path(args.measure)
            if not path.exists():
                raise FileNotFoundError(f"Measure table not found: {path}")
            m = from_table(path.read_text(encoding="utf-8"))
            if kind == CheckKind.KLM:
                return check_klm(m, bound=self.settings.klm_carrier)
            return check_qualitative(m, bound=self.settings.qualitative_carrier)
        if kind == CheckKind.PROP24:
            if args.circuit is None or args.obs is None:
                raise UsageError("check prop24 needs --circuit and --obs")
            c = load_circuit(args.circuit)
            return check_prop_2_4(c, load_observations(args.obs, c.vocab))
        return self._check_system(kind, args)

    def _check_agm(self, args) -> CheckReport:
        ctx = self.load(args.scenario, required=False)
        vocab = self._vocab(ctx, args.vocab)
        name = args.oracle or "grove"
        if name not in REVISION_ORACLES:
            raise UsageError(f"agm takes --oracle one of {', '.join(REVISION_ORACLES)}")
        ranking = self._ranking(ctx, vocab) if name == "grove" else None
        K = self._belief(ctx, vocab, args.belief, ranking)
        if name == "grove":
            oracle = grove_oracle(ranking)
        elif name == "table":
            if args.table is None:
                raise UsageError("--oracle table needs --table")
            text = Path(args.table).read_text(encoding="utf-8")
            oracle = table_oracle(parse_oracle_table(text, vocab, K.universe))
        else:
            oracle = {"full-meet": full_meet_oracle, "drastic": drastic_oracle, "empty": empty_oracle}[name]()
        report = check_agm(oracle, K.universe, K, self.settings, self.rng)
        if K.is_consistent() and report.get("oracle") is None:
            report.extend(check_round_trip(oracle, K), prefix="round-trip ")
        return report

    def _check_system(self, kind: CheckKind, args) -> CheckReport:
        ctx = self.load(args.scenario)
        system = build_system(ctx, self.settings, args.horizon)
        print(f"   - System: {system.size} runs, horizon {system.horizon}")
        if kind == CheckKind.BCS:
            report = validate_bcs(system, self.settings)
            report.extend(check_knowledge_axioms(system, self.settings))
            return report
        if kind == CheckKind.REV:
            return validate_rev(system, self.settings, self.rng)
        if kind == CheckKind.UPD:
            return validate_upd(system, self.settings, self.rng)
        if kind == CheckKind.PREV_RULE:
            return check_prev_rule(system, settings=self.settings, rng=self.rng)
        if kind == CheckKind.PROP71:
            return check_prop_7_1(system, self.settings)
        if ctx.structure is None:
            raise UsageError(f"check {kind.value} needs a scenario with a distance prior")
        if kind == CheckKind.LEMA8:
            return cross_check_update(system, ctx.structure)
        report = check_correctness_propagation(system, ctx.structure)
        self._show_incorrect_run(system, ctx)
        return report

    def _show_incorrect_run(self, system, ctx: ScenarioContext, limit: int = 64):
        """Trace the first run with the scenario's observations whose beliefs go wrong."""
        candidates = system.runs_with_local_state(ctx.observations[:system.horizon])
        for run in candidates[:limit]:
            trace = explain_propagation(system, ctx.structure, int(run))
            if not trace["correct"].all():
                print(f"\n📊 Run r{int(run)} with incorrect beliefs:")
                print(trace.to_string(index=False))
                return

    def display_report(self, report: CheckReport, out: Optional[str] = None):
        """
        Print a check report as a table, followed by its notes.

        Args:
            report: The report to show
            out: Optional path for the JSON report document
        """
        print(f"\n📊 {report.kind} report ({report.cases} cases):")
        print("=" * 60)
        print(report.to_frame().to_string(index=False))
        for note in report.notes:
            print(f"   - {note}")
        if report.passed:
            print(f"\n✅ All {len(report.checks)} checks passed")
        else:
            failed = report.first_violation()
            print(f"\n❌ Violation: {failed.name}")
            for key, value in (failed.witness or {}).items():
                print(f"   - {key} = {value}")
        if out:
            with open(out, "w", encoding="utf-8") as f:
                json.dump(report.to_document(), f, indent=4)
            print(f"   - Report written to {out}")

    def statify(self, ctx: ScenarioContext, horizon: Optional[int], out: Optional[str] = None) -> CheckReport:
        system = build_system(ctx, self.settings, horizon)
        static = statify(system)
        print(f"\n📊 Statified system ({static.size} runs over {static.vocab.n} timestamped atoms):")
        print("=" * 60)
        print(dump_system(static))
        report = check_belief_transfer(system, static, self.settings)
        if out:
            Path(out).write_text(dump_system(static) + "\n", encoding="utf-8")
            print(f"   - Dump written to {out}")
        return report

    def diagnose(self, circuit_path: str, obs_path: str):
        c = load_circuit(circuit_path)
        obs = load_observations(obs_path, c.vocab)
        print(f"✅ Circuit loaded: {c!r}")
        print(f"   - Inputs: {', '.join(c.input_lines)}; outputs: {', '.join(c.output_lines)}")
        print(f"\n📊 Diagnoses after each observation:")
        print("=" * 60)
        print(diagnosis_trace(c, obs).to_string(index=False))
        direct, through_system = diagnoses(c, obs), diagnoses_bcs(c, obs)
        print(f"\n📈 Summary:")
        print(f"   - Final diagnoses: {show_faults(direct)}")
        print(f"   - Belief change system agrees: {'yes' if direct == through_system else 'no'}")
        knows, believes = fault_free_attitude(c, obs)
        print(f"   - Knows fault-free: {knows}; believes fault-free: {believes}")
        return direct == through_system

    def repl(self, ctx: ScenarioContext):
        if ctx.observations:
            raise UsageError("repl needs a scenario without observations")
        print("Enter one formula per line; :undo, :worlds and :quit are commands.")
        ReplSession(ctx, self.settings).run(sys.stdin)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Belief revision, belief update and belief change systems over finite vocabularies",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py update --scenario data/scenarios/borrowed_car.json
  python main.py check km --structure data/structures/hamming2.json
  python main.py check agm --oracle drastic
  python main.py check prop24 --circuit data/circuits/and1.cir --obs data/circuits/and1_obs.txt
  python main.py statify --scenario data/scenarios/simulate.json
        """
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="Scenario JSON file")
    common.add_argument("--out", help="Write the machine-readable result to this file")
    common.add_argument("--seed", type=int, help="Seed for sampled checks (default: 0)")
    common.add_argument("--cap", type=int, help="State-space cap for system construction (default: 1000000)")
    common.add_argument("--verbose", "-v", action="store_true", help="Log engine progress")

    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("revise", "update", "simulate", "repl"):
        sub.add_parser(name, parents=[common], help=f"{name} a scenario")

    check = sub.add_parser("check", parents=[common], help="Check postulates or system conditions")
    check.add_argument("kind", choices=CheckKind.values())
    check.add_argument("--oracle", help="Operator to check (grove, full-meet, drastic, empty, table, "
                                        "reinforcement, km)")
    check.add_argument("--table", help="Oracle table file for --oracle table")
    check.add_argument("--belief", help="Belief set K as a formula (agm)")
    check.add_argument("--vocab", nargs="+", default=["p", "q"], help="Atoms when no scenario is given")
    check.add_argument("--depth", type=int, default=3, help="Sequence depth for agm-primed (default: 3)")
    check.add_argument("--structure", help="Update structure JSON file (km)")
    check.add_argument("--measure", help="Measure table file (klm, qualitative)")
    check.add_argument("--circuit", help="Circuit file (prop24)")
    check.add_argument("--obs", help="Observation file (prop24)")
    check.add_argument("--horizon", type=int, help="Override the scenario horizon for system checks")

    static = sub.add_parser("statify", parents=[common], help="Statify a scenario's system")
    static.add_argument("--horizon", type=int, help="Override the scenario horizon")

    diagnose = sub.add_parser("diagnose", parents=[common], help="Diagnose a circuit from observations")
    diagnose.add_argument("--circuit", required=True, help="Circuit file")
    diagnose.add_argument("--obs", required=True, help="Observation file, one formula per line")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main function with CLI argument parsing; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    settings = get_settings().with_overrides(seed=args.seed, state_space_cap=args.cap)

    try:
        driver = BeliefChangeDriver(settings)
        if args.command in ("revise", "update", "simulate"):
            mode = "revision" if args.command == "revise" else args.command
            driver.run(driver.load(args.scenario), mode, args.out)
            return 0
        if args.command == "repl":
            driver.repl(driver.load(args.scenario))
            return 0
        if args.command == "diagnose":
            return 0 if driver.diagnose(args.circuit, args.obs) else 1
        if args.command == "statify":
            report = driver.statify(driver.load(args.scenario), args.horizon, args.out)
            driver.display_report(report)
            return 0 if report.passed else 1
        report = driver.check(CheckKind(args.kind), args)
        driver.display_report(report, args.out)
        return 0 if report.passed else 1
    except (EngineError, FileNotFoundError, ValueError) as e:
        print(f"❌ {e}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
