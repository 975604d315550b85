"""
Validators for belief change systems.

Every checker returns a ``CheckReport``. Structural conditions are checked
exhaustively; conditions quantifying over formulas use world-set formulas
on small universes and a set of test formulas (alphabet, literals) otherwise.
"""
from __future__ import annotations

import logging
from itertools import product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from constants.limits import Settings, get_settings
from kernel import (TRUE, Formula, conj, literals, models, set_formula, subsets, to_text,
                    truth_table)
from plausibility import Comparison, ConditionedMeasure, PlausibilityMeasure
from systems import (Believes, KImplies, KNot, Knows, Learn, LexRunPrior, PointMeasure, SystemModel,
                     _evaluate, run_filter, states_possible, statify, timestamp)
from update import UpdateStructure, min_u, sufficient_information
from util.errors import PreconditionViolated
from util.report import CheckReport

logger = logging.getLogger(__name__)

UPD_DIRECTION_NOTE = ("sequence comparison follows the first-divergence rule with the smaller change "
                      "more plausible; the opposite reading of the consistency condition is not used")


def _show_runs(runs: Iterable[int]) -> str:
    return "{" + ",".join(f"r{int(r)}" for r in sorted(runs)) + "}"


def _show_obs(obs: Sequence[Formula]) -> str:
    return "<" + ", ".join(to_text(o) for o in obs) + ">"


def _geq(prior: PlausibilityMeasure, a: np.ndarray, b: np.ndarray) -> bool:
    return prior.geq(a, b)


def _learn_witness(sys: SystemModel) -> Optional[Dict[str, str]]:
    """learn(o) must hold exactly where o is the last observation of the local state."""
    allowed = set(sys.alphabet)
    seen = list(dict.fromkeys(o for run in sys.runs for o in run.obs))
    for i, run in enumerate(sys.runs):
        for m, o in enumerate(run.obs, start=1):
            if allowed and o not in allowed:
                return {"run": f"r{i}", "time": str(m), "observation": to_text(o), "reason": "outside alphabet"}
    for o in list(sys.alphabet) or seen:
        early = np.flatnonzero(_evaluate(sys, Learn(o), 0))
        if len(early):
            return {"run": f"r{int(early[0])}", "time": "0", "observation": to_text(o)}
        for m in range(1, sys.horizon + 1):
            held = _evaluate(sys, Learn(o), m)
            for cell in sys.cells(m):
                last = sys.runs[int(cell[0])].obs[m - 1]
                wrong = cell[held[cell] != (last == o)]
                if len(wrong):
                    return {"run": f"r{int(wrong[0])}", "time": str(m), "observation": to_text(o)}
    return None


def _belief_witness(sys: SystemModel, settings: Settings) -> Optional[Dict[str, str]]:
    """First cell whose beliefs differ from those of the prior conditioned on it."""
    vocab = sys.vocab
    for m in range(sys.horizon + 1):
        for cell in sys.cells(m):
            states = sys.env[cell, m]
            distinct = np.unique(states)
            if len(distinct) <= settings.formula_universe:
                targets = [np.fromiter(s, dtype=np.int64) for s in subsets(distinct.tolist())]
            else:
                targets = [distinct[distinct != w] for w in distinct]
            here, conditioned = sys.measure(m, cell), ConditionedMeasure(sys.prior, cell.tolist())
            for target in targets:
                chosen = cell[np.isin(states, target)]
                if sys.believes(cell, chosen, here) != sys.believes(cell, chosen, conditioned):
                    return {"time": str(m), "point": f"r{int(cell[0])}", "states": vocab.render(target.tolist())}
    return None


def validate_bcs(sys: SystemModel, settings: Optional[Settings] = None) -> CheckReport:
    """
    Structural belief-change-system conditions.

    BCS5 compares the beliefs at every cell with those of the prior
    conditioned on the cell, over every set of the cell's states when it has
    at most ``settings.formula_universe`` of them, otherwise over the sets
    leaving out one state.
    """
    settings = settings or get_settings()
    report = CheckReport(kind="bcs")
    vocab = sys.vocab
    stray = sorted({int(w) for w in np.unique(sys.env)} - sys.universe)
    report.add("BCS1", not stray, sys.points,
               {"state": vocab.render(stray)} if stray else None)

    # perfect recall: every cell at m+1 lies inside one cell at m
    broken = None
    for m in range(sys.horizon):
        for cell in sys.cells(m + 1):
            if len(np.unique(sys.cell_ids[cell, m])) != 1:
                broken = {"time": str(m + 1), "runs": _show_runs(cell[:6])}
                break
        if broken:
            break
    report.add("BCS2", broken is None, sys.points, broken)

    learned = _learn_witness(sys)
    report.add("BCS3", learned is None, sys.points, learned)

    witness = None
    for m in range(1, sys.horizon + 1):
        for i, run in enumerate(sys.runs):
            if not truth_table(vocab, run.obs[m - 1])[run.env[m]]:
                witness = {"run": f"r{i}", "time": str(m), "state": vocab.bits(run.env[m]),
                           "observation": to_text(run.obs[m - 1])}
                break
        if witness:
            break
    report.add("BCS4", witness is None, sys.size * sys.horizon, witness)

    everything = np.arange(sys.size)
    if sys.prior.is_bottom(everything):
        report.add("BCS5", False, sys.points, {"runs": "all", "reason": "prior is bottom on every run"})
    else:
        differ = _belief_witness(sys, settings)
        report.add("BCS5", differ is None, sys.points, differ)
    logger.info("BCS check on %s: %s", sys, "pass" if report.passed else "violation")
    return report


def _test_formulas(sys: SystemModel, settings: Settings) -> List[Formula]:
    """
    Observations to test with: the alphabet, every literal and, on small universes,
    one formula per world set. Formulas with the same models keep the first
    representative, so alphabet members win.
    """
    candidates = list(sys.alphabet) + [TRUE]
    candidates += literals(sys.vocab)
    if len(sys.universe) <= settings.formula_universe:
        candidates += [set_formula(sys.vocab, s) for s in subsets(sorted(sys.universe)) if s]
    seen, test_formulas = set(), []
    for f in candidates:
        key = models(sys.vocab, f, sys.universe)
        if key and key not in seen:
            seen.add(key)
            test_formulas.append(f)
    return test_formulas


def _world_sets(sys: SystemModel, test_formulas: Sequence[Formula], settings: Settings) -> List[frozenset]:
    """World sets phi and psi range over, the empty set included."""
    if len(sys.universe) <= settings.formula_universe:
        return subsets(sorted(sys.universe))
    sets = {frozenset(), frozenset(sys.universe)}
    for f in test_formulas:
        s = models(sys.vocab, f, sys.universe)
        sets.update({s, frozenset(sys.universe) - s})
    return sorted(sets, key=lambda s: (len(s), sorted(s)))


def _observation_sequences(sys: SystemModel, test_formulas: Sequence[Formula]) -> List[Tuple[Formula, ...]]:
    sequences = [()]
    for m in range(1, sys.horizon + 1):
        sequences.extend(sys.local_states(m))
    if sys.horizon >= 1:
        sequences.extend((o,) for o in test_formulas if (o,) not in sequences)
    return sequences


def validate_rev(sys: SystemModel, settings: Optional[Settings] = None,
                 rng: Optional[np.random.Generator] = None) -> CheckReport:
    """
    Revision-system conditions: constant truth values, a ranked prior, every
    world plausible, and observations carrying no information beyond their
    truth (strict and observable-only forms).
    """
    settings = settings or get_settings()
    rng = rng or np.random.default_rng(settings.seed)
    report = CheckReport(kind="rev")
    vocab, prior = sys.vocab, sys.prior

    changed = np.argwhere(sys.env != sys.env[:, :1])
    if len(changed):
        r, m = changed[0]
        report.add("REV1", False, sys.points,
                   {"run": f"r{r}", "time": str(m), "initial": vocab.bits(sys.env[r, 0]),
                    "state": vocab.bits(sys.env[r, m])})
    else:
        report.add("REV1", True, sys.points)

    if prior.ranked:
        report.add("REV2", True, sys.size, note="ranked prior")
    else:
        pairs = rng.integers(0, sys.size, size=(min(settings.sample_count, sys.size ** 2), 2))
        witness = None
        for a, b in pairs:
            if prior.compare([a], [b]).order == Comparison.INCOMPARABLE:
                witness = {"left": f"r{a}", "right": f"r{b}"}
                break
        report.add("REV2", witness is None, len(pairs), witness, "prior is not ranked")

    bottom = [w for w in sorted(sys.universe) if prior.is_bottom(run_filter(sys, [frozenset([w])]))]
    report.add("REV3", not bottom, len(sys.universe), {"worlds": vocab.render(bottom)} if bottom else None)

    test_formulas = _test_formulas(sys, settings)
    sets = _world_sets(sys, test_formulas, settings)
    sequences = _observation_sequences(sys, test_formulas)
    initial = sys.env[:, 0]
    in_set = [np.isin(initial, np.fromiter(s, dtype=np.int64)) for s in sets]
    strict, weak, cases, weak_cases = None, None, 0, 0
    for obs in sequences:
        observed = sys.runs_with_local_state(obs)
        observed_mask = np.zeros(sys.size, dtype=bool)
        observed_mask[observed] = True
        joint = truth_table(vocab, conj(obs))[initial] if obs else np.ones(sys.size, dtype=bool)
        for i, j in product(range(len(sets)), repeat=2):
            left_a = np.flatnonzero(in_set[i] & observed_mask)
            left_b = np.flatnonzero(in_set[j] & observed_mask)
            right_a = np.flatnonzero(in_set[i] & joint)
            right_b = np.flatnonzero(in_set[j] & joint)
            agree = _geq(prior, left_a, left_b) == _geq(prior, right_a, right_b)
            cases += 1
            if not agree and strict is None:
                strict = {"phi": vocab.render(sets[i]), "psi": vocab.render(sets[j]), "obs": _show_obs(obs)}
            if not prior.is_bottom(left_a):
                weak_cases += 1
                if not agree and weak is None:
                    weak = {"phi": vocab.render(sets[i]), "psi": vocab.render(sets[j]), "obs": _show_obs(obs)}
    report.add("REV4", strict is None, cases, strict, f"{len(sequences)} observation sequences")
    report.add("REV4'", weak is None, weak_cases, weak)
    logger.info("REV check on %s: %s", sys, "pass" if report.passed else "violation")
    return report


def _class_rule(closer: np.ndarray, position: Dict[int, int], s: Sequence[int], t: Sequence[int]) -> bool:
    """``[s]`` is more plausible than ``[t]`` under the first-divergence rule."""
    for k in range(1, len(s)):
        if s[k - 1] != t[k - 1]:
            return False
        if s[k] != t[k]:
            return bool(closer[position[s[k - 1]], position[s[k]], position[t[k]]])
    return False


def validate_upd(sys: SystemModel, settings: Optional[Settings] = None,
                 rng: Optional[np.random.Generator] = None) -> CheckReport:
    """
    Update-system conditions: distinct truth assignments, a lexicographic
    prefix-defined prior, every state sequence plausible, and observations
    carrying no information beyond their truth.
    """
    settings = settings or get_settings()
    rng = rng or np.random.default_rng(settings.seed)
    report = CheckReport(kind="upd")
    vocab, prior, T = sys.vocab, sys.prior, sys.horizon

    stray = sorted({int(w) for w in np.unique(sys.env)} - sys.universe)
    report.add("UPD1", not stray, len(sys.universe), {"state": vocab.render(stray)} if stray else None)

    prefixes = {}
    for i, env in enumerate(map(tuple, sys.env.tolist())):
        for n in range(T + 1):
            prefixes.setdefault(env[:n + 1], []).append(i)
    prefixes = {k: np.array(v, dtype=np.int64) for k, v in prefixes.items()}

    if not isinstance(prior, LexRunPrior) or sys.structure is None:
        report.add("UPD2", False, 0, {"prior": type(prior).__name__}, "prior is not lexicographic")
    else:
        U = sys.structure
        closer = LexRunPrior.closer_tensor(U)
        position = {w: i for i, w in enumerate(U.worlds)}
        keys = list(prefixes)
        by_length: Dict[int, list] = {}
        for k in keys:
            by_length.setdefault(len(k), []).append(k)
        lengths = sorted(by_length)
        witness, cases = None, 0
        for _ in range(min(settings.upd4_samples, 4 * len(keys) ** 2)):
            n = lengths[int(rng.integers(len(lengths)))]
            group = by_length[n]
            s, t = group[int(rng.integers(len(group)))], group[int(rng.integers(len(group)))]
            if s == t:
                continue
            cases += 1
            order = prior.compare(prefixes[s], prefixes[t]).order
            expected_gt, expected_lt = _class_rule(closer, position, s, t), _class_rule(closer, position, t, s)
            if (order == Comparison.GT) != expected_gt or (order == Comparison.LT) != expected_lt:
                witness = {"left": ",".join(vocab.bits(w) for w in s),
                           "right": ",".join(vocab.bits(w) for w in t), "compare": order.value}
                break
        if witness is None:
            witness = _prefix_defined_witness(sys, settings, rng)
        report.add("UPD2", witness is None, cases, witness, "sampled prefix pairs")
        report.note(UPD_DIRECTION_NOTE)

    worlds = sorted(sys.universe)
    total = len(worlds) ** (T + 1)
    if total <= settings.state_space_cap:
        sequences = product(worlds, repeat=T + 1)
        note = None
    else:
        sequences = (tuple(int(w) for w in rng.choice(worlds, size=T + 1)) for _ in range(settings.sample_count))
        note = f"{settings.sample_count} sampled sequences"
    present = set(prefixes)
    missing, cases = None, 0
    for seq in sequences:
        cases += 1
        if seq not in present or prior.is_bottom(prefixes[seq]):
            missing = {"sequence": ",".join(vocab.bits(w) for w in seq)}
            break
    report.add("UPD3", missing is None, cases, missing, note)

    strict, weak, cases, weak_cases = _upd4(sys, prefixes, settings, rng)
    report.add("UPD4", strict is None, cases, strict, "sampled singleton-or-true state formulas")
    report.add("UPD4'", weak is None, weak_cases, weak)
    logger.info("UPD check on %s: %s", sys, "pass" if report.passed else "violation")
    return report


def _prefix_defined_witness(sys: SystemModel, settings: Settings,
                            rng: np.random.Generator) -> Optional[Dict[str, str]]:
    """Set comparison of R[phi_0..phi_T] against the prefix-dominance rule on sampled pairs."""
    vocab, prior, T = sys.vocab, sys.prior, sys.horizon
    worlds = sorted(sys.universe)
    classes = prior.env_classes

    def pick() -> List[frozenset]:
        return [frozenset(rng.choice(worlds, size=int(rng.integers(1, len(worlds) + 1)), replace=False).tolist())
                for _ in range(T + 1)]

    def members(states: List[frozenset]) -> np.ndarray:
        mask = np.ones(len(classes), dtype=bool)
        for i, s in enumerate(states):
            mask &= np.isin(classes[:, i], np.fromiter(s, dtype=np.int64))
        return mask

    for _ in range(min(settings.upd4_samples // 4, 500)):
        phi, psi = pick(), pick()
        inside, other = members(phi), members(psi)
        rest = np.flatnonzero(other & ~inside)
        rule = bool(prior.precedes[np.ix_(np.flatnonzero(inside), rest)].any(axis=0).all())
        if _geq(prior, run_filter(sys, phi), run_filter(sys, psi)) != rule:
            return {"phi": " ; ".join(vocab.render(s) for s in phi),
                    "psi": " ; ".join(vocab.render(s) for s in psi), "rule": str(rule)}
    return None


def _upd4(sys: SystemModel, prefixes: Dict[tuple, np.ndarray], settings: Settings, rng: np.random.Generator):
    vocab, prior, T = sys.vocab, sys.prior, sys.horizon
    if T == 0:
        return None, None, 0, 0
    test_formulas = _test_formulas(sys, settings)
    sequences = [s for s in _observation_sequences(sys, test_formulas) if len(s) <= T - 1]
    choices = [frozenset([w]) for w in sorted(sys.universe)] + [frozenset(sys.universe)]
    strict, weak, cases, weak_cases = None, None, 0, 0
    for _ in range(settings.upd4_samples):
        obs = sequences[int(rng.integers(len(sequences)))]
        k = len(obs)
        phi = [choices[int(i)] for i in rng.integers(len(choices), size=k + 2)]
        psi = [choices[int(i)] for i in rng.integers(len(choices), size=k + 2)]
        left_a, left_b = run_filter(sys, phi, obs), run_filter(sys, psi, obs)

        def joined(states):
            return [states[0]] + [states[i] & models(vocab, obs[i - 1], sys.universe)
                                  for i in range(1, k + 1)] + [states[k + 1]]

        right_a, right_b = run_filter(sys, joined(phi)), run_filter(sys, joined(psi))
        agree = _geq(prior, left_a, left_b) == _geq(prior, right_a, right_b)
        cases += 1
        shown = {"phi": " ; ".join(vocab.render(s) for s in phi),
                 "psi": " ; ".join(vocab.render(s) for s in psi), "obs": _show_obs(obs)}
        if not agree and strict is None:
            strict = shown
        if not prior.is_bottom(left_a):
            weak_cases += 1
            if not agree and weak is None:
                weak = shown
    return strict, weak, cases, weak_cases


def check_prev_rule(sys: SystemModel, point_measure: Optional[PointMeasure] = None,
                    settings: Optional[Settings] = None, rng: Optional[np.random.Generator] = None) -> CheckReport:
    """
    Plausibility at the next time agrees with plausibility of the same runs now.

    For every cell K at time m+1, the measure at K is compared with the
    measure at the cell of time m containing it, on subsets A, B of K.
    Measures come from ``sys.measure`` unless ``point_measure(m, cell)``
    overrides them. Cells up to ``settings.prev_rule_cell`` runs are checked
    on every pair of subsets, larger ones on ``settings.prev_rule_samples``
    sampled pairs.
    """
    settings = settings or get_settings()
    rng = rng or np.random.default_rng(settings.seed)
    report = CheckReport(kind="prev-rule")
    measure = point_measure or sys.measure

    def runs_of(cell: np.ndarray, mask: int) -> np.ndarray:
        return cell[[i for i in range(len(cell)) if (mask >> i) & 1]]

    witness, cases, sampled = None, 0, False
    for m in range(sys.horizon):
        for cell in sys.cells(m + 1):
            now = measure(m + 1, cell)
            before = measure(m, sys.cell_of(int(cell[0]), m))
            found = None
            if len(cell) <= settings.prev_rule_cell:
                elements = cell.tolist()
                cases += 4 ** len(cell)
                differ = np.argwhere(now.geq_table(elements) != before.geq_table(elements))
                if len(differ):
                    a, b = differ[0]
                    found = runs_of(cell, int(a)), runs_of(cell, int(b))
            else:
                sampled = True
                for _ in range(settings.prev_rule_samples):
                    cases += 1
                    picks = rng.random((2, len(cell))) < 0.5
                    a, b = cell[picks[0]], cell[picks[1]]
                    if now.geq(a, b) != before.geq(a, b):
                        found = a, b
                        break
            if found is not None:
                witness = {"time": str(m + 1), "point": f"r{int(cell[0])}", "A": _show_runs(found[0]),
                           "B": _show_runs(found[1])}
                break
        if witness:
            break
    report.add("prev-rule", witness is None, cases, witness,
               "large cells sampled" if sampled else None)
    logger.debug("prev rule on %s: %d subset pairs", sys, cases)
    return report


def cross_check_update(sys: SystemModel, U: UpdateStructure) -> CheckReport:
    """States possible after one more observation equal the pointwise update of the states before it."""
    report = CheckReport(kind="lemA8")
    vocab = sys.vocab
    witness, cases = None, 0
    for m in range(sys.horizon):
        for local in sys.local_states(m):
            before = states_possible(sys, local)
            for psi in sys.alphabet:
                cases += 1
                after = states_possible(sys, local + (psi,))
                expected = min_u(U, before, models(vocab, psi, U.universe))
                if after != expected:
                    witness = {"local": _show_obs(local), "psi": to_text(psi), "system": vocab.render(after),
                               "update": vocab.render(expected)}
                    break
            if witness:
                break
        if witness:
            break
    report.add("states-vs-update", witness is None, cases, witness)
    return report


class _StatesCache:
    def __init__(self, sys: SystemModel):
        self.sys = sys
        self.cache: Dict[Tuple[int, int], frozenset] = {}

    def __call__(self, run: int, m: int) -> frozenset:
        key = (m, int(self.sys.cell_ids[run, m]))
        if key not in self.cache:
            self.cache[key] = states_possible(self.sys, self.sys.runs[run].obs[:m])
        return self.cache[key]


def check_correctness_propagation(sys: SystemModel, U: UpdateStructure) -> CheckReport:
    """
    Correct beliefs stay correct across a step whose observation is
    sufficient information about the change.
    """
    report = CheckReport(kind="thm64")
    vocab = sys.vocab
    states = _StatesCache(sys)
    witness, cases, skipped = None, 0, 0
    for r, run in enumerate(sys.runs):
        for m in range(sys.horizon):
            cases += 1
            correct = run.env[m] in states(r, m)
            sufficient = sufficient_information(U, run.env[m], run.env[m + 1], run.obs[m])
            if not (correct and sufficient):
                skipped += 1
                continue
            if run.env[m + 1] not in states(r, m + 1):
                witness = {"run": f"r{r}", "time": str(m + 1), "state": vocab.bits(run.env[m + 1]),
                           "believed": vocab.render(states(r, m + 1))}
                break
        if witness:
            break
    report.add("propagation", witness is None, cases, witness)
    report.note(f"{skipped} of {cases} steps do not meet the correctness and sufficiency precondition")
    return report


def explain_propagation(sys: SystemModel, U: UpdateStructure, run: int) -> pd.DataFrame:
    """Per-step correctness and sufficiency trace of one run."""
    r = sys.runs[run]
    vocab = sys.vocab
    states = _StatesCache(sys)
    rows = []
    for m in range(sys.horizon + 1):
        believed = states(run, m)
        row = {
            "time": m,
            "state": vocab.bits(r.env[m]),
            "observation": to_text(r.obs[m - 1]) if m else "",
            "believed": vocab.render(believed),
            "correct": r.env[m] in believed,
            "sufficient": "",
        }
        if m < sys.horizon:
            row["sufficient"] = sufficient_information(U, r.env[m], r.env[m + 1], r.obs[m])
        rows.append(row)
    return pd.DataFrame(rows, columns=["time", "state", "observation", "believed", "correct", "sufficient"])


def find_run(sys: SystemModel, env: Sequence[int], obs: Sequence[Formula]) -> int:
    env, obs = tuple(env), tuple(obs)
    for i, r in enumerate(sys.runs):
        if r.env == env and r.obs == obs:
            return i
    raise PreconditionViolated(f"No run with states {env} and observations {_show_obs(obs)}")


def check_belief_transfer(sys: SystemModel, static: Optional[SystemModel] = None,
                          settings: Optional[Settings] = None) -> CheckReport:
    """B(phi) at (r, m) matches B(timestamp(phi, m)) at the statified point, for every cell and test formula."""
    settings = settings or get_settings()
    static = static or statify(sys)
    vocab = sys.vocab
    if len(sys.universe) <= settings.formula_universe:
        sets = subsets(sorted(sys.universe))
    else:
        sets = sorted({models(vocab, f, sys.universe) for f in literals(vocab) + [TRUE]},
                      key=lambda s: sorted(s))
    witness, cases = None, 0
    for m in range(sys.horizon + 1):
        for cell in sys.cells(m):
            for s in sets:
                cases += 1
                phi = set_formula(vocab, s)
                held = truth_table(vocab, phi)[sys.env[cell, m]]
                here = sys.believes(cell, cell[held], sys.measure(m, cell))
                stamped = truth_table(static.vocab, timestamp(phi, m))[static.env[cell, m]]
                there = static.believes(cell, cell[stamped], static.measure(m, cell))
                if here != there:
                    witness = {"time": str(m), "point": f"r{int(cell[0])}", "phi": vocab.render(s),
                               "source": str(here), "statified": str(there)}
                    break
            if witness:
                break
        if witness:
            break
    report = CheckReport(kind="belief-transfer")
    report.add("belief-transfer", witness is None, cases, witness)
    return report


def check_prop_7_1(sys: SystemModel, settings: Optional[Settings] = None) -> CheckReport:
    """
    Statify ``sys`` and check what carries over: the statified system is a
    belief change system with constant truth values, every state sequence
    plausible when the source had that, and observable-only revision when the
    source had observation-only update.
    """
    settings = settings or get_settings()
    report = CheckReport(kind="prop71")
    static = statify(sys)
    source = validate_upd(sys, settings)
    bcs = validate_bcs(static, settings)
    rev = validate_rev(static, settings)
    report.extend(bcs, prefix="static ")
    report.add("static REV1", rev.get("REV1").passed, rev.get("REV1").cases, rev.get("REV1").witness)
    upd3 = source.get("UPD3")
    if upd3.passed:
        report.add("static REV3", rev.get("REV3").passed, rev.get("REV3").cases, rev.get("REV3").witness)
    else:
        report.note("source fails UPD3; REV3 is not required of the statified system")
    if source.get("UPD4").passed or source.get("UPD4'").passed:
        weak = rev.get("REV4'")
        report.add("static REV4'", weak.passed, weak.cases, weak.witness)
    else:
        report.note("source fails UPD4 and UPD4'; REV4' is not required of the statified system")
    strict = rev.get("REV4")
    report.add("static REV4 (informational)", True, strict.cases, strict.witness,
               "fails as expected" if not strict.passed else "holds")
    report.extend(check_belief_transfer(sys, static, settings))
    return report


def check_knowledge_axioms(sys: SystemModel, settings: Optional[Settings] = None) -> CheckReport:
    """Knowledge is S5 and sits under belief at every point, for every literal."""
    settings = settings or get_settings()
    report = CheckReport(kind="kpt")
    if sys.points > settings.kpt_point_bound:
        report.note(f"{sys.points} points exceed the model-check bound {settings.kpt_point_bound}; skipped")
        return report
    axioms = {
        "K-truth": lambda f: KImplies(Knows(f), f),
        "K-positive": lambda f: KImplies(Knows(f), Knows(Knows(f))),
        "K-negative": lambda f: KImplies(KNot(Knows(f)), Knows(KNot(Knows(f)))),
        "K-implies-B": lambda f: KImplies(Knows(f), Believes(f)),
        "B-known": lambda f: KImplies(Believes(f), Knows(Believes(f))),
    }
    test_formulas = literals(sys.vocab) + [TRUE]
    for name, build in axioms.items():
        witness = None
        for f in test_formulas:
            for m in range(sys.horizon + 1):
                holds = _evaluate(sys, build(f), m)
                if not holds.all():
                    witness = {"formula": to_text(f), "time": str(m), "run": f"r{int(np.argmin(holds))}"}
                    break
            if witness:
                break
        report.add(name, witness is None, len(test_formulas) * sys.points, witness)
    return report
