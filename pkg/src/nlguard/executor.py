"""Guarded execution of NL test cases.

Each navigation action ``a_i`` unfolds into::

    q_{i-1} --?a_i--> q_i.1 --!g_i--> q_i.2 --observe--> q_i.3 --readiness--> q_i
                                      q_i.2 --not observe--> INC
                                                  q_i.3 --not readiness--> INC

and each assertion ``A_j`` into ``q_{j-1} --Aj--> q_j`` (``PASS`` for the
last one), ``q_{j-1} --not Aj--> FAIL`` and ``q_{j-1} --error--> INC``.

The readiness check that closes block ``i`` looks at the *next* action
``a_{i+1}``; after the last action it is vacuously true.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from nlguard.agents import AgentBundle, AgentOutcome, Status
from nlguard.aut import AutModel, SimSession
from nlguard.iolts import Iolts
from nlguard.model import CountMode, TestCase, Verdict
from nlguard.steps import (
    DEFAULT_COUNT_MODE,
    DEFAULT_MATCHING,
    Matching,
    assert_strict,
    readiness_strict,
    strict_action_of,
)

ERROR = "error"


class StepKind(str, enum.Enum):
    NAV = "Nav"
    OBSERVE = "Observe"
    READINESS = "Readiness"
    ASSERTION = "Assertion"


class EvalPath(str, enum.Enum):
    STRICT = "Strict"
    AGENT = "Agent"
    NO_AGENT = "NoAgent"


@dataclass(frozen=True)
class StepRecord:
    step: int
    kind: StepKind
    path: EvalPath
    outcome: Union[bool, str]  # True/False, or ERROR
    page_after: str
    detail: str = ""

    def __post_init__(self):
        if self.path is EvalPath.STRICT and self.kind not in (StepKind.READINESS, StepKind.ASSERTION):
            raise ValueError("only readiness and assertions have a strict path")

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "kind": self.kind.value,
            "path": self.path.value,
            "outcome": self.outcome,
            "page_after": self.page_after,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class ExecConfig:
    matching: Matching = DEFAULT_MATCHING
    count_mode: CountMode = DEFAULT_COUNT_MODE


@dataclass
class ExecutionResult:
    verdict: Verdict
    iolts: Iolts
    step_log: list[StepRecord]
    path: list[tuple[str, str, str]]  # covered transitions, in order
    failing_step: Optional[int] = None
    diagnostic: str = ""

    @property
    def trace(self) -> tuple[str, ...]:
        """Observable and internal labels along the covered run."""
        return tuple(label for _, label, _ in self.path)

    @property
    def final_state(self) -> str:
        return self.path[-1][2] if self.path else self.iolts.initial

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "failing_step": self.failing_step,
            "diagnostic": self.diagnostic,
            "trace": list(self.trace),
            "step_log": [r.to_dict() for r in self.step_log],
            "iolts": self.iolts.to_dict(),
        }


class _Run:
    def __init__(self):
        self.transitions = []
        self.path = []
        self.log = []

    def add(self, *ts):
        self.transitions.extend(ts)

    def cover(self, t):
        self.path.append(t)

    def finish(self, verdict, failing=None, diagnostic="") -> ExecutionResult:
        verdicts = {s: Verdict(s) for s in ("PASS", "FAIL", "INC")
                    if any(dst == s for _, _, dst in self.transitions)}
        iolts = Iolts.build("q0", self.transitions, verdicts=verdicts)
        return ExecutionResult(verdict, iolts, self.log, self.path, failing, diagnostic)


def _call(fn, *args) -> AgentOutcome:
    # Agent or fixture faults become error outcomes, never exceptions.
    try:
        return fn(*args)
    except Exception as exc:  # noqa: BLE001
        return AgentOutcome.error(f"{type(exc).__name__}: {exc}")


def input_label(nav) -> str:
    strict = strict_action_of(nav)
    return strict.label() if strict is not None else f"?{nav.raw_text}"


def execute(tc: TestCase, model: AutModel, agents: AgentBundle, cfg: ExecConfig = ExecConfig()) -> ExecutionResult:
    session = SimSession(model)
    run = _Run()
    q = "q0"
    navs = tc.nav_actions
    for i, nav in enumerate(navs, start=1):
        before = session.page
        outcome = _call(agents.nav.perform, nav, session)
        page = session.page
        g = model.output_label(session.current)
        q1, q2, q3, qi = f"q{i}.1", f"q{i}.2", f"q{i}.3", f"q{i}"
        t_in, t_out = (q, input_label(nav), q1), (q1, g, q2)
        t_obs, t_nobs = (q2, "observe", q3), (q2, "not observe", "INC")
        t_rdy, t_nrdy = (q3, "readiness", qi), (q3, "not readiness", "INC")
        run.add(t_in, t_out, t_obs, t_rdy, t_nobs, t_nrdy)
        run.cover(t_in)
        run.cover(t_out)
        nav_ok = ERROR if outcome.status is Status.ERROR else outcome.status is Status.SUCCESS
        run.log.append(StepRecord(i, StepKind.NAV, EvalPath.AGENT, nav_ok, session.current,
                                  "; ".join(outcome.facts)))

        changed = page != before
        observed = changed and outcome.status is Status.SUCCESS
        detail = f"page {'changed' if changed else 'unchanged'}, agent {outcome.status.value}"
        run.log.append(StepRecord(i, StepKind.OBSERVE, EvalPath.NO_AGENT, observed, session.current, detail))
        if not observed:
            run.cover(t_nobs)
            return run.finish(Verdict.INC, i, f"step {i}: observe failed ({detail})")
        run.cover(t_obs)

        if i == len(navs):
            ready, path, detail = True, EvalPath.NO_AGENT, "no further action"
        else:
            nxt = navs[i]
            res = readiness_strict(strict_action_of(nxt), page, cfg.matching)
            if res.outcome:
                ready, path, detail = True, EvalPath.STRICT, res.explanation
            else:
                ans = _call(agents.readiness.readiness, nxt, page)
                path = EvalPath.AGENT
                if ans.status is Status.SUCCESS and ans.boolean_result is not None:
                    ready = ans.boolean_result
                else:
                    ready = ERROR
                detail = "; ".join(ans.facts)
        run.log.append(StepRecord(i, StepKind.READINESS, path, ready, session.current, detail))
        if ready is not True:
            run.cover(t_nrdy)
            return run.finish(Verdict.INC, i, f"step {i}: readiness of step {i + 1} failed ({detail})")
        run.cover(t_rdy)
        q = qi

    k, l = tc.k, tc.length
    if not tc.assertions:
        run.add((q, "end", "PASS"))
        run.cover((q, "end", "PASS"))
        return run.finish(Verdict.PASS)
    for j, expr in enumerate(tc.assertions, start=k + 1):
        nxt = "PASS" if j == l else f"q{j}"
        t_ok, t_fail, t_err = (q, f"A{j}", nxt), (q, f"not A{j}", "FAIL"), (q, "error", "INC")
        run.add(t_ok, t_fail, t_err)
        page = session.page
        res = assert_strict(expr, page, cfg.matching, cfg.count_mode)
        if res.outcome:
            value, path, detail = True, EvalPath.STRICT, res.explanation
        else:
            ans = _call(agents.assert_.evaluate, expr, page)
            path = EvalPath.AGENT
            detail = "; ".join(ans.facts)
            if ans.status is Status.SUCCESS and ans.boolean_result is not None:
                value = ans.boolean_result
            else:
                value = ERROR
        run.log.append(StepRecord(j, StepKind.ASSERTION, path, value, session.current, detail))
        if value is ERROR:
            run.cover(t_err)
            return run.finish(Verdict.INC, j, f"step {j}: assertion error ({detail})")
        if not value:
            run.cover(t_fail)
            return run.finish(Verdict.FAIL, j, f"step {j}: assertion is false")
        run.cover(t_ok)
        q = nxt
    return run.finish(Verdict.PASS)


def check_shape(result: ExecutionResult, tc: TestCase) -> list[str]:
    """Compare the transition structure of ``tc|AUT`` with the unfolding rules."""
    problems = []
    by_src = {}
    for src, label, dst in result.iolts.transitions:
        by_src.setdefault(src, {})[label] = dst
    q = "q0"
    for i in range(1, tc.k + 1):
        if q not in by_src:
            return problems  # the run stopped before this block
        outs = by_src[q]
        if len(outs) != 1:
            problems.append(f"{q}: expected a single input, got {sorted(outs)}")
            return problems
        label, q1 = next(iter(outs.items()))
        if not label.startswith("?") or q1 != f"q{i}.1":
            problems.append(f"{q}: bad input transition {label} -> {q1}")
        outs1 = by_src.get(q1, {})
        if len(outs1) != 1 or not next(iter(outs1)).startswith("!"):
            problems.append(f"{q1}: expected a single output")
            return problems
        q2 = next(iter(outs1.values()))
        want2 = {"observe": f"q{i}.3", "not observe": "INC"}
        if q2 != f"q{i}.2" or by_src.get(q2) != want2:
            problems.append(f"{q2}: observe branches are {by_src.get(q2)}")
        want3 = {"readiness": f"q{i}", "not readiness": "INC"}
        if by_src.get(f"q{i}.3") != want3:
            problems.append(f"q{i}.3: readiness branches are {by_src.get(f'q{i}.3')}")
        q = f"q{i}"
    for j in range(tc.k + 1, tc.length + 1):
        if q not in by_src:
            return problems
        nxt = "PASS" if j == tc.length else f"q{j}"
        want = {f"A{j}": nxt, f"not A{j}": "FAIL", "error": "INC"}
        if by_src[q] != want:
            problems.append(f"{q}: assertion branches are {by_src[q]}")
        q = nxt
    reached = [dst for _, _, dst in result.path if dst in result.iolts.verdicts]
    if len(reached) != 1 or result.final_state != reached[0]:
        problems.append(f"run reaches verdict states {reached}")
    elif result.iolts.verdicts[reached[0]] is not result.verdict:
        problems.append(f"verdict {result.verdict.value} but run ends in {reached[0]}")
    return problems


@dataclass
class BatchResult:
    runs: int
    histogram: dict
    observed_consistency: float
    step_success: dict
    seed: int
    results: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "seed": self.seed,
            "verdict_histogram": {v.value: self.histogram.get(v, 0) for v in Verdict},
            "observed_consistency": self.observed_consistency,
            "step_success_rates": {str(k): v for k, v in self.step_success.items()},
        }


def derive_seeds(master: int, n: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(master).generate_state(n, dtype=np.uint64)]


def observed_consistency(histogram: dict) -> float:
    """Fraction of runs that returned the most frequent verdict."""
    total = sum(histogram.values())
    return max(histogram.values()) / total if total else 0.0


def run_batch(
    tc: TestCase,
    model: AutModel,
    agents: AgentBundle,
    n: int,
    seed: int = 0,
    cfg: ExecConfig = ExecConfig(),
    keep_results: bool = False,
) -> BatchResult:
    if n < 1:
        raise ValueError("a batch needs at least one run")
    hist: Counter = Counter()
    good = Counter()
    kept = []
    for run_seed in derive_seeds(seed, n):
        res = execute(tc, model, agents.fork(run_seed), cfg)
        hist[res.verdict] += 1
        for step in _succeeded_steps(res, tc):
            good[step] += 1
        if keep_results:
            kept.append(res)
    rates = {j: good[j] / n for j in range(1, tc.length + 1)}
    return BatchResult(n, dict(hist), observed_consistency(hist), rates, seed, kept)


def _succeeded_steps(res: ExecutionResult, tc: TestCase):
    ok = {}
    for r in res.step_log:
        if r.kind is StepKind.NAV:
            continue
        if r.kind is StepKind.ASSERTION:
            ok[r.step] = r.outcome is True
        else:
            ok[r.step] = ok.get(r.step, True) and r.outcome is True
    return [s for s, v in ok.items() if v]
