"""Agents for navigation, readiness and assertion evaluation.

Every backend exposes the same three methods, ``perform``, ``readiness``
and ``evaluate``; an :class:`AgentBundle` picks one backend per role.
:class:`OracleAgent` answers from the simulator's ground truth and
:class:`FaultyAgent` degrades another agent with seeded Bernoulli faults.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from nlguard.aut import AutModel, SimSession, apply_action
from nlguard.model import AssertionExpr, NavAction, PageSnapshot, render_expr
from nlguard.steps import assert_strict, readiness_strict, strict_action_of


class Status(str, enum.Enum):
    SUCCESS = "Success"
    FAILED = "Failed"
    UNKNOWN = "Unknown"
    ERROR = "Error"


@dataclass(frozen=True)
class AgentOutcome:
    status: Status
    boolean_result: Optional[bool] = None
    facts: tuple[str, ...] = ()

    @classmethod
    def error(cls, *facts: str) -> "AgentOutcome":
        return cls(Status.ERROR, None, tuple(facts))

    @classmethod
    def answer(cls, value: bool, *facts: str) -> "AgentOutcome":
        return cls(Status.SUCCESS, bool(value), tuple(facts))


class MissingOracle(LookupError):
    """The fixture has no ground truth for an agent-only assertion."""


class OracleAgent:
    """Deterministic agent that never errs and never hallucinates."""

    def __init__(self, model: AutModel):
        self.model = model

    def fork(self, seed: int) -> "OracleAgent":
        return self

    def perform(self, action: NavAction, session: SimSession) -> AgentOutcome:
        strict = strict_action_of(action)
        if strict is None:
            return AgentOutcome(Status.FAILED, None, (f"cannot interpret {action.raw_text!r}",))
        before = session.page
        after = apply_action(session, strict)
        if after != before:
            return AgentOutcome(Status.SUCCESS, None, (f"performed {strict.label()}",))
        return AgentOutcome(Status.FAILED, None, (f"{strict.label()} had no effect",))

    def readiness(self, action: NavAction, page: PageSnapshot) -> AgentOutcome:
        # Unrecognized actions cannot label a transition, so they are never ready.
        res = readiness_strict(strict_action_of(action), page)
        return AgentOutcome.answer(bool(res.outcome), res.explanation)

    def evaluate(self, expr: AssertionExpr, page: PageSnapshot) -> AgentOutcome:
        res = assert_strict(expr, page)
        if res.applicable:
            return AgentOutcome.answer(res.outcome, res.explanation)
        text = render_expr(expr)
        rule = self.model.oracle_for(text)
        if rule is None:
            raise MissingOracle(f"no oracle entry for assertion {text!r}")
        return AgentOutcome.answer(rule.holds(page), f"oracle rule {rule.text!r}")


class FailureMode(str, enum.Enum):
    ERROR = "Error"
    HALLUCINATE = "Hallucinate"


class NavHallucination(str, enum.Enum):
    REPORT_ONLY = "report_only"  # claim success, do nothing
    ACT_WRONG = "act_wrong"  # take some other available transition
    MIXED = "mixed"  # fair coin between the two


@dataclass(frozen=True)
class FaultProfile:
    p_success: float
    failure_mode: FailureMode = FailureMode.ERROR
    rng_seed: int = 0
    nav_hallucination: NavHallucination = NavHallucination.MIXED

    def __post_init__(self):
        if not 0.0 <= self.p_success <= 1.0:
            raise ValueError(f"p_success={self.p_success} outside [0, 1]")
        object.__setattr__(self, "failure_mode", FailureMode(self.failure_mode))
        object.__setattr__(self, "nav_hallucination", NavHallucination(self.nav_hallucination))

    @classmethod
    def parse(cls, spec: str, seed: int = 0) -> "FaultProfile":
        """Parse ``"0.9:Error"`` or ``"0.5:Hallucinate"``."""
        p, _, mode = spec.partition(":")
        lookup = {m.value.lower(): m for m in FailureMode}
        try:
            return cls(float(p), lookup[(mode or "error").strip().lower()], seed)
        except (KeyError, ValueError):
            raise ValueError(f"bad fault profile {spec!r}, expected <p>:Error|Hallucinate") from None


class FaultyAgent:
    """Delegates to ``inner`` with probability ``p_success``, otherwise fails.

    One Bernoulli draw decides each call. Error mode reports an error and
    touches nothing; hallucinate mode returns a wrong answer (flipped
    boolean, or a navigation claimed successful that did not happen or
    went somewhere else).
    """

    def __init__(self, inner, profile: FaultProfile):
        self.inner = inner
        self.profile = profile
        self.rng = np.random.default_rng(profile.rng_seed)
        self.calls = 0
        self.faults = 0

    def fork(self, seed: int) -> "FaultyAgent":
        return FaultyAgent(self.inner.fork(seed), replace(self.profile, rng_seed=seed))

    def _ok(self) -> bool:
        self.calls += 1
        ok = bool(self.rng.random() < self.profile.p_success)
        if not ok:
            self.faults += 1
        return ok

    def perform(self, action: NavAction, session: SimSession) -> AgentOutcome:
        if self._ok():
            return self.inner.perform(action, session)
        if self.profile.failure_mode is FailureMode.ERROR:
            return AgentOutcome.error("injected navigation error")
        mode = self.profile.nav_hallucination
        if mode is NavHallucination.MIXED:
            mode = NavHallucination.ACT_WRONG if self.rng.random() < 0.5 else NavHallucination.REPORT_ONLY
        if mode is NavHallucination.ACT_WRONG:
            intended = strict_action_of(action)
            wrong = [
                a for a, _ in session.model.available(session.current)
                if intended is None or a.key() != intended.key()
            ]
            if wrong:
                choice = wrong[int(self.rng.integers(len(wrong)))]
                apply_action(session, choice)
                return AgentOutcome(Status.SUCCESS, None, ("hallucinated", f"performed {choice.label()}"))
        return AgentOutcome(Status.SUCCESS, None, ("hallucinated", "reported success without acting"))

    def _judge(self, call) -> AgentOutcome:
        if self._ok():
            return call()
        if self.profile.failure_mode is FailureMode.ERROR:
            return AgentOutcome.error("injected evaluation error")
        truth = call()
        if truth.status is Status.ERROR:
            return AgentOutcome.answer(False, "hallucinated")
        return AgentOutcome.answer(not truth.boolean_result, "hallucinated")

    def readiness(self, action: NavAction, page: PageSnapshot) -> AgentOutcome:
        return self._judge(lambda: self.inner.readiness(action, page))

    def evaluate(self, expr: AssertionExpr, page: PageSnapshot) -> AgentOutcome:
        return self._judge(lambda: self.inner.evaluate(expr, page))


ROLES = ("nav", "readiness", "assert")


@dataclass
class AgentBundle:
    nav: object
    readiness: object
    assert_: object

    def __post_init__(self):
        if self.nav is None or self.readiness is None or self.assert_ is None:
            raise ValueError("an agent bundle needs all three roles")

    @classmethod
    def oracle(cls, model: AutModel) -> "AgentBundle":
        agent = OracleAgent(model)
        return cls(agent, agent, agent)

    @classmethod
    def faulty(cls, model: AutModel, nav=None, readiness=None, assert_=None) -> "AgentBundle":
        """Oracle bundle with the given roles wrapped by fault profiles."""
        base = OracleAgent(model)
        wrap = lambda prof: base if prof is None else FaultyAgent(base, prof)
        return cls(wrap(nav), wrap(readiness), wrap(assert_))

    def fork(self, seed: int) -> "AgentBundle":
        """Fresh, independently seeded copies for one run."""
        seeds = np.random.SeedSequence(seed).generate_state(3, dtype=np.uint64)
        return AgentBundle(
            self.nav.fork(int(seeds[0])),
            self.readiness.fork(int(seeds[1])),
            self.assert_.fork(int(seeds[2])),
        )


def nav_perform(agent, action: NavAction, session: SimSession) -> AgentOutcome:
    return agent.perform(action, session)


def readiness_evaluate(agent, action: NavAction, page: PageSnapshot) -> AgentOutcome:
    return agent.readiness(action, page)


def assert_evaluate(agent, expr: AssertionExpr, page: PageSnapshot) -> AgentOutcome:
    return agent.evaluate(expr, page)
