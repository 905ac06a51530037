"""Agent deviation, per-step consistency scores and agent evaluation runs."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

from nlguard.agents import AgentBundle, Status
from nlguard.aut import BLANK_ID, AutModel, SimSession
from nlguard.executor import derive_seeds
from nlguard.iolts import P_3, SigmaTriple
from nlguard.model import TestCase
from nlguard.steps import Strictness, strict_action_of


def agent_sigma(p: float) -> float:
    """Standard deviation of a Bernoulli(p) task outcome."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    return math.sqrt(p * (1.0 - p))


def meets_three_sigma(p: float) -> bool:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    return p >= P_3


@dataclass(frozen=True)
class NavScore:
    readiness: float
    nav: float

    @property
    def value(self) -> float:
        return self.readiness * self.nav


@dataclass(frozen=True)
class AssertScore:
    value: float


def step_scores(tc: TestCase, strictness: Strictness, sigmas: SigmaTriple) -> list:
    """Scores of every step: readiness times navigation, then assertions.

    A step covered by a strict formula scores 1; an agent-evaluated step
    scores ``1 - 2 * sigma`` of the agent doing it. Navigation itself is
    always done by an agent.
    """
    s_n = 1.0 - 2.0 * sigmas.sigma_nav
    s_r_agent = 1.0 - 2.0 * sigmas.sigma_readiness
    s_a_agent = 1.0 - 2.0 * sigmas.sigma_assert
    scores: list = [
        NavScore(1.0 if strict else s_r_agent, s_n) for strict in strictness.readiness
    ]
    scores += [AssertScore(1.0 if strict else s_a_agent) for strict in strictness.assertions]
    if len(scores) != tc.length:
        raise ValueError("strictness does not match the test case")
    return scores


def consistency_of(tc: TestCase, strictness: Strictness, sigmas: SigmaTriple) -> float:
    scores = step_scores(tc, strictness, sigmas)
    return sum(s.value for s in scores) / len(scores)


def mre(estimated: float, observed: float) -> Optional[float]:
    """Relative error of the estimate; ``None`` when ``observed`` is zero."""
    if observed == 0:
        return None
    return abs(estimated - observed) / observed


@dataclass(frozen=True)
class ConsistencyReport:
    scores: tuple[float, ...]
    estimated: float
    observed: Optional[float]
    mre: Optional[float]

    @classmethod
    def compute(cls, tc, strictness, sigmas, observed=None) -> "ConsistencyReport":
        scores = tuple(s.value for s in step_scores(tc, strictness, sigmas))
        est = sum(scores) / len(scores)
        err = mre(est, observed) if observed is not None else None
        return cls(scores, est, observed, err)

    def to_dict(self) -> dict:
        return {
            "step_scores": list(self.scores),
            "estimated": self.estimated,
            "observed": self.observed,
            "mre": self.mre,
            "mre_computable": self.mre is not None,
        }


# ---------------------------------------------------------------------------
# Agent evaluation


@dataclass(frozen=True)
class AgentStats:
    role: str
    trials: int
    successes: int

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise ValueError("successes must lie in [0, trials]")

    @property
    def p_hat(self) -> Optional[float]:
        return self.successes / self.trials if self.trials else None

    @property
    def sigma(self) -> Optional[float]:
        p = self.p_hat
        return None if p is None else agent_sigma(p)

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "successes": self.successes,
            "p_hat": self.p_hat,
            "sigma": self.sigma,
        }


class MissingExpectations(ValueError):
    pass


def expected_contexts(tc: TestCase, model: AutModel) -> list[str]:
    """Ground-truth page before each navigation action, then the final page."""
    current = BLANK_ID
    pages = [current]
    for nav in tc.nav_actions:
        action = strict_action_of(nav)
        if action is not None:
            current = model.target_of(current, action) or current
        pages.append(current)
    return pages


def eval_agents(suite: list[TestCase], model: AutModel, agents: AgentBundle, n: int, seed: int = 0) -> dict:
    """Estimate per-role success probability over ``n`` runs of ``suite``.

    Every step is played from its ground-truth page, so one role's mistakes
    do not leak into another role's trials. Readiness and assertions are
    put to the agent directly, strict formulas are not consulted.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    for tc in suite:
        if tc.expectations is None or len(tc.expectations) != tc.length:
            raise MissingExpectations(f"test {tc.id} lacks per-step expectations")
    counts = {role: [0, 0] for role in ("nav", "readiness", "assert")}

    def record(role, ok):
        counts[role][0] += 1
        counts[role][1] += bool(ok)

    contexts = {tc.id: expected_contexts(tc, model) for tc in suite}
    for run_seed in derive_seeds(seed, n):
        bundle = agents.fork(run_seed)
        for tc in suite:
            ctx = contexts[tc.id]
            for i, nav in enumerate(tc.nav_actions):
                expect = tc.expectations[i]
                session = SimSession(model, ctx[i])
                if i > 0:
                    ans = _safe(bundle.readiness.readiness, nav, session.page)
                    record("readiness", ans is not None and ans.status is Status.SUCCESS
                           and ans.boolean_result == expect)
                before = session.page
                out = _safe(bundle.nav.perform, nav, session)
                if out is None or out.status is Status.ERROR:
                    record("nav", False)
                else:
                    observed = out.status is Status.SUCCESS and session.page != before
                    record("nav", observed == expect)
            final = model.page(ctx[-1])
            for j, expr in enumerate(tc.assertions, start=tc.k):
                ans = _safe(bundle.assert_.evaluate, expr, final)
                record("assert", ans is not None and ans.status is Status.SUCCESS
                       and ans.boolean_result == tc.expectations[j])
    return {role: AgentStats(role, t, s) for role, (t, s) in counts.items()}


def _safe(fn, *args):
    try:
        return fn(*args)
    except Exception:  # noqa: BLE001
        return None


def sigma_triple(stats: dict) -> SigmaTriple:
    """Sigmas from evaluation stats; a role with no trials counts as 0."""
    get = lambda role: stats[role].sigma or 0.0
    return SigmaTriple(get("nav"), get("readiness"), get("assert"))


def write_sigma_report(path, stats: dict, seed: int, n: int, extra: Optional[dict] = None) -> dict:
    doc = {
        "kind": "sigma-report",
        "seed": seed,
        "runs": n,
        "roles": {role: s.to_dict() for role, s in stats.items()},
    }
    doc.update(extra or {})
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc


def read_sigma_report(path) -> tuple[SigmaTriple, dict]:
    """Return the sigma triple and the per-role ``p_hat`` (or None)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        roles = doc["roles"]
        sig = {r: roles[r]["sigma"] for r in ("nav", "readiness", "assert")}
        p = {r: roles[r].get("p_hat") for r in ("nav", "readiness", "assert")}
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed sigma report {path}: missing {exc}") from None
    for r, v in sig.items():
        if v is None:
            sig[r] = 0.0
        elif not isinstance(v, (int, float)):
            raise ValueError(f"malformed sigma report {path}: sigma for {r} is {v!r}")
    return SigmaTriple(sig["nav"], sig["readiness"], sig["assert"]), p
