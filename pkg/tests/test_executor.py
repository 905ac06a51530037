import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlguard.agents import AgentBundle, AgentOutcome, FailureMode, FaultProfile, OracleAgent, Status
from nlguard.aut import Mutation, mutate
from nlguard.executor import (
    ERROR,
    EvalPath,
    StepKind,
    StepRecord,
    check_shape,
    derive_seeds,
    execute,
    observed_consistency,
    run_batch,
)
from nlguard.iolts import passes
from nlguard.model import Leaf, NavAction, TestCase, Verdict
from nlguard.steps import compile_test_case


def test_fig2_oracle_run(uca, uca_case, oracle):
    res = execute(uca_case, uca, oracle)
    g = [uca.output_label(p) for p in ("home", "eu", "news")]
    assert res.verdict is Verdict.PASS
    assert res.trace == (
        "?open(https://www.uca.fr/en)", g[0], "observe", "readiness",
        "?click(European University)", g[1], "observe", "readiness",
        "?click(ALL NEWS)", g[2], "observe", "readiness",
        "A4", "A5",
    )
    assert res.final_state == "PASS"
    assert check_shape(res, uca_case) == []
    assert passes(res)


def test_step_log_paths(uca, uca_case, oracle):
    log = execute(uca_case, uca, oracle).step_log
    ready = [r.path for r in log if r.kind is StepKind.READINESS]
    assert ready == [EvalPath.STRICT, EvalPath.STRICT, EvalPath.NO_AGENT]
    asserts = [r.path for r in log if r.kind is StepKind.ASSERTION]
    assert asserts == [EvalPath.AGENT, EvalPath.AGENT]
    assert {r.path for r in log if r.kind in (StepKind.NAV,)} == {EvalPath.AGENT}


def test_strict_path_only_for_readiness_and_assertions():
    with pytest.raises(ValueError):
        StepRecord(1, StepKind.NAV, EvalPath.STRICT, True, "p")


def test_removed_all_news_link_gives_inc_at_readiness(uca, uca_case):
    mutant = mutate(uca, Mutation.remove_element("eu", "e1"))
    res = execute(uca_case, mutant, AgentBundle.oracle(mutant))
    assert res.verdict is Verdict.INC
    assert res.failing_step == 2 and "readiness" in res.diagnostic
    assert res.trace[-1] == "not readiness"
    assert check_shape(res, uca_case) == []


def test_redirect_mutant_fails_on_artemis(uca, uca_case):
    mutant = mutate(uca, Mutation.redirect("eu", "Click 'ALL NEWS'", "home"))
    res = execute(uca_case, mutant, AgentBundle.oracle(mutant))
    assert res.verdict is Verdict.FAIL
    assert res.failing_step == 5
    assert not passes(res)


def test_dropped_transition_gives_inc_at_observe(uca, uca_case):
    mutant = mutate(uca, Mutation.drop("eu", "Click 'ALL NEWS'"))
    res = execute(uca_case, mutant, AgentBundle.oracle(mutant))
    assert res.verdict is Verdict.INC and res.trace[-1] == "not observe"
    assert passes(res)


class _Fixed:
    def __init__(self, base, nav=None, readiness=None, evaluate=None):
        self.base, self._nav, self._ready, self._eval = base, nav, readiness, evaluate

    def fork(self, seed):
        return self

    def perform(self, action, session):
        return self._nav(action, session) if self._nav else self.base.perform(action, session)

    def readiness(self, action, page):
        return self._ready(action, page) if self._ready else self.base.readiness(action, page)

    def evaluate(self, expr, page):
        return self._eval(expr, page) if self._eval else self.base.evaluate(expr, page)


def test_unknown_navigation_status_is_not_success(uca, uca_case):
    def unknown(action, session):
        OracleAgent(uca).perform(action, session)
        return AgentOutcome(Status.UNKNOWN)

    agent = _Fixed(OracleAgent(uca), nav=unknown)
    res = execute(uca_case, uca, AgentBundle(agent, agent, agent))
    assert res.verdict is Verdict.INC and res.failing_step == 1


def test_agent_exceptions_become_inc(uca, uca_case):
    def boom(expr, page):
        raise RuntimeError("backend crashed")

    agent = _Fixed(OracleAgent(uca), evaluate=boom)
    res = execute(uca_case, uca, AgentBundle(agent, agent, agent))
    assert res.verdict is Verdict.INC
    assert res.trace[-1] == "error" and "backend crashed" in res.diagnostic


def test_readiness_falls_back_to_the_agent(uca):
    tc = compile_test_case(TestCase(
        "t",
        (NavAction("Open https://www.uca.fr/en"), NavAction("Browse to the European pages")),
        (Leaf("'ALL NEWS' is present"),),
    ))
    calls = []

    def ready(action, page):
        calls.append(action.raw_text)
        return AgentOutcome.answer(False)

    agent = _Fixed(OracleAgent(uca), readiness=ready)
    res = execute(tc, uca, AgentBundle(agent, agent, agent))
    assert calls == ["Browse to the European pages"]
    assert res.verdict is Verdict.INC
    assert [r.path for r in res.step_log if r.kind is StepKind.READINESS] == [EvalPath.AGENT]


def test_readiness_error_takes_the_not_readiness_branch(uca):
    tc = compile_test_case(TestCase(
        "t", (NavAction("Open https://www.uca.fr/en"), NavAction("Tap it")), (Leaf("'x' is present"),)))
    agent = _Fixed(OracleAgent(uca), readiness=lambda a, p: AgentOutcome.error("down"))
    res = execute(tc, uca, AgentBundle(agent, agent, agent))
    assert res.step_log[-1].outcome == ERROR and res.trace[-1] == "not readiness"


def test_navigation_only_case_passes(uca):
    tc = compile_test_case(TestCase("t", (NavAction("Open https://www.uca.fr/en"),), (), navigation_only=True))
    res = execute(tc, uca, AgentBundle.oracle(uca))
    assert res.verdict is Verdict.PASS and check_shape(res, tc) == []


def test_strict_shop_suite_passes_with_no_agent_evaluation(shop, shop_suite):
    for tc in shop_suite:
        res = execute(tc, shop, AgentBundle.oracle(shop))
        assert res.verdict is Verdict.PASS, tc.id
        paths = {r.path for r in res.step_log if r.kind in (StepKind.READINESS, StepKind.ASSERTION)}
        assert EvalPath.AGENT not in paths


def test_report_dict_is_json_ready(uca, uca_case, oracle):
    import json

    doc = execute(uca_case, uca, oracle).to_dict()
    assert json.loads(json.dumps(doc)) == doc
    assert doc["iolts"]["verdicts"] == {"PASS": "PASS", "FAIL": "FAIL", "INC": "INC"}


def test_oracle_batch(uca, uca_case, oracle):
    b = run_batch(uca_case, uca, oracle, 20)
    assert b.histogram == {Verdict.PASS: 20}
    assert b.observed_consistency == 1.0
    assert set(b.step_success.values()) == {1.0}


def test_error_nav_agent_never_fails(uca, uca_case):
    agents = AgentBundle.faulty(uca, nav=FaultProfile(0.0, FailureMode.ERROR))
    assert run_batch(uca_case, uca, agents, 20).histogram == {Verdict.INC: 20}


def test_hallucinated_assertion_fail_fraction(uca):
    from nlguard import fixtures

    tc = fixtures.load_suite("uca-single")[0]
    agents = AgentBundle.faulty(uca, assert_=FaultProfile(0.5, FailureMode.HALLUCINATE))
    b = run_batch(tc, uca, agents, 10_000, seed=5)
    # Only the one agent assertion is random: FAIL iff its single draw fails.
    assert abs(b.histogram[Verdict.FAIL] / 10_000 - 0.5) < 0.03
    assert set(b.histogram) == {Verdict.PASS, Verdict.FAIL}


def test_batches_are_deterministic_per_master_seed(uca, uca_case):
    prof = FaultProfile(0.7, FailureMode.HALLUCINATE)
    agents = AgentBundle.faulty(uca, nav=prof, readiness=prof, assert_=prof)
    a = run_batch(uca_case, uca, agents, 50, seed=9, keep_results=True)
    b = run_batch(uca_case, uca, agents, 50, seed=9, keep_results=True)
    assert [r.trace for r in a.results] == [r.trace for r in b.results]
    c = run_batch(uca_case, uca, agents, 50, seed=10, keep_results=True)
    assert [r.trace for r in a.results] != [r.trace for r in c.results]


def test_derived_seeds_and_modal_fraction():
    assert derive_seeds(1, 3) == derive_seeds(1, 3)
    assert len(set(derive_seeds(1, 100))) == 100
    assert observed_consistency({Verdict.PASS: 15, Verdict.INC: 5}) == 0.75
    with pytest.raises(ValueError):
        run_batch(None, None, None, 0)


_profiles = st.builds(
    FaultProfile,
    st.sampled_from([0.0, 0.3, 0.7, 1.0]),
    st.sampled_from(list(FailureMode)),
)


@settings(max_examples=40, deadline=None)
@given(_profiles, _profiles, _profiles, st.integers(0, 2**32))
def test_every_run_has_the_algorithm_shape(uca, uca_case, nav, ready, asrt, seed):
    agents = AgentBundle.faulty(uca, nav=nav, readiness=ready, assert_=asrt).fork(seed)
    res = execute(uca_case, uca, agents)
    assert check_shape(res, uca_case) == []
    assert res.verdict in (Verdict.PASS, Verdict.FAIL, Verdict.INC)
    if all(p.failure_mode is FailureMode.ERROR for p in (nav, ready, asrt)):
        assert res.verdict is not Verdict.FAIL
