"""Guarded execution and analysis of natural-language GUI test cases."""

from nlguard.agents import AgentBundle, AgentOutcome, FailureMode, FaultProfile, FaultyAgent, OracleAgent, Status
from nlguard.aut import AutModel, Mutation, SimSession, apply_action, load_aut_model, mutate, spec_of
from nlguard.consistency import (
    AgentStats,
    ConsistencyReport,
    agent_sigma,
    consistency_of,
    eval_agents,
    meets_three_sigma,
    mre,
    step_scores,
)
from nlguard.executor import ExecConfig, ExecutionResult, execute, run_batch
from nlguard.iolts import (
    P_3,
    SIGMA_3,
    Iolts,
    SigmaTriple,
    after,
    classify_weak_unsoundness,
    ioco_check,
    out,
    passes,
    traces,
)
from nlguard.model import (
    NavAction,
    PageSnapshot,
    StrictAction,
    StrictAssertion,
    TestCase,
    UiElement,
    Verdict,
    parse_test_suite,
    serialize_suite,
    validate_test_case,
)
from nlguard.steps import assert_strict, compile_test_case, parse_assertion, parse_nav_action, readiness_strict, strictness_of

__all__ = [name for name in dir() if not name.startswith("_")]
