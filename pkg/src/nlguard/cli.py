"""Command-line entry point: ``run``, ``eval-agents``, ``analyze`` and ``ioco``.

Exit status: 0 when every verdict is PASS (or the AUT conforms), 1 on any
FAIL (or an ioco violation), 2 on INC without FAIL, 3 on configuration or
I/O errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from nlguard.agents import AgentBundle, FaultProfile, Status
from nlguard.aut import ModelError, load_aut_model, spec_of
from nlguard.consistency import (
    ConsistencyReport,
    MissingExpectations,
    agent_sigma,
    eval_agents,
    read_sigma_report,
    sigma_triple,
    write_sigma_report,
)
from nlguard.executor import ExecConfig, run_batch
from nlguard.iolts import SIGMA_3, SigmaTriple, classify_weak_unsoundness, ioco_check
from nlguard.model import CountMode, SuiteSyntaxError, Verdict, parse_test_suite
from nlguard.steps import Matching, compile_test_case, strictness_of

EXIT_PASS, EXIT_FAIL, EXIT_INC, EXIT_CONFIG = 0, 1, 2, 3
ROLE_FLAGS = {"nav": "fault_nav", "readiness": "fault_readiness", "assert": "fault_assert"}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    suite: Optional[Path] = None
    model: Optional[Path] = None
    agents: str = "oracle"
    n: int = 1
    seed: int = 0
    out: Path = Path("reports")
    faults: dict = field(default_factory=dict)  # role -> FaultProfile
    endpoint: Optional[str] = None
    llm_model: Optional[str] = None
    timeout_ms: Optional[int] = None
    llm_config: Optional[Path] = None
    count_mode: CountMode = CountMode.AT_LEAST
    matching: Matching = Matching.SUBSTRING
    sigmas: Optional[Path] = None
    max_depth: int = 12
    impl: Optional[Path] = None

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("--n must be >= 1")
        if self.agents not in ("oracle", "fault", "llm"):
            raise ConfigError(f"unknown agent backend {self.agents!r}")
        if self.max_depth < 0:
            raise ConfigError("--max-depth must be >= 0")


def _read(path: Path, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {path}: {exc.strerror or exc}") from None


def load_model_file(path):
    try:
        return load_aut_model(_read(path, "model"))
    except ModelError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_suite_file(path):
    try:
        return [compile_test_case(tc) for tc in parse_test_suite(_read(path, "suite"))]
    except SuiteSyntaxError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def build_agents(cfg: RunConfig, model) -> AgentBundle:
    if cfg.agents == "oracle":
        return AgentBundle.oracle(model)
    if cfg.agents == "fault":
        return AgentBundle.faulty(
            model,
            nav=cfg.faults.get("nav"),
            readiness=cfg.faults.get("readiness"),
            assert_=cfg.faults.get("assert"),
        )
    from nlguard.llm import LlmAgent, LlmConfig

    try:
        llm_cfg = LlmConfig.load(
            cfg.llm_config, endpoint=cfg.endpoint, model=cfg.llm_model, timeout_ms=cfg.timeout_ms
        )
    except (OSError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    agent = LlmAgent(llm_cfg)
    return AgentBundle(agent, agent, agent)


def prior_sigmas(cfg: RunConfig) -> Optional[SigmaTriple]:
    """Sigmas for the estimated consistency, when they are known up front."""
    if cfg.sigmas is not None:
        try:
            return read_sigma_report(cfg.sigmas)[0]
        except OSError as exc:
            raise ConfigError(f"cannot read sigma report {cfg.sigmas}: {exc}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if cfg.agents == "oracle":
        return SigmaTriple(0.0, 0.0, 0.0)
    if cfg.agents == "fault":
        s = {r: agent_sigma(p.p_success) if (p := cfg.faults.get(r)) else 0.0 for r in ROLE_FLAGS}
        return SigmaTriple(s["nav"], s["readiness"], s["assert"])
    return None


def _report_path(cfg: RunConfig, suffix: str = "") -> Path:
    out = Path(cfg.out)
    if out.suffix == ".json":
        return out
    return out / f"{Path(cfg.suite).stem}-seed{cfg.seed}{suffix}.json"


def _write_json(path: Path, doc: dict) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")
    except OSError as exc:
        raise ConfigError(f"cannot write report {path}: {exc.strerror or exc}") from None


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def cmd_run(cfg: RunConfig) -> tuple[int, dict]:
    model = load_model_file(cfg.model)
    suite = load_suite_file(cfg.suite)
    agents = build_agents(cfg, model)
    sigmas = prior_sigmas(cfg)
    exec_cfg = ExecConfig(cfg.matching, cfg.count_mode)
    cases, seen = [], set()
    for idx, tc in enumerate(suite):
        batch = run_batch(tc, model, agents, cfg.n, seed=cfg.seed + idx, cfg=exec_cfg, keep_results=True)
        first = batch.results[0]
        modal = max(batch.histogram, key=lambda v: (batch.histogram[v], v is Verdict.PASS))
        strictness = strictness_of(tc)
        entry = {
            "id": tc.id,
            "verdict": modal.value,
            "batch": batch.to_dict(),
            "failing_step": first.failing_step,
            "diagnostic": first.diagnostic,
            "execution": first.to_dict(),
            "strictness": {"readiness": list(strictness.readiness), "assertions": list(strictness.assertions)},
        }
        if sigmas is not None:
            rep = ConsistencyReport.compute(tc, strictness, sigmas, batch.observed_consistency)
            entry["consistency"] = rep.to_dict()
        else:
            entry["consistency"] = {"estimated": None, "observed": batch.observed_consistency, "mre": None,
                                    "mre_computable": False, "step_scores": None}
        cases.append(entry)
        seen.update(batch.histogram)
    report = {
        "kind": "run-report",
        "generated_at": _timestamp(),
        "suite": str(cfg.suite),
        "model": str(cfg.model),
        "agents": cfg.agents,
        "faults": {r: _profile_text(p) for r, p in sorted(cfg.faults.items())},
        "runs_per_case": cfg.n,
        "seed": cfg.seed,
        "sigmas": sigmas.as_dict() if sigmas else None,
        "test_cases": cases,
    }
    path = _report_path(cfg)
    _write_json(path, report)
    for c in cases:
        line = f"{c['id']}: {c['verdict']}"
        if c["failing_step"] is not None and c["verdict"] != "PASS":
            line += f" (step {c['failing_step']}: {c['diagnostic']})"
        print(line)
    print(f"report written to {path}")
    if Verdict.FAIL in seen:
        return EXIT_FAIL, report
    if Verdict.INC in seen:
        return EXIT_INC, report
    return EXIT_PASS, report


def _profile_text(p: FaultProfile) -> str:
    return f"{p.p_success}:{p.failure_mode.value}"


class _ErrorCounter:
    """Counts Error outcomes of one role without changing them."""

    def __init__(self, inner, tally: dict, role: str):
        self.inner, self.tally, self.role = inner, tally, role

    def fork(self, seed: int) -> "_ErrorCounter":
        return _ErrorCounter(self.inner.fork(seed), self.tally, self.role)

    def _count(self, out):
        if out.status is Status.ERROR:
            self.tally[self.role] = self.tally.get(self.role, 0) + 1
        return out

    def perform(self, action, session):
        return self._count(self.inner.perform(action, session))

    def readiness(self, action, page):
        return self._count(self.inner.readiness(action, page))

    def evaluate(self, expr, page):
        return self._count(self.inner.evaluate(expr, page))


def cmd_eval_agents(cfg: RunConfig) -> tuple[int, dict]:
    model = load_model_file(cfg.model)
    suite = load_suite_file(cfg.suite)
    base = build_agents(cfg, model)
    errors: dict = {}
    agents = AgentBundle(
        _ErrorCounter(base.nav, errors, "nav"),
        _ErrorCounter(base.readiness, errors, "readiness"),
        _ErrorCounter(base.assert_, errors, "assert"),
    )
    try:
        stats = eval_agents(suite, model, agents, cfg.n, cfg.seed)
    except MissingExpectations as exc:
        raise ConfigError(str(exc)) from None
    sig = sigma_triple(stats)
    extra = {
        "generated_at": _timestamp(),
        "suite": str(cfg.suite),
        "model": str(cfg.model),
        "agents": cfg.agents,
        "faults": {r: _profile_text(p) for r, p in sorted(cfg.faults.items())},
        "agent_errors": {r: errors.get(r, 0) for r in ROLE_FLAGS},
        "meets_three_sigma": {r: v < SIGMA_3 for r, v in sig.as_dict().items()},
    }
    path = _report_path(cfg, "-sigmas")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        doc = write_sigma_report(path, stats, cfg.seed, cfg.n, extra)
    except OSError as exc:
        raise ConfigError(f"cannot write report {path}: {exc.strerror or exc}") from None
    for role, s in stats.items():
        p = "n/a" if s.p_hat is None else f"{s.p_hat:.4f}"
        sd = "n/a" if s.sigma is None else f"{s.sigma:.4f}"
        print(f"{role}: trials={s.trials} p_hat={p} sigma={sd}")
    if any(errors.values()):
        print(f"agent errors: {extra['agent_errors']}", file=sys.stderr)
    print(f"sigma report written to {path}")
    return EXIT_PASS, doc


def prop_lines(report) -> list[str]:
    if report.prop1_holds:
        p1 = "Prop. 1 condition met"
    else:
        p1 = f"Prop. 1 condition not met ({', '.join(report.prop1_failing_roles)})"
    if report.prop2_holds:
        p2 = "Prop. 2 condition met"
    else:
        p2 = f"Prop. 2 condition not met ({'; '.join(report.prop2_reasons)})"
    return [p1, p2]


def cmd_analyze(cfg: RunConfig) -> tuple[int, dict]:
    if cfg.sigmas is None:
        raise ConfigError("analyze needs --sigmas <sigma report>")
    suite = load_suite_file(cfg.suite)
    try:
        sigmas, p_hat = read_sigma_report(cfg.sigmas)
    except OSError as exc:
        raise ConfigError(f"cannot read sigma report {cfg.sigmas}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    three_sigma = {r: v < SIGMA_3 for r, v in sigmas.as_dict().items()}
    cases = []
    for tc in suite:
        strictness = strictness_of(tc)
        rep = ConsistencyReport.compute(tc, strictness, sigmas)
        wu = classify_weak_unsoundness(tc, sigmas, strictness)
        lines = prop_lines(wu)
        cases.append({
            "id": tc.id,
            "strictness": {"readiness": list(strictness.readiness), "assertions": list(strictness.assertions),
                           "all_strict": strictness.all_strict},
            "consistency": rep.estimated,
            "step_scores": list(rep.scores),
            "classification": wu.to_dict(),
            "summary": lines,
        })
        print(f"{tc.id}: consistency={rep.estimated:.3f}; {lines[0]}; {lines[1]}; claim: {wu.claim}")
    doc = {
        "kind": "analysis",
        "generated_at": _timestamp(),
        "suite": str(cfg.suite),
        "sigmas": sigmas.as_dict(),
        "p_hat": p_hat,
        "three_sigma": three_sigma,
        "test_cases": cases,
    }
    if cfg.out is not None and str(cfg.out) != "-":
        path = _report_path(cfg, "-analysis")
        _write_json(path, doc)
        print(f"analysis written to {path}")
    return EXIT_PASS, doc


def cmd_ioco(cfg: RunConfig) -> tuple[int, dict]:
    model = load_model_file(cfg.model)
    impl = load_model_file(cfg.impl) if cfg.impl is not None else model
    report = ioco_check(spec_of(impl), spec_of(model), cfg.max_depth)
    doc = {"kind": "ioco", "model": str(cfg.model), "impl": str(cfg.impl or cfg.model),
           "max_depth": cfg.max_depth, **report.to_dict()}
    if report.conformant:
        print(f"conformant over {report.checked} trace(s)" + ("" if report.complete else " (depth-bounded)"))
    else:
        for v in doc["violations"]:
            print(f"violation after {' '.join(v['trace'])}: unexpected {', '.join(v['unexpected_outputs'])}")
    return (EXIT_PASS if report.conformant else EXIT_FAIL), doc


COMMANDS = {"run": cmd_run, "eval-agents": cmd_eval_agents, "analyze": cmd_analyze, "ioco": cmd_ioco}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlguard", description="Guarded execution of natural-language GUI tests.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, suite=True, model=True):
        p.add_argument("--config", type=Path, help="JSON file with default values for these flags")
        if suite:
            p.add_argument("--suite", type=Path)
        if model:
            p.add_argument("--model", type=Path)
        p.add_argument("--out", type=Path, help="report directory, or a .json file path")
        p.add_argument("--seed", type=int)

    def agent_flags(p):
        p.add_argument("--agents", choices=("oracle", "fault", "llm"))
        p.add_argument("--n", type=int)
        for role in ROLE_FLAGS:
            p.add_argument(f"--fault-{role}", metavar="P:MODE", help="e.g. 0.9:Error or 0.5:Hallucinate")
        p.add_argument("--endpoint")
        p.add_argument("--llm-model")
        p.add_argument("--timeout-ms", type=int)
        p.add_argument("--llm-config", type=Path, help="JSON file with endpoint, model, timeout_s")

    p = sub.add_parser("run", help="execute a suite and write an execution report")
    common(p)
    agent_flags(p)
    p.add_argument("--count-mode", choices=[m.value for m in CountMode])
    p.add_argument("--matching", choices=[m.value for m in Matching])
    p.add_argument("--sigmas", type=Path, help="sigma report used for the estimated consistency")

    p = sub.add_parser("eval-agents", help="estimate per-role agent deviations")
    common(p)
    agent_flags(p)

    p = sub.add_parser("analyze", help="consistency and weak-unsoundness classification")
    common(p, model=False)
    p.add_argument("--sigmas", type=Path)

    p = sub.add_parser("ioco", help="check an implementation model against a specification model")
    common(p, suite=False)
    p.add_argument("--impl", type=Path, help="implementation model (default: the model itself)")
    p.add_argument("--max-depth", type=int)
    return parser


_PATH_KEYS = {"suite", "model", "out", "sigmas", "impl", "llm_config"}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None) is not None:
        try:
            loaded = json.loads(_read(args.config, "config"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"{args.config}: expected a JSON object")
        values.update({k.replace("-", "_"): v for k, v in loaded.items()})
    values.update({k: v for k, v in vars(args).items() if v is not None and k not in ("command", "config")})

    faults = {}
    for role, key in ROLE_FLAGS.items():
        text = values.pop(key, None)
        if text is not None:
            try:
                faults[role] = FaultProfile.parse(str(text), seed=0)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
    allowed = set(RunConfig.__dataclass_fields__) - {"faults"}
    unknown = set(values) - allowed
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    for key in _PATH_KEYS & set(values):
        values[key] = Path(values[key])
    try:
        if "count_mode" in values:
            values["count_mode"] = CountMode(values["count_mode"])
        if "matching" in values:
            values["matching"] = Matching(values["matching"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if faults and values.get("agents", "oracle") == "oracle":
        values["agents"] = "fault"
    cfg = RunConfig(faults=faults, **values)
    if args.command in ("run", "eval-agents") and (cfg.suite is None or cfg.model is None):
        raise ConfigError(f"{args.command} needs --suite and --model")
    if args.command == "analyze" and cfg.suite is None:
        raise ConfigError("analyze needs --suite")
    if args.command == "ioco" and cfg.model is None:
        raise ConfigError("ioco needs --model")
    return cfg


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        code, _ = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return code


if __name__ == "__main__":
    sys.exit(main())
