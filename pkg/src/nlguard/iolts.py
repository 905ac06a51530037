"""Input/output labelled transition systems and the analyses defined on them.

Labels are plain strings. Inputs start with ``?``, outputs with ``!``;
everything else (``observe``, ``not readiness``, ``A5``, ``error`` ...) is
internal and invisible in traces.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Optional

from nlguard.model import TestCase, Verdict

Trace = tuple[str, ...]
Transition = tuple[str, str, str]


def label_kind(label: str) -> str:
    if label.startswith("?"):
        return "input"
    if label.startswith("!"):
        return "output"
    return "internal"


@dataclass(frozen=True)
class Iolts:
    states: tuple[str, ...]
    initial: str
    transitions: tuple[Transition, ...]
    inputs: frozenset = frozenset()
    outputs: frozenset = frozenset()
    internal: frozenset = frozenset()
    verdicts: Mapping[str, Verdict] = field(default_factory=dict)

    def __post_init__(self):
        known = set(self.states)
        if len(known) != len(self.states):
            raise ValueError("duplicate states")
        if self.initial not in known:
            raise ValueError(f"initial state {self.initial!r} not in states")
        labels = self.inputs | self.outputs | self.internal
        if (self.inputs & self.outputs) or (self.inputs & self.internal) or (self.outputs & self.internal):
            raise ValueError("label partitions overlap")
        for src, label, dst in self.transitions:
            if src not in known or dst not in known:
                raise ValueError(f"transition {src} -{label}-> {dst} has an unknown endpoint")
            if label not in labels:
                raise ValueError(f"label {label!r} is not declared")
            if src in self.verdicts:
                raise ValueError(f"verdict state {src!r} has an outgoing transition")
        for s in self.verdicts:
            if s not in known:
                raise ValueError(f"verdict state {s!r} not in states")

    @classmethod
    def build(cls, initial, transitions, states=(), verdicts=None) -> "Iolts":
        """Infer states and label partitions from the transition list."""
        order = {initial: None}
        for s in states:
            order.setdefault(s, None)
        for src, _, dst in transitions:
            order.setdefault(src, None)
            order.setdefault(dst, None)
        for s in verdicts or {}:
            order.setdefault(s, None)
        parts = {"input": set(), "output": set(), "internal": set()}
        for _, label, _ in transitions:
            parts[label_kind(label)].add(label)
        return cls(
            states=tuple(order),
            initial=initial,
            transitions=tuple(transitions),
            inputs=frozenset(parts["input"]),
            outputs=frozenset(parts["output"]),
            internal=frozenset(parts["internal"]),
            verdicts=dict(verdicts or {}),
        )

    @cached_property
    def _succ(self) -> dict:
        succ = defaultdict(list)
        for src, label, dst in self.transitions:
            succ[src].append((label, dst))
        return succ

    def successors(self, state: str) -> list[tuple[str, str]]:
        return self._succ.get(state, [])

    def is_observable(self, label: str) -> bool:
        return label in self.inputs or label in self.outputs

    def is_deterministic(self) -> bool:
        if any(label in self.internal for _, label, _ in self.transitions):
            return False
        seen = set()
        for src, label, _ in self.transitions:
            if (src, label) in seen:
                return False
            seen.add((src, label))
        return True

    def to_dict(self) -> dict:
        return {
            "states": list(self.states),
            "initial": self.initial,
            "inputs": sorted(self.inputs),
            "outputs": sorted(self.outputs),
            "internal": sorted(self.internal),
            "transitions": [list(t) for t in self.transitions],
            "verdicts": {s: v.value for s, v in self.verdicts.items()},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Iolts":
        return cls(
            states=tuple(doc["states"]),
            initial=doc["initial"],
            transitions=tuple(tuple(t) for t in doc["transitions"]),
            inputs=frozenset(doc["inputs"]),
            outputs=frozenset(doc["outputs"]),
            internal=frozenset(doc["internal"]),
            verdicts={s: Verdict(v) for s, v in doc["verdicts"].items()},
        )

    def render(self) -> str:
        """Line-per-transition text rendering, stable across runs."""
        lines = [f"initial {self.initial}"]
        lines += [f"{src} --{label}--> {dst}" for src, label, dst in self.transitions]
        lines += [f"verdict {s} {v.value}" for s, v in self.verdicts.items()]
        return "\n".join(lines)


def closure(iolts: Iolts, states: Iterable[str]) -> frozenset:
    """States reachable through internal transitions only."""
    seen = set(states)
    stack = list(seen)
    while stack:
        s = stack.pop()
        for label, dst in iolts.successors(s):
            if label in iolts.internal and dst not in seen:
                seen.add(dst)
                stack.append(dst)
    return frozenset(seen)


def _step(iolts: Iolts, states: frozenset, label: str) -> frozenset:
    nxt = {dst for s in states for lab, dst in iolts.successors(s) if lab == label}
    return closure(iolts, nxt)


def after(iolts: Iolts, trace: Iterable[str], start: Optional[Iterable[str]] = None) -> frozenset:
    current = closure(iolts, [iolts.initial] if start is None else start)
    for label in trace:
        current = _step(iolts, current, label)
        if not current:
            break
    return current


def out(iolts: Iolts, states: Iterable[str]) -> frozenset:
    states = closure(iolts, states)
    return frozenset(
        label for s in states for label, _ in iolts.successors(s) if label in iolts.outputs
    )


class TraceSet(NamedTuple):
    traces: frozenset
    complete: bool  # False when some trace could be extended past max_depth


def traces(iolts: Iolts, max_depth: int) -> TraceSet:
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    frontier = {(): closure(iolts, [iolts.initial])}
    found = {()}
    for _ in range(max_depth):
        nxt = {}
        for tr, states in frontier.items():
            for label in _observable_moves(iolts, states):
                nxt[tr + (label,)] = _step(iolts, states, label)
        found.update(nxt)
        frontier = nxt
        if not frontier:
            break
    complete = not any(_observable_moves(iolts, s) for s in frontier.values())
    return TraceSet(frozenset(found), complete)


def _observable_moves(iolts: Iolts, states: frozenset) -> set:
    return {label for s in states for label, _ in iolts.successors(s) if iolts.is_observable(label)}


@dataclass
class IocoReport:
    conformant: bool
    violations: list[tuple[Trace, frozenset]]
    checked: int
    complete: bool

    def to_dict(self) -> dict:
        return {
            "conformant": self.conformant,
            "checked_traces": self.checked,
            "complete": self.complete,
            "violations": [
                {"trace": list(t), "unexpected_outputs": sorted(extra)} for t, extra in self.violations
            ],
        }


def ioco_check(aut: Iolts, spec: Iolts, max_depth: int) -> IocoReport:
    """Check ``out(aut after s) <= out(spec after s)`` for all spec traces s."""
    if not spec.is_deterministic():
        raise ValueError("ioco_check needs a deterministic specification")
    tset = traces(spec, max_depth)
    violations = []
    for tr in sorted(tset.traces, key=lambda t: (len(t), t)):
        extra = out(aut, after(aut, tr)) - out(spec, after(spec, tr))
        if extra:
            violations.append((tr, extra))
    return IocoReport(not violations, violations, len(tset.traces), tset.complete)


def passes(result) -> bool:
    """True iff the covered run of ``result`` never enters a FAIL state."""
    fails = {s for s, v in result.iolts.verdicts.items() if v is Verdict.FAIL}
    return not any(dst in fails for _, _, dst in result.path)


# ---------------------------------------------------------------------------
# Weak unsoundness

SIGMA_3 = 0.2496
P_3 = 0.9332
RARE_CONTEXT_ASSUMPTION = (
    "agents fall below the three-sigma level (sigma >= 0.2496) only in rare contexts"
)


@dataclass(frozen=True)
class SigmaTriple:
    sigma_nav: float
    sigma_readiness: float
    sigma_assert: float

    def __post_init__(self):
        for name in ("sigma_nav", "sigma_readiness", "sigma_assert"):
            v = getattr(self, name)
            if not 0.0 <= v <= 0.5:
                raise ValueError(f"{name}={v} outside [0, 0.5]")

    def as_dict(self) -> dict:
        return {"nav": self.sigma_nav, "readiness": self.sigma_readiness, "assert": self.sigma_assert}


@dataclass(frozen=True)
class WeakUnsoundnessReport:
    prop1_holds: bool
    prop1_failing_roles: tuple[str, ...]
    prop2_holds: bool
    prop2_reasons: tuple[str, ...]
    claim: str
    assumption: str = RARE_CONTEXT_ASSUMPTION

    def to_dict(self) -> dict:
        return {
            "prop1_condition_met": self.prop1_holds,
            "prop1_failing_roles": list(self.prop1_failing_roles),
            "prop2_condition_met": self.prop2_holds,
            "prop2_reasons": list(self.prop2_reasons),
            "claim": self.claim,
            "assumption": self.assumption,
        }


def classify_weak_unsoundness(tc: TestCase, sigmas: SigmaTriple, strictness) -> WeakUnsoundnessReport:
    """Check the two sigma conditions under which ``tc`` is weakly unsound.

    The first needs every agent below the three-sigma deviation; the second
    only needs the navigation agent there, provided every step is covered by
    a strict formula. Whether atomicity of the steps holds is not checked;
    it is part of the stated assumption.
    """
    failing = tuple(
        role for role, s in sigmas.as_dict().items() if not s < SIGMA_3
    )
    prop1 = not failing
    reasons = []
    if not all(strictness.readiness):
        bad = [i + 1 for i, ok in enumerate(strictness.readiness) if not ok]
        reasons.append(f"navigation steps {bad} have no strict form")
    if not all(strictness.assertions):
        bad = [tc.k + i + 1 for i, ok in enumerate(strictness.assertions) if not ok]
        reasons.append(f"assertion steps {bad} have no strict form")
    if not sigmas.sigma_nav < SIGMA_3:
        reasons.append(f"sigma_nav={sigmas.sigma_nav} is not below {SIGMA_3}")
    prop2 = not reasons
    if prop1 or prop2:
        claim = "weakly unsound under rare-context assumption"
    else:
        claim = "no guarantee"
    return WeakUnsoundnessReport(prop1, failing, prop2, tuple(reasons), claim)
