"""Recognizers for the runs each agent behaviour regime can produce.

Regime ``A``: agents are correct. Regime ``B``: agents may return errors.
Regime ``C``: agents may return wrong answers. For a conformant AUT and a
test case taken from its specification, each regime admits a known set
of runs; :func:`classify_run` names the case a run belongs to, or returns
``None`` when the run lies outside the regime's set.

Case names:

``A.pass``
    every block matches the specification, every assertion holds.
``B.nav-no-update``
    the navigation agent errs, the GUI does not change, observe fails.
``B.nav-wrong-gui-not-ready``
    a wrong GUI is caught by readiness.
``B.readiness-error``
    the readiness agent errs on the expected GUI.
``B.assert-error``
    the assertion agent errs.
``C.readiness-wrong``
    readiness wrongly rejects the expected GUI.
``C.assert-wrong``
    an agent wrongly rejects an assertion that holds on the expected GUI.
``C.nav-no-update``
    the navigation agent claims success but nothing changed.
``C.nav-wrong-not-ready``
    a wrong GUI is caught by readiness.
``C.nav-wrong-masked``
    a wrong GUI passes an agent readiness check that should have failed.
``C.nav-wrong-ready``
    a wrong GUI passes readiness without an agent (strict formula, or the
    last action where readiness is vacuous).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from nlguard.aut import BLANK_ID, AutModel
from nlguard.consistency import expected_contexts
from nlguard.executor import EvalPath, ExecutionResult, StepKind, check_shape
from nlguard.model import TestCase, Verdict

REGIMES = ("A", "B", "C")
MASKED = "C.nav-wrong-masked"


@dataclass(frozen=True)
class _Block:
    output: str
    observe: Optional[bool]
    readiness: Optional[bool]
    readiness_path: Optional[EvalPath]


def _parse(result: ExecutionResult):
    labels = list(result.trace)
    ready_paths = {r.step: r.path for r in result.step_log if r.kind is StepKind.READINESS}
    blocks, asserts = [], []
    i = 0
    while i < len(labels) and labels[i].startswith("?"):
        out = labels[i + 1]
        obs = rdy = None
        j = i + 2
        if j < len(labels) and labels[j] in ("observe", "not observe"):
            obs = labels[j] == "observe"
            j += 1
        if obs and j < len(labels) and labels[j] in ("readiness", "not readiness"):
            rdy = labels[j] == "readiness"
            j += 1
        blocks.append(_Block(out, obs, rdy, ready_paths.get(len(blocks) + 1)))
        i = j
    assert_paths = {r.step: r.path for r in result.step_log if r.kind is StepKind.ASSERTION}
    for label in labels[i:]:
        if label == "error":
            asserts.append(("error", None))
        elif label.startswith("not A"):
            asserts.append((False, assert_paths.get(int(label[5:]))))
        elif label.startswith("A"):
            asserts.append((True, assert_paths.get(int(label[1:]))))
    return blocks, asserts


def expected_outputs(tc: TestCase, model: AutModel) -> list[str]:
    return [model.output_label(p) for p in expected_contexts(tc, model)]


def _well_formed(result, tc, model, labels) -> bool:
    if check_shape(result, tc):
        return False
    allowed = {model.output_label(p) for p in (BLANK_ID, *model.pages)}
    prev = labels[0]
    blocks, _ = _parse(result)
    for b in blocks:
        if b.output not in allowed:
            return False  # fabricated GUI
        if b.observe and b.output == prev:
            return False  # observe passed without a GUI change
        prev = b.output
    return True


def classify_run(regime: str, result: ExecutionResult, tc: TestCase, model: AutModel) -> Optional[str]:
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    labels = expected_outputs(tc, model)
    if not _well_formed(result, tc, model, labels):
        return None
    blocks, asserts = _parse(result)
    expected = labels[1:]
    verdict = result.verdict

    dev = None
    for idx, b in enumerate(blocks):
        if b.output != expected[idx] or not b.observe or not b.readiness:
            dev = idx
            break

    if dev is None:
        if len(blocks) != tc.k:
            return None
        values = [v for v, _ in asserts]
        if verdict is Verdict.PASS and all(v is True for v in values):
            return "A.pass"
        if regime == "A":
            return None
        last, path = asserts[-1]
        if regime == "B" and last == "error" and verdict is Verdict.INC:
            return "B.assert-error"
        if regime == "C" and last is False and path is EvalPath.AGENT and verdict is Verdict.FAIL:
            return "C.assert-wrong"
        return None

    if regime == "A":
        return None
    b = blocks[dev]
    prev = labels[dev]
    on_track = b.output == expected[dev]
    last_block = dev == len(blocks) - 1
    if regime == "B":
        if not last_block or verdict is not Verdict.INC:
            return None
        if b.observe is False and b.output == prev:
            return "B.nav-no-update"
        if b.observe and b.readiness is False:
            return "B.readiness-error" if on_track else "B.nav-wrong-gui-not-ready"
        return None

    # regime C
    if on_track:
        if b.observe and b.readiness is False and last_block and verdict is Verdict.INC:
            return "C.readiness-wrong"
        return None
    if b.observe is False:
        return "C.nav-no-update" if last_block and verdict is Verdict.INC else None
    if b.readiness is False:
        return "C.nav-wrong-not-ready" if last_block and verdict is Verdict.INC else None
    if b.readiness_path is EvalPath.AGENT:
        return MASKED
    return "C.nav-wrong-ready"
