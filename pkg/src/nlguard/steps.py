"""Strict step forms: recognition, and evaluation against a page.

Twelve forms are recognized, six navigation actions and six assertions.
Form numbers are stable and reported in :class:`StrictEvalResult`:

====  ==============  ================================================
form  kind            template
====  ==============  ================================================
1     Open            ``Open [the website|page|url|site] <url>``
2     Click           ``Click [on] [the] [link|button] 'x'``
3     Select          ``Select 'v' in|from [the] [list] 'x'``
4     Check           ``Check [the] [checkbox] 'x'``
5     Uncheck         ``Uncheck [the] [checkbox] 'x'``
6     Fill            ``Fill [in] [the] [field|input] 'x' with 'v'``
7     IsPresent       ``[Assert that] [the term|text|element] 'x' is present``
8     IsNotPresent    ``[Assert that] ... 'x' is not present``
9     IsChecked       ``[Assert that] ... 'x' is checked``
10    IsVisible       ``[Assert that] ... 'x' is visible``
11    IsPresentCount  ``[Assert that] ... 'x' is present [exactly|at least] N times``
12    TextContains    ``[Assert that] the page contains [the text|term] 'x'``
====  ==============  ================================================

Templates are case-insensitive; quotes may be single or double and a
trailing period is ignored. Anything else is unrecognized and left to an
agent.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Optional

from nlguard.model import (
    ActionKind,
    And,
    AssertionExpr,
    AssertionKind,
    CountMode,
    Leaf,
    NavAction,
    Or,
    PageSnapshot,
    StrictAction,
    StrictAssertion,
    TestCase,
    UiElement,
    is_url,
    leaves,
    split_expr,
)


class Matching(str, enum.Enum):
    SUBSTRING = "substring"
    EXACT = "exact"


DEFAULT_MATCHING = Matching.SUBSTRING
DEFAULT_COUNT_MODE = CountMode.AT_LEAST

ACTION_FORMS = {
    ActionKind.OPEN: 1,
    ActionKind.CLICK: 2,
    ActionKind.SELECT: 3,
    ActionKind.CHECK: 4,
    ActionKind.UNCHECK: 5,
    ActionKind.FILL: 6,
}
ASSERTION_FORMS = {
    AssertionKind.IS_PRESENT: 7,
    AssertionKind.IS_NOT_PRESENT: 8,
    AssertionKind.IS_CHECKED: 9,
    AssertionKind.IS_VISIBLE: 10,
    AssertionKind.IS_PRESENT_COUNT: 11,
    AssertionKind.TEXT_CONTAINS: 12,
}


def _q(name: str) -> str:
    return rf"""(?:'(?P<{name}1>[^']+)'|"(?P<{name}2>[^"]+)"|‘(?P<{name}3>[^’]+)’|“(?P<{name}4>[^”]+)”)"""


_NOUN = r"(?:the\s+(?:term|text|element|link|button)\s+)?"
_ACTION_PATTERNS = [
    (ActionKind.OPEN, rf"(?:open|go\s+to|navigate\s+to)(?:\s+the\s+(?:website|web\s+site|page|url|site))?\s+(?:{_q('v')}|(?P<bare>\S+))"),
    (ActionKind.CLICK, rf"click(?:\s+on)?(?:\s+the)?(?:\s+(?:link|button))?\s+{_q('x')}(?:\s+(?:link|button))?"),
    (ActionKind.SELECT, rf"select\s+{_q('v')}\s+(?:in|from)(?:\s+the)?(?:\s+list)?\s+{_q('x')}(?:\s+list)?"),
    (ActionKind.CHECK, rf"check(?:\s+the)?(?:\s+checkbox)?\s+{_q('x')}(?:\s+checkbox)?"),
    (ActionKind.UNCHECK, rf"uncheck(?:\s+the)?(?:\s+checkbox)?\s+{_q('x')}(?:\s+checkbox)?"),
    (ActionKind.FILL, rf"fill(?:\s+in)?(?:\s+the)?(?:\s+(?:field|input))?\s+{_q('x')}\s+with\s+{_q('v')}"),
]
_ASSERTION_PATTERNS = [
    (AssertionKind.IS_PRESENT_COUNT, rf"{_NOUN}{_q('x')}\s+is\s+present\s+(?:(?P<mode>exactly|at\s+least)\s+)?(?P<n>\d+)\s+times?"),
    (AssertionKind.IS_NOT_PRESENT, rf"{_NOUN}{_q('x')}\s+is\s+not\s+present"),
    (AssertionKind.IS_PRESENT, rf"{_NOUN}{_q('x')}\s+is\s+present"),
    (AssertionKind.IS_CHECKED, rf"{_NOUN}{_q('x')}\s+is\s+checked"),
    (AssertionKind.IS_VISIBLE, rf"{_NOUN}{_q('x')}\s+is\s+visible"),
    (AssertionKind.TEXT_CONTAINS, rf"the\s+page\s+contains(?:\s+the\s+(?:text|term))?\s+{_q('x')}"),
]
_ASSERT_PREFIX = r"(?:assert\s+that\s+)?"

_ACTION_RES = [(k, re.compile(rf"^{p}\s*\.?$", re.IGNORECASE)) for k, p in _ACTION_PATTERNS]
_ASSERTION_RES = [
    (k, re.compile(rf"^{_ASSERT_PREFIX}{p}\s*\.?$", re.IGNORECASE)) for k, p in _ASSERTION_PATTERNS
]


def _group(m: re.Match, name: str) -> Optional[str]:
    for i in range(1, 5):
        try:
            v = m.group(f"{name}{i}")
        except IndexError:
            return None
        if v is not None:
            return v
    return None


@lru_cache(maxsize=4096)
def parse_nav_action(raw: str) -> Optional[StrictAction]:
    """Recognize one of the six action forms; ``None`` when unrecognized."""
    text = raw.strip()
    for kind, rx in _ACTION_RES:
        m = rx.match(text)
        if not m:
            continue
        if kind is ActionKind.OPEN:
            url = _group(m, "v") or m.group("bare")
            if url is None or not is_url(url):
                return None
            return StrictAction(kind, "", url)
        target = _group(m, "x")
        value = _group(m, "v") if kind in (ActionKind.SELECT, ActionKind.FILL) else None
        return StrictAction(kind, target, value)
    return None


@lru_cache(maxsize=4096)
def parse_assertion_leaf(raw: str) -> Optional[StrictAssertion]:
    text = raw.strip()
    for kind, rx in _ASSERTION_RES:
        m = rx.match(text)
        if not m:
            continue
        target = _group(m, "x")
        if kind is AssertionKind.IS_PRESENT_COUNT:
            mode = m.group("mode")
            comparison = None
            if mode is not None:
                comparison = CountMode.EXACTLY if mode.lower() == "exactly" else CountMode.AT_LEAST
            return StrictAssertion(kind, target, count=int(m.group("n")), comparison=comparison)
        return StrictAssertion(kind, target)
    return None


def annotate_expr(expr: AssertionExpr) -> AssertionExpr:
    """Return ``expr`` with each leaf's strict form filled in."""
    if isinstance(expr, Leaf):
        return replace(expr, strict_form=parse_assertion_leaf(expr.raw_text))
    return type(expr)(tuple(annotate_expr(c) for c in expr.children))


def parse_assertion(raw: str) -> AssertionExpr:
    return annotate_expr(split_expr(raw.strip()))


def compile_test_case(tc: TestCase) -> TestCase:
    navs = tuple(replace(a, strict_form=parse_nav_action(a.raw_text)) for a in tc.nav_actions)
    asserts = tuple(annotate_expr(e) for e in tc.assertions)
    return replace(tc, nav_actions=navs, assertions=asserts)


def strict_action_of(nav: NavAction) -> Optional[StrictAction]:
    return nav.strict_form if nav.strict_form is not None else parse_nav_action(nav.raw_text)


def _strict_leaf(leaf: Leaf) -> Optional[StrictAssertion]:
    return leaf.strict_form if leaf.strict_form is not None else parse_assertion_leaf(leaf.raw_text)


def expr_is_strict(expr: AssertionExpr) -> bool:
    return all(_strict_leaf(leaf) is not None for leaf in leaves(expr))


@dataclass(frozen=True)
class Strictness:
    """Which steps a strict formula can evaluate, decided by parsing alone."""

    readiness: tuple[bool, ...]
    assertions: tuple[bool, ...]

    @property
    def all_strict(self) -> bool:
        return all(self.readiness) and all(self.assertions)


def strictness_of(tc: TestCase) -> Strictness:
    return Strictness(
        readiness=tuple(strict_action_of(a) is not None for a in tc.nav_actions),
        assertions=tuple(expr_is_strict(e) for e in tc.assertions),
    )


# ---------------------------------------------------------------------------
# Evaluation


@dataclass(frozen=True)
class StrictEvalResult:
    """Three-valued strict outcome. ``outcome`` is None when no form applies."""

    outcome: Optional[bool]
    matched_forms: tuple[int, ...] = ()
    explanation: str = ""

    def __post_init__(self):
        if (self.outcome is None) != (not self.matched_forms):
            raise ValueError("matched forms must be set exactly when the result applies")

    @property
    def applicable(self) -> bool:
        return self.outcome is not None

    @property
    def matched_form(self) -> Optional[int]:
        return self.matched_forms[0] if self.matched_forms else None


NOT_APPLICABLE = StrictEvalResult(None, (), "no strict form recognized")


def describes(element: UiElement, target: str, matching: Matching = DEFAULT_MATCHING) -> bool:
    desc, tgt = element.description.casefold().strip(), target.casefold().strip()
    if matching is Matching.EXACT:
        return desc == tgt
    return tgt in desc


def find(page: PageSnapshot, target: str, matching: Matching = DEFAULT_MATCHING, types=None) -> list[UiElement]:
    return [
        e for e in page.elements
        if describes(e, target, matching) and (types is None or e.elem_type in types)
    ]


def readiness_strict(
    action: Optional[StrictAction],
    page: PageSnapshot,
    matching: Matching = DEFAULT_MATCHING,
) -> StrictEvalResult:
    if action is None:
        return NOT_APPLICABLE
    form = (ACTION_FORMS[action.kind],)
    kind = action.kind
    if kind is ActionKind.OPEN:
        return StrictEvalResult(True, form, "open is always possible")
    if kind is ActionKind.CLICK:
        hits = find(page, action.target, matching, ("link", "button"))
        return StrictEvalResult(bool(hits), form, f"{len(hits)} clickable match(es) for {action.target!r}")
    if kind is ActionKind.SELECT:
        wanted = action.value.casefold()
        hits = [e for e in find(page, action.target, matching, ("list",))
                if any(o.casefold() == wanted for o in e.options)]
        return StrictEvalResult(bool(hits), form, f"{len(hits)} list(s) offering {action.value!r}")
    if kind is ActionKind.CHECK:
        hits = [e for e in find(page, action.target, matching, ("checkbox",)) if not e.checked]
        return StrictEvalResult(bool(hits), form, f"{len(hits)} unchecked checkbox(es)")
    if kind is ActionKind.UNCHECK:
        hits = [e for e in find(page, action.target, matching, ("checkbox",)) if e.checked]
        return StrictEvalResult(bool(hits), form, f"{len(hits)} checked checkbox(es)")
    hits = find(page, action.target, matching, ("input",))
    return StrictEvalResult(bool(hits), form, f"{len(hits)} input(s) for {action.target!r}")


def eval_leaf(
    a: StrictAssertion,
    page: PageSnapshot,
    matching: Matching = DEFAULT_MATCHING,
    count_mode: CountMode = DEFAULT_COUNT_MODE,
) -> bool:
    kind = a.kind
    if kind is AssertionKind.IS_PRESENT:
        return bool(find(page, a.target, matching))
    if kind is AssertionKind.IS_NOT_PRESENT:
        return not find(page, a.target, matching)
    if kind is AssertionKind.IS_CHECKED:
        return any(e.checked for e in find(page, a.target, matching))
    if kind is AssertionKind.IS_VISIBLE:
        return any(e.visible for e in find(page, a.target, matching))
    if kind is AssertionKind.IS_PRESENT_COUNT:
        n = len(find(page, a.target, matching))
        mode = a.comparison or count_mode
        return n == a.count if mode is CountMode.EXACTLY else n >= a.count
    needle = a.target.casefold()
    return any(needle in e.description.casefold() for e in page.elements)


def assert_strict(
    expr: AssertionExpr,
    page: PageSnapshot,
    matching: Matching = DEFAULT_MATCHING,
    count_mode: CountMode = DEFAULT_COUNT_MODE,
) -> StrictEvalResult:
    # One unrecognized leaf sends the whole expression to the agent.
    strict = [(leaf, _strict_leaf(leaf)) for leaf in leaves(expr)]
    missing = [leaf.raw_text for leaf, s in strict if s is None]
    if missing:
        return StrictEvalResult(None, (), f"unrecognized leaf: {missing[0]!r}")

    def fold(node) -> bool:
        if isinstance(node, Leaf):
            return eval_leaf(_strict_leaf(node), page, matching, count_mode)
        values = [fold(c) for c in node.children]
        return all(values) if isinstance(node, And) else any(values)

    value = fold(expr)
    forms = tuple(ASSERTION_FORMS[s.kind] for _, s in strict)
    return StrictEvalResult(value, forms, f"{len(strict)} leaf(s) evaluated")
