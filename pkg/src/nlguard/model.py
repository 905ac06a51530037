"""Test cases, steps, page snapshots and the suite file format."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Optional, Union


class SuiteSyntaxError(ValueError):
    """Raised when a suite document does not follow the line format."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class Verdict(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INC = "INC"


class ActionKind(str, enum.Enum):
    OPEN = "Open"
    CLICK = "Click"
    SELECT = "Select"
    CHECK = "Check"
    UNCHECK = "Uncheck"
    FILL = "Fill"


class AssertionKind(str, enum.Enum):
    IS_PRESENT = "IsPresent"
    IS_NOT_PRESENT = "IsNotPresent"
    IS_CHECKED = "IsChecked"
    IS_VISIBLE = "IsVisible"
    IS_PRESENT_COUNT = "IsPresentCount"
    TEXT_CONTAINS = "TextContains"


class CountMode(str, enum.Enum):
    EXACTLY = "Exactly"
    AT_LEAST = "AtLeast"


ELEMENT_TYPES = ("link", "button", "list", "checkbox", "input", "statictext", "image")

_VALUED = (ActionKind.SELECT, ActionKind.FILL, ActionKind.OPEN)
_URL_RE = re.compile(r"^[a-zA-Z][a-zA-Z0-9+.-]*://\S+$")


def is_url(text: str) -> bool:
    return bool(_URL_RE.match(text))


@dataclass(frozen=True)
class StrictAction:
    kind: ActionKind
    target: str
    value: Optional[str] = None

    def __post_init__(self):
        if self.kind in _VALUED and self.value is None:
            raise ValueError(f"{self.kind.value} requires a value")
        if self.kind not in _VALUED and self.value is not None:
            raise ValueError(f"{self.kind.value} takes no value")
        if self.kind is ActionKind.OPEN and not is_url(self.value):
            raise ValueError(f"Open requires a URL, got {self.value!r}")

    def key(self) -> tuple:
        """Normalized identity used to match actions against transitions."""
        value = self.value
        if value is not None and self.kind is not ActionKind.OPEN:
            value = value.casefold()
        return (self.kind, self.target.casefold().strip(), value)

    def label(self) -> str:
        """Canonical input label, e.g. ``?click(ALL NEWS)``."""
        name = self.kind.value.lower()
        if self.kind is ActionKind.OPEN:
            return f"?{name}({self.value})"
        if self.value is None:
            return f"?{name}({self.target})"
        return f"?{name}({self.target}={self.value})"


@dataclass(frozen=True)
class StrictAssertion:
    kind: AssertionKind
    target: str
    count: Optional[int] = None
    comparison: Optional[CountMode] = None

    def __post_init__(self):
        if (self.count is not None) != (self.kind is AssertionKind.IS_PRESENT_COUNT):
            raise ValueError("count is required by IsPresentCount and only by it")
        if self.count is not None and self.count < 0:
            raise ValueError("count must be non-negative")


@dataclass(frozen=True)
class NavAction:
    raw_text: str
    strict_form: Optional[StrictAction] = None

    def __post_init__(self):
        if not self.raw_text.strip():
            raise ValueError("navigation action text is empty")


@dataclass(frozen=True)
class Leaf:
    raw_text: str
    strict_form: Optional[StrictAssertion] = None

    def __post_init__(self):
        if not self.raw_text.strip():
            raise ValueError("assertion leaf text is empty")


@dataclass(frozen=True)
class And:
    children: tuple


@dataclass(frozen=True)
class Or:
    children: tuple


AssertionExpr = Union[Leaf, And, Or]


def leaves(expr: AssertionExpr) -> list[Leaf]:
    if isinstance(expr, Leaf):
        return [expr]
    out = []
    for child in expr.children:
        out.extend(leaves(child))
    return out


def render_expr(expr: AssertionExpr) -> str:
    """Inverse of the suite's AND/OR composition (no parentheses)."""
    if isinstance(expr, Leaf):
        return expr.raw_text
    if isinstance(expr, And):
        return " AND ".join(render_expr(c) for c in expr.children)
    return " OR ".join(render_expr(c) for c in expr.children)


def split_expr(text: str) -> AssertionExpr:
    """Build an AND/OR tree from step text. AND binds tighter than OR."""
    disjuncts = []
    for part in text.split(" OR "):
        conj = [Leaf(p.strip()) for p in part.split(" AND ")]
        disjuncts.append(conj[0] if len(conj) == 1 else And(tuple(conj)))
    return disjuncts[0] if len(disjuncts) == 1 else Or(tuple(disjuncts))


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # keep pytest from collecting it

    id: str
    nav_actions: tuple[NavAction, ...]
    assertions: tuple[AssertionExpr, ...]
    expectations: Optional[tuple[bool, ...]] = None
    navigation_only: bool = False

    @property
    def k(self) -> int:
        return len(self.nav_actions)

    @property
    def length(self) -> int:
        """Total step count, written l in the formulas."""
        return len(self.nav_actions) + len(self.assertions)


@dataclass(frozen=True)
class UiElement:
    id: str
    description: str
    elem_type: str
    checked: bool = False
    visible: bool = True
    options: tuple[str, ...] = ()
    value: str = ""

    def __post_init__(self):
        if self.elem_type not in ELEMENT_TYPES:
            raise ValueError(f"unknown element type {self.elem_type!r}")
        if self.options and self.elem_type != "list":
            raise ValueError("only list elements carry options")
        if self.checked and self.elem_type != "checkbox":
            raise ValueError("only checkboxes can be checked")


@dataclass(frozen=True)
class PageSnapshot:
    url: str
    elements: tuple[UiElement, ...] = ()

    def __post_init__(self):
        ids = [e.id for e in self.elements]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate element ids on page {self.url}")


BLANK_PAGE = PageSnapshot(url="about:blank")


# ---------------------------------------------------------------------------
# Suite documents

_EXPECT_RE = re.compile(r"\s+\|\s*expect=(true|false)\s*$")
_HEADER_RE = re.compile(r"^#\s*test\s+(\S+)(?:\s+(navigation-only))?\s*$")


@dataclass
class _Pending:
    id: str
    lineno: int
    navigation_only: bool
    navs: list = field(default_factory=list)
    asserts: list = field(default_factory=list)
    expects: list = field(default_factory=list)

    def close(self) -> TestCase:
        given = [e for e in self.expects if e is not None]
        if given and len(given) != len(self.expects):
            raise SuiteSyntaxError(self.lineno, f"test {self.id}: expect= must annotate every step or none")
        if not self.navs:
            raise SuiteSyntaxError(self.lineno, f"test {self.id}: no action lines")
        if not self.asserts and not self.navigation_only:
            raise SuiteSyntaxError(self.lineno, f"test {self.id}: no assert lines (flag it navigation-only)")
        return TestCase(
            id=self.id,
            nav_actions=tuple(self.navs),
            assertions=tuple(self.asserts),
            expectations=tuple(given) if given else None,
            navigation_only=self.navigation_only,
        )


def parse_test_suite(text: str) -> list[TestCase]:
    """Parse a suite document into test cases, keeping file order.

    Strict forms are left unset; :func:`nlguard.steps.compile_test_case`
    fills them in.
    """
    cases: list[TestCase] = []
    current: Optional[_Pending] = None
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        header = _HEADER_RE.match(stripped)
        if header:
            if current is not None:
                cases.append(current.close())
            tc_id = header.group(1)
            if tc_id in seen:
                raise SuiteSyntaxError(lineno, f"duplicate test id {tc_id!r}")
            seen.add(tc_id)
            current = _Pending(tc_id, lineno, header.group(2) is not None)
            continue
        if stripped.startswith("#"):
            continue
        role, sep, body = stripped.partition(":")
        role = role.strip()
        if not sep or role not in ("action", "assert"):
            raise SuiteSyntaxError(lineno, f"expected 'action:' or 'assert:', got {stripped!r}")
        if current is None:
            raise SuiteSyntaxError(lineno, "step outside of a '# test <id>' block")
        expect = None
        m = _EXPECT_RE.search(body)
        if m:
            expect = m.group(1) == "true"
            body = body[: m.start()]
        body = body.strip()
        if not body:
            raise SuiteSyntaxError(lineno, f"empty {role} text")
        if role == "action":
            if current.asserts:
                raise SuiteSyntaxError(lineno, "action after an assertion: actions must come first")
            current.navs.append(NavAction(body))
        else:
            try:
                current.asserts.append(split_expr(body))
            except ValueError as exc:
                raise SuiteSyntaxError(lineno, str(exc)) from None
        current.expects.append(expect)
    if current is not None:
        cases.append(current.close())
    return cases


def serialize_suite(cases: list[TestCase]) -> str:
    lines = []
    for tc in cases:
        flag = " navigation-only" if tc.navigation_only else ""
        lines.append(f"# test {tc.id}{flag}")
        steps = [("action", a.raw_text) for a in tc.nav_actions]
        steps += [("assert", render_expr(e)) for e in tc.assertions]
        for i, (role, body) in enumerate(steps):
            suffix = ""
            if tc.expectations is not None:
                suffix = f" | expect={'true' if tc.expectations[i] else 'false'}"
            lines.append(f"{role}: {body}{suffix}")
        lines.append("")
    return "\n".join(lines)


def validate_test_case(tc: TestCase) -> list[str]:
    """Return every invariant violation of ``tc``; empty when well formed."""
    problems = []
    if tc.k < 1:
        problems.append("k >= 1 violated: no navigation actions")
    if not tc.assertions and not tc.navigation_only:
        problems.append("l > k violated: no assertions and not flagged navigation-only")
    for i, nav in enumerate(tc.nav_actions):
        if not isinstance(nav, NavAction):
            problems.append(f"step {i + 1}: expected NavAction, got {type(nav).__name__}")
    for j, expr in enumerate(tc.assertions, start=tc.k + 1):
        if isinstance(expr, NavAction):
            problems.append(f"step {j}: navigation action after assertions")
        elif not isinstance(expr, (Leaf, And, Or)):
            problems.append(f"step {j}: not an assertion expression")
        elif any(not isinstance(c, (Leaf, And, Or)) for c in _nodes(expr)):
            problems.append(f"step {j}: malformed assertion tree")
    if tc.expectations is not None and len(tc.expectations) != tc.length:
        problems.append(
            f"expectations has {len(tc.expectations)} entries, expected l = {tc.length}"
        )
    return problems


def _nodes(expr):
    yield expr
    if isinstance(expr, (And, Or)):
        if not expr.children:
            yield None
        for c in expr.children:
            yield from _nodes(c)
