"""A deterministic simulated application under test.

The application is a finite graph of pages. Transitions are labelled with
strict actions; an action with no matching transition leaves the page as
it is. Sessions start on a blank page from which only ``Open`` does
anything.

Model file format, one directive per line (``#`` starts a comment)::

    page home url=https://www.uca.fr/en
    elem h1 type=link desc="European University"
    elem c1 type=checkbox desc="Newsletter" checked hidden
    elem l1 type=list desc="Language" options="English,French"
    elem i1 type=input desc="Search" value="ARTEMIS"
    trans home Click 'European University' -> eu
    oracle "the page has links" type=link
    oracle "the page has links with the term 'ARTEMIS'" type=link desc="ARTEMIS" min=1

``initial <page>`` picks the entry page (default: the first page).
``elem`` lines attach to the last ``page``. ``oracle`` lines give ground
truth for assertions that have no strict form: the assertion holds on a
page with at least ``min`` elements of the given type whose description
contains ``desc``.
"""

from __future__ import annotations

import enum
import hashlib
import re
import shlex
from dataclasses import dataclass, field, replace
from typing import Optional

from nlguard.iolts import Iolts
from nlguard.model import (
    BLANK_PAGE,
    ELEMENT_TYPES,
    ActionKind,
    PageSnapshot,
    StrictAction,
    UiElement,
)
from nlguard.steps import parse_nav_action, readiness_strict

BLANK_ID = "_blank"
START_STATE = "start"


class ModelError(ValueError):
    def __init__(self, message: str, lineno: Optional[int] = None):
        prefix = f"line {lineno}: " if lineno is not None else ""
        super().__init__(prefix + message)
        self.lineno = lineno


def page_fingerprint(page: PageSnapshot) -> str:
    h = hashlib.sha1(repr(page).encode("utf-8")).hexdigest()
    return h[:6]


def normalize_step_text(text: str) -> str:
    """Normalization used to look assertion text up in an oracle table."""
    t = text.strip().rstrip(".")
    t = re.sub(r"^assert\s+that\s+", "", t, flags=re.IGNORECASE)
    t = re.sub(r"[\"'‘’“”]", "", t)
    return " ".join(t.casefold().split())


@dataclass(frozen=True)
class OracleRule:
    text: str
    elem_type: Optional[str] = None
    contains: str = ""
    minimum: int = 1

    def holds(self, page: PageSnapshot) -> bool:
        needle = self.contains.casefold()
        hits = [
            e for e in page.elements
            if (self.elem_type is None or e.elem_type == self.elem_type)
            and needle in e.description.casefold()
        ]
        return len(hits) >= self.minimum


@dataclass(frozen=True)
class AutModel:
    pages: dict
    initial: str
    transitions: tuple[tuple[str, StrictAction, str], ...]
    oracles: tuple[OracleRule, ...] = ()

    def __post_init__(self):
        if self.initial not in self.pages:
            raise ModelError(f"initial page {self.initial!r} does not exist")
        seen = set()
        for src, action, dst in self.transitions:
            for end in (src, dst):
                if end not in self.pages:
                    raise ModelError(f"transition references unknown page {end!r}")
            if action.kind is ActionKind.OPEN:
                raise ModelError("Open transitions are implicit, one per page url")
            key = (src, action.key())
            if key in seen:
                raise ModelError(f"duplicate transition from {src!r} on {action.label()}")
            seen.add(key)

    def page(self, page_id: str) -> PageSnapshot:
        return BLANK_PAGE if page_id == BLANK_ID else self.pages[page_id]

    def output_label(self, page_id: str) -> str:
        """Output label of a page: its id plus a content fingerprint."""
        return f"!{page_id}#{page_fingerprint(self.page(page_id))}"

    def page_for_url(self, url: str) -> Optional[str]:
        for pid, page in self.pages.items():
            if page.url == url:
                return pid
        return None

    def target_of(self, page_id: str, action: StrictAction) -> Optional[str]:
        if action.kind is ActionKind.OPEN:
            return self.page_for_url(action.value)
        key = action.key()
        for src, a, dst in self.transitions:
            if src == page_id and a.key() == key:
                return dst
        return None

    def available(self, page_id: str) -> list[tuple[StrictAction, str]]:
        """Actions that change the page from ``page_id``, in file order."""
        if page_id == BLANK_ID:
            opened = {}
            for pid, page in self.pages.items():
                opened.setdefault(page.url, pid)
            return [(StrictAction(ActionKind.OPEN, "", url), pid) for url, pid in opened.items()]
        return [(a, dst) for src, a, dst in self.transitions if src == page_id and dst != page_id]

    def oracle_for(self, text: str) -> Optional[OracleRule]:
        key = normalize_step_text(text)
        for rule in self.oracles:
            if normalize_step_text(rule.text) == key:
                return rule
        return None


@dataclass
class SimSession:
    """Single-owner browsing state over an :class:`AutModel`."""

    model: AutModel
    current: str = BLANK_ID
    history: list = field(default_factory=list)

    @property
    def page(self) -> PageSnapshot:
        return self.model.page(self.current)

    def reset(self, page_id: str = BLANK_ID) -> None:
        self.current = page_id
        self.history.clear()


def apply_action(session: SimSession, action: StrictAction) -> PageSnapshot:
    target = session.model.target_of(session.current, action)
    if target is not None:
        session.current = target
    session.history.append((action, session.current))
    return session.page


# ---------------------------------------------------------------------------
# Loading

_ELEM_FLAGS = {"checked", "hidden"}


def _parse_attrs(tokens: list[str], lineno: int) -> tuple[dict, set]:
    attrs, flags = {}, set()
    for tok in tokens:
        if "=" in tok:
            k, v = tok.split("=", 1)
            attrs[k] = v
        elif tok in _ELEM_FLAGS:
            flags.add(tok)
        else:
            raise ModelError(f"unexpected token {tok!r}", lineno)
    return attrs, flags


def load_aut_model(doc: str) -> AutModel:
    pages: dict[str, list] = {}
    urls: dict[str, str] = {}
    order: list[str] = []
    raw_trans = []
    oracles = []
    current = None
    initial = None
    for lineno, line in enumerate(doc.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        directive = stripped.split(None, 1)[0]
        if directive == "trans":
            body = stripped[len("trans"):].strip()
            left, arrow, dst = body.rpartition("->")
            if not arrow:
                raise ModelError("trans line needs '-> <page>'", lineno)
            src, _, form = left.strip().partition(" ")
            action = parse_nav_action(form.strip())
            if action is None:
                raise ModelError(f"unrecognized action form {form.strip()!r}", lineno)
            raw_trans.append((src, action, dst.strip(), lineno))
            continue
        try:
            tokens = shlex.split(stripped)
        except ValueError as exc:
            raise ModelError(str(exc), lineno) from None
        if directive == "initial":
            if len(tokens) != 2 or initial is not None:
                raise ModelError("expected a single 'initial <page>' line", lineno)
            initial = (tokens[1], lineno)
        elif directive == "page":
            if len(tokens) < 2:
                raise ModelError("page line needs an id", lineno)
            attrs, flags = _parse_attrs(tokens[2:], lineno)
            if flags or set(attrs) - {"url"} or "url" not in attrs:
                raise ModelError("page line takes exactly url=<url>", lineno)
            pid = tokens[1]
            if pid in pages or pid == BLANK_ID:
                raise ModelError(f"duplicate page id {pid!r}", lineno)
            pages[pid] = []
            urls[pid] = attrs["url"]
            order.append(pid)
            current = pid
        elif directive == "elem":
            if current is None:
                raise ModelError("elem line before any page", lineno)
            if len(tokens) < 2:
                raise ModelError("elem line needs an id", lineno)
            attrs, flags = _parse_attrs(tokens[2:], lineno)
            unknown = set(attrs) - {"type", "desc", "options", "value"}
            if unknown:
                raise ModelError(f"unknown element attribute(s) {sorted(unknown)}", lineno)
            etype = attrs.get("type")
            if etype not in ELEMENT_TYPES:
                raise ModelError(f"unknown element type {etype!r}", lineno)
            options = tuple(o.strip() for o in attrs["options"].split(",")) if "options" in attrs else ()
            try:
                elem = UiElement(
                    id=tokens[1],
                    description=attrs.get("desc", ""),
                    elem_type=etype,
                    checked="checked" in flags,
                    visible="hidden" not in flags,
                    options=options,
                    value=attrs.get("value", ""),
                )
            except ValueError as exc:
                raise ModelError(str(exc), lineno) from None
            pages[current].append(elem)
        elif directive == "oracle":
            if len(tokens) < 2:
                raise ModelError("oracle line needs the assertion text", lineno)
            attrs, flags = _parse_attrs(tokens[2:], lineno)
            if flags or set(attrs) - {"type", "desc", "min"}:
                raise ModelError("oracle line takes type=, desc= and min=", lineno)
            etype = attrs.get("type")
            if etype is not None and etype not in ELEMENT_TYPES:
                raise ModelError(f"unknown element type {etype!r}", lineno)
            oracles.append(OracleRule(tokens[1], etype, attrs.get("desc", ""), int(attrs.get("min", 1))))
        else:
            raise ModelError(f"unknown directive {directive!r}", lineno)

    if not order:
        raise ModelError("model has no pages")
    snapshots = {}
    for pid in order:
        try:
            snapshots[pid] = PageSnapshot(urls[pid], tuple(pages[pid]))
        except ValueError as exc:
            raise ModelError(str(exc)) from None
    transitions = []
    seen = set()
    for src, action, dst, lineno in raw_trans:
        for end in (src, dst):
            if end not in snapshots:
                raise ModelError(f"dangling page reference {end!r}", lineno)
        if (src, action.key()) in seen:
            raise ModelError(f"duplicate transition from {src!r} on {action.label()}", lineno)
        seen.add((src, action.key()))
        transitions.append((src, action, dst))
    if initial is not None and initial[0] not in snapshots:
        raise ModelError(f"dangling page reference {initial[0]!r} for initial page", initial[1])
    start = initial[0] if initial is not None else order[0]
    return AutModel(snapshots, start, tuple(transitions), tuple(oracles))


def dump_aut_model(model: AutModel) -> str:
    lines = [f"initial {model.initial}"]
    for pid, page in model.pages.items():
        lines.append(f"page {pid} url={page.url}")
        for e in page.elements:
            parts = [f"elem {e.id} type={e.elem_type}", f"desc={shlex.quote(e.description)}"]
            if e.checked:
                parts.append("checked")
            if not e.visible:
                parts.append("hidden")
            if e.options:
                parts.append(f"options={shlex.quote(','.join(e.options))}")
            if e.value:
                parts.append(f"value={shlex.quote(e.value)}")
            lines.append(" ".join(parts))
    for src, a, dst in model.transitions:
        lines.append(f"trans {src} {action_form(a)} -> {dst}")
    for r in model.oracles:
        parts = [f"oracle {shlex.quote(r.text)}"]
        if r.elem_type:
            parts.append(f"type={r.elem_type}")
        if r.contains:
            parts.append(f"desc={shlex.quote(r.contains)}")
        if r.minimum != 1:
            parts.append(f"min={r.minimum}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def action_form(a: StrictAction) -> str:
    """Render a strict action back into its canonical step text."""
    k = a.kind
    if k is ActionKind.OPEN:
        return f"Open {a.value}"
    if k is ActionKind.CLICK:
        return f"Click '{a.target}'"
    if k is ActionKind.SELECT:
        return f"Select '{a.value}' in '{a.target}'"
    if k is ActionKind.FILL:
        return f"Fill '{a.target}' with '{a.value}'"
    return f"{k.value} '{a.target}'"


# ---------------------------------------------------------------------------
# Specification


def spec_of(model: AutModel) -> Iolts:
    """Specification IOLTS: inputs ``?action``, outputs ``!page#fingerprint``.

    The blank start state can only open the initial page. Every transition
    ``p --a--> p'`` becomes ``p --?a--> fresh --!p'--> p'``.
    """
    transitions = []
    n = 0

    def chain(src, action, dst):
        nonlocal n
        n += 1
        mid = f"{src}~{n}"
        transitions.append((src, action.label(), mid))
        transitions.append((mid, model.output_label(dst), dst))

    home = model.pages[model.initial]
    chain(START_STATE, StrictAction(ActionKind.OPEN, "", home.url), model.initial)
    for src, action, dst in model.transitions:
        chain(src, action, dst)
    return Iolts.build(START_STATE, transitions, states=[START_STATE, *model.pages])


# ---------------------------------------------------------------------------
# Mutation


class MutationKind(str, enum.Enum):
    REMOVE_ELEMENT = "RemoveElement"
    REDIRECT_TRANSITION = "RedirectTransition"
    DROP_TRANSITION = "DropTransition"
    ALTER_ELEMENT_STATE = "AlterElementState"


@dataclass(frozen=True)
class Mutation:
    kind: MutationKind
    page: str
    element: Optional[str] = None
    action: Optional[str] = None  # action form text, as in trans lines
    new_target: Optional[str] = None
    checked: Optional[bool] = None
    visible: Optional[bool] = None

    @classmethod
    def remove_element(cls, page, element):
        return cls(MutationKind.REMOVE_ELEMENT, page, element=element)

    @classmethod
    def redirect(cls, page, action, new_target):
        return cls(MutationKind.REDIRECT_TRANSITION, page, action=action, new_target=new_target)

    @classmethod
    def drop(cls, page, action):
        return cls(MutationKind.DROP_TRANSITION, page, action=action)

    @classmethod
    def alter(cls, page, element, checked=None, visible=None):
        return cls(MutationKind.ALTER_ELEMENT_STATE, page, element=element, checked=checked, visible=visible)

    def describe(self) -> str:
        bits = [self.kind.value, self.page]
        for name in ("element", "action", "new_target", "checked", "visible"):
            v = getattr(self, name)
            if v is not None:
                bits.append(f"{name}={v}")
        return " ".join(bits)


def _find_transition(model: AutModel, page: str, form: str) -> int:
    action = parse_nav_action(form)
    if action is None:
        raise ModelError(f"unrecognized action form {form!r}")
    for i, (src, a, _) in enumerate(model.transitions):
        if src == page and a.key() == action.key():
            return i
    raise ModelError(f"no transition from {page!r} on {action.label()}")


def mutate(model: AutModel, m: Mutation) -> AutModel:
    """Return a mutant of ``model``; ``model`` itself is left untouched."""
    if m.page not in model.pages:
        raise ModelError(f"mutation references unknown page {m.page!r}")
    pages = dict(model.pages)
    transitions = list(model.transitions)
    if m.kind in (MutationKind.REMOVE_ELEMENT, MutationKind.ALTER_ELEMENT_STATE):
        page = pages[m.page]
        ids = [e.id for e in page.elements]
        if m.element not in ids:
            raise ModelError(f"no element {m.element!r} on page {m.page!r}")
        if m.kind is MutationKind.REMOVE_ELEMENT:
            new_page = replace(page, elements=tuple(e for e in page.elements if e.id != m.element))
            # Drop the transitions the removed element was carrying.
            transitions = [
                (src, a, dst) for src, a, dst in transitions
                if src != m.page
                or readiness_strict(a, new_page).outcome
                or not readiness_strict(a, page).outcome
            ]
        else:
            elems = []
            for e in page.elements:
                if e.id == m.element:
                    changes = {}
                    if m.checked is not None:
                        changes["checked"] = m.checked
                    if m.visible is not None:
                        changes["visible"] = m.visible
                    try:
                        e = replace(e, **changes)
                    except ValueError as exc:
                        raise ModelError(str(exc)) from None
                elems.append(e)
            new_page = replace(page, elements=tuple(elems))
        pages[m.page] = new_page
    elif m.kind is MutationKind.REDIRECT_TRANSITION:
        if m.new_target not in pages:
            raise ModelError(f"redirect to unknown page {m.new_target!r}")
        i = _find_transition(model, m.page, m.action)
        src, a, _ = transitions[i]
        transitions[i] = (src, a, m.new_target)
    elif m.kind is MutationKind.DROP_TRANSITION:
        del transitions[_find_transition(model, m.page, m.action)]
    return AutModel(pages, model.initial, tuple(transitions), model.oracles)
