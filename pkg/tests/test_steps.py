import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlguard.model import (
    ActionKind,
    And,
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
)
from nlguard.steps import (
    ASSERTION_FORMS,
    ACTION_FORMS,
    Matching,
    assert_strict,
    compile_test_case,
    parse_assertion,
    parse_assertion_leaf,
    parse_nav_action,
    readiness_strict,
    strictness_of,
)

# One instance per recognized form, numbered as reported in matched_forms.
CORPUS = {
    1: ("Open the website https://www.uca.fr/en", StrictAction(ActionKind.OPEN, "", "https://www.uca.fr/en")),
    2: ("Click on 'European University'", StrictAction(ActionKind.CLICK, "European University")),
    3: ("Select 'French' in the list 'Language'", StrictAction(ActionKind.SELECT, "Language", "French")),
    4: ("Check the checkbox 'news'", StrictAction(ActionKind.CHECK, "news")),
    5: ("Uncheck 'news'", StrictAction(ActionKind.UNCHECK, "news")),
    6: ("Fill 'search' with 'ARTEMIS'", StrictAction(ActionKind.FILL, "search", "ARTEMIS")),
    7: ("'Sign in' is present", StrictAssertion(AssertionKind.IS_PRESENT, "Sign in")),
    8: ("Assert that 'Sign in' is not present", StrictAssertion(AssertionKind.IS_NOT_PRESENT, "Sign in")),
    9: ("'news' is checked", StrictAssertion(AssertionKind.IS_CHECKED, "news")),
    10: ("the element 'banner' is visible", StrictAssertion(AssertionKind.IS_VISIBLE, "banner")),
    11: ("'Course' is present 4 times", StrictAssertion(AssertionKind.IS_PRESENT_COUNT, "Course", count=4)),
    12: ("the page contains the text 'Welcome'", StrictAssertion(AssertionKind.TEXT_CONTAINS, "Welcome")),
}


def test_exactly_twelve_forms_are_numbered():
    assert sorted([*ACTION_FORMS.values(), *ASSERTION_FORMS.values()]) == list(range(1, 13))


@pytest.mark.parametrize("form", sorted(CORPUS))
def test_corpus_instance_parses_to_its_form(form):
    text, expected = CORPUS[form]
    parsed = parse_nav_action(text) if form <= 6 else parse_assertion_leaf(text)
    assert parsed == expected


@pytest.mark.parametrize(
    "text",
    ["Wave at the screen", "Click European University", "Open the website", "Open ftp", "the page has links",
     "'x' is present sometimes", ""],
)
def test_text_outside_the_grammar_is_unrecognized(text):
    assert parse_nav_action(text) is None
    assert parse_assertion_leaf(text) is None


def test_templates_tolerate_case_quotes_and_period():
    assert parse_nav_action('CLICK ON THE LINK "ALL NEWS".') == StrictAction(ActionKind.CLICK, "ALL NEWS")
    assert parse_nav_action("Click on ‘European University’") == StrictAction(ActionKind.CLICK, "European University")
    assert parse_nav_action("Open 'https://shop.example/login'").value == "https://shop.example/login"


def test_count_comparison_is_recorded_only_when_written():
    assert parse_assertion_leaf("'Course' is present 4 times").comparison is None
    assert parse_assertion_leaf("'Course' is present exactly 4 times").comparison is CountMode.EXACTLY
    assert parse_assertion_leaf("'Course' is present at least 1 time").comparison is CountMode.AT_LEAST


def test_composite_parsing_classifies_each_leaf():
    expr = parse_assertion("'a' is present AND 'b' is visible")
    assert isinstance(expr, And)
    assert [c.strict_form.kind for c in expr.children] == [AssertionKind.IS_PRESENT, AssertionKind.IS_VISIBLE]
    leaf = parse_assertion("the page has links")
    assert isinstance(leaf, Leaf) and leaf.strict_form is None


def _page(*elems):
    return PageSnapshot("https://x", tuple(elems))


LINK = UiElement("e1", "Sign in", "link")
BOX_ON = UiElement("c1", "news", "checkbox", checked=True)
BOX_OFF = UiElement("c2", "offers", "checkbox")
LIST = UiElement("l1", "Language", "list", options=("English", "French"))
INPUT = UiElement("i1", "search", "input")
TEXT = UiElement("t1", "Sign in to continue", "statictext")


@pytest.mark.parametrize(
    "action, page, expected",
    [
        (StrictAction(ActionKind.CLICK, "Sign in"), _page(LINK), True),
        (StrictAction(ActionKind.CLICK, "Sign in"), _page(TEXT), False),
        (StrictAction(ActionKind.CLICK, "Sign in"), _page(), False),
        (StrictAction(ActionKind.CHECK, "news"), _page(BOX_ON), False),
        (StrictAction(ActionKind.CHECK, "offers"), _page(BOX_OFF), True),
        (StrictAction(ActionKind.UNCHECK, "news"), _page(BOX_ON), True),
        (StrictAction(ActionKind.UNCHECK, "offers"), _page(BOX_OFF), False),
        (StrictAction(ActionKind.SELECT, "Language", "french"), _page(LIST), True),
        (StrictAction(ActionKind.SELECT, "Language", "German"), _page(LIST), False),
        (StrictAction(ActionKind.FILL, "search", "x"), _page(INPUT), True),
        (StrictAction(ActionKind.FILL, "search", "x"), _page(TEXT), False),
        (StrictAction(ActionKind.OPEN, "", "https://a.b"), _page(), True),
    ],
)
def test_readiness_formulas(action, page, expected):
    res = readiness_strict(action, page)
    assert res.outcome is expected
    assert res.matched_form == ACTION_FORMS[action.kind]


def test_readiness_of_unrecognized_action_is_not_applicable():
    res = readiness_strict(None, _page(LINK))
    assert not res.applicable and res.matched_forms == ()


def test_substring_versus_exact_matching():
    page = _page(UiElement("a", "ARTEMIS kickoff", "link"))
    expr = parse_assertion("'ARTEMIS' is present")
    assert assert_strict(expr, page).outcome is True
    assert assert_strict(expr, page, Matching.EXACT).outcome is False


def test_assertion_formulas_on_a_page():
    page = _page(
        LINK, BOX_ON, TEXT,
        UiElement("b", "banner", "image", visible=False),
        *[UiElement(f"k{i}", f"Course {i}", "link") for i in range(4)],
    )
    cases = {
        "'x' is not present": True,
        "'Sign in' is not present": False,
        "'news' is checked": True,
        "'Sign in' is checked": False,
        "'banner' is visible": False,
        "'banner' is present": True,
        "'Course' is present 4 times": True,
        "'Course' is present 3 times": True,
        "'Course' is present exactly 3 times": False,
        "the page contains 'to continue'": True,
        "'banner' is present AND 'news' is checked": True,
        "'Sign in' is present AND 'Sign in' is checked": False,
        "'zzz' is present OR 'news' is checked": True,
    }
    for text, expected in cases.items():
        assert assert_strict(parse_assertion(text), page).outcome is expected, text


def test_count_mode_default_can_be_switched():
    page = _page(*[UiElement(f"k{i}", f"Course {i}", "link") for i in range(5)])
    expr = parse_assertion("'Course' is present 4 times")
    assert assert_strict(expr, page).outcome is True
    assert assert_strict(expr, page, count_mode=CountMode.EXACTLY).outcome is False


def test_not_present_on_empty_page():
    assert assert_strict(parse_assertion("'x' is not present"), _page()).outcome is True


def test_one_unrecognized_leaf_makes_the_whole_expression_not_applicable():
    expr = parse_assertion("'Sign in' is present AND the page has links")
    res = assert_strict(expr, _page(LINK))
    assert res.outcome is None and not res.applicable


def test_strictness_by_parsing_alone():
    tc = compile_test_case(TestCase(
        "t",
        (NavAction("Open https://a.b"), NavAction("Tap the shiny thing")),
        (Leaf("'x' is present"), Leaf("the page has links")),
    ))
    s = strictness_of(tc)
    assert s.readiness == (True, False)
    assert s.assertions == (True, False)
    assert not s.all_strict


_descs = st.sampled_from(["Sign in", "sign up", "news", "News letter", "ARTEMIS", "x"])
_types = st.sampled_from(["link", "button", "checkbox", "statictext", "input", "image"])


@st.composite
def _pages(draw):
    n = draw(st.integers(0, 5))
    elems = []
    for i in range(n):
        t = draw(_types)
        elems.append(UiElement(f"e{i}", draw(_descs), t,
                               checked=t == "checkbox" and draw(st.booleans()),
                               visible=draw(st.booleans())))
    return PageSnapshot("https://p", tuple(elems))


@given(_pages(), _descs, st.sampled_from(list(Matching)))
def test_negation_duality(page, target, matching):
    present = assert_strict(Leaf(f"'{target}' is present"), page, matching)
    absent = assert_strict(Leaf(f"'{target}' is not present"), page, matching)
    assert present.applicable and absent.applicable
    assert absent.outcome is (not present.outcome)


@given(_pages(), _descs)
def test_strict_outcomes_always_name_their_forms(page, target):
    for text in (f"'{target}' is checked", f"'{target}' is visible OR the page contains '{target}'"):
        res = assert_strict(parse_assertion(text), page)
        assert res.outcome is not None and all(1 <= f <= 12 for f in res.matched_forms)
