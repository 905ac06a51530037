"""Bundled AUT models, suites and the mutant list used by tests and demos."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from nlguard.aut import AutModel, Mutation, load_aut_model
from nlguard.model import TestCase, parse_test_suite
from nlguard.steps import compile_test_case

MODELS = ("uca", "shop")
SUITES = ("uca", "uca-single", "uca-eval", "shop", "shop-eval")


def path(name: str) -> Path:
    """Filesystem path of a bundled fixture file, e.g. ``path("uca.aut")``."""
    return Path(str(resources.files(__name__).joinpath(name)))


def read_text(name: str) -> str:
    return resources.files(__name__).joinpath(name).read_text(encoding="utf-8")


def load_model(name: str) -> AutModel:
    return load_aut_model(read_text(f"{name}.aut"))


def load_suite(name: str) -> list[TestCase]:
    return [compile_test_case(tc) for tc in parse_test_suite(read_text(f"{name}.suite"))]


@dataclass(frozen=True)
class Mutant:
    """A single mutation with its hand-checked ioco outcome.

    ``detected`` is True when some output after a specification trace
    differs; False marks a mutant that only removes behaviour, which ioco
    without quiescence cannot observe.
    """

    name: str
    mutation: Mutation
    detected: bool
    reason: str


UCA_MUTANTS = (
    Mutant("remove-european-university", Mutation.remove_element("home", "h1"), True,
           "the home page renders differently right after ?open"),
    Mutant("remove-all-news", Mutation.remove_element("eu", "e1"), True,
           "the European University page renders differently"),
    Mutant("remove-artemis-link", Mutation.remove_element("news", "n1"), True,
           "the news page renders differently"),
    Mutant("redirect-all-news-home", Mutation.redirect("eu", "Click 'ALL NEWS'", "home"), True,
           "?click(ALL NEWS) outputs the home page instead of the news page"),
    Mutant("redirect-european-university-news",
           Mutation.redirect("home", "Click 'European University'", "news"), True,
           "?click(European University) outputs the news page"),
    Mutant("alter-newsletter-checked", Mutation.alter("news", "n4", checked=True), True,
           "the news page renders with the checkbox ticked"),
    Mutant("alter-campus-hidden", Mutation.alter("news", "n3", visible=False), True,
           "the news page renders with a hidden link"),
    Mutant("drop-all-news", Mutation.drop("eu", "Click 'ALL NEWS'"), False,
           "the mutant has no output after ?click(ALL NEWS); an empty output set is a subset of any"),
    Mutant("drop-european-university", Mutation.drop("home", "Click 'European University'"), False,
           "the mutant has no output after ?click(European University)"),
)
