"""Acceptance and model checking for process rewrite systems in normal form."""

from pathlib import Path

from .sysfile import dump_system, load_system, parse_system
from .system import Derivation, Lasso, Mbrs, Rule
from .terms import EPS, Term, parse_term

FIXTURES = Path(__file__).parent / "fixtures"


def fixture(name: str) -> Mbrs:
    """Load one of the bundled example systems (``S1``, ``S1prime``, ``S2``)."""
    return load_system(FIXTURES / f"{name}.prs")


__all__ = [
    "EPS", "Term", "parse_term", "Mbrs", "Rule", "Derivation", "Lasso",
    "parse_system", "load_system", "dump_system", "fixture", "FIXTURES",
]
