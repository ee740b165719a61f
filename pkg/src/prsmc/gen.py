"""Random normal-form systems and fragment formulas for differential testing."""

from __future__ import annotations

import random

from .altl import GF, And, Diamond, F, Formula, Not, Or
from .system import Action, Mbrs, Rule
from .terms import EPS, Term, par, seq, var

VAR_NAMES = "XYZUVW"
ACTIONS = "abcd"


def random_mbrs(
    rng: random.Random,
    max_vars: int = 5,
    max_rules: int = 8,
    max_components: int = 2,
    p_push: float = 0.25,
    p_pop: float = 0.15,
) -> Mbrs:
    """A random normal-form system whose variables include ``X``."""
    names = list(VAR_NAMES[: rng.randint(2, max_vars)])
    actions = ACTIONS[: rng.randint(1, len(ACTIONS))]

    def pick_par(lo: int, hi: int) -> Term:
        return par(*(var(rng.choice(names)) for _ in range(rng.randint(lo, hi))))

    rules = []
    for i in range(rng.randint(1, max_rules)):
        roll = rng.random()
        if roll < p_push:
            lhs = var(rng.choice(names))
            rhs = seq(rng.choice(names), var(rng.choice(names)))
        elif roll < p_push + p_pop:
            lhs = seq(rng.choice(names), var(rng.choice(names)))
            rhs = var(rng.choice(names))
        else:
            lhs = pick_par(1, 2)
            rhs = pick_par(0, 2) if rng.random() < 0.8 else EPS
        rules.append(Rule(f"r{i + 1}", lhs, Action(rng.choice(actions)), rhs))
    n = rng.randint(min(1, max_components), max_components)
    ids = [r.id for r in rules]
    comps = tuple(frozenset(rid for rid in ids if rng.random() < 0.35) for _ in range(n))
    return Mbrs(frozenset(names), frozenset(Action(a) for a in actions), tuple(rules), comps)


def random_prop(rng: random.Random, actions=ACTIONS, depth: int = 2) -> Formula:
    """A random propositional formula over action diamonds."""
    if depth <= 1 or rng.random() < 0.5:
        return Diamond(rng.choice(actions))
    match rng.randrange(3):
        case 0:
            return Not(random_prop(rng, actions, depth - 1))
        case 1:
            return And(random_prop(rng, actions, depth - 1), random_prop(rng, actions, depth - 1))
        case _:
            return Or(random_prop(rng, actions, depth - 1), random_prop(rng, actions, depth - 1))


def random_formula(rng: random.Random, actions=ACTIONS, depth: int = 4) -> Formula:
    """A random formula of the F / GF fragment with nesting depth at most ``depth``."""

    def prop(d: int) -> Formula:
        return random_prop(rng, actions, d)

    def temporal(d: int) -> Formula:
        if d <= 2 or rng.random() < 0.4:
            return (F if rng.random() < 0.5 else GF)(prop(max(1, d - 1 - (rng.random() < 0.5))))
        match rng.randrange(3):
            case 0:
                return Not(temporal(d - 1))
            case 1:
                return And(temporal(d - 1), temporal(d - 1))
            case _:
                return Or(temporal(d - 1), temporal(d - 1))

    return temporal(max(2, depth))


__all__ = ["random_mbrs", "random_formula", "random_prop"]
