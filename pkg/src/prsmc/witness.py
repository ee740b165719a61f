"""Three-valued verdicts and replayable witnesses.

A finite witness is a :class:`Derivation`.  An infinite witness is a
:class:`LassoWitness`: a concrete stem and one concrete iteration of the
cycle.  The cycle either returns to its start term exactly, or ends in a
term that embeds its start term (wider, or deeper under a push), from
which it can be fired again.  ``check_lasso`` replays further iterations to confirm it.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any

import networkx as nx

from .system import Derivation, Lasso, Mbrs, check_derivation, maximal
from .terms import Term

YES, NO, UNKNOWN = "Yes", "No", "Unknown"


@dataclass(frozen=True)
class Verdict:
    kind: str
    witness: Any = None
    note: str = ""
    certificates: tuple = field(default=(), compare=False)

    @property
    def yes(self) -> bool:
        return self.kind == YES

    @property
    def no(self) -> bool:
        return self.kind == NO

    @property
    def unknown(self) -> bool:
        return self.kind == UNKNOWN

    def __bool__(self) -> bool:
        raise TypeError("use .yes / .no / .unknown on a Verdict")

    def __str__(self) -> str:
        return self.kind + (f" ({self.note})" if self.note else "")


def yes(witness=None, note: str = "", certificates=()) -> Verdict:
    return Verdict(YES, witness, note, tuple(certificates))


def no(note: str = "") -> Verdict:
    return Verdict(NO, None, note)


def unknown(note: str = "") -> Verdict:
    return Verdict(UNKNOWN, None, note)


def combine_any(verdicts) -> Verdict:
    """Existential combination: Yes beats Unknown beats No."""
    pending = None
    for v in verdicts:
        if v.yes:
            return v
        if v.unknown and pending is None:
            pending = v
    return pending if pending is not None else no()


@dataclass(frozen=True)
class LassoWitness:
    stem: Derivation
    cycle: Derivation

    def __post_init__(self):
        if self.cycle.start != self.stem.end:
            raise ValueError("cycle must start where the stem ends")
        if not self.cycle.steps:
            raise ValueError("cycle must be nonempty")

    @property
    def start(self) -> Term:
        return self.stem.start

    @property
    def lasso(self) -> Lasso:
        return Lasso(self.stem.rules, self.cycle.rules)

    @property
    def exact(self) -> bool:
        """True when one cycle iteration returns to the very same term."""
        return self.cycle.end == self.cycle.start


# ----------------------------------------------------------------- embedding


def embeds(small: Term, big: Term) -> bool:
    """Homeomorphic embedding of ``small`` into ``big``: spines map
    injectively to spines with equal heads and embedded tails, and a spine
    may also sink into the tail of a deeper spine."""
    if not small:
        return True
    if len(small) > len(big):
        return False
    if big.contains(small):
        return True
    # injective placement of spine kinds, as a flow problem
    need, have = Counter(small), Counter(big)
    g = nx.DiGraph()
    g.add_nodes_from(("src", "dst"))
    for i, (s, c) in enumerate(need.items()):
        targets = [j for j, b in enumerate(have) if _spine_embeds(s, b)]
        if not targets:
            return False
        g.add_edge("src", ("s", i), capacity=c)
        g.add_edges_from((("s", i), ("b", j)) for j in targets)
    for j, c in enumerate(have.values()):
        g.add_edge(("b", j), "dst", capacity=c)
    return nx.maximum_flow_value(g, "src", "dst") == len(small)


@lru_cache(maxsize=1 << 16)
def _spine_embeds(s, b) -> bool:
    if s.head == b.head and embeds(s.tail, b.tail):
        return True
    return bool(b.tail) and embeds(Term((s,)), b.tail)


# -------------------------------------------------------------------- replay


def replay_rules(
    m: Mbrs,
    start: Term,
    rules: tuple[str, ...],
    hint: tuple[Term, ...] | None = None,
    budget: int = 20000,
) -> Derivation | None:
    """Find some derivation from ``start`` firing ``rules`` in order.

    Successors that embed the corresponding ``hint`` term are tried first;
    the search backtracks within ``budget`` expansions.
    """
    count = 0

    def order(i, options):
        if hint is None:
            return options
        return sorted(options, key=lambda u: (not embeds(hint[i], u), str(u)))

    def go(i: int, cur: Term, acc: list):
        nonlocal count
        if i == len(rules):
            return list(acc)
        count += 1
        if count > budget:
            return None
        options = sorted({u for r, u, _ in m.steps(cur) if r == rules[i]}, key=str)
        for u in order(i, options):
            acc.append((rules[i], u))
            found = go(i + 1, u, acc)
            if found is not None:
                return found
            acc.pop()
        return None

    steps = go(0, start, [])
    return None if steps is None else Derivation(start, tuple(steps))


def check_lasso(m: Mbrs, w: LassoWitness, pumps: int = 3) -> list[Term]:
    """Validate a lasso witness and return the cycle start terms of
    ``pumps`` further iterations.  Raises ValueError on failure."""
    check_derivation(m, w.stem)
    check_derivation(m, w.cycle)
    starts = [w.cycle.start, w.cycle.end]
    if w.exact:
        return starts[:1] * (pumps + 1)
    if not embeds(w.cycle.start, w.cycle.end):
        raise ValueError("cycle end does not embed the cycle start")
    hint = tuple(t for _, t in w.cycle.steps)
    cur = w.cycle.end
    for k in range(pumps):
        d = replay_rules(m, cur, w.cycle.rules, hint)
        if d is None:
            raise ValueError(f"pump iteration {k + 2} does not replay")
        if not embeds(cur, d.end):
            raise ValueError(f"pump iteration {k + 2} does not cover its start")
        hint = tuple(t for _, t in d.steps)
        cur = d.end
        starts.append(cur)
    return starts


def witness_maxima(m: Mbrs, w) -> tuple[frozenset[int], frozenset[int]]:
    """(maximal, infinite maximal) of a finite or lasso witness."""
    if isinstance(w, LassoWitness):
        return maximal(m, w.stem.rules + w.cycle.rules), maximal(m, w.cycle.rules)
    return maximal(m, w.rules), frozenset()


def check_witness(m: Mbrs, w, pumps: int = 3) -> None:
    if isinstance(w, LassoWitness):
        check_lasso(m, w, pumps)
    elif isinstance(w, Derivation):
        check_derivation(m, w)
    elif w is not None:
        raise TypeError(f"not a witness: {type(w).__name__}")


# ---------------------------------------------------------------------- json


def derivation_json(d: Derivation) -> list[dict]:
    return [{"rule": r, "term_after": str(t)} for r, t in d.steps]


def witness_json(v: Verdict) -> dict:
    out: dict = {"verdict": v.kind}
    if v.note:
        out["note"] = v.note
    w = v.witness
    if isinstance(w, LassoWitness):
        out["start"] = str(w.start)
        out["steps"] = derivation_json(w.stem) + derivation_json(w.cycle)
        out["lasso"] = {"stem": list(w.stem.rules), "cycle": list(w.cycle.rules)}
    elif isinstance(w, Derivation):
        out["start"] = str(w.start)
        out["steps"] = derivation_json(w)
    out["certificates"] = [c if isinstance(c, dict) else {"note": str(c)} for c in v.certificates]
    return out


def witness_from_json(data: dict, variables=None):
    """Rebuild the witness of ``witness_json`` output (for ``--validate``)."""
    from .terms import parse_term

    if "start" not in data:
        return None
    start = parse_term(data["start"], variables)
    steps = tuple((s["rule"], parse_term(s["term_after"], variables)) for s in data["steps"])
    lasso = data.get("lasso")
    if not lasso:
        return Derivation(start, steps)
    k = len(lasso["stem"])
    stem = Derivation(start, steps[:k])
    return LassoWitness(stem, Derivation(stem.end, steps[k:]))
