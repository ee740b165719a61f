"""Rewrite systems with accepting components, their one-step semantics,
derivations, subderivations and the maximal-set calculus on rule sequences.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

from .terms import Term, is_parallel, seq

KSet = frozenset


def kset(*items: int) -> frozenset[int]:
    return frozenset(items)


def fmt_kset(k: Iterable[int]) -> str:
    return "{" + ",".join(str(i) for i in sorted(k)) + "}"


def subsets(k: Iterable[int]) -> list[frozenset[int]]:
    """All subsets of ``k``, smallest first."""
    items = sorted(k)
    return [
        frozenset(c)
        for size in range(len(items) + 1)
        for c in itertools.combinations(items, size)
    ]


# ------------------------------------------------------------------ labels


@dataclass(frozen=True)
class Action:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class KLabel:
    k: frozenset[int]

    def __str__(self) -> str:
        return fmt_kset(self.k)


@dataclass(frozen=True)
class KPair:
    k: frozenset[int]
    kw: frozenset[int]

    def __str__(self) -> str:
        return f"{fmt_kset(self.k)}/{fmt_kset(self.kw)}"


Label = Action | KLabel | KPair


# ------------------------------------------------------------------- rules


@dataclass(frozen=True)
class Rule:
    id: str
    lhs: Term
    label: Label
    rhs: Term

    def __post_init__(self):
        if not self.lhs:
            raise ValueError(f"rule {self.id}: left-hand side must not be eps")

    def __str__(self) -> str:
        return f"{self.id} : {self.lhs} -{self.label}-> {self.rhs}"

    @property
    def is_par(self) -> bool:
        return is_parallel(self.lhs) and is_parallel(self.rhs)

    @cached_property
    def shape(self) -> str | None:
        """One of push / pop / rename / erase, or None for other shapes."""
        lhs, rhs = self.lhs, self.rhs
        if len(lhs) != 1:
            return None
        head, tail = lhs[0]
        if not tail:
            if not rhs:
                return "erase"
            if len(rhs) != 1:
                return None
            if not rhs[0].tail:
                return "rename"
            inner = rhs[0].tail
            if len(inner) == 1 and not inner[0].tail:
                return "push"
            return None
        if len(tail) == 1 and not tail[0].tail and len(rhs) == 1 and not rhs[0].tail:
            return "pop"
        return None

    @property
    def is_seq(self) -> bool:
        return self.shape is not None


@dataclass(frozen=True)
class Derivation:
    """A start term and the (rule id, resulting term) pairs that follow it."""

    start: Term
    steps: tuple[tuple[str, Term], ...] = ()

    @property
    def rules(self) -> tuple[str, ...]:
        return tuple(r for r, _ in self.steps)

    @property
    def terms(self) -> tuple[Term, ...]:
        return (self.start,) + tuple(t for _, t in self.steps)

    @property
    def end(self) -> Term:
        return self.steps[-1][1] if self.steps else self.start

    def __len__(self) -> int:
        return len(self.steps)

    def then(self, other: "Derivation") -> "Derivation":
        if other.start != self.end:
            raise ValueError(f"cannot join: {self.end} vs {other.start}")
        return Derivation(self.start, self.steps + other.steps)


@dataclass(frozen=True)
class Lasso:
    """Ultimately periodic rule sequence ``stem . cycle^omega``."""

    stem: tuple[str, ...] = ()
    cycle: tuple[str, ...] = ()

    @property
    def infinite(self) -> bool:
        return bool(self.cycle)


# -------------------------------------------------------------------- Mbrs


@dataclass(frozen=True, eq=False)
class Mbrs:
    vars: frozenset[str]
    alphabet: frozenset
    rules: tuple[Rule, ...]
    components: tuple[frozenset[str], ...] = ()
    _steps: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        ids = [r.id for r in self.rules]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate rule ids")
        known = set(ids)
        for i, comp in enumerate(self.components, 1):
            if not comp <= known:
                raise ValueError(f"component {i} names unknown rules {sorted(comp - known)}")

    @property
    def n(self) -> int:
        return len(self.components)

    @cached_property
    def by_id(self) -> dict[str, Rule]:
        return {r.id: r for r in self.rules}

    @cached_property
    def cmp(self) -> dict[str, frozenset[int]]:
        return {
            r.id: frozenset(i for i, c in enumerate(self.components, 1) if r.id in c)
            for r in self.rules
        }

    def rule(self, rid: str) -> Rule:
        try:
            return self.by_id[rid]
        except KeyError:
            raise KeyError(f"unknown rule id {rid!r}") from None

    def restrict(self, keep: Iterable[str]) -> "Mbrs":
        """Same system with only the given rules (components intersected)."""
        keep = set(keep)
        return Mbrs(
            self.vars,
            self.alphabet,
            tuple(r for r in self.rules if r.id in keep),
            tuple(c & keep for c in self.components),
        )

    def within(self, k: Iterable[int]) -> "Mbrs":
        """Only the rules whose components all lie in ``k``."""
        k = frozenset(k)
        return self.restrict(r.id for r in self.rules if self.cmp[r.id] <= k)

    def parallel_part(self) -> "Mbrs":
        return self.restrict(r.id for r in self.rules if r.is_par)

    def steps(self, t: Term) -> tuple[tuple[str, Term, int], ...]:
        """(rule id, successor, level) for every way a rule applies to ``t``."""
        hit = self._steps.get(t)
        if hit is None:
            hit = tuple(self._compute_steps(t))
            self._steps[t] = hit
        return hit

    def _compute_steps(self, t: Term) -> Iterator[tuple[str, Term, int]]:
        for r in self.rules:
            if t.contains(r.lhs):
                yield r.id, t.minus(r.lhs) | r.rhs, 0
        for sp in set(t):
            if not sp.tail:
                continue
            rest = t.minus(Term((sp,)))
            for rid, inner, level in self.steps(sp.tail):
                yield rid, rest | seq(sp.head, inner), level + 1

    def __str__(self) -> str:
        from .sysfile import dump_system

        return dump_system(self)


# ------------------------------------------------------------- semantics


def classify(m: Mbrs) -> str:
    if all(r.is_par for r in m.rules):
        return "parallel"
    if all(r.is_seq for r in m.rules):
        return "sequential"
    if all(r.is_par or r.is_seq for r in m.rules):
        return "normal_form"
    return "general"


def is_normal_form(m: Mbrs) -> bool:
    return classify(m) != "general"


def successors(m: Mbrs, t: Term) -> frozenset[tuple[str, Term]]:
    return frozenset((rid, u) for rid, u, _ in m.steps(t))


def application_levels(m: Mbrs, t: Term, rid: str, t2: Term) -> frozenset[int]:
    levels = frozenset(k for r, u, k in m.steps(t) if r == rid and u == t2)
    if not levels:
        raise ValueError(f"{t} -{rid}-> {t2} is not a step")
    return levels


def check_derivation(m: Mbrs, d: Derivation) -> None:
    """Raise ValueError unless every step of ``d`` is a valid rewrite."""
    cur = d.start
    for i, (rid, nxt) in enumerate(d.steps):
        m.rule(rid)
        if (rid, nxt) not in successors(m, cur):
            raise ValueError(f"step {i}: {cur} -{rid}-> {nxt} is not a valid rewrite")
        cur = nxt


def replay(m: Mbrs, start: Term, rules: Iterable[str]) -> list[Derivation]:
    """Every derivation from ``start`` firing exactly ``rules`` in order."""
    frontier = [Derivation(start)]
    for rid in rules:
        m.rule(rid)
        frontier = [
            Derivation(d.start, d.steps + ((rid, u),))
            for d in frontier
            for r, u in sorted(successors(m, d.end))
            if r == rid
        ]
        seen, uniq = set(), []
        for d in frontier:
            if d.end not in seen:
                seen.add(d.end)
                uniq.append(d)
        frontier = uniq
    return frontier


def subderivation(m: Mbrs, d: Derivation, at: int, pivot: Term) -> Derivation:
    """Follow the spine ``pivot = X.(s)`` of the term reached after ``at``
    steps and return the derivation performed inside it, starting from ``s``.

    The occurrence is tracked step by step.  A step counts as happening
    beside the pivot when the pivot survives it and the remaining context
    makes the same move; it happens inside when the pivot's tail rewrites.
    Tracking stops when the tail is exhausted or the pivot is consumed.
    """
    terms = d.terms
    if not 0 <= at < len(terms):
        raise ValueError(f"position {at} outside the derivation")
    if len(pivot) != 1 or not terms[at].contains(pivot):
        raise ValueError(f"{pivot} is not a spine of {terms[at]}")
    head, s = pivot[0]
    out: list[tuple[str, Term]] = []
    start = s
    for rid, nxt in d.steps[at:]:
        if not s:
            break
        cur_spine = seq(head, s)
        ctx = terms[at].minus(cur_spine)
        at += 1
        if nxt.contains(cur_spine) and (rid, nxt.minus(cur_spine)) in successors(m, ctx):
            continue
        moved = [
            u for r, u in successors(m, s)
            if r == rid and nxt.contains(seq(head, u)) and nxt.minus(seq(head, u)) == ctx
        ]
        if moved:
            s = moved[0]
            out.append((rid, s))
            continue
        break
    return Derivation(start, tuple(out))


# ------------------------------------------------------- maximal calculus


def maximal(m: Mbrs, sigma: Iterable[str]) -> frozenset[int]:
    out: set[int] = set()
    for rid in sigma:
        m.rule(rid)
        out |= m.cmp[rid]
    return frozenset(out)


def inf_maximal(m: Mbrs, lasso: Lasso) -> frozenset[int]:
    return maximal(m, lasso.cycle)


def lasso_maximal(m: Mbrs, lasso: Lasso) -> frozenset[int]:
    return maximal(m, lasso.stem) | maximal(m, lasso.cycle)


def oplus(prefix: Iterable[frozenset[int]], period: Iterable[frozenset[int]]) -> frozenset[int]:
    """Indices occurring in infinitely many sets of the succession
    ``prefix, period, period, ...``.  The prefix never contributes."""
    period = list(period)
    if not period:
        raise ValueError("an infinite succession needs a nonempty period")
    return frozenset().union(*period)


def _shuffle(s1: tuple, s2: tuple) -> Iterator[tuple]:
    if not s1 or not s2:
        yield s1 + s2
        return
    for rest in _shuffle(s1[1:], s2):
        yield (s1[0],) + rest
    for rest in _shuffle(s1, s2[1:]):
        yield (s2[0],) + rest


def interleavings(s1: Sequence, s2: Sequence, bound: int = 20) -> Iterator[tuple]:
    """The shuffles of two rule sequences, each produced once."""
    if len(s1) + len(s2) > bound:
        raise ValueError(f"interleaving of {len(s1) + len(s2)} rules exceeds bound {bound}")
    seen = set()
    for lam in _shuffle(tuple(s1), tuple(s2)):
        if lam not in seen:
            seen.add(lam)
            yield lam

