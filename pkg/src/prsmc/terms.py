"""Process terms modulo associativity/commutativity of ``||``, with ``eps``
as its identity and ``X.(eps)`` identified with ``X``.

A term is stored canonically as a sorted tuple of spines.  A spine
``Spine(head, tail)`` denotes ``head.(tail)``; a bare variable has the
empty term as its tail.  Because the tuple is sorted, two terms are equal
(as Python values) exactly when they denote equivalent process terms, so
terms can be used directly as dictionary keys and set members.
"""

from __future__ import annotations

import itertools
from bisect import bisect_left
import re
from collections import Counter
from functools import lru_cache
from typing import Iterable, Iterator, NamedTuple

ZF = "_ZF"
ZINF = "_Zinf"
RESERVED = (ZF, ZINF)

NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class TermSyntaxError(ValueError):
    def __init__(self, msg: str, text: str = "", pos: int = -1):
        where = f" at column {pos + 1}" if pos >= 0 else ""
        super().__init__(f"{msg}{where}" + (f": {text!r}" if text else ""))
        self.pos = pos


class Spine(NamedTuple):
    head: str
    tail: "Term"

    def __str__(self) -> str:
        if not self.tail:
            return self.head
        return f"{self.head}.({self.tail})"


class Term(tuple):
    """Canonical multiset of spines.  ``Term()`` is eps."""

    __slots__ = ()

    def __new__(cls, spines: Iterable[Spine] = ()):
        return super().__new__(cls, sorted(spines))

    def __str__(self) -> str:
        if not self:
            return "eps"
        return "||".join(str(s) for s in self)

    def __repr__(self) -> str:
        return f"Term({str(self)!r})"

    def __or__(self, other: "Term") -> "Term":
        if not other:
            return self
        if not self:
            return other
        return tuple.__new__(Term, sorted(self + other))

    def counts(self) -> Counter:
        return Counter(self)

    def contains(self, sub: "Term") -> bool:
        """Multiset inclusion of top-level spines."""
        if len(sub) > len(self):
            return False
        i = 0
        for s in sub:
            i = bisect_left(self, s, i)
            if i == len(self) or self[i] != s:
                return False
            i += 1
        return True

    def minus(self, sub: "Term") -> "Term":
        rest = _merge_minus(self, sub)
        if rest is None:
            raise ValueError(f"{sub} is not contained in {self}")
        return tuple.__new__(Term, rest)

    @property
    def is_eps(self) -> bool:
        return not self

    def variables(self) -> set[str]:
        out: set[str] = set()
        for s in self:
            out.add(s.head)
            out |= s.tail.variables()
        return out

    def size(self) -> int:
        return sum(1 + s.tail.size() for s in self)

    def depth(self) -> int:
        return max((1 + s.tail.depth() for s in self), default=0)


EPS = Term()


def _merge_minus(big: tuple, small: tuple) -> list | None:
    """Sorted-list difference ``big - small``, or None if not included."""
    if len(small) > len(big):
        return None
    out = list(big)
    for s in reversed(small):
        i = bisect_left(out, s)
        if i == len(out) or out[i] != s:
            return None
        del out[i]
    return out


def var(name: str) -> Term:
    return Term((Spine(name, EPS),))


def seq(head: str, tail: Term) -> Term:
    return Term((Spine(head, tail),))


def par(*terms: Term) -> Term:
    return Term(s for t in terms for s in t)


def is_parallel(t: Term) -> bool:
    """No sequential composition anywhere in ``t``."""
    return all(not s.tail for s in t)


def is_sequential(t: Term) -> bool:
    """``t`` is eps or a single chain ``X1.(X2.(...Xn...))``."""
    while t:
        if len(t) != 1:
            return False
        t = t[0].tail
    return True


def is_spine(t: Term) -> bool:
    return len(t) == 1


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(\|\|)|(\.)|(\()|(\))|([A-Za-z_][A-Za-z0-9_]*))")


def _tokens(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise TermSyntaxError("unexpected character", text, pos)
        kind = ["||", ".", "(", ")", "name"][m.lastindex - 1]
        out.append((kind, m.group(m.lastindex), m.start(m.lastindex)))
        pos = m.end()
    return out


def parse_term(text: str, variables: Iterable[str] | None = None) -> Term:
    """Parse ``eps | VAR | VAR.(term) | term || term`` into canonical form.

    When ``variables`` is given, names outside it (other than the two
    reserved fresh variables) are rejected.
    """
    known = None if variables is None else set(variables) | set(RESERVED)
    toks = _tokens(text)
    i = 0

    def peek():
        return toks[i] if i < len(toks) else (None, None, len(text))

    def expect(kind):
        nonlocal i
        k, v, p = peek()
        if k != kind:
            raise TermSyntaxError(f"expected {kind!r}", text, p)
        i += 1
        return v

    def parallel() -> Term:
        nonlocal i
        parts = [atom()]
        while peek()[0] == "||":
            i += 1
            parts.append(atom())
        return par(*parts)

    def atom() -> Term:
        nonlocal i
        k, v, p = peek()
        if k == "(":
            i += 1
            t = parallel()
            expect(")")
            return t
        if k != "name":
            raise TermSyntaxError("expected a variable or eps", text, p)
        i += 1
        if v == "eps":
            return EPS
        if v not in RESERVED and not NAME_RE.match(v):
            raise TermSyntaxError(f"bad variable name {v!r}", text, p)
        if known is not None and v not in known:
            raise TermSyntaxError(f"unknown variable {v!r}", text, p)
        if peek()[0] == ".":
            i += 1
            expect("(")
            inner = parallel()
            expect(")")
            return seq(v, inner)
        return var(v)

    if not toks:
        raise TermSyntaxError("empty term", text, 0)
    t = parallel()
    if i != len(toks):
        raise TermSyntaxError("trailing input", text, peek()[2])
    return t


canonicalize = parse_term


# ------------------------------------------------------- term utilities


def _submultisets(t: Term, proper: bool) -> Iterator[Term]:
    """Distinct nonempty sub-multisets of the top-level spines of ``t``."""
    items = sorted(Counter(t).items())
    ranges = [range(k + 1) for _, k in items]
    for choice in itertools.product(*ranges):
        n = sum(choice)
        if n == 0 or (proper and n == len(t)):
            continue
        yield Term(s for (s, _), c in zip(items, choice) for _ in range(c))


@lru_cache(maxsize=65536)
def subterms(t: Term) -> frozenset[Term]:
    if not t:
        return frozenset({EPS})
    out = {t}
    for part in _submultisets(t, proper=False):
        out.add(part)
    for s in set(t):
        if s.tail:
            out |= subterms(s.tail)
    return frozenset(out)


@lru_cache(maxsize=65536)
def _replace(t: Term, st: Term, repl: Term) -> frozenset[Term]:
    if t == st:
        return frozenset({repl})
    out: set[Term] = set()
    if len(t) == 1:
        head, tail = t[0]
        if tail and st in subterms(tail):
            out.update(seq(head, u) for u in _replace(tail, st, repl))
        return frozenset(out)
    for part in _submultisets(t, proper=True):
        if st in subterms(part):
            rest = t.minus(part)
            out.update(u | rest for u in _replace(part, st, repl))
    return frozenset(out)


def substitute(t: Term, st: Term, repl: Term) -> frozenset[Term]:
    """All terms obtained from ``t`` by replacing one occurrence of ``st``."""
    if st not in subterms(t):
        raise ValueError(f"{st} is not a subterm of {t}")
    return _replace(t, st, repl)


@lru_cache(maxsize=65536)
def seq_set(t: Term) -> frozenset[Term]:
    out: set[Term] = set()
    for head, tail in set(t):
        if not tail:
            out.add(var(head))
        else:
            out.update(seq(head, u) for u in seq_set(tail))
    return frozenset(out)


def _require_chain(s: Term) -> None:
    if not s or not is_sequential(s):
        raise ValueError(f"{s} is not a nonempty sequential term")


def last(s: Term) -> str:
    _require_chain(s)
    while s[0].tail:
        s = s[0].tail
    return s[0].head


def compose(s: Term, s2: Term) -> Term:
    """Replace the innermost variable of ``s`` by ``s2``."""
    _require_chain(s)
    _require_chain(s2)
    head, tail = s[0]
    if not tail:
        return s2
    return seq(head, compose(tail, s2))
