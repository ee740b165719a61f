"""Action-based LTL: syntax, evaluation on lasso runs, the F/GF fragment,
and the reduction of a negated fragment formula to F+/GF/G disjuncts.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import product

from .system import Action, Mbrs


class FormulaSyntaxError(ValueError):
    pass


class NotInFragment(ValueError):
    pass


@dataclass(frozen=True)
class Formula:
    def __str__(self) -> str:
        return show(self)


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class Diamond(Formula):
    action: str
    sub: Formula = field(default_factory=TrueF)


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class F(Formula):
    sub: Formula


@dataclass(frozen=True)
class G(Formula):
    sub: Formula


@dataclass(frozen=True)
class GF(Formula):
    sub: Formula


@dataclass(frozen=True)
class FG(Formula):
    sub: Formula


@dataclass(frozen=True)
class FPlus(Formula):
    sub: Formula


TRUE = TrueF()


def show(f: Formula) -> str:
    match f:
        case TrueF():
            return "true"
        case Diamond(a, TrueF()):
            return f"<{a}>"
        case Diamond(a, sub):
            return f"<{a}>({show(sub)})"
        case Not(sub):
            return f"!{_wrap(sub)}"
        case And(l, r):
            return f"{_wrap(l)} & {_wrap(r)}"
        case Or(l, r):
            return f"{_wrap(l)} | {_wrap(r)}"
        case Until(l, r):
            return f"{_wrap(l)} U {_wrap(r)}"
        case F(sub):
            return f"F {_wrap(sub)}"
        case G(sub):
            return f"G {_wrap(sub)}"
        case GF(sub):
            return f"GF {_wrap(sub)}"
        case FG(sub):
            return f"FG {_wrap(sub)}"
        case FPlus(sub):
            return f"F+ {_wrap(sub)}"
    raise TypeError(f)


def _wrap(f: Formula) -> str:
    if isinstance(f, (And, Or, Until)):
        return f"({show(f)})"
    return show(f)


# ------------------------------------------------------------------ parser

_TOK = re.compile(
    r"\s*(?:(?P<diamond><\s*[A-Za-z0-9_]+\s*>)|(?P<op>->|&&|\|\||[!&|()])"
    r"|(?P<kw>F\+|GF|FG|true|F|G|U)(?![A-Za-z0-9_]))"
)


def _lex(text: str) -> list[tuple[str, str, int]]:
    out, pos, text = [], 0, text.rstrip()
    while pos < len(text):
        m = _TOK.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected input at column {pos + 1}: {text[pos:pos + 10]!r}")
        kind = m.lastgroup
        val = m.group(kind)
        if kind == "diamond":
            val = val.strip("<> \t")
        elif val in ("&&", "||"):
            val = val[0]
        out.append((kind, val, m.start(kind)))
        pos = m.end()
    return out


def parse_formula(text: str) -> Formula:
    """Precedence, loosest first: ``->``, ``|``, ``&``, ``U``, then the
    prefix operators ``! F G GF FG F+``."""
    toks = _lex(text)
    i = 0

    def peek():
        return toks[i][1] if i < len(toks) else None

    def col():
        return toks[i][2] + 1 if i < len(toks) else len(text) + 1

    def take(expected):
        nonlocal i
        if peek() != expected:
            raise FormulaSyntaxError(f"expected {expected!r} at column {col()}")
        i += 1

    def implication():
        nonlocal i
        left = disjunction()
        if peek() == "->":
            i += 1
            return Or(Not(left), implication())
        return left

    def disjunction():
        nonlocal i
        f = conjunction()
        while peek() == "|":
            i += 1
            f = Or(f, conjunction())
        return f

    def conjunction():
        nonlocal i
        f = until()
        while peek() == "&":
            i += 1
            f = And(f, until())
        return f

    def until():
        nonlocal i
        f = unary()
        if peek() == "U":
            i += 1
            return Until(f, until())
        return f

    def unary():
        nonlocal i
        if i >= len(toks):
            raise FormulaSyntaxError(f"unexpected end of formula at column {col()}")
        kind, val, _ = toks[i]
        ctor = {"!": Not, "F": F, "G": G, "GF": GF, "FG": FG, "F+": FPlus}.get(val)
        if ctor is not None and kind != "diamond":
            i += 1
            return ctor(unary())
        if kind == "diamond":
            i += 1
            return Diamond(val, TRUE)
        if val == "true":
            i += 1
            return TRUE
        if val == "(":
            i += 1
            f = implication()
            take(")")
            return f
        raise FormulaSyntaxError(f"unexpected {val!r} at column {col()}")

    if not toks:
        raise FormulaSyntaxError("empty formula")
    f = implication()
    if i != len(toks):
        raise FormulaSyntaxError(f"trailing input at column {col()}")
    return f


# ----------------------------------------------------------- propositional


def is_prop(f: Formula) -> bool:
    match f:
        case TrueF() | Diamond(_, TrueF()):
            return True
        case Not(sub):
            return is_prop(sub)
        case And(l, r) | Or(l, r):
            return is_prop(l) and is_prop(r)
    return False


def prop_holds(psi: Formula, action: str) -> bool:
    match psi:
        case TrueF():
            return True
        case Diamond(a, TrueF()):
            return a == action
        case Not(sub):
            return not prop_holds(sub, action)
        case And(l, r):
            return prop_holds(l, action) and prop_holds(r, action)
        case Or(l, r):
            return prop_holds(l, action) or prop_holds(r, action)
    raise NotInFragment(f"{show(psi)} is not propositional")


def prop_denote(psi: Formula, sigma) -> frozenset:
    """The actions of ``sigma`` on which ``psi`` holds."""
    return frozenset(a for a in sigma if prop_holds(psi, str(a)))


def ac_rules(m: Mbrs, psi: Formula) -> frozenset[str]:
    if not is_prop(psi):
        raise NotInFragment(f"{show(psi)} is not propositional")
    return frozenset(
        r.id for r in m.rules if isinstance(r.label, Action) and prop_holds(psi, r.label.name)
    )


# -------------------------------------------------------------- evaluation


@dataclass(frozen=True)
class LassoRun:
    stem: tuple[str, ...]
    cycle: tuple[str, ...]

    def __post_init__(self):
        if not self.cycle:
            raise ValueError("a lasso run needs a nonempty cycle")


def eval_formula(f: Formula, run: LassoRun) -> bool:
    return _truth(f, run)[0]


def _truth(f: Formula, run: LassoRun) -> list[bool]:
    """Truth value of ``f`` at each of the |stem|+|cycle| distinct suffixes."""
    word = run.stem + run.cycle
    n, loop = len(word), len(run.stem)
    nxt = [i + 1 for i in range(n - 1)] + [loop]
    on_cycle = range(loop, n)
    match f:
        case TrueF():
            return [True] * n
        case Diamond(a, sub):
            s = _truth(sub, run)
            return [word[i] == a and s[nxt[i]] for i in range(n)]
        case Not(sub):
            return [not v for v in _truth(sub, run)]
        case And(l, r):
            return [x and y for x, y in zip(_truth(l, run), _truth(r, run))]
        case Or(l, r):
            return [x or y for x, y in zip(_truth(l, run), _truth(r, run))]
        case Until(l, r):
            a, b = _truth(l, run), _truth(r, run)
            return _lfp(n, nxt, lambda i, cur: b[i] or (a[i] and cur[nxt[i]]))
        case F(sub):
            s = _truth(sub, run)
            return _lfp(n, nxt, lambda i, cur: s[i] or cur[nxt[i]])
        case G(sub):
            s = _truth(sub, run)
            return [not v for v in _lfp(n, nxt, lambda i, cur: (not s[i]) or cur[nxt[i]])]
        case GF(sub):
            s = _truth(sub, run)
            return [any(s[i] for i in on_cycle)] * n
        case FG(sub):
            s = _truth(sub, run)
            return [all(s[i] for i in on_cycle)] * n
        case FPlus(sub):
            ev = _truth(F(sub), run)
            inf = any(_truth(sub, run)[i] for i in on_cycle)
            return [v and not inf for v in ev]
    raise TypeError(f)


def _lfp(n, nxt, step) -> list[bool]:
    cur = [False] * n
    for _ in range(n + 1):
        new = [step(i, cur) for i in range(n)]
        if new == cur:
            break
        cur = new
    return cur


# ---------------------------------------------------------------- fragment


def desugar(f: Formula) -> Formula:
    """Fold G(F p) into GF p and F(G p) into FG p."""
    match f:
        case G(F(p)):
            return GF(desugar(p))
        case F(G(p)):
            return FG(desugar(p))
        case Not(p) | F(p) | G(p) | GF(p) | FG(p) | FPlus(p):
            return type(f)(desugar(p))
        case And(l, r) | Or(l, r) | Until(l, r):
            return type(f)(desugar(l), desugar(r))
        case Diamond(a, p):
            return Diamond(a, desugar(p))
    return f


def in_fragment(f: Formula) -> bool:
    return _frag(desugar(f))


def _frag(f: Formula) -> bool:
    match f:
        case F(p) | GF(p) | G(p) | FG(p) | FPlus(p):
            return is_prop(p)
        case Not(p):
            return _frag(p)
        case And(l, r) | Or(l, r):
            return _frag(l) and _frag(r)
    return False


@dataclass(frozen=True)
class Disjunct:
    """``F+ fplus[0] & ... & GF gf[0] & ... & G g``."""

    fplus: tuple[Formula, ...] = ()
    gf: tuple[Formula, ...] = ()
    g: Formula = TRUE

    def as_formula(self) -> Formula:
        parts = [FPlus(p) for p in self.fplus] + [GF(p) for p in self.gf] + [G(self.g)]
        out = parts[0]
        for p in parts[1:]:
            out = And(out, p)
        return out

    def __str__(self) -> str:
        return show(self.as_formula())


DNF_LIMIT = 256


def _simplify_prop(p: Formula) -> Formula:
    match p:
        case Not(Not(q)):
            return _simplify_prop(q)
        case Not(q):
            return Not(_simplify_prop(q))
        case And(l, r):
            return And(_simplify_prop(l), _simplify_prop(r))
        case Or(l, r):
            return Or(_simplify_prop(l), _simplify_prop(r))
    return p


def _neg_literals(f: Formula, positive: bool) -> list[list[tuple[str, Formula]]]:
    """DNF (list of conjunctions of (kind, prop) literals) of f or of !f."""
    match f:
        case Not(p):
            return _neg_literals(p, not positive)
        case And(l, r) | Or(l, r):
            conj = isinstance(f, And) == positive
            a, b = _neg_literals(l, positive), _neg_literals(r, positive)
            if not conj:
                return _cap(a + b)
            return _cap([x + y for x, y in product(a, b)])
    p = f.sub
    if positive:
        match f:
            case F():
                return [[("fplus", p)], [("gf", p)]]
            case G():
                return [[("g", p)]]
            case GF():
                return [[("gf", p)]]
            case FG():
                return [[("fplus", Not(p))], [("g", p)]]
            case FPlus():
                return [[("fplus", p)]]
    else:
        match f:
            case F():
                return [[("g", Not(p))]]
            case G():
                return [[("fplus", Not(p))], [("gf", Not(p))]]
            case GF():
                return [[("fplus", p)], [("g", Not(p))]]
            case FG():
                return [[("gf", Not(p))]]
            case FPlus():
                return [[("g", Not(p))], [("gf", p)]]
    raise NotInFragment(show(f))


def _cap(ds):
    if len(ds) > DNF_LIMIT:
        raise ValueError(f"disjunctive normal form exceeds {DNF_LIMIT} disjuncts")
    return ds


def negate_to_dnf(f: Formula) -> list[Disjunct]:
    """Disjuncts whose union is equivalent to ``!f`` on infinite runs."""
    f = desugar(f)
    if not _frag(f):
        raise NotInFragment(f"{show(f)} is outside the F/GF fragment")
    out, seen = [], set()
    for lits in _neg_literals(f, positive=False):
        fplus, gf, gs = [], [], []
        for kind, p in lits:
            p = _simplify_prop(p)
            bucket = {"fplus": fplus, "gf": gf, "g": gs}[kind]
            if p not in bucket:
                bucket.append(p)
        g = TRUE
        for p in gs:
            g = p if g == TRUE else And(g, p)
        d = Disjunct(tuple(fplus), tuple(gf), g)
        if d not in seen:
            seen.add(d)
            out.append(d)
    return out


def disjunct_to_mbrs(m: Mbrs, d: Disjunct) -> tuple[Mbrs, frozenset[int], frozenset[int]]:
    comps = [ac_rules(m, p) for p in d.fplus] + [ac_rules(m, p) for p in d.gf]
    comps.append(ac_rules(m, Not(d.g)))
    m1, m2 = len(d.fplus), len(d.gf)
    out = Mbrs(m.vars, m.alphabet, m.rules, tuple(comps))
    return out, frozenset(range(1, m1 + m2 + 1)), frozenset(range(m1 + 1, m1 + m2 + 1))
