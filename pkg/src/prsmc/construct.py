"""Constructed systems and the expansion of their rules back into the
original system.

``build_parallel_mbrs`` saturates the parallel rules of a normal-form
system with summary rules for whole push/inner-derivation/pop episodes:

* ``X -K'-> _ZF`` when a push ``X -> Y.(Z)`` is followed by some finite
  derivation from Z that is then abandoned,
* ``X -K'-> Y`` when the derivation from Z empties, so ``Y.(eps) = Y``,
* ``X -K'-> W'`` when it reaches exactly ``W`` and a pop ``Y.(W) -> W'``
  fires,

with ``K'`` the components touched along the way.  ``build_par_omega``
adds ``X -(K',Kw')-> _Zinf`` for pushes whose inner variable starts an
infinite accepting derivation, and ``build_seq_mbrs`` summarizes parallel
activity as renames for the sequential abstraction.

Each added rule keeps a recipe: the rules that triggered it and the inner
witness.  ``Focus`` replays abstract derivations as concrete derivations
of the original system by splicing those recipes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

from .par_engine import (
    Profile,
    par_finite_accepting,
    par_reach_cover,
    par_reach_empty,
    par_reach_var,
)
from .system import Derivation, KLabel, KPair, Mbrs, Rule, is_normal_form, subsets
from .terms import EPS, ZF, ZINF, Term, seq, var
from .witness import LassoWitness, Verdict, replay_rules

log = logging.getLogger(__name__)

NODE_BUDGET = 20000


@dataclass(frozen=True)
class Recipe:
    kind: str  # residue | empty | pop | infinite | cover
    generation: int
    push: str | None = None
    pop: str | None = None
    inner: object = None  # abstract Derivation, or a concrete LassoWitness for "infinite"

    def describe(self) -> str:
        via = ", ".join(x for x in (self.push, self.pop) if x)
        if self.inner is None:
            body = "no concrete inner run"
        elif isinstance(self.inner, LassoWitness):
            body = f"stem {list(self.inner.stem.rules)} cycle {list(self.inner.cycle.rules)}"
        else:
            body = f"inner {list(self.inner.rules)}"
        return f"{self.kind} (generation {self.generation}{'; via ' + via if via else ''}; {body})"


@dataclass(eq=False)
class ConstructedMbrs:
    mbrs: Mbrs
    base: Mbrs
    k: frozenset
    provenance: dict = field(default_factory=dict)
    undersaturated: bool = False
    source: "ConstructedMbrs | None" = None  # system the recipes' inner derivations live in
    _expansions: dict = field(default_factory=dict, repr=False)

    @property
    def added(self) -> list[Rule]:
        return [r for r in self.mbrs.rules if r.id in self.provenance]

    def expansion(self, rid: str):
        """Concrete derivation from the rule's left variable, plus the
        abandoned-infinite part it leaves behind (or None)."""
        hit = self._expansions.get(rid)
        if hit is None:
            hit = self._expand(rid)
            self._expansions[rid] = hit
        return hit

    def _expand(self, rid: str):
        rule = self.mbrs.rule(rid)
        rec: Recipe = self.provenance[rid]
        x = rule.lhs[0].head
        if rec.kind == "cover":
            return _concretize(self.source, var(x), rec.inner.rules), None
        push = self.base.rule(rec.push)
        head, z = push.rhs[0].head, push.rhs[0].tail
        steps = [(push.id, push.rhs)]
        if rec.kind == "infinite":
            if rec.inner is None:
                raise ValueError(f"rule {rid} has no concrete inner run")
            stem, cycle = rec.inner.stem, rec.inner.cycle
            steps += [(r, seq(head, u)) for r, u in stem.steps]
            return Derivation(var(x), tuple(steps)), Part(head, cycle)
        inner = _concretize(self, z, rec.inner.rules)
        steps += [(r, seq(head, u)) for r, u in inner.steps]
        if rec.kind == "pop":
            pop = self.base.rule(rec.pop)
            steps.append((pop.id, pop.rhs))
        return Derivation(var(x), tuple(steps)), None

    def dump(self) -> str:
        out = [str(self.mbrs).rstrip("\n")]
        if self.undersaturated:
            out.append("# warning: some engine queries were inconclusive; rules may be missing")
        for r in self.added:
            out.append(f"# {r.id}: {self.provenance[r.id].describe()}")
        return "\n".join(out) + "\n"


# --------------------------------------------------------------- helpers


def reachable_rules(m: Mbrs, x: str) -> Mbrs:
    """Restrict to the rules that can ever fire from the variable x."""
    seen = {x}
    keep: set[str] = set()
    changed = True
    while changed:
        changed = False
        for r in m.rules:
            if r.id not in keep and r.lhs.variables() <= seen:
                keep.add(r.id)
                new = r.rhs.variables() - seen
                if new:
                    seen |= new
                changed = True
    return m.restrict(keep)


def _fresh(prefix: str, taken: set[str]):
    n = 0
    while True:
        n += 1
        name = f"{prefix}{n}"
        if name not in taken:
            taken.add(name)
            yield name


def _assemble(base: Mbrs, rules: list[Rule], comp_of: Callable[[Rule], frozenset]) -> Mbrs:
    comps = tuple(frozenset(r.id for r in rules if i in comp_of(r)) for i in range(1, base.n + 1))
    labels = frozenset(base.alphabet) | {r.label for r in rules}
    return Mbrs(base.vars | {ZF, ZINF}, labels, tuple(rules), comps)


def _base_cmp(base: Mbrs):
    return lambda r: base.cmp.get(r.id, frozenset()) if r.id in base.by_id else r.label.k


# ------------------------------------------------------------- Fig. 1


class _Queries:
    """Engine queries against one intermediate system, sharing profiles."""

    def __init__(self, mp: Mbrs, k: frozenset, budget: int):
        self.mp, self.k, self.budget = mp, k, budget
        self.profiles: dict[str, Profile] = {}

    def _profile(self, z: str) -> Profile:
        p = self.profiles.get(z)
        if p is None:
            p = self.profiles[z] = Profile(self.mp, z, self.k, self.budget)
        return p

    def finite(self, z, k2) -> Verdict:
        p = self._profile(z)
        return p.finite_accepting(k2) if p.closed else par_finite_accepting(self.mp, z, k2, self.budget)

    def empty(self, z, k2) -> Verdict:
        p = self._profile(z)
        return p.reach(EPS, k2) if p.closed else par_reach_empty(self.mp, z, k2, self.budget)

    def exact(self, z, w, k2) -> Verdict:
        p = self._profile(z)
        return p.reach(var(w), k2) if p.closed else par_reach_var(self.mp, z, w, k2, self.budget)

    def cover(self, x, y, k2) -> Verdict:
        p = self._profile(x)
        return p.cover(y, k2) if p.closed else par_reach_cover(self.mp, x, y, k2, self.budget)


def build_parallel_mbrs(m: Mbrs, k, budget: int = NODE_BUDGET) -> ConstructedMbrs:
    """Saturate the parallel rules of ``m`` with summary rules (least fixpoint)."""
    if not is_normal_form(m):
        raise ValueError("system is not in normal form")
    k = frozenset(k)
    pushes = [r for r in m.rules if r.shape == "push" and m.cmp[r.id] <= k]
    pops = [r for r in m.rules if r.shape == "pop" and m.cmp[r.id] <= k]
    rules = [r for r in m.rules if r.is_par]
    keys = {(r.lhs, r.label, r.rhs) for r in rules}
    ids = _fresh("_k", {r.id for r in m.rules})
    cm = ConstructedMbrs(_assemble(m, rules, _base_cmp(m)), m, k)
    generation = 0
    while True:
        generation += 1
        q = _Queries(cm.mbrs, k, budget)
        found: list[tuple] = []

        def offer(lhs, kk, rhs, ask, recipe):
            key = (var(lhs), KLabel(kk), rhs)
            if key in keys:
                return
            v = ask()
            if v.yes:
                keys.add(key)
                found.append((key, recipe(v.witness)))
            elif v.unknown:
                cm.undersaturated = True

        for r in pushes:
            x, head, z = r.lhs[0].head, r.rhs[0].head, r.rhs[0].tail[0].head
            k1 = m.cmp[r.id]
            for k2 in subsets(k):
                offer(x, k1 | k2, var(ZF), lambda: q.finite(z, k2),
                      lambda w: Recipe("residue", generation, r.id, None, w))
                offer(x, k1 | k2, var(head), lambda: q.empty(z, k2),
                      lambda w: Recipe("empty", generation, r.id, None, w))
            for p in pops:
                if p.lhs[0].head != head:
                    continue
                w_var, w_out = p.lhs[0].tail[0].head, p.rhs[0].head
                for k3 in subsets(k):
                    offer(x, k1 | m.cmp[p.id] | k3, var(w_out), lambda: q.exact(z, w_var, k3),
                          lambda w: Recipe("pop", generation, r.id, p.id, w))
        if not found:
            return cm
        for (lhs, label, rhs), recipe in found:
            rid = next(ids)
            rules.append(Rule(rid, lhs, label, rhs))
            cm.provenance[rid] = recipe
        cm.mbrs = _assemble(m, rules, _base_cmp(m))
        cm._expansions.clear()
        log.debug("generation %d added %d rules", generation, len(found))


def saturation_gaps(cm: ConstructedMbrs, budget: int = NODE_BUDGET) -> list[tuple]:
    """Rules that one more saturation round would add (empty at a fixpoint)."""
    m, k = cm.base, cm.k
    q = _Queries(cm.mbrs, k, budget)
    keys = {(r.lhs, r.label, r.rhs) for r in cm.mbrs.rules}
    gaps = []
    for r in (r for r in m.rules if r.shape == "push" and m.cmp[r.id] <= k):
        x, head, z = r.lhs[0].head, r.rhs[0].head, r.rhs[0].tail[0].head
        k1 = m.cmp[r.id]
        for k2 in subsets(k):
            if q.finite(z, k2).yes and (var(x), KLabel(k1 | k2), var(ZF)) not in keys:
                gaps.append((x, k1 | k2, ZF))
            if q.empty(z, k2).yes and (var(x), KLabel(k1 | k2), var(head)) not in keys:
                gaps.append((x, k1 | k2, head))
        for p in m.rules:
            if p.shape != "pop" or p.lhs[0].head != head or not m.cmp[p.id] <= k:
                continue
            w_var, w_out = p.lhs[0].tail[0].head, p.rhs[0].head
            for k3 in subsets(k):
                kk = k1 | m.cmp[p.id] | k3
                if q.exact(z, w_var, k3).yes and (var(x), KLabel(kk), var(w_out)) not in keys:
                    gaps.append((x, kk, w_out))
    return gaps


# -------------------------------------------------------------- Def 4.2


def normalize_lasso(m: Mbrs, w: LassoWitness) -> LassoWitness:
    """Fold one cycle iteration into the stem, so the stem alone already
    touches everything the lasso touches."""
    stem = w.stem.then(w.cycle)
    if w.exact:
        return LassoWitness(stem, w.cycle)
    hint = tuple(t for _, t in w.cycle.steps)
    again = replay_rules(m, w.cycle.end, w.cycle.rules, hint)
    if again is None:
        raise ValueError("cycle does not replay from its end")
    return LassoWitness(stem, again)


def build_par_omega(m: Mbrs, mk: ConstructedMbrs, k, kw, decide_smaller):
    """Add abandoned-infinite summary rules; returns the extended system and
    the companion component assignment over the same rules."""
    k, kw = frozenset(k), frozenset(kw)
    if not kw <= k:
        raise ValueError("infinitely-often set must be contained in the finite set")
    rules = list(mk.mbrs.rules)
    keys = {(r.lhs, r.label, r.rhs) for r in rules}
    ids = _fresh("_w", {r.id for r in rules})
    out = ConstructedMbrs(mk.mbrs, m, k, dict(mk.provenance), mk.undersaturated)
    inf_comp: dict[str, frozenset] = {}
    for r in m.rules:
        if r.shape != "push" or not m.cmp[r.id] <= k:
            continue
        x, z = r.lhs[0].head, r.rhs[0].tail[0].head
        for k1 in subsets(k):
            kbar = k1 | m.cmp[r.id]
            if not kbar <= k:
                continue
            for k1w in subsets(kw & k1):
                if len(k1) + len(k1w) >= len(k) + len(kw):
                    continue
                key = (var(x), KPair(kbar, k1w), var(ZINF))
                if key in keys:
                    continue
                v = decide_smaller(z, k1, k1w)
                if v.unknown:
                    out.undersaturated = True
                if not v.yes:
                    continue
                keys.add(key)
                rid = next(ids)
                rules.append(Rule(rid, *key))
                inner = None if v.witness is None else normalize_lasso(m, v.witness)
                out.provenance[rid] = Recipe("infinite", 0, r.id, None, inner)
                inf_comp[rid] = k1w
    base_cmp = mk.mbrs.cmp

    def par_cmp(rule):
        return rule.label.k if isinstance(rule.label, KPair) else base_cmp[rule.id]

    out.mbrs = _assemble(m, rules, par_cmp)
    m_inf = _assemble(m, rules, lambda rule: inf_comp.get(rule.id, frozenset()))
    return out, m_inf


# -------------------------------------------------------------- Def 4.3


def build_seq_mbrs(m: Mbrs, mk: ConstructedMbrs, k, budget: int = NODE_BUDGET) -> ConstructedMbrs:
    """Pushes of ``m`` plus renames summarizing parallel activity."""
    k = frozenset(k)
    rules = [r for r in m.rules if r.shape == "push"]
    ids = _fresh("_s", {r.id for r in m.rules} | {r.id for r in mk.mbrs.rules})
    out = ConstructedMbrs(mk.mbrs, m, k, {}, mk.undersaturated, source=mk)
    q = _Queries(mk.mbrs, k, budget)
    user = sorted(m.vars)
    for x in user:
        for y in user:
            for k2 in subsets(k):
                v = q.cover(x, y, k2)
                if v.unknown:
                    out.undersaturated = True
                if v.yes:
                    rid = next(ids)
                    rules.append(Rule(rid, var(x), KLabel(k2), var(y)))
                    out.provenance[rid] = Recipe("cover", 0, inner=v.witness)
    out.mbrs = Mbrs(
        m.vars,
        frozenset(m.alphabet) | {r.label for r in rules},
        tuple(rules),
        tuple(
            frozenset(r.id for r in rules if i in (r.label.k if r.id in out.provenance else m.cmp[r.id]))
            for i in range(1, m.n + 1)
        ),
    )
    return out


# ------------------------------------------------------------ expansion


@dataclass
class Part:
    """An abandoned spine ``head.(inner)`` that runs an infinite derivation."""

    head: str
    cycle: Derivation  # next cycle iteration, starting from the current inner term

    @property
    def spine(self) -> Term:
        return seq(self.head, self.cycle.start)


class Focus:
    """Builds one concrete derivation of the original system.

    The term is kept as a context (levels of ``rest || head.( ... )``) around
    a focused parallel term where the abstract derivations are replayed.
    """

    def __init__(self, base: Mbrs, start: Term):
        self.base = base
        self.start = start
        self.levels: list[tuple[Term, str]] = []
        self.hole = start
        self.steps: list[tuple[str, Term]] = []
        self.parts: list[Part] = []

    def whole(self, hole: Term | None = None) -> Term:
        cur = self.hole if hole is None else hole
        for rest, head in reversed(self.levels):
            cur = rest | seq(head, cur)
        return cur

    def _emit(self, rid: str, hole: Term) -> None:
        self.hole = hole
        self.steps.append((rid, self.whole()))

    def play(self, cm: ConstructedMbrs, rid: str) -> None:
        """One step of an abstract parallel derivation at the focus."""
        rule = cm.mbrs.rule(rid)
        if rid not in cm.provenance:
            if not rule.is_par:
                raise ValueError(f"rule {rid} cannot be played at the focus")
            self._emit(rid, self.hole.minus(rule.lhs) | rule.rhs)
            return
        rest = self.hole.minus(rule.lhs)
        d, part = cm.expansion(rid)
        for r, u in d.steps:
            self._emit(r, rest | u)
        if part is not None:
            # advance() mutates parts; the memoized expansion must stay fresh
            self.parts.append(Part(part.head, part.cycle))

    def push(self, rid: str) -> None:
        """Fire a push on a bare variable of the focus and move into it."""
        rule = self.base.rule(rid)
        rest = self.hole.minus(rule.lhs)
        head, inner = rule.rhs[0].head, rule.rhs[0].tail
        self.levels.append((rest, head))
        self._emit(rid, inner)

    def play_seq(self, cm: ConstructedMbrs, rid: str) -> None:
        if rid in cm.provenance:
            self.play(cm, rid)
        else:
            self.push(rid)

    def advance(self, part: Part) -> None:
        """Run one cycle of an abandoned infinite part in place."""
        rest = self.hole.minus(part.spine)
        for r, u in part.cycle.steps:
            self._emit(r, rest | seq(part.head, u))
        nxt = part.cycle
        if part.cycle.end != part.cycle.start:
            hint = tuple(t for _, t in part.cycle.steps)
            nxt = replay_rules(self.base, part.cycle.end, part.cycle.rules, hint)
            if nxt is None:
                raise ValueError("abandoned part does not replay")
        part.cycle = nxt

    def mark(self) -> int:
        return len(self.steps)

    def derivation(self, frm: int = 0, to: int | None = None) -> Derivation:
        steps = self.steps[frm:to]
        start = self.start if frm == 0 else self.steps[frm - 1][1]
        return Derivation(start, tuple(steps))


def _concretize(cm: ConstructedMbrs, start: Term, rids) -> Derivation:
    f = Focus(cm.base, start)
    for rid in rids:
        f.play(cm, rid)
    return f.derivation()


def expand_witness(cm: ConstructedMbrs, d: Derivation) -> Derivation:
    """A derivation of the original system doing what ``d`` does in the
    constructed one: bare variables are kept, each ``_ZF`` / ``_Zinf``
    token becomes the spine its summary rule left behind."""
    if cm.undersaturated and any(r not in cm.mbrs.by_id for r in d.rules):
        raise ValueError("recipe missing")
    return _concretize(cm, d.start, d.rules)


__all__ = [
    "ConstructedMbrs", "Recipe", "Focus", "Part", "build_parallel_mbrs", "build_par_omega",
    "build_seq_mbrs", "expand_witness", "reachable_rules", "saturation_gaps", "normalize_lasso",
]
