"""Decision procedures for accepting derivations and for model checking.

``Decider`` holds one system and memoizes the constructed systems per
accepting set, so the recursive infinite-derivation query reuses them.
Every Yes carries a derivation (or lasso) of the original system, built by
splicing the recipes of the constructed rules.
"""

from __future__ import annotations

import logging

from .altl import Formula, NotInFragment, desugar, disjunct_to_mbrs, in_fragment, negate_to_dnf, show
from .construct import (
    NODE_BUDGET,
    ConstructedMbrs,
    Focus,
    build_par_omega,
    build_parallel_mbrs,
    build_seq_mbrs,
    reachable_rules,
)
from .par_engine import par_finite_accepting, par_infinite_mixed
from .seq_engine import seq_infinite_accepting, top_path, top_reachable
from .system import Derivation, Mbrs, is_normal_form
from .terms import Term, var
from .witness import NO, UNKNOWN, LassoWitness, Verdict, combine_any, no, unknown, yes

log = logging.getLogger(__name__)

BASE_CASE_NOTE = "No (base-case, unverified characterization)"


def _name(x) -> str:
    if isinstance(x, Term):
        if len(x) != 1 or x[0].tail:
            raise ValueError(f"start term {x} is not a variable")
        return x[0].head
    return x


class Decider:
    """Problem 1 and Problem 2 for one normal-form system."""

    def __init__(self, m: Mbrs, budget: int = NODE_BUDGET, check_base_case: bool = True):
        if not is_normal_form(m):
            raise ValueError("system is not in normal form")
        self.m = m
        self.budget = budget
        self.check_base_case = check_base_case
        self._mk: dict = {}
        self._seq: dict = {}
        self._omega: dict = {}
        self._memo: dict = {}

    # ---------------------------------------------------------- systems

    def mk(self, k) -> ConstructedMbrs:
        k = frozenset(k)
        if k not in self._mk:
            self._mk[k] = build_parallel_mbrs(self.m, k, self.budget)
        return self._mk[k]

    def seq_system(self, k) -> ConstructedMbrs:
        k = frozenset(k)
        if k not in self._seq:
            self._seq[k] = build_seq_mbrs(self.m, self.mk(k), k, self.budget)
        return self._seq[k]

    def omega(self, k, kw):
        k, kw = frozenset(k), frozenset(kw)
        if (k, kw) not in self._omega:
            self._omega[(k, kw)] = build_par_omega(
                self.m, self.mk(k), k, kw, lambda z, k1, k1w: self.problem2(z, k1, k1w)
            )
        return self._omega[(k, kw)]

    # ---------------------------------------------------------- problem 1

    def problem1(self, x, k) -> Verdict:
        """A finite derivation from x whose maximal is exactly k."""
        x, k = _name(x), frozenset(k)
        cm = self.mk(k)
        v = par_finite_accepting(cm.mbrs, x, k, self.budget)
        if v.no and cm.undersaturated:
            return unknown("construction is under-saturated")
        if not v.yes:
            return v
        f = Focus(self.m, var(x))
        for rid in v.witness.rules:
            f.play(cm, rid)
        d = f.derivation()
        cert = {"kind": "finite", "constructed": list(v.witness.rules)}
        return yes(d, "finite accepting derivation", (cert,))

    # ---------------------------------------------------------- problem 2

    def problem2(self, x, k, kw) -> Verdict:
        """An infinite derivation from x touching exactly k, and exactly kw
        infinitely often."""
        x, k, kw = _name(x), frozenset(k), frozenset(kw)
        if not kw <= k:
            return no("infinitely-often set is not contained in the finite set")
        key = (x, k, kw)
        if key not in self._memo:
            self._memo[key] = self._problem2(x, k, kw)
        return self._memo[key]

    def _problem2(self, x, k, kw) -> Verdict:
        cm_seq = self.seq_system(k)
        omega, m_inf = self.omega(k, kw)
        rstar = frozenset(r.id for r in self.mk(k).mbrs.rules)
        under = cm_seq.undersaturated or omega.undersaturated
        verdicts = []
        for y in sorted(top_reachable(cm_seq.mbrs, x, k)):
            v = par_infinite_mixed(omega.mbrs, m_inf, y, k, kw, rstar, self.budget)
            if v.yes:
                return self._composite(x, y, k, cm_seq, omega, v)
            verdicts.append(v)
        if k == kw:
            v = seq_infinite_accepting(cm_seq.mbrs, x, k, kw)
            if v.yes:
                return self._sequential(cm_seq, v)
            verdicts.append(v)
        out = combine_any(verdicts)
        if out.no and under:
            return unknown("construction is under-saturated")
        if out.no and not k and self.check_base_case:
            out = self._base_case(x, out)
        return out

    def _base_case(self, x, v: Verdict) -> Verdict:
        from .oracle import bf_infinite_accepting

        ref = bf_infinite_accepting(self.m, x, frozenset(), frozenset(), self.budget)
        if ref.no:
            return v
        if ref.yes:
            log.warning("base case for %s disagrees with the bounded search", x)
            return Verdict(NO, None, "No (base-case; bounded search found a run)")
        return Verdict(NO, None, BASE_CASE_NOTE)

    # ------------------------------------------------------- certificates

    def _prefix(self, cm_seq: ConstructedMbrs, x: str, y: str, k) -> Focus:
        """Concrete play of a top-graph path from x to y."""
        f = Focus(self.m, var(x))
        for e in top_path(cm_seq.mbrs, x, y, k):
            f.play_seq(cm_seq, e.rid)
        return f

    def _composite(self, x, y, k, cm_seq, omega, v: Verdict) -> Verdict:
        cert = {"kind": "infinite", "via": y, "parallel": _rules_of(v.witness)}
        try:
            f = self._prefix(cm_seq, x, y, k)
            cert["sequential"] = [r for r, _ in f.steps]
            w = v.witness
            if isinstance(w, LassoWitness):
                for rid in w.stem.rules + w.cycle.rules:
                    f.play(omega, rid)
                mark, live = f.mark(), list(f.parts)
                for rid in w.cycle.rules:
                    f.play(omega, rid)
            else:
                for rid in w.rules:
                    f.play(omega, rid)
                mark, live = f.mark(), list(f.parts)
            for part in live:
                f.advance(part)
            if f.mark() == mark:
                raise ValueError("empty concrete cycle")
            lasso = LassoWitness(f.derivation(0, mark), f.derivation(mark))
        except ValueError as exc:
            log.warning("could not expand certificate: %s", exc)
            return yes(None, f"accepting run exists; expansion failed ({exc})", (cert,))
        return yes(lasso, "accepting lasso", (cert,))

    def _sequential(self, cm_seq, v: Verdict) -> Verdict:
        w = v.witness
        cert = {"kind": "infinite", "sequential": _rules_of(w)}
        f = Focus(self.m, w.start)
        for rid in w.stem.rules:
            f.play_seq(cm_seq, rid)
        mark = f.mark()
        for rid in w.cycle.rules:
            f.play_seq(cm_seq, rid)
        return yes(LassoWitness(f.derivation(0, mark), f.derivation(mark)), "accepting lasso", (cert,))


def _rules_of(w) -> dict | list:
    if isinstance(w, LassoWitness):
        return {"stem": list(w.stem.rules), "cycle": list(w.cycle.rules)}
    if isinstance(w, Derivation):
        return list(w.rules)
    return []


# --------------------------------------------------------------- entry points


def problem1(m: Mbrs, x, k, budget: int = NODE_BUDGET) -> Verdict:
    x = _name(x)
    return Decider(reachable_rules(m, x), budget).problem1(x, k)


def problem2(m: Mbrs, x, k, kw, budget: int = NODE_BUDGET) -> Verdict:
    x = _name(x)
    return Decider(reachable_rules(m, x), budget).problem2(x, k, kw)


def model_check_infinite(m: Mbrs, x, phi: Formula, budget: int = NODE_BUDGET) -> Verdict:
    """Yes when every infinite run from x satisfies phi; No carries a
    counterexample run for the first satisfiable disjunct of the negation."""
    if not is_normal_form(m):
        raise ValueError("system is not in normal form")
    if not in_fragment(desugar(phi)):
        raise NotInFragment(f"{show(phi)} is outside the fragment")
    x = _name(x)
    base = reachable_rules(m, x)
    pending = None
    verdicts = []
    for d in negate_to_dnf(phi):
        md, k, kw = disjunct_to_mbrs(base, d)
        v = Decider(md, budget).problem2(x, k, kw)
        verdicts.append({"disjunct": str(d), "verdict": v.kind, "note": v.note})
        if v.yes:
            cert = {"kind": "model_check", "disjunct": str(d), "disjuncts": verdicts,
                    "evidence": v.certificates[0] if v.certificates else {}}
            return Verdict(NO, v.witness, f"counterexample satisfies {d}", (cert,))
        if v.unknown and pending is None:
            pending = v
    if pending is not None:
        return Verdict(UNKNOWN, None, pending.note, ({"kind": "model_check", "disjuncts": verdicts},))
    return yes(None, "every disjunct of the negation is unsatisfiable",
               ({"kind": "model_check", "disjuncts": verdicts},))


__all__ = ["Decider", "problem1", "problem2", "model_check_infinite", "BASE_CASE_NOTE"]
