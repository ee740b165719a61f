"""Decision procedures for parallel systems viewed as Petri nets.

Parallel terms are markings (vectors of variable counts).  Every query
carries a small finite control next to the marking: the set of components
touched so far, plus whatever flags the query needs.  Touched sets only
grow, so the control never cycles back.

* cover-style and finite-acceptance queries use backward coverability over
  (control, upward-closed marking set) pairs, which is exact;
* exact reachability (to eps or to a bare variable) uses forward search,
  pruned by weight functions that no rule can decrease; it is exact when
  the pruned search closes, and otherwise falls back to the integer state
  equation, whose infeasibility refutes reachability;
* infinite acceptance looks for a reachable marking with a self-covering
  continuation, refuted when the Karp-Miller graph has no suitable cycle.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from math import inf

import networkx as nx
import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from .system import Derivation, Mbrs, subsets
from .terms import Term, var
from .witness import LassoWitness, combine_any, no, unknown, yes

log = logging.getLogger(__name__)

NODE_BUDGET = 20000
OMEGA = inf


class NotParallel(ValueError):
    pass


# --------------------------------------------------------------- the net


@dataclass(frozen=True)
class Transition:
    rid: str
    pre: tuple
    post: tuple


class Net:
    """The rules of a parallel system allowed by ``allowed`` as transitions."""

    def __init__(self, mp: Mbrs, allowed=lambda rid: True, extra=()):
        bad = [r.id for r in mp.rules if not r.is_par]
        if bad:
            raise NotParallel(f"rules {bad} are not parallel")
        names = set(mp.vars) | set(extra)
        for r in mp.rules:
            names |= {s.head for s in r.lhs} | {s.head for s in r.rhs}
        self.mp = mp
        self.places = tuple(sorted(names))
        self.index = {p: i for i, p in enumerate(self.places)}
        self.transitions = tuple(
            Transition(r.id, self.vec(r.lhs), self.vec(r.rhs)) for r in mp.rules if allowed(r.id)
        )

    def vec(self, t: Term) -> tuple:
        v = [0] * len(self.places)
        for s in t:
            if s.tail:
                raise NotParallel(f"{t} is not a parallel term")
            v[self.index[s.head]] += 1
        return tuple(v)

    def unit(self, name: str) -> tuple:
        return self.vec(var(name))

    def term(self, v: tuple) -> Term:
        if any(x == OMEGA for x in v):
            raise ValueError("an omega marking is not a term")
        return Term(var(p)[0] for p, k in zip(self.places, v) for _ in range(k))

    @staticmethod
    def enabled(v, t: Transition) -> bool:
        return all(a >= b for a, b in zip(v, t.pre))

    @staticmethod
    def fire(v, t: Transition) -> tuple:
        return tuple(a - b + c for a, b, c in zip(v, t.pre, t.post))

    def derivation(self, v0, rids) -> Derivation:
        by = {t.rid: t for t in self.transitions}
        steps, v = [], v0
        for rid in rids:
            v = self.fire(v, by[rid])
            steps.append((rid, self.term(v)))
        return Derivation(self.term(v0), tuple(steps))


def leq(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _var(x) -> str:
    if isinstance(x, Term):
        if len(x) != 1 or x[0].tail:
            raise ValueError(f"{x} is not a variable")
        return x[0].head
    return x


# ------------------------------------------------ backward coverability


def backward_cover(net: Net, init, ctrl0, update, controls, targets, budget=NODE_BUDGET):
    """Rule-id path from (ctrl0, init) to some (c, m) with m >= v for a
    target (c, v); None when impossible; "budget" when the basis grows past
    ``budget`` elements.  ``update(c, rid)`` returns the next control or
    None when the rule is forbidden under ``c``."""
    pre_ctrl: dict = {}
    for c in controls:
        for t in net.transitions:
            c2 = update(c, t.rid)
            if c2 is not None:
                pre_ctrl.setdefault((c2, t.rid), []).append(c)
    basis: dict = {c: [] for c in controls}
    succ: dict = {}
    queue = deque()

    def covered(c, v) -> bool:
        return any(leq(b, v) for b in basis[c])

    def add(c, v, link):
        if covered(c, v):
            return False
        basis[c] = [b for b in basis[c] if not leq(v, b)] + [v]
        succ[(c, v)] = link
        queue.append((c, v))
        return True

    def found(c, v):
        return c == ctrl0 and leq(v, init)

    for c, v in targets:
        add(c, v, None)
        if found(c, v):
            return _forward_path(succ, (c, v))
    size = 0
    while queue:
        c2, v2 = queue.popleft()
        if v2 not in basis[c2]:
            continue
        for t in net.transitions:
            for c in pre_ctrl.get((c2, t.rid), ()):
                v = tuple(max(a - b, 0) + p for a, b, p in zip(v2, t.post, t.pre))
                if add(c, v, (t.rid, (c2, v2))):
                    size += 1
                    if found(c, v):
                        return _forward_path(succ, (c, v))
                    if size > budget:
                        return "budget"
    return None


def _forward_path(succ, el) -> list[str]:
    path = []
    while succ[el] is not None:
        rid, el = succ[el]
        path.append(rid)
    return path


# ------------------------------------------------------ forward search


@dataclass
class Explored:
    parents: dict = field(default_factory=dict)
    edges: list = field(default_factory=list)
    closed: bool = False


def forward(net: Net, init, ctrl0, update, goal=None, prune=None, budget=NODE_BUDGET):
    """BFS over (marking, control).  Stops early at a ``goal`` node."""
    root = (init, ctrl0)
    ex = Explored({root: None})
    queue = deque([root])
    while queue:
        node = queue.popleft()
        if goal is not None and goal(node):
            return node, ex
        v, c = node
        for t in net.transitions:
            if not net.enabled(v, t):
                continue
            c2 = update(c, t.rid)
            if c2 is None:
                continue
            nxt = (net.fire(v, t), c2)
            if prune is not None and prune(nxt):
                continue
            ex.edges.append((node, t.rid, nxt))
            if nxt in ex.parents:
                continue
            if len(ex.parents) >= budget:
                return None, ex
            ex.parents[nxt] = (node, t.rid)
            queue.append(nxt)
    ex.closed = True
    return None, ex


def _path_rids(parents, node) -> list[str]:
    out = []
    while parents[node] is not None:
        node, rid = parents[node]
        out.append(rid)
    return out[::-1]


def persistent_weights(net: Net) -> list[tuple]:
    """Nonnegative weight vectors that no transition can decrease."""
    ws = []
    n = len(net.places)
    for i in range(n):
        if all(t.post[i] >= t.pre[i] for t in net.transitions):
            ws.append(tuple(int(j == i) for j in range(n)))
    if all(sum(t.post) >= sum(t.pre) for t in net.transitions):
        ws.append((1,) * n)
    return ws


def _dot(w, v) -> int:
    return sum(a * b for a, b in zip(w, v))


def state_equation_infeasible(net: Net, init, goal, cmp, k) -> bool:
    """True when no nonnegative integer count of firings moves ``init`` to
    ``goal`` while firing some rule of every component in ``k``.  Every
    derivation yields such a count, so True refutes reachability."""
    ts = net.transitions
    if not ts:
        return tuple(init) != tuple(goal) or bool(k)
    effect = np.array([[t.post[p] - t.pre[p] for t in ts] for p in range(len(net.places))], dtype=float)
    delta = np.array([g - i for g, i in zip(goal, init)], dtype=float)
    cons = [LinearConstraint(effect, delta, delta)]
    for i in sorted(k):
        row = np.array([1.0 if i in cmp[t.rid] else 0.0 for t in ts])
        cons.append(LinearConstraint(row, 1, np.inf))
    res = milp(np.ones(len(ts)), constraints=cons, integrality=np.ones(len(ts)),
               bounds=Bounds(0, np.inf), options={"time_limit": 10})
    return res.status == 2


# --------------------------------------------------- control helpers


def touched_update(cmp, k):
    def update(c, rid):
        return c | cmp[rid] if cmp[rid] <= k else None

    return update


def _cmp_check(mp: Mbrs, k) -> frozenset:
    k = frozenset(k)
    for i in k:
        if not 1 <= i <= mp.n:
            raise ValueError(f"component {i} outside 1..{mp.n}")
    return k


# -------------------------------------------------------- Prop 4.1 items


def par_reach_cover(mp: Mbrs, x, y, k, budget: int = NODE_BUDGET):
    """X ->sigma t || Y with |sigma| > 0 and maximal(sigma) = k."""
    k = _cmp_check(mp, k)
    x, y = _var(x), _var(y)
    net = Net(mp, lambda rid: mp.cmp[rid] <= k, (x, y))
    base = touched_update(mp.cmp, k)

    def update(c, rid):
        t = base(c[0], rid)
        return None if t is None else (t, True)

    controls = [(s, f) for s in subsets(k) for f in (False, True)]
    path = backward_cover(
        net, net.unit(x), (frozenset(), False), update, controls, [((k, True), net.unit(y))], budget
    )
    if path == "budget":
        return unknown("coverability basis exceeded the budget")
    if path is None:
        return no("not coverable")
    return yes(net.derivation(net.unit(x), path))


def par_finite_accepting(mp: Mbrs, x, k, budget: int = NODE_BUDGET):
    """Some finite derivation from X with maximal exactly k."""
    k = _cmp_check(mp, k)
    x = _var(x)
    net = Net(mp, lambda rid: mp.cmp[rid] <= k, (x,))
    zero = tuple(0 for _ in net.places)
    path = backward_cover(
        net, net.unit(x), frozenset(), touched_update(mp.cmp, k), subsets(k), [(k, zero)], budget
    )
    if path == "budget":
        return unknown("coverability basis exceeded the budget")
    if path is None:
        return no("no derivation touches exactly the requested components")
    return yes(net.derivation(net.unit(x), path))


def _reach_exact(mp: Mbrs, x, target: Term, k, budget):
    k = _cmp_check(mp, k)
    x = _var(x)
    net = Net(mp, lambda rid: mp.cmp[rid] <= k, (x,) + tuple(s.head for s in target))
    goal_v = net.vec(target)
    weights = [w for w in persistent_weights(net) if _dot(w, goal_v) >= 0]
    limits = [(w, _dot(w, goal_v)) for w in weights]

    def prune(node):
        return any(_dot(w, node[0]) > lim for w, lim in limits)

    init = net.unit(x)
    if prune((init, None)):
        return no("a quantity no rule decreases already exceeds the target")
    hit, ex = forward(
        net, init, frozenset(), touched_update(mp.cmp, k),
        goal=lambda n: n == (goal_v, k), prune=prune, budget=budget,
    )
    if hit is not None:
        return yes(net.derivation(init, _path_rids(ex.parents, hit)))
    if ex.closed:
        return no("pruned search closed")
    if state_equation_infeasible(net, init, goal_v, mp.cmp, k):
        return no("the integer state equation has no solution")
    return unknown(f"search exceeded {budget} nodes")


def par_reach_empty(mp: Mbrs, x, k, budget: int = NODE_BUDGET):
    """X ->sigma eps with maximal(sigma) = k."""
    return _reach_exact(mp, x, Term(), k, budget)


def par_reach_var(mp: Mbrs, x, y, k, budget: int = NODE_BUDGET):
    """X ->sigma Y (exactly) with maximal(sigma) = k; the null derivation
    counts when X = Y and k is empty."""
    return _reach_exact(mp, x, var(_var(y)), k, budget)


# ------------------------------------------------------------- profiles


class Profile:
    """Every (marking, touched, moved) state reachable from X with rules
    inside ``k``, when there are at most ``budget`` of them.

    One exploration answers the cover, exact-reachability and
    finite-acceptance queries for every subset of ``k`` at once.
    ``closed`` is False when the budget was hit; callers then fall back
    to the per-query procedures above.
    """

    def __init__(self, mp: Mbrs, x, k, budget: int = NODE_BUDGET):
        self.k = _cmp_check(mp, k)
        self.x = _var(x)
        self.net = Net(mp, lambda rid: mp.cmp[rid] <= self.k, (self.x,))
        cmp = mp.cmp

        def update(c, rid):
            return (c[0] | cmp[rid], True)

        self.init = self.net.unit(self.x)
        _, self.ex = forward(self.net, self.init, (frozenset(), False), update, budget=budget)
        self.closed = self.ex.closed

    def _find(self, pred):
        for node in self.ex.parents:
            if pred(node):
                rids = _path_rids(self.ex.parents, node)
                return yes(self.net.derivation(self.init, rids))
        return no("closed exploration")

    def finite_accepting(self, k2):
        k2 = frozenset(k2)
        return self._find(lambda n: n[1][0] == k2)

    def reach(self, target: Term, k2):
        k2, goal = frozenset(k2), self.net.vec(target)
        return self._find(lambda n: n[1][0] == k2 and n[0] == goal)

    def cover(self, y, k2):
        k2, i = frozenset(k2), self.net.index[_var(y)]
        return self._find(lambda n: n[1] == (k2, True) and n[0][i] >= 1)


# ------------------------------------------------------------ Karp-Miller


@dataclass
class KMGraph:
    net: Net
    nodes: list = field(default_factory=list)
    parent: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    complete: bool = False

    def omega_free(self) -> list:
        return [(v, c) for v, c in self.nodes if OMEGA not in v]


def karp_miller(net: Net, init, ctrl0=(), update=None, budget: int = NODE_BUDGET) -> KMGraph:
    """Karp-Miller coverability graph over (omega-marking, control)."""
    update = update or (lambda c, rid: c)
    km = KMGraph(net, [(init, ctrl0)], [None])
    where = {(init, ctrl0): 0}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        v, c = km.nodes[i]
        for t in net.transitions:
            if not net.enabled(v, t):
                continue
            c2 = update(c, t.rid)
            if c2 is None:
                continue
            w = list(net.fire(v, t))
            a = i
            while a is not None:
                av, ac = km.nodes[a]
                if ac == c2 and leq(av, w) and tuple(av) != tuple(w):
                    w = [OMEGA if x > y else x for x, y in zip(w, av)]
                a = km.parent[a]
            node = (tuple(w), c2)
            j = where.get(node)
            if j is None:
                if len(km.nodes) >= budget:
                    return km
                j = len(km.nodes)
                km.nodes.append(node)
                km.parent.append(i)
                where[node] = j
                queue.append(j)
            km.edges.append((i, t.rid, j))
    km.complete = True
    return km


def km_reachable(mp: Mbrs, x, budget: int = NODE_BUDGET) -> KMGraph:
    """Karp-Miller graph of a parallel system from the variable (or term) x."""
    start = x if isinstance(x, Term) else var(x)
    net = Net(mp, extra=tuple(s.head for s in start))
    return karp_miller(net, net.vec(start), budget=budget)


# ------------------------------------------------------- Prop 4.2 query


def par_infinite_mixed(mp1: Mbrs, mp2: Mbrs, x, k, kw, rstar, budget: int = NODE_BUDGET):
    """A derivation from X with maximal_1 = k, inf_maximal_1 u maximal_2 = kw,
    that is infinite or uses a rule outside ``rstar``."""
    if [r.id for r in mp1.rules] != [r.id for r in mp2.rules] or any(
        a != b for a, b in zip(mp1.rules, mp2.rules)
    ):
        raise ValueError("the two systems must share one rule set")
    k, kw = _cmp_check(mp1, k), _cmp_check(mp2, kw)
    if not kw <= k:
        return no("infinitely-often set is not contained in the finite set")
    x = _var(x)
    rstar = frozenset(rstar)
    c1, c2 = mp1.cmp, mp2.cmp
    verdicts = [_mixed_finite(mp1, x, k, kw, rstar, c1, c2, budget)]
    if verdicts[0].yes:
        return verdicts[0]
    for k1 in subsets(kw):
        for k2 in subsets(kw):
            if k1 | k2 != kw:
                continue
            v = _mixed_infinite(mp1, x, k, k1, k2, c1, c2, budget)
            if v.yes:
                return v
            verdicts.append(v)
    return combine_any(verdicts)


def _mixed_finite(mp, x, k, kw, rstar, c1, c2, budget):
    net = Net(mp, lambda rid: c1[rid] <= k and c2[rid] <= kw, (x,))

    def update(c, rid):
        return (c[0] | c1[rid], c[1] | c2[rid], c[2] or rid not in rstar)

    controls = [(a, b, f) for a in subsets(k) for b in subsets(kw) for f in (False, True)]
    zero = tuple(0 for _ in net.places)
    init = net.unit(x)
    path = backward_cover(net, init, (frozenset(), frozenset(), False), update, controls,
                          [((k, kw, True), zero)], budget)
    if path == "budget":
        return unknown("coverability basis exceeded the budget")
    if path is None:
        return no()
    return yes(net.derivation(init, path), "finite derivation using a rule outside the base set")


def _mixed_infinite(mp, x, k, k1, k2, c1, c2, budget):
    """Infinite case for one split: inf_maximal_1 = k1, maximal_2 = k2."""
    net = Net(mp, lambda rid: c1[rid] <= k and c2[rid] <= k2, (x,))
    loop_ok = {t.rid for t in net.transitions if c1[t.rid] <= k1}
    full = (k, k2)

    def update(c, rid):
        return (c[0] | c1[rid], c[1] | c2[rid])

    init = net.unit(x)
    ctrl0 = (frozenset(), frozenset())
    _, ex = forward(net, init, ctrl0, update, budget=budget)

    # exact cycles among explored states
    g = nx.DiGraph()
    for a, rid, b in ex.edges:
        if a[1] == full and b[1] == full and rid in loop_ok:
            g.add_edge(a, b, rid=rid)
    for comp in nx.strongly_connected_components(g):
        if len(comp) == 1 and not g.has_edge(*(2 * tuple(comp))):
            continue
        sub = g.subgraph(comp)
        covers = frozenset().union(*(c1[d["rid"]] for _, _, d in sub.edges(data=True)))
        if k1 <= covers:
            # parents is filled in BFS order: the first member is a shallowest one
            node = next(n for n in ex.parents if n in comp)
            return yes(_exact_lasso(net, ex, sub, node, k1, c1), "cycle through a reachable marking")

    # self-covering sequences from explored states
    hit = _self_covering(net, ex, full, loop_ok, k1, c1, budget)
    if hit is not None:
        a, seg = hit
        stem = net.derivation(init, _path_rids(ex.parents, a))
        return yes(LassoWitness(stem, net.derivation(a[0], seg)), "self-covering sequence")

    if ex.closed:
        return no("closed state space has no suitable cycle")
    km = karp_miller(net, init, ctrl0, update, budget)
    if not km.complete:
        return unknown("state space and Karp-Miller graph both exceed the budget")
    kg = nx.DiGraph()
    for i, rid, j in km.edges:
        if km.nodes[i][1] == full and km.nodes[j][1] == full and rid in loop_ok:
            kg.add_edge(i, j)
            kg[i][j].setdefault("rids", set()).add(rid)
    for comp in nx.strongly_connected_components(kg):
        sub = kg.subgraph(comp)
        if sub.number_of_edges() == 0:
            continue
        covers = frozenset().union(*(c1[r] for _, _, d in sub.edges(data=True) for r in d["rids"]))
        if k1 <= covers:
            return unknown("Karp-Miller graph has a candidate cycle that was not realized")
    return no("Karp-Miller graph refutes the cycle")


LOCAL_BUDGET = 500


def _self_covering(net, ex, full, loop_ok, k1, c1, budget):
    """A state with full control and a nonempty sequence of loop transitions
    from it that covers ``k1`` and ends in a marking at least as large."""
    loops = [t for t in net.transitions if t.rid in loop_ok]
    work = 0
    for a in ex.parents:
        if a[1] != full:
            continue
        root = (a[0], frozenset())
        parents = {root: None}
        queue = deque([root])
        local = 0
        while queue and work < budget and local < LOCAL_BUDGET:
            node = queue.popleft()
            work += 1
            local += 1
            for t in loops:
                if not net.enabled(node[0], t):
                    continue
                nxt = (net.fire(node[0], t), node[1] | c1[t.rid])
                if k1 <= nxt[1] and leq(a[0], nxt[0]):
                    return a, _path_rids(parents, node) + [t.rid]
                if nxt not in parents:
                    parents[nxt] = (node, t.rid)
                    queue.append(nxt)
        if work >= budget:
            break
    return None


def _exact_lasso(net, ex, sub, node, k1, c1):
    from .oracle import covering_cycle

    g = nx.DiGraph()
    for a, b, d in sub.edges(data=True):
        g.add_edge(a, b, rules=[d["rid"]])
    steps = covering_cycle(g, node, k1, c1)
    root = next(n for n, p in ex.parents.items() if p is None)
    stem = net.derivation(root[0], _path_rids(ex.parents, node))
    cyc = net.derivation(node[0], [rid for rid, _ in steps])
    return LassoWitness(stem, cyc)


__all__ = [
    "Net", "NotParallel", "Profile", "par_reach_cover", "par_reach_empty", "par_reach_var",
    "par_finite_accepting", "par_infinite_mixed", "karp_miller", "km_reachable",
    "backward_cover", "forward", "OMEGA",
]
