"""Bounded brute-force ground truth over the concrete term semantics.

Everything here works on explicit terms and explicit state graphs, with no
use of the constructed systems, so it can referee the decision procedures.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import networkx as nx

from .altl import Formula, LassoRun, NotInFragment, desugar, eval_formula, in_fragment, show
from .system import Action, Derivation, Mbrs, subsets
from .terms import Term, var
from .witness import NO, LassoWitness, Verdict, no, unknown, yes

log = logging.getLogger(__name__)

NODE_BUDGET = 20000
DEPTH_BUDGET = 14
MAX_NESTING = 300  # deeper or larger terms count as exceeding the budget
MAX_SIZE = 300


@dataclass
class StateGraph:
    start: Term
    nodes: set = field(default_factory=set)
    edges: list = field(default_factory=list)
    closed: bool = False
    infinite: bool = False
    frontier: list = field(default_factory=list)
    parent: dict = field(default_factory=dict, repr=False)

    def path_to(self, t: Term) -> Derivation:
        steps = []
        while t != self.start:
            prev, rid = self.parent[t]
            steps.append((rid, t))
            t = prev
        return Derivation(self.start, tuple(reversed(steps)))


def _occurs_in_context(t: Term, u: Term) -> bool:
    """``u`` is ``t`` placed in a nonempty context (beside other parallel
    components, or under sequential heads)."""
    if len(u) > len(t) and u.contains(t):
        return True
    return any(sp.tail and (sp.tail == t or _occurs_in_context(t, sp.tail)) for sp in set(u))


def explore(m: Mbrs, start: Term, node_budget: int = NODE_BUDGET, lookback: int = 6) -> StateGraph:
    """Breadth-first closure of ``start`` under the one-step relation.

    Stops early, with ``infinite`` set, when a term reaches itself inside a
    larger context within ``lookback`` steps: that derivation can then be
    repeated forever inside ever larger terms.
    """
    if node_budget < 1:
        raise ValueError("node budget must be positive")
    g = StateGraph(start, {start})
    queue = deque([start])
    while queue:
        t = queue.popleft()
        for rid, u, _ in m.steps(t):
            g.edges.append((t, rid, u))
            if u in g.nodes:
                continue
            if len(g.nodes) >= node_budget or u.size() > MAX_SIZE or u.depth() > MAX_NESTING:
                g.frontier = [t, *queue]
                return g
            g.nodes.add(u)
            g.parent[u] = (t, rid)
            queue.append(u)
            a = t
            for _ in range(lookback):
                if _occurs_in_context(a, u):
                    g.infinite = True
                    g.frontier = [t, *queue]
                    return g
                if a == start:
                    break
                a = g.parent[a][0]
    g.closed = True
    return g


def _start(x) -> Term:
    return x if isinstance(x, Term) else var(x)


def _product_search(m, start, update, goal, node_budget, depth_bound=None):
    """BFS over (term, tag) pairs.  Returns (hit, parents, truncated)."""
    root = (start, update(None, None))
    parents = {root: None}
    queue = deque([(root, 0)])
    truncated = False
    while queue:
        node, depth = queue.popleft()
        if goal(node):
            return node, parents, truncated
        if depth_bound is not None and depth >= depth_bound:
            if m.steps(node[0]):
                truncated = True
            continue
        for rid, u, _ in m.steps(node[0]):
            nxt = (u, update(node[1], rid))
            if nxt in parents:
                continue
            if len(parents) >= node_budget:
                truncated = True
                continue
            parents[nxt] = (node, rid)
            queue.append((nxt, depth + 1))
    return None, parents, truncated


def _product_path(parents, node) -> Derivation:
    steps = []
    while parents[node] is not None:
        prev, rid = parents[node]
        steps.append((rid, node[0]))
        node = prev
    return Derivation(node[0], tuple(reversed(steps)))


def bf_finite_accepting(m: Mbrs, x, k, depth_bound: int = DEPTH_BUDGET, node_budget: int = NODE_BUDGET):
    """Search for a finite derivation from ``x`` whose maximal is exactly ``k``."""
    k = frozenset(k)
    mk = m.within(k)
    cmp = mk.cmp

    def update(tag, rid):
        return frozenset() if rid is None else tag | cmp[rid]

    hit, parents, truncated = _product_search(
        mk, _start(x), update, lambda n: n[1] == k, node_budget, depth_bound
    )
    if hit is not None:
        return yes(_product_path(parents, hit), "finite derivation found")
    if truncated:
        return unknown(f"search truncated (depth {depth_bound}, {node_budget} nodes)")
    return no("product search closed")


def bf_reachable(m: Mbrs, x, target: Term, depth_bound: int = DEPTH_BUDGET, node_budget: int = NODE_BUDGET):
    """Search for a derivation from ``x`` to exactly ``target``."""
    hit, parents, truncated = _product_search(
        m, _start(x), lambda tag, rid: None, lambda n: n[0] == target, node_budget, depth_bound
    )
    if hit is not None:
        return yes(_product_path(parents, hit), "target reached")
    if truncated:
        return unknown(f"search truncated (depth {depth_bound}, {node_budget} nodes)")
    return no("search closed")


# ------------------------------------------------------------ lasso search


def _digraph(edges, keep) -> nx.DiGraph:
    g = nx.DiGraph()
    for t, rid, u in edges:
        if keep(rid):
            if g.has_edge(t, u):
                g[t][u]["rules"].append(rid)
            else:
                g.add_edge(t, u, rules=[rid])
    return g


def _nontrivial(g: nx.DiGraph, comp) -> bool:
    if len(comp) > 1:
        return True
    (n,) = comp
    return g.has_edge(n, n)


def _path(g: nx.DiGraph, src, dst) -> list[tuple[str, Term]]:
    """Shortest path inside ``g`` as (rule, term) steps (empty if src == dst)."""
    nodes = nx.shortest_path(g, src, dst)
    return [(g[a][b]["rules"][0], b) for a, b in zip(nodes, nodes[1:])]


def covering_cycle(g: nx.DiGraph, t, wanted, classes) -> list[tuple[str, Term]]:
    """A nonempty closed walk from ``t`` inside the strongly connected ``g``
    using, for every element of ``wanted``, some edge rule whose class
    (``classes[rule]``) contains it."""
    steps: list[tuple[str, Term]] = []
    have: set = set()
    cur = t
    for want in sorted(wanted, key=str):
        if want in have:
            continue
        a, b, rid = next(
            (a, b, r)
            for a, b, data in sorted(g.edges(data=True), key=lambda e: (str(e[0]), str(e[1])))
            for r in data["rules"]
            if want in classes[r]
        )
        steps += _path(g, cur, a)
        steps.append((rid, b))
        cur = b
        for r, _ in steps:
            have |= classes[r]
    steps += _path(g, cur, t)
    if not steps:
        b = next(iter(sorted(g.successors(t), key=str)))
        steps = [(g[t][b]["rules"][0], b)] + _path(g, b, t)
    return steps


def bf_infinite_accepting(m: Mbrs, x, k, kw, node_budget: int = NODE_BUDGET):
    """Generalized-Büchi search for a (k, kw)-accepting infinite derivation."""
    k, kw = frozenset(k), frozenset(kw)
    if not kw <= k:
        return no("infinitely-often set is not contained in the finite set")
    mk = m.within(k)
    start = _start(x)
    graph = explore(mk, start, node_budget)
    if not graph.closed:
        return unknown(f"reachable graph exceeds {node_budget} nodes")
    cmp = mk.cmp
    inner = _digraph(graph.edges, lambda rid: cmp[rid] <= kw)
    targets = {}
    for comp in nx.strongly_connected_components(inner):
        if not _nontrivial(inner, comp):
            continue
        sub = inner.subgraph(comp)
        covered = frozenset().union(*(cmp[r] for _, _, d in sub.edges(data=True) for r in d["rules"]))
        if kw <= covered:
            for t in comp:
                targets[t] = sub

    def update(tag, rid):
        return frozenset() if rid is None else tag | cmp[rid]

    hit, parents, _ = _product_search(
        mk, start, update, lambda n: n[1] == k and n[0] in targets, 10 * node_budget
    )
    if hit is None:
        return no("no accepting cycle in the closed graph")
    t = hit[0]
    stem = _product_path(parents, hit)
    cycle = Derivation(t, tuple(covering_cycle(targets[t], t, kw, cmp)))
    return yes(LassoWitness(stem, cycle), "accepting lasso in the closed graph")


# ------------------------------------------------------------ model check


def _label(m: Mbrs, rid: str) -> str:
    lab = m.rule(rid).label
    return lab.name if isinstance(lab, Action) else str(lab)


def bf_model_check(m: Mbrs, x, phi: Formula, node_budget: int = NODE_BUDGET):
    """Does every infinite run from ``x`` satisfy ``phi``?

    On a closed graph, satisfaction of a fragment formula by a run depends
    only on which actions occur at all and which occur infinitely often.
    Every achievable pair of those sets is enumerated, realized by a
    concrete lasso, and the formula is evaluated on that lasso.
    """
    if not in_fragment(desugar(phi)):
        raise NotInFragment(f"{show(phi)} is outside the fragment")
    start = _start(x)
    graph = explore(m, start, node_budget)
    if not graph.closed:
        return unknown(f"reachable graph exceeds {node_budget} nodes")
    label = {r.id: _label(m, r.id) for r in m.rules}
    singles = {rid: frozenset({a}) for rid, a in label.items()}
    used = sorted({label[rid] for _, rid, _ in graph.edges})

    def update(tag, rid):
        return frozenset() if rid is None else tag | {label[rid]}

    _, parents, _ = _product_search(m, start, update, lambda n: False, 10**9)
    checked = set()
    for inf in subsets(used):
        if not inf:
            continue
        sub = _digraph(graph.edges, lambda rid: label[rid] in inf)
        for comp in nx.strongly_connected_components(sub):
            if not _nontrivial(sub, comp):
                continue
            scc = sub.subgraph(comp)
            labels = {label[r] for _, _, d in scc.edges(data=True) for r in d["rules"]}
            if labels != set(inf):
                continue
            for node in sorted((n for n in parents if n[0] in comp), key=lambda n: (len(n[1]), str(n))):
                cls = (node[1] | inf, inf)
                if cls in checked:
                    continue
                checked.add(cls)
                stem = _product_path(parents, node)
                cycle = Derivation(node[0], tuple(covering_cycle(scc, node[0], inf, singles)))
                run = LassoRun(
                    tuple(label[r] for r in stem.rules), tuple(label[r] for r in cycle.rules)
                )
                if not eval_formula(phi, run):
                    cert = {"run": {"stem": list(run.stem), "cycle": list(run.cycle)}}
                    return Verdict(NO, LassoWitness(stem, cycle), "violating run found", (cert,))
    return yes(None, f"{len(checked)} run classes satisfy the formula")

