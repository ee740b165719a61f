"""Exact procedures for sequential systems made of push and rename rules.

With only ``X -> Y.(Z)`` and ``X -> Y`` rules, the one rewritable position
of a sequential term is its innermost variable, and anything buried under
a push is never touched again.  So the behaviour is captured by a finite
graph on innermost variables: a push X -> Y.(Z) moves the top from X to Z,
a rename X -> Y moves it from X to Y.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import networkx as nx

from .system import Derivation, Mbrs
from .terms import Term, compose, var
from .witness import LassoWitness, no, yes


class UnsupportedShape(ValueError):
    pass


@dataclass(frozen=True)
class TopEdge:
    rid: str
    src: str
    dst: str
    rhs: Term


def top_edges(ms: Mbrs) -> list[TopEdge]:
    out = []
    for r in ms.rules:
        match r.shape:
            case "push":
                out.append(TopEdge(r.id, r.lhs[0].head, r.rhs[0].tail[0].head, r.rhs))
            case "rename":
                out.append(TopEdge(r.id, r.lhs[0].head, r.rhs[0].head, r.rhs))
            case other:
                raise UnsupportedShape(f"rule {r.id} has shape {other or 'general'}; only push and rename are supported")
    return out


def _realize(start: str, edges: list[TopEdge], base: Term | None = None) -> Derivation:
    cur = var(start) if base is None else base
    first = cur
    steps = []
    for e in edges:
        cur = compose(cur, e.rhs)
        steps.append((e.rid, cur))
    return Derivation(first, tuple(steps))


def _name(x) -> str:
    if isinstance(x, Term):
        if len(x) != 1 or x[0].tail:
            raise ValueError(f"{x} is not a variable")
        return x[0].head
    return x


def _search(ms: Mbrs, x: str, k: frozenset, goal):
    """BFS on (top variable, touched) restricted to rules with cmp within k."""
    cmp = ms.cmp
    edges = [e for e in top_edges(ms) if cmp[e.rid] <= k]
    out: dict[str, list[TopEdge]] = {}
    for e in edges:
        out.setdefault(e.src, []).append(e)
    root = (x, frozenset())
    parents = {root: None}
    queue = deque([root])
    while queue:
        node = queue.popleft()
        if goal(node):
            path = []
            n = node
            while parents[n] is not None:
                n, e = parents[n]
                path.append(e)
            return node, path[::-1], parents, edges
        for e in out.get(node[0], ()):
            nxt = (e.dst, node[1] | cmp[e.rid])
            if nxt not in parents:
                parents[nxt] = (node, e)
                queue.append(nxt)
    return None, None, parents, edges


def seq_reachable_var(ms: Mbrs, x, y, k):
    """Does X reach a term whose innermost variable is Y, touching exactly k?"""
    x, y, k = _name(x), _name(y), frozenset(k)
    hit, path, _, _ = _search(ms, x, k, lambda n: n == (y, k))
    if hit is None:
        return no("not reachable in the top-symbol graph")
    return yes(_realize(x, path))


def seq_infinite_accepting(ms: Mbrs, x, k, kw):
    """A (k, kw)-accepting infinite derivation from X."""
    from .oracle import covering_cycle

    x, k, kw = _name(x), frozenset(k), frozenset(kw)
    if not kw <= k:
        return no("infinitely-often set is not contained in the finite set")
    cmp = ms.cmp
    g = nx.DiGraph()
    for e in top_edges(ms):
        if cmp[e.rid] <= kw:
            if g.has_edge(e.src, e.dst):
                g[e.src][e.dst]["rules"].append(e.rid)
            else:
                g.add_edge(e.src, e.dst, rules=[e.rid])
    loops = {}
    for comp in nx.strongly_connected_components(g):
        sub = g.subgraph(comp)
        if sub.number_of_edges() == 0:
            continue
        covered = frozenset().union(*(cmp[r] for _, _, d in sub.edges(data=True) for r in d["rules"]))
        if kw <= covered:
            for v in comp:
                loops[v] = sub
    hit, path, _, _ = _search(ms, x, k, lambda n: n[1] == k and n[0] in loops)
    if hit is None:
        return no("no accepting cycle in the top-symbol graph")
    v = hit[0]
    by = {r.id: r for r in ms.rules}
    cyc_steps = covering_cycle(loops[v], v, kw, cmp)
    stem = _realize(x, path)
    cyc_edges = []
    cur = v
    for rid, dst in cyc_steps:
        cyc_edges.append(TopEdge(rid, cur, dst, by[rid].rhs))
        cur = dst
    cycle = _realize(v, cyc_edges, base=stem.end)
    return yes(LassoWitness(stem, cycle), "accepting cycle of top variables")


def top_path(ms: Mbrs, x, y, k) -> list[TopEdge]:
    """Shortest top-graph path from X to a term with innermost Y (rules within k)."""
    x, y = _name(x), _name(y)
    hit, path, _, _ = _search(ms, x, frozenset(k), lambda n: n[0] == y)
    if hit is None:
        raise ValueError(f"{y} is not reachable from {x}")
    return path


def top_reachable(ms: Mbrs, x, k=None) -> set[str]:
    """Variables that can become innermost from X (any touched set within k)."""
    x = _name(x)
    k = frozenset(range(1, ms.n + 1)) if k is None else frozenset(k)
    _, _, parents, _ = _search(ms, x, k, lambda n: False)
    return {v for v, _ in parents}


__all__ = ["seq_reachable_var", "seq_infinite_accepting", "top_reachable", "top_path", "top_edges", "UnsupportedShape"]
