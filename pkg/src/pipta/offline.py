"""Offline passes run before solving: SCCs, OVS and the HCD table."""
from __future__ import annotations

from typing import Callable, Iterable

from .graph import PEXT, ConstraintGraph


def strongly_connected(nodes: Iterable[int], succ: Callable[[int], Iterable[int]]) -> list[list[int]]:
    """Iterative Tarjan; returns components in reverse topological order."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    stack: list[int] = []
    out: list[list[int]] = []
    done = -1  # low value of nodes already assigned to a component
    for root in nodes:
        if root in index:
            continue
        index[root] = low[root] = len(index)
        stack.append(root)
        work = [(root, iter(succ(root)))]
        while work:
            v, it = work[-1]
            lv = low[v]
            for t in it:
                it_ = index.get(t)
                if it_ is None:
                    low[v] = lv
                    index[t] = low[t] = len(index)
                    stack.append(t)
                    work.append((t, iter(succ(t))))
                    break
                lt = low[t]
                if lt != done and it_ < lv:
                    lv = it_
            else:
                low[v] = lv
                work.pop()
                if work:
                    parent = work[-1][0]
                    if lv < low[parent]:
                        low[parent] = lv
                if lv == index[v]:
                    i = len(stack) - 1
                    while stack[i] != v:
                        i -= 1
                    comp = stack[i:]
                    del stack[i:]
                    for t in comp:
                        low[t] = done
                    out.append(comp)
    return out


def _copy_succ(g: ConstraintGraph) -> Callable[[int], list[int]]:
    find, succ = g.find, g.succ
    return lambda v: [find(t) for t in succ[v]]


def collapse_copy_cycles(g: ConstraintGraph, merge=None) -> list[tuple[int, int]]:
    """Unify every strongly connected component of the copy-edge graph."""
    merge = merge or g.unify
    out = []
    for comp in strongly_connected(g.reps(), _copy_succ(g)):
        if len(comp) < 2:
            continue
        comp.sort()
        for v in comp[1:]:
            r = merge(comp[0], v)
            if r is not None:
                out.append((v, g.find(comp[0])))
    return out


def ovs_preprocess(g: ConstraintGraph) -> list[tuple[int, int]]:
    """Offline variable substitution on an unsolved graph.

    Two reductions, both preserving every canonical set:
    copy-edge cycles are collapsed, then a register whose only possible
    source of pointees is a single incoming copy edge ``q -> p`` is merged
    into ``q``.  Registers that are load destinations, call slots, share a class
    with a memory cell, carry a base constraint or points-to-external are never merged this way, since
    those can gain pointees from elsewhere during solving.
    Returns ``(member, representative)`` pairs.
    """
    out = collapse_copy_cycles(g)
    find = g.find
    n = len(g)
    module_vars = g.info
    pinned = bytearray(n)
    for v in range(n):
        if module_vars[v].is_memory:
            pinned[find(v)] = 1
        if g.loads[v] is not None:
            for p in g.loads[v]:
                pinned[find(p)] = 1
        for r, args in g.funcs[v]:
            for s in (r, *args):
                if s is not None:
                    pinned[find(s)] = 1
        if g.calls[v] is not None:
            for r, args in g.calls[v]:
                if r is not None:
                    pinned[find(r)] = 1
    incoming: dict[int, list[int]] = {}
    for v in g.reps():
        for t in g.succ[v]:
            t = find(t)
            if t != v:
                incoming.setdefault(t, []).append(v)
    for p in sorted(incoming):
        srcs = set(incoming[p])
        if len(srcs) != 1 or pinned[p] or g.parent[p] != p:
            continue
        if g.sol[p] or g.flags[p] & PEXT:
            continue
        q = find(srcs.pop())
        if q == p:
            continue
        g.unify(p, q)
        out.append((p, find(q)))
    return out


def hcd_offline(g: ConstraintGraph) -> dict[int, int]:
    """Build the hybrid cycle detection table ``v -> w``.

    The offline graph has one node per variable plus a dereference node
    ``*v`` for every variable with a load or store.  When ``*v`` shares a
    component with concrete node ``w`` and no other dereference node, every
    pointee ``x`` of ``v`` lies on a copy cycle with ``w``.
    """
    n = len(g)
    find = g.find
    edges: dict[int, list[int]] = {}
    for v in g.reps():
        out = [find(t) for t in g.succ[v]]
        for q in g.stores[v]:  # *v ⊇ q : q -> *v
            edges.setdefault(find(q), []).append(n + v)
        if g.loads[v]:
            edges[n + v] = [find(p) for p in g.loads[v]]  # p ⊇ *v : *v -> p
        edges.setdefault(v, []).extend(out)
    nodes = sorted(edges)
    table: dict[int, int] = {}
    for comp in strongly_connected(nodes, lambda v: edges.get(v, ())):
        derefs = [v - n for v in comp if v >= n]
        concrete = sorted(v for v in comp if v < n)
        if len(derefs) == 1 and concrete:
            table[derefs[0]] = concrete[0]
    return table
