"""Naive fixpoint solver: apply every inference rule until nothing changes.

This is deliberately simple and serves as the reference for all worklist
configurations.  It reads the indexed graph (after any offline unification)
but keeps its own plain-set state and writes the result back at the end.
"""
from __future__ import annotations

from typing import Optional

from .graph import (
    DOUBLE, ESC, EXT_TARGET, IMPORTED, LSCALAR, PEXT, SSCALAR, ConstraintGraph,
)


class NaiveResult:
    """Facts inferred by the naive solver, as original-id pairs."""

    def __init__(self):
        self.base: set[tuple[int, int]] = set()   # (p, x): p ⊇ {x}
        self.edges: set[tuple[int, int]] = set()  # (src, dst): dst ⊇ src
        self.passes = 0


def solve_naive(g: ConstraintGraph) -> NaiveResult:
    find = g.find
    nodes = g.reps()
    ip = g.omega is None
    compat = g.compat

    def node(v: int) -> Optional[int]:
        p = g.pv(v)
        return None if p is None else find(p)

    sol = {n: set(g.sol[n]) for n in nodes}
    initial = {n: set(s) for n, s in sol.items()}
    edges: set[tuple[int, int]] = set()
    for n in nodes:
        for t in g.succ[n]:
            t = find(t)
            if t != n:
                edges.add((n, t))
    static_edges = set(edges)
    loads = [(n, find(p)) for n in nodes for p in g.loads[n]]      # p ⊇ *n
    stores = [(n, find(q)) for n in nodes for q in g.stores[n]]    # *n ⊇ q
    calls = [(n, r, args) for n in nodes for r, args in g.calls[n]]
    funcs = g.funcs
    ptr_flags = {n: g.flags[n] for n in nodes}
    loc_flags = [f & (EXT_TARGET | IMPORTED) for f in g.flags]

    state = {"changed": False}

    def add_edge(src: Optional[int], dst: Optional[int]) -> None:
        if src is None and dst is None:
            return
        if src is None:
            mark(dst, PEXT)
        elif dst is None:
            mark(src, ESC)
        elif src != dst and (src, dst) not in edges:
            edges.add((src, dst))
            state["changed"] = True

    def mark(n: int, flag: int) -> None:
        if ptr_flags[n] & flag != flag:
            ptr_flags[n] |= flag
            state["changed"] = True

    def mark_location(x: int) -> None:
        if not loc_flags[x] & EXT_TARGET:
            loc_flags[x] |= EXT_TARGET
            state["changed"] = True

    omega = None if ip else find(g.omega)

    def slot(v: Optional[int]) -> Optional[int]:
        # an absent call slot holds a scalar, which behaves like Ω
        return omega if v is None else node(v)

    def call_external(r, args):
        if r is not None:
            mark(r, PEXT)
        for a in args:
            if a is not None:
                mark(a, ESC)

    passes = 0
    while True:
        state["changed"] = False
        for src, dst in list(edges):
            before = len(sol[dst])
            sol[dst] |= sol[src]
            if len(sol[dst]) != before:
                state["changed"] = True
            if ip and ptr_flags[src] & PEXT:
                mark(dst, PEXT)
        for n, p in loads:
            for x in list(sol[n]):
                add_edge(node(x), p)
            if ip and ptr_flags[n] & PEXT:
                mark(p, PEXT)
        for n, q in stores:
            for x in list(sol[n]):
                add_edge(q, node(x))
            if ip and ptr_flags[n] & PEXT:
                mark(q, ESC)
        for n, r, args in calls:
            r = slot(r)
            args = [slot(a) for a in args]
            for x in list(sol[n]):
                for fr, fargs in funcs[x]:
                    add_edge(slot(fr), r)
                    for i, a in enumerate(args):
                        # actuals beyond the formals escape
                        add_edge(a, slot(fargs[i]) if i < len(fargs) else omega)
                if ip and loc_flags[x] & IMPORTED:
                    call_external(r, args)
            if ip and ptr_flags[n] & PEXT:
                call_external(r, args)
        if ip:
            for n in nodes:
                f = ptr_flags[n]
                if f & ESC:
                    for x in sol[n]:
                        mark_location(x)
                if f & SSCALAR:
                    for x in sol[n]:
                        if compat[x]:
                            mark(find(x), PEXT)
                if f & LSCALAR:
                    for x in sol[n]:
                        if compat[x]:
                            mark(find(x), ESC)
            for x, f in enumerate(loc_flags):
                if f & EXT_TARGET:
                    if compat[x]:
                        mark(find(x), DOUBLE)
                    for fr, fargs in funcs[x]:
                        if fr is not None:
                            mark(find(fr), ESC)
                        for a in fargs:
                            if a is not None:
                                mark(find(a), PEXT)
        passes += 1
        if not state["changed"]:
            break

    result = NaiveResult()
    result.passes = passes
    for n in nodes:
        g.sol[n] = sol[n]
        g.flags[n] = (g.flags[n] & (EXT_TARGET | IMPORTED)) | ptr_flags[n]
        for x in sol[n] - initial[n]:
            result.base.add((n, x))
    for x, f in enumerate(loc_flags):
        if f & EXT_TARGET:
            g.flags[x] |= EXT_TARGET
    for src, dst in edges - static_edges:
        result.edges.add((src, dst))
        g.succ[src].add(dst)
    g.edges_added += len(edges - static_edges)
    return result
