"""Worklist solver with iteration orders, cycle detection, DP and PIP."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from .config import Cycle, SolverConfig
from .graph import (
    DOUBLE, ESC, EXT_TARGET, IMPORTED, LSCALAR, PEXT, SSCALAR, ConstraintGraph,
)
from .offline import collapse_copy_cycles, hcd_offline
from .orders import make_order

_l = logging.getLogger(__name__)

_EMPTY: frozenset = frozenset()


@dataclass
class WorklistTrace:
    """Per-solve counters beyond the headline statistics."""

    visits: int = 0
    double_visits: dict[int, int] = field(default_factory=dict)
    edges_skipped: int = 0
    cycles_found: int = 0
    hcd_entries: int = 0


def solve_worklist(g: ConstraintGraph, cfg: SolverConfig, max_visits: Optional[int] = None) -> WorklistTrace:
    """Run the worklist to a fixpoint, or stop early after ``max_visits`` visits."""
    ip = g.omega is None
    pip = cfg.pip
    dp = cfg.dp
    ocd = cfg.cycle is Cycle.OCD
    lcd = cfg.cycle.lcd
    hcd = cfg.cycle.hcd
    if pip and not ip:
        raise ValueError("PIP needs an IP graph")

    n_nodes = len(g)
    find = g.find
    sol, succ, loads, stores, calls, funcs = g.sol, g.succ, g.loads, g.stores, g.calls, g.funcs
    flags, compat, parent = g.flags, g.compat, g.parent
    omega = g.omega  # None in IP: an absent slot then turns into a flag
    trace = WorklistTrace()
    W = make_order(cfg.order, g)
    push = W.push

    delta: list[Optional[set]] = []
    seen: list[int] = []
    if dp:
        delta = [set(s) if s is not None else None for s in sol]
        seen = [0] * n_nodes
    sampled: set[tuple[int, int]] = set()
    table: dict[int, list[int]] = {}

    # -- helpers --------------------------------------------------------------

    def mark(v: int, flag: int) -> None:
        r = find(v)
        if flags[r] & flag != flag:
            flags[r] |= flag
            push(r)

    def mark_external(x: int) -> None:
        # x becomes externally accessible: InΩ plus CalledByΩ for functions
        flags[x] |= EXT_TARGET
        if compat[x]:
            mark(x, DOUBLE)
        for r, args in funcs[x]:
            if r is not None:
                mark(r, ESC)
            for a in args:
                if a is not None:
                    mark(a, PEXT)

    def call_external(r, args) -> None:
        if r is not None:
            mark(r, PEXT)
        for a in args:
            if a is not None:
                mark(a, ESC)

    def doubly(r: int) -> bool:
        return flags[r] & DOUBLE == DOUBLE

    def merge(a: int, b: int) -> Optional[int]:
        ra, rb = find(a), find(b)
        if ra == rb:
            return ra
        if pip and (doubly(ra) or doubly(rb)):
            # keeps doubly-flagged nodes at a single visit with empty Sol_e
            return None
        r = g.unify(ra, rb)
        other = rb if r == ra else ra
        if dp:
            delta[r] = set(sol[r])
            delta[other] = None
            seen[r] = 0
        if hcd and other in table:
            table.setdefault(r, []).extend(table.pop(other))
        push(r)
        return r

    def propagate(s: int, d: int, pts) -> None:
        changed = False
        if pts:
            target = sol[d]
            new = pts - target
            if new:
                target |= new
                if dp:
                    delta[d] |= new
                changed = True
        if ip and flags[s] & PEXT and not flags[d] & PEXT:
            flags[d] |= PEXT
            changed = True
        if changed:
            push(d)

    def cycle_members(start: int, target: int) -> Optional[list[int]]:
        """Nodes on copy paths start ~> target, or None if there is none."""
        reach = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for t in succ[v]:
                t = find(t)
                if t not in reach:
                    reach.add(t)
                    stack.append(t)
        if target not in reach:
            return None
        preds: dict[int, list[int]] = {}
        for v in reach:
            for t in succ[v]:
                t = find(t)
                if t in reach:
                    preds.setdefault(t, []).append(v)
        on_path = {target}
        stack = [target]
        while stack:
            v = stack.pop()
            for u in preds.get(v, ()):
                if u not in on_path:
                    on_path.add(u)
                    stack.append(u)
        return sorted(on_path)

    def collapse(members: list[int]) -> None:
        trace.cycles_found += 1
        for v in members[1:]:
            merge(members[0], v)

    def add_edge(src: Optional[int], dst: Optional[int]) -> None:
        # dst ⊇ src; None stands for the implicit external region
        if src is None:
            if dst is not None:
                mark(dst, PEXT)
            return
        if dst is None:
            mark(src, ESC)
            return
        s, d = find(src), find(dst)
        if s == d:
            return
        if pip:
            if flags[d] & ESC and not flags[s] & ESC:
                flags[s] |= ESC
                push(s)
            if flags[s] & ESC and flags[d] & PEXT:
                trace.edges_skipped += 1
                return
        out = succ[s]
        if d in out:
            return
        out.add(d)
        g.edges_added += 1
        propagate(s, d, sol[s])
        if ocd:
            members = cycle_members(d, s)
            if members:
                collapse(members)

    # -- initialisation -------------------------------------------------------

    if ocd:
        trace.cycles_found += len(collapse_copy_cycles(g, merge))
    if hcd:
        for v, w in hcd_offline(g).items():
            table.setdefault(find(v), []).append(w)
        trace.hcd_entries = len(table)
    for v in range(n_nodes):
        if g.parent[v] == v:
            push(v)
    if ip:
        for x in range(n_nodes):
            if flags[x] & EXT_TARGET:
                mark_external(x)

    # -- main loop --------------------------------------------------------------

    visits = 0
    double_visits = trace.double_visits
    while W:
        if visits == max_visits:
            break
        v = W.pop()
        n = find(v)
        if n != v:
            # stale entry: merge() already queued the representative
            continue
        visits += 1
        if pip and doubly(n):
            double_visits[n] = double_visits.get(n, 0) + 1

        if hcd and n in table:
            for w in list(table.get(n, ())):
                for x in list(sol[find(n)]):
                    px = x if compat[x] else omega
                    if px is not None:
                        merge(px, w)
            n = find(n)

        if pip and not flags[n] & ESC:
            for t in succ[n]:
                if flags[find(t)] & ESC:
                    flags[n] |= ESC
                    break

        cur = sol[n]
        if dp:
            pts = delta[n]
            delta[n] = set()
            fresh = flags[n] & ~seen[n]
            seen[n] = flags[n]
        else:
            pts = cur
            fresh = 0

        if ip and flags[n] & ESC:
            for x in (cur if fresh & ESC else pts):
                if not flags[x] & EXT_TARGET:
                    mark_external(x)
        if pip and doubly(n) and cur:
            cur.clear()
            pts = _EMPTY
            if dp:
                delta[n] = set()

        lcd_candidates = []
        dead = []
        esc_n = pip and flags[n] & ESC
        for t in succ[n]:
            d = t if parent[t] == t else find(t)
            if d == n:
                dead.append(t)
                continue
            if esc_n and flags[d] & PEXT:
                dead.append(t)
                g.edges_removed += 1
                continue
            if lcd and cur and (n, d) not in sampled and cur == sol[d]:
                sampled.add((n, d))
                lcd_candidates.append((n, d))
            propagate(n, d, pts)
        if dead:
            succ[n].difference_update(dead)

        # edges already present are filtered here; add_edge re-checks the rest
        new_edges: list[tuple[Optional[int], Optional[int]]] = []
        pext = ip and flags[n] & PEXT
        for q in stores[n]:
            qs = q if parent[q] == q else find(q)
            out = succ[qs]
            for x in pts:
                if compat[x]:
                    d = x if parent[x] == x else find(x)
                    if d != qs and d not in out:
                        new_edges.append((q, x))
                else:
                    new_edges.append((q, omega))
            if pext:
                mark(q, ESC)
        if ip and flags[n] & SSCALAR:
            for x in (cur if fresh & SSCALAR else pts):
                if compat[x]:
                    mark(x, PEXT)
        for p in loads[n]:
            pd = p if parent[p] == p else find(p)
            for x in pts:
                if compat[x]:
                    src = x if parent[x] == x else find(x)
                    if src != pd and pd not in succ[src]:
                        new_edges.append((x, p))
                else:
                    new_edges.append((omega, p))
            if pext:
                mark(p, PEXT)
        if ip and flags[n] & LSCALAR:
            for x in (cur if fresh & LSCALAR else pts):
                if compat[x]:
                    mark(x, ESC)
        for r, args in calls[n]:
            r_slot = omega if r is None else r
            for x in pts:
                for fr, fargs in funcs[x]:
                    new_edges.append((omega if fr is None else fr, r_slot))
                    nf = len(fargs)
                    for i, a in enumerate(args):
                        a_slot = omega if a is None else a
                        if i < nf:
                            f_slot = fargs[i]
                            new_edges.append((a_slot, omega if f_slot is None else f_slot))
                        else:
                            new_edges.append((a_slot, omega))
                if ip and flags[x] & IMPORTED:
                    call_external(r, args)
            if ip and flags[n] & PEXT:
                call_external(r, args)

        for src, dst in new_edges:
            add_edge(src, dst)

        for s, d in lcd_candidates:
            s, d = find(s), find(d)
            if s != d:
                members = cycle_members(d, s)
                if members:
                    collapse(members)

    trace.visits = visits
    _l.debug("worklist done: %d visits, %d edges, %d unifications",
             visits, g.edges_added, g.unifications)
    return trace
