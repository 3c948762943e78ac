"""Solver state: indexed constraint graph, union-find and canonical solutions."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .constraints import (
    Base, Call, ConstraintModule, Flag, Function, Kind, Load, POINTER_FLAGS,
    Simple, Store, VarInfo,
)

EXTERNAL = -1
EXTERNAL_NAME = "EXTERNAL"
OMEGA_NAME = "<omega>"

PEXT = int(Flag.POINTS_EXT)
ESC = int(Flag.POINTEES_ESCAPE)
DOUBLE = PEXT | ESC
EXT_TARGET = int(Flag.EXT_TARGET)
IMPORTED = int(Flag.IMPORTED_FUNC)
SSCALAR = int(Flag.STORE_SCALAR)
LSCALAR = int(Flag.LOAD_SCALAR)
_PTR_FLAGS = int(POINTER_FLAGS)


class Representation(enum.Enum):
    EP = "EP"
    IP = "IP"


class ConstraintGraph:
    """Mutable solver state.

    Every per-node index (``sol``, ``succ``, ``loads``, ``stores``, ``calls``)
    is owned by a union-find representative; entries stored inside them are
    plain variable ids and must be passed through :meth:`find` on use.
    Function constraints are keyed by the *location* ``f`` and are never
    merged, because a pointee is a location, not a pointer class.

    Pointer-incompatible variables never hold a solution set.  Wherever one
    appears in a pointer position it stands for the external region: in EP
    it is replaced by the Ω variable, in IP the operation turns into the
    matching flag on the compatible side (see :meth:`pv`).
    """

    def __init__(self, module: ConstraintModule, rep: Representation):
        self.module = module
        self.rep = rep
        self.info: list[VarInfo] = list(module.vars)
        self.omega: Optional[int] = None
        if rep is Representation.EP:
            self.omega = len(self.info)
            self.info.append(VarInfo(OMEGA_NAME, Kind.MEMORY, True))
        n = len(self.info)
        self.n_orig = len(module.vars)
        self.compat = [v.pointer_compatible for v in self.info]
        self.parent = list(range(n))
        self.rank = [0] * n
        self.sol: list[Optional[set]] = [set() for _ in range(n)]
        self.succ: list[Optional[set]] = [set() for _ in range(n)]
        self.loads: list[Optional[set]] = [set() for _ in range(n)]
        self.stores: list[Optional[set]] = [set() for _ in range(n)]
        self.calls: list[Optional[list]] = [[] for _ in range(n)]
        self.funcs: list[list] = [[] for _ in range(n)]
        self.flags = [0] * n
        self.arity = 0
        self.reported: list[int] = []
        self.edges_added = 0
        self.edges_removed = 0
        self.unifications = 0

    def __len__(self) -> int:
        return len(self.info)

    # union-find -------------------------------------------------------------

    def find(self, v: int) -> int:
        parent = self.parent
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    def reps(self) -> list[int]:
        return [v for v in range(len(self.parent)) if self.parent[v] == v]

    def pv(self, v: int) -> Optional[int]:
        """Pointer view of ``v``: itself, Ω (EP) or None (IP) if incompatible."""
        return v if self.compat[v] else self.omega

    def unify(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        sol = self.sol
        if len(sol[rb]) > len(sol[ra]):
            sol[ra], sol[rb] = sol[rb], sol[ra]
        sol[ra] |= sol[rb]
        for index in (self.succ, self.loads, self.stores):
            index[ra] |= index[rb]
            index[rb] = None
        self.succ[ra].discard(ra)
        self.succ[ra].discard(rb)
        self.calls[ra].extend(self.calls[rb])
        sol[rb] = self.calls[rb] = None
        self.flags[ra] |= self.flags[rb] & _PTR_FLAGS
        self.unifications += 1
        return ra

    # flags ------------------------------------------------------------------

    def pointer_flags(self, v: int) -> int:
        return self.flags[self.find(v)] & _PTR_FLAGS

    def has(self, v: int, flag: int) -> bool:
        """Query a flag; location flags on ``v`` itself, pointer flags on its class."""
        if flag & _PTR_FLAGS:
            return bool(self.flags[self.find(v)] & flag)
        return bool(self.flags[v] & flag)

    # edges --------------------------------------------------------------------

    def edge_count(self) -> int:
        return sum(len(s) for s in self.succ if s)

    def explicit_pointees(self) -> int:
        return sum(len(self.sol[r]) for r in self.reps())

    def max_arity(self) -> int:
        return self.arity


def _static_edge(g: ConstraintGraph, src: int, dst: int) -> None:
    """Record dst ⊇ src from the module, resolving incompatible endpoints."""
    s, d = g.pv(src), g.pv(dst)
    if s is None and d is None:
        return
    if s is None:
        g.flags[d] |= PEXT
    elif d is None:
        g.flags[s] |= ESC
    elif s != d:
        g.succ[s].add(d)


def build_graph(m: ConstraintModule, rep: Representation | str) -> ConstraintGraph:
    """Index a constraint module for solving.

    In EP every flag is rewritten into base-language constraints on a fresh
    Ω variable; in IP flags are kept as they are.  The index is cached on
    the module, so rebuilding for repeated solves only copies it.
    """
    rep = Representation(rep)
    cache = m.__dict__.setdefault("_graph_cache", {})
    key = (rep, m.version)
    template = cache.get(key)
    if template is None:
        cache.clear()
        template = cache[key] = _index(m, rep)
    g = ConstraintGraph(m, rep)
    g.sol = [set(s) for s in template.sol]
    g.succ = [set(s) for s in template.succ]
    g.loads = [set(s) for s in template.loads]
    g.stores = [set(s) for s in template.stores]
    g.calls = [list(c) for c in template.calls]
    g.funcs = template.funcs  # never mutated by solvers
    g.flags = list(template.flags)
    g.arity = template.arity
    g.reported = template.reported
    return g


def _index(m: ConstraintModule, rep: Representation) -> ConstraintGraph:
    g = ConstraintGraph(m, rep)
    omega = g.omega
    arity = 0
    for c in m.constraints:
        if isinstance(c, (Function, Call)):
            arity = max(arity, len(c.args))
    g.arity = arity

    for c in m.constraints:
        if isinstance(c, Base):
            p = g.pv(c.p)
            if p is None:
                g.flags[c.x] |= EXT_TARGET
            else:
                g.sol[p].add(c.x)
        elif isinstance(c, Simple):
            _static_edge(g, c.q, c.p)
        elif isinstance(c, Load):
            p, q = g.pv(c.p), g.pv(c.q)
            if q is None:
                if p is not None:
                    g.flags[p] |= PEXT
            elif p is None:
                g.flags[q] |= LSCALAR
            else:
                g.loads[q].add(p)
        elif isinstance(c, Store):
            p, q = g.pv(c.p), g.pv(c.q)
            if p is None:
                if q is not None:
                    g.flags[q] |= ESC
            elif q is None:
                g.flags[p] |= SSCALAR
            else:
                g.stores[p].add(q)
        elif isinstance(c, Function):
            g.funcs[c.f].append((c.ret, tuple(c.args)))
        elif isinstance(c, Call):
            h = g.pv(c.h)
            if h is None:
                raise ValueError(f"call through pointer-incompatible {m.name_of(c.h)}")
            g.calls[h].append((c.ret, tuple(c.args)))

    for v, flags in enumerate(m.flags):
        flags = int(flags)
        if not flags:
            continue
        if rep is Representation.IP:
            g.flags[v] |= flags & (EXT_TARGET | IMPORTED)
            p = g.pv(v)
            if p is not None:
                g.flags[p] |= flags & _PTR_FLAGS
            continue
        if flags & EXT_TARGET:
            g.sol[omega].add(v)
        if flags & IMPORTED:
            g.funcs[v].append((omega, (omega,) * arity))
        p = g.pv(v)
        if flags & PEXT and p != omega:
            g.succ[omega].add(p)
        if flags & ESC and p != omega:
            g.succ[p].add(omega)
        if flags & SSCALAR:
            g.stores[p].add(omega)
        if flags & LSCALAR:
            g.loads[p].add(omega)

    if rep is Representation.EP:
        g.sol[omega].add(omega)
        g.loads[omega].add(omega)
        g.stores[omega].add(omega)
        g.calls[omega].append((omega, (omega,) * arity))
        g.funcs[omega].append((omega, (omega,) * arity))
    g.reported = [v for v in range(g.n_orig) if reported(m.vars[v])]
    return g


# canonical solutions -----------------------------------------------------


@dataclass
class Solution:
    """Representation-independent points-to result.

    ``sets`` maps variable ids to frozensets of location ids, where
    :data:`EXTERNAL` stands for the external region.  ``external`` is E.
    """

    names: list[str]
    sets: dict[int, frozenset]
    external: frozenset
    extra: dict = field(default_factory=dict, compare=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Solution):
            return NotImplemented
        return self.sets == other.sets and self.external == other.external

    def __getitem__(self, name: str) -> frozenset:
        return self.sets[self.id_of(name)]

    def id_of(self, name: str) -> int:
        index = self.extra.get("_ids")
        if index is None:
            index = self.extra["_ids"] = {n: v for v, n in enumerate(self.names)}
        return index[name]

    def named(self, v: int) -> set[str]:
        return {self.name(x) for x in self.sets[v]}

    def name(self, x: int) -> str:
        return EXTERNAL_NAME if x == EXTERNAL else self.names[x]

    def by_name(self) -> dict[str, set[str]]:
        return {self.names[v]: self.named(v) for v in self.sets}

    def external_names(self) -> set[str]:
        return {self.names[x] for x in self.external}

    def first_difference(self, other: "Solution") -> Optional[str]:
        if self.external != other.external:
            a = sorted(self.name(x) for x in self.external)
            b = sorted(other.name(x) for x in other.external)
            return f"E: {a} != {b}"
        for v in sorted(set(self.sets) | set(other.sets)):
            a, b = self.sets.get(v), other.sets.get(v)
            if a != b:
                fmt = lambda s: None if s is None else _fmt_set(self, s)
                return f"{self.names[v]}: {fmt(a)} != {fmt(b)}"
        return None


def _sort_members(sol: Solution, members: Iterable[int]) -> list[str]:
    names = sorted(sol.names[x] for x in members if x != EXTERNAL)
    if EXTERNAL in members:
        names.append(EXTERNAL_NAME)
    return names


def _fmt_set(sol: Solution, members) -> str:
    return "{" + ", ".join(_sort_members(sol, members)) + "}"


def dump_solution(sol: Solution) -> str:
    lines = [f"{sol.names[v]}: {_fmt_set(sol, sol.sets[v])}" for v in sorted(sol.sets)]
    return "\n".join(lines) + ("\n" if lines else "")


def reported(info: VarInfo) -> bool:
    return info.pointer_compatible and not info.synthetic


def _domain(g: ConstraintGraph, include_all: bool) -> list[int]:
    if include_all:
        return [v for v in range(g.n_orig) if g.compat[v]]
    return g.reported


def canonical_solution(g: ConstraintGraph, include_all: bool = False) -> Solution:
    """Canonical Sol sets for the module's variables.

    With ``include_all`` every pointer-compatible variable is reported,
    including lowering temporaries.
    """
    n = g.n_orig
    info = g.info
    if g.rep is Representation.EP:
        omega = g.omega
        ext = frozenset(x for x in g.sol[g.find(omega)] if x != omega)
        sets = {}
        for v in _domain(g, include_all):
            sets[v] = frozenset(EXTERNAL if x == omega else x for x in g.sol[g.find(v)])
    else:
        ext = frozenset(x for x in range(n) if g.flags[x] & EXT_TARGET)
        implicit = ext | {EXTERNAL}
        sets = {}
        for v in _domain(g, include_all):
            r = g.find(v)
            s = frozenset(g.sol[r])
            if g.flags[r] & PEXT:
                s = s | implicit
            sets[v] = s
    return Solution([vi.name for vi in info[:n]], sets, ext)
