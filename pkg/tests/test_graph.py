from __future__ import annotations

import pytest

from pipta.constraints import ConstraintModule, Flag, Kind, Linkage, parse_constraint_module
from pipta.graph import (
    DOUBLE, ESC, EXT_TARGET, EXTERNAL, OMEGA_NAME, PEXT, Representation, build_graph,
    canonical_solution, dump_solution,
)
from pipta.naive import solve_naive
from pipta.solve import run
from pipta.tinyir import lower

from .conftest import corpus_file

CYCLE = """module cyc
var a reg ptr
var b reg ptr
var c reg ptr
var x mem ptr
a <- &x
b <- a
a <- b
c <- b
"""


def test_empty_module_ep_has_omega_only():
    g = build_graph(ConstraintModule("e"), "EP")
    assert len(g) == 1 and g.info[0].name == OMEGA_NAME
    w = g.omega
    assert g.sol[w] == {w}
    assert g.loads[w] == {w} and g.stores[w] == {w}
    assert g.calls[w] == [(w, ())] and g.funcs[w] == [(w, ())]


def test_empty_module_ip_has_nothing():
    g = build_graph(ConstraintModule("e"), "IP")
    assert len(g) == 0 and g.omega is None


def test_listing1_ip_flags():
    m = lower(corpus_file("listing1.tir"))
    g = build_graph(m, Representation.IP)
    ext = {m.name_of(v) for v in range(len(m)) if g.flags[v] & EXT_TARGET}
    assert ext == {"z", "p", "callMe", "getPtr"}


def test_listing1_ep_materialisation():
    m = lower(corpus_file("listing1.tir"))
    g = build_graph(m, Representation.EP)
    w = g.omega
    names = {m.name_of(x) for x in g.sol[w] if x != w}
    assert names == {"z", "p", "callMe", "getPtr"}
    assert g.arity == 1
    assert (w, (w,)) in g.funcs[m.var("getPtr")]
    assert g.flags == [0] * len(g)  # every flag became a constraint on Ω


def test_ep_rewrites_every_flag():
    m = parse_constraint_module("""module f
var a reg ptr
var b reg ptr
var c reg ptr
var d reg ptr
flag a points_ext
flag b pointees_escape
flag c store_scalar
flag d load_scalar
""")
    g = build_graph(m, "EP")
    w = g.omega
    a, b, c, d = range(4)
    assert a in g.succ[w]
    assert w in g.succ[b]
    assert w in g.stores[c]
    assert w in g.loads[d]


def test_incompatible_operands_become_omega():
    m = parse_constraint_module("""module i
var p reg ptr
var i reg scalar
var x mem ptr
p <- i
i <- p
p <- *i
*p <- i
i <- &x
""")
    p, x = 0, 2
    ip = build_graph(m, "IP")
    assert ip.flags[p] & DOUBLE == DOUBLE
    assert ip.flags[x] & EXT_TARGET
    ep = build_graph(m, "EP")
    w = ep.omega
    assert p in ep.succ[w] and w in ep.succ[p]
    assert x in ep.sol[w]
    assert w in ep.stores[p]


def test_unify_idempotent():
    g = build_graph(parse_constraint_module(CYCLE), "IP")
    assert g.unify(0, 0) == 0
    assert g.unifications == 0


def test_unify_shares_solution_and_drops_self_edges():
    g = build_graph(parse_constraint_module(CYCLE), "IP")
    r = g.unify(0, 1)
    assert g.find(0) == g.find(1) == r
    assert r not in g.succ[r]
    assert g.succ[r] == {2}
    assert g.sol[r] == {3}


def test_unify_ors_flags():
    m = ConstraintModule()
    a = m.add_var("a", Kind.MEMORY, True)
    b = m.add_var("b", Kind.MEMORY, True, Linkage.EXPORT)
    m.set_flag(a, Flag.POINTS_EXT)
    m.set_flag(b, Flag.EXT_TARGET)
    m.set_flag(b, Flag.POINTEES_ESCAPE)
    g = build_graph(m, "IP")
    g.unify(a, b)
    assert g.has(a, PEXT) and g.has(b, PEXT) and g.has(a, ESC)
    # ext_target describes the location, so it stays with b
    assert g.has(b, EXT_TARGET) and not g.has(a, EXT_TARGET)


def test_union_find_properties():
    m = ConstraintModule()
    for k in range(16):
        m.add_var(f"v{k}", Kind.REGISTER, True)
    g = build_graph(m, "IP")
    for a, b in [(0, 1), (2, 3), (1, 3), (4, 5), (5, 0), (6, 7), (7, 6)]:
        before = list(g.rank)
        g.unify(a, b)
        assert g.find(a) == g.find(b)
        assert all(x <= y for x, y in zip(before, g.rank))
    assert all(g.find(g.find(v)) == g.find(v) for v in range(16))
    assert len(g.reps()) == 16 - 6


def test_unify_before_solving_preserves_solution():
    m = parse_constraint_module(CYCLE)
    g = build_graph(m, "IP")
    solve_naive(g)
    plain = canonical_solution(g)
    h = build_graph(m, "IP")
    h.unify(0, 1)
    solve_naive(h)
    assert canonical_solution(h) == plain


def test_duplicate_edges_do_not_count():
    m = parse_constraint_module(CYCLE + "b <- a\n")
    g = build_graph(m, "IP")
    assert g.edge_count() == 3


def test_canonical_example1():
    m = corpus_file("example1.cir")
    for rep in ("EP", "IP"):
        sol = run(m, f"{rep}+Naive").solution()
        assert sol.by_name() == {"p": {"x"}, "q": {"x"}, "r": {"y"}, "s": {"y"}, "x": {"y"}}
        assert sol.external == frozenset()


def test_canonical_hides_synthetic_registers():
    m = lower(corpus_file("listing1.tir"))
    sol = run(m, "IP+WL(FIFO)").solution()
    assert "callMe.$fp0" not in {sol.names[v] for v in sol.sets}
    full = run(m, "IP+WL(FIFO)").solution(include_all=True)
    assert "callMe.$fp0" in {full.names[v] for v in full.sets}


def test_external_invariant_and_memory_only():
    m = lower(corpus_file("listing1.tir"))
    for cfg in ("EP+Naive", "IP+Naive", "IP+WL(LIFO)+PIP"):
        sol = run(m, cfg).solution(include_all=True)
        for s in sol.sets.values():
            if EXTERNAL in s:
                assert sol.external <= s
            assert all(x == EXTERNAL or m.vars[x].is_memory for x in s)


def test_e_matches_between_representations():
    m = lower(corpus_file("listing1.tir"))
    assert run(m, "EP+Naive").solution().external == run(m, "IP+Naive").solution().external


def test_dump_format():
    sol = run(lower(corpus_file("listing1.tir")), "IP+WL(FIFO)").solution()
    assert dump_solution(sol).splitlines() == [
        "p: {callMe, getPtr, p, x, z, EXTERNAL}",
        "callMe.q: {callMe, getPtr, p, x, z, EXTERNAL}",
        "callMe.r: {callMe, callMe.w, getPtr, p, x, z, EXTERNAL}",
    ]


def test_solution_lookup_errors():
    sol = run(corpus_file("example1.cir"), "IP+Naive").solution()
    with pytest.raises(KeyError):
        sol["nope"]
    assert sol.first_difference(sol) is None
