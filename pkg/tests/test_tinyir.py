from __future__ import annotations

import pytest

from pipta.constraints import Base, Call, Flag, Function, Linkage, Load, Simple, Store, print_constraint_module
from pipta.generate import FuzzParams, generate_program, generate_random_module
from pipta.tinyir import (
    FunctionDef, Global, LinkError, TinyModule, TinyParseError, link, link_with_map, lower,
    parse_tiny_module, print_tiny_module,
)

from .conftest import corpus_file


def lowered(text: str):
    return lower(parse_tiny_module(text))


def test_listing1_structure():
    m = corpus_file("listing1.tir")
    linkage = {g.name: g.linkage for g in m.globals}
    assert linkage == {"x": Linkage.INTERNAL, "y": Linkage.INTERNAL,
                       "z": Linkage.EXPORT, "p": Linkage.EXPORT}
    assert m.function("getPtr").linkage is Linkage.IMPORT
    assert m.function("getPtr").body is None
    assert m.function("callMe").linkage is Linkage.EXPORT


def test_empty_module():
    m = parse_tiny_module("module e\n")
    assert m.globals == [] and m.functions == []
    assert lower(m).vars == []


@pytest.mark.parametrize("text", [
    "module m\nfunc f() -> void {\n  reg r ptr\n  store ptr g, r\n  ret\n}\n",
    "module m\nfunc f() -> void import {\n  ret\n}\n",
    "module m\nfunc f() -> void\n",
    "module m\nglobal g ptr\nglobal g ptr\n",
    "module m\nglobal g ptr\nfunc f() -> void {\n  reg g ptr\n  ret\n}\n",
    "module m\nfunc f() -> void {\n  reg r ptr\n  r = bogus r\n}\n",
    "module m\nfunc f() -> void {\n  reg r ptr\n",
    "module m\nfunc f() -> void {\n  reg r scalar\n  reg s ptr\n  s = load ptr r\n  ret\n}\n",
    "global g ptr\n",
])
def test_parse_errors(text):
    with pytest.raises(TinyParseError):
        parse_tiny_module(text)


def test_parse_error_has_line():
    with pytest.raises(TinyParseError) as info:
        parse_tiny_module("module m\nfunc f() -> void {\n  reg r ptr\n  store ptr g, r\n  ret\n}\n")
    assert info.value.line == 4


@pytest.mark.parametrize("name", ["listing1.tir", "listing1_o0.tir", "fig3.tir"])
def test_print_parse_round_trip(name):
    m = corpus_file(name)
    text = print_tiny_module(m)
    assert parse_tiny_module(text) == m
    assert print_tiny_module(parse_tiny_module(text)) == text


@pytest.mark.parametrize("seed", range(20))
def test_random_round_trip(seed):
    for m in generate_program(FuzzParams(seed=seed)):
        assert parse_tiny_module(print_tiny_module(m)) == m


def test_listing1_lowering_matches_initial_graph():
    m = lower(corpus_file("listing1.tir"))
    ext = {v.name for v, f in zip(m.vars, m.flags) if f & Flag.EXT_TARGET}
    assert ext == {"z", "p", "callMe", "getPtr"}
    assert m.flags[m.var("getPtr")] & Flag.IMPORTED_FUNC
    assert not any(f & Flag.IMPORTED_FUNC for v, f in zip(m.vars, m.flags) if v.name != "getPtr")
    # the direct call goes through a fresh register holding &getPtr
    fp = m.var("callMe.$fp0")
    assert Base(fp, m.var("getPtr")) in m.constraints
    assert Call(fp, m.var("callMe.r"), ()) in m.constraints
    assert Function(m.var("callMe"), None, (m.var("callMe.q"),)) in m.constraints
    assert Base(m.var("p"), m.var("x")) in m.constraints
    assert Base(m.var("callMe.r"), m.var("callMe.w")) in m.constraints
    # registers and allocas
    assert m.vars[m.var("callMe.r")].is_register
    assert m.vars[m.var("callMe.w")].is_memory


def test_casts_set_flags():
    m = lowered("""module c
func f(a: ptr) -> void {
  reg i scalar
  reg b ptr
  i = ptrtoint a
  b = inttoptr i
  ret
}
""")
    assert m.flags[m.var("f.a")] == Flag.POINTEES_ESCAPE
    assert m.flags[m.var("f.b")] == Flag.POINTS_EXT
    assert m.flags[m.var("f.i")] == Flag.NONE


def test_scalar_accesses_through_pointers():
    m = lowered("""module s
func f(a: ptr, b: ptr) -> void {
  reg i scalar
  i = load scalar a
  store scalar b, i
  ret
}
""")
    assert m.flags[m.var("f.a")] == Flag.LOAD_SCALAR
    assert m.flags[m.var("f.b")] == Flag.STORE_SCALAR


def test_mixed_copies_become_flags():
    m = lowered("""module k
global cell ptr
global num scalar
func f(a: ptr) -> void {
  reg i scalar
  reg b ptr
  i = a
  b = i
  i = load scalar cell
  store scalar cell, i
  i = load scalar num
  ret
}
""")
    assert m.flags[m.var("f.a")] == Flag.POINTEES_ESCAPE
    assert m.flags[m.var("f.b")] == Flag.POINTS_EXT
    assert m.flags[m.var("cell")] == Flag.POINTEES_ESCAPE | Flag.POINTS_EXT
    assert m.flags[m.var("num")] == Flag.NONE
    assert not any(isinstance(c, Simple) for c in m.constraints)


def test_internal_global_no_flags():
    m = lowered("module q\nglobal g ptr\n")
    assert m.flags == [Flag.NONE]


def test_malloc_sites_and_memcpy():
    m = lowered("""module h
func f() -> void {
  reg a ptr
  reg b ptr
  a = malloc
  b = malloc
  memcpy a, b
  free a
  ret
}
""")
    heaps = [v.name for v in m.vars if "$heap" in v.name]
    assert heaps == ["f.$heap0", "f.$heap1"]
    assert all(m.vars[m.var(h)].is_memory for h in heaps)
    tmp = m.var("f.$tmp2")
    assert Load(tmp, m.var("f.b")) in m.constraints
    assert Store(m.var("f.a"), tmp) in m.constraints


def test_library_summaries_for_direct_calls():
    m = lowered("""module lib
func malloc() -> ptr import
func memcpy(d: ptr, s: ptr, n: scalar) -> ptr import
func free(p: ptr) -> void import
func f() -> void {
  reg a ptr
  reg b ptr
  reg c ptr
  reg n scalar
  a = call malloc()
  b = call malloc()
  c = call memcpy(a, b, n)
  call free(a)
  ret
}
""")
    assert not any(isinstance(c, Call) for c in m.constraints)
    assert sum(v.name.startswith("f.$heap") for v in m.vars) == 2
    assert Simple(m.var("f.c"), m.var("f.a")) in m.constraints


def test_summaries_can_be_disabled():
    m = lower(parse_tiny_module("""module lib
func malloc() -> ptr import
func f() -> void {
  reg a ptr
  a = call malloc()
  ret
}
"""), summaries={})
    assert any(isinstance(c, Call) for c in m.constraints)


def test_multiple_returns_use_return_register():
    m = lowered("""module r
global a ptr
global b ptr
func f() -> ptr {
  reg x ptr
  reg y ptr
  x = &a
  y = &b
  ret x
  ret y
}
""")
    ret = m.var("f.$ret")
    assert Simple(ret, m.var("f.x")) in m.constraints
    assert Simple(ret, m.var("f.y")) in m.constraints
    assert Function(m.var("f"), ret, ()) in m.constraints


def test_scalar_slots_are_absent():
    m = lowered("""module a
func f(x: scalar, y: ptr) -> scalar {
  reg i scalar
  ret i
}
func g() -> void {
  reg i scalar
  reg p ptr
  i = call f(i, p)
  ret
}
""")
    assert Function(m.var("f"), None, (None, m.var("f.y"))) in m.constraints
    assert Call(m.var("g.$fp0"), None, (None, m.var("g.p"))) in m.constraints


def test_lowering_is_deterministic():
    for seed in range(5):
        m = generate_random_module(FuzzParams(seed=seed))
        assert print_constraint_module(lower(m)) == print_constraint_module(lower(m))


@pytest.mark.parametrize("seed", range(30))
def test_cast_flags_always_present(seed):
    from pipta.tinyir import IntToPtr, PtrToInt
    m = generate_random_module(FuzzParams(seed=seed, cast_fraction=0.5))
    cm = lower(m)
    for fn in m.functions:
        for st in fn.body or ():
            if isinstance(st, PtrToInt):
                assert cm.flags[cm.var(f"{fn.name}.{st.src}")] & Flag.POINTEES_ESCAPE
            if isinstance(st, IntToPtr):
                assert cm.flags[cm.var(f"{fn.name}.{st.dest}")] & Flag.POINTS_EXT


# linking ----------------------------------------------------------------------

PROVIDER = """module provider
global own scalar
func getPtr() -> ptr export {
  reg t ptr
  t = &own
  ret t
}
"""


def test_link_resolves_import():
    a = parse_tiny_module("module a\nfunc f() -> void export {\n  ret\n}\n")
    b = parse_tiny_module("module b\nfunc f() -> void import\nfunc g() -> void {\n  call f()\n  ret\n}\n")
    linked = link([a, b])
    fs = [f for f in linked.functions if f.name == "f"]
    assert len(fs) == 1 and fs[0].linkage is Linkage.EXPORT and fs[0].body is not None


def test_link_single_module_is_identity():
    m = corpus_file("listing1.tir")
    assert link([m]) == m


def test_link_duplicate_export():
    a = parse_tiny_module("module a\nglobal g ptr export\n")
    b = parse_tiny_module("module b\nglobal g ptr export\n")
    with pytest.raises(LinkError):
        link([a, b])


def test_link_keeps_unresolved_imports():
    a = parse_tiny_module("module a\nglobal e ptr import\n")
    b = parse_tiny_module("module b\nglobal e ptr import\n")
    linked = link([a, b])
    assert [(g.name, g.linkage) for g in linked.globals] == [("e", Linkage.IMPORT)]


def test_link_renames_clashing_internals():
    a = parse_tiny_module("module a\nglobal g ptr\nglobal h ptr = &g\n")
    b = parse_tiny_module("module b\nglobal g ptr\n")
    linked, renames = link_with_map([a, b])
    assert renames == [{"g": "a@g"}, {"g": "b@g"}]
    assert {g.name for g in linked.globals} == {"a@g", "h", "b@g"}
    assert next(g for g in linked.globals if g.name == "h").init == "a@g"


def test_link_listing1_with_provider():
    linked = link([corpus_file("listing1.tir"), parse_tiny_module(PROVIDER)])
    m = lower(linked)
    assert not m.flags[m.var("getPtr")] & Flag.IMPORTED_FUNC
    assert m.flags[m.var("getPtr")] & Flag.EXT_TARGET  # still exported


@pytest.mark.parametrize("seed", range(20))
def test_link_keeps_every_statement(seed):
    modules = generate_program(FuzzParams(seed=seed))
    linked = link(modules)
    count = sum(len(f.body) for m in modules for f in m.functions if f.body is not None)
    assert sum(len(f.body) for f in linked.functions if f.body is not None) == count
    lower(linked)


def test_module_builders():
    m = TinyModule("x", [Global("g", True, Linkage.EXPORT)],
                   [FunctionDef("f", Linkage.IMPORT, [], "void")])
    assert parse_tiny_module(print_tiny_module(m)) == m
