from __future__ import annotations

import pytest

from pipta.constraints import (
    ALL_FLAGS, Base, Call, ConstraintModule, Flag, Function, Kind, Linkage, Load, ModuleError,
    ParseError, Simple, Store, parse_constraint_module, print_constraint_module, validate,
)
from pipta.generate import FuzzParams, generate_random_module
from pipta.tinyir import lower

from .conftest import CORPUS, corpus_file

EXAMPLE1 = (CORPUS / "example1.cir").read_text()


def test_smallest_module():
    m = parse_constraint_module("module m\nvar x mem ptr\nvar p reg ptr\np <- &x\n")
    assert len(m) == 2
    assert m.constraints == [Base(m.var("p"), m.var("x"))]


def test_example1_parses():
    m = parse_constraint_module(EXAMPLE1)
    assert [v.name for v in m.vars] == ["p", "q", "r", "s", "x", "y"]
    assert not m.vars[m.var("y")].pointer_compatible
    kinds = sorted(type(c).__name__ for c in m.constraints)
    assert kinds == ["Base", "Base", "Load", "Simple", "Store"]


def test_address_of_register_rejected():
    with pytest.raises(ParseError):
        parse_constraint_module("module m\nvar p reg ptr\nvar q reg ptr\np <- &q\n")


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        parse_constraint_module("module m\nvar p reg ptr\n  p <- nope\n")
    assert info.value.line == 3
    assert info.value.col > 3


@pytest.mark.parametrize("text", [
    "",
    "var p reg ptr",
    "module m\nvar p reg",
    "module m\nvar p reg ptr\nvar p reg ptr",
    "module m\nvar p reg ptr\np <- *",
    "module m\nvar p reg ptr\nflag p bogus",
    "module m\nvar p reg ptr\nvar x mem ptr\n*p <- &x",
    "module m\nvar p reg ptr\ncall p ret=p args=(q)",
    "module m\nvar p reg ptr export",
])
def test_malformed_inputs(text):
    with pytest.raises(ValueError):
        parse_constraint_module(text)


def test_empty_module_prints_header_only():
    assert print_constraint_module(ConstraintModule("e")) == "module e\n"


def test_round_trip_example1():
    m = parse_constraint_module(EXAMPLE1)
    text = print_constraint_module(m)
    again = parse_constraint_module(text)
    assert again == m
    assert print_constraint_module(again) == text


def test_round_trip_listing1_lowered():
    m = lower(corpus_file("listing1.tir"))
    once = print_constraint_module(m)
    twice = print_constraint_module(parse_constraint_module(once))
    assert once == twice
    assert parse_constraint_module(once) == m


@pytest.mark.parametrize("seed", range(25))
def test_round_trip_random(seed):
    m = lower(generate_random_module(FuzzParams(seed=seed)))
    assert parse_constraint_module(print_constraint_module(m)) == m


def test_all_six_flags_printed():
    m = ConstraintModule("flags")
    f = m.add_var("f", Kind.MEMORY, True, Linkage.IMPORT, is_function=True)
    for flag in ALL_FLAGS:
        m.set_flag(f, flag)
    text = print_constraint_module(m)
    assert sum(line.startswith("flag ") for line in text.splitlines()) == 6
    assert parse_constraint_module(text).flags[f] == m.flags[f]


def test_duplicate_constraint_is_noop():
    m = ConstraintModule()
    p = m.add_var("p", Kind.REGISTER, True)
    x = m.add_var("x", Kind.MEMORY, True)
    assert m.add(Base(p, x))
    before = print_constraint_module(m)
    assert not m.add(Base(p, x))
    assert print_constraint_module(m) == before


def test_validate_valid_module():
    assert validate(parse_constraint_module(EXAMPLE1)) == []


def test_validate_call_through_scalar():
    m = ConstraintModule()
    h = m.add_var("h", Kind.REGISTER, False)
    m.add(Call(h, None, ()))
    assert len(validate(m)) == 1


def test_validate_imported_func_on_data():
    m = ConstraintModule()
    g = m.add_var("g", Kind.MEMORY, True)
    m.set_flag(g, Flag.IMPORTED_FUNC)
    assert len(validate(m)) == 1


def test_validate_other_invariants():
    m = ConstraintModule()
    r = m.add_var("r", Kind.REGISTER, True, Linkage.EXPORT)
    s = m.add_var("s", Kind.REGISTER, False)
    f = m.add_var("f", Kind.REGISTER, True, is_function=True)
    m.add(Base(r, r))
    m.add(Function(f, s, ()))
    m.add(Simple(r, 99))
    problems = validate(m)
    assert len(problems) == 5
    assert any("export linkage" in p for p in problems)
    assert any("undeclared" in p for p in problems)


def test_parser_reports_invariant_violations():
    with pytest.raises(ModuleError):
        parse_constraint_module("module m\nvar g mem ptr\nflag g imported_func\n")


def test_every_flag_has_a_name():
    assert len(ALL_FLAGS) == 6
    assert Flag.EXT_TARGET | Flag.POINTS_EXT | Flag.POINTEES_ESCAPE | Flag.STORE_SCALAR \
        | Flag.LOAD_SCALAR | Flag.IMPORTED_FUNC == sum(ALL_FLAGS)


def test_constraint_kinds_print_and_parse():
    text = """module k
var f mem scalar func
var h reg ptr
var r reg ptr
var a reg ptr
var x mem ptr
fun f ret=r args=(a,_)
call h ret=_ args=(_,a)
x <- *a
*a <- r
"""
    m = parse_constraint_module(text)
    assert Function(m.var("f"), m.var("r"), (m.var("a"), None)) in m.constraints
    assert Call(m.var("h"), None, (None, m.var("a"))) in m.constraints
    assert Load(m.var("x"), m.var("a")) in m.constraints
    assert Store(m.var("a"), m.var("r")) in m.constraints
    assert parse_constraint_module(print_constraint_module(m)) == m
