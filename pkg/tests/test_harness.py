from __future__ import annotations

import pytest

import pipta.harness as harness
from pipta.config import enumerate_configs
from pipta.constraints import parse_constraint_module
from pipta.generate import FuzzParams, generate_program, generate_stress_instance
from pipta.graph import EXTERNAL
from pipta.harness import (
    benchmark, check_partial_against_whole, fuzz_soundness, minimize_witness, ratio_points,
    validate_all_configs,
)
from pipta.solve import run
from pipta.tinyir import lower, parse_tiny_module, print_tiny_module

from .conftest import corpus_file
from .test_tinyir import PROVIDER


@pytest.mark.parametrize("name", ["example1.cir", "listing1.tir", "listing1_o0.tir", "fig3.tir"])
def test_corpus_agrees_under_all_configs(name):
    report = validate_all_configs(corpus_file(name), name=name)
    assert report.passed, str(report)
    assert report.configs == len(enumerate_configs())
    assert "pass" in str(report)


def test_validation_reports_disagreement(monkeypatch):
    real = harness.run

    def skewed(m, cfg):
        result = real(m, cfg)
        if str(cfg).startswith("EP"):
            sol = result.solution()
            result.solution = lambda include_all=False: type(sol)(
                sol.names, {v: frozenset() for v in sol.sets}, sol.external)
        return result

    monkeypatch.setattr(harness, "run", skewed)
    report = validate_all_configs(corpus_file("example1.cir"), ["IP+Naive", "EP+Naive"])
    assert not report.passed and "differs" in report.failures[0]


def test_partial_listing1_covers_linked_program():
    modules = [corpus_file("listing1.tir"), parse_tiny_module(PROVIDER)]
    checked, violations = check_partial_against_whole(modules)
    assert checked > 0 and violations == []


def test_single_module_program_is_trivially_sound():
    modules = generate_program(FuzzParams(seed=3, modules=1))
    _, violations = check_partial_against_whole(modules)
    assert violations == []


def test_fuzz_soundness_small_run():
    report = fuzz_soundness(FuzzParams(seed=1), programs=10)
    assert report.passed
    assert report.programs == 10 and report.modules == 30
    assert report.checked_pairs > 0


def drop_flags(monkeypatch):
    real = harness.lower

    def closed_world(tm):
        m = real(tm)
        m.flags = [0] * len(m.flags)
        return m

    monkeypatch.setattr(harness, "lower", closed_world)


def test_fuzzer_catches_a_closed_world_analysis(monkeypatch):
    drop_flags(monkeypatch)
    report = fuzz_soundness(FuzzParams(seed=1, statements=30), programs=3, minimize=False)
    assert not report.passed


def test_minimized_witness_still_fails_and_shrinks(monkeypatch):
    drop_flags(monkeypatch)
    modules = generate_program(FuzzParams(seed=1, statements=25, vars=20))

    def fails(ms):
        return bool(check_partial_against_whole(ms)[1])

    assert fails(modules)
    witness = minimize_witness(modules, fails)
    assert fails(witness)
    size = lambda ms: sum(len(f.body or ()) for m in ms for f in m.functions)
    assert size(witness) < size(modules)
    # the inputs are left untouched
    assert fails(modules)


def test_minimize_keeps_passing_input():
    modules = [corpus_file("listing1.tir")]
    assert print_tiny_module(minimize_witness(modules, lambda ms: False)[0]) == print_tiny_module(modules[0])


def test_generator_is_deterministic():
    a = [print_tiny_module(m) for m in generate_program(FuzzParams(seed=11))]
    b = [print_tiny_module(m) for m in generate_program(FuzzParams(seed=11))]
    c = [print_tiny_module(m) for m in generate_program(FuzzParams(seed=12))]
    assert a == b and a != c


@pytest.mark.parametrize("kwargs", [
    {"export_fraction": 1.5}, {"cast_fraction": -0.1}, {"modules": 0}, {"vars": 0}, {"statements": 0},
])
def test_fuzz_params_validation(kwargs):
    with pytest.raises(ValueError):
        FuzzParams(**kwargs)


def test_closed_generator_settings_give_no_flags():
    params = FuzzParams(seed=4, modules=1, export_fraction=0, cast_fraction=0, import_fraction=0)
    m = lower(generate_program(params)[0])
    assert not any(m.flags)


def test_stress_instance_smallest():
    tm = generate_stress_instance(1, 1)
    sol = run(lower(tm), "IP+WL(FIFO)+PIP").solution()
    r = sol["driver.r0"]
    names = {sol.names[x] for x in r if x != EXTERNAL}
    assert EXTERNAL in r and "g0" in names
    # anything beyond g0 is an externally accessible location
    assert {sol.id_of(n) for n in names - {"g0"}} <= sol.external
    assert names == {"g0", "get0"}


def test_stress_instance_rejects_empty():
    with pytest.raises(ValueError):
        generate_stress_instance(0, 3)


def test_stress_instance_cartesian_product():
    m = lower(generate_stress_instance(10, 10))
    ep = run(m, "EP+WL(FIFO)").stats.explicit_pointees
    pip = run(m, "IP+WL(FIFO)+PIP").stats.explicit_pointees
    assert ep >= 10 * 10 and pip <= 4 * 10


def test_benchmark_rows_table_and_csv():
    modules = [("ex1", corpus_file("example1.cir")), ("l1", corpus_file("listing1.tir"))]
    configs = ["EP+WL(FIFO)", "IP+WL(FIFO)", "IP+WL(FIFO)+PIP"]
    report = benchmark(modules, configs, reps=3)
    assert len(report.rows) == 6
    table = report.table()
    assert set(table) == set(configs) | {"EP Oracle"}
    for agg in table.values():
        assert list(agg) == ["p10", "p25", "p50", "p90", "p99", "Max", "Mean"]
        assert agg["p10"] <= agg["p50"] <= agg["Max"]
    lines = report.csv().splitlines()
    assert lines[0].startswith("file,config,median_us") and len(lines) == 7
    assert report.format_table().splitlines()[0].startswith("Configuration | p10")
    assert report.median("ex1", "IP+WL(FIFO)") > 0
    with pytest.raises(KeyError):
        report.median("ex1", "EP+Naive")


def test_benchmark_rejects_zero_reps():
    with pytest.raises(ValueError):
        benchmark([("e", parse_constraint_module("module e\n"))], ["IP+Naive"], reps=0)


def test_ratio_points():
    modules = [("a", corpus_file("example1.cir")), ("b", corpus_file("fig3.tir"))]
    report = benchmark(modules, ["EP+WL(FIFO)", "IP+WL(FIFO)+PIP"], reps=1)
    points = ratio_points(report, "EP+WL(FIFO)", "IP+WL(FIFO)+PIP")
    assert [p[0] for p in points] == ["a", "b"]
    for f, x, ratio in points:
        assert x == report.median(f, "EP+WL(FIFO)")
        assert ratio == pytest.approx(report.median(f, "IP+WL(FIFO)+PIP") / x)
