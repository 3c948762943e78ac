"""Command-line entry point."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Union

from .alias import AliasResult, conflict_rate
from .config import ConfigError, enumerate_configs, parse_config
from .constraints import ConstraintModule, ParseError, parse_constraint_module, print_constraint_module
from .generate import FuzzParams, generate_program, generate_stress_instance
from .graph import dump_solution
from .harness import benchmark, fuzz_soundness, ratio_points, validate_all_configs
from .solve import run
from .tinyir import LinkError, TinyModule, lower, parse_tiny_module, print_tiny_module

_l = logging.getLogger(__name__)

SUFFIXES = (".cir", ".tir")
_ALIAS_COLUMNS = (AliasResult.MAY_ALIAS, AliasResult.NO_ALIAS, AliasResult.MUST_ALIAS)


def load(path: Union[str, Path]) -> Union[ConstraintModule, TinyModule]:
    """Parse a constraint module (.cir) or a TinyIR module (.tir)."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".cir":
        return parse_constraint_module(text)
    if path.suffix == ".tir":
        return parse_tiny_module(text)
    raise ValueError(f"{path}: expected a .cir or .tir file")


def collect(path: Union[str, Path]) -> list[Path]:
    path = Path(path)
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.suffix in SUFFIXES)
    return [path]


def _constraints(m) -> ConstraintModule:
    return lower(m) if isinstance(m, TinyModule) else m


def _configs(spec: str):
    if spec == "all":
        return enumerate_configs()
    return [parse_config(s.strip()) for s in spec.split(",") if s.strip()]


# subcommands ----------------------------------------------------------------


def cmd_analyze(args) -> int:
    m = _constraints(load(args.file))
    result = run(m, args.config)
    sol = result.solution(include_all=args.all)
    if args.dump_solution:
        sys.stdout.write(dump_solution(sol))
    if args.stats:
        doc = {"file": str(args.file), "config": str(result.config), **result.stats.as_dict()}
        Path(args.stats).write_text(json.dumps(doc, indent=2) + "\n")
    if not args.dump_solution:
        print(f"{args.file}: {result.config}: {result.stats.visits} visits, "
              f"{result.stats.explicit_pointees} explicit pointees, {result.stats.wall_time_us:.0f} us")
    return 0


def cmd_validate(args) -> int:
    configs = _configs(args.configs)
    failed = 0
    for path in collect(args.path):
        report = validate_all_configs(load(path), configs, name=str(path))
        print(report)
        failed += not report.passed
    return 1 if failed else 0


def _params(args) -> FuzzParams:
    return FuzzParams(
        seed=args.seed, modules=args.modules, vars=args.vars, statements=args.statements,
        export_fraction=args.export_fraction, cast_fraction=args.cast_fraction,
        indirect_call_fraction=args.indirect_fraction, import_fraction=args.import_fraction,
    )


def cmd_fuzz(args) -> int:
    report = fuzz_soundness(_params(args), args.programs, args.config, minimize=not args.no_minimize)
    print(f"{report.programs} programs, {report.modules} modules, "
          f"{report.checked_pairs} pairs checked, {len(report.violations)} violations")
    for v in report.violations[:args.show]:
        print(f"  {v}")
        if v.witness:
            for m in v.witness:
                print("\n".join("    " + line for line in print_tiny_module(m).splitlines()))
    return 0 if report.passed else 1


def cmd_generate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.stress:
        n, m = args.stress
        mod = generate_stress_instance(n, m)
        (out / f"{mod.name}.tir").write_text(print_tiny_module(mod))
        return 0
    for k in range(args.programs):
        seed = args.seed + k
        for mod in generate_program(_params(args).with_seed(seed)):
            (out / f"s{seed}_{mod.name}.tir").write_text(print_tiny_module(mod))
    return 0


def _bench(args):
    modules = [(p.name, load(p)) for p in collect(args.path)]
    return benchmark(modules, _configs(args.configs), args.reps)


def cmd_bench(args) -> int:
    report = _bench(args)
    if args.csv:
        Path(args.csv).write_text(report.csv())
    sys.stdout.write(report.format_table())
    return 0


def cmd_ratio(args) -> int:
    args.configs = f"{args.x},{args.y}"
    report = _bench(args)
    x, y = str(parse_config(args.x)), str(parse_config(args.y))
    print(f"file,{x}_us,ratio")
    for f, xt, r in ratio_points(report, x, y):
        print(f"{f},{xt:.1f},{r:.4f}")
    return 0


def cmd_alias(args) -> int:
    rows = []
    for path in collect(args.path):
        m = load(path)
        if not isinstance(m, TinyModule):
            if Path(args.path).is_dir():
                _l.warning("skipping %s: the alias client needs a TinyIR module", path)
                continue
            raise ValueError(f"{path}: the alias client needs a TinyIR module")
        report = conflict_rate(run(lower(m), args.config).solution(include_all=True), m)
        for fn, may, no, must, pct in report.rows():
            rows.append((path.name, fn, may, no, must, pct))
        total = report.total
        rows.append((path.name, "*", *(total[k] for k in _ALIAS_COLUMNS), report.may_percentage))
    lines = ["file,function,may,no,must,may_percent"]
    lines += [f"{f},{fn},{may},{no},{must},{pct:.2f}" for f, fn, may, no, must, pct in rows]
    text = "\n".join(lines) + "\n"
    if args.csv:
        Path(args.csv).write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_lower(args) -> int:
    m = load(args.file)
    if isinstance(m, TinyModule):
        sys.stdout.write(print_constraint_module(lower(m)))
    else:
        sys.stdout.write(print_constraint_module(m))
    return 0


# parser -------------------------------------------------------------------------


def _fuzz_options(p: argparse.ArgumentParser) -> None:
    d = FuzzParams()
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--programs", type=int, default=1, help="consecutive seeds to run")
    p.add_argument("--modules", type=int, default=d.modules)
    p.add_argument("--vars", type=int, default=d.vars)
    p.add_argument("--statements", type=int, default=d.statements)
    p.add_argument("--export-fraction", type=float, default=d.export_fraction)
    p.add_argument("--cast-fraction", type=float, default=d.cast_fraction)
    p.add_argument("--indirect-fraction", type=float, default=d.indirect_call_fraction)
    p.add_argument("--import-fraction", type=float, default=d.import_fraction)


def _pair(text: str) -> tuple[int, int]:
    n, _, m = text.partition(",")
    return int(n), int(m or n)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pipta", description="Points-to analysis for incomplete programs")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="solve one module")
    p.add_argument("file")
    p.add_argument("--config", default="IP+WL(FIFO)+PIP")
    p.add_argument("--dump-solution", action="store_true")
    p.add_argument("--all", action="store_true", help="also report lowering temporaries")
    p.add_argument("--stats", metavar="JSON", help="write solver statistics (durations in microseconds)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("validate", help="check that every configuration agrees")
    p.add_argument("path", help="module file or directory")
    p.add_argument("--configs", default="all", help="'all' or a comma-separated list")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fuzz", help="soundness of partial solutions under linking")
    _fuzz_options(p)
    p.add_argument("--config", default="IP+WL(FIFO)+PIP")
    p.add_argument("--no-minimize", action="store_true")
    p.add_argument("--show", type=int, default=5, help="violations to print")
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("generate", help="write fuzzed programs or a stress instance as .tir files")
    _fuzz_options(p)
    p.add_argument("--stress", type=_pair, metavar="N,M")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="solver runtime table")
    p.add_argument("path")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--configs", default="IP+WL(FIFO)+PIP,IP+WL(FIFO),EP+WL(FIFO)")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("ratio", help="per-file runtime ratio of two configurations")
    p.add_argument("path")
    p.add_argument("--x", default="EP+OVS+WL(LRF)+OCD")
    p.add_argument("--y", default="IP+WL(FIFO)+PIP")
    p.add_argument("--reps", type=int, default=5)
    p.set_defaults(func=cmd_ratio)

    p = sub.add_parser("alias", help="load/store conflict rate as CSV")
    p.add_argument("path", help=".tir file or directory")
    p.add_argument("--config", default="IP+WL(FIFO)+PIP")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_alias)

    p = sub.add_parser("lower", help="print the constraint module of a file")
    p.add_argument("file")
    p.set_defaults(func=cmd_lower)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, ConfigError, LinkError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
