"""Cross-configuration validation, soundness fuzzing and benchmarking."""
from __future__ import annotations

import logging
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .config import SolverConfig, enumerate_configs, parse_config
from .constraints import ConstraintModule
from .generate import FuzzParams, generate_program
from .graph import EXTERNAL, Solution, build_graph
from .solve import SolveStats, run, run_graph
from .tinyir import TinyModule, link_with_map, lower

_l = logging.getLogger(__name__)

ModuleLike = Union[ConstraintModule, TinyModule]


def as_constraints(m: ModuleLike) -> ConstraintModule:
    return lower(m) if isinstance(m, TinyModule) else m


# cross-configuration validation ---------------------------------------------


@dataclass
class ValidationReport:
    module: str
    configs: int = 0
    passed: bool = True
    solution: Optional[Solution] = None
    failures: list[str] = field(default_factory=list)

    def __str__(self) -> str:
        status = "pass" if self.passed else "FAIL"
        text = f"{self.module}: {status} ({self.configs} configurations)"
        if self.failures:
            text += "\n  " + "\n  ".join(self.failures)
        return text


def validate_all_configs(
    m: ModuleLike, configs: Optional[Sequence[SolverConfig]] = None, name: Optional[str] = None
) -> ValidationReport:
    """Solve under every configuration; pass iff all canonical solutions agree."""
    cm = as_constraints(m)
    configs = list(configs) if configs is not None else enumerate_configs()
    report = ValidationReport(name or cm.name, len(configs))
    reference = None
    ref_cfg = None
    for cfg in configs:
        sol = run(cm, cfg).solution()
        if reference is None:
            reference, ref_cfg = sol, cfg
            report.solution = sol
            continue
        if sol != reference:
            report.passed = False
            diff = reference.first_difference(sol)
            report.failures.append(f"{cfg} differs from {ref_cfg}: {diff}")
    return report


# soundness under linking ----------------------------------------------------


@dataclass
class Violation:
    seed: int
    module: str
    variable: str
    target: str
    detail: str
    witness: Optional[list[TinyModule]] = None

    def __str__(self) -> str:
        return f"seed {self.seed} module {self.module}: {self.variable} misses {self.target} ({self.detail})"


@dataclass
class FuzzReport:
    programs: int = 0
    modules: int = 0
    checked_pairs: int = 0
    violations: list[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def _linked_name(name: str, renames: dict[str, str]) -> str:
    head, dot, rest = name.partition(".")
    return renames.get(head, head) + dot + rest


def check_partial_against_whole(
    modules: list[TinyModule], config: Union[SolverConfig, str] = "IP+WL(FIFO)+PIP", seed: int = 0
) -> tuple[int, list[Violation]]:
    """Compare each module's partial solution with the linked program's."""
    cfg = parse_config(config) if isinstance(config, str) else config
    linked, renames = link_with_map(modules)
    whole = run(lower(linked), cfg).solution(include_all=True)
    checked = 0
    violations = []
    for i, tm in enumerate(modules):
        part = run(lower(tm), cfg).solution(include_all=True)
        # linked location name -> this module's variable name
        local_of = {}
        for v, name in enumerate(part.names):
            local_of[_linked_name(name, renames[i])] = name
        part_ids = {name: v for v, name in enumerate(part.names)}
        for v, members in part.sets.items():
            name = part.names[v]
            w = whole.id_of(_linked_name(name, renames[i]))
            has_ext = EXTERNAL in members
            for x in whole.sets[w]:
                checked += 1
                if x == EXTERNAL:
                    if not has_ext:
                        violations.append(Violation(seed, tm.name, name, "EXTERNAL", "unknown value not covered"))
                    continue
                local = local_of.get(whole.names[x])
                if local is None:
                    if not has_ext:
                        violations.append(
                            Violation(seed, tm.name, name, whole.names[x], "foreign location needs EXTERNAL")
                        )
                    continue
                lx = part_ids[local]
                if lx in members or (has_ext and lx in part.external):
                    continue
                violations.append(Violation(seed, tm.name, name, local, "own location missing"))
    return checked, violations


def minimize_witness(modules: list[TinyModule], still_fails) -> list[TinyModule]:
    """Greedily drop statements while ``still_fails(modules)`` holds."""
    from .tinyir import Alloca, FunctionDef, RegDecl, TinyParseError, check_tiny_module

    current = [TinyModule(m.name, list(m.globals),
                          [FunctionDef(f.name, f.linkage, list(f.params), f.returns,
                                       None if f.body is None else list(f.body)) for f in m.functions])
               for m in modules]
    changed = True
    while changed:
        changed = False
        for m in current:
            for f in m.functions:
                if f.body is None:
                    continue
                i = 0
                while i < len(f.body):
                    st = f.body[i]
                    if isinstance(st, (RegDecl, Alloca)):
                        i += 1
                        continue
                    f.body.pop(i)
                    try:
                        check_tiny_module(m)
                        ok = still_fails(current)
                    except (TinyParseError, ValueError):
                        ok = False
                    if ok:
                        changed = True
                    else:
                        f.body.insert(i, st)
                        i += 1
    return current


def fuzz_soundness(
    params: FuzzParams, programs: int = 1, config: Union[SolverConfig, str] = "IP+WL(FIFO)+PIP",
    minimize: bool = True,
) -> FuzzReport:
    """Seeds ``params.seed .. params.seed + programs - 1``."""
    report = FuzzReport()
    for k in range(programs):
        seed = params.seed + k
        modules = generate_program(params.with_seed(seed))
        checked, violations = check_partial_against_whole(modules, config, seed)
        report.programs += 1
        report.modules += len(modules)
        report.checked_pairs += checked
        if violations and minimize:
            witness = minimize_witness(
                modules, lambda ms: bool(check_partial_against_whole(ms, config, seed)[1])
            )
            violations[0].witness = witness
        report.violations.extend(violations)
    return report


# benchmarking ---------------------------------------------------------------

PERCENTILES = (10, 25, 50, 90, 99)


@dataclass
class BenchRow:
    file: str
    config: str
    median_us: float
    stats: SolveStats


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)

    def table(self) -> dict[str, dict[str, float]]:
        """Per configuration: p10..p99, max and mean over per-file medians."""
        by_config: dict[str, list[float]] = {}
        for row in self.rows:
            by_config.setdefault(row.config, []).append(row.median_us)
        out = {cfg: _aggregate(times) for cfg, times in by_config.items()}
        ep = [row for row in self.rows if row.config.startswith("EP")]
        if ep:
            best: dict[str, float] = {}
            for row in ep:
                best[row.file] = min(best.get(row.file, float("inf")), row.median_us)
            out["EP Oracle"] = _aggregate(list(best.values()))
        return out

    def median(self, file: str, config: str) -> float:
        for row in self.rows:
            if row.file == file and row.config == config:
                return row.median_us
        raise KeyError((file, config))

    def csv(self) -> str:
        lines = ["file,config,median_us,visits,explicit_pointees,edges_added,edges_removed,unifications"]
        for r in self.rows:
            s = r.stats
            lines.append(f"{r.file},{r.config},{r.median_us:.1f},{s.visits},{s.explicit_pointees},"
                         f"{s.edges_added},{s.edges_removed},{s.unifications}")
        return "\n".join(lines) + "\n"

    def format_table(self) -> str:
        header = ["Configuration"] + [f"p{p}" for p in PERCENTILES] + ["Max", "Mean"]
        lines = [" | ".join(header)]
        for cfg, agg in self.table().items():
            cells = [cfg] + [f"{agg[h]:.0f}" for h in header[1:]]
            lines.append(" | ".join(cells))
        return "\n".join(lines) + "\n"


def _aggregate(times: list[float]) -> dict[str, float]:
    arr = np.asarray(times, dtype=float)
    out = {f"p{p}": float(np.percentile(arr, p)) for p in PERCENTILES}
    out["Max"] = float(arr.max())
    out["Mean"] = float(arr.mean())
    return out


def benchmark(
    modules: Iterable[tuple[str, ModuleLike]], configs: Sequence[Union[SolverConfig, str]], reps: int = 1
) -> BenchReport:
    """Median solve time per (file, config); graphs are rebuilt per run, untimed."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    cfgs = [parse_config(c) if isinstance(c, str) else c for c in configs]
    report = BenchReport()
    for name, m in modules:
        cm = as_constraints(m)
        for cfg in cfgs:
            times = []
            stats = None
            for _ in range(reps):
                g = build_graph(cm, cfg.representation)
                result = run_graph(g, cfg)
                times.append(result.stats.wall_time_us)
                stats = result.stats
            report.rows.append(BenchRow(name, str(cfg), statistics.median(times), stats))
    return report


def ratio_points(report: BenchReport, x_config: str, y_config: str) -> list[tuple[str, float, float]]:
    """(file, x time, y/x ratio) points for a scatter of two configurations."""
    xs = {r.file: r.median_us for r in report.rows if r.config == x_config}
    ys = {r.file: r.median_us for r in report.rows if r.config == y_config}
    return [(f, xs[f], ys[f] / xs[f] if xs[f] else float("inf")) for f in sorted(xs) if f in ys]
