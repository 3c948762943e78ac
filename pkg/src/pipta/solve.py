"""Top-level solve entry points."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

from .config import Engine, SolverConfig, parse_config
from .constraints import ConstraintModule
from .graph import DOUBLE, ConstraintGraph, Solution, build_graph, canonical_solution
from .naive import NaiveResult, solve_naive
from .offline import ovs_preprocess
from .worklist import WorklistTrace, solve_worklist


@dataclass
class SolveStats:
    visits: int = 0
    explicit_pointees: int = 0
    edges_added: int = 0
    edges_removed: int = 0
    unifications: int = 0
    wall_time_us: float = 0.0
    ovs_unifications: int = 0
    edges_skipped: int = 0
    cycles_found: int = 0
    max_double_visits: int = 0
    doubly_flagged_nonempty: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolveResult:
    config: SolverConfig
    graph: ConstraintGraph
    stats: SolveStats
    trace: Optional[WorklistTrace] = None
    naive: Optional[NaiveResult] = None
    ovs: list = field(default_factory=list)

    def solution(self, include_all: bool = False) -> Solution:
        return canonical_solution(self.graph, include_all)


def run(m: ConstraintModule, config: Union[SolverConfig, str]) -> SolveResult:
    """Build the graph for ``config`` and solve it; only solving is timed."""
    cfg = parse_config(config) if isinstance(config, str) else config
    g = build_graph(m, cfg.representation)
    return run_graph(g, cfg)


def run_graph(g: ConstraintGraph, cfg: SolverConfig) -> SolveResult:
    trace = naive = None
    ovs = []
    start = time.perf_counter()
    if cfg.ovs:
        ovs = ovs_preprocess(g)
    if cfg.engine is Engine.NAIVE:
        naive = solve_naive(g)
    else:
        trace = solve_worklist(g, cfg)
    elapsed = time.perf_counter() - start

    stats = SolveStats(
        visits=trace.visits if trace else naive.passes,
        explicit_pointees=g.explicit_pointees(),
        edges_added=g.edges_added,
        edges_removed=g.edges_removed,
        unifications=g.unifications,
        wall_time_us=elapsed * 1e6,
        ovs_unifications=len(ovs),
    )
    if trace:
        stats.edges_skipped = trace.edges_skipped
        stats.cycles_found = trace.cycles_found
        stats.max_double_visits = max(trace.double_visits.values(), default=0)
    stats.doubly_flagged_nonempty = sum(
        1 for r in g.reps() if g.flags[r] & DOUBLE == DOUBLE and g.sol[r]
    )
    return SolveResult(cfg, g, stats, trace, naive, ovs)


def solve(m: ConstraintModule, config: Union[SolverConfig, str] = "IP+WL(FIFO)+PIP") -> Solution:
    return run(m, config).solution()
