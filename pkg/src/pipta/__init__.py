"""Sound inclusion-based points-to analysis for incomplete programs."""
from __future__ import annotations

from .config import SolverConfig, enumerate_configs, parse_config
from .constraints import (
    ConstraintModule, Flag, ModuleError, ParseError, parse_constraint_module,
    print_constraint_module, validate,
)
from .graph import EXTERNAL, Representation, Solution, build_graph, canonical_solution, dump_solution
from .solve import SolveResult, SolveStats, run, solve
from .tinyir import link, lower, parse_tiny_module, print_tiny_module

__all__ = [
    "ConstraintModule", "EXTERNAL", "Flag", "ModuleError", "ParseError", "Representation",
    "Solution", "SolveResult", "SolveStats", "SolverConfig", "build_graph", "canonical_solution",
    "dump_solution", "enumerate_configs", "link", "lower", "parse_config",
    "parse_constraint_module", "parse_tiny_module", "print_constraint_module",
    "print_tiny_module", "run", "solve", "validate",
]
