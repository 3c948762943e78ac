"""Alias queries and the load/store conflict rate."""
from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field

from .graph import Solution
from .tinyir import Load, Store, TinyModule


class AliasResult(enum.Enum):
    NO_ALIAS = "NoAlias"
    MAY_ALIAS = "MayAlias"
    MUST_ALIAS = "MustAlias"


def alias(sol: Solution, a: int, b: int) -> AliasResult:
    """Classify two pointer variables of ``sol`` (ids of the original module)."""
    if a not in sol.sets or b not in sol.sets:
        missing = a if a not in sol.sets else b
        raise KeyError(f"variable {missing} has no points-to set")
    if a == b:
        return AliasResult.MUST_ALIAS
    if sol.sets[a].isdisjoint(sol.sets[b]):
        return AliasResult.NO_ALIAS
    return AliasResult.MAY_ALIAS


@dataclass(frozen=True)
class Address:
    """Address operand of a memory access: a pointer register or a symbol."""

    key: str          # variable name in the lowered module
    direct: bool      # True when the access names the symbol itself


def classify(sol: Solution, a: Address, b: Address) -> AliasResult:
    if a == b:
        return AliasResult.MUST_ALIAS
    sa = _targets(sol, a)
    sb = _targets(sol, b)
    return AliasResult.NO_ALIAS if sa.isdisjoint(sb) else AliasResult.MAY_ALIAS


def _targets(sol: Solution, a: Address) -> frozenset:
    if a.direct:
        return frozenset((sol.id_of(a.key),))
    return sol.sets[sol.id_of(a.key)]


@dataclass
class ConflictReport:
    per_function: dict[str, Counter] = field(default_factory=dict)

    @property
    def total(self) -> Counter:
        out = Counter()
        for c in self.per_function.values():
            out.update(c)
        return out

    @staticmethod
    def percentage(c: Counter) -> float:
        n = sum(c.values())
        return 100.0 * c[AliasResult.MAY_ALIAS] / n if n else 0.0

    @property
    def may_percentage(self) -> float:
        return self.percentage(self.total)

    def rows(self) -> list[tuple[str, int, int, int, float]]:
        out = []
        for name, c in self.per_function.items():
            out.append((name, c[AliasResult.MAY_ALIAS], c[AliasResult.NO_ALIAS],
                        c[AliasResult.MUST_ALIAS], self.percentage(c)))
        return out


def memory_accesses(m: TinyModule, function: str) -> list[tuple[str, Address]]:
    """(kind, address) for each Load/Store of ``function``, in body order."""
    fn = m.function(function)
    local = fn.locals()
    out = []
    for st in fn.body or ():
        if isinstance(st, (Load, Store)):
            name = st.addr
            if name in local and local[name][0] == "reg":
                addr = Address(f"{fn.name}.{name}", False)
            elif name in local:
                addr = Address(f"{fn.name}.{name}", True)
            else:
                addr = Address(name, True)
            out.append(("load" if isinstance(st, Load) else "store", addr))
    return out


def conflict_rate(sol: Solution, m: TinyModule) -> ConflictReport:
    """Alias each store against every other access of the same function once."""
    report = ConflictReport()
    for fn in m.functions:
        if fn.body is None:
            continue
        counts = Counter()
        accesses = memory_accesses(m, fn.name)
        for i, (kind_i, a) in enumerate(accesses):
            for kind_j, b in accesses[i + 1:]:
                if kind_i == "store" or kind_j == "store":
                    try:
                        counts[classify(sol, a, b)] += 1
                    except (KeyError, ValueError) as exc:
                        raise ValueError(f"solution does not match module {m.name}: {exc}") from exc
        report.per_function[fn.name] = counts
    return report
