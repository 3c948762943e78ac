"""Post-solve closure audit.

The audit re-checks a canonical solution against the original constraint
module and reports every inference rule whose conclusion is missing.  It
works on canonical sets only, so one audit covers both representations:
the external region is the pseudo-location EXTERNAL, whose content is
``E ∪ {EXTERNAL}``, and a pointer-incompatible variable in a pointer
position behaves as that region.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .constraints import Base, Call, ConstraintModule, Flag, Function, Load, Simple, Store
from .graph import EXTERNAL, Solution


@dataclass
class AuditReport:
    checked: int = 0
    missing: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.missing

    def __str__(self) -> str:
        if self.passed:
            return f"audit passed ({self.checked} rule instances)"
        head = f"audit found {len(self.missing)} unrepresented conclusions"
        return head + "\n  " + "\n  ".join(self.missing[:20])


def audit(m: ConstraintModule, sol: Solution) -> AuditReport:
    """Check that ``sol`` (computed with ``include_all``) is closed under every rule."""
    report = AuditReport()
    E = sol.external
    omega_content = E | {EXTERNAL}
    compat = [v.pointer_compatible for v in m.vars]
    name = sol.name

    for v, ok in enumerate(compat):
        if ok and v not in sol.sets:
            raise ValueError(f"solution lacks {m.name_of(v)}; solve with include_all")

    def pts(v) -> frozenset:
        # pointer view: an incompatible or absent slot is the external region
        if v is None or not compat[v]:
            return omega_content
        return sol.sets[v]

    def content(x: int) -> frozenset:
        if x == EXTERNAL or not compat[x]:
            return omega_content
        return sol.sets[x]

    def need_subset(small, v, why: str) -> None:
        # small ⊆ pts(v); an incompatible destination is the external region
        report.checked += 1
        big = pts(v)
        lost = small - big
        if lost:
            where = "Ω" if v is None or not compat[v] else m.name_of(v)
            report.missing.append(f"{why}: {where} lacks {sorted(name(x) for x in lost)}")

    def need_in_content(small, x: int, why: str) -> None:
        report.checked += 1
        lost = small - content(x)
        if lost:
            report.missing.append(f"{why}: content of {name(x)} lacks {sorted(name(y) for y in lost)}")

    def need_escaped(small, why: str) -> None:
        report.checked += 1
        lost = {x for x in small if x != EXTERNAL} - E
        if lost:
            report.missing.append(f"{why}: {sorted(name(x) for x in lost)} not in E")

    def bind(ret, args, fret, fargs, why: str) -> None:
        # call site (ret, args) against callee signature (fret, fargs)
        if ret is not None:
            need_subset(pts(fret), ret, why + " return")
        elif fret is not None and compat[fret]:
            need_escaped(pts(fret), why + " discarded return")
        for i, a in enumerate(args):
            if i < len(fargs):
                f = fargs[i]
                if f is not None and compat[f]:
                    need_subset(pts(a), f, why + f" arg {i}")
                else:
                    need_escaped(pts(a), why + f" arg {i}")
            else:
                need_escaped(pts(a), why + f" extra arg {i}")

    funcs: dict[int, list[Function]] = {}
    for c in m.constraints:
        if isinstance(c, Function):
            funcs.setdefault(c.f, []).append(c)

    for c in m.constraints:
        if isinstance(c, Base):
            if compat[c.p]:
                need_subset(frozenset((c.x,)), c.p, "base")
            else:
                need_escaped({c.x}, "base into scalar")
        elif isinstance(c, Simple):
            if compat[c.p]:
                need_subset(pts(c.q), c.p, "copy")
            else:
                need_escaped(pts(c.q), "copy into scalar")
        elif isinstance(c, Load):
            for t in pts(c.q):
                if compat[c.p]:
                    need_subset(content(t), c.p, f"load via {name(t)}")
                else:
                    # scalar load of a pointer: the value may be smuggled anywhere
                    need_escaped(content(t), f"scalar load via {name(t)}")
        elif isinstance(c, Store):
            for t in pts(c.p):
                if t == EXTERNAL or not compat[t]:
                    need_escaped(pts(c.q), "store into Ω")
                else:
                    need_in_content(pts(c.q), t, "store")
        elif isinstance(c, Call):
            for t in pts(c.h):
                if t == EXTERNAL or m.flags[t] & Flag.IMPORTED_FUNC:
                    bind(c.ret, c.args, None, (), f"call of Ω via {name(t)}")
                for fc in funcs.get(t, ()):
                    bind(c.ret, c.args, fc.ret, fc.args, f"call of {name(t)}")

    # flags from the frontend
    for v, f in enumerate(m.flags):
        if f & (Flag.EXT_TARGET | Flag.IMPORTED_FUNC):
            report.checked += 1
            if v not in E:
                report.missing.append(f"flagged {m.name_of(v)} not in E")
        if not compat[v]:
            continue
        if f & Flag.POINTS_EXT:
            need_subset(omega_content, v, "points external")
        if f & Flag.POINTEES_ESCAPE:
            need_escaped(pts(v), f"pointees of {m.name_of(v)} escape")
        if f & Flag.STORE_SCALAR:
            for t in pts(v):
                need_in_content(omega_content, t, "scalar store")
        if f & Flag.LOAD_SCALAR:
            for t in pts(v):
                need_escaped(content(t), "scalar load")

    # Ω's own behaviour: everything in E is read, written and called externally
    for x in E:
        if compat[x]:
            need_subset(omega_content, x, "external write")
            need_escaped(pts(x), "external read")
        for fc in funcs.get(x, ()):
            bind(None, (None,) * len(fc.args), fc.ret, fc.args, f"external call of {name(x)}")
            if fc.ret is not None and compat[fc.ret]:
                need_escaped(pts(fc.ret), f"return of {name(x)}")

    # representation invariant: pointing to Ω means pointing to all of E
    for v, s in sol.sets.items():
        report.checked += 1
        if EXTERNAL in s and not E <= s:
            report.missing.append(f"{m.name_of(v)} has EXTERNAL but lacks {sorted(name(x) for x in E - s)}")
    return report
