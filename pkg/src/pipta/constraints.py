"""Constraint variables, the base and extended constraint languages, and the
line-oriented constraint-IR text format.

A constraint module is a set of variables (indexed by 32-bit ids) plus a set
of constraints over them::

    p <- &x        p ⊇ {x}     (Base)
    p <- q         p ⊇ q       (Simple)
    p <- *q        p ⊇ *q      (Load)
    *p <- q        *p ⊇ q      (Store)
    fun f ret=r args=(a,_)     Func(f, r, a, _)
    call h ret=r args=(a,_)    CallFunc(h, r, a, _)

The external region Ω is not a variable here.  Everything involving it is a
per-variable flag (see :class:`Flag`).
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

MAX_VARS = 2**32 - 1


class Kind(enum.Enum):
    REGISTER = "reg"
    MEMORY = "mem"


class Linkage(enum.Enum):
    INTERNAL = "internal"
    EXPORT = "export"
    IMPORT = "import"


class Flag(enum.IntFlag):
    """Extended-language constraints, one bit each."""

    NONE = 0
    EXT_TARGET = 1  # Ω ⊒ {x}
    POINTS_EXT = 2  # p ⊒ Ω
    POINTEES_ESCAPE = 4  # Ω ⊒ p
    STORE_SCALAR = 8  # *p ⊒ Ω
    LOAD_SCALAR = 16  # Ω ⊒ *p
    IMPORTED_FUNC = 32  # ImportedFunc(f)


FLAG_NAMES = {
    Flag.EXT_TARGET: "ext_target",
    Flag.POINTS_EXT: "points_ext",
    Flag.POINTEES_ESCAPE: "pointees_escape",
    Flag.STORE_SCALAR: "store_scalar",
    Flag.LOAD_SCALAR: "load_scalar",
    Flag.IMPORTED_FUNC: "imported_func",
}
FLAGS_BY_NAME = {name: flag for flag, name in FLAG_NAMES.items()}
ALL_FLAGS = tuple(FLAG_NAMES)

# Flags describing a memory location (kept per variable, never merged by
# unification) versus flags describing a pointer value (shared by a class).
LOCATION_FLAGS = Flag.EXT_TARGET | Flag.IMPORTED_FUNC
POINTER_FLAGS = Flag.POINTS_EXT | Flag.POINTEES_ESCAPE | Flag.STORE_SCALAR | Flag.LOAD_SCALAR


@dataclass(frozen=True)
class VarInfo:
    name: str
    kind: Kind
    pointer_compatible: bool
    linkage: Linkage = Linkage.INTERNAL
    is_function: bool = False

    @property
    def is_register(self) -> bool:
        return self.kind is Kind.REGISTER

    @property
    def is_memory(self) -> bool:
        return self.kind is Kind.MEMORY

    @property
    def synthetic(self) -> bool:
        """Registers invented by lowering (call-routing dummies, temporaries)."""
        return self.kind is Kind.REGISTER and self.name.rsplit(".", 1)[-1].startswith("$")


@dataclass(frozen=True)
class Base:
    p: int
    x: int

    order = 0


@dataclass(frozen=True)
class Simple:
    p: int
    q: int

    order = 1


@dataclass(frozen=True)
class Load:
    p: int
    q: int

    order = 2


@dataclass(frozen=True)
class Store:
    p: int
    q: int

    order = 3


@dataclass(frozen=True)
class Function:
    f: int
    ret: Optional[int]
    args: tuple[Optional[int], ...] = ()

    order = 4


@dataclass(frozen=True)
class Call:
    h: int
    ret: Optional[int]
    args: tuple[Optional[int], ...] = ()

    order = 5


Constraint = Union[Base, Simple, Load, Store, Function, Call]


def _sort_key(c: Constraint) -> tuple:
    def slot(v):
        return -1 if v is None else v

    if isinstance(c, (Function, Call)):
        head = c.f if isinstance(c, Function) else c.h
        return (c.order, head, slot(c.ret), len(c.args), tuple(slot(a) for a in c.args))
    first, second = (c.p, c.x) if isinstance(c, Base) else (c.p, c.q)
    return (c.order, first, second)


def operands(c: Constraint) -> Iterator[int]:
    if isinstance(c, Base):
        yield c.p
        yield c.x
    elif isinstance(c, (Simple, Load, Store)):
        yield c.p
        yield c.q
    else:
        yield c.f if isinstance(c, Function) else c.h
        if c.ret is not None:
            yield c.ret
        yield from (a for a in c.args if a is not None)


class ModuleError(ValueError):
    """Raised when a constraint module violates its invariants."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int = 1):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


class ConstraintModule:
    """Variables, a deduplicated constraint set and initial flags.

    Built incrementally by the frontend or the parser, then treated as
    read-only by the solvers.
    """

    def __init__(self, name: str = "module"):
        self.name = name
        self.vars: list[VarInfo] = []
        self.flags: list[Flag] = []
        self._constraints: dict[Constraint, None] = {}
        self._by_name: dict[str, int] = {}
        self.version = 0  # bumped on every mutation; keys derived caches

    # construction -------------------------------------------------------

    def add_var(
        self,
        name: str,
        kind: Kind,
        pointer_compatible: bool,
        linkage: Linkage = Linkage.INTERNAL,
        is_function: bool = False,
    ) -> int:
        if len(self.vars) >= MAX_VARS:
            raise OverflowError("variable index space exhausted")
        vid = len(self.vars)
        self.version += 1
        self.vars.append(VarInfo(name, kind, pointer_compatible, linkage, is_function))
        self.flags.append(Flag.NONE)
        self._by_name.setdefault(name, vid)
        return vid

    def add(self, c: Constraint) -> bool:
        """Insert a constraint; returns False if it was already present."""
        if c in self._constraints:
            return False
        self._constraints[c] = None
        self.version += 1
        return True

    def set_flag(self, v: int, flag: Flag) -> None:
        self.flags[v] |= flag
        self.version += 1

    # queries --------------------------------------------------------------

    @property
    def constraints(self) -> list[Constraint]:
        return list(self._constraints)

    def __len__(self) -> int:
        return len(self.vars)

    def var(self, name: str) -> int:
        return self._by_name[name]

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def name_of(self, v: int) -> str:
        return self.vars[v].name

    def sorted_constraints(self) -> list[Constraint]:
        return sorted(self._constraints, key=_sort_key)

    def of_type(self, cls) -> list:
        return [c for c in self._constraints if isinstance(c, cls)]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConstraintModule):
            return NotImplemented
        return (
            self.name == other.name
            and self.vars == other.vars
            and self.flags == other.flags
            and set(self._constraints) == set(other._constraints)
        )

    def __repr__(self) -> str:
        return f"<ConstraintModule {self.name}: {len(self.vars)} vars, {len(self._constraints)} constraints>"


# validation -----------------------------------------------------------------


def validate(m: ConstraintModule) -> list[str]:
    """Return a list of invariant violations (empty when ``m`` is well formed)."""
    out: list[str] = []
    n = len(m.vars)
    seen: dict[str, int] = {}
    for vid, info in enumerate(m.vars):
        if info.name in seen:
            out.append(f"duplicate variable name {info.name!r}")
        seen[info.name] = vid
        if info.is_register and info.linkage is not Linkage.INTERNAL:
            out.append(f"register {info.name} has {info.linkage.value} linkage")
        if info.is_function and not info.is_memory:
            out.append(f"function {info.name} is not a memory variable")
        if m.flags[vid] & Flag.IMPORTED_FUNC and not info.is_function:
            out.append(f"imported_func flag on non-function {info.name}")

    def name(v):
        return m.vars[v].name if 0 <= v < n else f"#{v}"

    for c in m.constraints:
        bad = [v for v in operands(c) if not 0 <= v < n]
        if bad:
            out.append(f"{type(c).__name__} references undeclared variable(s) {bad}")
            continue
        if isinstance(c, Base) and not m.vars[c.x].is_memory:
            out.append(f"Base target {name(c.x)} is a register")
        elif isinstance(c, Function):
            if not m.vars[c.f].is_function:
                out.append(f"Function constraint on non-function {name(c.f)}")
        elif isinstance(c, Call) and not m.vars[c.h].pointer_compatible:
            out.append(f"Call through pointer-incompatible {name(c.h)}")
        if isinstance(c, (Function, Call)):
            for slot in (c.ret, *c.args):
                if slot is not None and not m.vars[slot].pointer_compatible:
                    out.append(f"{type(c).__name__} slot {name(slot)} is not pointer compatible")
    return out


def check(m: ConstraintModule) -> ConstraintModule:
    problems = validate(m)
    if problems:
        raise ModuleError(problems)
    return m


# text format ----------------------------------------------------------------

_NAME = r"[A-Za-z_$.@%][A-Za-z0-9_$.@%]*"
_NAME_RE = re.compile(_NAME)
_CALL_RE = re.compile(rf"^(fun|call)\s+({_NAME})\s+ret=({_NAME})\s+args=\((.*)\)$")


def print_constraint_module(m: ConstraintModule) -> str:
    names = [v.name for v in m.vars]

    def slot(v):
        return "_" if v is None else names[v]

    lines = [f"module {m.name}"]
    for info in m.vars:
        parts = ["var", info.name, info.kind.value, "ptr" if info.pointer_compatible else "scalar"]
        if info.linkage is not Linkage.INTERNAL:
            parts.append(info.linkage.value)
        if info.is_function:
            parts.append("func")
        lines.append(" ".join(parts))
    for c in m.sorted_constraints():
        if isinstance(c, Base):
            lines.append(f"{names[c.p]} <- &{names[c.x]}")
        elif isinstance(c, Simple):
            lines.append(f"{names[c.p]} <- {names[c.q]}")
        elif isinstance(c, Load):
            lines.append(f"{names[c.p]} <- *{names[c.q]}")
        elif isinstance(c, Store):
            lines.append(f"*{names[c.p]} <- {names[c.q]}")
        else:
            kw, head = ("fun", c.f) if isinstance(c, Function) else ("call", c.h)
            args = ",".join(slot(a) for a in c.args)
            lines.append(f"{kw} {names[head]} ret={slot(c.ret)} args=({args})")
    for vid, flags in enumerate(m.flags):
        for flag in ALL_FLAGS:
            if flags & flag:
                lines.append(f"flag {names[vid]} {FLAG_NAMES[flag]}")
    return "\n".join(lines) + "\n"


def parse_constraint_module(text: str) -> ConstraintModule:
    m: Optional[ConstraintModule] = None

    def lookup(name: str, lineno: int, col: int) -> int:
        if name not in m:
            raise ParseError(f"undeclared variable {name!r}", lineno, col)
        return m.var(name)

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        col = len(raw) - len(raw.lstrip()) + 1
        if m is None:
            parts = line.split()
            if len(parts) != 2 or parts[0] != "module" or not _NAME_RE.fullmatch(parts[1]):
                raise ParseError("expected 'module <name>' header", lineno, col)
            m = ConstraintModule(parts[1])
            continue
        parts = line.split()
        head = parts[0]
        if head == "var":
            _parse_var(m, parts, lineno, col)
        elif head == "flag":
            if len(parts) != 3 or parts[2] not in FLAGS_BY_NAME:
                raise ParseError("expected 'flag <var> <flag-name>'", lineno, col)
            m.set_flag(lookup(parts[1], lineno, col + 5), FLAGS_BY_NAME[parts[2]])
        elif head in ("fun", "call"):
            match = _CALL_RE.match(line)
            if not match:
                raise ParseError(f"malformed {head} constraint", lineno, col)
            kw, h, r, args = match.groups()
            hv = lookup(h, lineno, col + len(kw) + 1)
            rv = None if r == "_" else lookup(r, lineno, col)
            slots = []
            if args.strip():
                for a in args.split(","):
                    a = a.strip()
                    if not _NAME_RE.fullmatch(a):
                        raise ParseError(f"bad argument {a!r}", lineno, col)
                    slots.append(None if a == "_" else lookup(a, lineno, col))
            cls = Function if kw == "fun" else Call
            m.add(cls(hv, rv, tuple(slots)))
        else:
            m.add(_parse_assignment(m, line, lineno, col, lookup))
    if m is None:
        raise ParseError("empty input: missing module header", 1)
    problems = validate(m)
    if problems:
        raise ModuleError(problems)
    return m


def _parse_var(m: ConstraintModule, parts: list[str], lineno: int, col: int) -> None:
    if len(parts) < 4:
        raise ParseError("expected 'var <name> (reg|mem) (ptr|scalar) ...'", lineno, col)
    _, name, kind, compat, *rest = parts
    if not _NAME_RE.fullmatch(name) or name == "_":
        raise ParseError(f"bad variable name {name!r}", lineno, col + 4)
    if name in m:
        raise ParseError(f"duplicate variable {name!r}", lineno, col + 4)
    if kind not in ("reg", "mem"):
        raise ParseError(f"expected reg|mem, got {kind!r}", lineno, col)
    if compat not in ("ptr", "scalar"):
        raise ParseError(f"expected ptr|scalar, got {compat!r}", lineno, col)
    linkage = Linkage.INTERNAL
    is_function = False
    for word in rest:
        if word in ("export", "import") and linkage is Linkage.INTERNAL and not is_function:
            linkage = Linkage(word)
        elif word == "func" and not is_function:
            is_function = True
        else:
            raise ParseError(f"unexpected {word!r} in var declaration", lineno, col)
    m.add_var(name, Kind(kind), compat == "ptr", linkage, is_function)


def _parse_assignment(m, line, lineno, col, lookup) -> Constraint:
    if "<-" not in line:
        raise ParseError(f"unrecognised line {line!r}", lineno, col)
    lhs, rhs = (s.strip() for s in line.split("<-", 1))
    rcol = col + line.index("<-") + 3
    store = lhs.startswith("*")
    lhs_name = lhs[1:].strip() if store else lhs
    if not _NAME_RE.fullmatch(lhs_name):
        raise ParseError(f"bad left-hand side {lhs!r}", lineno, col)
    rhs_op = rhs[:1] if rhs[:1] in "&*" else ""
    rhs_name = rhs[len(rhs_op):].strip()
    if not _NAME_RE.fullmatch(rhs_name):
        raise ParseError(f"bad right-hand side {rhs!r}", lineno, rcol)
    p = lookup(lhs_name, lineno, col)
    q = lookup(rhs_name, lineno, rcol)
    if store:
        if rhs_op:
            raise ParseError("store source must be a plain variable", lineno, rcol)
        return Store(p, q)
    if rhs_op == "&":
        if not m.vars[q].is_memory:
            raise ParseError(f"address of register {rhs_name!r}", lineno, rcol)
        return Base(p, q)
    if rhs_op == "*":
        return Load(p, q)
    return Simple(p, q)


def constraint_str(m: ConstraintModule, c: Constraint) -> str:
    """Render one constraint in the text syntax (used in reports)."""
    tmp = ConstraintModule(m.name)
    tmp.vars = m.vars
    tmp._constraints = {c: None}
    return print_constraint_module(tmp).splitlines()[len(m.vars) + 1]


def iter_flags(flags: Flag) -> Iterable[Flag]:
    return (f for f in ALL_FLAGS if flags & f)
