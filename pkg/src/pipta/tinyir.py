"""TinyIR: a small, flow-free module language that lowers to constraints.

Grammar (one item per line, ``#`` starts a comment)::

    module <name>
    global <name> (ptr|scalar) [export|import] [= &<sym>]
    func <name>(<p>: <ty>, ...) -> (ptr|scalar|void) import
    func <name>(<p>: <ty>, ...) -> (ptr|scalar|void) [export] {
      reg <r> (ptr|scalar)              # register declaration
      alloca <x> (ptr|scalar)           # stack cell, an addressable symbol
      <d> = &<sym>
      <d> = <s>
      <d> = load (ptr|scalar) <addr>
      store (ptr|scalar) <addr>, <s>
      [<d> =] call <f>(<a>, ...)
      [<d> =] calli <fp>(<a>, ...)
      ret [<v>]
      <d> = ptrtoint <s>
      <d> = inttoptr <s>
      <d> = malloc
      free <p>
      memcpy <dst-addr>, <src-addr>
    }

``<addr>`` is either a pointer register or a global/alloca symbol (a direct
access to that cell).  Registers must be declared before use.  Locals never
shadow module-level symbols.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

from . import constraints as cm
from .constraints import Flag, Kind, Linkage, ParseError


class TinyParseError(ParseError):
    pass


class LinkError(ValueError):
    pass


# statements ---------------------------------------------------------------


@dataclass(frozen=True)
class RegDecl:
    name: str
    is_ptr: bool


@dataclass(frozen=True)
class Alloca:
    dest: str
    cell_is_pointer: bool


@dataclass(frozen=True)
class AddrOf:
    dest: str
    symbol: str


@dataclass(frozen=True)
class Copy:
    dest: str
    src: str


@dataclass(frozen=True)
class Load:
    dest: str
    addr: str
    value_is_pointer: bool


@dataclass(frozen=True)
class Store:
    addr: str
    src: str
    value_is_pointer: bool


@dataclass(frozen=True)
class Call:
    dest: Optional[str]
    callee: str
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class CallIndirect:
    dest: Optional[str]
    fp: str
    args: tuple[str, ...] = ()


@dataclass(frozen=True)
class Ret:
    value: Optional[str] = None


@dataclass(frozen=True)
class PtrToInt:
    dest: str
    src: str


@dataclass(frozen=True)
class IntToPtr:
    dest: str
    src: str


@dataclass(frozen=True)
class Malloc:
    dest: str


@dataclass(frozen=True)
class Free:
    arg: str


@dataclass(frozen=True)
class Memcpy:
    dst: str
    src: str


Statement = Union[
    RegDecl, Alloca, AddrOf, Copy, Load, Store, Call, CallIndirect, Ret,
    PtrToInt, IntToPtr, Malloc, Free, Memcpy,
]


@dataclass(frozen=True)
class Global:
    name: str
    is_ptr: bool
    linkage: Linkage = Linkage.INTERNAL
    init: Optional[str] = None


@dataclass(frozen=True)
class Param:
    name: str
    is_ptr: bool


@dataclass
class FunctionDef:
    name: str
    linkage: Linkage
    params: list[Param]
    returns: str  # "ptr" | "scalar" | "void"
    body: Optional[list[Statement]] = None  # None for imports

    @property
    def returns_ptr(self) -> bool:
        return self.returns == "ptr"

    def locals(self) -> dict[str, tuple[str, bool]]:
        """Map local name -> (role, is_ptr); role is 'reg' or 'alloca'."""
        out = {p.name: ("reg", p.is_ptr) for p in self.params}
        for st in self.body or ():
            if isinstance(st, RegDecl):
                out[st.name] = ("reg", st.is_ptr)
            elif isinstance(st, Alloca):
                out[st.dest] = ("alloca", st.cell_is_pointer)
        return out


@dataclass
class TinyModule:
    name: str = "module"
    globals: list[Global] = field(default_factory=list)
    functions: list[FunctionDef] = field(default_factory=list)

    def symbols(self) -> dict[str, Union[Global, FunctionDef]]:
        out: dict[str, Union[Global, FunctionDef]] = {g.name: g for g in self.globals}
        out.update((f.name, f) for f in self.functions)
        return out

    def function(self, name: str) -> FunctionDef:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)


# printing -----------------------------------------------------------------


def _ty(is_ptr: bool) -> str:
    return "ptr" if is_ptr else "scalar"


def _stmt_text(st: Statement) -> str:
    if isinstance(st, RegDecl):
        return f"reg {st.name} {_ty(st.is_ptr)}"
    if isinstance(st, Alloca):
        return f"alloca {st.dest} {_ty(st.cell_is_pointer)}"
    if isinstance(st, AddrOf):
        return f"{st.dest} = &{st.symbol}"
    if isinstance(st, Copy):
        return f"{st.dest} = {st.src}"
    if isinstance(st, Load):
        return f"{st.dest} = load {_ty(st.value_is_pointer)} {st.addr}"
    if isinstance(st, Store):
        return f"store {_ty(st.value_is_pointer)} {st.addr}, {st.src}"
    if isinstance(st, (Call, CallIndirect)):
        kw, target = ("call", st.callee) if isinstance(st, Call) else ("calli", st.fp)
        text = f"{kw} {target}({', '.join(st.args)})"
        return f"{st.dest} = {text}" if st.dest else text
    if isinstance(st, Ret):
        return f"ret {st.value}" if st.value else "ret"
    if isinstance(st, PtrToInt):
        return f"{st.dest} = ptrtoint {st.src}"
    if isinstance(st, IntToPtr):
        return f"{st.dest} = inttoptr {st.src}"
    if isinstance(st, Malloc):
        return f"{st.dest} = malloc"
    if isinstance(st, Free):
        return f"free {st.arg}"
    if isinstance(st, Memcpy):
        return f"memcpy {st.dst}, {st.src}"
    raise TypeError(st)


def print_tiny_module(m: TinyModule) -> str:
    lines = [f"module {m.name}"]
    for g in m.globals:
        text = f"global {g.name} {_ty(g.is_ptr)}"
        if g.linkage is not Linkage.INTERNAL:
            text += f" {g.linkage.value}"
        if g.init:
            text += f" = &{g.init}"
        lines.append(text)
    for f in m.functions:
        params = ", ".join(f"{p.name}: {_ty(p.is_ptr)}" for p in f.params)
        head = f"func {f.name}({params}) -> {f.returns}"
        if f.linkage is not Linkage.INTERNAL:
            head += f" {f.linkage.value}"
        if f.body is None:
            lines.append(head)
            continue
        lines.append(head + " {")
        lines.extend("  " + _stmt_text(st) for st in f.body)
        lines.append("}")
    return "\n".join(lines) + "\n"


# parsing ------------------------------------------------------------------

_ID = r"[A-Za-z_][A-Za-z0-9_@]*"
_ID_RE = re.compile(_ID)
_GLOBAL_RE = re.compile(rf"^global\s+({_ID})\s+(ptr|scalar)(?:\s+(export|import))?(?:\s*=\s*&\s*({_ID}))?$")
_FUNC_RE = re.compile(
    rf"^func\s+({_ID})\s*\((.*?)\)\s*->\s*(ptr|scalar|void)(?:\s+(export|import))?\s*(\{{)?$"
)
_CALL_RE = re.compile(rf"^(?:({_ID})\s*=\s*)?(call|calli)\s+({_ID})\s*\((.*)\)$")


def parse_tiny_module(text: str) -> TinyModule:
    lines = text.splitlines()
    module: Optional[TinyModule] = None
    current: Optional[FunctionDef] = None
    positions: dict[int, int] = {}  # id of a parsed item -> its line, for check errors
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        col = len(raw) - len(raw.lstrip()) + 1
        if module is None:
            parts = line.split()
            if len(parts) != 2 or parts[0] != "module":
                raise TinyParseError("expected 'module <name>' header", lineno, col)
            module = TinyModule(parts[1])
            continue
        if current is not None:
            if line == "}":
                current = None
            else:
                st = _parse_stmt(line, lineno, col)
                positions[id(st)] = lineno
                current.body.append(st)
            continue
        if line.startswith("global"):
            match = _GLOBAL_RE.match(line)
            if not match:
                raise TinyParseError("malformed global declaration", lineno, col)
            name, ty, link, init = match.groups()
            g = Global(name, ty == "ptr", Linkage(link or "internal"), init)
            positions[id(g)] = lineno
            module.globals.append(g)
        elif line.startswith("func"):
            match = _FUNC_RE.match(line)
            if not match:
                raise TinyParseError("malformed function header", lineno, col)
            name, params, ret, link, brace = match.groups()
            linkage = Linkage(link or "internal")
            fn = FunctionDef(name, linkage, _parse_params(params, lineno, col), ret)
            if linkage is Linkage.IMPORT:
                if brace:
                    raise TinyParseError(f"imported function {name} has a body", lineno, col)
            else:
                if not brace:
                    raise TinyParseError(f"function {name} needs a body", lineno, col)
                fn.body = []
                current = fn
            positions[id(fn)] = lineno
            module.functions.append(fn)
        else:
            raise TinyParseError(f"unexpected {line.split()[0]!r} at module level", lineno, col)
    if module is None:
        raise TinyParseError("empty input: missing module header", 1)
    if current is not None:
        raise TinyParseError(f"unterminated body of {current.name}", len(lines))
    check_tiny_module(module, positions)
    return module


def _parse_params(text: str, lineno: int, col: int) -> list[Param]:
    out = []
    if not text.strip():
        return out
    for part in text.split(","):
        bits = [b.strip() for b in part.split(":")]
        if len(bits) != 2 or not _ID_RE.fullmatch(bits[0]) or bits[1] not in ("ptr", "scalar"):
            raise TinyParseError(f"bad parameter {part.strip()!r}", lineno, col)
        out.append(Param(bits[0], bits[1] == "ptr"))
    return out


def _names(text: str, lineno: int, col: int) -> tuple[str, ...]:
    if not text.strip():
        return ()
    out = tuple(a.strip() for a in text.split(","))
    for a in out:
        if not _ID_RE.fullmatch(a):
            raise TinyParseError(f"bad operand {a!r}", lineno, col)
    return out


def _parse_stmt(line: str, lineno: int, col: int) -> Statement:
    def ident(s: str) -> str:
        s = s.strip()
        if not _ID_RE.fullmatch(s):
            raise TinyParseError(f"bad operand {s!r}", lineno, col)
        return s

    def ty(s: str) -> bool:
        if s not in ("ptr", "scalar"):
            raise TinyParseError(f"expected ptr|scalar, got {s!r}", lineno, col)
        return s == "ptr"

    parts = line.split()
    head = parts[0]
    match = _CALL_RE.match(line)
    if match:
        dest, kw, target, args = match.groups()
        args = _names(args, lineno, col)
        return Call(dest, target, args) if kw == "call" else CallIndirect(dest, target, args)
    if head in ("reg", "alloca"):
        if len(parts) != 3:
            raise TinyParseError(f"expected '{head} <name> (ptr|scalar)'", lineno, col)
        return RegDecl(ident(parts[1]), ty(parts[2])) if head == "reg" else Alloca(ident(parts[1]), ty(parts[2]))
    if head == "store":
        rest = line[len("store"):].strip().split(None, 1)
        if len(rest) != 2 or "," not in rest[1]:
            raise TinyParseError("expected 'store (ptr|scalar) <addr>, <src>'", lineno, col)
        addr, src = rest[1].split(",", 1)
        return Store(ident(addr), ident(src), ty(rest[0]))
    if head == "ret":
        if len(parts) > 2:
            raise TinyParseError("expected 'ret [<value>]'", lineno, col)
        return Ret(ident(parts[1]) if len(parts) == 2 else None)
    if head == "free":
        if len(parts) != 2:
            raise TinyParseError("expected 'free <ptr>'", lineno, col)
        return Free(ident(parts[1]))
    if head == "memcpy":
        rest = line[len("memcpy"):]
        if rest.count(",") != 1:
            raise TinyParseError("expected 'memcpy <dst>, <src>'", lineno, col)
        dst, src = rest.split(",")
        return Memcpy(ident(dst), ident(src))
    if "=" not in line:
        raise TinyParseError(f"unrecognised statement {line!r}", lineno, col)
    dest, rhs = (s.strip() for s in line.split("=", 1))
    dest = ident(dest)
    words = rhs.split()
    if not words:
        raise TinyParseError("missing right-hand side", lineno, col)
    if rhs.startswith("&"):
        return AddrOf(dest, ident(rhs[1:]))
    if words[0] == "load":
        if len(words) != 3:
            raise TinyParseError("expected 'load (ptr|scalar) <addr>'", lineno, col)
        return Load(dest, ident(words[2]), ty(words[1]))
    if words[0] == "ptrtoint" and len(words) == 2:
        return PtrToInt(dest, ident(words[1]))
    if words[0] == "inttoptr" and len(words) == 2:
        return IntToPtr(dest, ident(words[1]))
    if words == ["malloc"]:
        return Malloc(dest)
    if len(words) == 1:
        return Copy(dest, ident(words[0]))
    raise TinyParseError(f"unrecognised statement {line!r}", lineno, col)


def check_tiny_module(m: TinyModule, positions: Optional[dict[int, int]] = None) -> None:
    """Raise :class:`TinyParseError` on any structural problem.

    ``positions`` maps ``id()`` of parsed items to source lines; errors on
    modules built in code report line 0.
    """
    positions = positions or {}
    where = [None]

    def fail(msg: str):
        raise TinyParseError(msg, positions.get(id(where[0]), 0))

    symbols: dict[str, Union[Global, FunctionDef]] = {}
    for item in [*m.globals, *m.functions]:
        where[0] = item
        if item.name in symbols:
            fail(f"duplicate symbol {item.name!r}")
        symbols[item.name] = item
    for g in m.globals:
        where[0] = g
        if g.init is not None:
            if g.linkage is Linkage.IMPORT:
                fail(f"imported global {g.name} has an initializer")
            if not g.is_ptr:
                fail(f"scalar global {g.name} has an address initializer")
            if g.init not in symbols:
                fail(f"initializer of {g.name} names undeclared symbol {g.init!r}")
    for f in m.functions:
        where[0] = f
        if (f.linkage is Linkage.IMPORT) != (f.body is None):
            fail(f"function {f.name}: imported functions have no body, others need one")
        if f.body is not None:
            _check_body(f, symbols, fail, where)


def _check_body(f: FunctionDef, symbols, fail, where: list) -> None:
    regs: dict[str, bool] = {}
    cells: dict[str, bool] = {}

    def declare(name: str, into: dict, is_ptr: bool):
        if name in symbols:
            fail(f"{f.name}: local {name!r} shadows a module symbol")
        if name in regs or name in cells:
            fail(f"{f.name}: duplicate local {name!r}")
        into[name] = is_ptr

    for p in f.params:
        declare(p.name, regs, p.is_ptr)

    def reg(name: str, ptr: Optional[bool] = None) -> bool:
        if name not in regs:
            fail(f"{f.name}: undeclared register {name!r}")
        if ptr is not None and regs[name] != ptr:
            fail(f"{f.name}: register {name!r} must be {'ptr' if ptr else 'scalar'}")
        return regs[name]

    def symbol(name: str, allow_function: bool = True):
        if name in cells:
            return
        if name not in symbols:
            fail(f"{f.name}: undeclared symbol {name!r}")
        if not allow_function and isinstance(symbols[name], FunctionDef):
            fail(f"{f.name}: function {name!r} used as a data address")

    def address(name: str):
        if name in regs:
            reg(name, True)
        else:
            symbol(name, allow_function=False)

    for st in f.body:
        where[0] = st
        if isinstance(st, RegDecl):
            declare(st.name, regs, st.is_ptr)
        elif isinstance(st, Alloca):
            declare(st.dest, cells, st.cell_is_pointer)
        elif isinstance(st, AddrOf):
            reg(st.dest, True)
            symbol(st.symbol)
        elif isinstance(st, Copy):
            reg(st.dest)
            reg(st.src)
        elif isinstance(st, Load):
            reg(st.dest, st.value_is_pointer)
            address(st.addr)
        elif isinstance(st, Store):
            address(st.addr)
            reg(st.src, st.value_is_pointer)
        elif isinstance(st, (Call, CallIndirect)):
            if st.dest is not None:
                reg(st.dest)
            for a in st.args:
                reg(a)
            if isinstance(st, Call):
                if not isinstance(symbols.get(st.callee), FunctionDef):
                    fail(f"{f.name}: call to non-function {st.callee!r}")
            else:
                reg(st.fp, True)
        elif isinstance(st, Ret):
            if st.value is None:
                continue
            if f.returns == "void":
                fail(f"{f.name}: void function returns a value")
            reg(st.value, f.returns_ptr)
        elif isinstance(st, PtrToInt):
            reg(st.dest, False)
            reg(st.src, True)
        elif isinstance(st, IntToPtr):
            reg(st.dest, True)
            reg(st.src, False)
        elif isinstance(st, Malloc):
            reg(st.dest, True)
        elif isinstance(st, Free):
            reg(st.arg, True)
        elif isinstance(st, Memcpy):
            address(st.dst)
            address(st.src)


# lowering -----------------------------------------------------------------

SummaryFn = Callable[["_Lowerer", Call], None]


def _summary_malloc(lw: "_Lowerer", st: Call) -> None:
    if st.dest is not None and lw.is_ptr_reg(st.dest):
        lw.lower_stmt(Malloc(st.dest))


def _summary_free(lw: "_Lowerer", st: Call) -> None:
    pass


def _summary_memcpy(lw: "_Lowerer", st: Call) -> None:
    if len(st.args) >= 2 and lw.is_ptr_reg(st.args[0]) and lw.is_ptr_reg(st.args[1]):
        lw.lower_stmt(Memcpy(st.args[0], st.args[1]))
        if st.dest is not None:
            lw.lower_stmt(Copy(st.dest, st.args[0]))
    else:
        lw.lower_call(st, use_summary=False)


DEFAULT_SUMMARIES: dict[str, SummaryFn] = {
    "malloc": _summary_malloc,
    "free": _summary_free,
    "memcpy": _summary_memcpy,
}


class _Lowerer:
    def __init__(self, tm: TinyModule, summaries: dict[str, SummaryFn]):
        self.tm = tm
        self.out = cm.ConstraintModule(tm.name)
        self.summaries = summaries
        self.symbols = tm.symbols()
        self.fn: Optional[FunctionDef] = None
        self.local_ids: dict[str, int] = {}
        self.fresh = 0

    # variables

    def qualified(self, local: str) -> str:
        return f"{self.fn.name}.{local}"

    def new_local(self, local: str, kind: Kind, is_ptr: bool) -> int:
        vid = self.out.add_var(self.qualified(local), kind, is_ptr)
        self.local_ids[local] = vid
        return vid

    def fresh_var(self, stem: str, kind: Kind) -> int:
        name = f"${stem}{self.fresh}"
        self.fresh += 1
        return self.out.add_var(self.qualified(name), kind, True)

    def ref(self, name: str) -> int:
        if name in self.local_ids:
            return self.local_ids[name]
        return self.out.var(name)

    def is_ptr_reg(self, name: str) -> bool:
        return name in self.local_ids and self.out.vars[self.local_ids[name]].pointer_compatible

    def is_register(self, name: str) -> bool:
        return name in self.local_ids and self.out.vars[self.local_ids[name]].is_register

    def slot(self, name: Optional[str]) -> Optional[int]:
        if name is None:
            return None
        v = self.ref(name)
        return v if self.out.vars[v].pointer_compatible else None

    # constraint helpers

    def copy(self, dst: int, src: int) -> None:
        """dst ⊇ src, with pointer-incompatible sides turned into Ω flags."""
        dp, sp = (self.out.vars[v].pointer_compatible for v in (dst, src))
        if dp and sp:
            self.out.add(cm.Simple(dst, src))
        elif dp:
            self.out.set_flag(dst, Flag.POINTS_EXT)
        elif sp:
            self.out.set_flag(src, Flag.POINTEES_ESCAPE)

    def load(self, dest: int, addr: str, value_is_pointer: bool) -> None:
        a = self.ref(addr)
        if self.is_register(addr):
            if value_is_pointer:
                self.out.add(cm.Load(dest, a))
            else:
                self.out.set_flag(a, Flag.LOAD_SCALAR)
        elif value_is_pointer:
            self.copy(dest, a)
        elif self.out.vars[a].pointer_compatible:
            # reading a pointer cell as a scalar
            self.out.set_flag(a, Flag.POINTEES_ESCAPE)

    def store(self, addr: str, src: int, value_is_pointer: bool) -> None:
        a = self.ref(addr)
        if self.is_register(addr):
            if value_is_pointer:
                self.out.add(cm.Store(a, src))
            else:
                self.out.set_flag(a, Flag.STORE_SCALAR)
        elif value_is_pointer:
            self.copy(a, src)
        elif self.out.vars[a].pointer_compatible:
            # writing a scalar into a pointer cell
            self.out.set_flag(a, Flag.POINTS_EXT)

    # driver

    def run(self) -> cm.ConstraintModule:
        out = self.out
        for g in self.tm.globals:
            vid = out.add_var(g.name, Kind.MEMORY, g.is_ptr, g.linkage)
            if g.linkage is not Linkage.INTERNAL:
                out.set_flag(vid, Flag.EXT_TARGET)
        for f in self.tm.functions:
            vid = out.add_var(f.name, Kind.MEMORY, False, f.linkage, is_function=True)
            if f.linkage is not Linkage.INTERNAL:
                out.set_flag(vid, Flag.EXT_TARGET)
            if f.linkage is Linkage.IMPORT:
                out.set_flag(vid, Flag.IMPORTED_FUNC)
        for g in self.tm.globals:
            if g.init is not None:
                out.add(cm.Base(out.var(g.name), out.var(g.init)))
        for f in self.tm.functions:
            if f.body is not None:
                self.lower_function(f)
        return out

    def lower_function(self, f: FunctionDef) -> None:
        self.fn = f
        self.local_ids = {}
        self.fresh = 0
        for p in f.params:
            self.new_local(p.name, Kind.REGISTER, p.is_ptr)
        for st in f.body:
            self.lower_stmt(st)
        ret_slot = None
        if f.returns_ptr:
            values = list(dict.fromkeys(st.value for st in f.body if isinstance(st, Ret) and st.value))
            if len(values) == 1:
                ret_slot = self.ref(values[0])
            elif values:
                ret_slot = self.out.add_var(self.qualified("$ret"), Kind.REGISTER, True)
                for v in values:
                    self.out.add(cm.Simple(ret_slot, self.ref(v)))
        args = tuple(self.slot(p.name) for p in f.params)
        self.out.add(cm.Function(self.out.var(f.name), ret_slot, args))

    def lower_call(self, st: Call, use_summary: bool = True) -> None:
        callee = self.symbols[st.callee]
        if use_summary and callee.linkage is Linkage.IMPORT and st.callee in self.summaries:
            self.summaries[st.callee](self, st)
            return
        fp = self.fresh_var("fp", Kind.REGISTER)
        self.out.add(cm.Base(fp, self.out.var(st.callee)))
        self.out.add(cm.Call(fp, self.slot(st.dest), tuple(self.slot(a) for a in st.args)))

    def lower_stmt(self, st: Statement) -> None:
        out = self.out
        if isinstance(st, RegDecl):
            self.new_local(st.name, Kind.REGISTER, st.is_ptr)
        elif isinstance(st, Alloca):
            self.new_local(st.dest, Kind.MEMORY, st.cell_is_pointer)
        elif isinstance(st, AddrOf):
            out.add(cm.Base(self.ref(st.dest), self.ref(st.symbol)))
        elif isinstance(st, Copy):
            self.copy(self.ref(st.dest), self.ref(st.src))
        elif isinstance(st, Load):
            self.load(self.ref(st.dest), st.addr, st.value_is_pointer)
        elif isinstance(st, Store):
            self.store(st.addr, self.ref(st.src), st.value_is_pointer)
        elif isinstance(st, Call):
            self.lower_call(st)
        elif isinstance(st, CallIndirect):
            out.add(cm.Call(self.ref(st.fp), self.slot(st.dest), tuple(self.slot(a) for a in st.args)))
        elif isinstance(st, Ret):
            pass  # collected per function
        elif isinstance(st, PtrToInt):
            out.set_flag(self.ref(st.src), Flag.POINTEES_ESCAPE)
        elif isinstance(st, IntToPtr):
            out.set_flag(self.ref(st.dest), Flag.POINTS_EXT)
        elif isinstance(st, Malloc):
            heap = self.fresh_var("heap", Kind.MEMORY)
            out.add(cm.Base(self.ref(st.dest), heap))
        elif isinstance(st, Free):
            pass
        elif isinstance(st, Memcpy):
            tmp = self.fresh_var("tmp", Kind.REGISTER)
            self.load(tmp, st.src, True)
            self.store(st.dst, tmp, True)
        else:
            raise TypeError(st)


def lower(m: TinyModule, summaries: Optional[dict[str, SummaryFn]] = None) -> cm.ConstraintModule:
    """Translate a TinyIR module into a constraint module.

    ``summaries`` maps imported function names to hand-written lowerings used
    for direct calls; by default malloc, free and memcpy are summarised.
    """
    lw = _Lowerer(m, DEFAULT_SUMMARIES if summaries is None else summaries)
    return cm.check(lw.run())


# linking ------------------------------------------------------------------


def _rename_stmt(st: Statement, ren: Callable[[str], str]) -> Statement:
    if isinstance(st, AddrOf):
        return replace(st, symbol=ren(st.symbol))
    if isinstance(st, Load):
        return replace(st, addr=ren(st.addr))
    if isinstance(st, Store):
        return replace(st, addr=ren(st.addr))
    if isinstance(st, Call):
        return replace(st, callee=ren(st.callee))
    if isinstance(st, Memcpy):
        return replace(st, dst=ren(st.dst), src=ren(st.src))
    return st


def link_with_map(modules: list[TinyModule]) -> tuple[TinyModule, list[dict[str, str]]]:
    """Link modules; also return, per input module, its symbol renames."""
    exporters: dict[str, int] = {}
    for i, m in enumerate(modules):
        for name, item in m.symbols().items():
            if item.linkage is Linkage.EXPORT:
                if name in exporters:
                    raise LinkError(f"{name!r} exported by both {modules[exporters[name]].name} and {m.name}")
                exporters[name] = i
    names_by_module = [set(m.symbols()) for m in modules]
    mod_names = [m.name for m in modules]
    unique_mod_names = len(set(mod_names)) == len(mod_names)
    renames: list[dict[str, str]] = []
    for i, m in enumerate(modules):
        others = set().union(*(s for j, s in enumerate(names_by_module) if j != i)) if len(modules) > 1 else set()
        prefix = m.name if unique_mod_names else f"m{i}"
        renames.append({
            name: f"{prefix}@{name}"
            for name, item in m.symbols().items()
            if item.linkage is Linkage.INTERNAL and name in others
        })

    linked = TinyModule(modules[0].name if len(modules) == 1 else "linked")
    kept_imports: set[str] = set()
    for i, m in enumerate(modules):
        ren_map = renames[i]

        def ren(name: str, _map=ren_map) -> str:
            return _map.get(name, name)

        for g in m.globals:
            if g.linkage is Linkage.IMPORT:
                if g.name in exporters or g.name in kept_imports:
                    continue
                kept_imports.add(g.name)
            linked.globals.append(replace(g, name=ren(g.name), init=ren(g.init) if g.init else None))
        for f in m.functions:
            if f.linkage is Linkage.IMPORT:
                if f.name in exporters or f.name in kept_imports:
                    continue
                kept_imports.add(f.name)
            body = None
            if f.body is not None:
                local = set(f.locals())
                body = [_rename_stmt(st, lambda n, _l=local: n if n in _l else ren(n)) for st in f.body]
            linked.functions.append(FunctionDef(ren(f.name), f.linkage, list(f.params), f.returns, body))
    check_tiny_module(linked)
    return linked, renames


def link(modules: list[TinyModule]) -> TinyModule:
    return link_with_map(modules)[0]
