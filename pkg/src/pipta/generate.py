"""Seeded random TinyIR programs and the PIP stress instance."""
from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .constraints import Linkage
from .tinyir import (
    AddrOf, Alloca, Call, CallIndirect, Copy, Free, FunctionDef, Global, IntToPtr,
    Load, Malloc, Memcpy, Param, PtrToInt, RegDecl, Ret, Store, TinyModule,
)


@dataclass(frozen=True)
class FuzzParams:
    seed: int = 0
    modules: int = 3
    vars: int = 60
    statements: int = 80
    export_fraction: float = 0.2
    cast_fraction: float = 0.1
    indirect_call_fraction: float = 0.15
    import_fraction: float = 0.15

    def __post_init__(self):
        for name in ("export_fraction", "cast_fraction", "indirect_call_fraction", "import_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        for name in ("modules", "vars", "statements"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")

    def with_seed(self, seed: int) -> "FuzzParams":
        return replace(self, seed=seed)


# library functions the frontend summarises
_LIBC = {
    "malloc": ([], "ptr"),
    "free": ([Param("p", True)], "void"),
    "memcpy": ([Param("d", True), Param("s", True), Param("n", False)], "ptr"),
}


def _extern_signature(j: int) -> tuple[list[Param], str]:
    """Fixed signature for unresolved external function ``ext_f<j>``."""
    params = [Param(f"x{k}", (j + k) % 3 != 2) for k in range(j % 3)]
    return params, ("ptr", "scalar", "void")[j % 3]


class _ModulePlan:
    def __init__(self, index: int):
        self.index = index
        self.globals: list[Global] = []
        self.functions: list[FunctionDef] = []


def _plan(rng: random.Random, p: FuzzParams, index: int) -> _ModulePlan:
    plan = _ModulePlan(index)
    n_globals = max(1, p.vars // 4)
    n_funcs = max(1, p.vars // 15)
    for j in range(n_globals):
        export = rng.random() < p.export_fraction
        name = f"m{index}_g{j}" if export else f"g{j}"
        plan.globals.append(Global(name, rng.random() < 0.6, Linkage.EXPORT if export else Linkage.INTERNAL))
    for j in range(n_funcs):
        export = rng.random() < p.export_fraction
        name = f"m{index}_f{j}" if export else f"f{j}"
        params = [Param(f"x{k}", rng.random() < 0.7) for k in range(rng.randrange(4))]
        returns = rng.choices(["ptr", "scalar", "void"], [6, 2, 2])[0]
        plan.functions.append(
            FunctionDef(name, Linkage.EXPORT if export else Linkage.INTERNAL, params, returns, [])
        )
    return plan


class _BodyBuilder:
    def __init__(self, rng, p: FuzzParams, module: TinyModule, fn: FunctionDef, n_locals: int):
        self.rng = rng
        self.p = p
        self.module = module
        self.fn = fn
        self.body = fn.body
        self.ptr_regs = [x.name for x in fn.params if x.is_ptr]
        self.int_regs = [x.name for x in fn.params if not x.is_ptr]
        self.cells: list[tuple[str, bool]] = []
        self.n = 0
        self.declare_reg(True)
        self.declare_reg(False)
        for _ in range(max(0, n_locals - 2)):
            if rng.random() < 0.25:
                name = f"a{self.n}"
                self.n += 1
                cell_ptr = rng.random() < 0.6
                self.body.append(Alloca(name, cell_ptr))
                self.cells.append((name, cell_ptr))
            else:
                self.declare_reg(rng.random() < 0.7)

    def declare_reg(self, is_ptr: bool) -> None:
        name = f"r{self.n}"
        self.n += 1
        self.body.append(RegDecl(name, is_ptr))
        (self.ptr_regs if is_ptr else self.int_regs).append(name)

    def reg(self, is_ptr: bool) -> str:
        return self.rng.choice(self.ptr_regs if is_ptr else self.int_regs)

    def any_reg(self) -> str:
        return self.rng.choice(self.ptr_regs + self.int_regs)

    def symbol(self) -> str:
        rng = self.rng
        pool = [g.name for g in self.module.globals] + [f.name for f in self.module.functions]
        pool += [c for c, _ in self.cells]
        return rng.choice(pool)

    def data_symbol(self, cell_ptr: bool):
        pool = [g.name for g in self.module.globals if g.is_ptr == cell_ptr]
        pool += [c for c, ptr in self.cells if ptr == cell_ptr]
        return self.rng.choice(pool) if pool else None

    def address(self, cell_ptr: bool) -> str:
        if self.rng.random() < 0.3:
            sym = self.data_symbol(cell_ptr)
            if sym is not None:
                return sym
        return self.reg(True)

    def call_args(self, params: list[Param]) -> tuple[str, ...]:
        rng = self.rng
        if rng.random() < self.p.cast_fraction:
            # arity or type mismatch
            return tuple(self.any_reg() for _ in range(rng.randrange(4)))
        return tuple(self.reg(x.is_ptr) for x in params)

    def call_dest(self, returns: str):
        if returns == "void" or self.rng.random() < 0.2:
            return None
        return self.reg(returns == "ptr")

    def emit(self) -> None:
        rng, p, body = self.rng, self.p, self.body
        if rng.random() < p.cast_fraction:
            kind = rng.randrange(6)
            if kind == 0:
                body.append(PtrToInt(self.reg(False), self.reg(True)))
            elif kind == 1:
                body.append(IntToPtr(self.reg(True), self.reg(False)))
            elif kind == 2:
                body.append(Copy(self.reg(True), self.reg(False)))
            elif kind == 3:
                body.append(Copy(self.reg(False), self.reg(True)))
            elif kind == 4:
                body.append(Load(self.reg(False), self.reg(True), False))
            else:
                body.append(Store(self.reg(True), self.reg(False), False))
            return
        if rng.random() < p.indirect_call_fraction:
            fp = self.reg(True)
            returns = rng.choice(["ptr", "scalar", "void"])
            args = tuple(self.reg(rng.random() < 0.7) for _ in range(rng.randrange(4)))
            body.append(CallIndirect(self.call_dest(returns), fp, args))
            return
        kind = rng.choices(
            ["addr", "copy", "load", "store", "call", "malloc", "memcpy", "free", "ret", "scalar"],
            [25, 15, 15, 15, 10, 5, 3, 2, 3, 4],
        )[0]
        if kind == "addr":
            body.append(AddrOf(self.reg(True), self.symbol()))
        elif kind == "copy":
            body.append(Copy(self.reg(True), self.reg(True)))
        elif kind == "load":
            body.append(Load(self.reg(True), self.address(True), True))
        elif kind == "store":
            body.append(Store(self.address(True), self.reg(True), True))
        elif kind == "scalar":
            sym = self.data_symbol(False)
            if sym is None:
                body.append(Copy(self.reg(False), self.reg(False)))
            elif rng.random() < 0.5:
                body.append(Load(self.reg(False), sym, False))
            else:
                body.append(Store(sym, self.reg(False), False))
        elif kind == "call":
            callee = rng.choice(self.module.functions)
            body.append(Call(self.call_dest(callee.returns), callee.name, self.call_args(callee.params)))
        elif kind == "malloc":
            body.append(Malloc(self.reg(True)))
        elif kind == "memcpy":
            body.append(Memcpy(self.address(True), self.address(True)))
        elif kind == "free":
            body.append(Free(self.reg(True)))
        else:
            self.ret()

    def ret(self) -> None:
        if self.fn.returns == "void":
            self.body.append(Ret())
        else:
            self.body.append(Ret(self.reg(self.fn.returns == "ptr")))


def generate_program(p: FuzzParams) -> list[TinyModule]:
    """Deterministic multi-module program for seed ``p.seed``."""
    rng = random.Random(p.seed)
    plans = [_plan(rng, p, i) for i in range(p.modules)]
    modules = []
    for plan in plans:
        m = TinyModule(f"m{plan.index}")
        m.globals = list(plan.globals)
        m.functions = [FunctionDef(f.name, f.linkage, list(f.params), f.returns, []) for f in plan.functions]
        # imports: exports of other modules, unresolved externals, library calls
        for other in plans:
            if other is plan:
                continue
            for g in other.globals:
                if g.linkage is Linkage.EXPORT and rng.random() < p.import_fraction:
                    m.globals.append(Global(g.name, g.is_ptr, Linkage.IMPORT))
            for f in other.functions:
                if f.linkage is Linkage.EXPORT and rng.random() < p.import_fraction:
                    m.functions.append(FunctionDef(f.name, Linkage.IMPORT, list(f.params), f.returns))
        for j in range(3):
            if rng.random() < p.import_fraction:
                m.globals.append(Global(f"ext_g{j}", j != 2, Linkage.IMPORT))
            if rng.random() < p.import_fraction:
                params, returns = _extern_signature(j)
                m.functions.append(FunctionDef(f"ext_f{j}", Linkage.IMPORT, params, returns))
        for name, (params, returns) in _LIBC.items():
            if rng.random() < p.import_fraction:
                m.functions.append(FunctionDef(name, Linkage.IMPORT, list(params), returns))
        # initialisers for some pointer globals
        symbols = [g.name for g in m.globals] + [f.name for f in m.functions]
        m.globals = [
            replace(g, init=rng.choice(symbols))
            if g.is_ptr and g.linkage is not Linkage.IMPORT and rng.random() < 0.2 else g
            for g in m.globals
        ]
        defined = [f for f in m.functions if f.linkage is not Linkage.IMPORT]
        n_params = sum(len(f.params) for f in defined)
        n_globals = sum(1 for g in m.globals if g.linkage is not Linkage.IMPORT)
        locals_left = max(2 * len(defined), p.vars - n_globals - n_params)
        builders = []
        for k, f in enumerate(defined):
            share = locals_left // len(defined) + (1 if k < locals_left % len(defined) else 0)
            builders.append(_BodyBuilder(rng, p, m, f, share))
        for _ in range(p.statements):
            rng.choice(builders).emit()
        for b in builders:
            b.ret()
        modules.append(m)
    return modules


def generate_random_module(p: FuzzParams) -> TinyModule:
    """A single module; imports only name unresolved externals."""
    return generate_program(replace(p, modules=1))[0]


def generate_stress_instance(n: int, m: int) -> TinyModule:
    """Module with ``n`` exported pointer globals and ``m`` unknown-origin registers.

    Every global is externally accessible and every ``r<j>`` receives the
    result of a distinct imported function, so each register may point to
    every global.  Internal ``mk`` and the stores into the globals make the
    explicit representation carry the full Cartesian product.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be at least 1")
    mod = TinyModule(f"stress_{n}x{m}")
    mod.globals = [Global(f"g{i}", True, Linkage.EXPORT) for i in range(n)]
    mod.functions = [FunctionDef(f"get{j}", Linkage.IMPORT, [], "ptr") for j in range(m)]
    mk_body = [RegDecl("t", True)] + [AddrOf("t", f"g{i}") for i in range(n)] + [Ret("t")]
    mod.functions.append(FunctionDef("mk", Linkage.INTERNAL, [], "ptr", mk_body))
    body = [RegDecl("a", True)] + [RegDecl(f"r{j}", True) for j in range(m)]
    body.append(Call("a", "mk", ()))
    for j in range(m):
        body.append(Call(f"r{j}", f"get{j}", ()))
        body.append(Store(f"g{j % n}", f"r{j}", True))
        body.append(Copy(f"r{j}", "a"))
    body.append(Ret())
    mod.functions.append(FunctionDef("driver", Linkage.INTERNAL, [], "void", body))
    return mod
