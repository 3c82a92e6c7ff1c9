"""Generation of array-dependence formulas for a canonical loop.

A formula is satisfiable iff two distinct iterations may touch the same array
element with at least one of the accesses being a write. Program variables
private to the loop get one logical copy per iteration (tags 0 and 1); shared
variables keep a single untagged copy.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .canon import LoopInfo
from .cfg import DefUse
from .formula import (
    ARITH_BY_OP, Const, Eq, FalseLit, Formula, Ge, Neq, TrueLit, Var, conj, disj,
    CMP_BY_OP,
)
from .ir import (
    ArrayLoad, ArrayStore, Assign, BinOp, FunctionDef, Identity, IntConst, LocalRef,
    TajError,
)
from .scope import LocalSet


class UnsupportedDefinition(TajError):
    def __init__(self, stmt: int, why: str):
        super().__init__(f"statement {stmt}: {why}")
        self.stmt = stmt
        self.why = why


@dataclass(frozen=True)
class ArrayRef:
    stmt: int
    base: str
    index: object
    kind: str  # "read" | "write"


def collect_array_refs(info: LoopInfo, f: FunctionDef) -> tuple[list[ArrayRef], list[ArrayRef]]:
    writes: list[ArrayRef] = []
    reads: list[ArrayRef] = []
    for idx in info.body:
        s = f.statements[idx]
        if isinstance(s, ArrayStore):
            writes.append(ArrayRef(idx, s.base, s.index, "write"))
        elif isinstance(s, ArrayLoad):
            reads.append(ArrayRef(idx, s.base, s.index, "read"))
    return writes, reads


@dataclass
class GenContext:
    loop: LoopInfo
    function: FunctionDef
    loops: list[LoopInfo]
    locals: LocalSet
    defuse: DefUse
    path: set = field(default_factory=set)
    bindings: dict = field(default_factory=dict)

    def __post_init__(self):
        self._iter_defs: dict[int, LoopInfo] = {}
        for li in self.loops:
            self._iter_defs[li.init_idx] = li
            self._iter_defs[li.upd_idx] = li

    def iter_loop_of(self, stmt: int) -> Optional[LoopInfo]:
        return self._iter_defs.get(stmt)

    def reset(self) -> None:
        self.path = set()
        self.bindings = {}


def N(name: str, tag: int, ctx: GenContext) -> Var:
    if name in ctx.locals or name == ctx.loop.iter:
        return Var(name, tag)
    return Var(name, None)


def _term(op, tag: int, ctx: GenContext):
    if isinstance(op, IntConst):
        return Const(op.value)
    return N(op.name, tag, ctx)


def _defs_of(name: str, at: int, tag: int, ctx: GenContext) -> list[int]:
    defs = ctx.defuse.defs(name, at)
    key = (N(name, tag, ctx), tuple(sorted(defs)))
    var = key[0]
    prev = ctx.bindings.get(var)
    if prev is not None and prev[0] != key[1]:
        raise UnsupportedDefinition(at, f"{name} reaches the formula through different definitions")
    ctx.bindings[var] = (key[1], at)
    return sorted(defs)


def _operand_chain(op, at: int, tag: int, ctx: GenContext) -> Formula:
    if not isinstance(op, LocalRef):
        return TrueLit
    defs = _defs_of(op.name, at, tag, ctx)
    if not defs:
        return TrueLit
    return disj(*(stmt_c(d, tag, ctx, use=at) for d in defs))


def iter_bounds(li: LoopInfo, tag: int, ctx: GenContext) -> Formula:
    """Range of the iteration variable of li in the iteration with this tag."""
    y = N(li.iter, tag, ctx)
    ub = _term(li.ub, tag, ctx)
    parts = [Ge(y, Const(li.lb)), CMP_BY_OP[li.cond_op](y, ub)]
    if li.inc > 1:
        step = Var(f"{li.iter}.step", y.tag)
        parts.append(Eq(ARITH_BY_OP["-"](y, Const(li.lb)),
                        ARITH_BY_OP["*"](Const(li.inc), step)))
    parts.append(_operand_chain(li.ub, li.header, tag, ctx))
    return conj(*parts)


def stmt_c(d: int, tag: int, ctx: GenContext, use: Optional[int] = None) -> Formula:
    key = (d, tag)
    if key in ctx.path:
        return TrueLit
    ctx.path.add(key)
    try:
        return _stmt_c(d, tag, ctx, use)
    finally:
        ctx.path.discard(key)


def _stmt_c(d: int, tag: int, ctx: GenContext, use: Optional[int]) -> Formula:
    s = ctx.function.statements[d]
    if isinstance(s, Identity):
        return TrueLit
    li = ctx.iter_loop_of(d)
    if li is not None and isinstance(s, Assign) and s.target == li.iter:
        if use is not None and (use == li.header or use not in li.loop):
            raise UnsupportedDefinition(use, f"{li.iter} is read outside the body of its loop")
        return iter_bounds(li, tag, ctx)
    if not isinstance(s, Assign):
        raise UnsupportedDefinition(d, f"unsupported definition of an index ({type(s).__name__})")
    y = N(s.target, tag, ctx)
    e = s.expr
    if isinstance(e, IntConst):
        return Eq(y, Const(e.value))
    if isinstance(e, LocalRef):
        return conj(Eq(y, _term(e, tag, ctx)), _operand_chain(e, d, tag, ctx))
    if isinstance(e, BinOp):
        rhs = ARITH_BY_OP[e.op](_term(e.lhs, tag, ctx), _term(e.rhs, tag, ctx))
        return conj(Eq(y, rhs), _operand_chain(e.lhs, d, tag, ctx),
                    _operand_chain(e.rhs, d, tag, ctx))
    raise UnsupportedDefinition(d, "unsupported expression")


def dep_c(w: ArrayRef, r: ArrayRef, ctx: GenContext) -> Formula:
    ctx.reset()
    c1 = _operand_chain(w.index, w.stmt, 0, ctx)
    c2 = _operand_chain(r.index, r.stmt, 1, ctx)
    it = ctx.loop.iter
    lc = Neq(Var(it, 0), Var(it, 1))
    dep = Eq(_term(w.index, 0, ctx), _term(r.index, 1, ctx))
    b0 = iter_bounds(ctx.loop, 0, ctx)
    b1 = iter_bounds(ctx.loop, 1, ctx)
    return conj(c1, c2, lc, dep, b0, b1)


def loop_c(writes: list[ArrayRef], refs: list[ArrayRef], ctx: GenContext, may_alias) -> Formula:
    parts = []
    for w in writes:
        for r in refs:
            if may_alias(w.base, r.base):
                parts.append(dep_c(w, r, ctx))
    if not parts:
        return FalseLit
    return disj(*parts)


def loop_formula(info: LoopInfo, f: FunctionDef, loops: list[LoopInfo], local_set: LocalSet,
                 defuse: DefUse, may_alias) -> Formula:
    """Dependence formula of one loop; raises UnsupportedDefinition."""
    writes, reads = collect_array_refs(info, f)
    ctx = GenContext(info, f, loops, local_set, defuse)
    return loop_c(writes, writes + reads, ctx, may_alias)
