"""Data model for TAJ, a small typed three-address IR.

A program is a set of globals plus functions keyed by signature. Each function
carries a local-variable table (name, slot, live range in statement indices)
that the scope analysis relies on. Statement indices play the role bytecode
indices play in a JVM class file.

All values here are immutable after construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

SCALAR_KINDS = ("int", "real")
ARRAY_KINDS = ("array-int", "array-real")
REF_KINDS = ARRAY_KINDS + ("object",)
VALUE_KINDS = SCALAR_KINDS + REF_KINDS
GLOBAL_KINDS = SCALAR_KINDS + ARRAY_KINDS

BIN_OPS = ("+", "-", "*")
CMP_OPS = ("<", "<=", ">", ">=", "==", "!=")


class TajError(Exception):
    """Base class for all errors raised on malformed TAJ input."""


class TajSyntaxError(TajError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class ValidationError(TajError):
    pass


# ---------------------------------------------------------------------------
# operands and expressions


@dataclass(frozen=True)
class IntConst:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class LocalRef:
    name: str

    def __str__(self) -> str:
        return self.name


Operand = Union[IntConst, LocalRef]


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: Operand
    rhs: Operand

    def __str__(self) -> str:
        return f"{self.lhs} {self.op} {self.rhs}"


Expr = Union[IntConst, LocalRef, BinOp]


@dataclass(frozen=True)
class CondExpr:
    op: str
    lhs: Operand
    rhs: Operand

    def __str__(self) -> str:
        return f"{self.lhs} {self.op} {self.rhs}"


# ---------------------------------------------------------------------------
# statements


@dataclass(frozen=True)
class Identity:
    target: str
    position: int


@dataclass(frozen=True)
class Assign:
    target: str
    expr: Expr


@dataclass(frozen=True)
class ArrayLoad:
    target: str
    base: str
    index: Operand


@dataclass(frozen=True)
class ArrayStore:
    base: str
    index: Operand
    value: Operand


@dataclass(frozen=True)
class FieldLoad:
    target: str
    obj: str
    field: str


@dataclass(frozen=True)
class FieldStore:
    obj: str
    field: str
    value: Operand


@dataclass(frozen=True)
class GlobalLoad:
    target: str
    name: str


@dataclass(frozen=True)
class GlobalStore:
    name: str
    value: Operand


@dataclass(frozen=True)
class New:
    target: str
    kind: str
    size: Optional[Operand] = None


@dataclass(frozen=True)
class Call:
    target: Optional[str]
    callee: str
    args: tuple[Operand, ...] = ()


@dataclass(frozen=True)
class IfGoto:
    cond: CondExpr
    target_index: int


@dataclass(frozen=True)
class Goto:
    target_index: int


@dataclass(frozen=True)
class Return:
    value: Optional[Operand] = None


Statement = Union[
    Identity, Assign, ArrayLoad, ArrayStore, FieldLoad, FieldStore,
    GlobalLoad, GlobalStore, New, Call, IfGoto, Goto, Return,
]

_DEFINING = (Identity, Assign, ArrayLoad, FieldLoad, GlobalLoad, New, Call)


def defined_local(stmt: Statement) -> Optional[str]:
    """Name of the local a statement writes, if any."""
    if isinstance(stmt, _DEFINING):
        return stmt.target
    return None


def _operand_names(*ops) -> list[str]:
    return [o.name for o in ops if isinstance(o, LocalRef)]


def used_locals(stmt: Statement) -> list[str]:
    """Locals read by a statement, in operand order."""
    if isinstance(stmt, Assign):
        e = stmt.expr
        if isinstance(e, BinOp):
            return _operand_names(e.lhs, e.rhs)
        return _operand_names(e)
    if isinstance(stmt, ArrayLoad):
        return [stmt.base] + _operand_names(stmt.index)
    if isinstance(stmt, ArrayStore):
        return [stmt.base] + _operand_names(stmt.index, stmt.value)
    if isinstance(stmt, FieldLoad):
        return [stmt.obj]
    if isinstance(stmt, FieldStore):
        return [stmt.obj] + _operand_names(stmt.value)
    if isinstance(stmt, GlobalStore):
        return _operand_names(stmt.value)
    if isinstance(stmt, New):
        return _operand_names(stmt.size) if stmt.size is not None else []
    if isinstance(stmt, Call):
        return _operand_names(*stmt.args)
    if isinstance(stmt, IfGoto):
        return _operand_names(stmt.cond.lhs, stmt.cond.rhs)
    if isinstance(stmt, Return):
        return _operand_names(stmt.value) if stmt.value is not None else []
    return []


def is_temporary(name: str) -> bool:
    return name.startswith("$")


# ---------------------------------------------------------------------------
# declarations


@dataclass(frozen=True)
class GlobalDecl:
    name: str
    kind: str
    init_size: Optional[int] = None


@dataclass(frozen=True)
class LocalVarEntry:
    name: str
    kind: str
    slot: int
    start: int
    length: int

    @property
    def end(self) -> int:
        return self.start + self.length


def make_signature(name: str, param_kinds, ret: str) -> str:
    return f"{name}({','.join(param_kinds)}):{ret}"


def split_signature(sig: str) -> tuple[str, tuple[str, ...], str]:
    """Inverse of make_signature. Raises ValueError on malformed text."""
    open_ = sig.index("(")
    close = sig.index("):", open_)
    name = sig[:open_]
    inner = sig[open_ + 1:close]
    kinds = tuple(k for k in inner.split(",")) if inner else ()
    return name, kinds, sig[close + 2:]


@dataclass(frozen=True)
class FunctionDef:
    name: str
    params: tuple[tuple[str, str], ...]
    ret: str
    locals: tuple[LocalVarEntry, ...]
    statements: tuple[Statement, ...]

    @property
    def signature(self) -> str:
        return make_signature(self.name, (k for _, k in self.params), self.ret)

    @property
    def returns_value(self) -> bool:
        return self.ret != "void"

    def __len__(self) -> int:
        return len(self.statements)

    def entry_for(self, name: str) -> Optional[LocalVarEntry]:
        for e in self.locals:
            if e.name == name:
                return e
        return None

    def kind_of(self, name: str) -> Optional[str]:
        e = self.entry_for(name)
        if e is not None:
            return e.kind
        for pname, kind in self.params:
            if pname == name:
                return kind
        return None

    def referenced_locals(self) -> set[str]:
        names: set[str] = set()
        for s in self.statements:
            d = defined_local(s)
            if d is not None:
                names.add(d)
            names.update(used_locals(s))
        return names


def lookup_local_entry(f: FunctionDef, name: str) -> Optional[LocalVarEntry]:
    """Table entry for a named local; temporaries and unknown names have none."""
    if is_temporary(name):
        return None
    return f.entry_for(name)


@dataclass(frozen=True)
class Program:
    globals: tuple[GlobalDecl, ...] = ()
    functions: dict[str, FunctionDef] = field(default_factory=dict)
    entry: Optional[str] = None

    def __hash__(self) -> int:
        return id(self)

    def global_decl(self, name: str) -> Optional[GlobalDecl]:
        for g in self.globals:
            if g.name == name:
                return g
        return None

    def resolves(self, sig: str) -> bool:
        return sig in self.functions

    def iter_functions(self) -> Iterator[FunctionDef]:
        return iter(self.functions.values())

    def function_named(self, name: str) -> FunctionDef:
        """Look a function up by bare name or full signature."""
        if name in self.functions:
            return self.functions[name]
        hits = [f for f in self.functions.values() if f.name == name]
        if len(hits) != 1:
            raise KeyError(name)
        return hits[0]


# ---------------------------------------------------------------------------
# validation


def _check_operand(op, where: str) -> None:
    if not isinstance(op, (IntConst, LocalRef)):
        raise ValidationError(f"{where}: operand is not atomic: {op!r}")


def _statement_operands(stmt: Statement) -> list:
    if isinstance(stmt, Assign):
        e = stmt.expr
        return [e.lhs, e.rhs] if isinstance(e, BinOp) else [e]
    if isinstance(stmt, ArrayLoad):
        return [stmt.index]
    if isinstance(stmt, ArrayStore):
        return [stmt.index, stmt.value]
    if isinstance(stmt, (FieldStore, GlobalStore)):
        return [stmt.value]
    if isinstance(stmt, New):
        return [stmt.size] if stmt.size is not None else []
    if isinstance(stmt, Call):
        return list(stmt.args)
    if isinstance(stmt, IfGoto):
        return [stmt.cond.lhs, stmt.cond.rhs]
    if isinstance(stmt, Return):
        return [stmt.value] if stmt.value is not None else []
    return []


def validate_function(f: FunctionDef, program: Program) -> None:
    sig = f.signature
    n = len(f.statements)
    if n == 0:
        raise ValidationError(f"{sig}: function has no statements")
    last = f.statements[-1]
    if not isinstance(last, (Return, Goto)):
        raise ValidationError(f"{sig}: control falls off the end of the function")

    pnames = [p for p, _ in f.params]
    if len(set(pnames)) != len(pnames):
        raise ValidationError(f"{sig}: duplicate parameter name")
    for _, kind in f.params:
        if kind not in VALUE_KINDS:
            raise ValidationError(f"{sig}: bad parameter kind {kind!r}")
    if f.ret != "void" and f.ret not in VALUE_KINDS:
        raise ValidationError(f"{sig}: bad return kind {f.ret!r}")

    seen: set[str] = set()
    for e in f.locals:
        if e.name in seen:
            raise ValidationError(f"{sig}: duplicate local table entry {e.name!r}")
        seen.add(e.name)
        if is_temporary(e.name):
            raise ValidationError(f"{sig}: temporary {e.name!r} in local table")
        if e.kind not in VALUE_KINDS:
            raise ValidationError(f"{sig}: bad kind for local {e.name!r}")
        if e.slot < 0 or e.start < 0 or e.length < 0:
            raise ValidationError(f"{sig}: negative field in entry {e.name!r}")
        if e.end > n:
            raise ValidationError(f"{sig}: live range of {e.name!r} exceeds function")
    entries = list(f.locals)
    for a_i, a in enumerate(entries):
        for b in entries[a_i + 1:]:
            if a.slot == b.slot and a.start < b.end and b.start < a.end:
                raise ValidationError(
                    f"{sig}: slot {a.slot} shared by overlapping {a.name!r} and {b.name!r}")

    in_prefix = True
    bound: set[int] = set()
    for idx, stmt in enumerate(f.statements):
        where = f"{sig} statement {idx}"
        if isinstance(stmt, Identity):
            if not in_prefix:
                raise ValidationError(f"{where}: parameter binding after function entry")
            if not 0 <= stmt.position < len(f.params):
                raise ValidationError(f"{where}: parameter position out of range")
            if f.params[stmt.position][0] != stmt.target:
                raise ValidationError(f"{where}: binding does not match parameter name")
            if stmt.position in bound:
                raise ValidationError(f"{where}: parameter bound twice")
            bound.add(stmt.position)
        else:
            in_prefix = False
        for op in _statement_operands(stmt):
            _check_operand(op, where)
        if isinstance(stmt, Assign) and isinstance(stmt.expr, BinOp):
            if stmt.expr.op not in BIN_OPS:
                raise ValidationError(f"{where}: unsupported operator {stmt.expr.op!r}")
        if isinstance(stmt, IfGoto):
            if stmt.cond.op not in CMP_OPS:
                raise ValidationError(f"{where}: unsupported comparison {stmt.cond.op!r}")
        if isinstance(stmt, (IfGoto, Goto)):
            if not 0 <= stmt.target_index < n:
                raise ValidationError(f"{where}: branch target out of range")
        if isinstance(stmt, (GlobalLoad, GlobalStore)):
            if program.global_decl(stmt.name) is None:
                raise ValidationError(f"{where}: undeclared global {stmt.name!r}")
        if isinstance(stmt, New):
            if stmt.kind in ARRAY_KINDS:
                if stmt.size is None:
                    raise ValidationError(f"{where}: array allocation without size")
            elif stmt.kind == "object":
                if stmt.size is not None:
                    raise ValidationError(f"{where}: object allocation with size")
            else:
                raise ValidationError(f"{where}: cannot allocate kind {stmt.kind!r}")
        if isinstance(stmt, Call):
            try:
                _, kinds, ret = split_signature(stmt.callee)
            except ValueError:
                raise ValidationError(f"{where}: malformed callee signature") from None
            if len(kinds) != len(stmt.args):
                raise ValidationError(f"{where}: call arity does not match signature")
            if stmt.target is not None and ret == "void":
                raise ValidationError(f"{where}: void call result assigned")
        if isinstance(stmt, Return):
            if (stmt.value is not None) != f.returns_value:
                raise ValidationError(f"{where}: return does not match return kind")

    for name in f.referenced_locals():
        if not is_temporary(name) and f.entry_for(name) is None:
            raise ValidationError(f"{sig}: local {name!r} missing from local table")


def validate_program(p: Program) -> None:
    names = [g.name for g in p.globals]
    if len(set(names)) != len(names):
        raise ValidationError("duplicate global declaration")
    for g in p.globals:
        if g.kind not in GLOBAL_KINDS:
            raise ValidationError(f"global {g.name!r}: bad kind {g.kind!r}")
        if g.init_size is not None and (g.init_size < 0 or g.kind not in ARRAY_KINDS):
            raise ValidationError(f"global {g.name!r}: bad initial size")
    for sig, f in p.functions.items():
        if sig != f.signature:
            raise ValidationError(f"function keyed as {sig!r} has signature {f.signature!r}")
        validate_function(f, p)
    if p.entry is not None and p.entry not in p.functions:
        raise ValidationError(f"entry {p.entry!r} does not resolve")
