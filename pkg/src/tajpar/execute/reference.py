"""Statement-at-a-time interpreter with observation hooks.

It is slow and simple on purpose: it serves as the semantic reference for the
compiled engine and as the substrate of the dynamic conflict oracle.
"""
from __future__ import annotations

import itertools
from typing import Optional

from ..ir import (
    ArrayLoad, ArrayStore, Assign, BinOp, Call, FieldLoad, FieldStore, FunctionDef,
    GlobalLoad, GlobalStore, Goto, Identity, IfGoto, IntConst, LocalRef, New,
    Program, Return,
)
from .values import (
    ExecError, RunResult, StepLimitExceeded, TArray, TObject, arith, initial_globals,
    make_result, resolve_entry, to_runtime_args,
)

DEFAULT_STEP_LIMIT = 10 ** 8


class Hooks:
    """No-op observer; subclasses override what they need."""

    def on_stmt(self, frame: "Frame", idx: int) -> None:
        pass

    def on_use(self, frame: "Frame", name: str, idx: int, def_idx: Optional[int], value) -> None:
        pass

    def on_def(self, frame: "Frame", name: str, idx: int, value) -> None:
        pass

    def on_access(self, frame: "Frame", loc: tuple, mode: str, obj) -> None:
        pass

    def on_enter(self, frame: "Frame") -> None:
        pass

    def on_exit(self, frame: "Frame") -> None:
        pass


_uids = itertools.count()


class Frame:
    __slots__ = ("f", "locals", "last_def", "uid", "prev", "caller")

    def __init__(self, f: FunctionDef, caller: Optional["Frame"]):
        self.f = f
        self.locals: dict = {}
        self.last_def: dict = {}
        self.uid = next(_uids)
        self.prev: Optional[int] = None
        self.caller = caller


def _cmp(op: str, a, b) -> bool:
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "==":
        return a == b
    return a != b


class Interpreter:
    def __init__(self, p: Program, hooks: Optional[Hooks] = None,
                 step_limit: int = DEFAULT_STEP_LIMIT):
        self.p = p
        self.hooks = hooks or Hooks()
        self.step_limit = step_limit
        self.steps = 0
        self.globals = initial_globals(p)

    def run(self, f: FunctionDef, args: list):
        return self.call(f, args, None)

    # ------------------------------------------------------------------
    def _read(self, fr: Frame, op, idx: int):
        if isinstance(op, IntConst):
            return op.value
        name = op.name
        if name not in fr.locals:
            raise ExecError(f"{fr.f.signature} statement {idx}: read of undefined local {name!r}")
        v = fr.locals[name]
        self.hooks.on_use(fr, name, idx, fr.last_def.get(name), v)
        return v

    def _def(self, fr: Frame, name: str, idx: int, v) -> None:
        fr.locals[name] = v
        fr.last_def[name] = idx
        self.hooks.on_def(fr, name, idx, v)

    def _index(self, fr: Frame, arr, i, idx: int):
        if not isinstance(arr, TArray):
            raise ExecError(f"{fr.f.signature} statement {idx}: not an array")
        if not isinstance(i, int) or isinstance(i, bool) or not 0 <= i < len(arr):
            raise ExecError(f"{fr.f.signature} statement {idx}: index {i!r} out of bounds")

    def call(self, f: FunctionDef, args: list, caller: Optional[Frame]):
        fr = Frame(f, caller)
        h = self.hooks
        h.on_enter(fr)
        stmts = f.statements
        pc = 0
        while True:
            self.steps += 1
            if self.steps > self.step_limit:
                raise StepLimitExceeded(f"step limit {self.step_limit} exceeded")
            s = stmts[pc]
            h.on_stmt(fr, pc)
            fr.prev = pc
            nxt = pc + 1
            if isinstance(s, Identity):
                self._def(fr, s.target, pc, args[s.position])
            elif isinstance(s, Assign):
                e = s.expr
                if isinstance(e, BinOp):
                    v = arith(e.op, self._read(fr, e.lhs, pc), self._read(fr, e.rhs, pc))
                else:
                    v = self._read(fr, e, pc)
                self._def(fr, s.target, pc, v)
            elif isinstance(s, ArrayLoad):
                arr = self._read(fr, LocalRef(s.base), pc)
                i = self._read(fr, s.index, pc)
                self._index(fr, arr, i, pc)
                h.on_access(fr, ("elem", id(arr), i), "read", arr)
                self._def(fr, s.target, pc, arr[i])
            elif isinstance(s, ArrayStore):
                arr = self._read(fr, LocalRef(s.base), pc)
                i = self._read(fr, s.index, pc)
                v = self._read(fr, s.value, pc)
                self._index(fr, arr, i, pc)
                h.on_access(fr, ("elem", id(arr), i), "write", arr)
                arr[i] = v
            elif isinstance(s, FieldLoad):
                o = self._read(fr, LocalRef(s.obj), pc)
                if not isinstance(o, TObject):
                    raise ExecError(f"{f.signature} statement {pc}: not an object")
                if s.field not in o.fields:
                    raise ExecError(f"{f.signature} statement {pc}: read of unset field {s.field!r}")
                h.on_access(fr, ("field", id(o), s.field), "read", o)
                self._def(fr, s.target, pc, o.fields[s.field])
            elif isinstance(s, FieldStore):
                o = self._read(fr, LocalRef(s.obj), pc)
                v = self._read(fr, s.value, pc)
                if not isinstance(o, TObject):
                    raise ExecError(f"{f.signature} statement {pc}: not an object")
                h.on_access(fr, ("field", id(o), s.field), "write", o)
                o.fields[s.field] = v
            elif isinstance(s, GlobalLoad):
                h.on_access(fr, ("global", s.name), "read", None)
                self._def(fr, s.target, pc, self.globals[s.name])
            elif isinstance(s, GlobalStore):
                v = self._read(fr, s.value, pc)
                h.on_access(fr, ("global", s.name), "write", None)
                self.globals[s.name] = v
            elif isinstance(s, New):
                site = ("alloc", f.signature, pc)
                if s.size is None:
                    v = TObject(site)
                else:
                    n = self._read(fr, s.size, pc)
                    if not isinstance(n, int):
                        raise ExecError(f"{f.signature} statement {pc}: array size must be an int")
                    v = TArray.zeros(s.kind, n, site)
                self._def(fr, s.target, pc, v)
            elif isinstance(s, Call):
                vals = [self._read(fr, a, pc) for a in s.args]
                callee = self.p.functions.get(s.callee)
                if callee is None:
                    raise ExecError(f"call to external function {s.callee}")
                r = self.call(callee, vals, fr)
                if s.target is not None:
                    self._def(fr, s.target, pc, r)
            elif isinstance(s, IfGoto):
                a = self._read(fr, s.cond.lhs, pc)
                b = self._read(fr, s.cond.rhs, pc)
                if _cmp(s.cond.op, a, b):
                    nxt = s.target_index
            elif isinstance(s, Goto):
                nxt = s.target_index
            elif isinstance(s, Return):
                v = self._read(fr, s.value, pc) if s.value is not None else None
                h.on_exit(fr)
                return v
            else:  # pragma: no cover
                raise ExecError(f"unknown statement {s!r}")
            if nxt >= len(stmts):
                raise ExecError(f"{f.signature}: control fell off the end")
            pc = nxt


def interpret_reference(p: Program, entry: Optional[str], args, hooks: Optional[Hooks] = None,
                        step_limit: int = DEFAULT_STEP_LIMIT) -> RunResult:
    f = resolve_entry(p, entry)
    rargs = to_runtime_args(f, args)
    it = Interpreter(p, hooks, step_limit)
    ret = it.run(f, rargs)
    return make_result(it.globals, rargs, ret, it.steps)
