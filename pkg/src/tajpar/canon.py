"""Recognition of canonical counted loops and extraction of their parameters."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .cfg import Cfg, NaturalLoop
from .ir import (
    ArrayStore, Assign, BinOp, FieldStore, FunctionDef, GlobalStore, IfGoto,
    IntConst, LocalRef, Return, defined_local,
)

REJECT_CODES = (
    "backjump-not-last",
    "upd-not-assignment",
    "iter-not-local",
    "init-mismatch",
    "cond-unsupported",
    "compop-unsupported",
    "inc-not-linear",
    "nonconst-required",
    "iter-modified",
    "has-break",
)

ORDER_OPS = ("<", "<=", ">", ">=")
_NEGATE = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}
_MIRROR = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "==", "!=": "!="}

Bound = Union[IntConst, LocalRef]


@dataclass(frozen=True)
class LoopInfo:
    function: str
    loop: NaturalLoop
    iter: str
    lb: int
    ub: Bound
    inc: int
    init_idx: int
    upd_idx: int
    cond_op: str
    exit_target: int
    body_entry: int

    @property
    def header(self) -> int:
        return self.loop.header

    @property
    def back_jump(self) -> int:
        return self.loop.back_jump

    @property
    def body(self) -> tuple[int, ...]:
        return self.loop.body

    def holds(self, value: int, ub_value: int) -> bool:
        """Continuation condition for a concrete iteration value."""
        return _compare(self.cond_op, value, ub_value)

    def iteration_values(self, ub_value: int) -> list[int]:
        out = []
        v = self.lb
        while self.holds(v, ub_value):
            out.append(v)
            v += self.inc
            if len(out) > 10_000_000:
                raise RuntimeError("iteration space too large")
        return out


def _compare(op: str, a: int, b: int) -> bool:
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


@dataclass(frozen=True)
class CanonVerdict:
    canonical: bool
    reason: Optional[str] = None
    info: Optional[LoopInfo] = None


def _reject(code: str) -> CanonVerdict:
    assert code in REJECT_CODES
    return CanonVerdict(False, code, None)


def is_canonical(loop: NaturalLoop, f: FunctionDef, cfg: Cfg) -> CanonVerdict:
    stmts = f.statements
    body = set(loop.body)
    head = loop.header
    back = loop.back_jump

    if len(loop.back_sources) != 1 or back != max(loop.body):
        return _reject("backjump-not-last")

    upd_idx = back - 1
    upd = stmts[upd_idx] if upd_idx in body and back in cfg.succ[upd_idx] else None
    if not isinstance(upd, (Assign, ArrayStore, FieldStore, GlobalStore)):
        return _reject("upd-not-assignment")
    if not isinstance(upd, Assign):
        return _reject("iter-not-local")
    it = upd.target

    init_idx = head - 1
    init = stmts[init_idx] if init_idx >= 0 and init_idx not in body else None
    if not isinstance(init, Assign) or init.target != it or head not in cfg.succ[init_idx]:
        return _reject("init-mismatch")

    cond_stmt = stmts[head]
    if not isinstance(cond_stmt, IfGoto):
        return _reject("cond-unsupported")
    targets = cfg.succ[head]
    inside = [t for t in targets if t in body]
    outside = [t for t in targets if t not in body]
    if len(inside) != 1 or len(outside) != 1:
        return _reject("cond-unsupported")
    cond = cond_stmt.cond
    it_ref = LocalRef(it)
    if (cond.lhs == it_ref) == (cond.rhs == it_ref):
        return _reject("cond-unsupported")
    if cond.op not in ORDER_OPS:
        return _reject("compop-unsupported")
    op = cond.op
    if cond_stmt.target_index not in body:
        op = _NEGATE[op]
    if cond.lhs == it_ref:
        ub = cond.rhs
    else:
        ub = cond.lhs
        op = _MIRROR[op]

    rhs = upd.expr
    if not (isinstance(rhs, BinOp) and rhs.op == "+"):
        return _reject("inc-not-linear")
    if rhs.lhs == it_ref and rhs.rhs != it_ref:
        inc = rhs.rhs
    elif rhs.rhs == it_ref and rhs.lhs != it_ref:
        inc = rhs.lhs
    else:
        return _reject("inc-not-linear")
    if isinstance(inc, IntConst) and inc.value <= 0:
        return _reject("inc-not-linear")

    lb = init.expr
    if not isinstance(lb, IntConst) or not isinstance(inc, IntConst):
        return _reject("nonconst-required")

    for idx in loop.body:
        if idx != upd_idx and defined_local(stmts[idx]) == it:
            return _reject("iter-modified")

    if any(u != head for u, _ in loop.exits):
        return _reject("has-break")
    if any(isinstance(stmts[idx], Return) for idx in loop.body):
        return _reject("has-break")

    info = LoopInfo(
        function=f.signature, loop=loop, iter=it, lb=lb.value, ub=ub, inc=inc.value,
        init_idx=init_idx, upd_idx=upd_idx, cond_op=op,
        exit_target=outside[0], body_entry=inside[0],
    )
    return CanonVerdict(True, None, info)
