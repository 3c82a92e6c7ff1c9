"""Runtime values, argument conversion and heap digests."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Optional

from ..ir import FunctionDef, Program, TajError

INT_MIN = -(1 << 63)
INT_MAX = (1 << 63) - 1
_MASK = (1 << 64) - 1


def wrap(x: int) -> int:
    """Two's complement wrap to 64 bits."""
    return ((x - INT_MIN) & _MASK) + INT_MIN


class ExecError(TajError):
    pass


class StepLimitExceeded(ExecError):
    pass


class ArgumentMismatch(ExecError):
    """Arguments do not fit the entry signature."""


class TArray(list):
    __slots__ = ("kind", "site")

    def __init__(self, kind: str, values=(), site=None):
        super().__init__(values)
        self.kind = kind
        self.site = site

    @classmethod
    def zeros(cls, kind: str, n: int, site=None) -> "TArray":
        if n < 0:
            raise ExecError(f"negative array size {n}")
        return cls(kind, [0.0] * n if kind == "array-real" else [0] * n, site)

    def __eq__(self, other):
        return self is other

    def __ne__(self, other):
        return self is not other

    __hash__ = object.__hash__


class TObject:
    __slots__ = ("fields", "site")

    def __init__(self, site=None):
        self.fields: dict[str, Any] = {}
        self.site = site


def arith(op: str, a, b):
    if op == "+":
        r = a + b
    elif op == "-":
        r = a - b
    else:
        r = a * b
    if type(r) is int:
        if r < INT_MIN or r > INT_MAX:
            r = wrap(r)
    return r


def _coerce_scalar(kind: str, v):
    if kind == "int":
        if isinstance(v, bool) or not isinstance(v, int):
            raise ArgumentMismatch(f"expected an int argument, got {v!r}")
        return wrap(v)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ArgumentMismatch(f"expected a real argument, got {v!r}")
    return float(v)


def to_runtime_args(f: FunctionDef, args) -> list:
    """Fresh runtime copies of plain Python arguments. Arrays never share storage."""
    if len(args) != len(f.params):
        raise ArgumentMismatch(f"{f.signature} expects {len(f.params)} arguments, got {len(args)}")
    out = []
    for pos, ((_, kind), v) in enumerate(zip(f.params, args)):
        if kind in ("int", "real"):
            out.append(_coerce_scalar(kind, v))
        elif kind in ("array-int", "array-real"):
            if isinstance(v, TArray):
                v = list(v)
            if not isinstance(v, (list, tuple)):
                raise ArgumentMismatch(f"expected an array argument, got {v!r}")
            elem = "int" if kind == "array-int" else "real"
            out.append(TArray(kind, [_coerce_scalar(elem, x) for x in v], ("arg", pos)))
        else:
            if not isinstance(v, TObject):
                raise ArgumentMismatch("object arguments must be runtime objects")
            out.append(v)
    return out


def initial_globals(p: Program) -> dict:
    g = {}
    for d in p.globals:
        if d.kind == "int":
            g[d.name] = 0
        elif d.kind == "real":
            g[d.name] = 0.0
        elif d.init_size is not None:
            g[d.name] = TArray.zeros(d.kind, d.init_size, ("global", d.name))
        else:
            g[d.name] = None
    return g


def materialize(v, _seen=None):
    """Plain Python copy of a runtime value."""
    if isinstance(v, TArray):
        return list(v)
    if isinstance(v, TObject):
        _seen = set() if _seen is None else _seen
        if id(v) in _seen:
            return {"<cycle>": True}
        _seen.add(id(v))
        return {k: materialize(x, _seen) for k, x in sorted(v.fields.items())}
    return v


def _scalar_token(v) -> str:
    if v is None:
        return "n"
    if isinstance(v, bool):
        return f"b{int(v)}"
    if isinstance(v, int):
        return f"i{v}"
    if isinstance(v, float):
        return f"r{v.hex()}"
    raise ExecError(f"cannot digest {v!r}")


def heap_digest(globals_: dict, args: list, ret) -> str:
    ids: dict[int, int] = {}
    out: list[str] = []

    def visit(v):
        if isinstance(v, (TArray, TObject)):
            key = id(v)
            if key in ids:
                out.append(f"@{ids[key]}")
                return
            ids[key] = len(ids)
            if isinstance(v, TArray):
                out.append(f"A{v.kind}:{len(v)}[")
                out.extend(_scalar_token(x) if not isinstance(x, (TArray, TObject)) else "?" for x in v)
                out.append("]")
            else:
                out.append("O{")
                for k in sorted(v.fields):
                    out.append(f"{k}=")
                    visit(v.fields[k])
                out.append("}")
        else:
            out.append(_scalar_token(v))

    for name in sorted(globals_):
        out.append(f"g:{name}=")
        visit(globals_[name])
    for k, a in enumerate(args):
        out.append(f"a:{k}=")
        visit(a)
    out.append("ret=")
    visit(ret)
    return hashlib.sha256("|".join(out).encode()).hexdigest()


@dataclass(frozen=True)
class RunResult:
    return_value: Any
    heap_digest: str
    step_count: int
    outputs: dict = field(default_factory=dict, compare=False, repr=False)


def make_result(globals_: dict, args: list, ret, steps: int) -> RunResult:
    outputs = {
        "args": [materialize(a) for a in args],
        "globals": {k: materialize(v) for k, v in sorted(globals_.items())},
    }
    return RunResult(materialize(ret), heap_digest(globals_, args, ret), steps, outputs)


def parse_args_json(data) -> list:
    """Argument vector as decoded from a JSON array."""
    if not isinstance(data, list):
        raise ArgumentMismatch("argument file must hold a JSON array")
    return data


def resolve_entry(p: Program, entry: Optional[str]) -> FunctionDef:
    sig = entry or p.entry
    if sig is None:
        raise ArgumentMismatch("no entry function given")
    try:
        return p.function_named(sig)
    except KeyError:
        raise ArgumentMismatch(f"entry {sig!r} does not resolve") from None
