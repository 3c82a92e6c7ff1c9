"""Integer constraint AST with smart constructors and SMT-LIB2 rendering."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional, Union


class ContractViolation(ValueError):
    """A formula handed to the solver or emitter is malformed."""


@dataclass(frozen=True)
class Var:
    name: str
    tag: Optional[int] = None

    @property
    def symbol(self) -> str:
        return self.name if self.tag is None else f"{self.name}_{self.tag}"


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Arith:
    lhs: "Term"
    rhs: "Term"
    op = "?"


class Add(Arith):
    op = "+"


class Sub(Arith):
    op = "-"


class Mul(Arith):
    op = "*"


Term = Union[Var, Const, Arith]


@dataclass(frozen=True)
class Cmp:
    lhs: Term
    rhs: Term
    op = "?"


class Eq(Cmp):
    op = "=="


class Neq(Cmp):
    op = "!="


class Lt(Cmp):
    op = "<"


class Le(Cmp):
    op = "<="


class Gt(Cmp):
    op = ">"


class Ge(Cmp):
    op = ">="


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class _Lit:
    value: bool


TrueLit = _Lit(True)
FalseLit = _Lit(False)

Formula = Union[Cmp, And, Or, _Lit]

ARITH_BY_OP = {"+": Add, "-": Sub, "*": Mul}
CMP_BY_OP = {"==": Eq, "!=": Neq, "<": Lt, "<=": Le, ">": Gt, ">=": Ge}
_SMT_CMP = {"==": "=", "!=": "distinct", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


@lru_cache(maxsize=None)
def smt(node) -> str:
    """SMT-LIB2 text of a term or formula."""
    if isinstance(node, Var):
        return node.symbol
    if isinstance(node, Const):
        return str(node.value) if node.value >= 0 else f"(- {-node.value})"
    if isinstance(node, Arith):
        return f"({node.op} {smt(node.lhs)} {smt(node.rhs)})"
    if isinstance(node, Cmp):
        return f"({_SMT_CMP[node.op]} {smt(node.lhs)} {smt(node.rhs)})"
    if isinstance(node, And):
        return "(and " + " ".join(smt(i) for i in node.items) + ")"
    if isinstance(node, Or):
        return "(or " + " ".join(smt(i) for i in node.items) + ")"
    if isinstance(node, _Lit):
        return "true" if node.value else "false"
    raise ContractViolation(f"not a formula node: {node!r}")


def _collect(kind, items: Iterable, absorbing, neutral) -> Formula:
    flat: dict[str, object] = {}
    stack = list(items)
    stack.reverse()
    while stack:
        it = stack.pop()
        if isinstance(it, kind):
            stack.extend(reversed(it.items))
            continue
        if it == absorbing:
            return absorbing
        if it == neutral:
            continue
        flat.setdefault(smt(it), it)
    if not flat:
        return neutral
    if len(flat) == 1:
        return next(iter(flat.values()))
    return kind(tuple(flat[k] for k in sorted(flat)))


def conj(*items) -> Formula:
    """Flattened, deduplicated, sorted conjunction."""
    return _collect(And, items, FalseLit, TrueLit)


def disj(*items) -> Formula:
    """Flattened, deduplicated, sorted disjunction."""
    return _collect(Or, items, TrueLit, FalseLit)


def normalize(f: Formula) -> Formula:
    if isinstance(f, And):
        return conj(*(normalize(i) for i in f.items))
    if isinstance(f, Or):
        return disj(*(normalize(i) for i in f.items))
    return f


def variables(node, acc: Optional[set] = None) -> set[Var]:
    acc = set() if acc is None else acc
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Var):
            acc.add(n)
        elif isinstance(n, (Arith, Cmp)):
            stack.append(n.lhs)
            stack.append(n.rhs)
        elif isinstance(n, (And, Or)):
            stack.extend(n.items)
    return acc


def check_well_formed(node) -> None:
    """Raise ContractViolation unless node is a well-typed formula."""
    def term(t):
        if isinstance(t, Var):
            if not isinstance(t.name, str) or not t.name or t.tag not in (None, 0, 1):
                raise ContractViolation(f"bad variable {t!r}")
        elif isinstance(t, Const):
            if not isinstance(t.value, int) or isinstance(t.value, bool):
                raise ContractViolation(f"bad constant {t!r}")
        elif isinstance(t, Arith) and type(t) in (Add, Sub, Mul):
            term(t.lhs)
            term(t.rhs)
        else:
            raise ContractViolation(f"not an arithmetic term: {t!r}")

    def form(f):
        if isinstance(f, _Lit):
            return
        if isinstance(f, Cmp) and type(f) in CMP_BY_OP.values():
            term(f.lhs)
            term(f.rhs)
        elif isinstance(f, (And, Or)):
            for i in f.items:
                form(i)
        else:
            raise ContractViolation(f"not a formula: {f!r}")

    form(node)


def evaluate(node, env: dict) -> Union[int, bool]:
    """Direct recursive evaluator, kept independent of the solver's internals."""
    if isinstance(node, Var):
        return env[node]
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Add):
        return evaluate(node.lhs, env) + evaluate(node.rhs, env)
    if isinstance(node, Sub):
        return evaluate(node.lhs, env) - evaluate(node.rhs, env)
    if isinstance(node, Mul):
        return evaluate(node.lhs, env) * evaluate(node.rhs, env)
    if isinstance(node, Cmp):
        a = evaluate(node.lhs, env)
        b = evaluate(node.rhs, env)
        return {"==": a == b, "!=": a != b, "<": a < b, "<=": a <= b,
                ">": a > b, ">=": a >= b}[node.op]
    if isinstance(node, And):
        return all(evaluate(i, env) for i in node.items)
    if isinstance(node, Or):
        return any(evaluate(i, env) for i in node.items)
    if isinstance(node, _Lit):
        return node.value
    raise ContractViolation(f"cannot evaluate {node!r}")


def substitute(node, values: dict):
    """Replace variables found in values by constants."""
    if isinstance(node, Var):
        return Const(values[node]) if node in values else node
    if isinstance(node, Const) or isinstance(node, _Lit):
        return node
    if isinstance(node, Arith):
        return type(node)(substitute(node.lhs, values), substitute(node.rhs, values))
    if isinstance(node, Cmp):
        return type(node)(substitute(node.lhs, values), substitute(node.rhs, values))
    if isinstance(node, And):
        return conj(*(substitute(i, values) for i in node.items))
    if isinstance(node, Or):
        return disj(*(substitute(i, values) for i in node.items))
    raise ContractViolation(f"cannot substitute into {node!r}")


def emit_smtlib(f: Formula) -> str:
    """SMT-LIB2 script: sorted declarations, one assert, check-sat."""
    check_well_formed(f)
    vs = variables(f)
    by_symbol: dict[str, Var] = {}
    for v in vs:
        prev = by_symbol.setdefault(v.symbol, v)
        if prev != v:
            raise ContractViolation(f"symbol {v.symbol!r} names both {prev!r} and {v!r}")
    lines = [f"(declare-const {s} Int)" for s in sorted(by_symbol)]
    lines.append(f"(assert {smt(f)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"
