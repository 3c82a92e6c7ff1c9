"""Tokenizer, parser and printer for the textual TAJ format."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .ir import (
    ArrayLoad, ArrayStore, Assign, BinOp, Call, CondExpr, FieldLoad, FieldStore,
    FunctionDef, GlobalDecl, GlobalLoad, GlobalStore, Goto, Identity, IfGoto,
    IntConst, LocalRef, LocalVarEntry, New, Program, Return, Statement,
    TajSyntaxError, make_signature, validate_program,
)

_TOKEN_SPEC = [
    ("WS", r"[ \t\r]+"),
    ("COMMENT", r"//[^\n]*"),
    ("NEWLINE", r"\n"),
    ("KIND", r"array-(?:int|real)(?![A-Za-z0-9_$])"),
    ("NAME", r"<[A-Za-z_]+>|[A-Za-z_$][A-Za-z0-9_$]*"),
    ("INT", r"\d+"),
    ("ASSIGN_PARAM", r":="),
    ("CMP", r"<=|>=|==|!=|<|>"),
    ("PUNCT", r"[{}()\[\],:;.=@+\-*]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{n}>{p})" for n, p in _TOKEN_SPEC))


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise TajSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "NEWLINE":
            tokens.append(Token("NEWLINE", "\n", line, pos - line_start + 1))
            line += 1
            line_start = m.end()
        elif kind not in ("WS", "COMMENT"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


_KINDS = ("int", "real", "object", "void")


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers -----------------------------------------------------
    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.peek()
        shown = tok.text if tok.kind != "NEWLINE" else "end of line"
        raise TajSyntaxError(f"{msg} (found {shown!r})" if tok.kind != "EOF" else f"{msg} (found end of input)",
                             tok.line, tok.col)

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.text == text and t.kind != "NEWLINE"

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        tok = self.peek()
        self.i += 1
        return tok

    def name(self) -> str:
        t = self.peek()
        if t.kind != "NAME":
            self.error("expected identifier")
        self.i += 1
        return t.text

    def integer(self) -> int:
        neg = self.accept("-")
        t = self.peek()
        if t.kind != "INT":
            self.error("expected integer")
        self.i += 1
        return -int(t.text) if neg else int(t.text)

    def kind(self, allow_void: bool = False) -> str:
        t = self.peek()
        if t.kind == "KIND" or (t.kind == "NAME" and t.text in _KINDS):
            if t.text == "void" and not allow_void:
                self.error("void is only a return kind")
            self.i += 1
            return t.text
        self.error("expected a kind")

    def skip_newlines(self) -> None:
        while self.peek().kind == "NEWLINE":
            self.i += 1

    def end_of_line(self) -> None:
        t = self.peek()
        if t.kind == "EOF":
            return
        if t.kind != "NEWLINE":
            self.error("expected end of line")
        self.skip_newlines()

    # -- grammar -------------------------------------------------------------
    def program(self) -> Program:
        globals_: list[GlobalDecl] = []
        functions: dict[str, FunctionDef] = {}
        entry: Optional[str] = None
        self.skip_newlines()
        while self.peek().kind != "EOF":
            t = self.peek()
            if t.text == "global":
                self.i += 1
                globals_.append(self.global_decl())
            elif t.text == "entry":
                self.i += 1
                if entry is not None:
                    self.error("duplicate entry declaration", t)
                entry = self.signature()
            elif t.text == "func":
                self.i += 1
                f = self.function()
                if f.signature in functions:
                    raise TajSyntaxError(f"duplicate function {f.signature!r}", t.line, t.col)
                functions[f.signature] = f
            else:
                self.error("expected 'global', 'entry' or 'func'")
            self.end_of_line()
        return Program(tuple(globals_), functions, entry)

    def global_decl(self) -> GlobalDecl:
        name = self.name()
        self.expect(":")
        kind = self.kind()
        size = None
        if self.accept("["):
            size = self.integer()
            self.expect("]")
        return GlobalDecl(name, kind, size)

    def signature(self) -> str:
        name = self.name()
        self.expect("(")
        kinds: list[str] = []
        if not self.at(")"):
            kinds.append(self.kind())
            while self.accept(","):
                kinds.append(self.kind())
        self.expect(")")
        self.expect(":")
        ret = self.kind(allow_void=True)
        return make_signature(name, kinds, ret)

    def function(self) -> FunctionDef:
        name = self.name()
        self.expect("(")
        params: list[tuple[str, str]] = []
        if not self.at(")"):
            while True:
                pname = self.name()
                self.expect(":")
                params.append((pname, self.kind()))
                if not self.accept(","):
                    break
        self.expect(")")
        self.expect(":")
        ret = self.kind(allow_void=True)
        self.expect("{")
        self.skip_newlines()
        entries: list[LocalVarEntry] = []
        if self.at("locals"):
            self.i += 1
            self.expect("{")
            self.skip_newlines()
            while not self.at("}"):
                entries.append(self.local_entry())
                self.skip_newlines()
            self.expect("}")
            self.skip_newlines()
        stmts: list[Statement] = []
        while not self.at("}"):
            t = self.peek()
            if t.kind != "INT":
                self.error("expected statement index")
            idx = self.integer()
            if idx != len(stmts):
                raise TajSyntaxError(f"statement index {idx} out of sequence, expected {len(stmts)}",
                                     t.line, t.col)
            self.expect(":")
            stmts.append(self.statement())
            self.end_of_line()
        self.expect("}")
        return FunctionDef(name, tuple(params), ret, tuple(entries), tuple(stmts))

    def local_entry(self) -> LocalVarEntry:
        name = self.name()
        self.expect(":")
        kind = self.kind()
        self.expect("slot")
        slot = self.integer()
        self.expect("span")
        self.expect("[")
        start = self.integer()
        self.expect(",")
        end_tok = self.peek()
        end = self.integer()
        self.expect(")")
        self.expect(";")
        if end < start:
            raise TajSyntaxError("span end precedes start", end_tok.line, end_tok.col)
        return LocalVarEntry(name, kind, slot, start, end - start)

    def operand(self):
        t = self.peek()
        if t.kind == "INT" or (t.text == "-" and self.peek(1).kind == "INT"):
            return IntConst(self.integer())
        if t.kind == "NAME":
            self.i += 1
            return LocalRef(t.text)
        self.error("expected operand")

    def statement(self) -> Statement:
        t = self.peek()
        if t.text == "if" and t.kind == "NAME":
            self.i += 1
            lhs = self.operand()
            op = self.peek()
            if op.kind != "CMP":
                self.error("expected comparison operator")
            self.i += 1
            rhs = self.operand()
            self.expect("goto")
            return IfGoto(CondExpr(op.text, lhs, rhs), self.integer())
        if t.text == "goto" and t.kind == "NAME":
            self.i += 1
            return Goto(self.integer())
        if t.text == "return" and t.kind == "NAME":
            self.i += 1
            if self.peek().kind in ("NEWLINE", "EOF"):
                return Return()
            return Return(self.operand())
        if t.text == "call" and t.kind == "NAME" and self.peek(1).kind == "NAME":
            self.i += 1
            return self.call(None)
        if t.text == "@":
            self.i += 1
            g = self.name()
            self.expect("=")
            return GlobalStore(g, self.operand())
        target = self.name()
        if self.accept(":="):
            self.expect("param")
            return Identity(target, self.integer())
        if self.accept("["):
            idx = self.operand()
            self.expect("]")
            self.expect("=")
            return ArrayStore(target, idx, self.operand())
        if self.accept("."):
            fld = self.name()
            self.expect("=")
            return FieldStore(target, fld, self.operand())
        self.expect("=")
        return self.rhs(target)

    def rhs(self, target: str) -> Statement:
        t = self.peek()
        if t.text == "@":
            self.i += 1
            return GlobalLoad(target, self.name())
        if t.kind == "NAME" and t.text == "new" and self.peek(1).kind in ("KIND", "NAME") \
                and self.peek(1).text in ("array-int", "array-real", "object"):
            self.i += 1
            kind = self.kind()
            if kind == "object":
                return New(target, kind)
            self.expect("[")
            size = self.operand()
            self.expect("]")
            return New(target, kind, size)
        if t.kind == "NAME" and t.text == "call" and self.peek(1).kind == "NAME" and self.peek(2).text == "(":
            self.i += 1
            return self.call(target)
        first = self.operand()
        if isinstance(first, LocalRef):
            if self.accept("["):
                idx = self.operand()
                self.expect("]")
                return ArrayLoad(target, first.name, idx)
            if self.accept("."):
                return FieldLoad(target, first.name, self.name())
        op = self.peek()
        if op.text in ("+", "-", "*") and op.kind == "PUNCT":
            self.i += 1
            return Assign(target, BinOp(op.text, first, self.operand()))
        return Assign(target, first)

    def call(self, target: Optional[str]) -> Call:
        sig = self.signature()
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.operand())
            while self.accept(","):
                args.append(self.operand())
        self.expect(")")
        return Call(target, sig, tuple(args))


def parse_program(text: str, validate: bool = True) -> Program:
    """Parse TAJ source. Raises TajSyntaxError or ValidationError."""
    prog = _Parser(text).program()
    if validate:
        validate_program(prog)
    return prog


def parse_file(path, validate: bool = True) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read(), validate)


# ---------------------------------------------------------------------------
# printing


def format_statement(s: Statement) -> str:
    if isinstance(s, Identity):
        return f"{s.target} := param {s.position}"
    if isinstance(s, Assign):
        return f"{s.target} = {s.expr}"
    if isinstance(s, ArrayLoad):
        return f"{s.target} = {s.base}[{s.index}]"
    if isinstance(s, ArrayStore):
        return f"{s.base}[{s.index}] = {s.value}"
    if isinstance(s, FieldLoad):
        return f"{s.target} = {s.obj}.{s.field}"
    if isinstance(s, FieldStore):
        return f"{s.obj}.{s.field} = {s.value}"
    if isinstance(s, GlobalLoad):
        return f"{s.target} = @{s.name}"
    if isinstance(s, GlobalStore):
        return f"@{s.name} = {s.value}"
    if isinstance(s, New):
        if s.size is None:
            return f"{s.target} = new {s.kind}"
        return f"{s.target} = new {s.kind}[{s.size}]"
    if isinstance(s, Call):
        text = f"call {s.callee}({', '.join(str(a) for a in s.args)})"
        return f"{s.target} = {text}" if s.target is not None else text
    if isinstance(s, IfGoto):
        return f"if {s.cond} goto {s.target_index}"
    if isinstance(s, Goto):
        return f"goto {s.target_index}"
    if isinstance(s, Return):
        return "return" if s.value is None else f"return {s.value}"
    raise TypeError(f"not a statement: {s!r}")


def format_function(f: FunctionDef) -> str:
    params = ", ".join(f"{n}: {k}" for n, k in f.params)
    lines = [f"func {f.name}({params}) : {f.ret} {{"]
    if f.locals:
        lines.append("  locals {")
        for e in f.locals:
            lines.append(f"    {e.name} : {e.kind} slot {e.slot} span [{e.start}, {e.end}) ;")
        lines.append("  }")
    width = len(str(max(len(f.statements) - 1, 0)))
    for idx, s in enumerate(f.statements):
        lines.append(f"  {idx:>{width}}: {format_statement(s)}")
    lines.append("}")
    return "\n".join(lines)


def print_program(p: Program) -> str:
    parts: list[str] = []
    for g in p.globals:
        size = f"[{g.init_size}]" if g.init_size is not None else ""
        parts.append(f"global {g.name} : {g.kind}{size}")
    if p.entry is not None:
        parts.append(f"entry {p.entry}")
    head = "\n".join(parts)
    blocks = [head] if head else []
    blocks.extend(format_function(f) for f in p.functions.values())
    return "\n\n".join(blocks) + ("\n" if blocks else "")
