from __future__ import annotations

import pytest

from tajpar.annotate import canonical_loops
from tajpar.execute import Hooks, Interpreter
from tajpar.execute.values import to_runtime_args
from tajpar.kernels import KERNELS, load_corpus
from tajpar.scalardep import check_scalars
from tajpar.scope import UntabledLocal, get_local_vars, is_local
from tajpar.syntax import format_statement, parse_program

from conftest import loop_by_iter
from taj_gen import Asm, program_text


def test_saxpy_local_set(saxpy):
    info = loop_by_iter(saxpy, "i")
    ls = get_local_vars(saxpy.functions[saxpy.entry], info)
    assert ls.names == {"i", "$t0", "$t1", "$t2", "$t3"}


def test_scoped_port():
    p = load_corpus("scoped.taj")
    f = p.functions[p.entry]
    info = loop_by_iter(p, "i")
    assert is_local("c", info, f)
    assert not is_local("a", info, f)
    assert is_local("$d", info, f)
    ls = get_local_vars(f, info)
    assert "c" in ls and "a" not in ls


def _one_loop(start_offset: int):
    """Loop whose extra variable v spans the loop shifted by start_offset."""
    a = Asm("f", [("ar", "array-int"), ("n", "int")])
    a.label("pre")
    a.s("v = 0")
    a.loop("i", 0, "<", "n", lambda: a.s("v = i", "ar[i] = v"))
    a.s("return")
    a.labels["vs"] = a.labels["S_i"] + start_offset
    a.local("v", "int", "vs", "E_i")
    return parse_program(program_text([a], a))


def test_boundary_of_live_range():
    inside = _one_loop(0)
    f = inside.functions[inside.entry]
    assert is_local("v", loop_by_iter(inside, "i"), f)
    before = _one_loop(-1)
    f = before.functions[before.entry]
    assert not is_local("v", loop_by_iter(before, "i"), f)


def test_loop_with_no_body_locals_has_only_iter():
    a = Asm("f", [("ar", "array-int"), ("n", "int")])
    a.loop("i", 0, "<", "n", lambda: a.s("ar[i] = i"))
    a.s("return")
    p = parse_program(program_text([a], a))
    assert get_local_vars(p.functions[p.entry], loop_by_iter(p, "i")).names == {"i"}


def test_untabled_local_is_an_error(saxpy):
    from dataclasses import replace
    f = saxpy.functions[saxpy.entry]
    info = loop_by_iter(saxpy, "i")
    broken = replace(f, locals=tuple(e for e in f.locals if e.name != "n"))
    with pytest.raises(UntabledLocal):
        get_local_vars(broken, info)


@pytest.mark.parametrize("k", KERNELS, ids=lambda k: k.name)
def test_iter_is_private_for_every_canonical_loop(k):
    p = k.program()
    for f in p.functions.values():
        _, _, verdicts = canonical_loops(f)
        for v in verdicts.values():
            if v.canonical:
                assert v.info.iter in get_local_vars(f, v.info)


class _PrivacyLog(Hooks):
    """Flags reads of a private name that precede its write in the same iteration."""

    def __init__(self, info, privates):
        self.info = info
        self.privates = privates - {info.iter}
        self.written = None
        self.violations = []

    def on_stmt(self, fr, idx):
        if fr.f.signature != self.info.function:
            return
        if idx == self.info.header:
            self.written = None
        elif idx == self.info.body_entry and fr.prev == self.info.header:
            self.written = set()

    def on_def(self, fr, name, idx, value):
        if self.written is not None and fr.f.signature == self.info.function:
            self.written.add(name)

    def on_use(self, fr, name, idx, def_idx, value):
        if (self.written is not None and fr.f.signature == self.info.function
                and name in self.privates and name not in self.written):
            self.violations.append((name, idx))


@pytest.mark.parametrize("k", [k for k in KERNELS if k.runnable], ids=lambda k: k.name)
def test_privacy_soundness_on_corpus(k):
    p = k.program()
    f = p.functions[p.entry]
    _, _, verdicts = canonical_loops(f)
    for v in verdicts.values():
        if not v.canonical:
            continue
        log = _PrivacyLog(v.info, get_local_vars(f, v.info).names)
        Interpreter(p, log).run(f, to_runtime_args(f, k.args(5)))
        assert log.violations == []


# ---------------------------------------------------------------------------
# scalar and field dependences

def _scalar_verdict(p, iter_name="i"):
    f = p.functions[p.entry]
    info = loop_by_iter(p, iter_name)
    return check_scalars(info, get_local_vars(f, info), f)


def test_scoped_port_rejects_nonlocal_write():
    p = load_corpus("scoped.taj")
    v = _scalar_verdict(p)
    assert not v.ok and v.cause == "nonlocal-scalar-write"
    assert format_statement(p.functions[p.entry].statements[v.offending_statement]) == "a = c"


def test_scoped_port_without_shared_write_is_ok():
    a = Asm("scoped", [("ar", "array-int"), ("n", "int")], "int")
    a.label("S_a")
    a.s("a = 0")
    a.local("a", "int", "S_a", "END")

    def body():
        a.label("S_c")
        a.s("c = ar[i]")
        a.local("c", "int", "S_c", "E_i")
        a.s("$d = c + 1", "ar[i] = $d")
    a.loop("i", 0, "<", "n", body)
    a.s("return a")
    assert _scalar_verdict(parse_program(program_text([a], a))).ok


def test_field_and_global_writes_reject():
    a = Asm("f", [("o", "object"), ("n", "int")])
    a.loop("i", 0, "<", "n", lambda: a.s("o.val = i"))
    a.s("return")
    v = _scalar_verdict(parse_program(program_text([a], a)))
    assert (v.ok, v.cause) == (False, "field-write")

    a = Asm("f", [("n", "int")])
    a.loop("i", 0, "<", "n", lambda: a.s("@g = i"))
    a.s("return")
    v = _scalar_verdict(parse_program(program_text([a], a, ["global g : int"])))
    assert (v.ok, v.cause) == (False, "global-write")


def test_reads_of_shared_scalars_never_reject():
    a = Asm("f", [("ar", "array-int"), ("n", "int"), ("k", "int")])
    a.loop("i", 0, "<", "n", lambda: a.s("$x = k + n", "$y = @g", "ar[i] = $x"))
    a.s("return")
    assert _scalar_verdict(parse_program(program_text([a], a, ["global g : int"]))).ok


def test_verdict_independent_of_statement_order():
    def build(order):
        a = Asm("f", [("ar", "array-int"), ("n", "int")])
        a.label("S_s")
        a.s("s = 0")
        a.local("s", "int", "S_s", "END")
        stmts = {"w": "s = i", "r": "$v = ar[i]", "x": "ar[i] = i"}
        a.loop("i", 0, "<", "n", lambda: a.s(*(stmts[k] for k in order)))
        a.s("return")
        return parse_program(program_text([a], a))
    verdicts = {_scalar_verdict(build(o)).ok for o in ("wrx", "rwx", "xrw", "rxw")}
    assert verdicts == {False}


def test_matmul_reduction_rejected():
    p = load_corpus("matmul2d.taj")
    v = _scalar_verdict(p, "k")
    assert (v.ok, v.cause) == (False, "nonlocal-scalar-write")
    assert _scalar_verdict(p, "j").ok and _scalar_verdict(p, "i").ok
