from __future__ import annotations

import random
from pathlib import Path

from hypothesis import given, settings, strategies as st

from tajpar.annotate import analyze_program
from tajpar.constraints import collect_array_refs
from tajpar.execute import conflict_oracle
from tajpar.formula import Neq, Var, emit_smtlib, normalize, smt, substitute, variables
from tajpar.kernels import load_corpus
from tajpar.solver import SAT, solve
from tajpar.syntax import parse_program

from conftest import loop_by_iter
from taj_gen import Asm, program_text, random_array_loop

DATA = Path(__file__).parent / "data"


def _only_report(p):
    (rep,) = analyze_program(p).reports
    return rep


def test_chain_write_formula_matches_golden():
    rep = _only_report(load_corpus("chain_write.taj"))
    assert rep.parallel
    assert normalize(rep.formula) == rep.formula
    assert emit_smtlib(rep.formula) == (DATA / "chain_write.smt2").read_text()


def test_chain_write_formula_has_both_tags_of_every_chain_variable():
    rep = _only_report(load_corpus("chain_write.taj"))
    names = {v.symbol for v in variables(rep.formula)}
    assert names == {f"{n}_{t}" for n in ("i", "k1", "k2", "k3") for t in (0, 1)}


def test_saxpy_reads_of_unaliased_arrays_are_skipped(saxpy):
    rep = _only_report(saxpy)
    writes, reads = collect_array_refs(rep.info, saxpy.functions[saxpy.entry])
    assert [w.base for w in writes] == ["y"]
    assert sorted(r.base for r in reads) == ["x", "y"]
    # x is never written and cannot alias y, so only y pairs contribute
    assert "x" not in smt(rep.formula)
    assert rep.parallel


def test_shared_bound_is_untagged(saxpy):
    rep = _only_report(saxpy)
    assert Var("n") in variables(rep.formula)
    assert Neq(Var("i", 0), Var("i", 1)) in rep.formula.items


def test_swap_dependence_is_satisfiable(swap):
    rep = _only_report(swap)
    assert not rep.parallel
    assert rep.result.status == SAT


def test_index_loaded_from_memory_is_unsupported():
    a = Asm("f", [("ar", "array-int"), ("ix", "array-int"), ("n", "int")])
    a.loop("i", 0, "<", "n", lambda: a.s("$k = ix[i]", "ar[$k] = i"))
    a.s("return")
    rep = _only_report(parse_program(program_text([a], a)))
    assert (rep.verdict, rep.stage) == ("rejected", "constraints")
    assert "ArrayLoad" in rep.detail


def test_no_writes_means_no_dependence():
    a = Asm("f", [("ar", "array-int"), ("n", "int")], "int")
    a.label("S_s")
    a.s("s = 0")
    a.local("s", "int", "S_s", "END")
    a.loop("i", 0, "<", "n", lambda: a.s("$v = ar[i]"))
    a.s("return s")
    rep = _only_report(parse_program(program_text([a], a)))
    assert rep.parallel and smt(rep.formula) == "false"


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_oracle_witness_satisfies_formula(seed):
    text, args = random_array_loop(random.Random(seed))
    p = parse_program(text)
    rep = _only_report(p)
    if rep.formula is None:
        return
    found, w = conflict_oracle(p, None, args, loop_by_iter(p, "i"))
    if not found:
        return
    # tag 0 is the writing iteration, which may come second in time
    statuses = {solve(substitute(rep.formula, {Var("i", 0): x, Var("i", 1): y})).status
                for x, y in ((w.first, w.second), (w.second, w.first))}
    assert SAT in statuses
