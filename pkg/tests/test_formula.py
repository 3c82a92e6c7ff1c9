from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from tajpar.formula import (
    Add, And, Const, ContractViolation, Eq, FalseLit, Ge, Lt, Mul, Neq, Or, Sub, TrueLit, Var,
    check_well_formed, conj, disj, emit_smtlib, evaluate, normalize, smt, substitute, variables,
)

X, Y, Z = Var("x", 0), Var("y", 1), Var("z")


def test_smt_rendering():
    assert smt(X) == "x_0" and smt(Z) == "z"
    assert smt(Const(-3)) == "(- 3)"
    assert smt(Add(X, Mul(Const(2), Y))) == "(+ x_0 (* 2 y_1))"
    assert smt(Neq(X, Y)) == "(distinct x_0 y_1)"
    assert smt(Eq(X, Sub(Y, Const(1)))) == "(= x_0 (- y_1 1))"
    assert smt(TrueLit) == "true"


def test_conj_and_disj_flatten_dedupe_and_sort():
    a, b, c = Ge(X, Const(0)), Lt(X, Z), Eq(Y, Const(4))
    f = conj(b, conj(a, c), a)
    assert isinstance(f, And)
    assert [smt(i) for i in f.items] == sorted(smt(i) for i in (a, b, c))
    assert conj() == TrueLit and disj() == FalseLit
    assert conj(a, FalseLit) == FalseLit and disj(a, TrueLit) == TrueLit
    assert conj(a, TrueLit) == a
    assert isinstance(disj(a, disj(b, c)), Or) and len(disj(a, disj(b, c)).items) == 3


def test_emit_declares_sorted_symbols():
    text = emit_smtlib(conj(Lt(Var("b"), Var("a", 1)), Ge(Var("a", 0), Const(0))))
    assert text == ("(declare-const a_0 Int)\n(declare-const a_1 Int)\n(declare-const b Int)\n"
                    "(assert (and (< b a_1) (>= a_0 0)))\n(check-sat)\n")


def test_symbol_collision_is_rejected():
    with pytest.raises(ContractViolation):
        emit_smtlib(Eq(Var("a_0"), Var("a", 0)))


@pytest.mark.parametrize("bad", [Eq(Var("a", 2), Const(0)), Eq(Const(True), Const(1)), Add(X, Y), "x"])
def test_malformed_formulas(bad):
    with pytest.raises(ContractViolation):
        check_well_formed(bad)


def test_variables_and_substitute():
    f = conj(Eq(X, Add(Y, Z)), Ge(Z, Const(1)))
    assert variables(f) == {X, Y, Z}
    g = substitute(f, {Y: 2, Z: 3})
    assert variables(g) == {X}
    assert evaluate(g, {X: 5}) is True


# ---------------------------------------------------------------------------

VARS = [Var("u", 0), Var("u", 1), Var("w")]

terms = st.recursive(
    st.one_of(st.sampled_from(VARS), st.integers(-3, 3).map(Const)),
    lambda t: st.builds(lambda k, a, b: k(a, b), st.sampled_from([Add, Sub, Mul]), t, t),
    max_leaves=4,
)
atoms = st.builds(lambda k, a, b: k(a, b), st.sampled_from([Eq, Neq, Lt, Ge]), terms, terms)
formulas = st.recursive(
    atoms,
    lambda f: st.builds(lambda k, xs: k(tuple(xs)), st.sampled_from([And, Or]), st.lists(f, min_size=1, max_size=3)),
    max_leaves=6,
)


@settings(max_examples=150, deadline=None)
@given(formulas)
def test_normalize_preserves_meaning(f):
    g = normalize(f)
    check_well_formed(g)
    assert normalize(g) == g
    for vals in itertools.product(range(-2, 3), repeat=3):
        env = dict(zip(VARS, vals))
        assert evaluate(f, env) == evaluate(g, env)
