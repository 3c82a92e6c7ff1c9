from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from tajpar.formula import Add, Const, Eq, Ge, Le, Lt, Mul, Neq, Var, conj, evaluate
from tajpar.solver import SAT, UNKNOWN, UNSAT, SolverConfig, classify, dnf_size, omega, solve

from test_formula import VARS, formulas

I0, I1, X, Y = Var("i", 0), Var("i", 1), Var("x"), Var("y")
C = Const


# ---------------------------------------------------------------------------
# Omega test against brute force over a bounded box

def _random_system(rng: random.Random, names, box: int):
    eqs, geqs = [], []
    for v in names:
        geqs.append(({v: 1}, box))
        geqs.append(({v: -1}, box))
    for _ in range(rng.randint(1, 4)):
        coefs = {v: rng.randint(-5, 5) for v in names if rng.random() < 0.8}
        con = (coefs, rng.randint(-20, 20))
        (eqs if rng.random() < 0.3 else geqs).append(con)
    return eqs, geqs


def _holds(con, env) -> int:
    coefs, const = con
    return const + sum(c * env[v] for v, c in coefs.items())


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_omega_matches_brute_force(seed):
    rng = random.Random(seed)
    names = ["a", "b", "c"][: rng.randint(1, 3)]
    box = 16
    eqs, geqs = _random_system(rng, names, box)
    model = omega(eqs, geqs)
    feasible = any(
        all(_holds(e, env) == 0 for e in eqs) and all(_holds(g, env) >= 0 for g in geqs)
        for env in (dict(zip(names, vals)) for vals in itertools.product(range(-box, box + 1), repeat=len(names)))
    )
    assert (model is not None) == feasible
    if model is not None:
        assert all(_holds(e, model) == 0 for e in eqs)
        assert all(_holds(g, model) >= 0 for g in geqs)


def test_omega_needs_integer_reasoning():
    # 2a + 4b = 7 has rational but no integer solutions
    assert omega([({"a": 2, "b": 4}, -7)], []) is None
    # 3 <= 2a <= 3 likewise
    assert omega([], [({"a": 2}, -3), ({"a": -2}, 3)]) is None
    assert omega([({"a": 3, "b": -5}, -1)], []) is not None


# ---------------------------------------------------------------------------
# full solver against brute force on small boxes

def _boxed(f, lo=-3, hi=3):
    return conj(f, *(Ge(v, C(lo)) for v in VARS), *(Le(v, C(hi)) for v in VARS))


@settings(max_examples=150, deadline=None)
@given(formulas)
def test_solve_agrees_with_enumeration(f):
    g = _boxed(f)
    r = solve(g)
    witnesses = (dict(zip(VARS, vals)) for vals in itertools.product(range(-3, 4), repeat=3))
    feasible = any(evaluate(g, env) for env in witnesses)
    if r.status == SAT:
        assert evaluate(g, r.model) is True
    elif r.status == UNSAT:
        assert not feasible
    assert not (feasible and r.status == UNSAT)
    # everything is bounded here, so the solver must be decisive
    assert r.status != UNKNOWN


def test_nonlinear_cases():
    sq = conj(Eq(Mul(I0, I0), C(49)), Ge(I0, C(0)), Lt(I0, C(100)))
    r = solve(sq)
    assert r.status == SAT and r.model[I0] == 7
    distinct_squares = conj(Eq(Mul(I0, I0), Mul(I1, I1)), Neq(I0, I1),
                            Ge(I0, C(0)), Lt(I0, C(64)), Ge(I1, C(0)), Lt(I1, C(64)))
    assert solve(distinct_squares).status == UNSAT
    assert solve(conj(Eq(Mul(X, X), C(2)), Ge(X, C(-100)), Le(X, C(100)))).status == UNSAT
    r = solve(Eq(Mul(X, Y), C(7)))
    assert r.status == SAT and r.model[X] * r.model[Y] == 7


def test_unbounded_nonlinear_is_unknown_and_unknown_blocks_parallelism():
    r = solve(Eq(Mul(X, X), C(2)))
    assert r.status == UNKNOWN
    assert not classify(r)
    assert classify(solve(Eq(Add(Mul(C(2), X), Mul(C(4), Y)), C(7))))


def test_dnf_limit():
    f = conj(*(Neq(Var(f"v{k}"), C(0)) for k in range(14)))
    assert dnf_size(f) == 2 ** 14
    r = solve(f)
    assert (r.status, r.detail) == (UNKNOWN, "more than 10000 disjuncts")


def test_timeout():
    f = conj(Eq(Mul(X, Y), C(7919 * 7907)), Ge(X, C(2)), Ge(Y, C(2)),
             Le(X, C(10 ** 6)), Le(Y, C(10 ** 6)))
    r = solve(f, SolverConfig(timeout_millis=1))
    assert (r.status, r.detail) == (UNKNOWN, "timeout")


def test_emit_only_backend():
    assert solve(Eq(X, C(1)), SolverConfig(backend="emit-only")).status == UNKNOWN


@pytest.mark.parametrize("kw", [{"enum_bound": 0}, {"backend": "z3"}])
def test_bad_config(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_unsat_status_constant():
    assert solve(conj(Lt(X, C(0)), Ge(X, C(0)))).status == UNSAT
