from __future__ import annotations

import random

from hypothesis import given, settings, strategies as st

from tajpar.cfg import build_cfg, dominators, find_natural_loops, reaching_defs
from tajpar.execute import Hooks, Interpreter
from tajpar.execute.values import to_runtime_args
from tajpar.kernels import load_corpus
from tajpar.syntax import parse_program

from taj_gen import random_cfg_function, random_structured


def test_saxpy_successors(saxpy):
    cfg = build_cfg(saxpy.functions[saxpy.entry])
    assert set(cfg.succ[5]) == {6, 13}
    assert cfg.succ[12] == (5,)
    assert cfg.succ[13] == ()


def test_saxpy_single_loop(saxpy):
    loops = find_natural_loops(build_cfg(saxpy.functions[saxpy.entry]))
    assert len(loops) == 1
    assert (loops[0].header, loops[0].back_jump) == (5, 12)
    assert loops[0].body == tuple(range(5, 13))


def test_saxpy_reaching_defs(saxpy):
    f = saxpy.functions[saxpy.entry]
    du = reaching_defs(f, build_cfg(f))
    assert du.defs("i", 6) == {4, 11}
    assert du.defs("n", 5) == {3}


def test_jacobi2d_nests():
    f = load_corpus("jacobi2d.taj").functions["jacobi2d(array-real,array-real):void"]
    loops = find_natural_loops(build_cfg(f))
    assert len(loops) == 4
    outer1, inner1, outer2, inner2 = loops
    assert set(inner1.body) < set(outer1.body)
    assert set(inner2.body) < set(outer2.body)
    assert not set(outer1.body) & set(outer2.body)


def _brute_dominators(cfg):
    reach = cfg.reachable()
    out = {}
    for n in reach:
        doms = set()
        for d in range(cfg.n):
            if d == n:
                doms.add(d)
                continue
            # d dominates n iff n is unreachable once d is removed
            if d == cfg.entry:
                doms.add(d)
                continue
            seen = {cfg.entry}
            stack = [cfg.entry]
            while stack:
                u = stack.pop()
                for v in cfg.succ[u]:
                    if v != d and v not in seen:
                        seen.add(v)
                        stack.append(v)
            if n not in seen:
                doms.add(d)
        out[n] = frozenset(doms)
    return out


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 32))
def test_dominators_match_path_enumeration(seed, n):
    p = parse_program(random_cfg_function(random.Random(seed), n))
    cfg = build_cfg(p.functions[p.entry])
    dom = dominators(cfg)
    for node, expected in _brute_dominators(cfg).items():
        assert dom[node] == expected


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(2, 32))
def test_natural_loop_bodies_are_dominated_by_header(seed, n):
    p = parse_program(random_cfg_function(random.Random(seed), n))
    cfg = build_cfg(p.functions[p.entry])
    dom = dominators(cfg)
    for loop in find_natural_loops(cfg, dom):
        for u in loop.body:
            assert loop.header in dom[u]
        for s in loop.back_sources:
            assert loop.header in cfg.succ[s]


class _DefLog(Hooks):
    def __init__(self):
        self.uses = []

    def on_use(self, frame, name, idx, def_idx, value):
        self.uses.append((name, idx, def_idx))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_reaching_defs_soundness(seed):
    text, args = random_structured(random.Random(seed))
    p = parse_program(text)
    f = p.functions[p.entry]
    du = reaching_defs(f, build_cfg(f))
    log = _DefLog()
    Interpreter(p, log).run(f, to_runtime_args(f, args))
    assert log.uses
    for name, idx, def_idx in log.uses:
        assert def_idx in du.defs(name, idx)
