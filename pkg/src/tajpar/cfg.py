"""Control-flow graph, dominators, natural loops and reaching definitions."""
from __future__ import annotations

from dataclasses import dataclass, field

from .ir import FunctionDef, Goto, IfGoto, Return, defined_local


@dataclass(frozen=True)
class Cfg:
    n: int
    succ: tuple[tuple[int, ...], ...]
    pred: tuple[tuple[int, ...], ...]
    entry: int = 0

    @property
    def nodes(self) -> range:
        return range(self.n)

    def reachable(self) -> frozenset[int]:
        if self.n == 0:
            return frozenset()
        seen = {self.entry}
        stack = [self.entry]
        while stack:
            u = stack.pop()
            for v in self.succ[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return frozenset(seen)

    def edges(self):
        for u in range(self.n):
            for v in self.succ[u]:
                yield u, v


def build_cfg(f: FunctionDef) -> Cfg:
    n = len(f.statements)
    succ: list[list[int]] = [[] for _ in range(n)]
    for idx, s in enumerate(f.statements):
        if isinstance(s, Return):
            continue
        if isinstance(s, Goto):
            succ[idx].append(s.target_index)
            continue
        if idx + 1 < n:
            succ[idx].append(idx + 1)
        if isinstance(s, IfGoto) and s.target_index not in succ[idx]:
            succ[idx].append(s.target_index)
    pred: list[list[int]] = [[] for _ in range(n)]
    for u in range(n):
        for v in succ[u]:
            pred[v].append(u)
    return Cfg(n, tuple(tuple(s) for s in succ), tuple(tuple(sorted(p)) for p in pred))


def dominators(cfg: Cfg) -> list[frozenset[int]]:
    """Iterative dominator sets. Unreachable nodes get the full node set."""
    everything = frozenset(range(cfg.n))
    reach = cfg.reachable()
    dom: list[frozenset[int]] = [everything] * cfg.n
    if cfg.n == 0:
        return dom
    dom[cfg.entry] = frozenset({cfg.entry})
    order = [u for u in range(cfg.n) if u in reach and u != cfg.entry]
    changed = True
    while changed:
        changed = False
        for u in order:
            preds = [p for p in cfg.pred[u] if p in reach]
            new = frozenset.intersection(*(dom[p] for p in preds)) if preds else frozenset()
            new = new | {u}
            if new != dom[u]:
                dom[u] = new
                changed = True
    return dom


@dataclass(frozen=True)
class NaturalLoop:
    header: int
    back_jump: int
    back_sources: tuple[int, ...]
    body: tuple[int, ...]
    exits: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __contains__(self, idx: int) -> bool:
        return idx in self._body_set

    @property
    def _body_set(self) -> frozenset[int]:
        return frozenset(self.body)


def find_natural_loops(cfg: Cfg, dom=None) -> list[NaturalLoop]:
    """One loop per header; back edges sharing a header are merged."""
    dom = dominators(cfg) if dom is None else dom
    reach = cfg.reachable()
    by_header: dict[int, list[int]] = {}
    for u, v in cfg.edges():
        if u in reach and v in dom[u]:
            by_header.setdefault(v, []).append(u)
    loops = []
    for h in sorted(by_header):
        sources = sorted(by_header[h])
        body = {h}
        stack = [s for s in sources if s != h]
        body.update(stack)
        while stack:
            u = stack.pop()
            for p in cfg.pred[u]:
                if p not in body and p in reach:
                    body.add(p)
                    stack.append(p)
        exits = frozenset((u, v) for u in body for v in cfg.succ[u] if v not in body)
        loops.append(NaturalLoop(h, max(sources), tuple(sources), tuple(sorted(body)), exits))
    return loops


@dataclass(frozen=True)
class DefUse:
    """Reaching definitions: (statement, local) -> defining statement indices."""
    reach_in: tuple[frozenset[int], ...]
    defs_of: dict[str, frozenset[int]]

    def defs(self, name: str, at: int) -> frozenset[int]:
        return self.reach_in[at] & self.defs_of.get(name, frozenset())


def reaching_defs(f: FunctionDef, cfg: Cfg) -> DefUse:
    n = len(f.statements)
    defs_of: dict[str, set[int]] = {}
    for idx, s in enumerate(f.statements):
        d = defined_local(s)
        if d is not None:
            defs_of.setdefault(d, set()).add(idx)
    frozen = {k: frozenset(v) for k, v in defs_of.items()}
    kill = []
    gen = []
    for idx, s in enumerate(f.statements):
        d = defined_local(s)
        if d is None:
            kill.append(frozenset())
            gen.append(frozenset())
        else:
            kill.append(frozen[d])
            gen.append(frozenset({idx}))
    rin = [frozenset()] * n
    rout = [frozenset()] * n
    work = list(range(n))
    queued = set(work)
    while work:
        u = work.pop(0)
        queued.discard(u)
        new_in = frozenset().union(*(rout[p] for p in cfg.pred[u])) if cfg.pred[u] else frozenset()
        rin[u] = new_in
        new_out = gen[u] | (new_in - kill[u])
        if new_out != rout[u]:
            rout[u] = new_out
            for v in cfg.succ[u]:
                if v not in queued:
                    work.append(v)
                    queued.add(v)
    return DefUse(tuple(rin), frozen)
