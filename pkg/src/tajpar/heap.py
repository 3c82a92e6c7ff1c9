"""Points-to analysis, call graph, alias queries and purity summaries.

The points-to analysis is inclusion based, flow insensitive, context insensitive
and field insensitive: every object is one blob whose contents are the union of
all its element and field values.

Abstract objects ("sites") are tuples:

    ("alloc", sig, idx)     object created by the New at statement idx of sig
    ("param", sig, pos)     whatever the caller passed for reference parameter pos
    ("global", name)        the object initially held by an array global
    ("external", sig)       anything an unresolved callee may return
    ("deref", site)         unknown objects reachable from a pseudo-site above
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .canon import LoopInfo
from .ir import (
    REF_KINDS, ArrayLoad, ArrayStore, Assign, Call, FieldLoad, FieldStore,
    FunctionDef, GlobalLoad, GlobalStore, Identity, LocalRef, New, Program, Return,
    split_signature,
)

Site = tuple


def _is_pseudo(site: Site) -> bool:
    return site[0] in ("param", "global", "external")


@dataclass
class CallGraph:
    edges: dict[str, set[str]] = field(default_factory=dict)
    external: set[str] = field(default_factory=set)

    def callees(self, sig: str) -> set[str]:
        return self.edges.get(sig, set())

    def reachable_from(self, root: str) -> set[str]:
        seen = {root}
        stack = [root]
        while stack:
            u = stack.pop()
            for v in self.edges.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen


def build_call_graph(p: Program) -> CallGraph:
    cg = CallGraph()
    for f in p.iter_functions():
        out = cg.edges.setdefault(f.signature, set())
        for s in f.statements:
            if isinstance(s, Call):
                if p.resolves(s.callee):
                    out.add(s.callee)
                else:
                    cg.external.add(s.callee)
    return cg


@dataclass
class PointsTo:
    env: dict[tuple[str, str], set[Site]]
    contents: dict[Site, set[Site]]
    returns: dict[str, set[Site]]
    globals: dict[str, set[Site]]
    site_kinds: dict[Site, str]

    def of(self, sig: str, name: str) -> frozenset[Site]:
        return frozenset(self.env.get((sig, name), ()))


def _param_targets(f: FunctionDef) -> dict[int, str]:
    out = {k: name for k, (name, _) in enumerate(f.params)}
    for s in f.statements:
        if isinstance(s, Identity):
            out[s.position] = s.target
    return out


def compute_points_to(p: Program) -> PointsTo:
    env: dict[tuple[str, str], set[Site]] = {}
    contents: dict[Site, set[Site]] = {}
    returns: dict[str, set[Site]] = {}
    gl: dict[str, set[Site]] = {}
    kinds: dict[Site, str] = {}

    for g in p.globals:
        gl[g.name] = set()
        if g.kind in REF_KINDS:
            site = ("global", g.name)
            gl[g.name].add(site)
            kinds[site] = g.kind

    def var(sig: str, name: str) -> set[Site]:
        return env.setdefault((sig, name), set())

    def cont(site: Site) -> set[Site]:
        c = contents.get(site)
        if c is None:
            c = contents[site] = set()
            if _is_pseudo(site) or site[0] == "deref":
                d = site if site[0] == "deref" else ("deref", site)
                c.add(d)
                kinds.setdefault(d, "any")
        return c

    targets = {f.signature: _param_targets(f) for f in p.iter_functions()}

    changed = True

    def flow(dst: set[Site], src: Iterable[Site]) -> None:
        nonlocal changed
        before = len(dst)
        dst.update(src)
        if len(dst) != before:
            changed = True

    while changed:
        changed = False
        for f in p.iter_functions():
            sig = f.signature
            for idx, s in enumerate(f.statements):
                if isinstance(s, Identity):
                    kind = f.params[s.position][1]
                    if kind in REF_KINDS:
                        site = ("param", sig, s.position)
                        kinds[site] = kind
                        flow(var(sig, s.target), [site])
                elif isinstance(s, Assign):
                    if isinstance(s.expr, LocalRef):
                        flow(var(sig, s.target), list(var(sig, s.expr.name)))
                elif isinstance(s, New):
                    site = ("alloc", sig, idx)
                    kinds[site] = s.kind
                    flow(var(sig, s.target), [site])
                elif isinstance(s, (ArrayLoad, FieldLoad)):
                    base = s.base if isinstance(s, ArrayLoad) else s.obj
                    dst = var(sig, s.target)
                    for site in list(var(sig, base)):
                        flow(dst, list(cont(site)))
                elif isinstance(s, (ArrayStore, FieldStore)):
                    base = s.base if isinstance(s, ArrayStore) else s.obj
                    if isinstance(s.value, LocalRef):
                        src = list(var(sig, s.value.name))
                        for site in list(var(sig, base)):
                            flow(cont(site), src)
                elif isinstance(s, GlobalLoad):
                    flow(var(sig, s.target), list(gl[s.name]))
                elif isinstance(s, GlobalStore):
                    if isinstance(s.value, LocalRef):
                        flow(gl[s.name], list(var(sig, s.value.name)))
                elif isinstance(s, Return):
                    if isinstance(s.value, LocalRef):
                        flow(returns.setdefault(sig, set()), list(var(sig, s.value.name)))
                elif isinstance(s, Call):
                    if p.resolves(s.callee):
                        tmap = targets[s.callee]
                        for pos, a in enumerate(s.args):
                            if isinstance(a, LocalRef) and pos in tmap:
                                flow(var(s.callee, tmap[pos]), list(var(sig, a.name)))
                        if s.target is not None:
                            flow(var(sig, s.target), list(returns.setdefault(s.callee, set())))
                    else:
                        ext = ("external", s.callee)
                        _, _, ret = split_signature(s.callee)
                        kinds[ext] = "any"
                        escaped: set[Site] = set()
                        for a in s.args:
                            if isinstance(a, LocalRef):
                                escaped.update(var(sig, a.name))
                        flow(cont(ext), escaped)
                        if s.target is not None and ret in REF_KINDS:
                            flow(var(sig, s.target), [ext])
    return PointsTo(env, contents, returns, gl, kinds)


def _compatible(k1: str, k2: str) -> bool:
    return k1 == "any" or k2 == "any" or k1 == k2


@dataclass(frozen=True)
class PuritySummary:
    read_impure: bool = False
    write_impure: bool = False

    @property
    def pure(self) -> bool:
        return not (self.read_impure or self.write_impure)

    def label(self) -> str:
        if self.write_impure:
            return "write-impure"
        if self.read_impure:
            return "read-impure"
        return "pure"

    def join(self, other: "PuritySummary") -> "PuritySummary":
        return PuritySummary(self.read_impure or other.read_impure,
                             self.write_impure or other.write_impure)


def is_static_initializer(sig: str) -> bool:
    return sig.startswith("<clinit>(")


class HeapInfo:
    """Whole-program heap facts shared by every loop query."""

    def __init__(self, p: Program):
        self.program = p
        self.cg = build_call_graph(p)
        self.pt = compute_points_to(p)
        if p.entry is None:
            self.closed: set[str] = set()
        else:
            self.closed = self.cg.reachable_from(p.entry)
        self.purity, self.purity_rounds = compute_purity(p, self.cg, self.pt)

    def is_open(self, sig: str) -> bool:
        return sig not in self.closed

    def _effective(self, sig: str, name: str) -> tuple[set[Site], bool]:
        """Concrete sites plus a flag telling whether the value is unconstrained."""
        sites = set()
        wild = False
        for site in self.pt.of(sig, name):
            root = site[1] if site[0] == "deref" else site
            if root[0] == "param":
                owner = root[1]
                if owner == self.program.entry and site[0] == "param":
                    sites.add(site)
                elif self.is_open(owner):
                    wild = True
                elif site[0] == "deref":
                    wild = True
                continue
            if site[0] in ("external", "deref"):
                wild = True
                continue
            sites.add(site)
        return sites, wild

    def _kind_of(self, sig: str, name: str) -> str:
        f = self.program.functions.get(sig)
        kind = f.kind_of(name) if f is not None else None
        return kind or "any"

    def may_alias(self, sig: str, a: str, b: str) -> bool:
        if a == b:
            return True
        sa, wa = self._effective(sig, a)
        sb, wb = self._effective(sig, b)
        if sa & sb:
            return True
        if wa or wb:
            return _compatible(self._kind_of(sig, a), self._kind_of(sig, b))
        return False

    def loop_calls_ok(self, info: LoopInfo, f: FunctionDef) -> bool:
        return loop_calls_ok(info, self.purity, f, self.program)


def compute_purity(p: Program, cg: CallGraph, pt: PointsTo):
    """Per-function read/write impurity as a monotone fixed point over the call graph.

    Returns the summaries and the list of per-round snapshots.
    """
    global_sites = {s for sites in pt.globals.values() for s in sites}
    external: dict[str, set[Site]] = {}
    for f in p.iter_functions():
        sig = f.signature
        roots: set[Site] = set(global_sites)
        roots.update(s for s in pt.site_kinds if s[0] == "external")
        for name, kind in f.params:
            if kind in REF_KINDS:
                roots.update(pt.of(sig, name))
        closure = set()
        stack = list(roots)
        while stack:
            site = stack.pop()
            if site in closure:
                continue
            closure.add(site)
            stack.extend(pt.contents.get(site, ()))
            if _is_pseudo(site):
                stack.append(("deref", site))
        external[sig] = closure

    local: dict[str, PuritySummary] = {}
    for f in p.iter_functions():
        sig = f.signature
        ext = external[sig]
        r = w = is_static_initializer(sig)
        for s in f.statements:
            if isinstance(s, GlobalLoad):
                r = True
            elif isinstance(s, GlobalStore):
                w = True
            elif isinstance(s, (ArrayLoad, FieldLoad)):
                base = s.base if isinstance(s, ArrayLoad) else s.obj
                if pt.of(sig, base) & ext:
                    r = True
            elif isinstance(s, (ArrayStore, FieldStore)):
                base = s.base if isinstance(s, ArrayStore) else s.obj
                if pt.of(sig, base) & ext:
                    w = True
            elif isinstance(s, Call):
                if not p.resolves(s.callee) or is_static_initializer(s.callee):
                    w = True
        local[sig] = PuritySummary(r, w)

    summary = dict(local)
    rounds = [dict(summary)]
    limit = 2 * max(len(summary), 1) + 1
    while True:
        nxt = {}
        for sig, own in summary.items():
            acc = own
            for callee in cg.callees(sig):
                acc = acc.join(summary[callee])
            nxt[sig] = acc
        if nxt == summary:
            break
        summary = nxt
        rounds.append(dict(summary))
        if len(rounds) > limit:
            raise RuntimeError("purity iteration failed to converge")
    return summary, rounds


def loop_calls_ok(info: LoopInfo, purity: dict[str, PuritySummary], f: FunctionDef,
                  p: Optional[Program] = None) -> bool:
    for idx in info.body:
        s = f.statements[idx]
        if isinstance(s, Call):
            summary = purity.get(s.callee)
            if summary is None or not summary.pure:
                return False
    return True


def first_impure_call(info: LoopInfo, purity: dict[str, PuritySummary], f: FunctionDef):
    for idx in info.body:
        s = f.statements[idx]
        if isinstance(s, Call):
            summary = purity.get(s.callee)
            if summary is None:
                return idx, s.callee, "external"
            if not summary.pure:
                return idx, s.callee, summary.label()
    return None


def purity_report(purity: dict[str, PuritySummary]) -> str:
    return "".join(f"{sig} {purity[sig].label()}\n" for sig in sorted(purity))
