"""Execution engines: sequential, shuffled and parallel runs plus the conflict oracle."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..annotate import Annotation, AnnotationMap, canonical_loops
from ..canon import LoopInfo
from ..ir import LocalRef, Program
from ..scope import UntabledLocal, get_local_vars
from .compiled import Controlled, run_compiled
from .reference import DEFAULT_STEP_LIMIT, Frame, Hooks, Interpreter, interpret_reference
from .values import (
    ArgumentMismatch, ExecError, RunResult, StepLimitExceeded, TArray, TObject, make_result, parse_args_json,
    resolve_entry, to_runtime_args,
)

__all__ = [
    "ArgumentMismatch", "DEFAULT_STEP_LIMIT", "ExecError", "RunResult", "StepLimitExceeded", "TArray", "TObject",
    "Conflict", "conflict_oracle", "controllable_loops", "interpret", "interpret_reference",
    "parse_args_json", "run_annotated", "run_parallel", "run_shuffled",
]


def _controlled_entry(p: Program, info: LoopInfo, mode: str) -> Optional[Controlled]:
    f = p.functions[info.function]
    try:
        ls = get_local_vars(f, info)
    except UntabledLocal:
        return None
    if isinstance(info.ub, LocalRef) and info.ub.name in ls:
        return None
    privates = frozenset(ls.names) | {info.iter}
    return Controlled(info, privates, mode)


def controllable_loops(p: Program) -> dict:
    """(signature, header) -> LoopInfo for every canonical loop."""
    out = {}
    for sig, f in sorted(p.functions.items()):
        _, _, verdicts = canonical_loops(f)
        for h, v in sorted(verdicts.items()):
            if v.canonical:
                out[(sig, h)] = v.info
    return out


def _run(p: Program, entry: Optional[str], args, controlled: dict, step_limit: int,
         workers: int = 1, seed: int = 0) -> RunResult:
    f = resolve_entry(p, entry)
    rargs = to_runtime_args(f, args)
    rt, ret, steps = run_compiled(p, f, rargs, controlled, step_limit, workers, seed)
    return make_result(rt.globals, rargs, ret, steps)


def interpret(p: Program, entry: Optional[str], args,
              step_limit: int = DEFAULT_STEP_LIMIT) -> RunResult:
    """Sequential run."""
    return _run(p, entry, args, {}, step_limit)


def run_shuffled(p: Program, entry: Optional[str], args, loop: LoopInfo, seed: int,
                 step_limit: int = DEFAULT_STEP_LIMIT) -> RunResult:
    """Run with the iterations of ``loop`` executed in a seeded random order."""
    c = _controlled_entry(p, loop, "shuffled")
    if c is None:
        raise ExecError(f"loop at {loop.header} of {loop.function} cannot be reordered")
    return _run(p, entry, args, {(loop.function, loop.header): c}, step_limit, seed=seed)


def run_annotated(p: Program, entry: Optional[str], args, m: AnnotationMap, mode: str = "parallel",
                  workers: int = 1, seed: int = 0,
                  step_limit: int = DEFAULT_STEP_LIMIT) -> RunResult:
    """Run with every loop named in ``m`` executed in ``mode`` (parallel or shuffled)."""
    if workers < 1:
        raise ExecError("workers must be at least 1")
    if mode not in ("parallel", "shuffled", "sequential"):
        raise ExecError(f"unknown mode {mode!r}")
    controlled = {}
    for key, info in controllable_loops(p).items():
        anns = m.get(info.function)
        if not anns:
            continue
        e = p.functions[info.function].entry_for(info.iter)
        if e is None or Annotation(e.start, e.length, e.slot) not in anns:
            continue
        c = _controlled_entry(p, info, mode)
        if c is not None:
            controlled[key] = c
    return _run(p, entry, args, controlled, step_limit, workers=workers, seed=seed)


def run_parallel(p: Program, entry: Optional[str], args, m: AnnotationMap, workers: int,
                 step_limit: int = DEFAULT_STEP_LIMIT) -> RunResult:
    """Run with every annotated loop block-partitioned over ``workers`` threads."""
    return run_annotated(p, entry, args, m, "parallel", workers, step_limit=step_limit)


# ---------------------------------------------------------------------------
# conflict oracle

@dataclass(frozen=True)
class Conflict:
    first: int
    second: int
    location: tuple


class _LoopTagger(Hooks):
    """Tags accesses made while an iteration of the watched loop is running."""

    def __init__(self, info: LoopInfo, privates: frozenset):
        self.info = info
        self.sig = info.function
        self.privates = privates
        self.tag: dict[int, Optional[tuple]] = {}
        self.activations = 0
        self.log: dict[tuple, dict] = {}
        self.order: list[tuple] = []
        self.keepalive: list = []

    def on_stmt(self, fr: Frame, idx: int) -> None:
        if fr.f.signature != self.sig:
            return
        info = self.info
        if idx == info.header:
            if fr.prev == info.init_idx:
                self.activations += 1
                self.tag[fr.uid] = (self.activations, None)
            elif fr.uid in self.tag:
                self.tag[fr.uid] = (self.tag[fr.uid][0], None)
        elif fr.prev == info.header and fr.uid in self.tag:
            act = self.tag[fr.uid][0]
            if idx == info.body_entry and idx != info.exit_target:
                self.tag[fr.uid] = (act, fr.locals[info.iter])
            else:
                del self.tag[fr.uid]

    def on_exit(self, fr: Frame) -> None:
        self.tag.pop(fr.uid, None)

    def _current(self, fr: Optional[Frame]):
        while fr is not None:
            t = self.tag.get(fr.uid)
            if t is not None:
                return t if t[1] is not None else None
            fr = fr.caller
        return None

    def _record(self, t, loc, mode) -> None:
        key = (t[0], loc)
        per = self.log.get(key)
        if per is None:
            per = self.log[key] = {}
            self.order.append(key)
        modes = per.setdefault(t[1], set())
        modes.add(mode)

    def on_access(self, fr: Frame, loc: tuple, mode: str, obj) -> None:
        t = self._current(fr)
        if t is not None:
            if obj is not None:
                self.keepalive.append(obj)
            self._record(t, loc, mode)

    def _scalar(self, fr: Frame, name: str, mode: str) -> None:
        if fr.f.signature != self.sig or name in self.privates:
            return
        t = self.tag.get(fr.uid)
        if t is not None and t[1] is not None:
            self._record(t, ("local", fr.uid, name), mode)

    def on_use(self, fr, name, idx, def_idx, value) -> None:
        self._scalar(fr, name, "read")

    def on_def(self, fr, name, idx, value) -> None:
        self._scalar(fr, name, "write")

    def witness(self) -> Optional[Conflict]:
        for key in self.order:
            per = self.log[key]
            if len(per) < 2:
                continue
            iters = list(per)
            for a_pos, a in enumerate(iters):
                for b in iters[a_pos + 1:]:
                    if "write" in per[a] or "write" in per[b]:
                        return Conflict(a, b, _describe(key[1]))
        return None


def _describe(loc: tuple) -> tuple:
    if loc[0] == "elem":
        return ("elem", loc[2])
    if loc[0] == "field":
        return ("field", loc[2])
    if loc[0] == "local":
        return ("local", loc[2])
    return loc


def conflict_oracle(p: Program, entry: Optional[str], args, loop: LoopInfo,
                    step_limit: int = DEFAULT_STEP_LIMIT) -> tuple[bool, Optional[Conflict]]:
    """Run sequentially and look for a location shared by two iterations with a write."""
    f = p.functions[loop.function]
    try:
        privates = frozenset(get_local_vars(f, loop).names) | {loop.iter}
    except UntabledLocal:
        privates = frozenset({loop.iter})
    hooks = _LoopTagger(loop, privates)
    fe = resolve_entry(p, entry)
    Interpreter(p, hooks, step_limit).run(fe, to_runtime_args(fe, args))
    w = hooks.witness()
    return w is not None, w
