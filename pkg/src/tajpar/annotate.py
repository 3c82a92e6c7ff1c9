"""Per-loop verdicts and the on-disk annotation map."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Optional

from .canon import CanonVerdict, LoopInfo, is_canonical
from .cfg import NaturalLoop, build_cfg, find_natural_loops, reaching_defs
from .constraints import UnsupportedDefinition, loop_formula
from .formula import Formula
from .heap import HeapInfo, first_impure_call
from .ir import FunctionDef, Program, TajError
from .scalardep import check_scalars
from .scope import UntabledLocal, get_local_vars
from .solver import SolveResult, SolverConfig, classify, solve

STAGES = ("canon", "scope", "scalar", "purity", "constraints", "solver")


@dataclass(frozen=True, order=True)
class Annotation:
    start: int
    length: int
    slot: int


AnnotationMap = dict  # signature -> list[Annotation]


@dataclass
class LoopReport:
    function: str
    header: int
    verdict: str  # "parallel" | "rejected"
    stage: str
    detail: str
    info: Optional[LoopInfo] = None
    formula: Optional[Formula] = field(default=None, repr=False)
    result: Optional[SolveResult] = field(default=None, repr=False)
    elapsed_ms: float = 0.0

    @property
    def parallel(self) -> bool:
        return self.verdict == "parallel"

    def line(self) -> str:
        it = f" iter={self.info.iter}" if self.info is not None else ""
        return f"{self.function}\tloop@{self.header}{it}\t{self.verdict}\t{self.stage}\t{self.detail}"


@dataclass
class FunctionAnalysis:
    function: FunctionDef
    loops: list[NaturalLoop]
    canon: dict[int, CanonVerdict]
    reports: list[LoopReport]
    annotations: list[Annotation]


@dataclass
class ProgramAnalysis:
    program: Program
    heap: HeapInfo
    functions: dict[str, FunctionAnalysis]
    elapsed_ms: float

    @property
    def reports(self) -> list[LoopReport]:
        return [r for fa in self.functions.values() for r in fa.reports]

    @property
    def annotation_map(self) -> AnnotationMap:
        return {sig: list(fa.annotations) for sig, fa in self.functions.items() if fa.annotations}

    def report_for(self, sig: str, header: int) -> LoopReport:
        for r in self.functions[sig].reports:
            if r.header == header:
                return r
        raise KeyError((sig, header))


def canonical_loops(f: FunctionDef):
    """Cfg, natural loops and canonical verdicts of one function."""
    cfg = build_cfg(f)
    loops = find_natural_loops(cfg)
    verdicts = {l.header: is_canonical(l, f, cfg) for l in loops}
    return cfg, loops, verdicts


def analyze_function(f: FunctionDef, p: Program, heap: HeapInfo,
                     cfg: Optional[SolverConfig] = None) -> FunctionAnalysis:
    cfg = cfg or SolverConfig()
    sig = f.signature
    graph, loops, verdicts = canonical_loops(f)
    defuse = reaching_defs(f, graph)
    infos = [v.info for v in verdicts.values() if v.canonical]
    reports: list[LoopReport] = []
    annotations: list[Annotation] = []

    for loop in loops:
        t0 = time.perf_counter()
        rep = _analyze_loop(loop, verdicts[loop.header], f, heap, infos, defuse, cfg)
        rep.elapsed_ms = (time.perf_counter() - t0) * 1000.0
        reports.append(rep)
        if rep.parallel:
            e = f.entry_for(rep.info.iter)
            annotations.append(Annotation(e.start, e.length, e.slot))
    annotations = sorted(set(annotations))
    return FunctionAnalysis(f, loops, verdicts, reports, annotations)


def _analyze_loop(loop, verdict, f, heap, infos, defuse, cfg) -> LoopReport:
    sig = f.signature

    def reject(stage, detail, info=None, **kw):
        return LoopReport(sig, loop.header, "rejected", stage, detail, info, **kw)

    if not verdict.canonical:
        return reject("canon", verdict.reason)
    info = verdict.info
    try:
        local_set = get_local_vars(f, info)
    except UntabledLocal as exc:
        return reject("scope", str(exc), info)
    if info.iter not in local_set:
        return reject("scope", f"iteration variable {info.iter} outlives the loop", info)
    if f.entry_for(info.iter) is None:
        return reject("scope", f"iteration variable {info.iter} has no table entry", info)

    sv = check_scalars(info, local_set, f)
    if not sv.ok:
        return reject("scalar", f"{sv.cause} at {sv.offending_statement}", info)

    bad_call = first_impure_call(info, heap.purity, f)
    if bad_call is not None:
        idx, callee, why = bad_call
        return reject("purity", f"call to {why} {callee} at {idx}", info)

    try:
        formula = loop_formula(info, f, infos, local_set, defuse,
                               lambda a, b: heap.may_alias(sig, a, b))
    except UnsupportedDefinition as exc:
        return reject("constraints", str(exc), info)
    except TajError as exc:
        return reject("constraints", str(exc), info)

    result = solve(formula, cfg)
    if classify(result):
        return LoopReport(sig, loop.header, "parallel", "solver", "UNSAT", info, formula, result)
    return reject("solver", f"{result.status}: {result.detail}", info, formula=formula, result=result)


def analyze_program(p: Program, cfg: Optional[SolverConfig] = None) -> ProgramAnalysis:
    t0 = time.perf_counter()
    heap = HeapInfo(p)
    functions = {sig: analyze_function(f, p, heap, cfg) for sig, f in p.functions.items()}
    return ProgramAnalysis(p, heap, functions, (time.perf_counter() - t0) * 1000.0)


# ---------------------------------------------------------------------------
# serialization

class AnnotationMapError(ValueError):
    pass


def _check_map(m: AnnotationMap) -> None:
    for sig, anns in m.items():
        if not isinstance(sig, str):
            raise AnnotationMapError("signature keys must be strings")
        seen = set()
        prev = None
        for a in anns:
            for v in (a.start, a.length, a.slot):
                if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                    raise AnnotationMapError(f"{sig}: fields must be non-negative integers")
            if prev is not None and a.start < prev:
                raise AnnotationMapError(f"{sig}: annotations not sorted by start")
            prev = a.start
            if (a.start, a.slot) in seen:
                raise AnnotationMapError(f"{sig}: duplicate (start, slot) = ({a.start}, {a.slot})")
            seen.add((a.start, a.slot))


def dumps_annotation_map(m: AnnotationMap) -> str:
    _check_map(m)
    parts = []
    for sig in sorted(m):
        inner = ",".join(f'{{"start":{a.start},"length":{a.length},"slot":{a.slot}}}' for a in m[sig])
        parts.append(f"{json.dumps(sig, ensure_ascii=False)}:[{inner}]")
    return "{" + ",".join(parts) + "}\n"


def write_annotation_map(m: AnnotationMap, path) -> None:
    data = dumps_annotation_map(m)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(data)


class _Obj(list):
    """Key/value pairs of one JSON object, in file order."""


def _pairs(pairs):
    keys = [k for k, _ in pairs]
    if len(set(keys)) != len(keys):
        raise AnnotationMapError("duplicate key in JSON object")
    return _Obj(pairs)


def loads_annotation_map(text: str) -> AnnotationMap:
    try:
        raw = json.loads(text, object_pairs_hook=_pairs)
    except json.JSONDecodeError as exc:
        raise AnnotationMapError(f"malformed JSON: {exc}") from None
    if not isinstance(raw, _Obj):
        raise AnnotationMapError("top level must be an object")
    out: AnnotationMap = {}
    for sig, anns in raw:
        if not isinstance(anns, list) or isinstance(anns, _Obj):
            raise AnnotationMapError(f"{sig}: value must be an array")
        items = []
        for obj in anns:
            if not isinstance(obj, _Obj) or [k for k, _ in obj] != ["start", "length", "slot"]:
                raise AnnotationMapError(f"{sig}: entries must have exactly start, length, slot")
            vals = [v for _, v in obj]
            for v in vals:
                if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                    raise AnnotationMapError(f"{sig}: fields must be non-negative integers")
            items.append(Annotation(*vals))
        out[sig] = items
    _check_map(out)
    return out


def read_annotation_map(path) -> AnnotationMap:
    with open(path, encoding="utf-8") as fh:
        return loads_annotation_map(fh.read())
