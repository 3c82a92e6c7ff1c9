"""Command-line driver: analyze, run, oracle, emit-smt, report."""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .annotate import (
    AnnotationMapError, analyze_program, dumps_annotation_map, read_annotation_map,
)
from .execute import (
    ArgumentMismatch, ExecError, conflict_oracle, controllable_loops, interpret, parse_args_json, run_annotated,
)
from .ir import Program, TajError
from .kernels import KERNELS, entry_scalars, evaluate_kernel
from .formula import emit_smtlib
from .solver import SolverConfig
from .syntax import parse_program

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


@dataclass
class CliConfig:
    command: str
    input_paths: list = field(default_factory=list)
    out_path: Optional[str] = None
    map_path: Optional[str] = None
    args_path: Optional[str] = None
    entry: Optional[str] = None
    workers: int = 1
    seed: Optional[int] = None
    enum_bound: int = 4096
    timeout_millis: int = 5000

    @property
    def solver(self) -> SolverConfig:
        return SolverConfig(enum_bound=self.enum_bound, timeout_millis=self.timeout_millis)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tajpar", description="Loop parallelism analyzer for TAJ programs.")
    sub = ap.add_subparsers(dest="command", required=True)

    def solver_flags(p):
        p.add_argument("--enum-bound", type=int, default=4096, help="largest finite box the solver enumerates")
        p.add_argument("--timeout-ms", type=int, default=5000, help="solver budget per loop")

    p = sub.add_parser("analyze", help="analyze loops and write the annotation map")
    p.add_argument("input")
    p.add_argument("-o", "--out", help="annotation map destination (printed when omitted)")
    solver_flags(p)

    p = sub.add_parser("run", help="execute a program, optionally parallelizing annotated loops")
    p.add_argument("input")
    p.add_argument("--args", required=True, help="JSON array of entry arguments")
    p.add_argument("--map", help="annotation map produced by analyze")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, help="run annotated loops in a shuffled order instead of threads")
    p.add_argument("--entry", help="entry signature (defaults to the program's)")

    p = sub.add_parser("oracle", help="report cross-iteration conflicts observed at run time")
    p.add_argument("input")
    p.add_argument("--args", required=True)
    p.add_argument("--entry")

    p = sub.add_parser("emit-smt", help="write one SMT-LIB2 file per analyzed loop")
    p.add_argument("input")
    p.add_argument("-o", "--out", required=True, help="output directory")
    solver_flags(p)

    p = sub.add_parser("report", help="table of loops, identified loops, time and map size")
    p.add_argument("inputs", nargs="*", help=".taj files (defaults to the bundled kernels)")
    solver_flags(p)
    return ap


def _config(ns: argparse.Namespace) -> CliConfig:
    cfg = CliConfig(ns.command)
    cfg.input_paths = list(getattr(ns, "inputs", None) or ([ns.input] if hasattr(ns, "input") else []))
    cfg.out_path = getattr(ns, "out", None)
    cfg.map_path = getattr(ns, "map", None)
    cfg.args_path = getattr(ns, "args", None)
    cfg.entry = getattr(ns, "entry", None)
    cfg.workers = getattr(ns, "workers", 1)
    cfg.seed = getattr(ns, "seed", None)
    cfg.enum_bound = getattr(ns, "enum_bound", 4096)
    cfg.timeout_millis = getattr(ns, "timeout_ms", 5000)
    if cfg.workers < 1:
        raise UsageError("--workers must be at least 1")
    if cfg.enum_bound < 1 or cfg.timeout_millis < 1:
        raise UsageError("--enum-bound and --timeout-ms must be positive")
    return cfg


def _load_program(path: str) -> Program:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        return parse_program(text)
    except TajError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_args(path: str) -> list:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON: {exc}") from None
    try:
        return parse_args_json(data)
    except ExecError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _write(path: str, data: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(data)


def cmd_analyze(cfg: CliConfig, out) -> int:
    p = _load_program(cfg.input_paths[0])
    a = analyze_program(p, cfg.solver)
    for r in a.reports:
        print(r.line(), file=out)
    data = dumps_annotation_map(a.annotation_map)
    if cfg.out_path is None:
        out.write(data)
    else:
        _write(cfg.out_path, data)
    n = sum(len(v) for v in a.annotation_map.values())
    print(f"# {len(a.reports)} loops, {n} annotated, {a.elapsed_ms:.1f} ms", file=out)
    return EXIT_OK


def cmd_run(cfg: CliConfig, out) -> int:
    p = _load_program(cfg.input_paths[0])
    args = _load_args(cfg.args_path)
    m = {}
    if cfg.map_path is not None:
        try:
            m = read_annotation_map(cfg.map_path)
        except OSError as exc:
            raise UsageError(f"cannot read {cfg.map_path}: {exc.strerror or exc}") from None
        except AnnotationMapError as exc:
            raise UsageError(f"{cfg.map_path}: {exc}") from None
    if not m:
        r = interpret(p, cfg.entry, args)
    elif cfg.seed is not None:
        r = run_annotated(p, cfg.entry, args, m, "shuffled", seed=cfg.seed)
    else:
        r = run_annotated(p, cfg.entry, args, m, "parallel", workers=cfg.workers)
    print(f"heapDigest {r.heap_digest}", file=out)
    print(f"stepCount {r.step_count}", file=out)
    print(f"returnValue {json.dumps(r.return_value)}", file=out)
    return EXIT_OK


def cmd_oracle(cfg: CliConfig, out) -> int:
    p = _load_program(cfg.input_paths[0])
    args = _load_args(cfg.args_path)
    for (sig, header), info in controllable_loops(p).items():
        conflict, w = conflict_oracle(p, cfg.entry, args, info)
        if conflict:
            loc = " ".join(str(x) for x in w.location)
            verdict = f"conflict {info.iter}={w.first} {info.iter}={w.second} {loc}"
        else:
            verdict = "no-conflict"
        print(f"{sig}\tloop@{header} iter={info.iter}\t{verdict}", file=out)
    return EXIT_OK


def cmd_emit_smt(cfg: CliConfig, out) -> int:
    p = _load_program(cfg.input_paths[0])
    a = analyze_program(p, cfg.solver)
    os.makedirs(cfg.out_path, exist_ok=True)
    for r in a.reports:
        if r.formula is None:
            continue
        name = f"{p.functions[r.function].name}_loop{r.header}.smt2"
        path = os.path.join(cfg.out_path, name)
        _write(path, emit_smtlib(r.formula))
        print(path, file=out)
    return EXIT_OK


def cmd_report(cfg: CliConfig, out) -> int:
    print("name\tloops\tid\tanalysis_ms\tmap_bytes", file=out)
    if cfg.input_paths:
        for path in cfg.input_paths:
            p = _load_program(path)
            a = analyze_program(p, cfg.solver)
            ident = sum(len(v) for v in a.annotation_map.values())
            size = len(dumps_annotation_map(a.annotation_map).encode("utf-8"))
            print(f"{Path(path).stem}\t{len(a.reports)}\t{ident}\t{a.elapsed_ms:.1f}\t{size}", file=out)
        return EXIT_OK
    for k in KERNELS:
        p = k.program()
        a = analyze_program(p, cfg.solver)
        row = evaluate_kernel(k, a, entry_scalars(p, k.args()))
        print(f"{row.name}\t{row.loops}\t{row.identified}\t{row.analysis_ms:.1f}\t{row.map_bytes}", file=out)
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "run": cmd_run,
    "oracle": cmd_oracle,
    "emit-smt": cmd_emit_smt,
    "report": cmd_report,
}


def main(argv: Optional[list] = None, out=None) -> int:
    out = out or sys.stdout
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = _config(ns)
        return COMMANDS[cfg.command](cfg, out)
    except (UsageError, ArgumentMismatch) as exc:
        print(f"tajpar: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ExecError as exc:
        print(f"tajpar: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"tajpar: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
