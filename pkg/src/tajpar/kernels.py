"""Bundled benchmark kernels: hand-curated parallel loops and input factories."""
from __future__ import annotations

import random
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Optional

from .annotate import LoopReport, ProgramAnalysis, dumps_annotation_map
from .formula import substitute, variables
from .ir import Program
from .solver import UNSAT, SolverConfig, solve
from .syntax import parse_program


def corpus_path(filename: str):
    return resources.files("tajpar") / "corpus" / filename


def load_corpus(filename: str) -> Program:
    return parse_program(corpus_path(filename).read_text(encoding="utf-8"))


def _reals(rng: random.Random, n: int) -> list[float]:
    return [float(rng.randint(-8, 8)) for _ in range(n)]


def _conv2d(rng, n=5):
    pad = n + 2
    return [_reals(rng, pad * pad), [0.0] * (n * n), _reals(rng, 9), n, pad]


def _euler(rng, size=6):
    base = sorted(rng.sample(range(1, 12), size))
    return [[b ** 5 for b in base], [0] * (size * size), size]


def _fdtd(rng, nx=5, ny=4):
    return [_reals(rng, nx * ny), _reals(rng, nx * ny), _reals(rng, nx * ny), nx, ny]


def _hilbert(rng, n=6):
    return [[0] * (n * n), n, n]


def _jacobi1d(rng, n=12):
    return [_reals(rng, n), [0.0] * n, n]


def _mandelbrot(rng, size=6):
    return [[0] * (size * size), size, 4.0 / size]


def _saxpy(rng, n=10):
    return [float(rng.randint(-4, 4)), _reals(rng, n), _reals(rng, n), n]


def _montecarlo(rng, n=8):
    return [[0.0] * n, n]


@dataclass(frozen=True)
class Kernel:
    name: str
    filename: str
    curated: frozenset  # iteration variable names of manually parallelized loops
    make_args: Callable[[random.Random], list]
    runnable: bool = True

    def program(self) -> Program:
        return load_corpus(self.filename)

    def args(self, seed: int = 0) -> list:
        return self.make_args(random.Random(seed))


KERNELS: tuple[Kernel, ...] = (
    Kernel("Conv2D", "conv2d.taj", frozenset({"i", "j"}), _conv2d),
    Kernel("Euler", "euler.taj", frozenset({"i", "j"}), _euler),
    Kernel("FDTD", "fdtd.taj", frozenset({"i", "j", "p", "q", "c", "r"}), _fdtd),
    Kernel("FlatMap", "flatmap.taj", frozenset({"i"}), lambda rng: [_reals(rng, 64), [0.0] * 8]),
    Kernel("GSeidel2D", "gseidel2d.taj", frozenset({"i", "j"}), lambda rng: [_reals(rng, 100)]),
    Kernel("Hilbert", "hilbert.taj", frozenset({"i", "j"}), _hilbert),
    Kernel("Jacobi1D", "jacobi1d.taj", frozenset({"i", "k"}), _jacobi1d),
    Kernel("Jacobi2D", "jacobi2d.taj", frozenset({"i", "j", "p", "q"}),
           lambda rng: [_reals(rng, 100), [0.0] * 100]),
    Kernel("Mandelbrot", "mandelbrot.taj", frozenset({"i", "j"}), _mandelbrot),
    Kernel("MatMul", "matmul2d.taj", frozenset({"i", "j"}),
           lambda rng: [_reals(rng, 256), _reals(rng, 256), [0.0] * 256]),
    Kernel("Transpose", "transpose.taj", frozenset({"i", "j"}),
           lambda rng: [_reals(rng, 256), [0.0] * 256]),
    Kernel("Montecarlo", "montecarlo.taj", frozenset({"i"}), _montecarlo, runnable=False),
    Kernel("Saxpy", "saxpy.taj", frozenset({"i"}), _saxpy),
    Kernel("SGEMM", "sgemm.taj", frozenset({"i", "j"}),
           lambda rng: [_reals(rng, 64), _reals(rng, 64), _reals(rng, 64), 2.0, -1.0]),
)


def kernel(name: str) -> Kernel:
    for k in KERNELS:
        if k.name == name:
            return k
    raise KeyError(name)


def matmul256_args(seed: int = 0) -> list:
    rng = random.Random(seed)
    n = 256 * 256
    return [_reals(rng, n), _reals(rng, n), [0.0] * n]


# ---------------------------------------------------------------------------
# miss attribution

MISS_CAUSES = ("library", "unknown-upper-bound", "dependence", "other")


def entry_scalars(p: Program, args: list) -> dict:
    f = p.functions[p.entry]
    return {name: v for (name, kind), v in zip(f.params, args) if kind == "int"}


def classify_miss(report: LoopReport, concrete: dict,
                  cfg: Optional[SolverConfig] = None) -> str:
    """Why a curated loop was not identified.

    Solver rejections are re-solved with the untagged (loop-invariant) entry
    parameters fixed to concrete sizes; if that is UNSAT the miss is blamed on
    the unknown upper bound.
    """
    if report.stage == "purity":
        return "library"
    if report.stage != "solver" or report.formula is None:
        return "other"
    values = {v: concrete[v.name] for v in _untagged(report.formula) if v.name in concrete}
    if values:
        r = solve(substitute(report.formula, values), cfg or SolverConfig())
        if r.status == UNSAT:
            return "unknown-upper-bound"
    return "dependence"


def _untagged(f) -> set:
    return {v for v in variables(f) if v.tag is None}


@dataclass
class KernelRow:
    name: str
    loops: int
    curated: int
    identified: int
    hits: int
    false_marks: list
    misses: dict  # iter -> cause
    analysis_ms: float
    map_bytes: int


def evaluate_kernel(k: Kernel, analysis: ProgramAnalysis, concrete: dict) -> KernelRow:
    reps = analysis.reports
    marked = {r.info.iter for r in reps if r.parallel}
    misses = {}
    for r in reps:
        if r.info is not None and r.info.iter in k.curated and not r.parallel:
            misses[r.info.iter] = classify_miss(r, concrete)
    data = dumps_annotation_map(analysis.annotation_map)
    return KernelRow(
        name=k.name,
        loops=len(reps),
        curated=len(k.curated),
        identified=len(marked),
        hits=len(marked & k.curated),
        false_marks=sorted(marked - k.curated),
        misses=misses,
        analysis_ms=analysis.elapsed_ms,
        map_bytes=len(data.encode("utf-8")),
    )
