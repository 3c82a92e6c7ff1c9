"""Satisfiability of dependence formulas and SMT-LIB2 export."""
from ..formula import emit_smtlib
from .core import (
    SAT, UNKNOWN, UNSAT, SolveResult, SolverConfig, classify, derive_intervals, dnf_size,
    solve,
)
from .omega import omega

__all__ = [
    "SAT", "UNSAT", "UNKNOWN", "SolveResult", "SolverConfig", "classify", "solve",
    "emit_smtlib", "omega", "dnf_size", "derive_intervals",
]
