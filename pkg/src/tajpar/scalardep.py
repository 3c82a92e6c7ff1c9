"""Rejects loops whose body writes shared scalars, fields or globals."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .canon import LoopInfo
from .ir import FieldStore, FunctionDef, GlobalStore, defined_local
from .scope import LocalSet


@dataclass(frozen=True)
class ScalarVerdict:
    ok: bool
    offending_statement: Optional[int] = None
    cause: Optional[str] = None


def check_scalars(info: LoopInfo, local_set: LocalSet, f: FunctionDef) -> ScalarVerdict:
    for idx in info.body:
        if idx == info.upd_idx:
            continue
        s = f.statements[idx]
        if isinstance(s, FieldStore):
            return ScalarVerdict(False, idx, "field-write")
        if isinstance(s, GlobalStore):
            return ScalarVerdict(False, idx, "global-write")
        target = defined_local(s)
        if target is not None and target not in local_set:
            return ScalarVerdict(False, idx, "nonlocal-scalar-write")
    return ScalarVerdict(True)
