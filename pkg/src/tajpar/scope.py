"""Which variables are private to a canonical loop, decided from the local table."""
from __future__ import annotations

from dataclasses import dataclass

from .canon import LoopInfo
from .ir import FunctionDef, TajError, defined_local, is_temporary, used_locals


class UntabledLocal(TajError):
    def __init__(self, name: str, function: str):
        super().__init__(f"untabled local {name!r} in {function}")
        self.name = name


@dataclass(frozen=True)
class LocalSet:
    loop: LoopInfo
    names: frozenset[str]

    def __contains__(self, name: str) -> bool:
        return name in self.names


def is_local(name: str, info: LoopInfo, f: FunctionDef) -> bool:
    if is_temporary(name):
        return True
    entry = f.entry_for(name)
    if entry is None:
        raise UntabledLocal(name, f.signature)
    lo, hi = info.init_idx, info.upd_idx + 1
    return lo <= entry.start and entry.end <= hi


def get_local_vars(f: FunctionDef, info: LoopInfo) -> LocalSet:
    names: set[str] = set()
    for e in f.locals:
        if is_local(e.name, info, f):
            names.add(e.name)
    for idx in info.body:
        s = f.statements[idx]
        for v in [defined_local(s), *used_locals(s)]:
            if v is not None and is_local(v, info, f):
                names.add(v)
    return LocalSet(info, frozenset(names))
