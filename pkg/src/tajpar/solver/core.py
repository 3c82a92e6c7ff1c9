"""Three-valued satisfiability of dependence formulas over the integers."""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Optional

from ..formula import (
    Add, And, ContractViolation, Cmp, Const, Formula, Mul, Or, Sub, Var, _Lit,
    check_well_formed, evaluate, variables,
)
from .omega import Timeout, omega

SAT, UNSAT, UNKNOWN = "SAT", "UNSAT", "UNKNOWN"
DNF_LIMIT = 10_000
WINDOW_LIMIT = 512


@dataclass(frozen=True)
class SolverConfig:
    enum_bound: int = 4096
    timeout_millis: int = 5000
    backend: str = "internal"

    def __post_init__(self):
        if self.enum_bound < 1:
            raise ValueError("enum_bound must be at least 1")
        if self.backend not in ("internal", "emit-only"):
            raise ValueError(f"unknown backend {self.backend!r}")


@dataclass(frozen=True)
class SolveResult:
    status: str
    model: Optional[dict] = None
    detail: str = ""
    disjuncts: int = field(default=0, compare=False)


def classify(result: SolveResult) -> bool:
    """True iff the loop may run in parallel (no dependence can exist)."""
    return result.status == UNSAT


# ---------------------------------------------------------------------------
# polynomials: {monomial (sorted tuple of symbols): coefficient}

def _padd(a: dict, b: dict, sign: int = 1) -> dict:
    out = dict(a)
    for m, c in b.items():
        v = out.get(m, 0) + sign * c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _pmul(a: dict, b: dict) -> dict:
    out: dict = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = tuple(sorted(m1 + m2))
            v = out.get(m, 0) + c1 * c2
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


def _poly(t) -> dict:
    if isinstance(t, Var):
        return {(t.symbol,): 1}
    if isinstance(t, Const):
        return {(): t.value} if t.value else {}
    if isinstance(t, Add):
        return _padd(_poly(t.lhs), _poly(t.rhs))
    if isinstance(t, Sub):
        return _padd(_poly(t.lhs), _poly(t.rhs), -1)
    if isinstance(t, Mul):
        return _pmul(_poly(t.lhs), _poly(t.rhs))
    raise ContractViolation(f"not a term: {t!r}")


# An atom is (poly, rel) with rel "eq" (poly == 0) or "geq" (poly >= 0).

def _atoms_of(c: Cmp) -> list[list[tuple]]:
    """The comparison as a small DNF over atoms."""
    d = _padd(_poly(c.lhs), _poly(c.rhs), -1)
    one = {(): 1}
    if c.op == "==":
        return [[(d, "eq")]]
    if c.op == ">=":
        return [[(d, "geq")]]
    if c.op == ">":
        return [[(_padd(d, one, -1), "geq")]]
    neg = {m: -v for m, v in d.items()}
    if c.op == "<=":
        return [[(neg, "geq")]]
    if c.op == "<":
        return [[(_padd(neg, one, -1), "geq")]]
    return [[(_padd(d, one, -1), "geq")], [(_padd(neg, one, -1), "geq")]]


def dnf_size(f) -> int:
    if isinstance(f, _Lit):
        return 1 if f.value else 0
    if isinstance(f, Cmp):
        return 2 if f.op == "!=" else 1
    if isinstance(f, And):
        n = 1
        for i in f.items:
            n *= dnf_size(i)
            if n > DNF_LIMIT:
                return n
        return n
    if isinstance(f, Or):
        return sum(dnf_size(i) for i in f.items)
    raise ContractViolation(f"not a formula: {f!r}")


def _dnf(f) -> list[list[tuple]]:
    if isinstance(f, _Lit):
        return [[]] if f.value else []
    if isinstance(f, Cmp):
        return _atoms_of(f)
    if isinstance(f, Or):
        out = []
        for i in f.items:
            out.extend(_dnf(i))
        return out
    acc: list[list[tuple]] = [[]]
    for i in f.items:
        part = _dnf(i)
        acc = [a + b for a in acc for b in part]
        if not acc:
            return []
    return acc


# ---------------------------------------------------------------------------
# deciding one conjunction of atoms

def _is_linear(atoms) -> bool:
    return all(len(m) <= 1 for p, _ in atoms for m in p)


def _to_lin(p: dict) -> tuple[dict, int]:
    coefs = {}
    const = 0
    for m, c in p.items():
        if not m:
            const += c
        else:
            coefs[m[0]] = coefs.get(m[0], 0) + c
    return coefs, const


def _decide_linear(atoms, deadline) -> Optional[dict]:
    eqs, geqs = [], []
    for p, rel in atoms:
        (eqs if rel == "eq" else geqs).append(_to_lin(p))
    return omega(eqs, geqs, deadline)


def _eval_poly(p: dict, env: dict) -> int:
    total = 0
    for m, c in p.items():
        term = c
        for v in m:
            term *= env[v]
        total += term
    return total


def _atoms_hold(atoms, env: dict) -> bool:
    for p, rel in atoms:
        v = _eval_poly(p, env)
        if (rel == "eq" and v != 0) or (rel == "geq" and v < 0):
            return False
    return True


def _fix(p: dict, values: dict) -> dict:
    out: dict = {}
    for m, c in p.items():
        keep = []
        for v in m:
            if v in values:
                c *= values[v]
            else:
                keep.append(v)
        if c:
            k = tuple(keep)
            nv = out.get(k, 0) + c
            if nv:
                out[k] = nv
            else:
                out.pop(k, None)
    return out


def _mono_interval(m, box):
    lo, hi = 1, 1
    for v in m:
        vlo, vhi = box.get(v, (None, None))
        cands = []
        for a in (lo, hi):
            for b in (vlo, vhi):
                if a is None or b is None:
                    cands = None
                    break
                cands.append(a * b)
            if cands is None:
                break
        if cands is None:
            return None, None
        lo, hi = min(cands), max(cands)
    return lo, hi


def derive_intervals(atoms, names, rounds: int = 64):
    """Sound integer intervals by bound propagation; None means infeasible."""
    box = {v: (None, None) for v in names}
    rows = []
    for p, rel in atoms:
        rows.append(p)
        if rel == "eq":
            rows.append({m: -c for m, c in p.items()})
    for _ in range(rounds):
        changed = False
        for p in rows:
            const = p.get((), 0)
            terms = [(m, c) for m, c in p.items() if m]
            sups = []
            for m, c in terms:
                lo, hi = _mono_interval(m, box)
                s = None
                if c > 0 and hi is not None:
                    s = c * hi
                elif c < 0 and lo is not None:
                    s = c * lo
                sups.append(s)
            unknown = [k for k, s in enumerate(sups) if s is None]
            if len(unknown) > 1:
                continue
            total = const + sum(s for s in sups if s is not None)
            if not terms:
                if const < 0:
                    return None
                continue
            if not unknown and total < 0:
                return None
            for k, (m, c) in enumerate(terms):
                if len(m) != 1:
                    continue
                if unknown and unknown[0] != k:
                    continue
                rest = total - (sups[k] if sups[k] is not None else 0)
                v = m[0]
                lo, hi = box[v]
                # c*v >= -rest
                if c > 0:
                    nb = -((rest) // c)
                    if lo is None or nb > lo:
                        lo = nb
                        changed = True
                else:
                    nb = rest // (-c)
                    if hi is None or nb < hi:
                        hi = nb
                        changed = True
                if lo is not None and hi is not None and lo > hi:
                    return None
                box[v] = (lo, hi)
        if not changed:
            break
    return box


def _covers(nonlinear_monos, candidates):
    for m in nonlinear_monos:
        if sum(1 for v in m if v not in candidates) > 1:
            return False
    return True


def _size(iv) -> float:
    lo, hi = iv
    if lo is None or hi is None:
        return float("inf")
    return hi - lo + 1


def _choose_cover(nonlinear_monos, box):
    pool = sorted({v for m in nonlinear_monos for v in m})
    if len(pool) > 12:
        return pool
    best = None
    for r in range(1, len(pool) + 1):
        for combo in itertools.combinations(pool, r):
            if not _covers(nonlinear_monos, set(combo)):
                continue
            cost = 1.0
            for v in combo:
                cost *= _size(box[v])
            key = (cost, r, combo)
            if best is None or key < best:
                best = key
    return list(best[2])


def _window(iv, radius: int):
    lo, hi = iv
    vals = [0]
    for k in range(1, radius + 1):
        vals.extend((k, -k))
    out = [v for v in vals if (lo is None or v >= lo) and (hi is None or v <= hi)]
    if not out:
        anchor = lo if lo is not None else hi
        out = [anchor + s * k for k in range(radius + 1) for s in ((1,) if lo is not None else (-1,))]
    return out


def _decide_nonlinear(atoms, cfg: SolverConfig, deadline):
    """Returns (status, model, detail)."""
    names = sorted({v for p, _ in atoms for m in p for v in m})
    # (a) linear abstraction of the nonlinear monomials
    monos = sorted({m for p, _ in atoms for m in p if len(m) > 1})
    abstract = {m: f"#m{k}" for k, m in enumerate(monos)}
    lin_atoms = []
    for p, rel in atoms:
        q = {}
        for m, c in p.items():
            key = (abstract[m],) if m in abstract else m
            q[key] = q.get(key, 0) + c
        lin_atoms.append((q, rel))
    model = _decide_linear(lin_atoms, deadline)
    if model is None:
        return UNSAT, None, "linear abstraction"
    env = {v: model.get(v, 0) for v in names}
    if _atoms_hold(atoms, env):
        return SAT, env, "linear abstraction"

    box = derive_intervals(atoms, names)
    if box is None:
        return UNSAT, None, "bound propagation"
    cover = _choose_cover(monos, box)
    sizes = [_size(box[v]) for v in cover]
    total = 1.0
    for s in sizes:
        total *= s
    if total <= cfg.enum_bound:
        domains = [range(box[v][0], box[v][1] + 1) for v in cover]
        exhaustive = True
    else:
        budget = min(cfg.enum_bound, WINDOW_LIMIT)
        radius = 0
        while True:
            nxt = radius + 1
            if (2 * nxt + 1) ** len(cover) > budget:
                break
            radius = nxt
        domains = [_window(box[v], radius) for v in cover]
        exhaustive = False
    for values in itertools.product(*domains):
        if deadline is not None and time.monotonic() > deadline:
            raise Timeout()
        fixed = dict(zip(cover, values))
        sub = [(_fix(p, fixed), rel) for p, rel in atoms]
        if not _is_linear(sub):
            continue
        m = _decide_linear(sub, deadline)
        if m is not None:
            env = {v: m.get(v, 0) for v in names}
            env.update(fixed)
            if _atoms_hold(atoms, env):
                return SAT, env, "enumeration" if exhaustive else "window search"
    if exhaustive:
        return UNSAT, None, "enumeration"
    return UNKNOWN, None, "nonlinear with unbounded domains"


# ---------------------------------------------------------------------------

def solve(f: Formula, cfg: Optional[SolverConfig] = None) -> SolveResult:
    cfg = cfg or SolverConfig()
    check_well_formed(f)
    if cfg.backend == "emit-only":
        return SolveResult(UNKNOWN, None, "emit-only backend")
    vs = variables(f)
    by_symbol: dict[str, Var] = {}
    for v in vs:
        if by_symbol.setdefault(v.symbol, v) != v:
            raise ContractViolation(f"symbol clash on {v.symbol!r}")
    size = dnf_size(f)
    if size > DNF_LIMIT:
        return SolveResult(UNKNOWN, None, f"more than {DNF_LIMIT} disjuncts", size)
    deadline = time.monotonic() + cfg.timeout_millis / 1000.0
    undecided = None
    try:
        for atoms in _dnf(f):
            if _is_linear(atoms):
                m = _decide_linear(atoms, deadline)
                status, detail = (SAT, "linear") if m is not None else (UNSAT, "linear")
            else:
                status, m, detail = _decide_nonlinear(atoms, cfg, deadline)
            if status == SAT:
                model = {v: int(m.get(sym, 0)) for sym, v in by_symbol.items()}
                if evaluate(f, model) is not True:
                    undecided = "model failed verification"
                    continue
                return SolveResult(SAT, model, detail, size)
            if status == UNKNOWN:
                undecided = detail
    except Timeout:
        return SolveResult(UNKNOWN, None, "timeout", size)
    if undecided is not None:
        return SolveResult(UNKNOWN, None, undecided, size)
    return SolveResult(UNSAT, None, "all disjuncts infeasible", size)
