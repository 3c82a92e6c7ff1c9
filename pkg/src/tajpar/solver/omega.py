"""Integer feasibility of linear constraint systems (Omega test).

Constraints are pairs ``(coefs, const)`` with ``coefs`` a mapping from variable
name to integer coefficient. An equality means ``sum + const == 0`` and an
inequality means ``sum + const >= 0``. ``omega`` returns an integer model for
every variable that occurs, or None when the system has no integer solution.
"""
from __future__ import annotations

import itertools
import time
from math import gcd
from typing import Optional

Lin = tuple[dict, int]


class Timeout(Exception):
    pass


class _State:
    def __init__(self, deadline: Optional[float]):
        self.deadline = deadline
        self.fresh = itertools.count()
        self.ticks = 0

    def tick(self) -> None:
        self.ticks += 1
        if self.deadline is not None and self.ticks % 64 == 0 and time.monotonic() > self.deadline:
            raise Timeout()


def _floor_div(a: int, b: int) -> int:
    return a // b


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _mod_hat(a: int, m: int) -> int:
    return a - m * ((2 * a + m) // (2 * m))


def _gcd_all(values) -> int:
    g = 0
    for v in values:
        g = gcd(g, v)
    return g


def _substitute(con: Lin, var: str, expr: Lin) -> Lin:
    coefs, const = con
    a = coefs.get(var, 0)
    if a == 0:
        return con
    out = dict(coefs)
    del out[var]
    ecoefs, econst = expr
    for v, c in ecoefs.items():
        nv = out.get(v, 0) + a * c
        if nv:
            out[v] = nv
        else:
            out.pop(v, None)
    return out, const + a * econst


def _eval(expr: Lin, model: dict) -> int:
    coefs, const = expr
    return const + sum(c * model.get(v, 0) for v, c in coefs.items())


def omega(eqs: list[Lin], geqs: list[Lin], deadline: Optional[float] = None) -> Optional[dict]:
    st = _State(deadline)
    model = _solve(list(eqs), list(geqs), st)
    if model is None:
        return None
    names = set()
    for coefs, _ in itertools.chain(eqs, geqs):
        names.update(coefs)
    return {v: model.get(v, 0) for v in names}


def _normalize(eqs, geqs):
    """Returns (eqs, geqs) normalized, or None if a contradiction shows up."""
    neqs = []
    for coefs, const in eqs:
        coefs = {v: c for v, c in coefs.items() if c}
        if not coefs:
            if const != 0:
                return None
            continue
        g = _gcd_all(coefs.values())
        if const % g:
            return None
        neqs.append(({v: c // g for v, c in coefs.items()}, const // g))
    best: dict = {}
    for coefs, const in geqs:
        coefs = {v: c for v, c in coefs.items() if c}
        if not coefs:
            if const < 0:
                return None
            continue
        g = _gcd_all(coefs.values())
        coefs = {v: c // g for v, c in coefs.items()}
        const = _floor_div(const, g)
        key = tuple(sorted(coefs.items()))
        prev = best.get(key)
        if prev is None or const < prev[1]:
            best[key] = (coefs, const)
    for key, (coefs, const) in list(best.items()):
        neg = tuple(sorted((v, -c) for v, c in coefs.items()))
        other = best.get(neg)
        if other is None:
            continue
        total = const + other[1]
        if total < 0:
            return None
        if total == 0 and key < neg:
            neqs.append((coefs, const))
    ngeqs = [best[k] for k in sorted(best)]
    return neqs, ngeqs


def _solve(eqs, geqs, st: _State) -> Optional[dict]:
    st.tick()
    norm = _normalize(eqs, geqs)
    if norm is None:
        return None
    eqs, geqs = norm
    if eqs:
        return _eliminate_equality(eqs, geqs, st)
    return _fourier_motzkin(geqs, st)


def _eliminate_equality(eqs, geqs, st: _State) -> Optional[dict]:
    # prefer the equality with the smallest coefficient, break ties by name
    best = None
    for i, (coefs, _) in enumerate(eqs):
        for v in sorted(coefs):
            key = (abs(coefs[v]), v, i)
            if best is None or key < best:
                best = key
    _, var, i = best
    coefs, const = eqs[i]
    a = coefs[var]
    if abs(a) == 1:
        expr = ({v: -c * a for v, c in coefs.items() if v != var}, -const * a)
        rest_eqs = [e for j, e in enumerate(eqs) if j != i]
    else:
        m = abs(a) + 1
        sign = 1 if a > 0 else -1
        sigma = f"#sigma{next(st.fresh)}"
        ecoefs = {sigma: -sign * m}
        for v, c in coefs.items():
            if v != var:
                h = _mod_hat(c, m)
                if h:
                    ecoefs[v] = sign * h
        expr = (ecoefs, sign * _mod_hat(const, m))
        rest_eqs = list(eqs)
    sub_eqs = [_substitute(e, var, expr) for e in rest_eqs]
    sub_geqs = [_substitute(g, var, expr) for g in geqs]
    model = _solve(sub_eqs, sub_geqs, st)
    if model is None:
        return None
    model[var] = _eval(expr, model)
    return model


def _bounds_for(var: str, geqs, model: dict) -> tuple[Optional[int], Optional[int]]:
    lo = hi = None
    for coefs, const in geqs:
        a = coefs.get(var, 0)
        if not a:
            continue
        rest = const + sum(c * model.get(v, 0) for v, c in coefs.items() if v != var)
        if a > 0:
            b = _ceil_div(-rest, a)
            lo = b if lo is None else max(lo, b)
        else:
            b = _floor_div(rest, -a)
            hi = b if hi is None else min(hi, b)
    return lo, hi


def _pick(lo: Optional[int], hi: Optional[int]) -> int:
    if lo is None and hi is None:
        return 0
    if lo is None:
        return min(hi, 0)
    if hi is None:
        return max(lo, 0)
    if lo > hi:
        raise AssertionError("empty integer range during back-substitution")
    return min(max(0, lo), hi)


def _fourier_motzkin(geqs, st: _State) -> Optional[dict]:
    if not geqs:
        return {}
    names = sorted({v for coefs, _ in geqs for v in coefs})
    lowers: dict[str, list] = {v: [] for v in names}
    uppers: dict[str, list] = {v: [] for v in names}
    for con in geqs:
        for v, c in con[0].items():
            (lowers if c > 0 else uppers)[v].append(con)

    # a variable bounded on one side only can always be satisfied
    for v in names:
        if not lowers[v] or not uppers[v]:
            rest = [g for g in geqs if v not in g[0]]
            model = _solve([], rest, st)
            if model is None:
                return None
            model[v] = _pick(*_bounds_for(v, geqs, model))
            return model

    def exact(v):
        return all(c[0][v] == 1 for c in lowers[v]) or all(c[0][v] == -1 for c in uppers[v])

    choice = min(names, key=lambda v: (not exact(v), len(lowers[v]) * len(uppers[v]), v))
    v = choice
    others = [g for g in geqs if v not in g[0]]

    def combine(lo, up, slack):
        a = lo[0][v]
        b = -up[0][v]
        out = {}
        for w, c in lo[0].items():
            if w != v:
                out[w] = out.get(w, 0) + b * c
        for w, c in up[0].items():
            if w != v:
                out[w] = out.get(w, 0) + a * c
        return out, b * lo[1] + a * up[1] - slack

    real = others + [combine(lo, up, 0) for lo in lowers[v] for up in uppers[v]]
    if exact(v):
        model = _solve([], real, st)
        if model is None:
            return None
        model[v] = _pick(*_bounds_for(v, geqs, model))
        return model

    if _solve([], real, st) is None:
        return None
    dark = others + [combine(lo, up, (lo[0][v] - 1) * (-up[0][v] - 1))
                     for lo in lowers[v] for up in uppers[v]]
    model = _solve([], dark, st)
    if model is not None:
        model[v] = _pick(*_bounds_for(v, geqs, model))
        return model

    # splinters: an integer point missed by the dark shadow lies close to a lower bound
    a_max = max(-up[0][v] for up in uppers[v])
    for lo in lowers[v]:
        a = lo[0][v]
        top = (a_max * a - a_max - a) // a_max
        for i in range(top + 1):
            st.tick()
            eq = (dict(lo[0]), lo[1] - i)
            model = _solve([eq], geqs, st)
            if model is not None:
                return model
    return None
