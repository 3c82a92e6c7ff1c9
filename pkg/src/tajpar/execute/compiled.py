"""Fast engine: each TAJ function is translated to Python source and compiled.

Control flow becomes a block-dispatch loop. Innermost loops whose body is one
basic block become a native ``while`` loop. Selected canonical loops are
"controlled": their body is emitted as a separate function that runs one
iteration, so the runtime can reorder iterations or spread them over threads.
"""
from __future__ import annotations

import random
import threading
from dataclasses import dataclass

from ..canon import LoopInfo
from ..cfg import build_cfg, find_natural_loops
from ..ir import (
    ArrayLoad, ArrayStore, Assign, BinOp, Call, FieldLoad, FieldStore, FunctionDef,
    GlobalLoad, GlobalStore, Goto, Identity, IfGoto, IntConst, New, Program, Return,
)
from .values import (
    INT_MAX, INT_MIN, ExecError, StepLimitExceeded, TArray, TObject, initial_globals,
    wrap,
)

_PY_CMP = {"<": "<", "<=": "<=", ">": ">", ">=": ">=", "==": "==", "!=": "!="}
_NEG = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}


def _fix(x):
    return wrap(x) if type(x) is int else x


def _oob(where, i):
    raise ExecError(f"{where}: index {i!r} out of bounds")


def _external(sig):
    raise ExecError(f"call to external function {sig}")


@dataclass(frozen=True)
class Controlled:
    info: LoopInfo
    privates: frozenset
    mode: str  # "sequential" | "shuffled" | "parallel"


class _Blocks:
    def __init__(self, f: FunctionDef):
        n = len(f.statements)
        leaders = {0}
        for i, s in enumerate(f.statements):
            if isinstance(s, (IfGoto, Goto)):
                leaders.add(s.target_index)
            if isinstance(s, (IfGoto, Goto, Return)) and i + 1 < n:
                leaders.add(i + 1)
        self.starts = sorted(leaders)
        self.block_of = {}
        self.ranges = {}
        for k, st in enumerate(self.starts):
            end = self.starts[k + 1] if k + 1 < len(self.starts) else n
            self.ranges[st] = (st, end)
            for i in range(st, end):
                self.block_of[i] = st


class _FnGen:
    def __init__(self, cg: "_ProgramGen", f: FunctionDef):
        self.cg = cg
        self.f = f
        self.sig = f.signature
        names = set(p for p, _ in f.params) | set(e.name for e in f.locals) | f.referenced_locals()
        self.names = sorted(names)
        self.var = {n: f"L{k}" for k, n in enumerate(self.names)}
        self.blocks = _Blocks(f)
        cfg = build_cfg(f)
        self.loops = find_natural_loops(cfg)
        depth = {}
        for l in self.loops:
            for i in l.body:
                depth[i] = depth.get(i, 0) + 1
        self.depth = depth
        self.controlled = {c.info.header: c for (s, _), c in cg.controlled.items() if s == self.sig}
        self.init_redirect = {c.info.init_idx: h for h, c in self.controlled.items()}
        self.fast_loops = self._fast_loops()

    # -- helpers ------------------------------------------------------------
    def op(self, o) -> str:
        if isinstance(o, IntConst):
            return repr(o.value)
        return self.var[o.name]

    def state_tuple(self) -> str:
        if not self.names:
            return "()"
        return "(" + ", ".join(self.var[n] for n in self.names) + ",)"

    def _fast_loops(self) -> dict:
        """Headers of innermost loops with a single straight body block."""
        out = {}
        stmts = self.f.statements
        for l in self.loops:
            h = l.header
            if not isinstance(stmts[h], IfGoto) or self.blocks.ranges[h] != (h, h + 1):
                continue
            others = [b for b in {self.blocks.block_of[i] for i in l.body} if b != h]
            if len(others) != 1:
                continue
            b = others[0]
            st, end = self.blocks.ranges[b]
            if set(range(st, end)) | {h} != set(l.body):
                continue
            last = stmts[end - 1]
            if not (isinstance(last, Goto) and last.target_index == h):
                continue
            hs = stmts[h]
            succ = {hs.target_index, h + 1}
            if b not in succ or len(succ) != 2:
                continue
            if any(isinstance(stmts[i], (IfGoto, Return)) for i in range(st, end)):
                continue
            out[h] = (b, (succ - {b}).pop())
        return out

    # -- statements ---------------------------------------------------------
    def stmt(self, idx: int, s, out: list, ind: str) -> None:
        v = self.var
        where = f"{self.sig} statement {idx}"
        if isinstance(s, Identity):
            return
        if isinstance(s, Assign):
            e = s.expr
            t = v[s.target]
            if isinstance(e, BinOp):
                out.append(f"{ind}{t} = {self.op(e.lhs)} {e.op} {self.op(e.rhs)}")
                out.append(f"{ind}if not ({INT_MIN} <= {t} <= {INT_MAX}): {t} = _fix({t})")
            else:
                out.append(f"{ind}{t} = {self.op(e)}")
            return
        if isinstance(s, (ArrayLoad, ArrayStore)):
            i = self.op(s.index)
            if isinstance(s.index, IntConst):
                if s.index.value < 0:
                    out.append(f"{ind}_oob({where!r}, {i})")
            else:
                out.append(f"{ind}if {i} < 0: _oob({where!r}, {i})")
            if isinstance(s, ArrayLoad):
                out.append(f"{ind}{v[s.target]} = {v[s.base]}[{i}]")
            else:
                out.append(f"{ind}{v[s.base]}[{i}] = {self.op(s.value)}")
            return
        if isinstance(s, FieldLoad):
            out.append(f"{ind}{v[s.target]} = {v[s.obj]}.fields[{s.field!r}]")
            return
        if isinstance(s, FieldStore):
            out.append(f"{ind}{v[s.obj]}.fields[{s.field!r}] = {self.op(s.value)}")
            return
        if isinstance(s, GlobalLoad):
            out.append(f"{ind}{v[s.target]} = G[{s.name!r}]")
            return
        if isinstance(s, GlobalStore):
            out.append(f"{ind}G[{s.name!r}] = {self.op(s.value)}")
            return
        if isinstance(s, New):
            site = ("alloc", self.sig, idx)
            if s.size is None:
                out.append(f"{ind}{v[s.target]} = TObject({site!r})")
            else:
                out.append(f"{ind}{v[s.target]} = TArray.zeros({s.kind!r}, {self.op(s.size)}, {site!r})")
            return
        if isinstance(s, Call):
            args = ", ".join(self.op(a) for a in s.args)
            fn = self.cg.fn_name.get(s.callee)
            if fn is None:
                out.append(f"{ind}_external({s.callee!r})")
                return
            tgt = v[s.target] if s.target is not None else "_r"
            out.append(f"{ind}{tgt}, _s = {fn}(rt{', ' if args else ''}{args})")
            out.append(f"{ind}steps += _s")
            return
        raise ExecError(f"cannot compile {s!r}")

    def cond(self, s: IfGoto, negate: bool = False) -> str:
        op = _NEG[s.cond.op] if negate else s.cond.op
        return f"{self.op(s.cond.lhs)} {_PY_CMP[op]} {self.op(s.cond.rhs)}"

    # -- regions ----------------------------------------------------------------
    def region(self, block_starts: list, entry: int, leave: dict, out: list, ind: str) -> None:
        """Dispatch loop over the given blocks; leave maps outside targets to code."""
        inside = set(block_starts)
        order = sorted(block_starts, key=lambda b: (-self.depth.get(b, 0), b))
        pseudo = {}
        for b in block_starts:
            st, end = self.blocks.ranges[b]
            if end - 1 in self.init_redirect and self.init_redirect[end - 1] in inside:
                h = self.init_redirect[end - 1]
                pseudo[h] = -(h + 1)
        out.append(f"{ind}blk = {entry}")
        out.append(f"{ind}while True:")
        ind2 = ind + "    "
        first = True
        for b in order:
            kw = "if" if first else "elif"
            first = False
            out.append(f"{ind2}{kw} blk == {b}:")
            self.block(b, inside, leave, pseudo, out, ind2 + "    ")
        for h, pid in sorted(pseudo.items()):
            kw = "if" if first else "elif"
            first = False
            out.append(f"{ind2}{kw} blk == {pid}:")
            self.controlled_entry(h, inside, leave, out, ind2 + "    ")
        out.append(f"{ind2}else:")
        out.append(f"{ind2}    raise ExecError('bad block ' + str(blk))")

    def jump(self, target: int, inside, leave, pseudo, from_idx: int, out, ind) -> None:
        if target in inside:
            if (from_idx in self.init_redirect and self.init_redirect[from_idx] == target
                    and target in pseudo):
                out.append(f"{ind}blk = {pseudo[target]}")
            else:
                if target <= from_idx:
                    out.append(f"{ind}if steps > LIMIT: raise StepLimitExceeded('step limit exceeded')")
                out.append(f"{ind}blk = {target}")
            out.append(f"{ind}continue")
        elif target in leave:
            out.append(f"{ind}{leave[target]}")
        else:
            out.append(f"{ind}raise ExecError('control left a controlled loop body')")

    def block(self, b: int, inside, leave, pseudo, out, ind) -> None:
        stmts = self.f.statements
        if b in self.fast_loops:
            self.fast_loop(b, inside, leave, pseudo, out, ind)
            return
        st, end = self.blocks.ranges[b]
        out.append(f"{ind}steps += {end - st}")
        for i in range(st, end):
            s = stmts[i]
            if isinstance(s, IfGoto):
                out.append(f"{ind}if {self.cond(s)}:")
                self.jump(s.target_index, inside, leave, pseudo, i, out, ind + "    ")
                self.jump(i + 1, inside, leave, pseudo, i, out, ind)
                return
            if isinstance(s, Goto):
                self.jump(s.target_index, inside, leave, pseudo, i, out, ind)
                return
            if isinstance(s, Return):
                val = self.op(s.value) if s.value is not None else "None"
                out.append(f"{ind}return {val}, steps")
                return
            self.stmt(i, s, out, ind)
        self.jump(end, inside, leave, pseudo, end - 1, out, ind)

    def fast_loop(self, h: int, inside, leave, pseudo, out, ind) -> None:
        body, exit_ = self.fast_loops[h]
        hs = self.f.statements[h]
        st, end = self.blocks.ranges[body]
        exit_on_true = hs.target_index == exit_
        out.append(f"{ind}while True:")
        i2 = ind + "    "
        out.append(f"{i2}steps += 1")
        out.append(f"{i2}if {self.cond(hs, negate=not exit_on_true)}:")
        out.append(f"{i2}    break")
        out.append(f"{i2}steps += {end - st}")
        for i in range(st, end - 1):
            self.stmt(i, self.f.statements[i], out, i2)
        out.append(f"{i2}if steps > LIMIT: raise StepLimitExceeded('step limit exceeded')")
        self.jump(exit_, inside, leave, pseudo, h, out, ind)

    def controlled_entry(self, h: int, inside, leave, out, ind) -> None:
        c = self.controlled[h]
        info = c.info
        key = self.cg.loop_key[(self.sig, h)]
        ub = self.op(info.ub)
        st = self.state_tuple()
        out.append(f"{ind}_fin, _s, _st = rt.run_loop({key}, BODY_{key}, {ub}, {st})")
        out.append(f"{ind}steps += _s")
        if self.names:
            out.append(f"{ind}{st[1:-2]}, = _st" if len(self.names) == 1 else f"{ind}{st[1:-2]} = _st")
        out.append(f"{ind}{self.var[info.iter]} = _fin")
        for n in sorted(c.privates):
            if n != info.iter and n in self.var:
                out.append(f"{ind}{self.var[n]} = None")
        self.jump(info.exit_target, inside, leave, {}, h, out, ind)

    # -- functions ------------------------------------------------------------
    def emit_function(self, out: list) -> None:
        params = [self.var[p] for p, _ in self.f.params]
        out.append(f"def {self.cg.fn_name[self.sig]}(rt{''.join(', ' + p for p in params)}):")
        ind = "    "
        out.append(f"{ind}G = rt.globals")
        for n in self.names:
            if self.var[n] not in params:
                out.append(f"{ind}{self.var[n]} = None")
        out.append(f"{ind}steps = 0")
        self.region(self.blocks.starts, 0, {}, out, ind)
        out.append("")
        for h in sorted(self.controlled):
            self.emit_body(h, out)

    def emit_body(self, h: int, out: list) -> None:
        c = self.controlled[h]
        info = c.info
        key = self.cg.loop_key[(self.sig, h)]
        args = ", ".join(self.var[n] for n in self.names)
        out.append(f"def BODY_{key}(rt, _iv{', ' if args else ''}{args}):")
        ind = "    "
        out.append(f"{ind}G = rt.globals")
        for n in sorted(c.privates):
            if n in self.var:
                out.append(f"{ind}{self.var[n]} = None")
        out.append(f"{ind}{self.var[info.iter]} = _iv")
        out.append(f"{ind}steps = 0")
        body_blocks = sorted({self.blocks.block_of[i] for i in info.body} - {h})
        leave = {h: f"return steps, {self.state_tuple()}"}
        self.region(body_blocks, self.blocks.block_of[info.body_entry], leave, out, ind)
        out.append("")


class _ProgramGen:
    def __init__(self, p: Program, controlled: dict):
        self.p = p
        self.controlled = controlled
        self.fn_name = {sig: f"F{k}" for k, sig in enumerate(sorted(p.functions))}
        self.loop_key = {k: n for n, k in enumerate(sorted(controlled))}

    def source(self) -> str:
        out: list[str] = []
        for sig in sorted(self.p.functions):
            _FnGen(self, self.p.functions[sig]).emit_function(out)
        return "\n".join(out) + "\n"


class Runtime:
    def __init__(self, p: Program, controlled: dict, workers: int = 1, seed: int = 0,
                 step_limit: int = 10 ** 8):
        self.p = p
        self.step_limit = step_limit
        self.globals = initial_globals(p)
        self.controlled = controlled
        self.loops = {n: controlled[k] for n, k in enumerate(sorted(controlled))}
        self.workers = max(1, workers)
        self.rng = random.Random(seed)
        self.local = threading.local()

    def _in_parallel(self) -> bool:
        return getattr(self.local, "in_parallel", False)

    def run_loop(self, key: int, body, ubv, state: tuple):
        c = self.loops[key]
        info = c.info
        values = info.iteration_values(ubv)
        final = info.lb + info.inc * len(values)
        steps = len(values) + 1
        if not values:
            return final, steps, state
        names = sorted(set(self._names(info)))
        private_pos = [k for k, n in enumerate(names) if n in c.privates]

        def reset(st):
            if not private_pos:
                return st
            lst = list(st)
            for k in private_pos:
                lst[k] = None
            return tuple(lst)

        def run_seq(vals, st):
            total = 0
            for v in vals:
                s, st = body(self, v, *reset(st))
                total += s
                if total > self.step_limit:
                    raise StepLimitExceeded(f"step limit {self.step_limit} exceeded")
            return total, st

        mode = c.mode
        if mode == "parallel" and (self._in_parallel() or self.workers == 1):
            mode = "sequential"
        if mode == "sequential":
            s, state = run_seq(values, state)
            return final, steps + s, reset(state)
        if mode == "shuffled":
            order = list(values)
            self.rng.shuffle(order)
            s, state = run_seq(order, state)
            return final, steps + s, reset(state)

        k = min(self.workers, len(values))
        base, extra = divmod(len(values), k)
        chunks = []
        pos = 0
        for w in range(k):
            size = base + (1 if w < extra else 0)
            chunks.append(values[pos:pos + size])
            pos += size
        results: list = [None] * k
        errors: list = [None] * k

        def worker(w):
            self.local.in_parallel = True
            try:
                results[w] = run_seq(chunks[w], state)
            except BaseException as exc:  # re-raised on the joining thread
                errors[w] = exc
            finally:
                self.local.in_parallel = False

        threads = [threading.Thread(target=worker, args=(w,)) for w in range(k)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        for e in errors:
            if e is not None:
                raise e
        total = sum(r[0] for r in results)
        return final, steps + total, reset(results[-1][1])

    def _names(self, info: LoopInfo):
        f = self.p.functions[info.function]
        return set(p for p, _ in f.params) | set(e.name for e in f.locals) | f.referenced_locals()


def compile_program(p: Program, controlled: dict, step_limit: int):
    """Namespace holding one Python function per TAJ function."""
    gen = _ProgramGen(p, controlled)
    src = gen.source()
    ns = {
        "TArray": TArray, "TObject": TObject, "ExecError": ExecError,
        "StepLimitExceeded": StepLimitExceeded, "_fix": _fix, "_oob": _oob,
        "_external": _external, "LIMIT": step_limit,
    }
    code = compile(src, "<taj-compiled>", "exec")
    exec(code, ns)
    return ns, gen.fn_name, src


def run_compiled(p: Program, f: FunctionDef, rargs: list, controlled: dict, step_limit: int,
                 workers: int = 1, seed: int = 0):
    ns, names, _ = compile_program(p, controlled, step_limit)
    rt = Runtime(p, controlled, workers, seed, step_limit)
    fn = ns[names[f.signature]]
    try:
        ret, steps = fn(rt, *rargs)
    except ExecError:
        raise
    except RecursionError:
        raise ExecError("recursion too deep") from None
    except IndexError:
        raise ExecError("array index out of bounds") from None
    except (TypeError, KeyError, AttributeError, ValueError) as exc:
        raise ExecError(f"runtime error: {exc}") from None
    if steps > step_limit:
        raise StepLimitExceeded(f"step limit {step_limit} exceeded")
    return rt, ret, steps
