"""Checked big-step and small-step evaluation of core programs.

Both semantics track rho, the set of memories touched in the current logical
time step, and refuse to evaluate an access whose memory is already in rho.
Big-step evaluation raises Stuck at that point; the small-step relation
simply has no applicable rule, which run_to_completion classifies.

Integer arithmetic wraps to 32-bit two's complement with flooring division
and modulo (the remainder takes the divisor's sign, so `i % b` always names
a valid bank); stores into narrower memories wrap again to the element
width. Division by zero is a runtime fault, which is a different outcome
from a memory-conflict stick.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from .coreir import (
    CAssign,
    CBool,
    CBop,
    CCmd,
    CExpr,
    CExprCmd,
    CFloat,
    CIf,
    CInt,
    CInterSeq,
    CLet,
    COrd,
    CPar,
    CRead,
    CSkip,
    CStore,
    CVar,
    CWhile,
    CoreProgram,
    FloatT,
    IntT,
    is_value,
)

Value = Union[int, float, bool]
Env = dict  # name -> Value or list[Value]

DEFAULT_FUEL = 10**6


class Stuck(Exception):
    """A memory conflict: the access's memory is already in rho."""


class RuntimeFault(Exception):
    """Division by zero, out-of-range index, or unbound name."""


class OutOfFuel(Exception):
    pass


class Outcome(Enum):
    COMPLETED = "completed"
    STUCK = "stuck"
    FUEL_EXHAUSTED = "fuel-exhausted"
    FAULT = "fault"


def wrap32(v: int) -> int:
    return (v + (1 << 31)) % (1 << 32) - (1 << 31)


def wrap_to(v: int, width: int) -> int:
    return (v + (1 << (width - 1))) % (1 << width) - (1 << (width - 1))


def apply_bop(op: str, a: Value, b: Value) -> Value:
    if op in ("&&", "||"):
        if not (isinstance(a, bool) and isinstance(b, bool)):
            raise RuntimeFault(f"{op} on non-bool")
        return (a and b) if op == "&&" else (a or b)
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    if isinstance(a, bool) or isinstance(b, bool):
        raise RuntimeFault(f"{op} on bool")
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    use_float = isinstance(a, float) or isinstance(b, float)
    if op == "+":
        r = a + b
    elif op == "-":
        r = a - b
    elif op == "*":
        r = a * b
    elif op == "/":
        if b == 0:
            raise RuntimeFault("division by zero")
        r = a / b if use_float else a // b
    elif op == "%":
        if b == 0:
            raise RuntimeFault("modulo by zero")
        r = a % b
    else:
        raise RuntimeFault(f"unknown operator {op}")
    if not use_float:
        r = wrap32(r)
    return r


def value_expr(v: Value) -> CExpr:
    if isinstance(v, bool):
        return CBool(v)
    if isinstance(v, float):
        return CFloat(v)
    return CInt(v)


def expr_value(e: CExpr) -> Value:
    if isinstance(e, CInt):
        return e.value
    if isinstance(e, CFloat):
        return e.value
    if isinstance(e, CBool):
        return e.value
    raise RuntimeFault(f"not a value: {e!r}")


# ---------------------------------------------------------------------------
# Store construction
# ---------------------------------------------------------------------------


def initial_env(program: CoreProgram, init: Optional[dict] = None) -> Env:
    """Build sigma: zeroed canonical memories, aliases sharing their storage,
    plus any scalar bindings from an init mapping."""
    env: Env = {}
    for name, mt in program.canonical_memories().items():
        if isinstance(mt.elem, FloatT):
            fill: Value = 0.0
        elif isinstance(mt.elem, IntT):
            fill = 0
        else:
            fill = False
        env[name] = [fill] * mt.size
    if init:
        for name, val in init.items():
            if name in env and isinstance(val, list):
                mt = program.memories[name]
                arr = env[name]
                if len(val) != mt.size:
                    raise RuntimeFault(f"init for {name} must have {mt.size} elements")
                for i, x in enumerate(val):
                    arr[i] = _coerce_elem(mt, x)
            elif isinstance(val, list):
                raise RuntimeFault(f"unknown memory {name} in init")
            else:
                env[name] = _coerce_scalar(val)
    for alias, canon in program.aliases.items():
        env[alias] = env[canon]
    return env


def _coerce_elem(mt, x) -> Value:
    if isinstance(mt.elem, FloatT):
        return float(x)
    if isinstance(mt.elem, IntT):
        return wrap_to(int(x), mt.width)
    return bool(x)


def _coerce_scalar(x) -> Value:
    if isinstance(x, bool):
        return x
    if isinstance(x, float):
        return x
    return wrap32(int(x))


def _store_into(program: CoreProgram, env: Env, mem: str, idx: Value, val: Value) -> None:
    arr = env.get(mem)
    if not isinstance(arr, list):
        raise RuntimeFault(f"unknown memory {mem}")
    if not isinstance(idx, int) or isinstance(idx, bool) or not 0 <= idx < len(arr):
        raise RuntimeFault(f"index {idx} out of range for {mem}")
    mt = program.memories[mem]
    if isinstance(mt.elem, IntT) and isinstance(val, int) and not isinstance(val, bool):
        val = wrap_to(val, mt.width)
    arr[idx] = val


def _read_from(env: Env, mem: str, idx: Value) -> Value:
    arr = env.get(mem)
    if not isinstance(arr, list):
        raise RuntimeFault(f"unknown memory {mem}")
    if not isinstance(idx, int) or isinstance(idx, bool) or not 0 <= idx < len(arr):
        raise RuntimeFault(f"index {idx} out of range for {mem}")
    return arr[idx]


# ---------------------------------------------------------------------------
# Big-step semantics
# ---------------------------------------------------------------------------


class _Fuel:
    __slots__ = ("left",)

    def __init__(self, n: int):
        self.left = n

    def tick(self):
        if self.left <= 0:
            raise OutOfFuel()
        self.left -= 1


def _big_expr(program, env, rho: frozenset, e: CExpr) -> tuple[Value, frozenset]:
    if is_value(e):
        return expr_value(e), rho
    if isinstance(e, CVar):
        if e.name not in env:
            raise RuntimeFault(f"unbound variable {e.name}")
        v = env[e.name]
        if isinstance(v, list):
            raise RuntimeFault(f"memory {e.name} used as a value")
        return v, rho
    if isinstance(e, CBop):
        v1, r1 = _big_expr(program, env, rho, e.lhs)
        v2, r2 = _big_expr(program, env, r1, e.rhs)
        return apply_bop(e.op, v1, v2), r2
    if isinstance(e, CRead):
        idx, r1 = _big_expr(program, env, rho, e.idx)
        if e.mem in r1:
            raise Stuck(f"read of consumed memory {e.mem}")
        return _read_from(env, e.mem, idx), r1 | {e.mem}
    raise RuntimeFault(f"unknown expression {e!r}")


def _big_cmd(program, env, rho: frozenset, c: CCmd, fuel: _Fuel) -> frozenset:
    if isinstance(c, CSkip):
        return rho
    if isinstance(c, CExprCmd):
        _, r = _big_expr(program, env, rho, c.expr)
        return r
    if isinstance(c, CLet):
        v, r = _big_expr(program, env, rho, c.init)
        env[c.name] = v
        return r
    if isinstance(c, CAssign):
        if c.name not in env:
            raise RuntimeFault(f"assignment to unbound {c.name}")
        v, r = _big_expr(program, env, rho, c.value)
        env[c.name] = v
        return r
    if isinstance(c, CStore):
        idx, r1 = _big_expr(program, env, rho, c.idx)
        val, r2 = _big_expr(program, env, r1, c.value)
        if c.mem in r2:
            raise Stuck(f"write to consumed memory {c.mem}")
        _store_into(program, env, c.mem, idx, val)
        return r2 | {c.mem}
    if isinstance(c, CPar):
        r1 = _big_cmd(program, env, rho, c.first, fuel)
        return _big_cmd(program, env, r1, c.second, fuel)
    if isinstance(c, COrd):
        r1 = _big_cmd(program, env, rho, c.first, fuel)
        r2 = _big_cmd(program, env, rho, c.second, fuel)
        return r1 | r2
    if isinstance(c, CInterSeq):
        r1 = _big_cmd(program, env, rho, c.first, fuel)
        r2 = _big_cmd(program, env, c.rho, c.second, fuel)
        return r1 | r2
    if isinstance(c, CIf):
        b = env.get(c.cond)
        if not isinstance(b, bool):
            raise RuntimeFault(f"if condition {c.cond} is not a bool")
        return _big_cmd(program, env, rho, c.then if b else c.els, fuel)
    if isinstance(c, CWhile):
        final = rho
        while True:
            b = env.get(c.cond)
            if not isinstance(b, bool):
                raise RuntimeFault(f"while condition {c.cond} is not a bool")
            if not b:
                return final
            fuel.tick()
            # Each iteration composes with the rest in ordered fashion: the
            # body runs against the loop's entry rho and results merge by union.
            r_body = _big_cmd(program, env, rho, c.body, fuel)
            final = final | r_body
    raise RuntimeFault(f"unknown command {c!r}")


def big_step(
    program: CoreProgram,
    env: Optional[Env] = None,
    rho: frozenset = frozenset(),
    fuel: int = DEFAULT_FUEL,
) -> tuple[Env, frozenset, Outcome]:
    """Evaluate to completion. Fuel bounds while-loop iterations."""
    env = initial_env(program) if env is None else env
    try:
        r = _big_cmd(program, env, rho, program.command, _Fuel(fuel))
        return env, r, Outcome.COMPLETED
    except Stuck:
        return env, rho, Outcome.STUCK
    except OutOfFuel:
        return env, rho, Outcome.FUEL_EXHAUSTED


# ---------------------------------------------------------------------------
# Small-step semantics
# ---------------------------------------------------------------------------

_VALUE = "value"
_STEP = "step"
_STUCK = "stuck"


def _small_expr(env, rho: frozenset, e: CExpr):
    """One expression step: ('value', v), ('step', rho', e'), or ('stuck',)."""
    if is_value(e):
        return (_VALUE, expr_value(e))
    if isinstance(e, CVar):
        if e.name not in env or isinstance(env[e.name], list):
            raise RuntimeFault(f"unbound variable {e.name}")
        return (_STEP, rho, value_expr(env[e.name]))
    if isinstance(e, CBop):
        if not is_value(e.lhs):
            res = _small_expr(env, rho, e.lhs)
            if res[0] != _STEP:
                return (_STUCK,) if res[0] == _STUCK else (_STEP, rho, e)
            return (_STEP, res[1], CBop(e.op, res[2], e.rhs))
        if not is_value(e.rhs):
            res = _small_expr(env, rho, e.rhs)
            if res[0] != _STEP:
                return (_STUCK,) if res[0] == _STUCK else (_STEP, rho, e)
            return (_STEP, res[1], CBop(e.op, e.lhs, res[2]))
        v = apply_bop(e.op, expr_value(e.lhs), expr_value(e.rhs))
        return (_STEP, rho, value_expr(v))
    if isinstance(e, CRead):
        if not is_value(e.idx):
            res = _small_expr(env, rho, e.idx)
            if res[0] != _STEP:
                return (_STUCK,) if res[0] == _STUCK else (_STEP, rho, e)
            return (_STEP, res[1], CRead(e.mem, res[2]))
        if e.mem in rho:
            return (_STUCK,)
        v = _read_from(env, e.mem, expr_value(e.idx))
        return (_STEP, rho | {e.mem}, value_expr(v))
    raise RuntimeFault(f"unknown expression {e!r}")


def small_step(program: CoreProgram, env: Env, rho: frozenset, c: CCmd):
    """One command step: (rho', c') or None when no rule applies.

    The caller distinguishes completion (c is skip) from a stick (c is not).
    The environment is updated in place.
    """
    if isinstance(c, CSkip):
        return None
    if isinstance(c, CExprCmd):
        res = _small_expr(env, rho, c.expr)
        if res[0] == _VALUE:
            return (rho, CSkip())
        if res[0] == _STUCK:
            return None
        return (res[1], CExprCmd(res[2]))
    if isinstance(c, CLet):
        res = _small_expr(env, rho, c.init)
        if res[0] == _VALUE:
            env[c.name] = res[1]
            return (rho, CSkip())
        if res[0] == _STUCK:
            return None
        return (res[1], CLet(c.name, res[2]))
    if isinstance(c, CAssign):
        if c.name not in env:
            raise RuntimeFault(f"assignment to unbound {c.name}")
        res = _small_expr(env, rho, c.value)
        if res[0] == _VALUE:
            env[c.name] = res[1]
            return (rho, CSkip())
        if res[0] == _STUCK:
            return None
        return (res[1], CAssign(c.name, res[2]))
    if isinstance(c, CStore):
        if not is_value(c.idx):
            res = _small_expr(env, rho, c.idx)
            if res[0] == _STUCK:
                return None
            return (res[1], CStore(c.mem, res[2], c.value))
        if not is_value(c.value):
            res = _small_expr(env, rho, c.value)
            if res[0] == _STUCK:
                return None
            return (res[1], CStore(c.mem, c.idx, res[2]))
        if c.mem in rho:
            return None
        _store_into(program, env, c.mem, expr_value(c.idx), expr_value(c.value))
        return (rho | {c.mem}, CSkip())
    if isinstance(c, COrd):
        # Capture the current rho in the intermediate annotated form.
        return (rho, CInterSeq(c.first, rho, c.second))
    if isinstance(c, CInterSeq):
        if not isinstance(c.first, CSkip):
            res = small_step(program, env, rho, c.first)
            if res is None:
                return None
            return (res[0], CInterSeq(res[1], c.rho, c.second))
        if not isinstance(c.second, CSkip):
            # The right side steps against the annotation; the outer rho is
            # frozen until both sides finish.
            res = small_step(program, env, c.rho, c.second)
            if res is None:
                return None
            return (rho, CInterSeq(c.first, res[0], res[1]))
        return (rho | c.rho, CSkip())
    if isinstance(c, CPar):
        if isinstance(c.first, CSkip):
            return (rho, c.second)
        res = small_step(program, env, rho, c.first)
        if res is None:
            return None
        return (res[0], CPar(res[1], c.second))
    if isinstance(c, CIf):
        b = env.get(c.cond)
        if not isinstance(b, bool):
            raise RuntimeFault(f"if condition {c.cond} is not a bool")
        return (rho, c.then if b else c.els)
    if isinstance(c, CWhile):
        return (rho, CIf(c.cond, COrd(c.body, c), CSkip()))
    raise RuntimeFault(f"unknown command {c!r}")


@dataclass
class RunResult:
    outcome: Outcome
    env: Env
    rho: frozenset
    steps: int
    residual: CCmd


def run_to_completion(
    program: CoreProgram,
    env: Optional[Env] = None,
    rho: frozenset = frozenset(),
    fuel: int = DEFAULT_FUEL,
) -> RunResult:
    """Iterate small_step, classifying the final state."""
    env = initial_env(program) if env is None else env
    c: CCmd = program.command
    steps = 0
    while not isinstance(c, CSkip):
        if steps >= fuel:
            return RunResult(Outcome.FUEL_EXHAUSTED, env, rho, steps, c)
        try:
            res = small_step(program, env, rho, c)
        except RuntimeFault:
            return RunResult(Outcome.FAULT, env, rho, steps, c)
        if res is None:
            return RunResult(Outcome.STUCK, env, rho, steps, c)
        rho, c = res
        steps += 1
    return RunResult(Outcome.COMPLETED, env, rho, steps, c)


def snapshot_memories(program: CoreProgram, env: Env) -> dict:
    """Canonical memory contents for result comparison and JSON output."""
    return {
        name: list(env[name]) for name in program.canonical_memories()
    }
