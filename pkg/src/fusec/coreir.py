"""The core calculus: unbanked memories, ordered/unordered composition, and
the affine typing judgment.

Commands:
    e | let x = e | c1 --- c2 | c1 ~rho~ c2 | c1 ; c2 | if x c1 c2 |
    while x c | x := e | a[e1] := e2 | skip

The `~rho~` form is the intermediate sequencing command that only appears
while the small-step semantics runs; `rho` snapshots the access set captured
when an ordered composition began executing.

Scalar typing distinguishes int/float/bool kinds only. Bit widths are storage
annotations on memories: they select wrap-around behaviour on store, not a
typing distinction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntT:
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class FloatT:
    def __str__(self) -> str:
        return "float"


@dataclass(frozen=True)
class BoolT:
    def __str__(self) -> str:
        return "bool"


ScalarT = Union[IntT, FloatT, BoolT]


@dataclass(frozen=True)
class MemT:
    elem: ScalarT
    size: int
    width: int = 32  # wrap width for int elements

    def __str__(self) -> str:
        return f"mem {self.elem}[{self.size}]"


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CInt:
    value: int


@dataclass(frozen=True)
class CFloat:
    value: float


@dataclass(frozen=True)
class CBool:
    value: bool


@dataclass(frozen=True)
class CVar:
    name: str


@dataclass(frozen=True)
class CBop:
    op: str
    lhs: "CExpr"
    rhs: "CExpr"


@dataclass(frozen=True)
class CRead:
    mem: str
    idx: "CExpr"


CExpr = Union[CInt, CFloat, CBool, CVar, CBop, CRead]


def is_value(e: CExpr) -> bool:
    return isinstance(e, (CInt, CFloat, CBool))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CSkip:
    pass


@dataclass(frozen=True)
class CExprCmd:
    expr: CExpr


@dataclass(frozen=True)
class CLet:
    name: str
    init: CExpr


@dataclass(frozen=True)
class COrd:
    first: "CCmd"
    second: "CCmd"


@dataclass(frozen=True)
class CInterSeq:
    first: "CCmd"
    rho: frozenset
    second: "CCmd"


@dataclass(frozen=True)
class CPar:
    first: "CCmd"
    second: "CCmd"


@dataclass(frozen=True)
class CIf:
    cond: str  # variable name
    then: "CCmd"
    els: "CCmd"


@dataclass(frozen=True)
class CWhile:
    cond: str  # variable name
    body: "CCmd"


@dataclass(frozen=True)
class CAssign:
    name: str
    value: CExpr


@dataclass(frozen=True)
class CStore:
    mem: str
    idx: CExpr
    value: CExpr


CCmd = Union[CSkip, CExprCmd, CLet, COrd, CInterSeq, CPar, CIf, CWhile, CAssign, CStore]


@dataclass
class CoreProgram:
    """A command plus the fixed memories it runs against.

    `aliases` maps extra port names onto the canonical memory whose storage
    they share; the affine contexts treat aliases as distinct memories.
    """

    memories: dict[str, MemT]
    command: CCmd
    aliases: dict[str, str] = field(default_factory=dict)

    def canonical_memories(self) -> dict[str, MemT]:
        return {n: t for n, t in self.memories.items() if n not in self.aliases}


# ---------------------------------------------------------------------------
# Typing
# ---------------------------------------------------------------------------


class CoreTypeError(Exception):
    pass


def unify(a: ScalarT, b: ScalarT, what: str) -> ScalarT:
    if a == b:
        return a
    raise CoreTypeError(f"{what}: {a} vs {b}")


def check_expr(gamma: dict, delta: frozenset, e: CExpr) -> tuple[ScalarT, frozenset]:
    if isinstance(e, CInt):
        return IntT(), delta
    if isinstance(e, CFloat):
        return FloatT(), delta
    if isinstance(e, CBool):
        return BoolT(), delta
    if isinstance(e, CVar):
        t = gamma.get(e.name)
        if t is None:
            raise CoreTypeError(f"unbound variable {e.name}")
        if isinstance(t, MemT):
            raise CoreTypeError(f"memory {e.name} used as a value")
        return t, delta
    if isinstance(e, CBop):
        t1, d1 = check_expr(gamma, delta, e.lhs)
        t2, d2 = check_expr(gamma, d1, e.rhs)
        if e.op in ("+", "-", "*", "/", "%"):
            t = unify(t1, t2, f"operands of {e.op}")
            if isinstance(t, BoolT):
                raise CoreTypeError(f"{e.op} needs numeric operands")
            return t, d2
        if e.op in ("<", "<=", ">", ">="):
            t = unify(t1, t2, f"operands of {e.op}")
            if isinstance(t, BoolT):
                raise CoreTypeError(f"{e.op} needs numeric operands")
            return BoolT(), d2
        if e.op in ("==", "!="):
            unify(t1, t2, f"operands of {e.op}")
            return BoolT(), d2
        if e.op in ("&&", "||"):
            unify(t1, BoolT(), f"left operand of {e.op}")
            unify(t2, BoolT(), f"right operand of {e.op}")
            return BoolT(), d2
        raise CoreTypeError(f"unknown operator {e.op}")
    if isinstance(e, CRead):
        t_idx, d1 = check_expr(gamma, delta, e.idx)
        unify(t_idx, IntT(), "memory index")
        mt = gamma.get(e.mem)
        if not isinstance(mt, MemT):
            raise CoreTypeError(f"{e.mem} is not a memory")
        if e.mem not in d1:
            raise CoreTypeError(f"memory {e.mem} already consumed")
        return mt.elem, d1 - {e.mem}
    raise CoreTypeError(f"unknown expression {e!r}")


def check_cmd(
    gamma: dict,
    delta: frozenset,
    cmd: CCmd,
    delta_star: frozenset,
) -> tuple[dict, frozenset]:
    """The command judgment: Gamma, Delta |- c -| Gamma', Delta'.

    `delta_star` is the full set of memories available to the program; the
    intermediate sequencing form checks its right side against the complement
    of its annotation within delta_star.
    """
    if isinstance(cmd, CSkip):
        return gamma, delta
    if isinstance(cmd, CExprCmd):
        _, d = check_expr(gamma, delta, cmd.expr)
        return gamma, d
    if isinstance(cmd, CLet):
        t, d = check_expr(gamma, delta, cmd.init)
        g2 = dict(gamma)
        g2[cmd.name] = t
        return g2, d
    if isinstance(cmd, CAssign):
        t_var = gamma.get(cmd.name)
        if t_var is None:
            raise CoreTypeError(f"assignment to unbound {cmd.name}")
        if isinstance(t_var, MemT):
            raise CoreTypeError(f"cannot assign to memory {cmd.name}")
        t, d = check_expr(gamma, delta, cmd.value)
        unify(t_var, t, f"assignment to {cmd.name}")
        return gamma, d
    if isinstance(cmd, CStore):
        t_idx, d1 = check_expr(gamma, delta, cmd.idx)
        unify(t_idx, IntT(), "store index")
        t_val, d2 = check_expr(gamma, d1, cmd.value)
        mt = gamma.get(cmd.mem)
        if not isinstance(mt, MemT):
            raise CoreTypeError(f"{cmd.mem} is not a memory")
        unify(mt.elem, t_val, f"store to {cmd.mem}")
        if cmd.mem not in d2:
            raise CoreTypeError(f"memory {cmd.mem} already consumed")
        return gamma, d2 - {cmd.mem}
    if isinstance(cmd, CPar):
        g2, d2 = check_cmd(gamma, delta, cmd.first, delta_star)
        return check_cmd(g2, d2, cmd.second, delta_star)
    if isinstance(cmd, COrd):
        g2, d2 = check_cmd(gamma, delta, cmd.first, delta_star)
        g3, d3 = check_cmd(g2, delta, cmd.second, delta_star)
        return g3, d2 & d3
    if isinstance(cmd, CInterSeq):
        g2, d2 = check_cmd(gamma, delta, cmd.first, delta_star)
        bar = delta_star - cmd.rho
        g3, d3 = check_cmd(g2, bar, cmd.second, delta_star)
        return g3, d2 & d3
    if isinstance(cmd, CIf):
        t = gamma.get(cmd.cond)
        if t != BoolT():
            raise CoreTypeError(f"if condition {cmd.cond} must be bool")
        _, d2 = check_cmd(gamma, delta, cmd.then, delta_star)
        _, d3 = check_cmd(gamma, delta, cmd.els, delta_star)
        return gamma, d2 & d3
    if isinstance(cmd, CWhile):
        t = gamma.get(cmd.cond)
        if t != BoolT():
            raise CoreTypeError(f"while condition {cmd.cond} must be bool")
        _, d2 = check_cmd(gamma, delta, cmd.body, delta_star)
        return gamma, d2
    raise CoreTypeError(f"unknown command {cmd!r}")


def core_check(program: CoreProgram, gamma: Optional[dict] = None) -> tuple[dict, frozenset]:
    """Check a whole program from its initial affine context."""
    g = dict(gamma) if gamma else {}
    for name, mt in program.memories.items():
        g[name] = mt
    delta_star = frozenset(program.memories)
    return check_cmd(g, delta_star, program.command, delta_star)


# ---------------------------------------------------------------------------
# Pretty-printing (the printable rendering of the core grammar)
# ---------------------------------------------------------------------------

_PREC = {
    "||": 1, "&&": 2, "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "%": 6,
}


def pp_expr(e: CExpr, parent: int = 0) -> str:
    if isinstance(e, CInt):
        return str(e.value)
    if isinstance(e, CFloat):
        return repr(e.value)
    if isinstance(e, CBool):
        return "true" if e.value else "false"
    if isinstance(e, CVar):
        return e.name
    if isinstance(e, CRead):
        return f"{e.mem}[{pp_expr(e.idx)}]"
    if isinstance(e, CBop):
        p = _PREC[e.op]
        s = f"{pp_expr(e.lhs, p)} {e.op} {pp_expr(e.rhs, p + 1)}"
        return f"({s})" if p < parent else s
    raise TypeError(repr(e))


def _cmd_lines(c: CCmd, indent: int) -> list[str]:
    pad = "  " * indent
    if isinstance(c, CSkip):
        return [f"{pad}skip;"]
    if isinstance(c, CExprCmd):
        return [f"{pad}{pp_expr(c.expr)};"]
    if isinstance(c, CLet):
        return [f"{pad}let {c.name} = {pp_expr(c.init)};"]
    if isinstance(c, CAssign):
        return [f"{pad}{c.name} := {pp_expr(c.value)};"]
    if isinstance(c, CStore):
        return [f"{pad}{c.mem}[{pp_expr(c.idx)}] := {pp_expr(c.value)};"]
    if isinstance(c, CPar):
        out = []
        for part in (c.first, c.second):
            if isinstance(part, (COrd, CInterSeq)):
                out.append(f"{pad}{{")
                out += _cmd_lines(part, indent + 1)
                out.append(f"{pad}}};")
            else:
                out += _cmd_lines(part, indent)
        return out
    if isinstance(c, COrd):
        return _cmd_lines(c.first, indent) + [f"{pad}---"] + _cmd_lines(c.second, indent)
    if isinstance(c, CInterSeq):
        rho = ", ".join(sorted(c.rho))
        return (
            _cmd_lines(c.first, indent)
            + [f"{pad}~{{{rho}}}~"]
            + _cmd_lines(c.second, indent)
        )
    if isinstance(c, CIf):
        out = [f"{pad}if {c.cond} {{"]
        out += _cmd_lines(c.then, indent + 1)
        out.append(f"{pad}}} else {{")
        out += _cmd_lines(c.els, indent + 1)
        out.append(f"{pad}}}")
        return out
    if isinstance(c, CWhile):
        out = [f"{pad}while {c.cond} {{"]
        out += _cmd_lines(c.body, indent + 1)
        out.append(f"{pad}}}")
        return out
    raise TypeError(repr(c))


def pp_program(program: CoreProgram) -> str:
    lines = []
    for name, mt in program.memories.items():
        alias = program.aliases.get(name)
        suffix = f"  // port alias of {alias}" if alias else ""
        lines.append(f"mem {name}: {mt.elem}[{mt.size}];{suffix}")
    if lines:
        lines.append("")
    lines += _cmd_lines(program.command, 0)
    return "\n".join(lines) + "\n"
