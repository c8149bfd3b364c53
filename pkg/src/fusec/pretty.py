"""Pretty-printer for the surface AST.

Output reparses to an AST equal to the input (spans excluded), which the
frontend property tests rely on.
"""

from __future__ import annotations

from . import surface as S
from .parser import PRECEDENCE


def pp_type(t: S.SurfaceType) -> str:
    return str(t)


def pp_expr(e: S.Expr, parent_prec: int = 0) -> str:
    if isinstance(e, S.NumLit):
        if e.is_float:
            text = repr(float(e.value))
            if "e" in text or "E" in text or "." not in text:
                text = f"{float(e.value):.17f}".rstrip("0") + "0"
            return text
        return str(int(e.value))
    if isinstance(e, S.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, S.Var):
        return e.name
    if isinstance(e, S.Read):
        return e.mem + "".join(f"[{pp_expr(i)}]" for i in e.idxs)
    if isinstance(e, S.PhysRead):
        banks = ", ".join(str(b) for b in e.banks)
        return e.mem + "{" + banks + "}" + "".join(f"[{pp_expr(i)}]" for i in e.idxs)
    if isinstance(e, S.BinOp):
        prec = PRECEDENCE[e.op]
        text = f"{pp_expr(e.lhs, prec)} {e.op} {pp_expr(e.rhs, prec + 1)}"
        if prec < parent_prec:
            return f"({text})"
        return text
    raise TypeError(f"unknown expression {e!r}")


def pp_view_kind(kind: S.ViewKind, underlying: str) -> str:
    if isinstance(kind, S.ShrinkView):
        return "shrink " + underlying + "".join(f"[by {f}]" for f in kind.factors)
    if isinstance(kind, S.SplitView):
        return "split " + underlying + "".join(f"[by {f}]" for f in kind.factors)
    if isinstance(kind, S.ShiftView):
        return "shift " + underlying + "".join(f"[by {pp_expr(o)}]" for o in kind.offsets)
    parts = "".join(
        f"[by {k} * {pp_expr(o, PRECEDENCE['*'] + 1)}]"
        for k, o in zip(kind.coeffs, kind.offsets)
    )
    return "suffix " + underlying + parts


def pp_stmt(stmt: S.Stmt, indent: int) -> list[str]:
    pad = "  " * indent
    if isinstance(stmt, S.Let):
        ann = f": {pp_type(stmt.ann)}" if stmt.ann is not None else ""
        return [f"{pad}let {stmt.name}{ann} = {pp_expr(stmt.init)};"]
    if isinstance(stmt, S.MemDecl):
        names = ", ".join(stmt.names)
        return [f"{pad}let {names}: {pp_type(stmt.type)};"]
    if isinstance(stmt, S.ViewDecl):
        return [f"{pad}view {stmt.name} = {pp_view_kind(stmt.kind, stmt.underlying)};"]
    if isinstance(stmt, S.For):
        unroll = f" unroll {stmt.unroll}" if stmt.unroll != 1 else ""
        lines = [f"{pad}for (let {stmt.iter} = {stmt.lo}..{stmt.hi}){unroll} {{"]
        lines += pp_chain(stmt.body, indent + 1)
        if stmt.combine is not None:
            lines.append(f"{pad}}} combine {{")
            lines += pp_chain(stmt.combine, indent + 1)
        lines.append(f"{pad}}}")
        return lines
    if isinstance(stmt, S.While):
        lines = [f"{pad}while ({pp_expr(stmt.cond)}) {{"]
        lines += pp_chain(stmt.body, indent + 1)
        lines.append(f"{pad}}}")
        return lines
    if isinstance(stmt, S.If):
        lines = [f"{pad}if ({pp_expr(stmt.cond)}) {{"]
        lines += pp_chain(stmt.then, indent + 1)
        if stmt.els is not None:
            lines.append(f"{pad}}} else {{")
            lines += pp_chain(stmt.els, indent + 1)
        lines.append(f"{pad}}}")
        return lines
    if isinstance(stmt, S.Assign):
        return [f"{pad}{stmt.name} := {pp_expr(stmt.value)};"]
    if isinstance(stmt, S.Reduce):
        return [f"{pad}{stmt.name} {stmt.op}= {pp_expr(stmt.value)};"]
    if isinstance(stmt, S.Store):
        return [f"{pad}{pp_expr(stmt.target)} := {pp_expr(stmt.value)};"]
    if isinstance(stmt, S.ExprStmt):
        return [f"{pad}{pp_expr(stmt.expr)};"]
    if isinstance(stmt, S.Skip):
        return [f"{pad}skip;"]
    if isinstance(stmt, S.Block):
        lines = [f"{pad}{{"]
        lines += pp_chain(stmt, indent + 1)
        lines.append(f"{pad}}};")
        return lines
    raise TypeError(f"unknown statement {stmt!r}")


def pp_chain(block: S.Block, indent: int) -> list[str]:
    lines: list[str] = []
    for gi, group in enumerate(block.chain):
        if gi > 0:
            lines.append("  " * indent + "---")
        for stmt in group:
            lines += pp_stmt(stmt, indent)
    return lines


def pretty_print(program: S.Program) -> str:
    return "\n".join(pp_chain(program.body, 0)) + "\n"
