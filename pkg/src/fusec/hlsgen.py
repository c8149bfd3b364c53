"""Emit pragma-annotated HLS C++ for accepted surface programs.

Memories become statically sized arrays carrying one ARRAY_PARTITION pragma
per banked dimension plus a BRAM resource pragma; unrolled loops carry an
UNROLL pragma. Trivial memories (one bank, one port) and unroll-1 loops emit
no pragmas at all. Views disappear: accesses compile to direct indexing of
the underlying array with the view's offset arithmetic folded in.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import surface as S
from .parser import fold_const
from .pretty import pp_expr
from .typecheck import CheckResult, MemSym, ViewInfo


@dataclass
class EmitPlan:
    partitions: list = field(default_factory=list)  # (var, factor, dim)
    resources: list = field(default_factory=list)  # (var, core)
    unrolls: list = field(default_factory=list)  # (loop label, factor)
    decl_order: list = field(default_factory=list)
    name_map: dict = field(default_factory=dict)  # surface name -> emitted name

    def to_json(self) -> dict:
        return {
            "partitions": [
                {"variable": v, "factor": f, "dim": d} for v, f, d in self.partitions
            ],
            "resources": [{"variable": v, "core": c} for v, c in self.resources],
            "unrolls": [{"loop": l, "factor": f} for l, f in self.unrolls],
            "decl_order": self.decl_order,
            "name_map": self.name_map,
        }


def _ctype(elem) -> str:
    if isinstance(elem, S.FloatT):
        return "float"
    if isinstance(elem, S.BoolT):
        return "bool"
    return f"ap_int<{elem.width}>"


def _mem_pragmas(name: str, mt: S.MemT) -> list[str]:
    """Pragma lines for one memory; empty for a trivial memory."""
    banked = any(d.banks > 1 for d in mt.dims)
    if not banked and mt.ports == 1:
        return []
    core = "RAM_1P_BRAM" if mt.ports == 1 else "RAM_2P_BRAM"
    lines = [f"#pragma HLS resource variable={name} core={core}"]
    for dim, d in enumerate(mt.dims, start=1):
        if d.banks > 1:
            lines.append(
                f"#pragma HLS ARRAY_PARTITION variable={name} cyclic "
                f"factor={d.banks} dim={dim}"
            )
    return lines


class _Emitter:
    def __init__(self, program: S.Program, checked: CheckResult, kernel: str = "kernel"):
        self.program = program
        self.info = checked.info
        self.kernel = kernel
        self.plan = EmitPlan()
        self.lines: list[str] = []
        self.indent = 1
        self.uses_ap_int = False

    def out(self, text: str) -> None:
        self.lines.append("  " * self.indent + text)

    def run(self) -> str:
        params = []
        top_level_decls = {
            id(stmt)
            for group in self.program.body.chain
            for stmt in group
            if isinstance(stmt, S.MemDecl)
        }
        header_pragmas: list[str] = []
        for stmt_group in self.program.body.chain:
            for stmt in stmt_group:
                if isinstance(stmt, S.MemDecl):
                    for sym in self.info.resolutions[id(stmt)]:
                        dims = "".join(f"[{d.size}]" for d in sym.type.dims)
                        params.append(f"{_ctype(sym.type.elem)} {sym.uid}{dims}")
                        header_pragmas += self._plan_memory(sym)
                        if isinstance(sym.type.elem, S.BitT):
                            self.uses_ap_int = True
        for pragma in header_pragmas:
            self.out(pragma)
        self.emit_chain(self.program.body, skip_decls=top_level_decls)
        sig = f"void {self.kernel}({', '.join(params)}) {{"
        prelude = []
        if self.uses_ap_int:
            prelude.append('#include "ap_int.h"')
            prelude.append("")
        return "\n".join(prelude + [sig] + self.lines + ["}"]) + "\n"

    def _plan_memory(self, sym: MemSym) -> list[str]:
        self.plan.decl_order.append(sym.uid)
        self.plan.name_map[sym.name] = sym.uid
        pragmas = _mem_pragmas(sym.uid, sym.type)
        banked = any(d.banks > 1 for d in sym.type.dims)
        if banked or sym.type.ports > 1:
            core = "RAM_1P_BRAM" if sym.type.ports == 1 else "RAM_2P_BRAM"
            self.plan.resources.append((sym.uid, core))
            for dim, d in enumerate(sym.type.dims, start=1):
                if d.banks > 1:
                    self.plan.partitions.append((sym.uid, d.banks, dim))
        return pragmas

    # -- statements -----------------------------------------------------------

    def emit_chain(self, block: S.Block, skip_decls=frozenset()) -> None:
        for group in block.chain:
            for stmt in group:
                self.emit_stmt(stmt, skip_decls)

    def emit_stmt(self, stmt: S.Stmt, skip_decls=frozenset()) -> None:
        if isinstance(stmt, S.Skip) or isinstance(stmt, S.ViewDecl):
            return
        if isinstance(stmt, S.MemDecl):
            if id(stmt) in skip_decls:
                return
            for sym in self.info.resolutions[id(stmt)]:
                dims = "".join(f"[{d.size}]" for d in sym.type.dims)
                self.out(f"{_ctype(sym.type.elem)} {sym.uid}{dims};")
                for pragma in self._plan_memory(sym):
                    self.out(pragma)
                if isinstance(sym.type.elem, S.BitT):
                    self.uses_ap_int = True
            return
        if isinstance(stmt, S.Let):
            t = self.info.let_types[id(stmt)]
            if isinstance(t, S.BitT):
                self.uses_ap_int = True
            self.out(f"{_ctype(t)} {stmt.name} = {self.expr(stmt.init)};")
            return
        if isinstance(stmt, S.Assign):
            self.out(f"{stmt.name} = {self.expr(stmt.value)};")
            return
        if isinstance(stmt, S.Reduce):
            self.out(f"{stmt.name} {stmt.op}= {self.expr(stmt.value)};")
            return
        if isinstance(stmt, S.Store):
            self.out(f"{self.access(stmt.target)} = {self.expr(stmt.value)};")
            return
        if isinstance(stmt, S.ExprStmt):
            self.out(f"{self.expr(stmt.expr)};")
            return
        if isinstance(stmt, S.Block):
            self.out("{")
            self.indent += 1
            self.emit_chain(stmt)
            self.indent -= 1
            self.out("}")
            return
        if isinstance(stmt, S.If):
            self.out(f"if ({self.expr(stmt.cond)}) {{")
            self.indent += 1
            self.emit_chain(stmt.then)
            self.indent -= 1
            if stmt.els is not None:
                self.out("} else {")
                self.indent += 1
                self.emit_chain(stmt.els)
                self.indent -= 1
            self.out("}")
            return
        if isinstance(stmt, S.While):
            self.out(f"while ({self.expr(stmt.cond)}) {{")
            self.indent += 1
            self.emit_chain(stmt.body)
            self.indent -= 1
            self.out("}")
            return
        if isinstance(stmt, S.For):
            it = stmt.iter
            self.out(f"for (int {it} = {stmt.lo}; {it} < {stmt.hi}; {it}++) {{")
            self.indent += 1
            if stmt.unroll > 1:
                self.out(f"#pragma HLS UNROLL factor={stmt.unroll} skip_exit_check")
                self.plan.unrolls.append((it, stmt.unroll))
            self.emit_chain(stmt.body)
            if stmt.combine is not None:
                self.emit_chain(stmt.combine)
            self.indent -= 1
            self.out("}")
            return
        raise TypeError(f"unknown statement {stmt!r}")

    # -- expressions ------------------------------------------------------------

    def expr(self, e: S.Expr) -> str:
        if isinstance(e, (S.Read, S.PhysRead)):
            return self.access(e)
        if isinstance(e, S.BinOp):
            return pp_expr(
                S.BinOp(e.op, self._lowered(e.lhs), self._lowered(e.rhs))
            )
        return pp_expr(e)

    def _lowered(self, e: S.Expr) -> S.Expr:
        """Rewrite view and physical accesses inside an expression tree."""
        if isinstance(e, (S.Read, S.PhysRead)):
            mem, idxs = self.lower_access(e)
            return S.Read(mem, idxs)
        if isinstance(e, S.BinOp):
            return S.BinOp(e.op, self._lowered(e.lhs), self._lowered(e.rhs))
        return e

    def access(self, node) -> str:
        mem, idxs = self.lower_access(node)
        return mem + "".join(f"[{pp_expr(i)}]" for i in idxs)

    def lower_access(self, node) -> tuple[str, list[S.Expr]]:
        """Root memory name plus logical index expressions per dimension."""
        binding = self.info.resolutions[id(node)]
        if isinstance(node, S.PhysRead):
            dims = binding.type.dims
            banks = node.banks
            idxs = node.idxs
            if len(banks) == 1 and len(dims) > 1:
                flat = banks[0]
                out = []
                for d in reversed(dims):
                    out.append(flat % d.banks)
                    flat //= d.banks
                banks = list(reversed(out))
                off = fold_const(idxs[0])
                widths = [d.size // d.banks for d in dims]
                offs = []
                for w in reversed(widths):
                    offs.append(off % w)
                    off //= w
                idxs = [S.NumLit(o, False) for o in reversed(offs)]
            logical = []
            for b, off, d in zip(banks, idxs, dims):
                c = fold_const(off)
                if c is not None:
                    logical.append(S.NumLit(c * d.banks + b, False))
                else:
                    scaled = S.BinOp("*", S.NumLit(d.banks, False), off)
                    logical.append(_fold(S.BinOp("+", scaled, S.NumLit(b, False))))
            return binding.uid, logical
        idxs = list(node.idxs)
        while isinstance(binding, ViewInfo):
            idxs = self._through_view(binding, idxs)
            binding = binding.parent
        return binding.uid, [_fold(i) for i in idxs]

    def _through_view(self, view: ViewInfo, idxs: list[S.Expr]) -> list[S.Expr]:
        kind = view.kind
        if isinstance(kind, S.ShrinkView):
            return idxs
        if isinstance(kind, S.SuffixView):
            out = []
            for i, k, off in zip(idxs, kind.coeffs, kind.offsets):
                scaled = S.BinOp("*", S.NumLit(k, False), off)
                out.append(S.BinOp("+", scaled, i))
            return out
        if isinstance(kind, S.ShiftView):
            return [S.BinOp("+", off, i) for i, off in zip(idxs, kind.offsets)]
        out = []
        pos = 0
        for w, d in zip(kind.factors, view.parent.type.dims):
            if w == 1:
                out.append(idxs[pos])
                pos += 1
                continue
            a, c = idxs[pos], idxs[pos + 1]
            pos += 2
            out.append(S.BinOp("+", S.BinOp("*", S.NumLit(w, False), c), a))
        return out


def _fold(e: S.Expr) -> S.Expr:
    """Light constant folding so fully static indices print as literals."""
    c = fold_const(e)
    if c is not None:
        return S.NumLit(c, False)
    if isinstance(e, S.BinOp):
        lhs, rhs = _fold(e.lhs), _fold(e.rhs)
        if e.op == "+":
            if isinstance(lhs, S.NumLit) and lhs.value == 0:
                return rhs
            if isinstance(rhs, S.NumLit) and rhs.value == 0:
                return lhs
        if e.op == "*":
            if isinstance(lhs, S.NumLit) and lhs.value == 1:
                return rhs
            if isinstance(rhs, S.NumLit) and rhs.value == 1:
                return lhs
        return S.BinOp(e.op, lhs, rhs)
    return e


def emit_cxx(program: S.Program, checked: CheckResult, kernel: str = "kernel") -> str:
    """Pragma-annotated C++ text for an accepted program."""
    return _Emitter(program, checked, kernel).run()


def emit_plan(program: S.Program, checked: CheckResult, kernel: str = "kernel") -> EmitPlan:
    emitter = _Emitter(program, checked, kernel)
    emitter.run()
    return emitter.plan


_PARTITION_RE = re.compile(
    r"#pragma HLS ARRAY_PARTITION variable=(\w+) cyclic factor=(\d+) dim=(\d+)"
)
_RESOURCE_RE = re.compile(r"#pragma HLS resource variable=(\w+) core=(\w+)")
_UNROLL_RE = re.compile(r"#pragma HLS UNROLL factor=(\d+) skip_exit_check")
_FOR_RE = re.compile(r"for \(int (\w+) = ")


def plan_from_cxx(text: str) -> EmitPlan:
    """Recover the pragma metadata from emitted C++; used to cross-check
    emit_plan against the emitted text."""
    plan = EmitPlan()
    last_loop = None
    for line in text.splitlines():
        m = _FOR_RE.search(line)
        if m:
            last_loop = m.group(1)
        m = _PARTITION_RE.search(line)
        if m:
            plan.partitions.append((m.group(1), int(m.group(2)), int(m.group(3))))
        m = _RESOURCE_RE.search(line)
        if m:
            plan.resources.append((m.group(1), m.group(2)))
        m = _UNROLL_RE.search(line)
        if m:
            plan.unrolls.append((last_loop, int(m.group(1))))
    return plan
