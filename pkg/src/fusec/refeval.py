"""Naive reference evaluator for accepted surface programs.

This is the oracle the elaboration pipeline is tested against, so it shares no
machinery with it: memories are flat logical arrays (no banking), views are
resolved by their logical index arithmetic, and affine bookkeeping is ignored
entirely. Loop copies run in lockstep: within each time step the statements
execute in order, each statement once per unroll copy in increasing copy
order, and a combine block runs as one trailing step per iteration group.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from . import surface as S


class RefFault(Exception):
    pass


def _wrap32(v: int) -> int:
    return (v + (1 << 31)) % (1 << 32) - (1 << 31)


def _wrap_to(v: int, width: int) -> int:
    return (v + (1 << (width - 1))) % (1 << width) - (1 << (width - 1))


def _binop(op: str, a, b):
    if op == "&&":
        return a and b
    if op == "||":
        return a or b
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
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
            raise RefFault("division by zero")
        r = a / b if use_float else a // b
    elif op == "%":
        if b == 0:
            raise RefFault("modulo by zero")
        r = a % b
    else:
        raise RefFault(f"unknown operator {op}")
    if not use_float:
        r = _wrap32(r)
    return r


@dataclass
class MemRt:
    name: str
    type: S.MemT
    data: list

    def dim_sizes(self) -> list[int]:
        return [d.size for d in self.type.dims]


@dataclass
class ViewRt:
    name: str
    kind: S.ViewKind
    parent: Union["MemRt", "ViewRt"]
    dims: list  # logical extent per view dimension


@dataclass
class Scope:
    parent: Optional["Scope"]
    vars: dict = field(default_factory=dict)

    def lookup(self, name: str):
        s = self
        while s is not None:
            if name in s.vars:
                return s.vars[name]
            s = s.parent
        raise RefFault(f"unbound name {name}")

    def assign(self, name: str, value) -> None:
        s = self
        while s is not None:
            if name in s.vars:
                s.vars[name] = value
                return
            s = s.parent
        raise RefFault(f"unbound name {name}")


@dataclass
class Ctx:
    """One lockstep copy: a scope chain with iterator values in scope."""

    scope: Scope


class RefEvaluator:
    def __init__(self, program: S.Program, init: Optional[dict] = None, max_trips: int = 10**6):
        self.program = program
        self.init = init or {}
        self.memories: list[MemRt] = []
        self.max_trips = max_trips

    def run(self) -> dict:
        root = Scope(None)
        for name, val in self.init.items():
            if not isinstance(val, list):
                root.vars[name] = val
        self.exec_chain(self.program.body, [Ctx(root)], new_scope=False)
        return self.snapshot()

    def snapshot(self) -> dict:
        return {m.name: list(m.data) for m in self.memories}

    # -- structure ----------------------------------------------------------

    def exec_chain(self, block: S.Block, ctxs: list[Ctx], new_scope: bool) -> None:
        if new_scope:
            ctxs = [Ctx(Scope(c.scope)) for c in ctxs]
        for group in block.chain:
            for stmt in group:
                self.exec_stmt(stmt, ctxs)

    def exec_stmt(self, stmt: S.Stmt, ctxs: list[Ctx]) -> None:
        if isinstance(stmt, S.Skip):
            return
        if isinstance(stmt, S.MemDecl):
            self.alloc(stmt, ctxs[0])
            return
        if isinstance(stmt, S.ViewDecl):
            parent = ctxs[0].scope.lookup(stmt.underlying)
            dims = self.view_dims(stmt.kind, parent)
            ctxs[0].scope.vars[stmt.name] = ViewRt(stmt.name, stmt.kind, parent, dims)
            return
        if isinstance(stmt, S.Let):
            for ctx in ctxs:
                ctx.scope.vars[stmt.name] = self.eval(stmt.init, ctx)
            return
        if isinstance(stmt, S.Assign):
            for ctx in ctxs:
                ctx.scope.assign(stmt.name, self.eval(stmt.value, ctx))
            return
        if isinstance(stmt, S.Reduce):
            for ctx in ctxs:
                cur = ctx.scope.lookup(stmt.name)
                ctx.scope.assign(stmt.name, _binop(stmt.op, cur, self.eval(stmt.value, ctx)))
            return
        if isinstance(stmt, S.Store):
            for ctx in ctxs:
                value = self.eval(stmt.value, ctx)
                mem, flat = self.locate(stmt.target, ctx)
                self.write(mem, flat, value)
            return
        if isinstance(stmt, S.ExprStmt):
            for ctx in ctxs:
                self.eval(stmt.expr, ctx)
            return
        if isinstance(stmt, S.Block):
            self.exec_chain(stmt, ctxs, new_scope=True)
            return
        if isinstance(stmt, S.If):
            for ctx in ctxs:
                if self.eval(stmt.cond, ctx):
                    self.exec_chain(stmt.then, [ctx], new_scope=True)
                elif stmt.els is not None:
                    self.exec_chain(stmt.els, [ctx], new_scope=True)
            return
        if isinstance(stmt, S.While):
            ctx = ctxs[0]
            trips = 0
            while self.eval(stmt.cond, ctx):
                trips += 1
                if trips > self.max_trips:
                    raise RefFault("while loop exceeded the trip bound")
                self.exec_chain(stmt.body, [ctx], new_scope=True)
            return
        if isinstance(stmt, S.For):
            self.exec_for(stmt, ctxs)
            return
        raise RefFault(f"unknown statement {stmt!r}")

    def exec_for(self, stmt: S.For, ctxs: list[Ctx]) -> None:
        k = stmt.unroll
        trips = (stmt.hi - stmt.lo) // k
        for t in range(trips):
            children: list[Ctx] = []
            for ctx in ctxs:
                for u in range(k):
                    child = Ctx(Scope(ctx.scope))
                    child.scope.vars[stmt.iter] = stmt.lo + k * t + u
                    children.append(child)
            self.exec_chain(stmt.body, children, new_scope=False)
            if stmt.combine is not None:
                self.exec_combine(stmt, ctxs, children, k)

    def exec_combine(self, stmt: S.For, ctxs: list[Ctx], children: list[Ctx], k: int) -> None:
        for ei, ctx in enumerate(ctxs):
            copies = children[ei * k : (ei + 1) * k]
            cscope = Scope(ctx.scope)
            for c_stmt in stmt.combine.stmts():
                if isinstance(c_stmt, S.Reduce) and isinstance(c_stmt.value, S.Var) \
                        and c_stmt.value.name in copies[0].scope.vars:
                    # Register fold over the per-copy values, in copy order.
                    acc = cscope.lookup(c_stmt.name)
                    for copy in copies:
                        acc = _binop(c_stmt.op, acc, copy.scope.vars[c_stmt.value.name])
                    cscope.assign(c_stmt.name, acc)
                else:
                    self.exec_stmt(c_stmt, [Ctx(cscope)])

    # -- memories and views ---------------------------------------------------

    def alloc(self, stmt: S.MemDecl, ctx: Ctx) -> None:
        total = 1
        for d in stmt.type.dims:
            total *= d.size
        if isinstance(stmt.type.elem, S.FloatT):
            fill = 0.0
        elif isinstance(stmt.type.elem, S.BoolT):
            fill = False
        else:
            fill = 0
        for name in stmt.names:
            data = [fill] * total
            given = self.init.get(name)
            # Sibling scopes may reuse a memory name; an init entry applies to
            # every declaration it fits, the rest start zeroed.
            if given is not None and len(given) == total:
                for i, x in enumerate(given):
                    data[i] = self.coerce(stmt.type, x)
            mem = MemRt(name, stmt.type, data)
            ctx.scope.vars[name] = mem
            self.memories.append(mem)

    def coerce(self, mt: S.MemT, x):
        if isinstance(mt.elem, S.FloatT):
            return float(x)
        if isinstance(mt.elem, S.BoolT):
            return bool(x)
        return _wrap_to(int(x), mt.elem.width)

    def write(self, mem: MemRt, flat: int, value) -> None:
        if isinstance(mem.type.elem, S.BitT) and isinstance(value, int) \
                and not isinstance(value, bool):
            value = _wrap_to(value, mem.type.elem.width)
        elif isinstance(mem.type.elem, S.FloatT):
            value = float(value)
        mem.data[flat] = value

    def view_dims(self, kind: S.ViewKind, parent) -> list[int]:
        parent_dims = parent.dim_sizes() if isinstance(parent, MemRt) else parent.dims
        if isinstance(kind, (S.ShrinkView, S.SuffixView, S.ShiftView)):
            return list(parent_dims)
        dims = []
        for w, n in zip(kind.factors, parent_dims):
            if w == 1:
                dims.append(n)
            else:
                dims.append(w)
                dims.append(n // w)
        return dims

    def locate(self, node, ctx: Ctx) -> tuple[MemRt, int]:
        """Resolve an access to its root memory and flat logical element."""
        target = ctx.scope.lookup(node.mem)
        if isinstance(node, S.PhysRead):
            if not isinstance(target, MemRt):
                raise RefFault("physical access to a non-memory")
            dims = target.type.dims
            banks = node.banks
            idxs = [self.eval(i, ctx) for i in node.idxs]
            if len(banks) == 1 and len(dims) > 1:
                flat_bank = banks[0]
                banks = []
                for d in reversed(dims):
                    banks.append(flat_bank % d.banks)
                    flat_bank //= d.banks
                banks = list(reversed(banks))
                flat_off = idxs[0]
                widths = [d.size // d.banks for d in dims]
                offs = []
                for w in reversed(widths):
                    offs.append(flat_off % w)
                    flat_off //= w
                idxs = list(reversed(offs))
            logical = [o * d.banks + b for b, o, d in zip(banks, idxs, dims)]
        else:
            logical = [self.eval(i, ctx) for i in node.idxs]
            while isinstance(target, ViewRt):
                logical = self.through_view(target, logical, ctx)
                target = target.parent
        sizes = target.dim_sizes()
        if len(logical) != len(sizes):
            raise RefFault(f"{node.mem}: wrong index arity")
        flat = 0
        for i, n in zip(logical, sizes):
            if not 0 <= i < n:
                raise RefFault(f"{node.mem}: index {i} out of range [0, {n})")
            flat = flat * n + i
        return target, flat

    def through_view(self, view: ViewRt, logical: list, ctx: Ctx) -> list:
        kind = view.kind
        if isinstance(kind, S.ShrinkView):
            return logical
        if isinstance(kind, S.SuffixView):
            return [
                i + k * self.eval(off, ctx)
                for i, k, off in zip(logical, kind.coeffs, kind.offsets)
            ]
        if isinstance(kind, S.ShiftView):
            return [i + self.eval(off, ctx) for i, off in zip(logical, kind.offsets)]
        out = []
        pos = 0
        for w in kind.factors:
            if w == 1:
                out.append(logical[pos])
                pos += 1
            else:
                a, c = logical[pos], logical[pos + 1]
                pos += 2
                out.append(c * w + a)
        return out

    # -- expressions ------------------------------------------------------------

    def eval(self, e: S.Expr, ctx: Ctx):
        if isinstance(e, S.NumLit):
            return float(e.value) if e.is_float else int(e.value)
        if isinstance(e, S.BoolLit):
            return e.value
        if isinstance(e, S.Var):
            v = ctx.scope.lookup(e.name)
            if isinstance(v, (MemRt, ViewRt)):
                raise RefFault(f"memory {e.name} used as a value")
            return v
        if isinstance(e, S.BinOp):
            return _binop(e.op, self.eval(e.lhs, ctx), self.eval(e.rhs, ctx))
        if isinstance(e, (S.Read, S.PhysRead)):
            mem, flat = self.locate(e, ctx)
            return mem.data[flat]
        raise RefFault(f"unknown expression {e!r}")


def reference_eval(program: S.Program, init: Optional[dict] = None) -> dict:
    """Final logical memory contents under lockstep sequential evaluation."""
    return RefEvaluator(program, init).run()


def logical_to_banked(mt: S.MemT, data: list) -> dict[int, list]:
    """Rearrange a flat logical array into per-flat-bank arrays, matching the
    elaborated layout (bank = index mod banks, offset = index div banks)."""
    dims = mt.dims
    sizes = [d.size for d in dims]
    per_bank: dict[int, list] = {}
    bank_counts = 1
    for d in dims:
        bank_counts *= d.banks
    widths = [d.size // d.banks for d in dims]
    bank_size = 1
    for w in widths:
        bank_size *= w
    for fb in range(bank_counts):
        per_bank[fb] = [None] * bank_size
    for flat_logical in range(len(data)):
        rest = flat_logical
        logical = []
        for n in reversed(sizes):
            logical.append(rest % n)
            rest //= n
        logical = list(reversed(logical))
        fb = 0
        foff = 0
        for i, d, w in zip(logical, dims, widths):
            fb = fb * d.banks + (i % d.banks)
            foff = foff * w + (i // d.banks)
        per_bank[fb][foff] = data[flat_logical]
    return per_bank
