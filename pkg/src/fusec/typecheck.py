"""The time-sensitive affine type checker.

Every memory bank grants `ports` access credits per logical time step.
Unordered composition threads credits through; `---` starts the next step and
checks each side against the step-entry state, keeping the most-consumed
outcome. Reads acquire shareable per-location capabilities, writes acquire
use-once ones, and unrolled loops are checked in lockstep: one copy per
unroll index, all charged against the same step.

Views re-arrange banking so that access patterns the hardware can realize
without indirection pass the same checks. Each memory may be reached through
at most one access path per time step.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Union

from . import surface as S
from .diagnostics import CheckError, Span, err
from .parser import fold_const

# ---------------------------------------------------------------------------
# Pseudo-types used during inference
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntLitT:
    """Type of an undotted numeric literal before it commits to bit or float."""


@dataclass(frozen=True)
class RegisterT:
    """A combine register: the tuple of per-copy values of a body variable."""

    inner: S.SurfaceType
    arity: int


CheckT = Union[S.BitT, S.FloatT, S.BoolT, S.IdxT, S.MemT, IntLitT, RegisterT]


def resolve_default(t: CheckT) -> S.SurfaceType:
    if isinstance(t, IntLitT):
        return S.BitT(32)
    if isinstance(t, S.IdxT):
        return S.BitT(32)
    return t  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# Symbols and view metadata
# ---------------------------------------------------------------------------


@dataclass
class MemSym:
    uid: str
    name: str
    type: S.MemT


@dataclass
class ViewInfo:
    uid: str
    name: str
    kind: S.ViewKind
    parent: Union["MemSym", "ViewInfo"]
    type: S.MemT

    @property
    def root(self) -> MemSym:
        p = self.parent
        while isinstance(p, ViewInfo):
            p = p.parent
        return p

    def chain(self) -> list["ViewInfo"]:
        """View links from this view down to (excluding) the root memory."""
        out: list[ViewInfo] = [self]
        p = self.parent
        while isinstance(p, ViewInfo):
            out.append(p)
            p = p.parent
        return out

    def has_shift(self) -> bool:
        return any(isinstance(v.kind, S.ShiftView) for v in self.chain())


@dataclass
class IterSym:
    name: str
    unroll: int
    lo: int
    hi: int


@dataclass
class ScalarSym:
    name: str
    type: S.SurfaceType
    uid: str = ""  # distinguishes rebindings of one name across sibling scopes


Binding = Union[MemSym, ViewInfo, IterSym, ScalarSym]


# ---------------------------------------------------------------------------
# Index terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    value: int


@dataclass(frozen=True)
class Iter:
    name: str
    unroll: int


@dataclass(frozen=True)
class Dyn:
    name: str


Term = Union[Lit, Iter, Dyn]


# ---------------------------------------------------------------------------
# Per-time-step state
# ---------------------------------------------------------------------------


class Region:
    """Credit, capability, and access-path state for one logical time step."""

    __slots__ = ("credits", "read_caps", "write_caps", "paths", "claimed", "usage")

    def __init__(self, credits: Optional[dict] = None):
        self.credits: dict = dict(credits) if credits else {}
        self.read_caps: set = set()
        self.write_caps: set = set()
        self.paths: dict = {}
        self.claimed: set = set()
        self.usage: dict = {}

    def fork(self) -> "Region":
        return Region(self.credits)

    def clear_caps(self) -> None:
        self.read_caps.clear()
        self.write_caps.clear()
        self.paths.clear()
        self.claimed.clear()


def min_credits(states: list[dict]) -> dict:
    merged: dict = {}
    for st in states:
        for key, val in st.items():
            cur = merged.get(key)
            merged[key] = val if cur is None else min(cur, val)
    return merged


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


@dataclass
class AcceptReport:
    memories: list = field(default_factory=list)
    views: list = field(default_factory=list)
    loops: list = field(default_factory=list)
    steps: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "memories": self.memories,
            "views": self.views,
            "loops": self.loops,
            "steps": self.steps,
        }


@dataclass
class CheckInfo:
    """Resolution tables the elaborator and backend consume."""

    mem_syms: list = field(default_factory=list)
    resolutions: dict = field(default_factory=dict)  # id(node) -> Binding
    let_types: dict = field(default_factory=dict)  # id(Let) -> SurfaceType


@dataclass
class CheckResult:
    report: AcceptReport
    info: CheckInfo


# ---------------------------------------------------------------------------
# Checker
# ---------------------------------------------------------------------------


class _Scope:
    __slots__ = ("bindings", "is_for_body", "is_combine")

    def __init__(self, is_for_body: bool = False, is_combine: bool = False):
        self.bindings: dict[str, Binding] = {}
        self.is_for_body = is_for_body
        self.is_combine = is_combine


class Checker:
    """Set strict=False to collect name resolutions without enforcing the
    affine discipline; the interpreter's --force path uses this to run
    programs the type system rejects."""

    def __init__(
        self,
        program: S.Program,
        init_scalars: Optional[dict] = None,
        strict: bool = True,
    ):
        self.program = program
        self.strict = strict
        self.scopes: list[_Scope] = [_Scope()]
        self.loop_stack: list[IterSym] = []  # enclosing For iterators
        self.while_depth = 0
        self.report = AcceptReport()
        self.info = CheckInfo()
        self.step_counter = 0
        self._uid_counts: dict[str, int] = {}
        if init_scalars:
            for name, t in init_scalars.items():
                self.scopes[0].bindings[name] = ScalarSym(name, t, uid=name)

    # -- helpers ------------------------------------------------------------

    def fail(self, code: str, msg: str, span: Span) -> None:
        raise CheckError(err(code, msg, span))

    def affine_fail(self, code: str, msg: str, span: Span) -> bool:
        """Affine-discipline violations are suppressed in relaxed mode."""
        if self.strict:
            raise CheckError(err(code, msg, span))
        return False

    def lookup(self, name: str) -> Optional[Binding]:
        for scope in reversed(self.scopes):
            if name in scope.bindings:
                return scope.bindings[name]
        return None

    def bind(self, name: str, binding: Binding, span: Span) -> None:
        if name in self.scopes[-1].bindings:
            self.fail("E-TYPE", f"{name} is already bound in this scope", span)
        self.scopes[-1].bindings[name] = binding

    def uid(self, name: str) -> str:
        n = self._uid_counts.get(name, 0)
        self._uid_counts[name] = n + 1
        return name if n == 0 else f"{name}__{n}"

    def unrolled_iters(self) -> list[IterSym]:
        return [it for it in self.loop_stack if it.unroll >= 2]

    def in_combine(self) -> bool:
        return any(s.is_combine for s in self.scopes)

    # -- unification --------------------------------------------------------

    def unify(self, a: CheckT, b: CheckT, span: Span, what: str) -> CheckT:
        a_n = S.BitT(32) if isinstance(a, S.IdxT) else a
        b_n = S.BitT(32) if isinstance(b, S.IdxT) else b
        if isinstance(a_n, IntLitT):
            if isinstance(b_n, (S.BitT, S.FloatT, IntLitT)):
                return b_n
        if isinstance(b_n, IntLitT):
            if isinstance(a_n, (S.BitT, S.FloatT)):
                return a_n
        if a_n == b_n and not isinstance(a_n, (S.MemT, RegisterT)):
            return a_n
        self.fail("E-TYPE", f"{what}: {self.type_str(a)} vs {self.type_str(b)}", span)

    @staticmethod
    def type_str(t: CheckT) -> str:
        if isinstance(t, IntLitT):
            return "int literal"
        if isinstance(t, RegisterT):
            return f"combine register of {t.inner}"
        return str(t)

    # -- entry --------------------------------------------------------------

    def run(self) -> CheckResult:
        self.check_chain(self.program.body, Region(), new_scope=False)
        return CheckResult(self.report, self.info)

    # -- command checking ----------------------------------------------------

    def check_chain(self, block: S.Block, entry: Region, new_scope: bool) -> dict:
        """Check an ordered chain. Every arm starts from the entry credits
        with no capabilities; the result keeps the most-consumed credits."""
        if new_scope:
            self.scopes.append(_Scope())
        try:
            if len(block.chain) == 1:
                region = entry.fork()
                region.clear_caps()
                self.step_counter += 1
                self.record_step(region, self.check_group, block.chain[0])
                return region.credits
            results = []
            for group in block.chain:
                region = entry.fork()
                self.step_counter += 1
                self.record_step(region, self.check_group, group)
                results.append(region.credits)
            return min_credits(results)
        finally:
            if new_scope:
                self.scopes.pop()

    def record_step(self, region: Region, fn, arg) -> None:
        step_index = self.step_counter
        fn(arg, region)
        if region.usage:
            self.report.steps.append(
                {
                    "step": step_index,
                    "banks": {m: sorted(bs) for m, bs in sorted(region.usage.items())},
                }
            )

    def check_group(self, stmts: list[S.Stmt], region: Region) -> None:
        for stmt in stmts:
            self.check_stmt(stmt, region)

    def check_stmt(self, stmt: S.Stmt, region: Region) -> None:
        if isinstance(stmt, S.Skip):
            return
        if isinstance(stmt, S.MemDecl):
            self.check_mem_decl(stmt)
            return
        if isinstance(stmt, S.Let):
            self.check_let(stmt, region)
            return
        if isinstance(stmt, S.ViewDecl):
            self.check_view_decl(stmt)
            return
        if isinstance(stmt, S.Assign):
            self.check_assign(stmt, region, reduce_op=None)
            return
        if isinstance(stmt, S.Reduce):
            if self.in_combine():
                self.check_combine_reduce(stmt, region)
            else:
                self.check_assign(stmt, region, reduce_op=stmt.op)
            return
        if isinstance(stmt, S.Store):
            self.check_store(stmt, region)
            return
        if isinstance(stmt, S.ExprStmt):
            self.check_expr(stmt.expr, region)
            return
        if isinstance(stmt, S.Block):
            if stmt.is_single_group():
                # Braces only group statements: same time step, same state.
                self.scopes.append(_Scope())
                try:
                    self.check_group(stmt.chain[0], region)
                finally:
                    self.scopes.pop()
            else:
                region.credits = self.check_chain(stmt, region, new_scope=True)
                region.clear_caps()
            return
        if isinstance(stmt, S.If):
            self.check_if(stmt, region)
            return
        if isinstance(stmt, S.While):
            self.check_while(stmt, region)
            return
        if isinstance(stmt, S.For):
            self.check_for(stmt, region)
            return
        raise TypeError(f"unknown statement {stmt!r}")

    def check_mem_decl(self, stmt: S.MemDecl) -> None:
        if self.loop_stack or self.while_depth:
            self.fail(
                "E-TYPE",
                "memories are fixed physical resources; declare them outside loops",
                stmt.span,
            )
        mt = stmt.type
        for d in mt.dims:
            if d.banks < 1 or d.size < 1:
                self.fail("E-DIVIDES", "sizes and banking factors must be positive", stmt.span)
            if d.size % d.banks != 0:
                self.fail(
                    "E-DIVIDES",
                    f"banking factor {d.banks} does not divide size {d.size}",
                    stmt.span,
                )
        decl_syms = []
        for name in stmt.names:
            sym = MemSym(self.uid(name), name, mt)
            self.bind(name, sym, stmt.span)
            self.info.mem_syms.append(sym)
            decl_syms.append(sym)
            self.report.memories.append(
                {
                    "name": sym.uid,
                    "elem": str(mt.elem),
                    "dims": [{"size": d.size, "banks": d.banks} for d in mt.dims],
                    "ports": mt.ports,
                }
            )
        self.info.resolutions[id(stmt)] = decl_syms

    def check_let(self, stmt: S.Let, region: Region) -> None:
        if isinstance(stmt.init, S.Var):
            target = self.lookup(stmt.init.name)
            if isinstance(target, (MemSym, ViewInfo)):
                self.fail("E-TYPE", "cannot copy memories", stmt.span)
        t = self.check_expr(stmt.init, region)
        if stmt.ann is not None:
            t = self.unify(t, stmt.ann, stmt.span, f"initializer of {stmt.name}")
        resolved = resolve_default(t)
        self.bind(stmt.name, ScalarSym(stmt.name, resolved, uid=self.uid(stmt.name)), stmt.span)
        self.info.let_types[id(stmt)] = resolved

    def check_assign(
        self, stmt: Union[S.Assign, S.Reduce], region: Region, reduce_op: Optional[str]
    ) -> None:
        name, value, span = stmt.name, stmt.value, stmt.span
        binding = self.lookup(name)
        if binding is None:
            self.fail("E-TYPE", f"assignment to unbound variable {name}", span)
        if isinstance(binding, IterSym):
            self.fail("E-TYPE", f"cannot assign to loop iterator {name}", span)
        if not isinstance(binding, ScalarSym):
            self.fail("E-TYPE", f"cannot assign to memory {name}", span)
        if isinstance(binding.type, RegisterT):
            self.fail("E-TYPE", "combine registers may only be consumed by reducers", span)
        self.check_doall_target(name, span)
        t = self.check_expr(value, region)
        if reduce_op is not None and isinstance(binding.type, S.BoolT):
            self.fail("E-TYPE", f"{reduce_op}= needs a numeric target", span)
        self.unify(t, binding.type, span, f"assignment to {name}")
        self.info.resolutions[id(stmt)] = binding

    def check_doall_target(self, name: str, span: Span) -> None:
        """Updating a scalar bound outside a parallel loop body is a
        cross-iteration dependency; combine blocks are the sanctioned way."""
        if self.in_combine():
            return
        crossed_for = False
        for scope in reversed(self.scopes):
            if name in scope.bindings:
                if crossed_for:
                    self.fail(
                        "E-TYPE",
                        f"update of {name} crosses a parallel loop boundary; "
                        "use a combine block",
                        span,
                    )
                return
            if scope.is_for_body:
                crossed_for = True
        self.fail("E-TYPE", f"assignment to unbound variable {name}", span)

    def check_store(self, stmt: S.Store, region: Region) -> None:
        t_val = self.check_expr(stmt.value, region)
        elem = self.resolve_access(stmt.target, region, is_write=True)
        self.unify(t_val, elem, stmt.span, "stored value")

    def check_if(self, stmt: S.If, region: Region) -> None:
        self.check_condition(stmt.cond)
        branches = []
        for block in (stmt.then, stmt.els):
            if block is None:
                branches.append(dict(region.credits))
                continue
            branches.append(self.check_chain(block, region, new_scope=True))
        region.credits = min_credits(branches)
        region.clear_caps()

    def check_while(self, stmt: S.While, region: Region) -> None:
        if any(it.unroll >= 2 for it in self.loop_stack):
            self.fail(
                "E-TYPE", "while loops cannot run under an unrolled loop", stmt.span
            )
        self.check_condition(stmt.cond)
        # The body restores the loop's entry resources at the top of every
        # iteration; whatever it consumes stays consumed for the continuation.
        self.while_depth += 1
        try:
            region.credits = self.check_chain(stmt.body, region, new_scope=True)
        finally:
            self.while_depth -= 1
        region.clear_caps()

    def check_condition(self, cond: S.Expr) -> None:
        if _reads_memory(cond):
            self.fail(
                "E-TYPE",
                "conditions may not access memories; bind the value in an earlier step",
                cond.span,
            )
        throwaway = Region()
        t = self.check_expr(cond, throwaway)
        self.unify(t, S.BoolT(), cond.span, "condition")

    def check_for(self, stmt: S.For, region: Region) -> None:
        it = iterator_index_type(stmt.lo, stmt.hi, stmt.unroll, stmt.span)
        if stmt.unroll >= 2:
            _reject_unfusible(self, stmt.body)
        self.report.loops.append(
            {"iterator": stmt.iter, "lo": stmt.lo, "hi": stmt.hi, "unroll": stmt.unroll}
        )
        iter_sym = IterSym(stmt.iter, stmt.unroll, stmt.lo, stmt.hi)
        scope = _Scope(is_for_body=True)
        scope.bindings[stmt.iter] = iter_sym
        self.scopes.append(scope)
        self.loop_stack.append(iter_sym)
        try:
            body_credits = self.check_chain(stmt.body, region, new_scope=False)
            results = [body_credits]
            if stmt.combine is not None:
                results.append(self.check_combine(stmt, region))
            region.credits = min_credits(results)
            region.clear_caps()
        finally:
            self.loop_stack.pop()
            self.scopes.pop()
        self.info.resolutions[id(stmt)] = iter_sym

    def check_combine(self, stmt: S.For, region: Region) -> dict:
        """The combine block is a trailing time step that folds the per-copy
        values of body-bound scalars into pre-existing accumulators.

        It sees the registers and everything outside the loop, but not the
        loop's own scope: the iterator and non-register body bindings have no
        single per-group value."""
        registers: dict[str, RegisterT] = {}
        for body_stmt in stmt.body.stmts():
            if isinstance(body_stmt, S.Let):
                t = self.info.let_types.get(id(body_stmt))
                if t is not None and S.is_scalar(t):
                    registers[body_stmt.name] = RegisterT(t, stmt.unroll)
        combine_scope = _Scope(is_combine=True)
        for name, reg in registers.items():
            combine_scope.bindings[name] = ScalarSym(name, reg, uid=self.uid(name))  # type: ignore[arg-type]
        for_scope = self.scopes.pop()
        self.scopes.append(combine_scope)
        sub = region.fork()
        sub.clear_caps()
        self.step_counter += 1
        try:
            for c_stmt in stmt.combine.stmts():
                self.check_combine_stmt(c_stmt, sub)
        finally:
            self.scopes.pop()
            self.scopes.append(for_scope)
        return sub.credits

    def check_combine_stmt(self, stmt: S.Stmt, region: Region) -> None:
        if isinstance(stmt, (S.For, S.While, S.If, S.Block, S.Store, S.MemDecl, S.ViewDecl)):
            self.fail(
                "E-TYPE", "combine blocks hold straight-line scalar code only", stmt.span
            )
        if isinstance(stmt, S.Reduce):
            self.check_combine_reduce(stmt, region)
            return
        if isinstance(stmt, (S.Let, S.Assign, S.ExprStmt, S.Skip)):
            expr = getattr(stmt, "init", None) or getattr(stmt, "value", None) or getattr(stmt, "expr", None)
            if expr is not None and self._mentions_register(expr):
                self.fail(
                    "E-TYPE",
                    "combine registers may only be consumed by reducers",
                    stmt.span,
                )
            self.check_stmt(stmt, region)
            return
        raise TypeError(f"unknown combine statement {stmt!r}")

    def check_combine_reduce(self, stmt: S.Reduce, region: Region) -> None:
        target = self.lookup(stmt.name)
        if target is None:
            self.fail("E-TYPE", f"reducer target {stmt.name} is not bound", stmt.span)
        if isinstance(target, ScalarSym) and isinstance(target.type, RegisterT):
            self.fail("E-TYPE", "reducer target must be a plain scalar", stmt.span)
        if not isinstance(target, ScalarSym):
            self.fail("E-TYPE", f"reducer target {stmt.name} must be a scalar", stmt.span)
        if isinstance(stmt.value, S.Var):
            rhs = self.lookup(stmt.value.name)
            if isinstance(rhs, ScalarSym) and isinstance(rhs.type, RegisterT):
                self.unify(rhs.type.inner, target.type, stmt.span, "reducer")
                self.info.resolutions[id(stmt)] = rhs
                return
        if self._mentions_register(stmt.value):
            self.fail(
                "E-TYPE",
                "combine registers may only be consumed by reducers",
                stmt.span,
            )
        t = self.check_expr(stmt.value, region)
        self.unify(t, target.type, stmt.span, "reducer")

    def _mentions_register(self, e: S.Expr) -> bool:
        if isinstance(e, S.Var):
            b = self.lookup(e.name)
            return isinstance(b, ScalarSym) and isinstance(b.type, RegisterT)
        if isinstance(e, S.BinOp):
            return self._mentions_register(e.lhs) or self._mentions_register(e.rhs)
        if isinstance(e, (S.Read, S.PhysRead)):
            return any(self._mentions_register(i) for i in e.idxs)
        return False

    # -- expressions ----------------------------------------------------------

    def check_expr(self, e: S.Expr, region: Region) -> CheckT:
        if isinstance(e, S.NumLit):
            return S.FloatT() if e.is_float else IntLitT()
        if isinstance(e, S.BoolLit):
            return S.BoolT()
        if isinstance(e, S.Var):
            binding = self.lookup(e.name)
            if binding is None:
                self.fail("E-TYPE", f"unbound variable {e.name}", e.span)
            if isinstance(binding, (MemSym, ViewInfo)):
                self.fail("E-TYPE", f"memory {e.name} cannot be used as a value", e.span)
            self.info.resolutions[id(e)] = binding
            if isinstance(binding, IterSym):
                return S.IdxT(0, binding.unroll)
            if isinstance(binding.type, RegisterT):
                self.fail(
                    "E-TYPE", "combine registers may only be consumed by reducers", e.span
                )
            return binding.type
        if isinstance(e, S.BinOp):
            t1 = self.check_expr(e.lhs, region)
            t2 = self.check_expr(e.rhs, region)
            if e.op in ("+", "-", "*", "/", "%"):
                t = self.unify(t1, t2, e.span, f"operands of {e.op}")
                if isinstance(t, S.BoolT):
                    self.fail("E-TYPE", f"{e.op} needs numeric operands", e.span)
                return t
            if e.op in ("<", "<=", ">", ">="):
                t = self.unify(t1, t2, e.span, f"operands of {e.op}")
                if isinstance(t, S.BoolT):
                    self.fail("E-TYPE", f"{e.op} needs numeric operands", e.span)
                return S.BoolT()
            if e.op in ("==", "!="):
                self.unify(t1, t2, e.span, f"operands of {e.op}")
                return S.BoolT()
            self.unify(t1, S.BoolT(), e.span, f"left operand of {e.op}")
            self.unify(t2, S.BoolT(), e.span, f"right operand of {e.op}")
            return S.BoolT()
        if isinstance(e, (S.Read, S.PhysRead)):
            return self.resolve_access(e, region, is_write=False)
        raise TypeError(f"unknown expression {e!r}")

    # -- memory access checking ------------------------------------------------

    def classify_index(self, idx: S.Expr) -> Term:
        c = fold_const(idx)
        if c is not None:
            return Lit(c)
        if isinstance(idx, S.Var):
            binding = self.lookup(idx.name)
            if binding is None:
                self.fail("E-TYPE", f"unbound variable {idx.name}", idx.span)
            if isinstance(binding, IterSym):
                return Iter(idx.name, binding.unroll)
            if isinstance(binding, ScalarSym):
                if isinstance(binding.type, S.BitT):
                    return Dyn(binding.uid or idx.name)
                self.fail("E-INDEX", f"index {idx.name} must be an integer", idx.span)
            self.fail("E-INDEX", f"{idx.name} cannot index a memory", idx.span)
        if isinstance(idx, S.NumLit) and idx.is_float:
            self.fail("E-INDEX", "indices must be integers", idx.span)
        self.affine_fail(
            "E-INDEX",
            "index expressions must be a literal, an iterator, or a plain variable; "
            "use a view for computed patterns",
            idx.span,
        )
        # Relaxed mode: resolve names inside the compound index and treat the
        # whole expression as an opaque dynamic index.
        throwaway = Region()
        self.check_expr(idx, throwaway)
        return Dyn(f"__opaque{id(idx)}")

    def resolve_access(self, node, region: Region, is_write: bool) -> CheckT:
        binding = self.lookup(node.mem)
        if binding is None:
            self.fail("E-TYPE", f"unbound memory {node.mem}", node.span)
        if isinstance(binding, (IterSym, ScalarSym)):
            self.fail("E-TYPE", f"{node.mem} is not a memory", node.span)
        self.info.resolutions[id(node)] = binding
        mt: S.MemT = binding.type
        dims = mt.dims
        is_view = isinstance(binding, ViewInfo)
        root = binding.root if is_view else binding
        path_name = binding.name if is_view else "direct"

        if isinstance(node, S.PhysRead):
            if is_view:
                self.fail("E-TYPE", "physical access applies to memories, not views", node.span)
            terms, demands = self._physical_terms(node, dims)
        else:
            if len(node.idxs) != len(dims):
                self.fail(
                    "E-TYPE",
                    f"{node.mem} has {len(dims)} dimensions, got {len(node.idxs)} indices",
                    node.span,
                )
            terms = [self.classify_index(i) for i in node.idxs]
            demands = []
            for term, d in zip(terms, dims):
                demands.append(self._dim_demand(term, d, node.span))

        # Exactly one access path per memory per time step.
        prev = region.paths.get(root.uid)
        if prev is None:
            region.paths[root.uid] = path_name
        elif prev != path_name:
            self.affine_fail(
                "E-CONSUMED",
                f"{root.name} is already accessed through {prev!r} in this time step",
                node.span,
            )

        shift_path = is_view and binding.has_shift()
        if shift_path and binding.name not in region.claimed:
            # A shift view's first access claims every underlying bank once.
            layout_banks = _flat_banks(root.type.dims)
            for fb in range(layout_banks):
                self._charge(region, root, fb, node.span)
            region.claimed.add(binding.name)

        copy_iters = self.unrolled_iters()
        for combo in itertools.product(*(range(it.unroll) for it in copy_iters)):
            assignment = {it.name: c for it, c in zip(copy_iters, combo)}
            key = (root.uid, path_name, _key_terms(terms, assignment))
            if is_write:
                if key in region.write_caps:
                    self.affine_fail(
                        "E-WRITECAP",
                        f"duplicate write to the same location of {root.name} "
                        "in one time step",
                        node.span,
                    )
                if key in region.read_caps:
                    self.affine_fail(
                        "E-CONSUMED",
                        f"{root.name} location is both read and written in one time step",
                        node.span,
                    )
            else:
                if key in region.read_caps:
                    continue
                if key in region.write_caps:
                    self.affine_fail(
                        "E-CONSUMED",
                        f"{root.name} location is both read and written in one time step",
                        node.span,
                    )
            flat = self._copy_flat_banks(demands, assignment, dims)
            if shift_path:
                for fb in flat:
                    self._charge_view(region, binding, fb, root.type.ports, node.span)
            else:
                root_flat = (
                    self._to_root_flat(binding, demands, assignment)
                    if is_view
                    else flat
                )
                for fb in root_flat:
                    self._charge(region, root, fb, node.span)
            if is_write:
                region.write_caps.add(key)
            else:
                region.read_caps.add(key)
        return mt.elem

    def _physical_terms(self, node: S.PhysRead, dims) -> tuple[list, list]:
        banks = node.banks
        idxs = node.idxs
        if len(banks) == 1 and len(dims) > 1:
            # Flat form M{b}[o]: both the bank and the offset index row-major.
            flat = banks[0]
            total = _flat_banks(dims)
            if not 0 <= flat < total:
                self.fail("E-BANKS", f"bank {flat} out of range", node.span)
            out = []
            for d in reversed(dims):
                out.append(flat % d.banks)
                flat //= d.banks
            banks = list(reversed(out))
            if len(idxs) == 1:
                off = fold_const(idxs[0])
                if off is None:
                    self.fail(
                        "E-INDEX",
                        "flat physical offsets on multi-dimensional memories "
                        "must be literals",
                        node.span,
                    )
                widths = [d.size // d.banks for d in dims]
                total_off = 1
                for w in widths:
                    total_off *= w
                if not 0 <= off < total_off:
                    self.fail("E-INDEX", f"offset {off} out of range", node.span)
                offs = []
                for w in reversed(widths):
                    offs.append(off % w)
                    off //= w
                idxs = [S.NumLit(o, False, span=node.span) for o in reversed(offs)]
        if len(banks) != len(dims):
            self.fail("E-BANKS", "one bank index per dimension required", node.span)
        if len(idxs) != len(dims):
            self.fail("E-TYPE", "one offset per dimension required", node.span)
        terms = []
        demands = []
        for b, off, d in zip(banks, idxs, dims):
            if not 0 <= b < d.banks:
                self.fail("E-BANKS", f"bank {b} out of range [0, {d.banks})", node.span)
            t = self.classify_index(off)
            if isinstance(t, Lit):
                # Fold to the logical element for capability identity.
                logical = t.value * d.banks + b
                if not 0 <= logical < d.size:
                    self.fail("E-INDEX", f"offset {t.value} out of range", node.span)
                terms.append(Lit(logical))
            elif isinstance(t, Dyn):
                self.fail("E-INDEX", "physical offsets must be literals or iterators", off.span)
            else:
                terms.append(("phys", b, t))  # type: ignore[arg-type]
            demands.append({b})
        return terms, demands

    def _dim_demand(self, term: Term, d: S.BankSpec, span: Span) -> object:
        """What banks of this dimension one copy's access can touch."""
        if isinstance(term, Lit):
            if not 0 <= term.value < d.size:
                self.fail("E-INDEX", f"index {term.value} out of range [0, {d.size})", span)
            return {term.value % d.banks}
        if isinstance(term, Iter):
            if term.unroll >= 2:
                if term.unroll != d.banks:
                    self.affine_fail(
                        "E-BANKS",
                        f"unroll factor {term.unroll} does not match banking factor "
                        f"{d.banks}; shrink the view or match the factors",
                        span,
                    )
                    return set(range(d.banks))
                return ("copy", term.name)
            return set(range(d.banks))
        # Dyn: a plain scalar cannot address a banked dimension predictably.
        if d.banks != 1:
            self.affine_fail(
                "E-INDEX",
                f"dynamic index {term.name} on a dimension with {d.banks} banks; "
                "use a view that claims the whole memory",
                span,
            )
            return set(range(d.banks))
        return {0}

    def _copy_flat_banks(self, demands, assignment, dims) -> list[int]:
        per_dim = []
        for dem in demands:
            if isinstance(dem, tuple) and dem[0] == "copy":
                per_dim.append({assignment[dem[1]]})
            else:
                per_dim.append(dem)
        flats = []
        for combo in itertools.product(*per_dim):
            flat = 0
            for d, b in zip(dims, combo):
                flat = flat * d.banks + b
            flats.append(flat)
        return flats

    def _to_root_flat(self, view: ViewInfo, demands, assignment) -> list[int]:
        """Map per-dimension view bank demands down to root flat banks."""
        sets: list[set] = []
        for dem in demands:
            if isinstance(dem, tuple) and dem[0] == "copy":
                sets.append({assignment[dem[1]]})
            else:
                sets.append(set(dem))
        node: Union[MemSym, ViewInfo] = view
        while isinstance(node, ViewInfo):
            sets = _map_demands_up(node, sets)
            node = node.parent
        root_dims = node.type.dims
        flats = []
        for combo in itertools.product(*sets):
            flat = 0
            for d, b in zip(root_dims, combo):
                flat = flat * d.banks + b
            flats.append(flat)
        return sorted(set(flats))

    def _charge(self, region: Region, root: MemSym, flat_bank: int, span: Span) -> None:
        key = (root.uid, flat_bank)
        left = region.credits.get(key, root.type.ports)
        if left <= 0:
            self.affine_fail(
                "E-CONSUMED",
                f"bank {flat_bank} of {root.name} is already consumed in this "
                "time step (no access ports left)",
                span,
            )
        region.credits[key] = left - 1
        region.usage.setdefault(root.uid, set()).add(flat_bank)

    def _charge_view(self, region: Region, view: ViewInfo, flat_bank: int, ports: int, span: Span) -> None:
        key = (f"view:{view.uid}", flat_bank)
        left = region.credits.get(key, ports)
        if left <= 0:
            self.affine_fail(
                "E-CONSUMED",
                f"bank {flat_bank} of view {view.name} has no access ports left "
                "in this time step",
                span,
            )
        region.credits[key] = left - 1

    # -- view declarations ------------------------------------------------------

    def check_view_decl(self, stmt: S.ViewDecl) -> None:
        if any(it.unroll >= 2 for it in self.loop_stack):
            self.fail(
                "E-VIEW",
                "views cannot be declared under an unrolled loop; parallel copies "
                "of a view cannot be proven disjoint (split the memory instead)",
                stmt.span,
            )
        parent = self.lookup(stmt.underlying)
        if parent is None or not isinstance(parent, (MemSym, ViewInfo)):
            self.fail("E-VIEW", f"{stmt.underlying} is not a memory or view", stmt.span)
        pt = parent.type
        kind = stmt.kind
        n = len(pt.dims)
        if isinstance(kind, S.ShrinkView):
            if len(kind.factors) != n:
                self.fail("E-VIEW", f"shrink needs {n} factors", stmt.span)
            dims = []
            for f, d in zip(kind.factors, pt.dims):
                if f < 1:
                    self.fail("E-VIEW", f"shrink factor {f} must be positive", stmt.span)
                if d.banks % f != 0:
                    self.fail(
                        "E-VIEW",
                        f"shrink factor {f} does not divide banking factor {d.banks}",
                        stmt.span,
                    )
                dims.append(S.BankSpec(d.size, d.banks // f))
            vt = S.MemT(pt.elem, tuple(dims), pt.ports)
        elif isinstance(kind, S.SuffixView):
            if len(kind.coeffs) != n:
                self.fail("E-VIEW", f"suffix needs {n} offsets", stmt.span)
            for k, d in zip(kind.coeffs, pt.dims):
                if k != d.banks:
                    self.fail(
                        "E-VIEW",
                        f"suffix coefficient {k} must equal the banking factor {d.banks}",
                        stmt.span,
                    )
            self._check_view_offsets(kind.offsets, stmt.span)
            vt = pt
        elif isinstance(kind, S.ShiftView):
            if len(kind.offsets) != n:
                self.fail("E-VIEW", f"shift needs {n} offsets", stmt.span)
            self._check_view_offsets(kind.offsets, stmt.span)
            vt = pt
        elif isinstance(kind, S.SplitView):
            if len(kind.factors) != n:
                self.fail("E-VIEW", f"split needs {n} factors", stmt.span)
            dims = []
            for w, d in zip(kind.factors, pt.dims):
                if w < 1:
                    self.fail("E-VIEW", f"split factor {w} must be positive", stmt.span)
                if w == 1:
                    dims.append(d)
                    continue
                if d.banks % w != 0:
                    self.fail(
                        "E-VIEW",
                        f"split factor {w} does not divide banking factor {d.banks}",
                        stmt.span,
                    )
                if d.size % w != 0:
                    self.fail(
                        "E-VIEW",
                        f"split factor {w} does not divide size {d.size}",
                        stmt.span,
                    )
                dims.append(S.BankSpec(w, w))
                dims.append(S.BankSpec(d.size // w, d.banks // w))
            vt = S.MemT(pt.elem, tuple(dims), pt.ports)
        else:
            raise TypeError(f"unknown view kind {kind!r}")
        view = ViewInfo(self.uid(stmt.name), stmt.name, kind, parent, vt)
        self.bind(stmt.name, view, stmt.span)
        self.info.resolutions[id(stmt)] = view
        self.report.views.append(
            {"name": view.uid, "kind": type(kind).__name__.replace("View", "").lower(),
             "underlying": stmt.underlying, "type": str(vt)}
        )

    def _check_view_offsets(self, offsets: list[S.Expr], span: Span) -> None:
        throwaway = Region()
        for off in offsets:
            if _reads_memory(off):
                self.fail("E-VIEW", "view offsets may not access memories", span)
            t = self.check_expr(off, throwaway)
            if isinstance(t, (S.BoolT, S.FloatT)):
                self.fail("E-VIEW", "view offsets must be integers", span)


# ---------------------------------------------------------------------------
# Helpers shared with other passes
# ---------------------------------------------------------------------------


def iterator_index_type(lo: int, hi: int, unroll: int, span: Span = Span(0, 0)) -> S.IdxT:
    """idx{0..unroll} for a loop over lo..hi, enforcing divisibility."""
    if hi < lo:
        raise CheckError(err("E-DIVIDES", f"empty or negative range {lo}..{hi}", span))
    if unroll < 1:
        raise CheckError(err("E-DIVIDES", f"unroll factor {unroll} must be positive", span))
    if (hi - lo) % unroll != 0:
        raise CheckError(
            err(
                "E-DIVIDES",
                f"unroll factor {unroll} does not divide the range length {hi - lo}",
                span,
            )
        )
    return S.IdxT(0, unroll)


def _flat_banks(dims) -> int:
    n = 1
    for d in dims:
        n *= d.banks
    return n


def _key_terms(terms, assignment) -> tuple:
    out = []
    for t in terms:
        if isinstance(t, Lit):
            out.append(("l", t.value))
        elif isinstance(t, Iter):
            if t.name in assignment:
                out.append(("c", t.name, assignment[t.name]))
            else:
                out.append(("i", t.name))
        elif isinstance(t, Dyn):
            out.append(("d", t.name))
        else:  # physical with iterator offset
            _, b, inner = t
            if isinstance(inner, Iter) and inner.name in assignment:
                out.append(("p", b, inner.name, assignment[inner.name]))
            else:
                out.append(("p", b, getattr(inner, "name", inner)))
    return tuple(out)


def _map_demands_up(view: ViewInfo, sets: list[set]) -> list[set]:
    """Map per-dimension bank demand sets one view level toward the root."""
    kind = view.kind
    parent_dims = view.parent.type.dims
    if isinstance(kind, (S.SuffixView,)):
        return sets
    if isinstance(kind, S.ShiftView):
        # Rotation by an unknown offset: any view bank may land anywhere, but
        # jointly the copies stay disjoint. Access charging handles shifts at
        # view granularity; for demand purposes claim the full dimension.
        return [set(range(d.banks)) for d in parent_dims]
    if isinstance(kind, S.ShrinkView):
        out = []
        for v_set, f, d in zip(sets, kind.factors, parent_dims):
            view_banks = d.banks // f
            mapped = set()
            for v in v_set:
                for j in range(f):
                    mapped.add(v + j * view_banks)
            out.append(mapped)
        return out
    if isinstance(kind, S.SplitView):
        out = []
        i = 0
        for w, d in zip(kind.factors, parent_dims):
            if w == 1:
                out.append(sets[i])
                i += 1
                continue
            a_set, c_set = sets[i], sets[i + 1]
            i += 2
            out.append({w * c + a for a in a_set for c in c_set})
        return out
    raise TypeError(f"unknown view kind {kind!r}")


def _reads_memory(e: S.Expr) -> bool:
    if isinstance(e, (S.Read, S.PhysRead)):
        return True
    if isinstance(e, S.BinOp):
        return _reads_memory(e.lhs) or _reads_memory(e.rhs)
    return False


def _reject_unfusible(checker: Checker, block: S.Block) -> None:
    """Inside a body that will be unrolled, control flow whose copies cannot
    run in lockstep is rejected."""
    for stmt in block.stmts():
        if isinstance(stmt, S.While):
            checker.fail("E-TYPE", "while loops cannot appear in an unrolled body", stmt.span)
        if isinstance(stmt, S.If):
            for b in (stmt.then, stmt.els):
                if b is not None and not b.is_single_group():
                    checker.fail(
                        "E-TYPE",
                        "branches inside an unrolled body must stay within one time step",
                        stmt.span,
                    )
                if b is not None:
                    _reject_unfusible(checker, b)
        if isinstance(stmt, S.For):
            _reject_unfusible(checker, stmt.body)
        if isinstance(stmt, S.Block):
            _reject_unfusible(checker, stmt)


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def check_program(program: S.Program, init_scalars: Optional[dict] = None) -> CheckResult:
    """Check a parsed program; raises CheckError on the first violation."""
    return Checker(program, init_scalars).run()


def resolve_program(program: S.Program, init_scalars: Optional[dict] = None) -> CheckResult:
    """Name resolution and structural checks only; affine violations pass.

    Feeds the elaborator when the type checker has been bypassed on purpose.
    """
    return Checker(program, init_scalars, strict=False).run()
