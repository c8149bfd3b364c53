"""Desugar accepted surface programs into the core calculus.

Banked memories split into one core memory per flat bank (`A_0`, `A_1`, ...);
a k-ported bank adds alias names (`A_0__p1`, ...) that share storage but count
separately in the affine contexts. Unrolled loops become while loops whose
body composes the lockstep copies of each time step unordered; nested unrolled
loops fuse into one loop over the copy product. View accesses lower to the
underlying memory's bank and offset; identical same-step reads collapse into
one read fanned out through a temporary.

Accesses whose bank is static lower to direct reads and writes. Accesses that
stay dynamic (plain-loop iterators over banked dimensions, shift views) lower
to conditional bank dispatch; the checker has already proven the copies
disjoint, which the core type system cannot re-derive, so those programs are
validated by execution rather than by core_check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Union

from . import coreir as C
from . import surface as S
from .layout import BankLayout
from .parser import fold_const
from .typecheck import CheckResult, IterSym, MemSym, ScalarSym, ViewInfo


# ---------------------------------------------------------------------------
# Linear index expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lin:
    """const + sum(coeff * var) + sum(opaque core exprs)."""

    const: int = 0
    terms: tuple = ()  # ((var, coeff), ...) sorted
    opaques: tuple = ()  # (CExpr, ...) non-linear addends

    @staticmethod
    def of_const(n: int) -> "Lin":
        return Lin(const=n)

    @staticmethod
    def of_var(name: str, coeff: int = 1) -> "Lin":
        return Lin(terms=((name, coeff),))

    @staticmethod
    def opaque(e: C.CExpr) -> "Lin":
        if isinstance(e, C.CInt):
            return Lin(const=e.value)
        if isinstance(e, C.CVar):
            return Lin.of_var(e.name)
        return Lin(opaques=(e,))

    def add(self, other: "Lin") -> "Lin":
        terms: dict = dict(self.terms)
        for v, c in other.terms:
            terms[v] = terms.get(v, 0) + c
        merged = tuple(sorted((v, c) for v, c in terms.items() if c != 0))
        return Lin(self.const + other.const, merged, self.opaques + other.opaques)

    def scale(self, k: int) -> "Lin":
        if k == 0:
            return Lin()
        if k == 1:
            return self
        terms = tuple((v, c * k) for v, c in self.terms)
        opaques = tuple(C.CBop("*", C.CInt(k), o) for o in self.opaques)
        return Lin(self.const * k, terms, opaques)

    def is_dynamic(self) -> bool:
        return bool(self.terms) or bool(self.opaques)

    def static_bank(self, banks: int) -> Optional[int]:
        """The bank this index always lands in, or None when it varies."""
        if banks == 1:
            return 0
        if self.opaques:
            return None
        if any(c % banks != 0 for _, c in self.terms):
            return None
        return self.const % banks

    def div_exact(self, banks: int) -> "Lin":
        """self // banks when static_bank succeeded (all coefficients divide)."""
        return Lin(
            self.const // banks,
            tuple((v, c // banks) for v, c in self.terms),
            self.opaques,
        )

    def to_core(self) -> C.CExpr:
        e: Optional[C.CExpr] = None

        def extend(part: C.CExpr):
            nonlocal e
            e = part if e is None else C.CBop("+", e, part)

        for v, c in self.terms:
            part = C.CVar(v) if c == 1 else C.CBop("*", C.CInt(c), C.CVar(v))
            extend(part)
        for o in self.opaques:
            extend(o)
        if self.const != 0 or e is None:
            extend(C.CInt(self.const))
        return e


# ---------------------------------------------------------------------------
# Copy environments
# ---------------------------------------------------------------------------


@dataclass
class CopyEnv:
    cid: str = ""
    iters: dict = field(default_factory=dict)  # iterator name -> Lin
    renames: dict = field(default_factory=dict)  # surface local -> core name

    def child(self, suffix: str) -> "CopyEnv":
        cid = suffix if not self.cid else f"{self.cid}_{suffix}"
        return CopyEnv(cid, dict(self.iters), dict(self.renames))

    def local_name(self, name: str) -> str:
        return name if not self.cid else f"{name}__{self.cid}"

    def snapshot(self) -> tuple:
        return dict(self.iters), dict(self.renames)

    def restore(self, snap: tuple) -> None:
        self.iters, self.renames = dict(snap[0]), dict(snap[1])


@dataclass
class BankGroup:
    sym: MemSym
    layout: BankLayout
    bank_names: list  # canonical core name per flat bank
    width: int
    elem: C.ScalarT


class ERegion:
    """Read-sharing and port-rotation state for one time step."""

    __slots__ = ("read_temps", "counts")

    def __init__(self):
        self.read_temps: dict = {}
        self.counts: dict = {}


def par_all(cmds: list) -> C.CCmd:
    cmds = [c for c in cmds if not isinstance(c, C.CSkip)]
    if not cmds:
        return C.CSkip()
    out = cmds[0]
    for c in cmds[1:]:
        out = C.CPar(out, c)
    return out


def ord_all(cmds: list) -> C.CCmd:
    cmds = [c for c in cmds if not isinstance(c, C.CSkip)]
    if not cmds:
        return C.CSkip()
    out = cmds[0]
    for c in cmds[1:]:
        out = C.COrd(out, c)
    return out


# ---------------------------------------------------------------------------
# Elaborator
# ---------------------------------------------------------------------------


class Elaborator:
    def __init__(self, program: S.Program, checked: CheckResult, reserved=()):
        self.program = program
        self.info = checked.info
        self.memories: dict[str, C.MemT] = {}
        self.aliases: dict[str, str] = {}
        self.groups: dict[str, BankGroup] = {}  # MemSym.uid -> BankGroup
        self.region = ERegion()
        self.pending: list = []
        self._fresh = 0
        self._used: set = set(reserved)
        self.uses_dispatch = False

    def fresh(self, stem: str) -> str:
        self._fresh += 1
        return f"__{stem}{self._fresh}"

    def declare_local(self, env: CopyEnv, name: str) -> str:
        """Core name for a surface binding; rebindings across sibling scopes
        get distinct names so values and read-sharing keys never collide."""
        base = env.local_name(name)
        candidate = base
        k = 0
        while candidate in self._used:
            k += 1
            candidate = f"{base}__r{k}"
        self._used.add(candidate)
        env.renames[name] = candidate
        env.iters.pop(name, None)  # a local may shadow an outer iterator
        return candidate

    def run(self) -> C.CoreProgram:
        cmd = self.elab_chain(self.program.body.chain, [CopyEnv()])
        return C.CoreProgram(self.memories, cmd, self.aliases)

    # -- structure -----------------------------------------------------------

    def elab_chain(self, chain: list, envs: list) -> C.CCmd:
        arms = []
        for group in chain:
            self.region = ERegion()
            arms.append(self.elab_group(group, envs))
        self.region = ERegion()
        return ord_all(arms)

    def elab_group(self, stmts: list, envs: list) -> C.CCmd:
        out: list = []
        for stmt in stmts:
            out += self.elab_stmt(stmt, envs)
        return par_all(out)

    def elab_stmt(self, stmt: S.Stmt, envs: list) -> list:
        if isinstance(stmt, S.Skip):
            return []
        if isinstance(stmt, S.MemDecl):
            for sym in self.info.resolutions[id(stmt)]:
                self.declare_memory(sym)
            return []
        if isinstance(stmt, S.ViewDecl):
            return []  # views are compile-time only
        if isinstance(stmt, S.Let):
            want = _kind_of_type(self.info.let_types[id(stmt)])
            out = []
            for env in envs:
                self.pending = []
                init = self.elab_expr(stmt.init, env, want)
                name = self.declare_local(env, stmt.name)
                out += self.pending + [C.CLet(name, init)]
            return out
        if isinstance(stmt, S.Assign):
            return self._elab_assign(stmt, None, envs)
        if isinstance(stmt, S.Reduce):
            return self._elab_assign(stmt, stmt.op, envs)
        if isinstance(stmt, S.Store):
            out = []
            for env in envs:
                self.pending = []
                binding = self.info.resolutions[id(stmt.target)]
                elem_kind = _kind_of_type(binding.type.elem)
                value = self.elab_expr(stmt.value, env, elem_kind)
                cmds = self.elab_write(stmt.target, env, value)
                out += self.pending + cmds
            return out
        if isinstance(stmt, S.ExprStmt):
            out = []
            for env in envs:
                self.pending = []
                e = self.elab_expr(stmt.expr, env, None)
                out += self.pending
                if not (C.is_value(e) or isinstance(e, C.CVar)):
                    out.append(C.CExprCmd(e))
            return out
        if isinstance(stmt, S.Block):
            if stmt.is_single_group():
                saved = [env.snapshot() for env in envs]
                cmds = []
                for s in stmt.chain[0]:
                    cmds += self.elab_stmt(s, envs)
                for env, snap in zip(envs, saved):
                    env.restore(snap)
                return cmds
            saved = [env.snapshot() for env in envs]
            cmd = self.elab_chain(stmt.chain, envs)
            for env, snap in zip(envs, saved):
                env.restore(snap)
            self.region = ERegion()
            return [cmd]
        if isinstance(stmt, S.If):
            return self._elab_if(stmt, envs)
        if isinstance(stmt, S.While):
            return self._elab_while(stmt, envs)
        if isinstance(stmt, S.For):
            return self._elab_for(stmt, envs)
        raise TypeError(f"unknown statement {stmt!r}")

    def _elab_assign(self, stmt: Union[S.Assign, S.Reduce], op: Optional[str], envs: list) -> list:
        out = []
        binding = self.info.resolutions.get(id(stmt))
        want = _kind_of_type(binding.type) if isinstance(binding, ScalarSym) else None
        for env in envs:
            self.pending = []
            target = env.renames.get(stmt.name, stmt.name)
            v = self.elab_expr(stmt.value, env, want)
            if op is not None:
                v = C.CBop(op, C.CVar(target), v)
            out += self.pending + [C.CAssign(target, v)]
        return out

    def _elab_if(self, stmt: S.If, envs: list) -> list:
        out = []
        for env in envs:
            self.pending = []
            cond = self.elab_expr(stmt.cond, env, "bool")
            out += self.pending
            cvar = self.fresh("c")
            out.append(C.CLet(cvar, cond))
            saved = env.snapshot()
            then_cmd = self.elab_chain(stmt.then.chain, [env])
            env.restore(saved)
            els_cmd = C.CSkip()
            if stmt.els is not None:
                els_cmd = self.elab_chain(stmt.els.chain, [env])
                env.restore(saved)
            out.append(C.CIf(cvar, then_cmd, els_cmd))
        self.region = ERegion()
        return out

    def _elab_while(self, stmt: S.While, envs: list) -> list:
        env = envs[0]
        self.pending = []
        cond = self.elab_expr(stmt.cond, env, "bool")
        assert not self.pending, "conditions cannot read memories"
        cvar = self.fresh("w")
        saved = env.snapshot()
        body = self.elab_chain(stmt.body.chain, envs)
        env.restore(saved)
        recompute = C.CAssign(cvar, self.elab_expr(stmt.cond, env, "bool"))
        self.region = ERegion()
        return [C.CLet(cvar, cond), C.CWhile(cvar, ord_all([body, recompute]))]

    def _elab_for(self, stmt: S.For, envs: list) -> list:
        k = stmt.unroll
        trips = (stmt.hi - stmt.lo) // k
        if trips == 0:
            return []
        gvar = self.fresh(f"g_{stmt.iter}")
        cvar = self.fresh("w")
        child_envs = []
        for env in envs:
            for u in range(k):
                if k > 1:
                    child = env.child(str(u))
                else:
                    child = CopyEnv(env.cid, dict(env.iters), dict(env.renames))
                if trips == 1:
                    # Fully unrolled: the iterator is a constant per copy.
                    child.iters[stmt.iter] = Lin.of_const(stmt.lo + u)
                else:
                    child.iters[stmt.iter] = Lin.of_var(gvar, k).add(Lin.of_const(stmt.lo + u))
                child_envs.append(child)
        body = self.elab_chain(stmt.body.chain, child_envs)
        arms = [body]
        if stmt.combine is not None:
            arms.append(self._elab_combine(stmt, envs, child_envs, k))
        self.region = ERegion()
        if trips == 1:
            return [ord_all(arms)]
        step = C.CPar(
            C.CAssign(gvar, C.CBop("+", C.CVar(gvar), C.CInt(1))),
            C.CAssign(cvar, C.CBop("<", C.CVar(gvar), C.CInt(trips))),
        )
        arms.append(step)
        return [
            C.CLet(gvar, C.CInt(0)),
            C.CLet(cvar, C.CBop("<", C.CVar(gvar), C.CInt(trips))),
            C.CWhile(cvar, ord_all(arms)),
        ]

    def _elab_combine(self, stmt: S.For, envs: list, child_envs: list, k: int) -> C.CCmd:
        self.region = ERegion()
        out: list = []
        for ei, env in enumerate(envs):
            copies = child_envs[ei * k : (ei + 1) * k]
            saved = env.snapshot()
            for c_stmt in stmt.combine.stmts():
                if isinstance(c_stmt, S.Reduce):
                    reg = self.info.resolutions.get(id(c_stmt))
                    target = env.renames.get(c_stmt.name, c_stmt.name)
                    if reg is not None:  # register fold across the copies
                        acc: C.CExpr = C.CVar(target)
                        for copy in copies:
                            acc = C.CBop(c_stmt.op, acc, C.CVar(copy.renames[reg.name]))
                        out.append(C.CAssign(target, acc))
                    else:
                        self.pending = []
                        v = self.elab_expr(c_stmt.value, env, None)
                        out += self.pending
                        out.append(C.CAssign(target, C.CBop(c_stmt.op, C.CVar(target), v)))
                else:
                    out += self.elab_stmt(c_stmt, [env])
            env.restore(saved)
        return par_all(out)

    # -- memories -------------------------------------------------------------

    def declare_memory(self, sym: MemSym) -> None:
        mt = sym.type
        layout = BankLayout(sym.uid, mt.dims)
        elem = _core_elem(mt.elem)
        width = mt.elem.width if isinstance(mt.elem, S.BitT) else 32
        names = []
        for flat in range(layout.flat_banks):
            base = f"{sym.uid}_{flat}"
            while base in self._used:
                base += "_m"
            self._used.add(base)
            names.append(base)
            self.memories[base] = C.MemT(elem, layout.bank_size, width)
            for p in range(1, mt.ports):
                alias = f"{base}__p{p}"
                self._used.add(alias)
                self.memories[alias] = C.MemT(elem, layout.bank_size, width)
                self.aliases[alias] = base
        self.groups[sym.uid] = BankGroup(sym, layout, names, width, elem)

    def _alias_name(self, group: BankGroup, flat: int, count: int) -> str:
        base = group.bank_names[flat]
        return base if count == 0 else f"{base}__p{count}"

    # -- expressions ------------------------------------------------------------

    def elab_expr(self, e: S.Expr, env: CopyEnv, want: Optional[str]) -> C.CExpr:
        if isinstance(e, S.NumLit):
            if e.is_float or want == "float":
                return C.CFloat(float(e.value))
            return C.CInt(int(e.value))
        if isinstance(e, S.BoolLit):
            return C.CBool(e.value)
        if isinstance(e, S.Var):
            if e.name in env.iters:
                return env.iters[e.name].to_core()
            return C.CVar(env.renames.get(e.name, e.name))
        if isinstance(e, S.BinOp):
            if e.op in ("+", "-", "*", "/", "%"):
                sub_want = want if want in ("float", "int") else self._expr_kind(e)
                return C.CBop(
                    e.op,
                    self.elab_expr(e.lhs, env, sub_want),
                    self.elab_expr(e.rhs, env, sub_want),
                )
            if e.op in ("<", "<=", ">", ">=", "==", "!="):
                sub_want = self._expr_kind(e.lhs) or self._expr_kind(e.rhs)
                return C.CBop(
                    e.op,
                    self.elab_expr(e.lhs, env, sub_want),
                    self.elab_expr(e.rhs, env, sub_want),
                )
            return C.CBop(
                e.op,
                self.elab_expr(e.lhs, env, "bool"),
                self.elab_expr(e.rhs, env, "bool"),
            )
        if isinstance(e, (S.Read, S.PhysRead)):
            return self.elab_read(e, env)
        raise TypeError(f"unknown expression {e!r}")

    def _expr_kind(self, e: S.Expr) -> Optional[str]:
        if isinstance(e, S.NumLit):
            return "float" if e.is_float else None
        if isinstance(e, S.BoolLit):
            return "bool"
        if isinstance(e, S.Var):
            binding = self.info.resolutions.get(id(e))
            if isinstance(binding, IterSym):
                return "int"
            if isinstance(binding, ScalarSym):
                return _kind_of_type(binding.type)
            return None
        if isinstance(e, S.BinOp):
            k1 = self._expr_kind(e.lhs)
            k2 = self._expr_kind(e.rhs)
            if e.op in ("+", "-", "*", "/", "%"):
                return k1 or k2
            return "bool" if e.op in ("==", "!=", "<", "<=", ">", ">=", "&&", "||") else (k1 or k2)
        if isinstance(e, (S.Read, S.PhysRead)):
            binding = self.info.resolutions.get(id(e))
            return _kind_of_type(binding.type.elem) if binding is not None else None
        return None

    # -- access lowering ---------------------------------------------------------

    def resolve_root_indices(self, node, env: CopyEnv) -> tuple[BankGroup, list]:
        """Per-root-dimension logical index Lin expressions for an access."""
        binding = self.info.resolutions[id(node)]
        if isinstance(binding, ViewInfo):
            dims = binding.type.dims
        else:
            dims = binding.type.dims
        if isinstance(node, S.PhysRead):
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
            lins = []
            for b, off, d in zip(banks, idxs, dims):
                off_lin = self._index_lin(off, env)
                lins.append(off_lin.scale(d.banks).add(Lin.of_const(b)))
        else:
            lins = [self._index_lin(i, env) for i in node.idxs]

        if isinstance(binding, ViewInfo):
            for view in binding.chain():
                lins = self._lower_view_level(view, lins, env)
            root = binding.root
        else:
            root = binding
        return self.groups[root.uid], lins

    def _index_lin(self, idx: S.Expr, env: CopyEnv) -> Lin:
        c = fold_const(idx)
        if c is not None:
            return Lin.of_const(c)
        if isinstance(idx, S.Var):
            if idx.name in env.iters:
                return env.iters[idx.name]
            return Lin.of_var(env.renames.get(idx.name, idx.name))
        return Lin.opaque(self.elab_expr(idx, env, "int"))

    def _lower_view_level(self, view: ViewInfo, lins: list, env: CopyEnv) -> list:
        kind = view.kind
        if isinstance(kind, S.ShrinkView):
            return lins
        if isinstance(kind, S.SuffixView):
            out = []
            for lin, k, off in zip(lins, kind.coeffs, kind.offsets):
                off_lin = self._index_lin(off, env).scale(k)
                out.append(lin.add(off_lin))
            return out
        if isinstance(kind, S.ShiftView):
            return [lin.add(self._index_lin(off, env)) for lin, off in zip(lins, kind.offsets)]
        if isinstance(kind, S.SplitView):
            out = []
            i = 0
            for w, d in zip(kind.factors, view.parent.type.dims):
                if w == 1:
                    out.append(lins[i])
                    i += 1
                    continue
                a, c = lins[i], lins[i + 1]
                i += 2
                out.append(c.scale(w).add(a))
            return out
        raise TypeError(f"unknown view kind {kind!r}")

    def _resolve_banks(self, group: BankGroup, lins: list):
        """Split each root dimension into (bank, offset Lin) or mark dynamic."""
        dims = group.layout.dims
        resolved = []
        for lin, d in zip(lins, dims):
            bank = lin.static_bank(d.banks)
            if bank is None:
                resolved.append(("dyn", lin, d))
            else:
                base = lin.add(Lin.of_const(-bank))
                resolved.append(("static", bank, base.div_exact(d.banks)))
        return resolved

    def elab_read(self, node, env: CopyEnv) -> C.CExpr:
        group, lins = self.resolve_root_indices(node, env)
        key = (group.sym.uid, tuple(C.pp_expr(l.to_core()) for l in lins))
        hit = self.region.read_temps.get(key)
        if hit is not None:
            return C.CVar(hit)
        resolved = self._resolve_banks(group, lins)
        tmp = self.fresh("r")
        if all(r[0] == "static" for r in resolved):
            flat, offset = self._flatten(group, resolved)
            name = self._acquire(group, flat)
            self.pending.append(C.CLet(tmp, C.CRead(name, offset.to_core())))
        else:
            default: C.CExpr = (
                C.CFloat(0.0) if isinstance(group.elem, C.FloatT)
                else C.CBool(False) if isinstance(group.elem, C.BoolT)
                else C.CInt(0)
            )
            self.pending.append(C.CLet(tmp, default))
            self._emit_dispatch(group, resolved, kind="read", tmp=tmp)
        self.region.read_temps[key] = tmp
        return C.CVar(tmp)

    def elab_write(self, node, env: CopyEnv, value: C.CExpr) -> list:
        group, lins = self.resolve_root_indices(node, env)
        resolved = self._resolve_banks(group, lins)
        if all(r[0] == "static" for r in resolved):
            flat, offset = self._flatten(group, resolved)
            name = self._acquire(group, flat)
            return [C.CStore(name, offset.to_core(), value)]
        tmp = self.fresh("v")
        self.pending.append(C.CLet(tmp, value))
        cmds_before = len(self.pending)
        self._emit_dispatch(group, resolved, kind="write", tmp=tmp)
        out = self.pending[cmds_before:]
        del self.pending[cmds_before:]
        return out

    def _flatten(self, group: BankGroup, resolved) -> tuple[int, Lin]:
        flat = 0
        offset = Lin()
        for (tag, bank, off), d, width in zip(
            resolved, group.layout.dims, group.layout.offsets_per_dim()
        ):
            flat = flat * d.banks + bank
            offset = offset.scale(width).add(off)
        return flat, offset

    def _acquire(self, group: BankGroup, flat: int) -> str:
        key = (group.sym.uid, flat)
        count = self.region.counts.get(key, 0)
        self.region.counts[key] = count + 1
        return self._alias_name(group, flat, min(count, group.sym.type.ports - 1))

    def _emit_dispatch(self, group: BankGroup, resolved, kind: str, tmp: str) -> None:
        """Nested bank-dispatch conditionals for dynamic dimensions."""
        self.uses_dispatch = True
        dims = group.layout.dims
        widths = group.layout.offsets_per_dim()
        # Bind bank and offset variables for dynamic dims once.
        dyn_vars = []
        parts = []
        for r, d in zip(resolved, dims):
            if r[0] == "static":
                parts.append(("static", r[1], r[2]))
                continue
            lin = r[1]
            idx_e = lin.to_core()
            bvar = self.fresh("b")
            ovar = self.fresh("o")
            self.pending.append(C.CLet(bvar, C.CBop("%", idx_e, C.CInt(d.banks))))
            self.pending.append(C.CLet(ovar, C.CBop("/", idx_e, C.CInt(d.banks))))
            parts.append(("dyn", bvar, Lin.of_var(ovar)))
            dyn_vars.append((bvar, d.banks))

        # Claim alias counts for every bank the access might touch.
        dyn_ranges = [range(d.banks) if r[0] == "dyn" else [r[1]] for r, d in zip(resolved, dims)]
        alias_for: dict[int, str] = {}
        for combo in itertools.product(*dyn_ranges):
            flat = 0
            for d, b in zip(dims, combo):
                flat = flat * d.banks + b
            alias_for[flat] = self._acquire(group, flat)

        def build(i: int, chosen: list) -> C.CCmd:
            if i == len(parts):
                flat = 0
                offset = Lin()
                for (b, off), d, width in zip(chosen, dims, widths):
                    flat = flat * d.banks + b
                    offset = offset.scale(width).add(off)
                name = alias_for[flat]
                if kind == "read":
                    return C.CAssign(tmp, C.CRead(name, offset.to_core()))
                return C.CStore(name, offset.to_core(), C.CVar(tmp))
            tag = parts[i][0]
            if tag == "static":
                return build(i + 1, chosen + [(parts[i][1], parts[i][2])])
            bvar, offlin = parts[i][1], parts[i][2]
            banks = dims[i].banks

            def chain(b: int) -> C.CCmd:
                inner = build(i + 1, chosen + [(b, offlin)])
                if b == banks - 1:
                    return inner
                cvar = self.fresh("c")
                test = C.CLet(cvar, C.CBop("==", C.CVar(bvar), C.CInt(b)))
                return C.CPar(test, C.CIf(cvar, inner, chain(b + 1)))

            return chain(0)

        self.pending.append(build(0, []))


def _core_elem(t) -> C.ScalarT:
    if isinstance(t, S.FloatT):
        return C.FloatT()
    if isinstance(t, S.BoolT):
        return C.BoolT()
    return C.IntT()


def _kind_of_type(t) -> Optional[str]:
    if isinstance(t, S.FloatT):
        return "float"
    if isinstance(t, S.BoolT):
        return "bool"
    if isinstance(t, (S.BitT, S.IdxT)):
        return "int"
    return None


def elaborate(program: S.Program, checked: CheckResult) -> C.CoreProgram:
    """Lower an accepted surface program to the core calculus."""
    return Elaborator(program, checked).run()
