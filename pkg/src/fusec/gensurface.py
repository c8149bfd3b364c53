"""Random accepted surface programs plus the equivalence runner that pits the
elaborated core execution against the reference evaluator.

Programs are assembled from a menu of access patterns that are legal by
construction (unroll factors match banking, views shrink factors to fit, and
so on); the driver joins several patterns into one ordered chain over a
shared memory pool, re-checks the result, and hands back source text plus a
random initialization for every memory.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .coreir import pp_program
from .elaborate import Elaborator
from .interp import Outcome, initial_env, run_to_completion, snapshot_memories
from .parser import parse_program
from .refeval import RefEvaluator, logical_to_banked
from .typecheck import check_program


@dataclass
class SurfaceGenConfig:
    seed: int = 0
    min_patterns: int = 2
    max_patterns: int = 5


@dataclass
class _Mem:
    name: str
    elem: str  # "bit<32>" or "float"
    dims: list  # [(size, banks)]
    ports: int = 1

    @property
    def decl(self) -> str:
        ports = f"{{{self.ports}}}" if self.ports != 1 else ""
        dims = "".join(
            f"[{n} bank {b}]" if b != 1 else f"[{n}]" for n, b in self.dims
        )
        return f"let {self.name}: {self.elem}{ports}{dims};"

    @property
    def total(self) -> int:
        t = 1
        for n, _ in self.dims:
            t *= n
        return t

    def lit(self, rng: random.Random) -> str:
        if self.elem == "float":
            return f"{rng.randint(-8, 8) / 2!r}"
        return str(rng.randint(-9, 9))


class _SurfaceGen:
    def __init__(self, cfg: SurfaceGenConfig):
        self.rng = random.Random(cfg.seed)
        self.cfg = cfg
        self.n = 0

    def fresh(self, stem: str) -> str:
        self.n += 1
        return f"{stem}{self.n}"

    def build_pool(self) -> list[_Mem]:
        rng = self.rng
        pool = [
            _Mem(self.fresh("M"), "bit<32>", [(rng.choice([4, 8]), 1)]),
            _Mem(self.fresh("M"), "bit<32>", [(8, rng.choice([2, 4]))]),
            _Mem(self.fresh("M"), "float", [(rng.choice([8, 12]), rng.choice([1, 2]))]),
            _Mem(self.fresh("M"), "bit<32>", [(16, rng.choice([1, 2, 4]))]),
        ]
        if rng.random() < 0.5:
            pool.append(_Mem(self.fresh("M"), "bit<32>", [(4, 2), (4, 2)]))
        if rng.random() < 0.5:
            pool.append(_Mem(self.fresh("M"), "bit<32>", [(8, 1)], ports=2))
        rng.shuffle(pool)
        return pool

    # -- patterns; each returns the text of one top-level arm or None ---------

    def pick(self, pool, pred) -> Optional[_Mem]:
        options = [m for m in pool if pred(m)]
        return self.rng.choice(options) if options else None

    def pat_direct(self, pool) -> Optional[str]:
        m = self.pick(pool, lambda m: len(m.dims) == 1 and m.elem == "bit<32>")
        if m is None:
            return None
        n, b = m.dims[0]
        i = self.fresh("i")
        c1, c2 = self.rng.randint(1, 5), self.rng.randint(-6, 6)
        unroll = f" unroll {b}" if b > 1 else ""
        return (
            f"for (let {i} = 0..{n}){unroll} {{\n"
            f"  {m.name}[{i}] := {i} * {c1} + {c2};\n"
            f"}}"
        )

    def pat_rmw(self, pool) -> Optional[str]:
        m = self.pick(pool, lambda m: len(m.dims) == 1 and m.ports == 1)
        if m is None:
            return None
        n, b = m.dims[0]
        i = self.fresh("i")
        x = self.fresh("x")
        unroll = f" unroll {b}" if b > 1 else ""
        return (
            f"for (let {i} = 0..{n}){unroll} {{\n"
            f"  let {x} = {m.name}[{i}]\n"
            f"  ---\n"
            f"  {m.name}[{i}] := {x} + {m.lit(self.rng)};\n"
            f"}}"
        )

    def pat_shrink_combine(self, pool) -> Optional[str]:
        m = self.pick(pool, lambda m: len(m.dims) == 1 and m.dims[0][1] in (2, 4)
                      and m.elem == "bit<32>")
        out = self.pick(pool, lambda mm: mm is not m and len(mm.dims) == 1
                        and mm.elem == "bit<32>")
        if m is None or out is None:
            return None
        n, b = m.dims[0]
        u = self.rng.choice([d for d in (1, 2) if b % d == 0 and d < b] or [1])
        factor = b // u
        v, i, x, acc = self.fresh("v"), self.fresh("i"), self.fresh("x"), self.fresh("acc")
        unroll = f" unroll {u}" if u > 1 else ""
        slot = self.rng.randrange(out.dims[0][0])
        return (
            f"let {acc} = 0;\n"
            f"view {v} = shrink {m.name}[by {factor}];\n"
            f"for (let {i} = 0..{n}){unroll} {{\n"
            f"  let {x} = {v}[{i}];\n"
            f"}} combine {{\n"
            f"  {acc} += {x};\n"
            f"}}\n"
            f"---\n"
            f"{out.name}[{slot}] := {acc}"
        )

    def pat_suffix(self, pool) -> Optional[str]:
        m = self.pick(pool, lambda m: len(m.dims) == 1 and m.dims[0][1] > 1)
        out = self.pick(pool, lambda mm: mm is not m and len(mm.dims) == 1
                        and mm.elem == "bit<32>")
        if m is None or out is None or m.elem != "bit<32>":
            return None
        n, b = m.dims[0]
        i, s = self.fresh("i"), self.fresh("s")
        off = self.rng.randrange(b)
        trips = n // b
        if trips > out.dims[0][0]:
            trips = out.dims[0][0]
        return (
            f"for (let {i} = 0..{trips}) {{\n"
            f"  view {s} = suffix {m.name}[by {b}*{i}];\n"
            f"  {out.name}[{i}] := {s}[{off}] + {self.rng.randint(0, 4)};\n"
            f"}}"
        )

    def pat_shift(self, pool) -> Optional[str]:
        m = self.pick(pool, lambda m: len(m.dims) == 1 and m.dims[0][1] > 1
                      and m.elem == "bit<32>")
        out = self.pick(pool, lambda mm: mm is not m and len(mm.dims) == 1
                        and mm.elem == "bit<32>")
        if m is None or out is None:
            return None
        n, b = m.dims[0]
        outer = 2
        if (outer - 1) * (outer - 1) + b > n:
            outer = 1
        i, j, r, x, acc = (self.fresh(c) for c in "ijrxa")
        slot = self.rng.randrange(out.dims[0][0])
        return (
            f"let {acc} = 0;\n"
            f"for (let {i} = 0..{outer}) {{\n"
            f"  view {r} = shift {m.name}[by {i}*{i}];\n"
            f"  for (let {j} = 0..{b}) unroll {b} {{\n"
            f"    let {x} = {r}[{j}];\n"
            f"  }} combine {{\n"
            f"    {acc} += {x};\n"
            f"  }}\n"
            f"}}\n"
            f"---\n"
            f"{out.name}[{slot}] := {acc}"
        )

    def pat_split(self, pool) -> Optional[str]:
        m = self.pick(pool, lambda m: len(m.dims) == 1 and m.dims[0][1] == 4
                      and m.elem == "bit<32>")
        out = self.pick(pool, lambda mm: mm is not m and len(mm.dims) == 1
                        and mm.elem == "bit<32>")
        if m is None or out is None:
            return None
        n, b = m.dims[0]
        w = 2
        sp, i, j, v, acc = (self.fresh(c) for c in ("sp", "i", "j", "v", "acc"))
        slot = self.rng.randrange(out.dims[0][0])
        return (
            f"let {acc} = 0;\n"
            f"view {sp} = split {m.name}[by {w}];\n"
            f"for (let {i} = 0..{n // w}) unroll {b // w} {{\n"
            f"  for (let {j} = 0..{w}) unroll {w} {{\n"
            f"    let {v} = {sp}[{j}][{i}];\n"
            f"  }} combine {{\n"
            f"    {acc} += {v};\n"
            f"  }}\n"
            f"}}\n"
            f"---\n"
            f"{out.name}[{slot}] := {acc}"
        )

    def pat_dot_combine(self, pool) -> Optional[str]:
        pairs = [
            (a, b)
            for a in pool
            for b in pool
            if a is not b and len(a.dims) == 1 and len(b.dims) == 1
            and a.elem == b.elem == "bit<32>" and a.dims[0] == b.dims[0]
        ]
        out = self.pick(pool, lambda mm: len(mm.dims) == 1 and mm.elem == "bit<32>")
        if not pairs or out is None:
            return None
        a, b = self.rng.choice(pairs)
        n, banks = a.dims[0]
        i, v, acc = self.fresh("i"), self.fresh("v"), self.fresh("acc")
        unroll = f" unroll {banks}" if banks > 1 else ""
        slot = self.rng.randrange(out.dims[0][0])
        return (
            f"let {acc} = 0;\n"
            f"for (let {i} = 0..{n}){unroll} {{\n"
            f"  let {v} = {a.name}[{i}] * {b.name}[{i}];\n"
            f"}} combine {{\n"
            f"  {acc} += {v};\n"
            f"}}\n"
            f"---\n"
            f"{out.name}[{slot}] := {acc}"
        )

    def pat_while(self, pool) -> Optional[str]:
        m = self.pick(pool, lambda m: len(m.dims) == 1 and m.dims[0][1] == 1
                      and m.elem == "bit<32>")
        out = self.pick(pool, lambda mm: mm is not m and len(mm.dims) == 1
                        and mm.elem == "bit<32>")
        if m is None or out is None:
            return None
        n, _ = m.dims[0]
        trips = self.rng.randint(1, n)
        k, cond, acc = self.fresh("k"), self.fresh("go"), self.fresh("acc")
        slot = self.rng.randrange(out.dims[0][0])
        return (
            f"let {k} = 0;\n"
            f"let {acc} = 1;\n"
            f"let {cond} = {k} < {trips};\n"
            f"while ({cond}) {{\n"
            f"  {acc} := {acc} + {m.name}[{k}];\n"
            f"  {k} := {k} + 1;\n"
            f"  {cond} := {k} < {trips};\n"
            f"}}\n"
            f"---\n"
            f"{out.name}[{slot}] := {acc}"
        )

    def pat_two_port(self, pool) -> Optional[str]:
        m = self.pick(pool, lambda m: m.ports == 2 and len(m.dims) == 1)
        if m is None:
            return None
        n, _ = m.dims[0]
        l1 = self.rng.randrange(n)
        l2 = (l1 + 1 + self.rng.randrange(n - 1)) % n
        x = self.fresh("x")
        return f"let {x} = {m.name}[{l1}];\n{m.name}[{l2}] := {x} + {m.lit(self.rng)};"

    def pat_phys(self, pool) -> Optional[str]:
        m = self.pick(pool, lambda m: len(m.dims) == 1 and m.dims[0][1] >= 2)
        if m is None:
            return None
        n, b = m.dims[0]
        width = n // b
        o1, o2 = self.rng.randrange(width), self.rng.randrange(width)
        return (
            f"{m.name}{{0}}[{o1}] := {m.lit(self.rng)};\n"
            f"{m.name}{{1}}[{o2}] := {m.lit(self.rng)};"
        )

    def pat_2d(self, pool) -> Optional[str]:
        m = self.pick(pool, lambda m: len(m.dims) == 2)
        if m is None:
            return None
        (n1, _), (n2, b2) = m.dims
        i, j = self.fresh("i"), self.fresh("j")
        unroll = f" unroll {b2}" if b2 > 1 else ""
        return (
            f"for (let {i} = 0..{n1}) {{\n"
            f"  for (let {j} = 0..{n2}){unroll} {{\n"
            f"    {m.name}[{i}][{j}] := {j} * 2 + 1;\n"
            f"  }}\n"
            f"}}"
        )

    def pat_float(self, pool) -> Optional[str]:
        m = self.pick(pool, lambda m: m.elem == "float" and len(m.dims) == 1)
        if m is None:
            return None
        n, b = m.dims[0]
        i, x = self.fresh("i"), self.fresh("x")
        unroll = f" unroll {b}" if b > 1 else ""
        return (
            f"for (let {i} = 0..{n}){unroll} {{\n"
            f"  let {x} = {m.name}[{i}]\n"
            f"  ---\n"
            f"  {m.name}[{i}] := {x} * 0.5 + {m.lit(self.rng)};\n"
            f"}}"
        )

    def pat_if(self, pool) -> Optional[str]:
        m = self.pick(pool, lambda m: len(m.dims) == 1 and m.elem == "bit<32>")
        if m is None:
            return None
        n, _ = m.dims[0]
        c = self.fresh("c")
        l1, l2 = self.rng.randrange(n), self.rng.randrange(n)
        v1, v2 = self.rng.randint(0, 9), self.rng.randint(0, 9)
        return (
            f"let {c} = {self.rng.randint(0, 9)} < {self.rng.randint(0, 9)};\n"
            f"if ({c}) {{\n"
            f"  {m.name}[{l1}] := {v1};\n"
            f"}} else {{\n"
            f"  {m.name}[{l2}] := {v2};\n"
            f"}}"
        )

    def generate(self) -> tuple[str, dict]:
        rng = self.rng
        pool = self.build_pool()
        patterns = [
            self.pat_direct,
            self.pat_rmw,
            self.pat_shrink_combine,
            self.pat_suffix,
            self.pat_shift,
            self.pat_split,
            self.pat_dot_combine,
            self.pat_while,
            self.pat_two_port,
            self.pat_phys,
            self.pat_2d,
            self.pat_float,
            self.pat_if,
        ]
        arms = []
        want = rng.randint(self.cfg.min_patterns, self.cfg.max_patterns)
        attempts = 0
        while len(arms) < want and attempts < 40:
            attempts += 1
            arm = rng.choice(patterns)(pool)
            if arm is not None:
                arms.append(arm)
        decls = "\n".join(m.decl for m in pool)
        source = decls + "\n" + "\n---\n".join(arms) + "\n"
        init = {}
        for m in pool:
            if m.elem == "float":
                init[m.name] = [rng.randint(-20, 20) / 2 for _ in range(m.total)]
            else:
                init[m.name] = [rng.randint(-100, 100) for _ in range(m.total)]
        return source, init


def generate_surface_program(config: SurfaceGenConfig) -> tuple[str, dict]:
    """Source text of an accepted program and a random memory initialization."""
    source, init = _SurfaceGen(config).generate()
    check_program(parse_program(source))  # accepted by construction
    return source, init


def run_equivalence(source: str, init: dict, allow_matched_faults: bool = False) -> None:
    """Elaborate and execute; assert final memories equal the reference
    evaluator's, bank by bank. Raises AssertionError on any mismatch.

    With allow_matched_faults, a runtime fault (e.g. an out-of-range index
    from a dynamic view offset) counts as consistent when both sides fault.
    """
    from .refeval import RefFault

    program = parse_program(source)
    checked = check_program(program)
    elab = Elaborator(program, checked)
    core = elab.run()
    core_init = {}
    for sym in checked.info.mem_syms:
        given = init.get(sym.name)
        total = 1
        for d in sym.type.dims:
            total *= d.size
        if given is not None and len(given) == total:
            for fb, arr in logical_to_banked(sym.type, list(given)).items():
                core_init[f"{sym.uid}_{fb}"] = arr
    res = run_to_completion(core, initial_env(core, core_init))
    ref = RefEvaluator(program, init)
    ref_faulted = False
    try:
        ref.run()
    except RefFault:
        ref_faulted = True
    if res.outcome == Outcome.FAULT or ref_faulted:
        if res.outcome == Outcome.FAULT and ref_faulted:
            if allow_matched_faults:
                return
            raise AssertionError(f"both sides faulted at run time\n{source}")
        raise AssertionError(
            f"fault mismatch: elaborated={res.outcome.value} "
            f"reference={'fault' if ref_faulted else 'ok'}\n{source}"
        )
    if res.outcome != Outcome.COMPLETED:
        raise AssertionError(
            f"elaborated program did not complete: {res.outcome}\n{pp_program(core)}"
        )
    snap = snapshot_memories(core, res.env)
    for sym, refmem in zip(checked.info.mem_syms, ref.memories):
        banked = logical_to_banked(sym.type, refmem.data)
        for fb, arr in banked.items():
            got = snap[f"{sym.uid}_{fb}"]
            if arr != got:
                raise AssertionError(
                    f"{sym.uid} bank {fb}: reference {arr} != elaborated {got}\n{source}"
                )
