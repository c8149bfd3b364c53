"""Soundness harness: generate well-typed core programs and validate the
type system's guarantees empirically.

Programs are generated by construction: the generator threads the typing
contexts exactly as the checking rules do, so every emitted program checks by
design (and is re-checked anyway). While loops count down a protected fresh
counter, so generated programs terminate without leaning on fuel.

Checked properties per program:
  * runs to completion under the checked semantics (never Stuck),
  * every intermediate state steps or is skip (progress), and re-checks under
    contexts rebuilt from the current environment (preservation),
  * iterated small-step agrees with big-step on the final state.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Optional

from . import coreir as C
from .interp import (
    Outcome,
    big_step,
    initial_env,
    run_to_completion,
    small_step,
    snapshot_memories,
)


@dataclass
class GenConfig:
    seed: int = 0
    max_depth: int = 3
    n_memories: int = 3
    mem_size_lo: int = 2
    mem_size_hi: int = 6
    while_prob: float = 0.15
    max_loop_trips: int = 3
    fuel: int = 10**6


@dataclass
class Verdict:
    digest: str
    outcome: Outcome
    steps: int
    agreement: bool
    progress_ok: bool
    preservation_ok: bool
    counterexample: Optional[str] = None

    @property
    def ok(self) -> bool:
        return (
            self.outcome == Outcome.COMPLETED
            and self.agreement
            and self.progress_ok
            and self.preservation_ok
        )

    def to_json(self) -> dict:
        return {
            "digest": self.digest,
            "outcome": self.outcome.value,
            "steps": self.steps,
            "agreement": self.agreement,
            "progress": self.progress_ok,
            "preservation": self.preservation_ok,
            "counterexample": self.counterexample,
        }


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

_ARITH = ["+", "-", "*"]
_CMP = ["<", "<=", ">", ">=", "==", "!="]


class _Gen:
    def __init__(self, cfg: GenConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.fresh_n = 0

    def fresh(self, stem: str) -> str:
        self.fresh_n += 1
        return f"{stem}{self.fresh_n}"

    def gen_program(self) -> C.CoreProgram:
        rng = self.rng
        memories = {}
        for i in range(rng.randint(2, self.cfg.n_memories + 1)):
            size = rng.randint(self.cfg.mem_size_lo, self.cfg.mem_size_hi)
            memories[f"m{i}"] = C.MemT(C.IntT(), size, 32)
        gamma = {name: mt for name, mt in memories.items()}
        delta = frozenset(memories)
        cmd, _, _ = self.gen_seq(self.cfg.max_depth, gamma, delta, rng.randint(3, 6))
        return C.CoreProgram(memories, cmd)

    def gen_seq(self, depth: int, gamma: dict, delta: frozenset, width: int):
        """An unordered chain of commands, threading the contexts through."""
        cmds = []
        for _ in range(width):
            c, gamma, delta = self.gen_cmd(depth, gamma, delta)
            cmds.append(c)
        out = cmds[0]
        for c in cmds[1:]:
            out = C.CPar(out, c)
        return out, gamma, delta

    # -- expressions --------------------------------------------------------

    def int_vars(self, gamma: dict) -> list:
        return [n for n, t in gamma.items() if t == C.IntT()]

    def gen_int_expr(self, depth: int, gamma: dict, delta: frozenset):
        rng = self.rng
        choices = ["lit", "lit"]
        if self.int_vars(gamma):
            choices += ["var", "var"]
        if depth > 0:
            choices += ["bop", "bop"]
            if delta:
                choices += ["read", "read"]
        kind = rng.choice(choices)
        if kind == "var":
            return C.CVar(rng.choice(self.int_vars(gamma))), delta
        if kind == "bop" and depth > 0:
            op = rng.choice(_ARITH + ["/", "%"])
            lhs, delta = self.gen_int_expr(depth - 1, gamma, delta)
            if op in ("/", "%"):
                rhs: C.CExpr = C.CInt(rng.randint(1, 7))  # never a zero divisor
            else:
                rhs, delta = self.gen_int_expr(depth - 1, gamma, delta)
            return C.CBop(op, lhs, rhs), delta
        if kind == "read" and delta:
            mem = rng.choice(sorted(delta))
            size = None
            t = gamma.get(mem)
            size = t.size if isinstance(t, C.MemT) else 1
            return C.CRead(mem, C.CInt(rng.randrange(size))), delta - {mem}
        return C.CInt(rng.randint(-8, 8)), delta

    def gen_bool_expr(self, depth: int, gamma: dict, delta: frozenset):
        lhs, delta = self.gen_int_expr(depth - 1 if depth else 0, gamma, delta)
        rhs, delta = self.gen_int_expr(0, gamma, delta)
        return C.CBop(self.rng.choice(_CMP), lhs, rhs), delta

    # -- commands -------------------------------------------------------------

    def gen_cmd(self, depth: int, gamma: dict, delta: frozenset):
        rng = self.rng
        choices = ["skip", "let", "let", "expr"]
        if self.int_vars(gamma):
            choices += ["assign"]
        if delta:
            choices += ["store", "store"]
        if depth > 0:
            choices += ["par", "par", "par", "ord", "ord", "if"]
            if rng.random() < self.cfg.while_prob:
                choices += ["while"]
        kind = rng.choice(choices)

        if kind == "skip":
            return C.CSkip(), gamma, delta
        if kind == "let":
            e, d2 = self.gen_int_expr(depth, gamma, delta)
            name = self.fresh("x")
            g2 = dict(gamma)
            g2[name] = C.IntT()
            return C.CLet(name, e), g2, d2
        if kind == "expr":
            e, d2 = self.gen_int_expr(depth, gamma, delta)
            return C.CExprCmd(e), gamma, d2
        if kind == "assign":
            # Loop counters are protected: overwriting one could diverge.
            targets = [v for v in self.int_vars(gamma) if not v.startswith("__loop")]
            if not targets:
                return C.CSkip(), gamma, delta
            e, d2 = self.gen_int_expr(depth, gamma, delta)
            return C.CAssign(rng.choice(targets), e), gamma, d2
        if kind == "store":
            e, d2 = self.gen_int_expr(max(depth - 1, 0), gamma, delta)
            live = sorted(d2)
            if not live:
                return C.CSkip(), gamma, delta
            mem = rng.choice(live)
            size = gamma[mem].size
            idx = C.CInt(rng.randrange(size))
            return C.CStore(mem, idx, e), gamma, d2 - {mem}
        if kind == "par":
            return self.gen_seq(depth - 1, gamma, delta, rng.randint(2, 3))
        if kind == "ord":
            # Every arm checks against the same entry resources.
            arms = []
            gam = gamma
            deltas = []
            for _ in range(rng.randint(2, 3)):
                c, gam, d = self.gen_seq(depth - 1, gam, delta, rng.randint(1, 2))
                arms.append(c)
                deltas.append(d)
            out = arms[0]
            for c in arms[1:]:
                out = C.COrd(out, c)
            merged = deltas[0]
            for d in deltas[1:]:
                merged &= d
            return out, gam, merged
        if kind == "if":
            cond, d1 = self.gen_bool_expr(1, gamma, delta)
            cname = self.fresh("c")
            g1 = dict(gamma)
            g1[cname] = C.BoolT()
            c1, _, d2 = self.gen_seq(depth - 1, g1, d1, rng.randint(1, 2))
            c2, _, d3 = self.gen_seq(depth - 1, g1, d1, rng.randint(1, 2))
            return C.CPar(C.CLet(cname, cond), C.CIf(cname, c1, c2)), g1, d2 & d3
        # while: count a protected fresh counter down to keep termination.
        trips = rng.randint(1, self.cfg.max_loop_trips)
        k = self.fresh("__loopk")
        b = self.fresh("__loopb")
        g1 = dict(gamma)
        g1[k] = C.IntT()
        g1[b] = C.BoolT()
        body, _, d_body = self.gen_seq(depth - 1, g1, delta, rng.randint(1, 2))
        update = C.CPar(
            C.CAssign(k, C.CBop("+", C.CVar(k), C.CInt(1))),
            C.CAssign(b, C.CBop("<", C.CVar(k), C.CInt(trips))),
        )
        full_body = C.CPar(body, update)
        prelude = C.CPar(
            C.CLet(k, C.CInt(0)),
            C.CLet(b, C.CBop("<", C.CVar(k), C.CInt(trips))),
        )
        # check_while consumes what one body iteration consumes.
        return C.CPar(prelude, C.CWhile(b, full_body)), g1, d_body


def generate_well_typed(config: GenConfig) -> C.CoreProgram:
    """A core program accepted by core_check, by construction."""
    program = _Gen(config).gen_program()
    C.core_check(program)  # self-check; generation threads contexts identically
    return program


def program_digest(program: C.CoreProgram) -> str:
    return hashlib.sha256(C.pp_program(program).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Property checks
# ---------------------------------------------------------------------------


def _gamma_of_env(program: C.CoreProgram, env: dict) -> dict:
    gamma = {}
    for name, value in env.items():
        if isinstance(value, list):
            continue
        if isinstance(value, bool):
            gamma[name] = C.BoolT()
        elif isinstance(value, float):
            gamma[name] = C.FloatT()
        else:
            gamma[name] = C.IntT()
    for name, mt in program.memories.items():
        gamma[name] = mt
    return gamma


def assert_progress_preservation(program: C.CoreProgram, fuel: int = 10**6) -> Verdict:
    """Step the program, re-checking the residual at every state."""
    digest = program_digest(program)
    delta_star = frozenset(program.memories)
    env = initial_env(program)
    rho: frozenset = frozenset()
    cmd = program.command
    steps = 0
    progress_ok = True
    preservation_ok = True
    outcome = Outcome.COMPLETED
    counterexample = None
    while not isinstance(cmd, C.CSkip):
        if steps >= fuel:
            outcome = Outcome.FUEL_EXHAUSTED
            break
        res = small_step(program, env, rho, cmd)
        if res is None:
            progress_ok = False
            outcome = Outcome.STUCK
            counterexample = C.pp_program(
                C.CoreProgram(program.memories, cmd, program.aliases)
            )
            break
        rho, cmd = res
        steps += 1
        if preservation_ok:
            gamma = _gamma_of_env(program, env)
            delta = delta_star - rho
            try:
                C.check_cmd(gamma, delta, cmd, delta_star)
            except C.CoreTypeError as exc:
                # Record the first violation but keep running so the outcome
                # still classifies the execution.
                preservation_ok = False
                counterexample = f"{exc}\n" + C.pp_program(
                    C.CoreProgram(program.memories, cmd, program.aliases)
                )
    agreement = compare_semantics(program, fuel=fuel)
    return Verdict(digest, outcome, steps, agreement, progress_ok, preservation_ok, counterexample)


def compare_semantics(program: C.CoreProgram, fuel: int = 10**6) -> bool:
    """Big-step against iterated small-step: identical final (sigma, rho)."""
    env_big = initial_env(program)
    _, rho_big, out_big = big_step(program, env_big, fuel=fuel)
    res = run_to_completion(program, initial_env(program), fuel=fuel)
    if out_big == Outcome.FUEL_EXHAUSTED or res.outcome == Outcome.FUEL_EXHAUSTED:
        return out_big == Outcome.FUEL_EXHAUSTED and res.outcome == Outcome.FUEL_EXHAUSTED
    if out_big != res.outcome:
        return False
    if out_big != Outcome.COMPLETED:
        return True  # both stuck at the same classification
    if rho_big != res.rho:
        return False
    scalars_big = {k: v for k, v in env_big.items() if not isinstance(v, list)}
    scalars_small = {k: v for k, v in res.env.items() if not isinstance(v, list)}
    return scalars_big == scalars_small and snapshot_memories(program, env_big) == snapshot_memories(program, res.env)


# ---------------------------------------------------------------------------
# Shrinking and negative controls
# ---------------------------------------------------------------------------


def _subcommands(cmd: C.CCmd):
    if isinstance(cmd, (C.CPar, C.COrd)):
        yield from (("first", cmd.first), ("second", cmd.second))
    elif isinstance(cmd, C.CInterSeq):
        yield from (("first", cmd.first), ("second", cmd.second))
    elif isinstance(cmd, C.CIf):
        yield from (("then", cmd.then), ("els", cmd.els))
    elif isinstance(cmd, C.CWhile):
        yield ("body", cmd.body)


def _replace(cmd: C.CCmd, slot: str, new: C.CCmd) -> C.CCmd:
    if isinstance(cmd, C.CPar):
        return C.CPar(new if slot == "first" else cmd.first, new if slot == "second" else cmd.second)
    if isinstance(cmd, C.COrd):
        return C.COrd(new if slot == "first" else cmd.first, new if slot == "second" else cmd.second)
    if isinstance(cmd, C.CInterSeq):
        return C.CInterSeq(
            new if slot == "first" else cmd.first, cmd.rho, new if slot == "second" else cmd.second
        )
    if isinstance(cmd, C.CIf):
        return C.CIf(cmd.cond, new if slot == "then" else cmd.then, new if slot == "els" else cmd.els)
    if isinstance(cmd, C.CWhile):
        return C.CWhile(cmd.cond, new)
    return cmd


def shrink_failing(program: C.CoreProgram, still_fails) -> C.CoreProgram:
    """Greedy shrink: replace subcommands with skip while the failure
    reproduces. When the original program is well-typed, every shrink step
    must stay well-typed too."""

    def well_typed(p: C.CoreProgram) -> bool:
        try:
            C.core_check(p)
            return True
        except C.CoreTypeError:
            return False

    require_types = well_typed(program)

    def try_all(cmd: C.CCmd):
        for slot, sub in _subcommands(cmd):
            if not isinstance(sub, C.CSkip):
                yield _replace(cmd, slot, C.CSkip())
                for smaller in try_all(sub):
                    yield _replace(cmd, slot, smaller)

    current = program
    improved = True
    while improved:
        improved = False
        for candidate_cmd in try_all(current.command):
            candidate = C.CoreProgram(current.memories, candidate_cmd, current.aliases)
            if require_types and not well_typed(candidate):
                continue
            if still_fails(candidate):
                current = candidate
                improved = True
                break
    return current


def mutate_ordered_to_unordered(program: C.CoreProgram, rng: random.Random) -> Optional[C.CoreProgram]:
    """Flip one ordered composition to unordered; the checker should reject
    the mutant, or the mutant should still run clean (checker not vacuous)."""
    targets: list[tuple] = []

    def walk(cmd: C.CCmd, path: tuple):
        if isinstance(cmd, C.COrd):
            targets.append(path)
        for slot, sub in _subcommands(cmd):
            walk(sub, path + ((cmd, slot),))

    walk(program.command, ())
    if not targets:
        return None
    chosen = rng.choice(targets)

    def rebuild_from(cmd: C.CCmd, path: tuple) -> C.CCmd:
        if not path:
            assert isinstance(cmd, C.COrd)
            return C.CPar(cmd.first, cmd.second)
        (_, slot) = path[0]
        for s, sub in _subcommands(cmd):
            if s == slot:
                return _replace(cmd, slot, rebuild_from(sub, path[1:]))
        return cmd

    mutated = rebuild_from(program.command, chosen)
    return C.CoreProgram(program.memories, mutated, program.aliases)


def negative_control(program: C.CoreProgram, rng: random.Random) -> bool:
    """True when the mutant is either rejected or still completes."""
    mutant = mutate_ordered_to_unordered(program, rng)
    if mutant is None:
        return True
    try:
        C.core_check(mutant)
    except C.CoreTypeError:
        return True
    res = run_to_completion(mutant, fuel=10**6)
    return res.outcome in (Outcome.COMPLETED, Outcome.FUEL_EXHAUSTED)


# ---------------------------------------------------------------------------
# Batch driver
# ---------------------------------------------------------------------------


@dataclass
class BatchResult:
    count: int
    violations: list = field(default_factory=list)
    completed: int = 0
    fuel_exhausted: int = 0
    total_steps: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "count": self.count,
            "completed": self.completed,
            "fuel_exhausted": self.fuel_exhausted,
            "total_steps": self.total_steps,
            "violations": self.violations,
        }


def _run_one(args) -> tuple:
    seed, fuel = args
    program = generate_well_typed(GenConfig(seed=seed, fuel=fuel))
    verdict = assert_progress_preservation(program, fuel=fuel)
    shrunk_text = None
    if not verdict.ok and verdict.outcome != Outcome.FUEL_EXHAUSTED:
        shrunk = shrink_failing(
            program, lambda p: not assert_progress_preservation(p, fuel=fuel).ok
        )
        shrunk_text = C.pp_program(shrunk)
    return verdict, shrunk_text


def run_batch(count: int, seed: int = 0, fuel: int = 10**6, jobs: int = 1) -> BatchResult:
    """Verdicts are a pure function of the seeds, so fanning out across
    workers cannot change the result."""
    work = [(seed + i, fuel) for i in range(count)]
    if jobs <= 1:
        outcomes = map(_run_one, work)
    else:
        import multiprocessing as mp

        pool = mp.Pool(jobs)
        try:
            outcomes = pool.map(_run_one, work, chunksize=32)
        finally:
            pool.close()
            pool.join()
    result = BatchResult(count)
    for verdict, shrunk_text in outcomes:
        result.total_steps += verdict.steps
        if verdict.outcome == Outcome.COMPLETED:
            result.completed += 1
        elif verdict.outcome == Outcome.FUEL_EXHAUSTED:
            result.fuel_exhausted += 1
        if not verdict.ok and verdict.outcome != Outcome.FUEL_EXHAUSTED:
            v = verdict.to_json()
            v["shrunk"] = shrunk_text
            result.violations.append(v)
    return result


def write_report(result: BatchResult, path: str) -> None:
    with open(path, "w") as f:
        json.dump(result.to_json(), f, indent=2)
        f.write("\n")
