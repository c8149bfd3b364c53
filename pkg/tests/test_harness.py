"""Soundness harness tests at small scale; the acceptance suite runs the
full-size batches."""

from __future__ import annotations

import random

from fusec import coreir as C
from fusec.fuzz import (
    GenConfig,
    assert_progress_preservation,
    compare_semantics,
    generate_well_typed,
    mutate_ordered_to_unordered,
    negative_control,
    program_digest,
    run_batch,
    shrink_failing,
)
from fusec.interp import Outcome, run_to_completion


def test_depth_zero_is_trivial():
    p = generate_well_typed(GenConfig(seed=0, max_depth=0))
    v = assert_progress_preservation(p)
    assert v.ok


def test_generated_programs_check_by_construction():
    for seed in range(200):
        generate_well_typed(GenConfig(seed=seed))  # core_check runs inside


def test_generation_deterministic():
    a = generate_well_typed(GenConfig(seed=123))
    b = generate_well_typed(GenConfig(seed=123))
    assert program_digest(a) == program_digest(b)
    assert C.pp_program(a) == C.pp_program(b)
    c = generate_well_typed(GenConfig(seed=124))
    assert program_digest(a) != program_digest(c)


def test_small_batch_clean():
    result = run_batch(100, seed=7)
    assert result.ok
    assert result.completed == 100
    assert result.fuel_exhausted == 0


def test_compare_semantics_examples():
    p = C.CoreProgram({}, C.CLet("x", C.CInt(1)))
    assert compare_semantics(p)
    mems = {"A": C.MemT(C.IntT(), 4)}
    banked_write = C.CoreProgram(
        mems,
        C.COrd(
            C.CStore("A", C.CInt(0), C.CInt(1)),
            C.CStore("A", C.CInt(1), C.CInt(2)),
        ),
    )
    assert compare_semantics(banked_write)


def test_verdict_records_steps_and_digest():
    p = generate_well_typed(GenConfig(seed=5))
    v = assert_progress_preservation(p)
    assert v.steps > 0
    assert len(v.digest) == 16
    assert v.outcome == Outcome.COMPLETED


def test_negative_controls():
    rng = random.Random(3)
    checked_rejects = 0
    for seed in range(150):
        p = generate_well_typed(GenConfig(seed=seed))
        mutant = mutate_ordered_to_unordered(p, rng)
        if mutant is None:
            continue
        assert negative_control(p, random.Random(seed))
        try:
            C.core_check(mutant)
        except C.CoreTypeError:
            checked_rejects += 1
    # The mutation must actually bite on a meaningful fraction of programs,
    # otherwise the control would be vacuous.
    assert checked_rejects >= 10


def test_shrinking_minimizes_a_seeded_failure():
    mems = {"A": C.MemT(C.IntT(), 4)}
    conflict = C.CPar(
        C.CLet("x", C.CRead("A", C.CInt(0))),
        C.CStore("A", C.CInt(1), C.CInt(1)),
    )
    big = C.CoreProgram(
        mems,
        C.CPar(C.CPar(C.CLet("y", C.CInt(5)), C.CSkip()), conflict),
    )

    def still_fails(p):
        return run_to_completion(p).outcome == Outcome.STUCK

    assert still_fails(big)
    shrunk = shrink_failing(big, still_fails)
    assert still_fails(shrunk)
    text = C.pp_program(shrunk)
    assert "let y" not in text  # the irrelevant let was removed


def test_rough_fuzz_accepted_programs_survive_the_pipeline():
    """Structurally random programs (mostly ill-typed) are filtered through
    the checker; whatever it accepts must elaborate, run to completion, and
    match the reference evaluator. Complements the curated pattern generator
    with name collisions, shadowing, and odd nesting."""
    import fusec.surface as S
    from fusec.diagnostics import CheckError, ParseError
    from fusec.gensurface import run_equivalence
    from fusec.parser import parse_program
    from fusec.pretty import pretty_print
    from fusec.typecheck import check_program

    rng = random.Random(424242)
    names = ["A", "B", "M", "x", "y", "n", "v", "acc"]

    def gen_expr(depth):
        k = rng.randrange(6 if depth else 4)
        if k == 0:
            return S.NumLit(rng.randint(-9, 20), False)
        if k == 1:
            return S.NumLit(rng.choice([0.5, 1.0, 2.0]), True)
        if k == 2:
            return S.Var(rng.choice(names))
        if k == 3:
            return S.BoolLit(True)
        if k == 4:
            op = rng.choice(["+", "-", "*", "<", "==", "&&"])
            return S.BinOp(op, gen_expr(depth - 1), gen_expr(depth - 1))
        return S.Read(rng.choice(names), [gen_expr(0) for _ in range(rng.randint(1, 2))])

    def gen_stmt(depth):
        k = rng.randrange(10 if depth else 7)
        if k == 0:
            dims = tuple(
                S.BankSpec(rng.choice([4, 8]), rng.choice([1, 2, 4]))
                for _ in range(rng.randint(1, 2))
            )
            elem = rng.choice([S.BitT(32), S.FloatT()])
            return S.MemDecl([rng.choice(names)], S.MemT(elem, dims, rng.choice([1, 2])))
        if k == 1:
            return S.Let(rng.choice(names), None, gen_expr(1))
        if k == 2:
            return S.Assign(rng.choice(names), gen_expr(1))
        if k == 3:
            return S.Store(S.Read(rng.choice(names), [gen_expr(0)]), gen_expr(1))
        if k == 4:
            return S.ExprStmt(gen_expr(1))
        if k == 5:
            return S.Reduce(rng.choice(names), rng.choice("+-*"), gen_expr(0))
        if k == 6:
            which = rng.randrange(4)
            under, nm = rng.choice(names), rng.choice(names)
            if which == 0:
                return S.ViewDecl(nm, S.ShrinkView([rng.choice([1, 2, 4])]), under)
            if which == 1:
                return S.ViewDecl(nm, S.SuffixView([rng.choice([1, 2, 4])], [gen_expr(0)]), under)
            if which == 2:
                return S.ViewDecl(nm, S.ShiftView([gen_expr(0)]), under)
            return S.ViewDecl(nm, S.SplitView([rng.choice([1, 2])]), under)
        if k == 7:
            comb = None
            if rng.random() < 0.4:
                comb = S.Block([[S.Reduce(rng.choice(names), "+", S.Var(rng.choice(names)))]])
            return S.For(
                rng.choice("ijk"), 0, rng.choice([2, 4, 8]), rng.choice([1, 2, 4]),
                gen_block(depth - 1), comb,
            )
        if k == 8:
            els = gen_block(depth - 1) if rng.random() < 0.5 else None
            return S.If(gen_expr(1), gen_block(depth - 1), els)
        return S.Block(gen_block(depth - 1).chain)

    def gen_block(depth):
        return S.Block(
            [[gen_stmt(depth) for _ in range(rng.randint(1, 3))]
             for _ in range(rng.randint(1, 2))]
        )

    accepted = 0
    for _ in range(12000):
        src = pretty_print(S.Program(gen_block(2)))
        try:
            checked = check_program(parse_program(src))
        except (CheckError, ParseError):
            continue
        accepted += 1
        init = {}
        for sym in checked.info.mem_syms:
            total = 1
            for d in sym.type.dims:
                total *= d.size
            if str(sym.type.elem) == "float":
                init[sym.name] = [rng.randint(-10, 10) / 2 for _ in range(total)]
            else:
                init[sym.name] = [rng.randint(-99, 99) for _ in range(total)]
        # Raises on any pipeline failure. Dynamic view offsets may fault at
        # run time (out-of-range); that is consistent only when both the
        # elaborated program and the reference evaluator fault.
        run_equivalence(src, init, allow_matched_faults=True)
    assert accepted > 200  # the filter must not be vacuous


def test_stuck_program_yields_failing_verdict():
    mems = {"A": C.MemT(C.IntT(), 4)}
    conflict = C.CoreProgram(
        mems,
        C.CPar(
            C.CLet("x", C.CRead("A", C.CInt(0))),
            C.CStore("A", C.CInt(1), C.CInt(1)),
        ),
    )
    v = assert_progress_preservation(conflict)
    assert not v.ok
    assert v.outcome == Outcome.STUCK
    assert v.counterexample is not None
