"""Core calculus tests: the typing judgment, both semantics, and the
intermediate sequencing form."""

from __future__ import annotations

import pytest

from fusec import coreir as C
from fusec.interp import (
    Outcome,
    big_step,
    initial_env,
    run_to_completion,
    small_step,
    snapshot_memories,
    wrap32,
)

MEMS = {"A": C.MemT(C.IntT(), 4), "B": C.MemT(C.IntT(), 4)}


def prog(cmd, mems=None):
    return C.CoreProgram(dict(mems or MEMS), cmd)


def read(mem, i):
    return C.CRead(mem, C.CInt(i))


CONFLICT = C.CPar(C.CLet("x", read("A", 0)), C.CStore("A", C.CInt(1), C.CInt(1)))
ORDERED = C.COrd(C.CLet("x", read("A", 0)), C.CStore("A", C.CInt(1), C.CInt(1)))


# -- typing -------------------------------------------------------------------


def test_check_conflict_rejected():
    with pytest.raises(C.CoreTypeError):
        C.core_check(prog(CONFLICT))


def test_check_ordered_intersects():
    gamma, delta = C.core_check(prog(ORDERED))
    assert "A" not in delta and "B" in delta
    assert gamma["x"] == C.IntT()


def test_check_skip_identity():
    gamma, delta = C.core_check(prog(C.CSkip()))
    assert delta == frozenset(MEMS)


def test_check_unbound_and_mismatch():
    with pytest.raises(C.CoreTypeError):
        C.core_check(prog(C.CExprCmd(C.CVar("nope"))))
    with pytest.raises(C.CoreTypeError):
        C.core_check(prog(C.CLet("x", C.CBop("+", C.CInt(1), C.CBool(True)))))
    with pytest.raises(C.CoreTypeError):
        C.core_check(prog(C.CIf("A", C.CSkip(), C.CSkip())))


def test_check_while_consumes_body_resources():
    body = C.CExprCmd(read("A", 0))
    p = prog(C.CPar(C.CLet("b", C.CBool(False)), C.CWhile("b", body)))
    _, delta = C.core_check(p)
    assert "A" not in delta and "B" in delta


def test_double_read_same_address_rejected_in_core():
    # The core has no capabilities: elaboration must deduplicate fan-out.
    p = prog(C.CPar(C.CLet("x", read("A", 0)), C.CLet("y", read("A", 0))))
    with pytest.raises(C.CoreTypeError):
        C.core_check(p)


# -- big step ------------------------------------------------------------------


def test_big_step_conflict_sticks():
    env = initial_env(prog(CONFLICT))
    env["A"][0] = 7
    _, _, outcome = big_step(prog(CONFLICT), env)
    assert outcome == Outcome.STUCK


def test_big_step_ordered_runs():
    p = prog(ORDERED)
    env = initial_env(p)
    env["A"][0] = 7
    env2, rho, outcome = big_step(p, env)
    assert outcome == Outcome.COMPLETED
    assert env2["A"][1] == 1
    assert env2["x"] == 7
    assert rho == {"A"}


def test_big_step_skip_identity():
    p = prog(C.CSkip())
    env, rho, outcome = big_step(p)
    assert outcome == Outcome.COMPLETED and rho == frozenset()


def test_big_step_threads_unordered_rho():
    p = prog(C.CPar(C.CExprCmd(read("A", 0)), C.CExprCmd(read("B", 0))))
    _, rho, outcome = big_step(p)
    assert outcome == Outcome.COMPLETED and rho == {"A", "B"}


def test_wrap32_arithmetic():
    assert wrap32(2**31) == -(2**31)
    p = prog(C.CLet("x", C.CBop("+", C.CInt(2**31 - 1), C.CInt(1))))
    env, _, _ = big_step(p)
    assert env["x"] == -(2**31)


def test_division_semantics():
    p = prog(C.CPar(
        C.CLet("q", C.CBop("/", C.CInt(-7), C.CInt(2))),
        C.CLet("r", C.CBop("%", C.CInt(-7), C.CInt(2))),
    ))
    env, _, _ = big_step(p)
    # flooring division: the remainder carries the divisor's sign, so i % b
    # always names a valid bank
    assert env["q"] == -4 and env["r"] == 1


def test_division_by_zero_is_fault_not_stuck():
    p = prog(C.CLet("x", C.CBop("/", C.CInt(1), C.CInt(0))))
    res = run_to_completion(p)
    assert res.outcome == Outcome.FAULT


# -- small step -----------------------------------------------------------------


def test_ordered_steps_to_intermediate_with_entry_rho():
    p = prog(C.CSkip())
    env = initial_env(p)
    rho = frozenset({"B"})
    res = small_step(p, env, rho, ORDERED)
    assert res is not None
    _, c = res
    assert isinstance(c, C.CInterSeq)
    assert c.rho == {"B"}


def test_intermediate_merge_unions_rho():
    p = prog(C.CSkip())
    env = initial_env(p)
    inter = C.CInterSeq(C.CSkip(), frozenset({"A"}), C.CSkip())
    rho, c = small_step(p, env, frozenset({"B"}), inter)
    assert isinstance(c, C.CSkip)
    assert rho == {"A", "B"}


def test_right_side_steps_against_annotation():
    p = prog(C.CSkip())
    env = initial_env(p)
    # Outer rho contains A, but the annotation does not: the read succeeds.
    inter = C.CInterSeq(C.CSkip(), frozenset(), C.CExprCmd(read("A", 0)))
    rho, c = small_step(p, env, frozenset({"A"}), inter)
    assert rho == {"A"}  # outer rho frozen
    assert isinstance(c, C.CInterSeq)
    assert c.rho == {"A"}  # annotation advanced


def test_run_to_completion_classification():
    # divergence: while true skip
    div = C.CPar(
        C.CLet("b", C.CBool(True)),
        C.CWhile("b", C.CSkip()),
    )
    res = run_to_completion(prog(div), fuel=500)
    assert res.outcome == Outcome.FUEL_EXHAUSTED

    res = run_to_completion(prog(CONFLICT))
    assert res.outcome == Outcome.STUCK

    res = run_to_completion(prog(ORDERED))
    assert res.outcome == Outcome.COMPLETED


def test_small_equals_big_on_ordered_program():
    p = prog(ORDERED)
    env_b = initial_env(p)
    env_b["A"][0] = 7
    _, rho_b, _ = big_step(p, env_b)
    env_s = initial_env(p)
    env_s["A"][0] = 7
    res = run_to_completion(p, env_s)
    assert res.outcome == Outcome.COMPLETED
    assert rho_b == res.rho
    assert snapshot_memories(p, env_b) == snapshot_memories(p, res.env)


def test_port_aliases_share_storage():
    mems = {"A_0": C.MemT(C.IntT(), 4), "A_0__p1": C.MemT(C.IntT(), 4)}
    p = C.CoreProgram(
        mems,
        C.CPar(
            C.CStore("A_0", C.CInt(0), C.CInt(5)),
            C.CLet("x", read("A_0__p1", 0)),
        ),
        aliases={"A_0__p1": "A_0"},
    )
    env, rho, outcome = big_step(p)
    assert outcome == Outcome.COMPLETED
    assert env["x"] == 5  # the alias reads through to the same storage
    assert rho == {"A_0", "A_0__p1"}
    assert list(snapshot_memories(p, env)) == ["A_0"]


def test_store_wraps_to_element_width():
    mems = {"A": C.MemT(C.IntT(), 2, width=8)}
    p = C.CoreProgram(mems, C.CStore("A", C.CInt(0), C.CInt(200)))
    env, _, outcome = big_step(p)
    assert outcome == Outcome.COMPLETED
    assert env["A"][0] == 200 - 256


def test_pp_program_roundtrips_visually():
    text = C.pp_program(prog(ORDERED))
    assert "---" in text
    assert "A[1] := 1" in text
    inter = C.pp_program(prog(C.CInterSeq(C.CSkip(), frozenset({"A"}), C.CSkip())))
    assert "~{A}~" in inter
