"""Command-line entry point.

Exit codes: 0 success/accept, 1 type error, 2 parse error, 3 the interpreter
got stuck on a memory conflict, 4 usage error. Diagnostics go to standard
error; data output goes to standard output or the requested file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .coreir import pp_program
from .diagnostics import CheckError, ParseError
from .dse import run_dse
from .elaborate import Elaborator
from .fuzz import GenConfig, run_batch, write_report
from .gensurface import SurfaceGenConfig, generate_surface_program, run_equivalence
from .hlsgen import emit_cxx, emit_plan
from .interp import DEFAULT_FUEL, Outcome, initial_env, run_to_completion, snapshot_memories
from .parser import parse_program
from .refeval import logical_to_banked
from .typecheck import check_program, resolve_program

EXIT_OK = 0
EXIT_TYPE = 1
EXIT_PARSE = 2
EXIT_STUCK = 3
EXIT_USAGE = 4


def _read_source(path: str) -> str:
    with open(path, encoding="utf-8") as f:
        return f.read()


def _report(exc, source: str, path: str) -> None:
    print(exc.diag.render(source, path), file=sys.stderr)


def _parse_and_check(path: str, init_scalars=None, strict=True):
    source = _read_source(path)
    try:
        program = parse_program(source)
    except ParseError as exc:
        _report(exc, source, path)
        raise SystemExit(EXIT_PARSE)
    try:
        checked = (check_program if strict else resolve_program)(program, init_scalars)
    except CheckError as exc:
        _report(exc, source, path)
        raise SystemExit(EXIT_TYPE)
    return source, program, checked


def cmd_check(args) -> int:
    _, _, checked = _parse_and_check(args.file)
    if args.report == "json":
        json.dump(checked.report.to_json(), sys.stdout, indent=2)
        print()
    else:
        r = checked.report
        print(f"accepted: {len(r.memories)} memories, {len(r.loops)} loops, "
              f"{len(r.views)} views")
    return EXIT_OK


def cmd_desugar(args) -> int:
    _, program, checked = _parse_and_check(args.file)
    text = pp_program(Elaborator(program, checked).run())
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _load_init(path):
    if not path:
        return {}, {}
    with open(path) as f:
        data = json.load(f)
    memories = {k: v for k, v in data.items() if isinstance(v, list)}
    scalars = {k: v for k, v in data.items() if not isinstance(v, list)}
    return memories, scalars


def cmd_interp(args) -> int:
    from . import surface as S

    mem_init, scalar_init = _load_init(args.init)
    scalar_types = {}
    for name, val in scalar_init.items():
        if isinstance(val, bool):
            scalar_types[name] = S.BoolT()
        elif isinstance(val, float):
            scalar_types[name] = S.FloatT()
        else:
            scalar_types[name] = S.BitT(32)
    _, program, checked = _parse_and_check(
        args.file, init_scalars=scalar_types, strict=not args.force
    )
    core = Elaborator(program, checked, reserved=scalar_init).run()
    core_init = dict(scalar_init)
    for sym in checked.info.mem_syms:
        if sym.name in mem_init:
            for fb, arr in logical_to_banked(sym.type, list(mem_init[sym.name])).items():
                core_init[f"{sym.uid}_{fb}"] = arr
    result = run_to_completion(core, initial_env(core, core_init), fuel=args.fuel)
    sigma = snapshot_memories(core, result.env)
    sigma.update({k: v for k, v in result.env.items() if not isinstance(v, list)})
    json.dump(
        {
            "outcome": result.outcome.value,
            "steps": result.steps,
            "sigma": sigma,
            "rho": sorted(result.rho),
        },
        sys.stdout,
        indent=2,
    )
    print()
    if result.outcome == Outcome.STUCK:
        print("stuck: simultaneous accesses conflicted on a memory", file=sys.stderr)
        return EXIT_STUCK
    if result.outcome != Outcome.COMPLETED:
        print(f"run ended with {result.outcome.value}", file=sys.stderr)
        return EXIT_TYPE
    return EXIT_OK


def cmd_emit(args) -> int:
    _, program, checked = _parse_and_check(args.file)
    text = emit_cxx(program, checked, kernel=args.kernel)
    out = args.out or str(Path(args.file).with_suffix(".cpp"))
    Path(out).write_text(text)
    print(f"wrote {out}", file=sys.stderr)
    if args.plan == "json":
        plan = emit_plan(program, checked, kernel=args.kernel)
        json.dump(plan.to_json(), sys.stdout, indent=2)
        print()
    return EXIT_OK


def cmd_fuzz(args) -> int:
    if args.surface:
        failures = 0
        for i in range(args.count):
            source, init = generate_surface_program(SurfaceGenConfig(seed=args.seed + i))
            try:
                run_equivalence(source, init)
            except AssertionError as exc:
                failures += 1
                print(f"seed {args.seed + i}: {exc}", file=sys.stderr)
        print(f"{args.count - failures}/{args.count} surface programs preserved semantics")
        return EXIT_OK if failures == 0 else EXIT_TYPE
    result = run_batch(args.count, seed=args.seed, fuel=args.fuel, jobs=args.jobs)
    if args.report:
        write_report(result, args.report)
    print(
        f"{result.count} programs: {result.completed} completed, "
        f"{result.fuel_exhausted} fuel-exhausted, {len(result.violations)} violations"
    )
    return EXIT_OK if result.ok else EXIT_TYPE


def cmd_dse(args) -> int:
    figure = args.figure
    if figure is None and args.out.endswith(".csv"):
        figure = args.out[:-4] + "_histogram.png"
    summary_json = args.summary
    if summary_json is None and args.out.endswith(".csv"):
        summary_json = args.out[:-4] + "_summary.json"
    summary = run_dse(
        args.template,
        args.domains,
        args.out,
        jobs=args.jobs,
        figure=figure,
        summary_json=summary_json,
        reference_accepted=args.reference,
    )
    print(
        f"{summary.total} points: {summary.accepted} accepted "
        f"({summary.ratio:.2%}), {summary.rejected} rejected, "
        f"{summary.parse_errors} parse errors in {summary.duration_s:.1f}s"
    )
    for code, count in sorted(summary.by_code.items()):
        print(f"  {code}: {count}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fusec", description=__doc__)
    ap.add_argument("--version", action="version", version=f"fusec {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="type-check a program")
    p.add_argument("file")
    p.add_argument("--report", choices=["json"], help="dump the acceptance report")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("desugar", help="print the elaborated core program")
    p.add_argument("file")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_desugar)

    p = sub.add_parser("interp", help="run a program under the checked semantics")
    p.add_argument("file")
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p.add_argument("--init", help="JSON file: memory name -> array, scalar -> value")
    p.add_argument(
        "--force",
        action="store_true",
        help="skip the affine checks and let the checked semantics catch conflicts",
    )
    p.set_defaults(fn=cmd_interp)

    p = sub.add_parser("emit", help="emit pragma-annotated HLS C++")
    p.add_argument("file")
    p.add_argument("--out")
    p.add_argument("--kernel", default="kernel")
    p.add_argument("--plan", choices=["json"], help="dump the emit plan")
    p.set_defaults(fn=cmd_emit)

    p = sub.add_parser("fuzz", help="generate programs and validate soundness")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report", help="write a JSON report")
    p.add_argument(
        "--surface",
        action="store_true",
        help="fuzz surface programs through elaboration instead of core programs",
    )
    p.set_defaults(fn=cmd_fuzz)

    p = sub.add_parser("dse", help="sweep a template over parameter domains")
    p.add_argument("--template", required=True)
    p.add_argument("--domains", required=True)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--figure", help="histogram PNG path (defaults next to the CSV)")
    p.add_argument("--summary", help="summary JSON path (defaults next to the CSV)")
    p.add_argument("--reference", type=int, help="reference accepted count to compare")
    p.set_defaults(fn=cmd_dse)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            raise SystemExit(EXIT_USAGE)
        raise
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
