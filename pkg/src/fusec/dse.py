"""Design-space exploration: instantiate a source template over parameter
domains, check every point, and summarize acceptance.

The sweep emits one CSV row per design point in lexicographic domain order
and the summary renders a verdict histogram figure next to the CSV.
"""

from __future__ import annotations

import csv
import itertools
import json
import re
import time
from dataclasses import dataclass
from typing import Optional

from .diagnostics import CheckError, ParseError
from .parser import parse_program
from .typecheck import check_program

_HOLE_RE = re.compile(r"@\{([A-Za-z_][A-Za-z0-9_]*)\}")


@dataclass
class Template:
    text: str

    @property
    def holes(self) -> list[str]:
        seen = []
        for name in _HOLE_RE.findall(self.text):
            if name not in seen:
                seen.append(name)
        return seen

    def instantiate(self, assignment: dict) -> str:
        missing = [h for h in self.holes if h not in assignment]
        if missing:
            raise KeyError(f"missing values for holes: {', '.join(missing)}")
        return _HOLE_RE.sub(lambda m: str(assignment[m.group(1)]), self.text)


@dataclass
class SweepRow:
    assignment: dict
    verdict: str  # "accepted" | "rejected" | "parse_error"
    error_code: str  # "" when accepted
    micros: int


@dataclass
class Summary:
    total: int
    accepted: int
    rejected: int
    parse_errors: int
    by_code: dict
    duration_s: float

    @property
    def ratio(self) -> float:
        return self.accepted / self.total if self.total else 0.0

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "parse_errors": self.parse_errors,
            "acceptance_ratio": self.ratio,
            "by_error_code": dict(sorted(self.by_code.items())),
            "duration_s": self.duration_s,
        }


def check_point(template: Template, assignment: dict) -> SweepRow:
    source = template.instantiate(assignment)
    t0 = time.perf_counter_ns()
    try:
        program = parse_program(source)
        check_program(program)
        verdict, code = "accepted", ""
    except ParseError as exc:
        verdict, code = "parse_error", exc.code
    except CheckError as exc:
        verdict, code = "rejected", exc.code
    micros = (time.perf_counter_ns() - t0) // 1000
    return SweepRow(dict(assignment), verdict, code, micros)


def _points(domains: dict) -> list[dict]:
    names = list(domains)
    return [dict(zip(names, combo)) for combo in itertools.product(*(domains[n] for n in names))]


def _check_point_star(args) -> SweepRow:
    return check_point(*args)


def sweep(template: Template, domains: dict, jobs: int = 1) -> list[SweepRow]:
    """Check every point of the Cartesian product, in lexicographic order."""
    for name, values in domains.items():
        if not values:
            raise ValueError(f"domain {name} is empty")
    points = _points(domains)
    if jobs <= 1:
        return [check_point(template, p) for p in points]
    import multiprocessing as mp

    with mp.Pool(jobs) as pool:
        return pool.map(_check_point_star, [(template, p) for p in points], chunksize=64)


def summarize(rows: list[SweepRow], duration_s: float = 0.0) -> Summary:
    by_code: dict = {}
    accepted = rejected = parse_errors = 0
    for row in rows:
        if row.verdict == "accepted":
            accepted += 1
        elif row.verdict == "rejected":
            rejected += 1
            by_code[row.error_code] = by_code.get(row.error_code, 0) + 1
        else:
            parse_errors += 1
            by_code[row.error_code] = by_code.get(row.error_code, 0) + 1
    return Summary(len(rows), accepted, rejected, parse_errors, by_code, duration_s)


def write_csv(rows: list[SweepRow], domains: dict, path: str) -> None:
    names = list(domains)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(names + ["verdict", "error_code", "micros"])
        for row in rows:
            writer.writerow(
                [row.assignment[n] for n in names]
                + [row.verdict, row.error_code, row.micros]
            )


def render_figure(summary: Summary, path: str, reference_accepted: Optional[int] = None) -> None:
    """Verdict histogram rendered alongside the CSV."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = ["accepted"]
    counts = [summary.accepted]
    colors = ["#2a9d8f"]
    for code, count in sorted(summary.by_code.items()):
        labels.append(code)
        counts.append(count)
        colors.append("#e76f51" if code.startswith("E-") else "#888888")
    fig, ax = plt.subplots(figsize=(7, 3.2))
    bars = ax.bar(range(len(labels)), counts, color=colors)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("design points")
    title = f"{summary.total} points, {summary.accepted} accepted ({summary.ratio:.1%})"
    if reference_accepted is not None:
        title += f"; reference {reference_accepted}"
    ax.set_title(title, fontsize=10)
    for bar, count in zip(bars, counts):
        ax.annotate(
            str(count),
            (bar.get_x() + bar.get_width() / 2, bar.get_height()),
            ha="center",
            va="bottom",
            fontsize=8,
        )
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def run_dse(
    template_path: str,
    domains_path: str,
    out_csv: str,
    jobs: int = 1,
    figure: Optional[str] = None,
    summary_json: Optional[str] = None,
    reference_accepted: Optional[int] = None,
) -> Summary:
    with open(template_path) as f:
        template = Template(f.read())
    with open(domains_path) as f:
        domains = json.load(f)
    t0 = time.time()
    rows = sweep(template, domains, jobs)
    duration = time.time() - t0
    write_csv(rows, domains, out_csv)
    summary = summarize(rows, duration)
    if figure:
        render_figure(summary, figure, reference_accepted)
    if summary_json:
        payload = summary.to_json()
        if reference_accepted is not None:
            payload["reference_accepted"] = reference_accepted
            payload["deviation_from_reference"] = summary.accepted - reference_accepted
        with open(summary_json, "w") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
    return summary
