"""DSE harness tests at small scale; the full 32,000-point sweep runs in the
acceptance suite."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import pytest

from fusec.dse import Template, check_point, render_figure, summarize, sweep, write_csv

from gemm_oracle import DOMAINS, gemm_point_legal

DATA = Path(__file__).resolve().parents[1] / "src" / "fusec" / "data"
GEMM = Template((DATA / "gemm_blocked.fuse.tpl").read_text())


def test_template_holes():
    t = Template("let A: float[@{N} bank @{B}]; // @{N} again")
    assert t.holes == ["N", "B"]
    assert "float[8 bank 2]" in t.instantiate({"N": 8, "B": 2})


def test_missing_hole_raises():
    t = Template("let A: float[@{N}];")
    with pytest.raises(KeyError):
        t.instantiate({})


def test_empty_domain_rejected():
    with pytest.raises(ValueError):
        sweep(Template("skip;"), {"X": []})


def test_single_point_domain():
    rows = sweep(Template("let A: float[@{N}];"), {"N": [8]})
    assert len(rows) == 1
    assert rows[0].verdict == "accepted"


def test_rows_are_lexicographic_and_counted():
    domains = {"A": [1, 2], "B": [3, 4, 5]}
    rows = sweep(Template("skip;"), domains)
    assert len(rows) == 6
    assert [(r.assignment["A"], r.assignment["B"]) for r in rows] == [
        (1, 3), (1, 4), (1, 5), (2, 3), (2, 4), (2, 5)
    ]


def test_gemm_matched_point_accepted():
    row = check_point(GEMM, dict(BANK11=4, BANK12=4, BANK21=4, BANK22=4,
                                 UNROLL1=4, UNROLL2=4, UNROLL3=4))
    assert row.verdict == "accepted"


def test_gemm_baseline_point_accepted():
    row = check_point(GEMM, dict(BANK11=1, BANK12=1, BANK21=1, BANK22=1,
                                 UNROLL1=1, UNROLL2=1, UNROLL3=1))
    assert row.verdict == "accepted"


def test_gemm_unroll_six_rejected():
    # 6 neither divides 8 nor yields a whole shrink factor against 4 banks.
    row = check_point(GEMM, dict(BANK11=4, BANK12=4, BANK21=4, BANK22=4,
                                 UNROLL1=4, UNROLL2=4, UNROLL3=6))
    assert row.verdict == "rejected"
    assert row.error_code in ("E-BANKS", "E-DIVIDES", "E-VIEW")


def test_verdicts_are_reproducible():
    point = dict(BANK11=2, BANK12=2, BANK21=2, BANK22=2,
                 UNROLL1=2, UNROLL2=2, UNROLL3=2)
    a = check_point(GEMM, point)
    b = check_point(GEMM, point)
    assert (a.verdict, a.error_code) == (b.verdict, b.error_code) == ("accepted", "")


def test_subspace_sweep_matches_oracle():
    domains = {
        "BANK11": [1, 2, 3], "BANK12": [2, 4], "BANK21": [1, 4], "BANK22": [1, 2],
        "UNROLL1": [1, 2, 6], "UNROLL2": [1, 4], "UNROLL3": [2, 8],
    }
    rows = sweep(GEMM, domains)
    assert len(rows) == 3 * 2 * 2 * 2 * 3 * 2 * 2
    for row in rows:
        assert (row.verdict == "accepted") == gemm_point_legal(row.assignment), row.assignment


def test_parallel_sweep_matches_serial():
    domains = {
        "BANK11": [1, 2], "BANK12": [2], "BANK21": [1], "BANK22": [1, 2],
        "UNROLL1": [1, 2], "UNROLL2": [1, 2], "UNROLL3": [1],
    }
    serial = sweep(GEMM, domains, jobs=1)
    parallel = sweep(GEMM, domains, jobs=2)
    assert [(r.assignment, r.verdict, r.error_code) for r in serial] == [
        (r.assignment, r.verdict, r.error_code) for r in parallel
    ]


def test_summary_counts_and_histogram_recount(tmp_path):
    domains = {
        "BANK11": [1, 3], "BANK12": [1], "BANK21": [1], "BANK22": [1],
        "UNROLL1": [1], "UNROLL2": [1, 6], "UNROLL3": [1],
    }
    rows = sweep(GEMM, domains)
    summary = summarize(rows)
    assert summary.total == 4
    assert summary.accepted + summary.rejected + summary.parse_errors == 4
    csv_path = tmp_path / "rows.csv"
    write_csv(rows, domains, str(csv_path))
    with open(csv_path) as f:
        recount: dict = {}
        n = 0
        for record in csv.DictReader(f):
            n += 1
            if record["verdict"] != "accepted":
                recount[record["error_code"]] = recount.get(record["error_code"], 0) + 1
        assert n == summary.total
        assert recount == summary.by_code


def test_all_accept_toy_sweep_ratio_one():
    rows = sweep(Template("let A: float[@{N}];"), {"N": [4, 8, 16]})
    summary = summarize(rows)
    assert summary.ratio == 1.0


def test_figure_rendering(tmp_path):
    rows = sweep(GEMM, {
        "BANK11": [1, 3], "BANK12": [1], "BANK21": [1], "BANK22": [1],
        "UNROLL1": [1], "UNROLL2": [1], "UNROLL3": [1],
    })
    summary = summarize(rows)
    fig = tmp_path / "hist.png"
    render_figure(summary, str(fig), reference_accepted=354)
    assert fig.exists() and fig.stat().st_size > 1000


def test_domain_file_matches_oracle_domains():
    with open(DATA / "gemm_domains.json") as f:
        assert json.load(f) == DOMAINS
