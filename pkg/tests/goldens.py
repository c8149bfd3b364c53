"""The fourteen golden programs transcribed from the language walkthrough,
with their expected verdicts. Function calls in the originals are replaced by
equivalent arithmetic since the language has no functions."""

# (name, source, expected error code or None for accept)
GOLDENS = [
    (
        "consumed-read",
        """let A: float[10];
let x = A[0];
A[1] := 1;
""",
        "E-CONSUMED",
    ),
    (
        "same-address-double-read",
        """let A: float[10];
let x = A[0];
let y = A[0];
""",
        None,
    ),
    (
        "ordered-restore",
        """let A: float[10];
let x = A[0]
---
A[1] := 1
""",
        None,
    ),
    (
        "b-already-consumed",
        """let A: float[10];  let B: float[10];
{
  let x = A[0] + 1
  ---
  B[1] := A[1] + x
};
let y = B[0];
""",
        "E-CONSUMED",
    ),
    (
        "physical-bank-writes",
        """let A: float[10 bank 2];
A{0}[0] := 1;
A{1}[0] := 2;
""",
        None,
    ),
    (
        "two-ported-read-write",
        """let A: float{2}[10];
let x = A[0];
A[1] := x + 1;
""",
        None,
    ),
    (
        "insufficient-banks",
        """let A: float[10];
for (let i = 0..10) unroll 2 {
  A[i] := 1.0;
}
""",
        "E-BANKS",
    ),
    (
        "lockstep-two-step-loop",
        """let A: float[10 bank 2];
for (let i = 0..10) unroll 2 {
  let x = A[i]
  ---
  let y = x + A[0];
}
""",
        None,
    ),
    (
        "nested-write-capability",
        """let A: float[8 bank 4][10 bank 5];
for (let i = 0..8) {
  for (let j = 0..10) unroll 5 {
    let x = A[i][0]
    ---
    A[i][0] := x + 1.0;
  }
}
""",
        "E-WRITECAP",
    ),
    (
        "combine-dot-product",
        """let A: float[10 bank 2]; let B: float[10 bank 2];
let dot = 0.0;
for (let i = 0..10) unroll 2 {
  let v = A[i] * B[i];
} combine {
  dot += v;
}
""",
        None,
    ),
    (
        "shrink-view",
        """let A: float[8 bank 4];
view sh = shrink A[by 2];
for (let i = 0..8) unroll 2 {
  sh[i];
}
""",
        None,
    ),
    (
        "suffix-view",
        """let A: float[8 bank 2];
for (let i = 0..4) {
  view s = suffix A[by 2*i];
  s[1];
}
""",
        None,
    ),
    (
        "shift-with-inner-unroll",
        """let A: float[12 bank 4];
for (let i = 0..3) {
  view r = shift A[by i*i];
  for (let j = 0..4) unroll 4 {
    let x = r[j];
  }
}
""",
        None,
    ),
    (
        "arbitrary-index-calculation",
        """let A: float[8 bank 2];
for (let i = 0..4) unroll 2 {
  let x = A[2*i];
}
""",
        "E-INDEX",
    ),
]

ACCEPTED_GOLDENS = [(n, s) for n, s, code in GOLDENS if code is None]
REJECTED_GOLDENS = [(n, s, code) for n, s, code in GOLDENS if code is not None]
