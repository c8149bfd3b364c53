"""Surface-language AST and types.

Programs are ordered chains of unordered groups: `;` composes statements that
may run simultaneously, `---` separates logical time steps. Every node carries
a source span that is excluded from structural equality, so two parses of the
same program compare equal even when whitespace moved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .diagnostics import EMPTY_SPAN, Span

# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BankSpec:
    """One memory dimension: its element count and banking factor."""

    size: int
    banks: int


@dataclass(frozen=True)
class BitT:
    width: int

    def __str__(self) -> str:
        return f"bit<{self.width}>"


@dataclass(frozen=True)
class FloatT:
    def __str__(self) -> str:
        return "float"


@dataclass(frozen=True)
class BoolT:
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class IdxT:
    """Type of an unrolled loop iterator: copies statically cover lo..hi."""

    lo: int
    hi: int

    def __str__(self) -> str:
        return f"idx{{{self.lo}..{self.hi}}}"


@dataclass(frozen=True)
class MemT:
    elem: Union[BitT, FloatT, BoolT]
    dims: tuple[BankSpec, ...]
    ports: int = 1

    def __str__(self) -> str:
        ports = f"{{{self.ports}}}" if self.ports != 1 else ""
        dims = "".join(
            f"[{d.size} bank {d.banks}]" if d.banks != 1 else f"[{d.size}]"
            for d in self.dims
        )
        return f"{self.elem}{ports}{dims}"


ScalarT = Union[BitT, FloatT, BoolT, IdxT]
SurfaceType = Union[BitT, FloatT, BoolT, IdxT, MemT]


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass
class NumLit:
    value: Union[int, float]
    is_float: bool
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass
class BoolLit:
    value: bool
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass
class Var:
    name: str
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass
class BinOp:
    op: str
    lhs: "Expr"
    rhs: "Expr"
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass
class Read:
    """Logical read M[e]...[e] of a memory or view."""

    mem: str
    idxs: list["Expr"]
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass
class PhysRead:
    """Physical read M{b}[e] naming banks directly.

    `banks` holds either one flat bank index or one index per dimension.
    """

    mem: str
    banks: list[int]
    idxs: list["Expr"]
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


Expr = Union[NumLit, BoolLit, Var, BinOp, Read, PhysRead]


# ---------------------------------------------------------------------------
# View declarations
# ---------------------------------------------------------------------------


@dataclass
class ShrinkView:
    factors: list[int]  # per dimension; divides the banking factor


@dataclass
class SuffixView:
    coeffs: list[int]  # per dimension; must equal the banking factor
    offsets: list[Expr]


@dataclass
class ShiftView:
    offsets: list[Expr]  # unrestricted


@dataclass
class SplitView:
    factors: list[int]  # per dimension; 1 leaves the dimension alone


ViewKind = Union[ShrinkView, SuffixView, ShiftView, SplitView]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


@dataclass
class Block:
    """An ordered chain of unordered groups of statements."""

    chain: list[list["Stmt"]]
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)

    def is_single_group(self) -> bool:
        return len(self.chain) <= 1

    def stmts(self):
        for group in self.chain:
            yield from group


@dataclass
class Let:
    name: str
    ann: Optional[SurfaceType]
    init: Optional[Expr]
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass
class MemDecl:
    names: list[str]
    type: MemT
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass
class ViewDecl:
    name: str
    kind: ViewKind
    underlying: str
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass
class For:
    iter: str
    lo: int
    hi: int
    unroll: int
    body: Block
    combine: Optional[Block]
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass
class While:
    cond: Expr
    body: Block
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass
class If:
    cond: Expr
    then: Block
    els: Optional[Block]
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass
class Assign:
    name: str
    value: Expr
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass
class Reduce:
    """Compound update `x op= e`; a reducer inside combine blocks."""

    name: str
    op: str  # one of + - * /
    value: Expr
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass
class Store:
    target: Union[Read, PhysRead]
    value: Expr
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass
class ExprStmt:
    expr: Expr
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


@dataclass
class Skip:
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


Stmt = Union[
    Let, MemDecl, ViewDecl, For, While, If, Assign, Reduce, Store, ExprStmt, Skip, Block
]


@dataclass
class Program:
    body: Block
    span: Span = field(default=EMPTY_SPAN, compare=False, repr=False)


def is_scalar(t: SurfaceType) -> bool:
    return isinstance(t, (BitT, FloatT, BoolT, IdxT))
