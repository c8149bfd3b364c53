"""Recursive-descent parser producing the surface AST.

Statements inside a group end with `;`; the terminator may be omitted right
before `---`, `}`, or end of input, matching how programs are usually written.
`---` binds looser than `;` and splits a block into logical time steps.
"""

from __future__ import annotations

from typing import Optional

from . import surface as S
from .diagnostics import ParseError, Span, err
from .lexer import Token, tokenize

# Binary operator precedence, C-like. Higher binds tighter.
PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "==": 3,
    "!=": 3,
    "<": 4,
    "<=": 4,
    ">": 4,
    ">=": 4,
    "+": 5,
    "-": 5,
    "*": 6,
    "/": 6,
    "%": 6,
}

REDUCE_OPS = {"+=": "+", "-=": "-", "*=": "*", "/=": "/"}


class Parser:
    def __init__(self, source: str):
        self.source = source
        self.toks = tokenize(source)
        self.pos = 0

    # -- token helpers ------------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[Token]:
        if self.at(kind, text):
            return self.next()
        return None

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        if not self.at(kind, text):
            t = self.peek()
            want = text or kind
            raise ParseError(err("E-PARSE", f"expected {want!r}, found {t}", t.span))
        return self.next()

    # -- entry point --------------------------------------------------------

    def parse_program(self) -> S.Program:
        body = self.parse_chain(stop={"eof"})
        self.expect("eof")
        return S.Program(body, span=Span(0, len(self.source)))

    def parse_chain(self, stop: set[str]) -> S.Block:
        start = self.peek().span
        chain: list[list[S.Stmt]] = [[]]
        while True:
            t = self.peek()
            if t.kind in stop:
                break
            if t.kind == "---":
                self.next()
                chain.append([])
                continue
            stmt = self.parse_stmt()
            chain[-1].append(stmt)
            if self.accept(";"):
                continue
            if self.peek().kind in stop or self.peek().kind == "---":
                continue
            # The terminator is optional after }-delimited statements.
            if isinstance(stmt, (S.For, S.While, S.If, S.Block)):
                continue
            raise ParseError(
                err("E-PARSE", f"expected ';', found {self.peek()}", self.peek().span)
            )
        end = self.peek().span
        return S.Block(chain, span=start.merge(end))

    def parse_block(self) -> S.Block:
        self.expect("{")
        body = self.parse_chain(stop={"}"})
        self.expect("}")
        return body

    # -- statements ---------------------------------------------------------

    def parse_stmt(self) -> S.Stmt:
        t = self.peek()
        if t.kind == "kw":
            if t.text == "let":
                return self.parse_let()
            if t.text == "view":
                return self.parse_view()
            if t.text == "for":
                return self.parse_for()
            if t.text == "while":
                return self.parse_while()
            if t.text == "if":
                return self.parse_if()
            if t.text == "skip":
                tok = self.next()
                return S.Skip(span=tok.span)
        if t.kind == "{":
            return self.parse_block()
        return self.parse_expr_stmt()

    def parse_let(self) -> S.Stmt:
        kw = self.expect("kw", "let")
        names = [self.expect("id").text]
        while self.accept(","):
            names.append(self.expect("id").text)
        ann: Optional[S.SurfaceType] = None
        init: Optional[S.Expr] = None
        if self.accept(":"):
            ann = self.parse_type()
        if self.accept("="):
            init = self.parse_expr()
        span = kw.span.merge(self.prev_span())
        if isinstance(ann, S.MemT):
            if init is not None:
                raise ParseError(err("E-PARSE", "memories cannot be initialized inline", span))
            return S.MemDecl(names, ann, span=span)
        if len(names) > 1:
            raise ParseError(err("E-PARSE", "multiple names require a memory type", span))
        if init is None:
            raise ParseError(err("E-PARSE", "scalar 'let' needs an initializer", span))
        return S.Let(names[0], ann, init, span=span)

    def parse_view(self) -> S.Stmt:
        kw = self.expect("kw", "view")
        names = [self.expect("id").text]
        while self.accept(","):
            names.append(self.expect("id").text)
        self.expect("=")
        kind_tok = self.expect("kw")
        if kind_tok.text not in ("shrink", "suffix", "shift", "split"):
            raise ParseError(err("E-PARSE", f"unknown view kind {kind_tok.text!r}", kind_tok.span))
        decls = []
        for k, name in enumerate(names):
            if k > 0:
                self.expect(",")
            under = self.expect("id").text
            args: list[S.Expr] = []
            while self.at("["):
                self.next()
                self.expect("kw", "by")
                args.append(self.parse_expr())
                self.expect("]")
            if not args:
                raise ParseError(err("E-PARSE", "view needs at least one [by ...] argument", kind_tok.span))
            kind = self.build_view_kind(kind_tok.text, args, kind_tok.span)
            decls.append(S.ViewDecl(name, kind, under, span=kw.span.merge(self.prev_span())))
        if len(decls) == 1:
            return decls[0]
        # Multi-declaration sugar expands to a group of view declarations.
        return S.Block([list(decls)], span=kw.span.merge(self.prev_span()))

    def build_view_kind(self, kind: str, args: list[S.Expr], span: Span) -> S.ViewKind:
        if kind in ("shrink", "split"):
            factors = []
            for a in args:
                v = fold_const(a)
                if v is None:
                    raise ParseError(err("E-PARSE", f"{kind} factor must be constant", span))
                factors.append(v)
            return S.ShrinkView(factors) if kind == "shrink" else S.SplitView(factors)
        if kind == "shift":
            return S.ShiftView(list(args))
        coeffs: list[int] = []
        offsets: list[S.Expr] = []
        for a in args:
            # Aligned suffix arguments take the form k*e; a bare constant is k*1.
            if isinstance(a, S.BinOp) and a.op == "*" and isinstance(a.lhs, S.NumLit) \
                    and not a.lhs.is_float:
                coeffs.append(int(a.lhs.value))
                offsets.append(a.rhs)
            elif isinstance(a, S.NumLit) and not a.is_float:
                coeffs.append(int(a.value))
                offsets.append(S.NumLit(1, False, span=a.span))
            else:
                raise ParseError(err("E-PARSE", "suffix offset must look like k*e", span))
        return S.SuffixView(coeffs, offsets)

    def parse_for(self) -> S.For:
        kw = self.expect("kw", "for")
        self.expect("(")
        self.expect("kw", "let")
        it = self.expect("id").text
        self.expect("=")
        lo = int(self.expect("int").text)
        self.expect("..")
        hi = int(self.expect("int").text)
        self.expect(")")
        unroll = 1
        if self.accept("kw", "unroll"):
            unroll = int(self.expect("int").text)
        body = self.parse_block()
        combine = None
        if self.accept("kw", "combine"):
            combine = self.parse_block()
        return S.For(it, lo, hi, unroll, body, combine, span=kw.span.merge(self.prev_span()))

    def parse_while(self) -> S.While:
        kw = self.expect("kw", "while")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        body = self.parse_block()
        return S.While(cond, body, span=kw.span.merge(self.prev_span()))

    def parse_if(self) -> S.If:
        kw = self.expect("kw", "if")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then = self.parse_block()
        els = None
        if self.accept("kw", "else"):
            els = self.parse_block()
        return S.If(cond, then, els, span=kw.span.merge(self.prev_span()))

    def parse_expr_stmt(self) -> S.Stmt:
        start = self.peek().span
        e = self.parse_expr()
        if self.at(":="):
            self.next()
            value = self.parse_expr()
            span = start.merge(self.prev_span())
            if isinstance(e, (S.Read, S.PhysRead)):
                return S.Store(e, value, span=span)
            if isinstance(e, S.Var):
                return S.Assign(e.name, value, span=span)
            raise ParseError(err("E-PARSE", "assignment target must be a variable or memory access", span))
        for tok, op in REDUCE_OPS.items():
            if self.at(tok):
                self.next()
                value = self.parse_expr()
                span = start.merge(self.prev_span())
                if isinstance(e, S.Var):
                    return S.Reduce(e.name, op, value, span=span)
                raise ParseError(err("E-PARSE", "compound assignment target must be a variable", span))
        return S.ExprStmt(e, span=start.merge(self.prev_span()))

    # -- types --------------------------------------------------------------

    def parse_type(self) -> S.SurfaceType:
        t = self.peek()
        elem: S.SurfaceType
        if self.accept("kw", "float"):
            elem = S.FloatT()
        elif self.accept("kw", "bool"):
            elem = S.BoolT()
        elif self.accept("kw", "bit"):
            self.expect("<")
            width = int(self.expect("int").text)
            self.expect(">")
            if width < 1:
                raise ParseError(err("E-PARSE", "bit width must be positive", t.span))
            elem = S.BitT(width)
        else:
            raise ParseError(err("E-PARSE", f"expected a type, found {t}", t.span))
        ports = 1
        if self.at("{"):
            self.next()
            ports = int(self.expect("int").text)
            self.expect("}")
            if ports < 1:
                raise ParseError(err("E-PARSE", "port count must be positive", t.span))
        dims: list[S.BankSpec] = []
        while self.at("["):
            self.next()
            size = int(self.expect("int").text)
            banks = 1
            if self.accept("kw", "bank"):
                banks = int(self.expect("int").text)
            self.expect("]")
            if size < 1 or banks < 1:
                raise ParseError(err("E-PARSE", "sizes and banking factors must be positive", t.span))
            dims.append(S.BankSpec(size, banks))
        if dims:
            return S.MemT(elem, tuple(dims), ports)  # type: ignore[arg-type]
        if ports != 1:
            raise ParseError(err("E-PARSE", "port annotation requires a memory type", t.span))
        return elem

    # -- expressions --------------------------------------------------------

    def parse_expr(self, min_prec: int = 1) -> S.Expr:
        lhs = self.parse_unary()
        while True:
            t = self.peek()
            prec = PRECEDENCE.get(t.kind)
            if prec is None or prec < min_prec:
                return lhs
            self.next()
            rhs = self.parse_expr(prec + 1)
            lhs = S.BinOp(t.text, lhs, rhs, span=lhs.span.merge(rhs.span))

    def parse_unary(self) -> S.Expr:
        if self.at("-"):
            tok = self.next()
            inner = self.parse_unary()
            if isinstance(inner, S.NumLit):
                return S.NumLit(-inner.value, inner.is_float, span=tok.span.merge(inner.span))
            zero = S.NumLit(0, False, span=tok.span)
            return S.BinOp("-", zero, inner, span=tok.span.merge(inner.span))
        if self.at("!"):
            tok = self.next()
            inner = self.parse_unary()
            false = S.BoolLit(False, span=tok.span)
            return S.BinOp("==", inner, false, span=tok.span.merge(inner.span))
        return self.parse_postfix()

    def parse_postfix(self) -> S.Expr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return S.NumLit(int(t.text), False, span=t.span)
        if t.kind == "float":
            self.next()
            return S.NumLit(float(t.text), True, span=t.span)
        if t.kind == "kw" and t.text in ("true", "false"):
            self.next()
            return S.BoolLit(t.text == "true", span=t.span)
        if t.kind == "(":
            self.next()
            e = self.parse_expr()
            self.expect(")")
            return e
        if t.kind == "id":
            self.next()
            banks: Optional[list[int]] = None
            if self.at("{"):
                self.next()
                banks = [int(self.expect("int").text)]
                while self.accept(","):
                    banks.append(int(self.expect("int").text))
                self.expect("}")
            idxs: list[S.Expr] = []
            while self.at("["):
                self.next()
                idxs.append(self.parse_expr())
                self.expect("]")
            span = t.span.merge(self.prev_span())
            if banks is not None:
                if not idxs:
                    raise ParseError(err("E-PARSE", "physical access needs an offset", span))
                return S.PhysRead(t.text, banks, idxs, span=span)
            if idxs:
                return S.Read(t.text, idxs, span=span)
            return S.Var(t.text, span=t.span)
        raise ParseError(err("E-PARSE", f"expected an expression, found {t}", t.span))

    def prev_span(self) -> Span:
        return self.toks[max(self.pos - 1, 0)].span


def fold_const(e: S.Expr) -> Optional[int]:
    """Evaluate an integer constant expression, or None if it is not one."""
    if isinstance(e, S.NumLit) and not e.is_float:
        return int(e.value)
    if isinstance(e, S.BinOp):
        a = fold_const(e.lhs)
        b = fold_const(e.rhs)
        if a is None or b is None:
            return None
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/" and b != 0:
            return a // b
        if e.op == "%" and b != 0:
            return a % b
    return None


def parse_program(source: str) -> S.Program:
    """Parse source text; raises ParseError with a spanned diagnostic."""
    return Parser(source).parse_program()
