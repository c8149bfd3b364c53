"""Hand-rolled tokenizer for the surface language."""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import ParseError, Span, err

KEYWORDS = {
    "let",
    "view",
    "for",
    "while",
    "if",
    "else",
    "unroll",
    "combine",
    "shrink",
    "suffix",
    "shift",
    "split",
    "by",
    "bank",
    "skip",
    "true",
    "false",
    "float",
    "bool",
    "bit",
}

# Longest match first.
SYMBOLS = [
    "---",
    "..",
    ":=",
    "==",
    "!=",
    "<=",
    ">=",
    "&&",
    "||",
    "+=",
    "-=",
    "*=",
    "/=",
    "{",
    "}",
    "(",
    ")",
    "[",
    "]",
    "<",
    ">",
    ";",
    ",",
    ":",
    "=",
    "+",
    "-",
    "*",
    "/",
    "%",
    "!",
]


@dataclass
class Token:
    kind: str  # "id", "kw", "int", "float", or the symbol itself
    text: str
    span: Span

    def __repr__(self) -> str:  # compact for parser error messages
        return f"{self.kind}:{self.text!r}"


def tokenize(source: str) -> list[Token]:
    toks: list[Token] = []
    i = 0
    n = len(source)
    while i < n:
        c = source[i]
        if c in " \t\r\n":
            i += 1
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            i = n if j < 0 else j + 1
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i)
            if j < 0:
                raise ParseError(err("E-LEX", "unterminated comment", Span(i, n)))
            i = j + 2
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            # A '.' starts a float only when not the '..' range operator.
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
                toks.append(Token("float", source[i:j], Span(i, j)))
            else:
                toks.append(Token("int", source[i:j], Span(i, j)))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            toks.append(Token("kw" if word in KEYWORDS else "id", word, Span(i, j)))
            i = j
            continue
        for sym in SYMBOLS:
            if source.startswith(sym, i):
                toks.append(Token(sym, sym, Span(i, i + len(sym))))
                i += len(sym)
                break
        else:
            raise ParseError(err("E-LEX", f"unexpected character {c!r}", Span(i, i + 1)))
    toks.append(Token("eof", "", Span(n, n)))
    return toks
