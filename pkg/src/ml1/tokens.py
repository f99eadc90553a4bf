"""Lexer for ml1 source text.

Tokens carry the raw source slice they came from, so concatenating token
texts plus the skipped whitespace/comments reproduces the input exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

KEYWORDS = frozenset(
    {
        "package",
        "import",
        "object",
        "trait",
        "def",
        "val",
        "implicit",
        "extends",
        "with",
        "defer",
    }
)

# Token kinds.
KEYWORD = "keyword"
IDENT = "identifier"
PUNCT = "punctuation"
LITERAL = "literal"

_SINGLE_PUNCT = frozenset(".,{}()@;=_")

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Span:
    """Half-open byte range [start, end) into the source text."""

    start: int
    end: int


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: Span
    line: int  # 1-based; the parser uses it to separate statements


class LexError(Exception):
    def __init__(self, span: Span, message: str):
        super().__init__(f"{span.start}-{span.end}: {message}")
        self.span = span
        self.message = message


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch == "_"


def _is_ident_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def string_value(raw: str) -> str:
    """Decode a raw string-literal token (including quotes) to its value."""
    out: list[str] = []
    i = 1
    while i < len(raw) - 1:
        ch = raw[i]
        if ch == "\\":
            out.append(_ESCAPES[raw[i + 1]])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def tokenize(source: str) -> list[Token]:
    """Split source into tokens, skipping whitespace and `//` comments."""
    tokens: list[Token] = []
    i = 0
    line = 1
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            line += 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            continue
        if ch == "/" and source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        start = i
        if _is_ident_start(ch):
            while i < n and _is_ident_char(source[i]):
                i += 1
            text = source[start:i]
            if text == "_":
                kind = PUNCT
            elif text in KEYWORDS:
                kind = KEYWORD
            else:
                kind = IDENT
            tokens.append(Token(kind, text, Span(start, i), line))
            continue
        if ch.isdigit():
            while i < n and source[i].isdigit():
                i += 1
            tokens.append(Token(LITERAL, source[start:i], Span(start, i), line))
            continue
        if ch == '"':
            i += 1
            while True:
                if i >= n or source[i] == "\n":
                    raise LexError(Span(start, i), "unterminated string literal")
                if source[i] == "\\":
                    if i + 1 >= n or source[i + 1] not in _ESCAPES:
                        raise LexError(Span(i, i + 2), "unsupported escape sequence")
                    i += 2
                    continue
                if source[i] == '"':
                    i += 1
                    break
                i += 1
            tokens.append(Token(LITERAL, source[start:i], Span(start, i), line))
            continue
        if source.startswith("=>", i):
            i += 2
            tokens.append(Token(PUNCT, "=>", Span(start, i), line))
            continue
        if ch in _SINGLE_PUNCT:
            i += 1
            tokens.append(Token(PUNCT, ch, Span(start, i), line))
            continue
        raise LexError(Span(i, i + 1), f"illegal character {ch!r}")
    return tokens
