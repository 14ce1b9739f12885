"""Hand-written scanner for the global query language."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, auto
from typing import Union

from mdbs.errors import LexError

KEYWORDS = {
    "SELECT",
    "FROM",
    "WHERE",
    "ORDER",
    "BY",
    "ASC",
    "DESC",
    "LIMIT",
    "AND",
    "OR",
    "INSERT",
    "INTO",
    "VALUES",
    "UPDATE",
    "SET",
    "DELETE",
    "TRUE",
    "FALSE",
    "NULL",
}


class TokenType(Enum):
    KEYWORD = auto()
    IDENT = auto()
    INT = auto()
    FLOAT = auto()
    STRING = auto()
    OP = auto()
    STAR = auto()
    LPAREN = auto()
    RPAREN = auto()
    COMMA = auto()
    EOF = auto()


@dataclass(frozen=True)
class Token:
    type: TokenType
    value: Union[str, int, float]
    position: int


def _ident_start(ch: str) -> bool:
    return ch.isascii() and ch.isalpha()


def _ident_part(ch: str) -> bool:
    return ch == "_" or (ch.isascii() and (ch.isalpha() or ch.isdigit()))


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
            continue
        start = i
        if _ident_start(ch):
            while i < n and _ident_part(text[i]):
                i += 1
            word = text[start:i]
            upper = word.upper()
            if upper in KEYWORDS:
                tokens.append(Token(TokenType.KEYWORD, upper, start))
            else:
                tokens.append(Token(TokenType.IDENT, word, start))
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and text[i + 1].isdigit()):
            i = _scan_number(text, i, tokens)
            continue
        if ch == "'":
            i = _scan_string(text, i, tokens)
            continue
        if ch == "*":
            tokens.append(Token(TokenType.STAR, "*", start))
            i += 1
            continue
        if ch == "(":
            tokens.append(Token(TokenType.LPAREN, "(", start))
            i += 1
            continue
        if ch == ")":
            tokens.append(Token(TokenType.RPAREN, ")", start))
            i += 1
            continue
        if ch == ",":
            tokens.append(Token(TokenType.COMMA, ",", start))
            i += 1
            continue
        if ch in "<>!":
            if i + 1 < n and text[i + 1] == "=":
                tokens.append(Token(TokenType.OP, ch + "=", start))
                i += 2
            elif ch == "!":
                raise LexError(f"unexpected character {ch!r}", start)
            else:
                tokens.append(Token(TokenType.OP, ch, start))
                i += 1
            continue
        if ch == "=":
            tokens.append(Token(TokenType.OP, "=", start))
            i += 1
            continue
        raise LexError(f"unexpected character {ch!r}", start)
    tokens.append(Token(TokenType.EOF, "", n))
    return tokens


def _scan_number(text: str, i: int, tokens: list[Token]) -> int:
    start = i
    n = len(text)
    if text[i] == "-":
        i += 1
    while i < n and text[i].isdigit():
        i += 1
    is_float = False
    if i < n and text[i] == "." and i + 1 < n and text[i + 1].isdigit():
        is_float = True
        i += 1
        while i < n and text[i].isdigit():
            i += 1
    if i < n and text[i] in "eE":
        j = i + 1
        if j < n and text[j] in "+-":
            j += 1
        if j < n and text[j].isdigit():
            is_float = True
            i = j
            while i < n and text[i].isdigit():
                i += 1
    word = text[start:i]
    if is_float:
        tokens.append(Token(TokenType.FLOAT, float(word), start))
    else:
        tokens.append(Token(TokenType.INT, int(word), start))
    return i


def _scan_string(text: str, i: int, tokens: list[Token]) -> int:
    # single quotes, '' as the escape for a literal quote
    start = i
    i += 1
    n = len(text)
    parts: list[str] = []
    while i < n:
        ch = text[i]
        if ch == "'":
            if i + 1 < n and text[i + 1] == "'":
                parts.append("'")
                i += 2
                continue
            tokens.append(Token(TokenType.STRING, "".join(parts), start))
            return i + 1
        parts.append(ch)
        i += 1
    raise LexError("unterminated string literal", start)
