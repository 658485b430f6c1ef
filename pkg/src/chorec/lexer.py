"""Tokenizer shared by the .mc, .sp and .rf parsers."""

import re
from dataclasses import dataclass

from .errors import ParseError

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<aux>r\#[0-9]+)
  | (?P<comment>\#[^\n]*)
  | (?P<arrow>->)
  | (?P<num>[0-9]+)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<punct>[.;\[\](){}=,:|>])
    """,
    re.VERBOSE,
)

AUX_NAME_RE = re.compile(r"r#[0-9]+\Z")
PROC_NAME_RE = re.compile(r"(?:[a-z][A-Za-z0-9_]*|r#[0-9]+)\Z")
PROCEDURE_NAME_RE = re.compile(r"[A-Z][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Token:
    kind: str  # 'name', 'num', 'sym', 'eof'
    text: str
    line: int
    col: int


def tokenize(text):
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        if kind in ("aux", "ident"):
            tokens.append(Token("name", value, line, col))
        elif kind == "num":
            tokens.append(Token("num", value, line, col))
        elif kind in ("arrow", "punct"):
            tokens.append(Token("sym", value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class TokenStream:
    """Cursor over a token list with the small set of helpers recursive descent needs."""

    def __init__(self, text):
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def peek(self):
        return self.tokens[self.pos]

    def peek_at(self, offset):
        idx = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[idx]

    def next(self):
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek
        found = tok.text or "end of input"
        return ParseError(f"{message}, found {found!r}", tok.line, tok.col)

    def at(self, text):
        tok = self.peek
        return tok.kind in ("sym", "name") and tok.text == text

    def accept(self, text):
        if self.at(text):
            return self.next()
        return None

    def expect(self, text):
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        return self.next()

    def expect_num(self):
        tok = self.peek
        if tok.kind != "num":
            raise self.error("expected a number")
        self.next()
        return int(tok.text)

    def expect_name(self, pattern, what):
        tok = self.peek
        if tok.kind != "name" or not pattern.match(tok.text):
            raise self.error(f"expected {what}")
        self.next()
        return tok.text

    def expect_eof(self):
        if self.peek.kind != "eof":
            raise self.error("expected end of input")
