"""The predicate mini-language for filter steps and route branches.

Grammar:
    expr      := or
    or        := and ("or" and)*
    and       := unary ("and" unary)*
    unary     := "not" unary | "(" expr ")" | comparison
    comparison:= accessor op value | accessor "exists"
    accessor  := "contentType" | "header." name | "payload" | "payload.size"
    op        := "=" | "!=" | "contains" | "startsWith" | "matches"
                 | "<" | "<=" | ">" | ">="   (payload.size only)
    value     := double-quoted string | number

Missing headers compare as the empty string; payload is compared as
UTF-8 text (undecodable bytes replaced). Parsed at spec-load time so a
typo fails the whole spec, not a message at runtime.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..connectors import Message


class PredicateError(ValueError):
    pass


_TOKEN = re.compile(
    r'\s*(?:(?P<string>"(?:[^"\\]|\\.)*")|(?P<number>-?\d+(?:\.\d+)?)'
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_.-]*)|(?P<op><=|>=|!=|=|<|>|\(|\)))"
)

_NUMERIC_OPS = ("=", "!=", "<", "<=", ">", ">=")
_TEXT_OPS = ("=", "!=", "contains", "startsWith", "matches")


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None or match.end() == pos:
            rest = text[pos:].strip()
            if not rest:
                break
            raise PredicateError(f"cannot read predicate at: {rest[:20]!r}")
        pos = match.end()
        if match.lastgroup == "string":
            raw = match.group("string")[1:-1]
            tokens.append(("string", raw.replace('\\"', '"').replace("\\\\", "\\")))
        elif match.lastgroup == "number":
            tokens.append(("number", match.group("number")))
        elif match.lastgroup == "ident":
            tokens.append(("ident", match.group("ident")))
        else:
            tokens.append(("op", match.group("op")))
    return tokens


@dataclass(frozen=True)
class _Comparison:
    accessor: str
    op: str
    value: str | float | None

    def __call__(self, message: Message) -> bool:
        if self.accessor == "payload.size":
            left = len(message.payload)
            right = self.value
            return {
                "=": left == right,
                "!=": left != right,
                "<": left < right,
                "<=": left <= right,
                ">": left > right,
                ">=": left >= right,
            }[self.op]
        if self.accessor == "contentType":
            left = message.content_type
        elif self.accessor == "payload":
            left = message.payload.decode("utf-8", errors="replace")
        else:
            name = self.accessor[len("header.") :]
            if self.op == "exists":
                return name in message.headers
            left = message.headers.get(name, "")
        if self.op == "=":
            return left == self.value
        if self.op == "!=":
            return left != self.value
        if self.op == "contains":
            return self.value in left
        if self.op == "startsWith":
            return left.startswith(self.value)
        return re.search(self.value, left) is not None


@dataclass(frozen=True)
class _Not:
    inner: object

    def __call__(self, message: Message) -> bool:
        return not self.inner(message)


@dataclass(frozen=True)
class _All:
    parts: tuple

    def __call__(self, message: Message) -> bool:
        return all(part(message) for part in self.parts)


@dataclass(frozen=True)
class _Any:
    parts: tuple

    def __call__(self, message: Message) -> bool:
        return any(part(message) for part in self.parts)


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]], source: str) -> None:
        self.tokens = tokens
        self.pos = 0
        self.source = source

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        token = self.peek()
        self.pos += 1
        return token

    def fail(self, why: str):
        raise PredicateError(f"{why} in predicate {self.source!r}")

    def expr(self):
        parts = [self.conjunction()]
        while self.peek() == ("ident", "or"):
            self.take()
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else _Any(tuple(parts))

    def conjunction(self):
        parts = [self.unary()]
        while self.peek() == ("ident", "and"):
            self.take()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else _All(tuple(parts))

    def unary(self):
        kind, value = self.peek()
        if (kind, value) == ("ident", "not"):
            self.take()
            return _Not(self.unary())
        if (kind, value) == ("op", "("):
            self.take()
            inner = self.expr()
            if self.take() != ("op", ")"):
                self.fail("missing closing parenthesis")
            return inner
        return self.comparison()

    def comparison(self):
        kind, accessor = self.take()
        if kind != "ident":
            self.fail(f"expected an accessor, got {accessor!r}")
        if accessor not in ("contentType", "payload", "payload.size") and not accessor.startswith("header."):
            self.fail(f"unknown accessor {accessor!r}")
        if accessor.startswith("header.") and len(accessor) == len("header."):
            self.fail("header accessor needs a name")
        op_kind, op = self.take()
        if op_kind == "ident" and op == "exists":
            if not accessor.startswith("header."):
                self.fail("exists applies to headers only")
            return _Comparison(accessor, "exists", None)
        if op_kind not in ("op", "ident"):
            self.fail(f"expected an operator after {accessor!r}")
        if accessor == "payload.size":
            if op not in _NUMERIC_OPS:
                self.fail(f"operator {op!r} does not apply to payload.size")
            value_kind, value = self.take()
            if value_kind != "number":
                self.fail("payload.size compares against a number")
            return _Comparison(accessor, op, float(value))
        if op not in _TEXT_OPS:
            self.fail(f"unknown operator {op!r}")
        value_kind, value = self.take()
        if value_kind != "string":
            self.fail(f"operator {op!r} compares against a quoted string")
        if op == "matches":
            try:
                re.compile(value)
            except re.error as exc:
                self.fail(f"bad pattern: {exc}")
        return _Comparison(accessor, op, value)


def parse_predicate(text: str):
    """Compile a predicate; the result is a callable Message -> bool."""
    if not isinstance(text, str) or not text.strip():
        raise PredicateError("predicate must be non-empty text")
    parser = _Parser(_tokenize(text), text)
    node = parser.expr()
    if parser.pos != len(parser.tokens):
        parser.fail(f"trailing tokens after position {parser.pos}")
    return node


__all__ = ["PredicateError", "parse_predicate"]
