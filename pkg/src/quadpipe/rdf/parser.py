"""Turtle and N-Quads readers.

Hand-written scannerless recursive-descent parser covering the W3C
Turtle grammar (minus RDF-star) plus TriG-style `GRAPH <iri> { ... }`
blocks so named graphs round-trip. Blank node labels are freshly scoped
per parse call: labels from different parses never collide.

Errors carry line and column.
"""

from __future__ import annotations

import itertools
from urllib.parse import urljoin

from .dataset import Dataset
from .terms import (
    DEFAULT_GRAPH,
    BlankNode,
    GraphLabel,
    IRI,
    Literal,
    Quad,
    Term,
    TermError,
    RDF_FIRST,
    RDF_NIL,
    RDF_REST,
    RDF_TYPE,
    XSD_BOOLEAN,
    XSD_DECIMAL,
    XSD_DOUBLE,
    XSD_INTEGER,
)

_fresh_blank_ids = itertools.count()


class ParseError(ValueError):
    """Syntax or reference error in a Turtle/N-Quads document."""

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


def _is_pn_chars_base(ch: str) -> bool:
    if len(ch) != 1:
        return False
    cp = ord(ch)
    return (
        "A" <= ch <= "Z"
        or "a" <= ch <= "z"
        or 0x00C0 <= cp <= 0x00D6
        or 0x00D8 <= cp <= 0x00F6
        or 0x00F8 <= cp <= 0x02FF
        or 0x0370 <= cp <= 0x037D
        or 0x037F <= cp <= 0x1FFF
        or 0x200C <= cp <= 0x200D
        or 0x2070 <= cp <= 0x218F
        or 0x2C00 <= cp <= 0x2FEF
        or 0x3001 <= cp <= 0xD7FF
        or 0xF900 <= cp <= 0xFDCF
        or 0xFDF0 <= cp <= 0xFFFD
        or 0x10000 <= cp <= 0xEFFFF
    )


def _is_pn_chars_u(ch: str) -> bool:
    return ch == "_" or _is_pn_chars_base(ch)


def _is_pn_chars(ch: str) -> bool:
    if len(ch) != 1:
        return False
    cp = ord(ch)
    return (
        _is_pn_chars_u(ch)
        or ch == "-"
        or "0" <= ch <= "9"
        or cp == 0x00B7
        or 0x0300 <= cp <= 0x036F
        or 0x203F <= cp <= 0x2040
    )


_PN_LOCAL_ESC = set("_~.-!$&'()*+,;=/?#@%")


class _Scanner:
    """Character cursor with line/column tracking."""

    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.line, self.col)

    def at_end(self) -> bool:
        return self.pos >= len(self.text)

    def peek(self, offset: int = 0) -> str:
        i = self.pos + offset
        return self.text[i] if i < len(self.text) else ""

    def advance(self, n: int = 1) -> str:
        chunk = self.text[self.pos : self.pos + n]
        for ch in chunk:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.pos += n
        return chunk

    def skip_ws(self) -> None:
        while not self.at_end():
            ch = self.peek()
            if ch in " \t\r\n":
                self.advance()
            elif ch == "#":
                while not self.at_end() and self.peek() != "\n":
                    self.advance()
            else:
                return

    def expect(self, literal: str) -> None:
        if self.text.startswith(literal, self.pos):
            self.advance(len(literal))
        else:
            raise self.error(f"expected {literal!r}")

    def match_keyword(self, word: str) -> bool:
        """Case-insensitive keyword match with a non-name character after it."""
        end = self.pos + len(word)
        if self.text[self.pos : end].lower() != word.lower():
            return False
        nxt = self.text[end : end + 1]
        if nxt and (_is_pn_chars(nxt) or nxt == ":"):
            return False
        self.advance(len(word))
        return True


class _TurtleParser:
    def __init__(self, text: str, base: str | None = None) -> None:
        self.s = _Scanner(text)
        self.base = base
        self.prefixes: dict[str, str] = {}
        self.blank_labels: dict[str, BlankNode] = {}
        self.quads: list[Quad] = []
        self.graph: GraphLabel = DEFAULT_GRAPH

    # -- entry -------------------------------------------------------------

    def parse(self) -> Dataset:
        s = self.s
        s.skip_ws()
        while not s.at_end():
            self._statement()
            s.skip_ws()
        return Dataset(self.quads)

    def _statement(self) -> None:
        s = self.s
        if s.peek() == "@":
            self._at_directive()
            return
        if s.match_keyword("PREFIX"):
            self._prefix_body(require_dot=False)
            return
        if s.match_keyword("BASE"):
            self._base_body(require_dot=False)
            return
        if s.match_keyword("GRAPH"):
            self._graph_block()
            return
        self._triples()
        s.skip_ws()
        s.expect(".")

    def _at_directive(self) -> None:
        s = self.s
        s.expect("@")
        if s.match_keyword("prefix"):
            self._prefix_body(require_dot=True)
        elif s.match_keyword("base"):
            self._base_body(require_dot=True)
        else:
            raise s.error("unknown @-directive")

    def _prefix_body(self, require_dot: bool) -> None:
        s = self.s
        s.skip_ws()
        prefix = self._pname_ns()
        s.skip_ws()
        iri = self._iriref()
        self.prefixes[prefix] = iri.value
        if require_dot:
            s.skip_ws()
            s.expect(".")

    def _base_body(self, require_dot: bool) -> None:
        s = self.s
        s.skip_ws()
        iri = self._iriref()
        self.base = iri.value
        if require_dot:
            s.skip_ws()
            s.expect(".")

    def _graph_block(self) -> None:
        s = self.s
        s.skip_ws()
        label = self._iri()
        s.skip_ws()
        s.expect("{")
        outer = self.graph
        self.graph = label
        try:
            s.skip_ws()
            while s.peek() != "}":
                if s.at_end():
                    raise s.error("unterminated GRAPH block")
                self._triples()
                s.skip_ws()
                if s.peek() == ".":
                    s.advance()
                    s.skip_ws()
            s.expect("}")
        finally:
            self.graph = outer

    # -- triples -------------------------------------------------------------

    def _triples(self) -> None:
        s = self.s
        s.skip_ws()
        if s.peek() == "[":
            subject = self._blank_node_property_list()
            s.skip_ws()
            if s.peek() not in ".}" and not s.at_end():
                self._predicate_object_list(subject)
        else:
            subject = self._subject()
            self._predicate_object_list(subject)

    def _subject(self) -> Term:
        s = self.s
        ch = s.peek()
        if ch == "(":
            return self._collection()
        if ch == "_" and s.peek(1) == ":":
            return self._blank_node_label()
        term = self._iri()
        return term

    def _predicate_object_list(self, subject: Term) -> None:
        s = self.s
        while True:
            s.skip_ws()
            predicate = self._verb()
            self._object_list(subject, predicate)
            s.skip_ws()
            if s.peek() == ";":
                s.advance()
                s.skip_ws()
                # trailing ';' before '.', ']' or '}'
                if s.peek() in ".]}" or s.at_end():
                    return
                continue
            return

    def _verb(self) -> IRI:
        s = self.s
        if s.peek() == "a" and not (_is_pn_chars(s.peek(1)) or s.peek(1) == ":"):
            s.advance()
            return IRI(RDF_TYPE)
        term = self._iri()
        return term

    def _object_list(self, subject: Term, predicate: IRI) -> None:
        s = self.s
        while True:
            s.skip_ws()
            obj = self._object()
            self._emit(subject, predicate, obj)
            s.skip_ws()
            if s.peek() == ",":
                s.advance()
                continue
            return

    def _object(self) -> Term:
        s = self.s
        ch = s.peek()
        if ch == "(":
            return self._collection()
        if ch == "[":
            return self._blank_node_property_list()
        if ch == "_" and s.peek(1) == ":":
            return self._blank_node_label()
        if ch in "\"'":
            return self._rdf_literal()
        if ch.isdigit() or (ch in "+-." and (s.peek(1).isdigit() or s.peek(1) == "." or ch == ".")):
            if ch == "." and not s.peek(1).isdigit():
                raise s.error("unexpected '.'")
            return self._numeric_literal()
        if s.match_keyword("true"):
            return Literal("true", datatype=IRI(XSD_BOOLEAN))
        if s.match_keyword("false"):
            return Literal("false", datatype=IRI(XSD_BOOLEAN))
        return self._iri()

    def _blank_node_property_list(self) -> BlankNode:
        s = self.s
        s.expect("[")
        node = self._fresh_blank()
        s.skip_ws()
        if s.peek() != "]":
            self._predicate_object_list(node)
            s.skip_ws()
        s.expect("]")
        return node

    def _collection(self) -> Term:
        s = self.s
        s.expect("(")
        items: list[Term] = []
        while True:
            s.skip_ws()
            if s.peek() == ")":
                s.advance()
                break
            if s.at_end():
                raise s.error("unterminated collection")
            items.append(self._object())
        if not items:
            return IRI(RDF_NIL)
        head = self._fresh_blank()
        node: Term = head
        for i, item in enumerate(items):
            self._emit(node, IRI(RDF_FIRST), item)
            if i == len(items) - 1:
                self._emit(node, IRI(RDF_REST), IRI(RDF_NIL))
            else:
                nxt = self._fresh_blank()
                self._emit(node, IRI(RDF_REST), nxt)
                node = nxt
        return head

    def _emit(self, subject: Term, predicate: IRI, obj: Term) -> None:
        try:
            self.quads.append(Quad(subject, predicate, obj, self.graph))
        except TermError as exc:
            raise self.s.error(str(exc)) from exc

    # -- terms ---------------------------------------------------------------

    def _iri(self) -> IRI:
        s = self.s
        if s.peek() == "<":
            return self._iriref()
        return self._prefixed_name()

    def _iriref(self) -> IRI:
        s = self.s
        s.expect("<")
        out: list[str] = []
        while True:
            if s.at_end():
                raise s.error("unterminated IRI")
            ch = s.advance()
            if ch == ">":
                break
            if ch == "\\":
                out.append(self._unicode_escape(iri=True))
            elif ch in ' "{}|^`' or ord(ch) < 0x20:
                raise s.error(f"illegal character in IRI: {ch!r}")
            else:
                out.append(ch)
        return self._resolve("".join(out))

    def _resolve(self, value: str) -> IRI:
        s = self.s
        if _has_scheme(value):
            return IRI(value)
        if self.base is None:
            raise s.error(f"relative IRI {value!r} without a base")
        resolved = urljoin(self.base, value)
        if not _has_scheme(resolved):
            raise s.error(f"cannot resolve relative IRI {value!r} against base {self.base!r}")
        return IRI(resolved)

    def _pname_ns(self) -> str:
        """Prefix name before ':', possibly empty."""
        s = self.s
        out: list[str] = []
        if _is_pn_chars_base(s.peek()):
            out.append(s.advance())
            while _is_pn_chars(s.peek()) or (s.peek() == "." and _is_pn_chars(s.peek(1))):
                out.append(s.advance())
        s.expect(":")
        return "".join(out)

    def _prefixed_name(self) -> IRI:
        s = self.s
        start_line, start_col = s.line, s.col
        prefix = self._pname_ns()
        if prefix not in self.prefixes:
            raise ParseError(f"undefined prefix {prefix + ':'!r}", start_line, start_col)
        local: list[str] = []
        while not s.at_end():
            ch = s.peek()
            if _is_pn_chars(ch) or ch == ":":
                local.append(s.advance())
            elif ch == "." and (_is_pn_chars(s.peek(1)) or s.peek(1) in ":.%\\"):
                local.append(s.advance())
            elif ch == "%":
                hex2 = s.peek(1) + s.peek(2)
                if len(hex2) == 2 and all(c in "0123456789abcdefABCDEF" for c in hex2):
                    local.append(s.advance(3))
                else:
                    raise s.error("bad %-escape in prefixed name")
            elif ch == "\\":
                esc = s.peek(1)
                if esc in _PN_LOCAL_ESC:
                    s.advance(2)
                    local.append(esc)
                else:
                    raise s.error(f"bad local-name escape \\{esc}")
            else:
                break
        return IRI(self.prefixes[prefix] + "".join(local))

    def _blank_node_label(self) -> BlankNode:
        s = self.s
        s.expect("_:")
        if not (_is_pn_chars_u(s.peek()) or s.peek().isdigit()):
            raise s.error("bad blank node label")
        out = [s.advance()]
        while _is_pn_chars(s.peek()) or (s.peek() == "." and _is_pn_chars(s.peek(1))):
            out.append(s.advance())
        label = "".join(out)
        node = self.blank_labels.get(label)
        if node is None:
            node = self._fresh_blank()
            self.blank_labels[label] = node
        return node

    def _fresh_blank(self) -> BlankNode:
        return BlankNode(f"b{next(_fresh_blank_ids)}")

    def _rdf_literal(self) -> Literal:
        s = self.s
        lexical = self._string()
        if s.peek() == "@":
            s.advance()
            tag: list[str] = []
            while s.peek().isalnum() or s.peek() == "-":
                tag.append(s.advance())
            if not tag:
                raise s.error("empty language tag")
            try:
                return Literal(lexical, language="".join(tag))
            except TermError as exc:
                raise s.error(str(exc)) from exc
        if s.peek() == "^" and s.peek(1) == "^":
            s.advance(2)
            datatype = self._iri()
            try:
                return Literal(lexical, datatype=datatype)
            except TermError as exc:
                raise s.error(str(exc)) from exc
        return Literal(lexical)

    def _string(self) -> str:
        s = self.s
        quote = s.peek()
        if s.peek() == quote and s.peek(1) == quote and s.peek(2) == quote:
            return self._long_string(quote)
        s.advance()
        out: list[str] = []
        while True:
            if s.at_end():
                raise s.error("unterminated string")
            ch = s.advance()
            if ch == quote:
                break
            if ch == "\n" or ch == "\r":
                raise s.error("newline in single-quoted string")
            if ch == "\\":
                out.append(self._string_escape())
            else:
                out.append(ch)
        return "".join(out)

    def _long_string(self, quote: str) -> str:
        s = self.s
        s.advance(3)
        out: list[str] = []
        while True:
            if s.at_end():
                raise s.error("unterminated long string")
            if s.peek() == quote and s.peek(1) == quote and s.peek(2) == quote:
                s.advance(3)
                break
            ch = s.advance()
            if ch == "\\":
                out.append(self._string_escape())
            else:
                out.append(ch)
        return "".join(out)

    def _string_escape(self) -> str:
        s = self.s
        ch = s.advance()
        simple = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}
        if ch in simple:
            return simple[ch]
        if ch in "uU":
            s.pos -= 1
            s.col -= 1
            return self._unicode_escape(iri=False)
        raise s.error(f"unknown string escape \\{ch}")

    def _unicode_escape(self, iri: bool) -> str:
        s = self.s
        kind = s.advance()
        if kind not in "uU":
            raise s.error(f"unknown {'IRI ' if iri else ''}escape \\{kind}")
        width = 4 if kind == "u" else 8
        digits = s.advance(width)
        if len(digits) != width or not all(c in "0123456789abcdefABCDEF" for c in digits):
            raise s.error(f"bad \\{kind} escape")
        return chr(int(digits, 16))

    def _numeric_literal(self) -> Literal:
        s = self.s
        out: list[str] = []
        if s.peek() in "+-":
            out.append(s.advance())
        seen_digit = seen_dot = seen_exp = False
        while True:
            ch = s.peek()
            if ch.isdigit():
                out.append(s.advance())
                seen_digit = True
            elif ch == "." and not seen_dot and not seen_exp and s.peek(1).isdigit():
                out.append(s.advance())
                seen_dot = True
            elif ch in "eE" and seen_digit and not seen_exp:
                nxt = s.peek(1)
                nxt2 = s.peek(2)
                if nxt.isdigit() or (nxt in "+-" and nxt2.isdigit()):
                    out.append(s.advance())
                    if s.peek() in "+-":
                        out.append(s.advance())
                    seen_exp = True
                else:
                    break
            else:
                break
        text = "".join(out)
        if not seen_digit:
            raise s.error(f"malformed number {text!r}")
        if seen_exp:
            return Literal(text, datatype=IRI(XSD_DOUBLE))
        if seen_dot:
            return Literal(text, datatype=IRI(XSD_DECIMAL))
        return Literal(text, datatype=IRI(XSD_INTEGER))


def _has_scheme(value: str) -> bool:
    i = value.find(":")
    if i <= 0:
        return False
    head = value[:i]
    if not head[0].isalpha():
        return False
    return all(c.isalnum() or c in "+-." for c in head)


def parse_turtle(text: str, base: str | None = None) -> Dataset:
    return _TurtleParser(text, base=base).parse()


def parse_nquads(text: str) -> Dataset:
    p = _TurtleParser(text)
    s = p.s
    quads: list[Quad] = []
    s.skip_ws()
    while not s.at_end():
        subject: Term
        if s.peek() == "_" and s.peek(1) == ":":
            subject = p._blank_node_label()
        else:
            subject = p._iriref()
        s.skip_ws()
        predicate = p._iriref()
        s.skip_ws()
        if s.peek() in "\"'":
            obj: Term = p._rdf_literal()
        elif s.peek() == "_" and s.peek(1) == ":":
            obj = p._blank_node_label()
        else:
            obj = p._iriref()
        s.skip_ws()
        graph: GraphLabel = DEFAULT_GRAPH
        if s.peek() != ".":
            if s.peek() == "_" and s.peek(1) == ":":
                raise s.error("blank node graph labels are not supported")
            graph = p._iriref()
            s.skip_ws()
        s.expect(".")
        try:
            quads.append(Quad(subject, predicate, obj, graph))
        except TermError as exc:
            raise s.error(str(exc)) from exc
        s.skip_ws()
    return Dataset(quads)


def parse(text: str, format: str = "turtle", base: str | None = None) -> Dataset:
    if format == "turtle":
        return parse_turtle(text, base=base)
    if format == "nquads":
        return parse_nquads(text)
    raise ValueError(f"unknown parse format: {format!r}")
