"""RDF term and quad model.

Terms are immutable values: IRIs, blank nodes, and literals. Quads add a
graph label; the default graph is the DEFAULT_GRAPH sentinel, which is
distinct from every IRI.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

XSD = "http://www.w3.org/2001/XMLSchema#"
RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"

XSD_STRING = XSD + "string"
XSD_INTEGER = XSD + "integer"
XSD_DECIMAL = XSD + "decimal"
XSD_DOUBLE = XSD + "double"
XSD_BOOLEAN = XSD + "boolean"
RDF_TYPE = RDF + "type"
RDF_LANG_STRING = RDF + "langString"
RDF_FIRST = RDF + "first"
RDF_REST = RDF + "rest"
RDF_NIL = RDF + "nil"

# absolute IRI = scheme ':' ...
_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")

# BCP-47-ish language tag: alphanumeric subtags joined by '-'
_LANGTAG_RE = re.compile(r"^[A-Za-z]{1,8}(-[A-Za-z0-9]{1,8})*$")


class TermError(ValueError):
    """An RDF term or quad violates a model invariant."""


class Term:
    """Base class for IRI, BlankNode, and Literal."""

    __slots__ = ()


@dataclass(frozen=True, slots=True)
class IRI(Term):
    value: str

    def __post_init__(self) -> None:
        if not _SCHEME_RE.match(self.value):
            raise TermError(f"IRI is not absolute (no scheme): {self.value!r}")

    def __repr__(self) -> str:
        return f"<{self.value}>"


@dataclass(frozen=True, slots=True)
class BlankNode(Term):
    label: str

    def __repr__(self) -> str:
        return f"_:{self.label}"


@dataclass(frozen=True, slots=True)
class Literal(Term):
    """A literal with optional datatype or language tag (never both).

    Plain literals and explicit xsd:string literals are the same value:
    the datatype is normalized away. A language tag implies
    rdf:langString, which is likewise normalized away.
    """

    lexical: str
    datatype: IRI | None = None
    language: str | None = None

    def __post_init__(self) -> None:
        if self.language is not None:
            if not _LANGTAG_RE.match(self.language):
                raise TermError(f"malformed language tag: {self.language!r}")
            if self.datatype is not None and self.datatype.value != RDF_LANG_STRING:
                raise TermError(
                    "literal cannot carry both a language tag and a datatype "
                    f"({self.datatype.value})"
                )
            object.__setattr__(self, "language", self.language.lower())
            object.__setattr__(self, "datatype", None)
        elif self.datatype is not None and self.datatype.value == XSD_STRING:
            object.__setattr__(self, "datatype", None)
        elif self.datatype is not None and self.datatype.value == RDF_LANG_STRING:
            raise TermError("rdf:langString literal requires a language tag")

    @property
    def effective_datatype(self) -> str:
        if self.language is not None:
            return RDF_LANG_STRING
        if self.datatype is not None:
            return self.datatype.value
        return XSD_STRING

    def __repr__(self) -> str:
        if self.language:
            return f'"{self.lexical}"@{self.language}'
        if self.datatype:
            return f'"{self.lexical}"^^<{self.datatype.value}>'
        return f'"{self.lexical}"'


class _DefaultGraph:
    """Reserved marker for the default graph; a singleton, not an IRI."""

    __slots__ = ()
    _instance: "_DefaultGraph | None" = None

    def __new__(cls) -> "_DefaultGraph":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "DEFAULT_GRAPH"


DEFAULT_GRAPH = _DefaultGraph()

GraphLabel = IRI | _DefaultGraph


def typed(lexical: str, datatype: str) -> Literal:
    return Literal(lexical, datatype=IRI(datatype))


def integer(value: int) -> Literal:
    return Literal(str(value), datatype=IRI(XSD_INTEGER))


def double(value: float) -> Literal:
    return Literal(repr(float(value)), datatype=IRI(XSD_DOUBLE))


def boolean(value: bool) -> Literal:
    return Literal("true" if value else "false", datatype=IRI(XSD_BOOLEAN))


@dataclass(frozen=True, slots=True)
class Quad:
    subject: Term
    predicate: Term
    object: Term
    graph: GraphLabel = field(default=DEFAULT_GRAPH)

    def __post_init__(self) -> None:
        if isinstance(self.subject, Literal) or not isinstance(self.subject, (IRI, BlankNode)):
            raise TermError(f"quad subject must be an IRI or blank node: {self.subject!r}")
        if not isinstance(self.predicate, IRI):
            raise TermError(f"quad predicate must be an IRI: {self.predicate!r}")
        if not isinstance(self.object, Term):
            raise TermError(f"quad object must be a Term: {self.object!r}")
        if not isinstance(self.graph, (IRI, _DefaultGraph)):
            raise TermError(f"quad graph must be an IRI or DEFAULT_GRAPH: {self.graph!r}")

    def __repr__(self) -> str:
        g = "" if self.graph is DEFAULT_GRAPH else f" {self.graph!r}"
        return f"({self.subject!r} {self.predicate!r} {self.object!r}{g})"
