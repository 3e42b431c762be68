"""RDF core: terms, quad store, readers/writers, isomorphism, queries."""

from .dataset import ANY, Dataset
from .isomorphism import canonical_form, canonical_labels, isomorphic
from .parser import ParseError, parse, parse_nquads, parse_turtle
from .serialize import serialize, term_text, to_nquads, to_turtle
from .sparql import (
    QueryError,
    SelectResult,
    UnsupportedQueryError,
    evaluate,
    parse_query,
)
from .terms import (
    DEFAULT_GRAPH,
    RDF,
    RDF_TYPE,
    XSD,
    BlankNode,
    GraphLabel,
    IRI,
    Literal,
    Quad,
    Term,
    TermError,
    boolean,
    double,
    integer,
    typed,
)

__all__ = [
    "ANY",
    "BlankNode",
    "DEFAULT_GRAPH",
    "Dataset",
    "GraphLabel",
    "IRI",
    "Literal",
    "ParseError",
    "Quad",
    "QueryError",
    "RDF",
    "RDF_TYPE",
    "SelectResult",
    "Term",
    "TermError",
    "UnsupportedQueryError",
    "XSD",
    "boolean",
    "canonical_form",
    "canonical_labels",
    "double",
    "evaluate",
    "integer",
    "isomorphic",
    "parse",
    "parse_nquads",
    "parse_query",
    "parse_turtle",
    "serialize",
    "term_text",
    "to_nquads",
    "to_turtle",
    "typed",
]
