import pytest

from quadpipe.rdf import (
    DEFAULT_GRAPH,
    BlankNode,
    IRI,
    Literal,
    Quad,
    TermError,
    boolean,
    double,
    integer,
    typed,
)
from quadpipe.rdf.terms import RDF_LANG_STRING, XSD_BOOLEAN, XSD_INTEGER, XSD_STRING


def test_iri_requires_scheme():
    IRI("http://example.org/x")
    IRI("urn:uuid:1234")
    IRI("tag:me,2024:x")
    for bad in ("", "example.org/x", "/relative", "#frag", "no scheme", ":leading"):
        with pytest.raises(TermError):
            IRI(bad)


def test_plain_and_string_literals_are_one_value():
    assert Literal("a") == Literal("a", datatype=IRI(XSD_STRING))
    assert Literal("a").datatype is None
    assert Literal("a").effective_datatype == XSD_STRING


def test_language_tags_lowercase_and_imply_langstring():
    lit = Literal("Hallo", language="DE")
    assert lit.language == "de"
    assert lit.datatype is None
    assert lit.effective_datatype == RDF_LANG_STRING
    assert Literal("x", language="en") != Literal("x", language="de")
    assert Literal("x", language="EN") == Literal("x", language="en")


def test_langstring_rules():
    with pytest.raises(TermError):
        Literal("x", datatype=IRI(RDF_LANG_STRING))  # tag required
    with pytest.raises(TermError):
        Literal("x", language="en", datatype=IRI(XSD_STRING))  # not both
    with pytest.raises(TermError):
        Literal("x", language="not a tag!")
    # langString datatype plus a tag is the normal form and collapses
    assert Literal("x", language="en", datatype=IRI(RDF_LANG_STRING)) == Literal("x", language="en")


def test_typed_helpers():
    assert integer(42) == Literal("42", datatype=IRI(XSD_INTEGER))
    assert boolean(True) == Literal("true", datatype=IRI(XSD_BOOLEAN))
    assert double(0.5).datatype.value.endswith("double")
    assert typed("7", XSD_INTEGER) == integer(7)


def test_quad_positional_rules():
    s = IRI("http://example.org/s")
    p = IRI("http://example.org/p")
    Quad(s, p, Literal("x"))
    Quad(BlankNode("b"), p, s)
    Quad(s, p, s, IRI("http://example.org/g"))
    with pytest.raises(TermError):
        Quad(Literal("x"), p, s)  # literal subject
    with pytest.raises(TermError):
        Quad(s, BlankNode("b"), s)  # blank predicate
    with pytest.raises(TermError):
        Quad(s, p, s, "http://example.org/g")  # graph must be IRI or default


def test_default_graph_is_a_singleton_not_an_iri():
    assert Quad(IRI("urn:s"), IRI("urn:p"), Literal("x")).graph is DEFAULT_GRAPH
    assert not isinstance(DEFAULT_GRAPH, IRI)


def test_terms_are_hashable_values():
    assert len({IRI("urn:a"), IRI("urn:a"), BlankNode("a"), Literal("a")}) == 3
    with pytest.raises(Exception):
        IRI("urn:a").value = "urn:b"
