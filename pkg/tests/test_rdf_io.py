import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_dataset
from quadpipe.rdf import (
    DEFAULT_GRAPH,
    BlankNode,
    Dataset,
    IRI,
    Literal,
    ParseError,
    Quad,
    integer,
    isomorphic,
    parse,
    serialize,
    to_nquads,
    to_turtle,
    typed,
)
from quadpipe.rdf.terms import RDF, XSD_BOOLEAN, XSD_DECIMAL, XSD_DOUBLE, XSD_INTEGER

EX = "http://example.org/"


def iri(s):
    return IRI(EX + s)


# -- fixture with hand-derived expected quads ---------------------------------

FIXTURE = """
@prefix ex: <http://example.org/> .
@prefix : <http://example.org/d/> .
@base <http://example.org/base/> .

ex:alice a ex:Person ;
    ex:name "Alice" , "Alicia"@ES ;
    ex:age 34 ;
    ex:balance -2.50 ;
    ex:rating 4.5e-1 ;
    ex:active true ;
    ex:note '''two
lines''' ;
    ex:quote "she said \\"hi\\"" .

:item ex:label "colon prefix" .
<relative> ex:near <#anchor> .
_:joe ex:knows _:sue .
_:sue ex:knows _:joe .
ex:alice ex:tools ( ex:hammer "nail" ) .
ex:alice ex:friend [ ex:name "Bob" ] .
ex:esc\\+name ex:p "pnlocal escape" .

GRAPH ex:g {
    ex:alice ex:status "away" .
}
"""


def expected_fixture_dataset() -> Dataset:
    a = iri("alice")
    joe, sue, bob = BlankNode("j"), BlankNode("s"), BlankNode("b")
    l1, l2 = BlankNode("l1"), BlankNode("l2")
    nil = IRI(RDF + "nil")
    first, rest = IRI(RDF + "first"), IRI(RDF + "rest")
    g = iri("g")
    return Dataset(
        [
            Quad(a, IRI(RDF + "type"), iri("Person")),
            Quad(a, iri("name"), Literal("Alice")),
            Quad(a, iri("name"), Literal("Alicia", language="es")),
            Quad(a, iri("age"), typed("34", XSD_INTEGER)),
            Quad(a, iri("balance"), typed("-2.50", XSD_DECIMAL)),
            Quad(a, iri("rating"), typed("4.5e-1", XSD_DOUBLE)),
            Quad(a, iri("active"), typed("true", XSD_BOOLEAN)),
            Quad(a, iri("note"), Literal("two\nlines")),
            Quad(a, iri("quote"), Literal('she said "hi"')),
            Quad(IRI(EX + "d/item"), iri("label"), Literal("colon prefix")),
            Quad(IRI(EX + "base/relative"), iri("near"), IRI(EX + "base/#anchor")),
            Quad(joe, iri("knows"), sue),
            Quad(sue, iri("knows"), joe),
            Quad(a, iri("tools"), l1),
            Quad(l1, first, iri("hammer")),
            Quad(l1, rest, l2),
            Quad(l2, first, Literal("nail")),
            Quad(l2, rest, nil),
            Quad(a, iri("friend"), bob),
            Quad(bob, iri("name"), Literal("Bob")),
            Quad(iri("esc+name"), iri("p"), Literal("pnlocal escape")),
            Quad(a, iri("status"), Literal("away"), g),
        ]
    )


def test_fixture_parses_to_expected_quads():
    parsed = parse(FIXTURE, "turtle")
    expected = expected_fixture_dataset()
    assert len(parsed) == len(expected)
    assert isomorphic(parsed, expected)


def test_fixture_survives_both_serializations():
    ds = parse(FIXTURE, "turtle")
    assert isomorphic(parse(to_nquads(ds), "nquads"), ds)
    assert isomorphic(parse(to_turtle(ds), "turtle"), ds)


def test_pn_local_escape():
    ds = parse(FIXTURE, "turtle")
    assert ds.quads(subject=IRI(EX + "esc+name"))


# -- small parser behaviors -----------------------------------------------------


def test_empty_and_comment_only_documents():
    assert len(parse("", "turtle")) == 0
    assert len(parse("# nothing here\n  \n", "turtle")) == 0
    assert len(parse("", "nquads")) == 0


def test_sparql_style_directives_without_dot():
    ds = parse("PREFIX ex: <http://example.org/>\nBASE <http://b.org/>\nex:s ex:p <x> .")
    assert ds.quads(object=IRI("http://b.org/x"))


def test_blank_labels_are_scoped_per_parse():
    a = parse("_:x <urn:p> <urn:o> .", "turtle")
    b = parse("_:x <urn:p> <urn:o2> .", "turtle")
    merged = Dataset(list(a) + list(b))
    assert len(merged) == 2
    subjects = {q.subject for q in merged}
    assert len(subjects) == 2, "same label in two documents must stay distinct"


def test_same_label_within_one_document_is_one_node():
    ds = parse("_:x <urn:p> <urn:a> . _:x <urn:p> <urn:b> .", "turtle")
    assert len({q.subject for q in ds}) == 1


def test_nquads_graph_column():
    ds = parse('<urn:s> <urn:p> "o" <urn:g> .\n<urn:s> <urn:p> "o" .\n', "nquads")
    assert len(ds) == 2
    assert ds.graphs() == [IRI("urn:g")]


def test_numeric_shorthand_classification():
    ds = parse("<urn:s> <urn:p> 5, -5, 0.5, -0.5, 1e0, 1.5E-2, +3 .")
    types = sorted(q.object.datatype.value.rsplit("#")[-1] for q in ds)
    assert types == ["decimal", "decimal", "double", "double", "integer", "integer", "integer"]


def test_empty_collection_is_nil():
    ds = parse("<urn:s> <urn:p> () .")
    assert list(ds)[0].object == IRI(RDF + "nil")


@pytest.mark.parametrize(
    "doc,fragment",
    [
        ("ex:s ex:p ex:o .", "undefined prefix"),
        ("<relative> <urn:p> <urn:o> .", "without a base"),
        ('<urn:s> <urn:p> "unterminated .', "unterminated string"),
        ('<urn:s> <urn:p> "bad \\q escape" .', "unknown string escape"),
        ("<urn:s> <urn:p> <urn:o>", "expected '.'"),
        ("<urn:s> <urn:p> .", "unexpected '.'"),
        ("@prefix ex <urn:x> .", "expected ':'"),
        ("<urn:s> <bad iri> <urn:o> .", "illegal character"),
        ('<urn:s> <urn:p> "x"@ .', "empty language tag"),
        ("GRAPH <urn:g> { <urn:s> <urn:p> <urn:o> .", "unterminated GRAPH"),
    ],
)
def test_syntax_errors_carry_position(doc, fragment):
    with pytest.raises(ParseError) as err:
        parse(doc, "turtle")
    assert fragment in str(err.value)
    assert "line" in str(err.value)
    assert err.value.line >= 1 and err.value.column >= 1


def test_error_line_numbers_count_newlines():
    doc = "# comment\n\n<urn:s> <urn:p> ex:o .\n"
    with pytest.raises(ParseError) as err:
        parse(doc)
    assert err.value.line == 3


def test_unknown_format_rejected():
    with pytest.raises(ValueError):
        parse("", "rdfxml")
    with pytest.raises(ValueError):
        serialize(Dataset(), "jsonld")


def test_literal_only_allowed_in_object_position():
    with pytest.raises(ParseError):
        parse('"lit" <urn:p> <urn:o> .')


def test_nquads_rejects_turtle_sugar():
    with pytest.raises(ParseError):
        parse("<urn:s> <urn:p> 5 .", "nquads")


# -- deterministic serialization --------------------------------------------------


def test_nquads_output_is_sorted_and_stable():
    from quadpipe.rdf.serialize import quad_sort_key

    rng = random.Random(3)
    ds = random_dataset(rng)
    text = to_nquads(ds)
    assert text == to_nquads(ds)
    lines = [line for line in text.splitlines() if line]
    keys = [quad_sort_key(q) for q in sorted(ds, key=quad_sort_key)]
    assert len(lines) == len(keys)
    assert keys == sorted(keys)
    for line, key in zip(lines, keys):
        assert line.startswith(key[1]), "lines follow (graph, s, p, o) order"
    # same content added in another order serializes identically
    quads = list(ds)
    rng.shuffle(quads)
    assert to_nquads(Dataset(quads)) == text


def test_turtle_output_stable_under_insertion_order():
    quads = list(random_dataset(random.Random(11)))
    a = to_turtle(Dataset(quads))
    b = to_turtle(Dataset(list(reversed(quads))))
    assert a == b


# -- randomized round trips -------------------------------------------------------


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_random_round_trips_hold_in_both_formats(seed):
    ds = random_dataset(random.Random(seed))
    assert isomorphic(parse(to_nquads(ds), "nquads"), ds)
    assert isomorphic(parse(to_turtle(ds), "turtle"), ds)


@settings(max_examples=60, deadline=None)
@given(
    st.text(min_size=0, max_size=40),
    st.sampled_from(["plain", "lang", "typed"]),
)
def test_arbitrary_literal_text_round_trips(text, kind):
    if kind == "plain":
        lit = Literal(text)
    elif kind == "lang":
        lit = Literal(text, language="en-us")
    else:
        lit = Literal(text, datatype=IRI(EX + "custom"))
    ds = Dataset([Quad(iri("s"), iri("p"), lit)])
    for fmt in ("nquads", "turtle"):
        back = parse(serialize(ds, fmt), fmt)
        assert list(back)[0].object == lit, fmt


def test_unicode_escape_forms():
    ds = parse('<urn:s> <urn:p> "\\u0041\\U0001F600" .')
    assert list(ds)[0].object.lexical == "A\U0001f600"
    ds2 = parse("<urn:s\\u0041> <urn:p> <urn:o> .")
    assert list(ds2)[0].subject == IRI("urn:sA")
