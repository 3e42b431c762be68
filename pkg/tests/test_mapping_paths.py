"""Path subset behaviour for JSON, XML, and CSV sources."""

import pytest

from quadpipe.mapping import PathError, SourceDocument, parse_jsonpath, parse_xpath
from quadpipe.mapping.sources import SourceError

DOC = {
    "store": {
        "books": [
            {"title": "A", "price": 10, "tags": ["x", "y"]},
            {"title": "B", "price": 20.5},
            {"title": "C", "extra": {"title": "inner"}},
        ],
        "open": True,
    }
}


class TestJsonPath:
    def test_child_steps(self):
        assert parse_jsonpath("$.store.open").select(DOC) == [True]

    def test_bracket_name_and_index(self):
        assert parse_jsonpath("$['store'].books[0].title").select(DOC) == ["A"]
        assert parse_jsonpath("$.store.books[-1].title").select(DOC) == ["C"]

    def test_wildcard_over_array(self):
        titles = parse_jsonpath("$.store.books[*].title").select(DOC)
        assert titles == ["A", "B", "C"]

    def test_wildcard_over_object(self):
        values = parse_jsonpath("$.store.*").select(DOC)
        assert len(values) == 2

    def test_recursive_descent_finds_nested(self):
        titles = parse_jsonpath("$..title").select(DOC)
        assert titles == ["A", "B", "C", "inner"]

    def test_bare_relative_name(self):
        node = DOC["store"]["books"][0]
        assert parse_jsonpath("title").select(node) == ["A"]
        assert parse_jsonpath("tags[0]").select(node) == ["x"]

    def test_absent_path_selects_nothing(self):
        assert parse_jsonpath("$.store.missing").select(DOC) == []
        assert parse_jsonpath("$.store.books[9]").select(DOC) == []

    @pytest.mark.parametrize(
        "bad",
        ["", "$.store.books[", "$.books[1:2]", "$.a b", "$.store.books[?(@.x)]"],
    )
    def test_unsupported_syntax_is_an_error(self, bad):
        with pytest.raises(PathError):
            parse_jsonpath(bad)


XML = b"""<?xml version="1.0"?>
<catalog version="2">
  <section name="fiction">
    <book id="b1" lang="en"><title>A</title><price>10</price></book>
    <book id="b2"><title>B</title></book>
  </section>
  <section name="tech">
    <book id="b3" lang="en"><title>C</title></book>
  </section>
</catalog>
"""


@pytest.fixture()
def xml_doc():
    return SourceDocument(XML, "xml", name="catalog.xml")


class TestXPath:
    def test_absolute_child_steps(self, xml_doc):
        books = xml_doc.iterate("/catalog/section/book")
        assert [b.attrib["id"] for b in books] == ["b1", "b2", "b3"]

    def test_descend_operator(self, xml_doc):
        books = xml_doc.iterate("//book")
        assert len(books) == 3

    def test_wildcard_step(self, xml_doc):
        sections = xml_doc.iterate("/catalog/*")
        assert [s.attrib["name"] for s in sections] == ["fiction", "tech"]

    def test_attribute_and_text_values(self, xml_doc):
        book = xml_doc.iterate("/catalog/section/book")[0]
        assert xml_doc.values(book, "@id") == ["b1"]
        assert xml_doc.values(book, "title") == ["A"]
        assert xml_doc.values(book, "title/text()") == ["A"]

    def test_parent_axis(self, xml_doc):
        book = xml_doc.iterate("/catalog/section/book")[0]
        assert xml_doc.values(book, "../@name") == ["fiction"]
        assert xml_doc.values(book, "../../@version") == ["2"]

    def test_attribute_equality_predicate(self, xml_doc):
        books = xml_doc.iterate("/catalog/section/book[@lang='en']")
        assert [b.attrib["id"] for b in books] == ["b1", "b3"]

    def test_negated_predicate_keeps_missing_attribute(self, xml_doc):
        books = xml_doc.iterate("/catalog/section/book[not(@lang='en')]")
        assert [b.attrib["id"] for b in books] == ["b2"]

    def test_absent_path_selects_nothing(self, xml_doc):
        book = xml_doc.iterate("/catalog/section/book")[1]
        assert xml_doc.values(book, "@lang") == []
        assert xml_doc.values(book, "price") == []

    def test_namespaced_tags_match_on_local_name(self):
        doc = SourceDocument(
            b'<r xmlns="urn:x"><item a="1"/></r>', "xml", name="ns.xml"
        )
        items = doc.iterate("/r/item")
        assert len(items) == 1
        assert doc.values(items[0], "@a") == ["1"]

    @pytest.mark.parametrize(
        "bad",
        ["", "/a/", "/a//", "a[position()=1]", "a[@x]", "a[@x=v]", "/a/@x/b", "a | b"],
    )
    def test_unsupported_syntax_is_an_error(self, bad):
        with pytest.raises(PathError):
            parse_xpath(bad)


class TestCsvSource:
    def test_rows_become_header_keyed_dicts(self):
        doc = SourceDocument(b"id,room\ns1,kitchen\ns2,lab\n", "csv")
        rows = doc.iterate(None)
        assert rows == [{"id": "s1", "room": "kitchen"}, {"id": "s2", "room": "lab"}]
        assert doc.values(rows[0], "room") == ["kitchen"]

    def test_unknown_column_is_absent(self):
        doc = SourceDocument(b"id\ns1\n", "csv")
        rows = doc.iterate(None)
        assert doc.values(rows[0], "nope") == []

    def test_short_rows_pad_with_empty(self):
        doc = SourceDocument(b"a,b\n1\n", "csv")
        assert doc.iterate(None) == [{"a": "1", "b": ""}]

    def test_custom_delimiter(self):
        doc = SourceDocument(b"a;b\n1;2\n", "csv", delimiter=";")
        assert doc.iterate(None) == [{"a": "1", "b": "2"}]

    def test_blank_lines_are_skipped(self):
        doc = SourceDocument(b"a,b\n1,2\n\n  ,\n3,4\n", "csv")
        assert len(doc.iterate(None)) == 2


class TestSourceDocument:
    def test_malformed_payloads_fail_at_construction(self):
        with pytest.raises(SourceError, match="invalid JSON"):
            SourceDocument(b"{nope", "json")
        with pytest.raises(SourceError, match="invalid XML"):
            SourceDocument(b"<a><b></a>", "xml")

    def test_unknown_format_is_rejected(self):
        with pytest.raises(SourceError, match="unknown source format"):
            SourceDocument(b"{}", "yaml")

    def test_json_numbers_and_booleans_stringify(self):
        doc = SourceDocument(b'[{"n": 3, "f": 2.5, "w": 3.0, "b": true}]', "json")
        node = doc.iterate("$[*]")[0]
        assert doc.values(node, "n") == ["3"]
        assert doc.values(node, "f") == ["2.5"]
        assert doc.values(node, "w") == ["3"]
        assert doc.values(node, "b") == ["true"]

    def test_json_null_counts_as_absent(self):
        doc = SourceDocument(b'[{"x": null}]', "json")
        node = doc.iterate("$[*]")[0]
        assert doc.values(node, "x") == []

    def test_xml_iterator_is_required_and_absolute(self):
        doc = SourceDocument(b"<a/>", "xml", name="a.xml")
        with pytest.raises(SourceError, match="require an iterator"):
            doc.iterate(None)
        with pytest.raises(SourceError, match="absolute"):
            doc.iterate("item")
