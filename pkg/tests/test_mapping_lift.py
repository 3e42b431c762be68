"""Lifting rules: loader validation and execution semantics."""

import json
import random

import pytest

import mapping_cases as cases
from quadpipe.mapping import (
    MappingContext,
    MappingExecutionError,
    MappingLoadError,
    SourceDocument,
    lift,
    load_mapping,
    parse_template,
)
from quadpipe.rdf import Dataset, IRI, Literal, Quad, RDF_TYPE, typed

TYPE = IRI(RDF_TYPE)

P = cases.PREFIXES


def doc_json(text):
    return SourceDocument.from_text(text, "json")


class TestTemplates:
    def test_placeholders_and_literals(self):
        t = parse_template("urn:a:{x}-{y|fix}")
        assert [p.path for p in t.placeholders] == ["x", "y"]
        assert t.placeholders[1].transform == "fix"

    def test_escapes(self):
        t = parse_template(r"a\{b\}c{x}")
        assert t.parts[0] == "a{b}c"

    @pytest.mark.parametrize(
        "bad, fragment",
        [
            ("no placeholder", "no {path} placeholder"),
            ("urn:{", "unclosed"),
            ("urn:}", "unmatched"),
            ("urn:{}", "empty placeholder"),
            ("urn:{|fix}", "no path"),
        ],
    )
    def test_bad_templates(self, bad, fragment):
        with pytest.raises(MappingLoadError, match=fragment):
            parse_template(bad)


class TestLoader:
    @pytest.mark.parametrize(
        "body, fragment",
        [
            # unknown vocabulary terms are named in the error
            (
                """map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:CSV ;
                     rml:query "SELECT 1" ] ; rr:subject ex:a .""",
                "rml#query",
            ),
            (
                """map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:CSV ] ;
                     rr:subjectMap [ rr:template "urn:a:{x}" ; rr:inverseExpression "x" ] .""",
                "inverseExpression",
            ),
            (
                """map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:CSV ] ;
                     rr:subjectMap [ rr:template "urn:a:{x}" ] ;
                     rr:predicateObjectMap [ rr:predicate ex:p ; rr:objectMap [ rml:reference "x" ; rr:graphMap ex:g ] ] .""",
                "graphMap",
            ),
            # structural mistakes
            (
                """map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:SQL ] ;
                     rr:subject ex:a .""",
                "referenceFormulation",
            ),
            (
                """map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:CSV ] .""",
                "subjectMap or subject",
            ),
            (
                """map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:CSV ] ;
                     rr:subjectMap [ rr:template "urn:a:{x}" ; rml:reference "x" ] .""",
                "exactly one of template, reference, or constant",
            ),
            (
                """map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:CSV ] ;
                     rr:subjectMap [ rr:template "urn:a:{x}" ; rr:termType rr:Literal ] .""",
                "cannot produce literals",
            ),
            (
                """map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:CSV ] ;
                     rr:subjectMap [ rr:template "urn:a:{x}" ] ;
                     rr:predicateObjectMap [ rr:predicate ex:p ;
                       rr:objectMap [ rml:reference "x" ; rr:datatype xsd:int ; rr:language "en" ] ] .""",
                "mutually exclusive",
            ),
            (
                """map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:CSV ] ;
                     rr:subjectMap [ rr:template "urn:a:{x}" ] ;
                     rr:predicateObjectMap [ rr:predicate ex:p ;
                       rr:objectMap [ rr:parentTriplesMap map:gone ] ] .""",
                "does not name a triples map",
            ),
            (
                """map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:CSV ] ;
                     rr:subjectMap [ rr:template "urn:a:{x}" ] ;
                     rr:predicateObjectMap [ rr:predicate "p" ; rr:object ex:o ] .""",
                "predicate must be an IRI",
            ),
            (
                """map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:CSV ] ;
                     rr:subjectMap [ rr:template "urn:a:{x}" ] ;
                     rr:predicateObjectMap [ rr:predicate ex:p ;
                       rr:objectMap [ rml:reference "x" ; rr:joinCondition [ rr:child "a" ; rr:parent "b" ] ] ] .""",
                "joinCondition without parentTriplesMap",
            ),
            (
                """map:m rml:logicalSource [ rml:source "s" ;
                     rml:referenceFormulation ql:JSONPath ; rml:iterator "$.items[" ] ;
                     rr:subject ex:a .""",
                "bad iterator path",
            ),
            (
                """map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:XPath ] ;
                     rr:subject ex:a .""",
                "require an iterator",
            ),
            ("ex:a ex:b ex:c .", "no triples map"),
        ],
    )
    def test_load_errors(self, body, fragment):
        with pytest.raises(MappingLoadError, match=fragment):
            load_mapping(P + body)

    def test_rules_must_parse_as_turtle(self):
        with pytest.raises(MappingLoadError, match="does not parse"):
            load_mapping("this is not turtle")

    def test_foreign_annotations_are_ignored(self):
        rules = P + """
        map:m rdfs:label "my map" ; rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:CSV ] ;
          rr:subject ex:a ;
          rr:predicateObjectMap [ rr:predicate ex:p ; rr:object ex:o ] .
        """
        rules = "@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n" + rules
        doc = load_mapping(rules)
        assert len(doc.maps) == 1


class TestLiftOracles:
    def test_csv_two_rows_expand_exactly(self):
        actual, expected = cases.csv_case()
        assert actual == expected

    def test_json_iterator_skips_absent_fields(self):
        actual, expected = cases.json_iterator_case()
        assert actual == expected

    def test_parent_join_matches_brute_force(self):
        actual, expected = cases.parent_join_case()
        assert actual == expected

    def test_gtfs_stops_rows_lift_to_stop_resources(self):
        stops = "stop_id,stop_name,stop_lat,stop_lon\nS1,Central,52.1,4.3\nS2,Harbour,52.2,4.4\n"
        rules = P + """
        map:stops rml:logicalSource [ rml:source "stops" ; rml:referenceFormulation ql:CSV ] ;
          rr:subjectMap [ rr:template "urn:stop:{stop_id}" ; rr:class ex:Stop ] ;
          rr:predicateObjectMap [ rr:predicate ex:name ; rr:objectMap [ rml:reference "stop_name" ] ] ;
          rr:predicateObjectMap [ rr:predicate ex:lat ;
                                  rr:objectMap [ rml:reference "stop_lat" ; rr:datatype xsd:double ] ] ;
          rr:predicateObjectMap [ rr:predicate ex:lon ;
                                  rr:objectMap [ rml:reference "stop_lon" ; rr:datatype xsd:double ] ] .
        """
        out = lift(load_mapping(rules), {"stops": SourceDocument.from_text(stops, "csv")})
        expected = Dataset()
        for sid, name, lat, lon in (("S1", "Central", "52.1", "4.3"), ("S2", "Harbour", "52.2", "4.4")):
            s = IRI(f"urn:stop:{sid}")
            expected.add(Quad(s, TYPE, cases.ex("Stop")))
            expected.add(Quad(s, cases.ex("name"), Literal(name)))
            expected.add(Quad(s, cases.ex("lat"), typed(lat, cases.XSD + "double")))
            expected.add(Quad(s, cases.ex("lon"), typed(lon, cases.XSD + "double")))
        assert out == expected


class TestLiftSemantics:
    def test_absent_subject_path_skips_whole_node(self):
        rules = P + """
        map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:JSONPath ; rml:iterator "$[*]" ] ;
          rr:subjectMap [ rr:template "urn:x:{id}" ; rr:class ex:T ] .
        """
        out = lift(load_mapping(rules), {"s": doc_json('[{"id": "a"}, {"nope": 1}]')})
        assert len(out) == 1

    def test_cross_product_join_without_conditions(self):
        rules = P + """
        map:child rml:logicalSource [ rml:source "l" ; rml:referenceFormulation ql:JSONPath ; rml:iterator "$[*]" ] ;
          rr:subjectMap [ rr:template "urn:l:{i}" ] ;
          rr:predicateObjectMap [ rr:predicate ex:r ;
            rr:objectMap [ rr:parentTriplesMap map:parent ] ] .
        map:parent rml:logicalSource [ rml:source "r" ; rml:referenceFormulation ql:JSONPath ; rml:iterator "$[*]" ] ;
          rr:subjectMap [ rr:template "urn:r:{j}" ] .
        """
        out = lift(
            load_mapping(rules),
            {"l": doc_json('[{"i": 1}, {"i": 2}, {"i": 3}]'), "r": doc_json('[{"j": 1}, {"j": 2}]')},
        )
        links = [q for q in out if q.predicate == cases.ex("r")]
        assert len(links) == 6

    def test_graph_map_routes_quads_to_named_graph(self):
        rules = P + """
        map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:JSONPath ; rml:iterator "$[*]" ] ;
          rr:subjectMap [ rr:template "urn:x:{id}" ; rr:class ex:T ;
                          rr:graphMap [ rr:template "urn:g:{id}" ] ] .
        """
        out = lift(load_mapping(rules), {"s": doc_json('[{"id": "a"}, {"id": "b"}]')})
        assert Quad(IRI("urn:x:a"), TYPE, cases.ex("T"), IRI("urn:g:a")) in out
        assert Quad(IRI("urn:x:b"), TYPE, cases.ex("T"), IRI("urn:g:b")) in out

    def test_constant_graph_and_constant_object(self):
        rules = P + """
        map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:JSONPath ; rml:iterator "$[*]" ] ;
          rr:subjectMap [ rr:template "urn:x:{id}" ; rr:graph ex:g ] ;
          rr:predicateObjectMap [ rr:predicate ex:p ; rr:object "fixed" ] .
        """
        out = lift(load_mapping(rules), {"s": doc_json('[{"id": "a"}]')})
        assert out == Dataset([Quad(IRI("urn:x:a"), cases.ex("p"), Literal("fixed"), cases.ex("g"))])

    def test_blank_node_subjects(self):
        rules = P + """
        map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:JSONPath ; rml:iterator "$[*]" ] ;
          rr:subjectMap [ rr:template "row{id}" ; rr:termType rr:BlankNode ; rr:class ex:T ] .
        """
        out = lift(load_mapping(rules), {"s": doc_json('[{"id": "1"}]')})
        quad = next(iter(out))
        assert quad.subject.label == "row1"

    def test_transform_is_applied_to_placeholder_value(self):
        rules = P + """
        map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:JSONPath ; rml:iterator "$[*]" ] ;
          rr:subjectMap [ rr:template "urn:x:{id|shout}" ] ;
          rr:predicateObjectMap [ rr:predicate ex:p ; rr:object "v" ] .
        """
        ctx = MappingContext()
        ctx.register_transform("shout", lambda value, _ctx: value.upper())
        out = lift(load_mapping(rules), {"s": doc_json('[{"id": "ab"}]')}, ctx)
        assert next(iter(out)).subject == IRI("urn:x:AB")

    def test_transform_returning_none_skips(self):
        rules = P + """
        map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:JSONPath ; rml:iterator "$[*]" ] ;
          rr:subjectMap [ rr:template "urn:x:{id|veto}" ; rr:class ex:T ] .
        """
        ctx = MappingContext()
        ctx.register_transform("veto", lambda value, _ctx: None if value == "bad" else value)
        out = lift(load_mapping(rules), {"s": doc_json('[{"id": "ok"}, {"id": "bad"}]')}, ctx)
        assert len(out) == 1

    def test_percent_encode_flag_rescues_spaced_values(self):
        rules_plain = P + """
        map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:JSONPath ; rml:iterator "$[*]" ] ;
          rr:subjectMap [ rr:template "urn:x:{id}" ; rr:class ex:T ] .
        """
        rules_encoded = rules_plain.replace(
            'rr:template "urn:x:{id}"',
            '<urn:x-map:percentEncode> true ; rr:template "urn:x:{id}"',
        )
        src = {"s": doc_json('[{"id": "has space"}]')}
        with pytest.raises(MappingExecutionError, match="has space"):
            lift(load_mapping(rules_plain), src)
        out = lift(load_mapping(rules_encoded), src)
        assert next(iter(out)).subject == IRI("urn:x:has%20space")

    @pytest.mark.parametrize(
        "sources, fragment",
        [
            ({}, "unknown source"),
            ({"s": "csv-doc"}, "expect json"),
        ],
    )
    def test_execution_source_errors(self, sources, fragment):
        rules = P + """
        map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:JSONPath ; rml:iterator "$[*]" ] ;
          rr:subject ex:a ;
          rr:predicateObjectMap [ rr:predicate ex:p ; rr:object "v" ] .
        """
        if sources.get("s") == "csv-doc":
            sources = {"s": SourceDocument.from_text("a,b\n1,2\n", "csv")}
        with pytest.raises(MappingExecutionError, match=fragment):
            lift(load_mapping(rules), sources)

    def test_multi_valued_path_in_term_map_is_an_error(self):
        rules = P + """
        map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:JSONPath ; rml:iterator "$" ] ;
          rr:subjectMap [ rr:template "urn:x:{items[*]}" ] ;
          rr:predicateObjectMap [ rr:predicate ex:p ; rr:object "v" ] .
        """
        with pytest.raises(MappingExecutionError, match="selected 2 values"):
            lift(load_mapping(rules), {"s": doc_json('{"items": ["a", "b"]}')})

    def test_unknown_transform_is_an_error(self):
        rules = P + """
        map:m rml:logicalSource [ rml:source "s" ; rml:referenceFormulation ql:JSONPath ; rml:iterator "$[*]" ] ;
          rr:subjectMap [ rr:template "urn:x:{id|nope}" ] ;
          rr:predicateObjectMap [ rr:predicate ex:p ; rr:object "v" ] .
        """
        with pytest.raises(MappingExecutionError, match="unknown transform 'nope'"):
            lift(load_mapping(rules), {"s": doc_json('[{"id": "a"}]')})

    def test_reserved_source_name_is_rejected(self):
        mapping = load_mapping(cases.SENSOR_RULES)
        with pytest.raises(MappingExecutionError, match="reserved"):
            lift(mapping, {"context": SourceDocument.from_text("id\n1\n", "csv"),
                           "sensors": SourceDocument.from_text(cases.SENSOR_CSV, "csv")})


class TestLiftProperties:
    def test_lift_is_deterministic(self):
        rng = random.Random(4821)
        for _ in range(25):
            items = [
                {"id": str(rng.randrange(100))}
                | ({"qty": rng.randrange(50)} if rng.random() < 0.6 else {})
                for _ in range(rng.randrange(12))
            ]
            payload = json.dumps({"items": items})
            runs = [
                lift(load_mapping(cases.ITEMS_RULES),
                     {"inventory": SourceDocument.from_text(payload, "json")})
                for _ in range(2)
            ]
            assert runs[0] == runs[1]

    def test_quads_per_map_bounded_by_iteration_nodes(self):
        rng = random.Random(977)
        qty = cases.ex("qty")
        for _ in range(40):
            items = [
                ({"sku": f"s{i}"} | ({"qty": rng.randrange(9)} if rng.random() < 0.5 else {}))
                for i in range(rng.randrange(20))
            ]
            payload = json.dumps({"items": items})
            out = lift(
                load_mapping(cases.ITEMS_RULES),
                {"inventory": SourceDocument.from_text(payload, "json")},
            )
            per_predicate = sum(1 for q in out if q.predicate == qty)
            assert per_predicate <= len(items)
            expected_qty = sum(1 for item in items if "qty" in item)
            assert per_predicate == expected_qty
