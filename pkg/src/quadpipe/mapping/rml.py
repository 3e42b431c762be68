"""Declarative lifting rules: non-RDF sources in, RDF quads out.

Rules are written in Turtle using a subset of the common mapping
vocabularies (rml:, rr:, ql:). A document is a set of triples maps; each
names a logical source, a subject map, and predicate-object maps. Term
maps are templates with `{path}` placeholders, direct path references, or
constants. Placeholders may name a registered value transform with
`{path|name}`.

The loader is strict: any unrecognized term in the mapping vocabularies is
a load error naming the term, a `parentTriplesMap` pointing nowhere is a
load error, and every path and template is parsed up front.

Execution walks iteration nodes in document order. A node whose referenced
path is absent simply produces no quad for that map; multi-valued paths in
term maps are an execution error, as is a template expansion that is not a
valid IRI (unless the map opts into percent-encoding).

The reserved source name "context" turns a triples map into a join target
against previously accumulated output: the parent's subject template is
expanded with the child's join values and the candidate is kept only when
that subject already occurs in the context graph.
"""

from __future__ import annotations

import re
import urllib.parse
from dataclasses import dataclass, field

from ..rdf import (
    DEFAULT_GRAPH,
    RDF_TYPE,
    BlankNode,
    Dataset,
    IRI,
    Literal,
    Quad,
    Term,
    TermError,
    parse,
    term_text,
)
from .context import MappingContext
from .paths import PathError, parse_jsonpath, parse_xpath
from .sources import SourceDocument

RML = "http://semweb.mmlab.be/ns/rml#"
RR = "http://www.w3.org/ns/r2rml#"
QL = "http://semweb.mmlab.be/ns/ql#"
MAPX = "urn:x-map:"

_FORMULATIONS = {
    QL + "JSONPath": "jsonpath",
    QL + "XPath": "xpath",
    QL + "CSV": "csv",
}
_FORMULATION_FORMAT = {"jsonpath": "json", "xpath": "xml", "csv": "csv"}

CONTEXT_SOURCE = "context"


class MappingError(ValueError):
    pass


class MappingLoadError(MappingError):
    pass


class MappingExecutionError(MappingError):
    pass


# -- term templates ---------------------------------------------------------------

_TRANSFORM_NAME = re.compile(r"^[A-Za-z0-9_-]+$")


@dataclass(frozen=True, slots=True)
class Placeholder:
    path: str
    transform: str | None


@dataclass(frozen=True, slots=True)
class Template:
    text: str
    parts: tuple  # str literals and Placeholders

    @property
    def placeholders(self) -> list[Placeholder]:
        return [p for p in self.parts if isinstance(p, Placeholder)]


def parse_template(text: str) -> Template:
    parts: list = []
    buf: list[str] = []
    i = 0
    n = len(text)
    found = False
    while i < n:
        ch = text[i]
        if ch == "\\" and i + 1 < n and text[i + 1] in "{}\\":
            buf.append(text[i + 1])
            i += 2
            continue
        if ch == "}":
            raise MappingLoadError(f"unmatched '}}' in template {text!r}")
        if ch != "{":
            buf.append(ch)
            i += 1
            continue
        end = text.find("}", i)
        if end < 0:
            raise MappingLoadError(f"unclosed '{{' in template {text!r}")
        inner = text[i + 1 : end]
        if not inner.strip():
            raise MappingLoadError(f"empty placeholder in template {text!r}")
        if buf:
            parts.append("".join(buf))
            buf = []
        parts.append(_split_placeholder(inner))
        found = True
        i = end + 1
    if buf:
        parts.append("".join(buf))
    if not found:
        raise MappingLoadError(f"template {text!r} has no {{path}} placeholder")
    return Template(text, tuple(parts))


def _split_placeholder(inner: str) -> Placeholder:
    bar = inner.rfind("|")
    if bar >= 0:
        name = inner[bar + 1 :].strip()
        if _TRANSFORM_NAME.match(name):
            path = inner[:bar].strip()
            if not path:
                raise MappingLoadError(f"placeholder {{{inner}}} has a transform but no path")
            return Placeholder(path, name)
    return Placeholder(inner.strip(), None)


# -- rule model -------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class LogicalSource:
    source_ref: str
    formulation: str  # jsonpath | xpath | csv
    iterator: str | None


@dataclass(frozen=True, slots=True)
class TermMap:
    kind: str  # template | reference | constant
    template: Template | None
    reference: str | None
    constant: Term | None
    term_type: str  # iri | literal | blank
    datatype: IRI | None
    language: str | None
    percent_encode: bool


@dataclass(frozen=True, slots=True)
class Join:
    child: str
    parent: str


@dataclass(frozen=True, slots=True)
class ObjectMap:
    term_map: TermMap | None
    parent_ref: str | None
    joins: tuple


@dataclass(frozen=True, slots=True)
class PredicateObjectMap:
    predicate: IRI
    object_map: ObjectMap


@dataclass(frozen=True, slots=True)
class TriplesMap:
    name: str
    logical_source: LogicalSource
    subject_map: TermMap
    classes: tuple
    graph_map: TermMap | None
    poms: tuple


@dataclass(slots=True)
class MappingDocument:
    maps: dict[str, TriplesMap] = field(default_factory=dict)

    def source_refs(self) -> list[str]:
        seen = []
        for tm in self.maps.values():
            if tm.logical_source.source_ref not in seen:
                seen.append(tm.logical_source.source_ref)
        return seen


# -- loader -----------------------------------------------------------------------


def _iri(namespace: str, local: str) -> IRI:
    return IRI(namespace + local)


_P_LOGICAL_SOURCE = _iri(RML, "logicalSource")
_P_SOURCE = _iri(RML, "source")
_P_FORMULATION = _iri(RML, "referenceFormulation")
_P_ITERATOR = _iri(RML, "iterator")
_P_REFERENCE = _iri(RML, "reference")
_P_SUBJECT_MAP = _iri(RR, "subjectMap")
_P_SUBJECT = _iri(RR, "subject")
_P_POM = _iri(RR, "predicateObjectMap")
_P_PREDICATE = _iri(RR, "predicate")
_P_PREDICATE_MAP = _iri(RR, "predicateMap")
_P_OBJECT_MAP = _iri(RR, "objectMap")
_P_OBJECT = _iri(RR, "object")
_P_TEMPLATE = _iri(RR, "template")
_P_CONSTANT = _iri(RR, "constant")
_P_CLASS = _iri(RR, "class")
_P_TERM_TYPE = _iri(RR, "termType")
_P_DATATYPE = _iri(RR, "datatype")
_P_LANGUAGE = _iri(RR, "language")
_P_GRAPH_MAP = _iri(RR, "graphMap")
_P_GRAPH = _iri(RR, "graph")
_P_PARENT_TM = _iri(RR, "parentTriplesMap")
_P_JOIN = _iri(RR, "joinCondition")
_P_CHILD = _iri(RR, "child")
_P_PARENT = _iri(RR, "parent")
_P_PERCENT_ENCODE = IRI(MAPX + "percentEncode")
_TYPE = IRI(RDF_TYPE)

_TERM_TYPES = {
    RR + "IRI": "iri",
    RR + "Literal": "literal",
    RR + "BlankNode": "blank",
}

_ALLOWED = {
    "triples map": {_P_LOGICAL_SOURCE, _P_SUBJECT_MAP, _P_SUBJECT, _P_POM},
    "logical source": {_P_SOURCE, _P_FORMULATION, _P_ITERATOR},
    "subject map": {
        _P_TEMPLATE,
        _P_REFERENCE,
        _P_CONSTANT,
        _P_CLASS,
        _P_TERM_TYPE,
        _P_GRAPH_MAP,
        _P_GRAPH,
        _P_PERCENT_ENCODE,
    },
    "graph map": {_P_TEMPLATE, _P_CONSTANT},
    "predicate-object map": {_P_PREDICATE, _P_PREDICATE_MAP, _P_OBJECT_MAP, _P_OBJECT},
    "predicate map": {_P_CONSTANT},
    "object map": {
        _P_TEMPLATE,
        _P_REFERENCE,
        _P_CONSTANT,
        _P_TERM_TYPE,
        _P_DATATYPE,
        _P_LANGUAGE,
        _P_PARENT_TM,
        _P_JOIN,
        _P_PERCENT_ENCODE,
    },
    "join condition": {_P_CHILD, _P_PARENT},
}

_VOCAB_PREFIXES = (RML, RR, QL, MAPX)


def load_mapping(text: str, base: str | None = None) -> MappingDocument:
    """Parse a Turtle rules document into a validated MappingDocument."""
    try:
        ds = parse(text, format="turtle", base=base)
    except ValueError as exc:
        raise MappingLoadError(f"rules document does not parse: {exc}") from None
    loader = _Loader(ds)
    return loader.load()


def load_mapping_file(path: str) -> MappingDocument:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise MappingLoadError(f"cannot read rules file {path!r}: {exc}") from None
    return load_mapping(text)


class _Loader:
    def __init__(self, ds: Dataset) -> None:
        self.ds = ds
        self.map_nodes: dict[Term, str] = {}

    def load(self) -> MappingDocument:
        nodes = {q.subject for q in self.ds.quads(predicate=_P_LOGICAL_SOURCE)}
        if not nodes:
            raise MappingLoadError("rules document defines no triples map (no logicalSource found)")
        ordered = sorted(nodes, key=_node_order)
        self.map_nodes = {node: term_text(node) for node in ordered}
        doc = MappingDocument()
        for node in ordered:
            tm = self._triples_map(node)
            doc.maps[tm.name] = tm
        for tm in doc.maps.values():
            for pom in tm.poms:
                ref = pom.object_map.parent_ref
                if ref is not None and ref not in doc.maps:
                    raise MappingLoadError(f"parentTriplesMap {ref} does not name a triples map in this document")
            self._validate_paths(tm, doc)
        return doc

    # -- node readers -----------------------------------------------------

    def _triples_map(self, node: Term) -> TriplesMap:
        name = self.map_nodes[node]
        self._check_vocab(node, "triples map", name)
        ls_node = self._one(node, _P_LOGICAL_SOURCE, name)
        logical = self._logical_source(ls_node, name)
        subject_node = self._opt(node, _P_SUBJECT_MAP)
        subject_const = self._opt(node, _P_SUBJECT)
        if (subject_node is None) == (subject_const is None):
            raise MappingLoadError(f"{name}: needs exactly one of subjectMap or subject")
        classes: list[IRI] = []
        graph_map: TermMap | None = None
        if subject_node is not None:
            self._check_vocab(subject_node, "subject map", name)
            subject_map = self._term_map(subject_node, name, role="subject")
            for q in sorted(self.ds.quads(subject=subject_node, predicate=_P_CLASS), key=lambda q: term_text(q.object)):
                if not isinstance(q.object, IRI):
                    raise MappingLoadError(f"{name}: class must be an IRI, got {term_text(q.object)}")
                classes.append(q.object)
            graph_map = self._graph_map(subject_node, name)
        else:
            if not isinstance(subject_const, IRI):
                raise MappingLoadError(f"{name}: constant subject must be an IRI")
            subject_map = TermMap("constant", None, None, subject_const, "iri", None, None, False)
        poms = []
        for pom_node in self._many(node, _P_POM):
            poms.append(self._pom(pom_node, name))
        return TriplesMap(name, logical, subject_map, tuple(classes), graph_map, tuple(poms))

    def _logical_source(self, node: Term, owner: str) -> LogicalSource:
        self._check_vocab(node, "logical source", owner)
        source = self._one(node, _P_SOURCE, owner)
        if not isinstance(source, Literal):
            raise MappingLoadError(f"{owner}: source must be a literal name, got {term_text(source)}")
        formulation_term = self._one(node, _P_FORMULATION, owner)
        if not isinstance(formulation_term, IRI) or formulation_term.value not in _FORMULATIONS:
            raise MappingLoadError(
                f"{owner}: unsupported referenceFormulation {term_text(formulation_term)}"
            )
        formulation = _FORMULATIONS[formulation_term.value]
        iterator_term = self._opt(node, _P_ITERATOR)
        iterator = None
        if iterator_term is not None:
            if not isinstance(iterator_term, Literal):
                raise MappingLoadError(f"{owner}: iterator must be a literal")
            iterator = iterator_term.lexical
        if formulation == "xpath" and iterator is None and source.lexical != CONTEXT_SOURCE:
            raise MappingLoadError(f"{owner}: xpath sources require an iterator")
        return LogicalSource(source.lexical, formulation, iterator)

    def _graph_map(self, subject_node: Term, owner: str) -> TermMap | None:
        graph_node = self._opt(subject_node, _P_GRAPH_MAP)
        graph_const = self._opt(subject_node, _P_GRAPH)
        if graph_node is not None and graph_const is not None:
            raise MappingLoadError(f"{owner}: needs at most one of graphMap or graph")
        if graph_const is not None:
            if not isinstance(graph_const, IRI):
                raise MappingLoadError(f"{owner}: constant graph must be an IRI")
            return TermMap("constant", None, None, graph_const, "iri", None, None, False)
        if graph_node is None:
            return None
        self._check_vocab(graph_node, "graph map", owner)
        tm = self._term_map(graph_node, owner, role="graph")
        return tm

    def _pom(self, node: Term, owner: str) -> PredicateObjectMap:
        self._check_vocab(node, "predicate-object map", owner)
        pred_const = self._opt(node, _P_PREDICATE)
        pred_map = self._opt(node, _P_PREDICATE_MAP)
        if (pred_const is None) == (pred_map is None):
            raise MappingLoadError(f"{owner}: predicate-object map needs exactly one of predicate or predicateMap")
        if pred_map is not None:
            self._check_vocab(pred_map, "predicate map", owner)
            pred_const = self._one(pred_map, _P_CONSTANT, owner)
        if not isinstance(pred_const, IRI):
            raise MappingLoadError(f"{owner}: predicate must be an IRI, got {term_text(pred_const)}")
        obj_node = self._opt(node, _P_OBJECT_MAP)
        obj_const = self._opt(node, _P_OBJECT)
        if (obj_node is None) == (obj_const is None):
            raise MappingLoadError(f"{owner}: predicate-object map needs exactly one of object or objectMap")
        if obj_const is not None:
            om = ObjectMap(TermMap("constant", None, None, obj_const, _term_kind(obj_const), None, None, False), None, ())
        else:
            om = self._object_map(obj_node, owner)
        return PredicateObjectMap(pred_const, om)

    def _object_map(self, node: Term, owner: str) -> ObjectMap:
        self._check_vocab(node, "object map", owner)
        parent = self._opt(node, _P_PARENT_TM)
        if parent is not None:
            for p in (_P_TEMPLATE, _P_REFERENCE, _P_CONSTANT, _P_TERM_TYPE, _P_DATATYPE, _P_LANGUAGE):
                if self._opt(node, p) is not None:
                    raise MappingLoadError(
                        f"{owner}: object map mixes parentTriplesMap with {term_text(p)}"
                    )
            if parent not in self.map_nodes:
                raise MappingLoadError(
                    f"parentTriplesMap {term_text(parent)} does not name a triples map in this document"
                )
            joins = []
            for join_node in self._many(node, _P_JOIN):
                self._check_vocab(join_node, "join condition", owner)
                child = self._one(join_node, _P_CHILD, owner)
                par = self._one(join_node, _P_PARENT, owner)
                if not isinstance(child, Literal) or not isinstance(par, Literal):
                    raise MappingLoadError(f"{owner}: join child and parent must be literals")
                joins.append(Join(child.lexical, par.lexical))
            joins.sort(key=lambda j: (j.child, j.parent))
            return ObjectMap(None, self.map_nodes[parent], tuple(joins))
        if self._many(node, _P_JOIN):
            raise MappingLoadError(f"{owner}: joinCondition without parentTriplesMap")
        return ObjectMap(self._term_map(node, owner, role="object"), None, ())

    def _term_map(self, node: Term, owner: str, role: str) -> TermMap:
        template_term = self._opt(node, _P_TEMPLATE)
        reference_term = self._opt(node, _P_REFERENCE)
        constant_term = self._opt(node, _P_CONSTANT)
        given = [t for t in (template_term, reference_term, constant_term) if t is not None]
        if len(given) != 1:
            raise MappingLoadError(
                f"{owner}: {role} map needs exactly one of template, reference, or constant"
            )
        term_type_term = self._opt(node, _P_TERM_TYPE)
        datatype_term = self._opt(node, _P_DATATYPE)
        language_term = self._opt(node, _P_LANGUAGE)
        percent_term = self._opt(node, _P_PERCENT_ENCODE)
        percent = False
        if percent_term is not None:
            if not isinstance(percent_term, Literal) or percent_term.lexical not in ("true", "false"):
                raise MappingLoadError(f"{owner}: percentEncode must be true or false")
            percent = percent_term.lexical == "true"

        if template_term is not None:
            if not isinstance(template_term, Literal):
                raise MappingLoadError(f"{owner}: template must be a literal")
            kind = "template"
            template = parse_template(template_term.lexical)
            reference = None
            constant = None
            default_type = "iri"
        elif reference_term is not None:
            if not isinstance(reference_term, Literal):
                raise MappingLoadError(f"{owner}: reference must be a literal")
            kind = "reference"
            template = None
            reference = reference_term.lexical
            constant = None
            default_type = "literal" if role == "object" else "iri"
        else:
            kind = "constant"
            template = None
            reference = None
            constant = constant_term
            default_type = _term_kind(constant_term)

        term_type = default_type
        if term_type_term is not None:
            if kind == "constant":
                raise MappingLoadError(f"{owner}: termType cannot be combined with a constant")
            if not isinstance(term_type_term, IRI) or term_type_term.value not in _TERM_TYPES:
                raise MappingLoadError(f"{owner}: unsupported termType {term_text(term_type_term)}")
            term_type = _TERM_TYPES[term_type_term.value]

        datatype = None
        language = None
        if datatype_term is not None or language_term is not None:
            if datatype_term is not None and language_term is not None:
                raise MappingLoadError(f"{owner}: datatype and language are mutually exclusive")
            if kind == "constant":
                raise MappingLoadError(f"{owner}: datatype/language cannot be combined with a constant")
            if term_type_term is None:
                term_type = "literal"
            elif term_type != "literal":
                raise MappingLoadError(f"{owner}: datatype/language require a literal term type")
            if datatype_term is not None:
                if not isinstance(datatype_term, IRI):
                    raise MappingLoadError(f"{owner}: datatype must be an IRI")
                datatype = datatype_term
            else:
                if not isinstance(language_term, Literal):
                    raise MappingLoadError(f"{owner}: language must be a literal tag")
                language = language_term.lexical

        if role == "subject" and term_type == "literal":
            raise MappingLoadError(f"{owner}: a subject map cannot produce literals")
        if role == "graph" and term_type != "iri":
            raise MappingLoadError(f"{owner}: a graph map must produce IRIs")
        if kind == "constant":
            if role in ("subject", "graph") and not isinstance(constant, IRI):
                raise MappingLoadError(f"{owner}: constant {role} must be an IRI")
        return TermMap(kind, template, reference, constant, term_type, datatype, language, percent)

    # -- generic helpers -----------------------------------------------------

    def _check_vocab(self, node: Term, role: str, owner: str) -> None:
        allowed = _ALLOWED[role]
        for q in self.ds.quads(subject=node):
            pred = q.predicate
            if pred.value.startswith(_VOCAB_PREFIXES) and pred not in allowed:
                raise MappingLoadError(
                    f"{owner}: unsupported mapping term {term_text(pred)} on a {role}"
                )

    def _one(self, node: Term, predicate: IRI, owner: str) -> Term:
        values = self._many(node, predicate)
        if len(values) != 1:
            raise MappingLoadError(
                f"{owner}: expected exactly one {term_text(predicate)}, found {len(values)}"
            )
        return values[0]

    def _opt(self, node: Term, predicate: IRI) -> Term | None:
        values = self._many(node, predicate)
        if len(values) > 1:
            raise MappingLoadError(f"multiple values for {term_text(predicate)} on {term_text(node)}")
        return values[0] if values else None

    def _many(self, node: Term, predicate: IRI) -> list[Term]:
        quads = self.ds.quads(subject=node, predicate=predicate)
        return sorted((q.object for q in quads), key=_node_order)

    # -- eager path validation ------------------------------------------------

    def _validate_paths(self, tm: TriplesMap, doc: MappingDocument) -> None:
        formulation = tm.logical_source.formulation
        name = tm.name

        def check(path: str, what: str) -> None:
            try:
                if formulation == "jsonpath":
                    parse_jsonpath(path)
                elif formulation == "xpath":
                    parse_xpath(path)
                # csv column names have no syntax to validate
            except PathError as exc:
                raise MappingLoadError(f"{name}: bad {what} path: {exc}") from None

        if tm.logical_source.iterator and formulation != "csv":
            check(tm.logical_source.iterator, "iterator")
        for term_map in self._term_maps(tm):
            if term_map.kind == "reference":
                check(term_map.reference, "reference")
            elif term_map.kind == "template":
                for ph in term_map.template.placeholders:
                    check(ph.path, "template")
        for pom in tm.poms:
            om = pom.object_map
            if om.parent_ref is not None:
                parent = doc.maps[om.parent_ref]
                for join in om.joins:
                    check(join.child, "join child")
                if parent.logical_source.source_ref == CONTEXT_SOURCE:
                    if parent.subject_map.kind != "template":
                        raise MappingLoadError(
                            f"{om.parent_ref}: a context join target needs a template subject map"
                        )
                    names = {ph.path for ph in parent.subject_map.template.placeholders}
                    given = {join.parent for join in om.joins}
                    if names - given:
                        missing = ", ".join(sorted(names - given))
                        raise MappingLoadError(
                            f"{tm.name}: context join leaves template placeholders unbound: {missing}"
                        )

    @staticmethod
    def _term_maps(tm: TriplesMap):
        yield tm.subject_map
        if tm.graph_map is not None:
            yield tm.graph_map
        for pom in tm.poms:
            if pom.object_map.term_map is not None:
                yield pom.object_map.term_map


def _node_order(term: Term):
    if isinstance(term, BlankNode):
        return (0, len(term.label), term.label)
    return (1, term_text(term), "")


def _term_kind(term: Term) -> str:
    if isinstance(term, IRI):
        return "iri"
    if isinstance(term, BlankNode):
        return "blank"
    return "literal"


# -- execution --------------------------------------------------------------------


def lift(
    mapping: MappingDocument,
    sources: dict[str, SourceDocument],
    ctx: MappingContext | None = None,
) -> Dataset:
    """Run every triples map against its source; returns the output quads."""
    if ctx is None:
        ctx = MappingContext()
    if CONTEXT_SOURCE in sources:
        raise MappingExecutionError(f"source name {CONTEXT_SOURCE!r} is reserved")
    out = Dataset()
    for tm in mapping.maps.values():
        if tm.logical_source.source_ref == CONTEXT_SOURCE:
            continue  # join target only; generates nothing on its own
        _run_map(tm, mapping, sources, ctx, out)
    return out


def _run_map(
    tm: TriplesMap,
    mapping: MappingDocument,
    sources: dict[str, SourceDocument],
    ctx: MappingContext,
    out: Dataset,
) -> None:
    doc = _source_for(tm, sources)
    nodes = _iterate(tm, doc)
    parent_cache: dict[str, list] = {}
    for node in nodes:
        subject = _gen_term(tm.subject_map, doc, node, ctx, tm.name, "subject")
        if subject is None:
            continue
        graph = DEFAULT_GRAPH
        if tm.graph_map is not None:
            graph_term = _gen_term(tm.graph_map, doc, node, ctx, tm.name, "graph")
            if graph_term is None:
                continue
            graph = graph_term
        for cls in tm.classes:
            out.add(Quad(subject, _TYPE, cls, graph))
        for pom in tm.poms:
            om = pom.object_map
            if om.parent_ref is not None:
                objects = _join_objects(tm, om, mapping, sources, doc, node, ctx, parent_cache)
            else:
                obj = _gen_term(om.term_map, doc, node, ctx, tm.name, "object")
                objects = [obj] if obj is not None else []
            for obj in objects:
                out.add(Quad(subject, pom.predicate, obj, graph))


def _source_for(tm: TriplesMap, sources: dict[str, SourceDocument]) -> SourceDocument:
    ref = tm.logical_source.source_ref
    doc = sources.get(ref)
    if doc is None:
        known = ", ".join(sorted(sources)) or "none"
        raise MappingExecutionError(f"{tm.name}: unknown source {ref!r} (have: {known})")
    expected = _FORMULATION_FORMAT[tm.logical_source.formulation]
    if doc.format != expected:
        raise MappingExecutionError(
            f"{tm.name}: source {ref!r} is {doc.format}, but the rules expect {expected}"
        )
    return doc


def _iterate(tm: TriplesMap, doc: SourceDocument) -> list:
    try:
        return doc.iterate(tm.logical_source.iterator)
    except (PathError, ValueError) as exc:
        raise MappingExecutionError(f"{tm.name}: {exc}") from None


def _gen_term(
    term_map: TermMap,
    doc: SourceDocument,
    node,
    ctx: MappingContext,
    owner: str,
    role: str,
) -> Term | None:
    if term_map.kind == "constant":
        return term_map.constant
    if term_map.kind == "reference":
        value = _single_value(doc, node, term_map.reference, owner)
        if value is None:
            return None
        return _make_term(term_map, value, owner, role)
    expanded = _expand_template(term_map, doc, node, ctx, owner)
    if expanded is None:
        return None
    return _make_term(term_map, expanded, owner, role)


def _expand_template(
    term_map: TermMap,
    doc: SourceDocument,
    node,
    ctx: MappingContext,
    owner: str,
) -> str | None:
    parts = []
    for part in term_map.template.parts:
        if isinstance(part, str):
            parts.append(part)
            continue
        value = _single_value(doc, node, part.path, owner)
        if value is None:
            return None
        value = _apply_transform(part, value, ctx, owner)
        if value is None:
            return None
        if term_map.percent_encode and term_map.term_type == "iri":
            value = urllib.parse.quote(value, safe="-._~")
        parts.append(value)
    return "".join(parts)


def _apply_transform(part: Placeholder, value: str, ctx: MappingContext, owner: str) -> str | None:
    if part.transform is None:
        return value
    fn = ctx.transforms.get(part.transform)
    if fn is None:
        raise MappingExecutionError(f"{owner}: unknown transform {part.transform!r}")
    return fn(value, ctx)


def _single_value(doc: SourceDocument, node, reference: str, owner: str) -> str | None:
    try:
        values = doc.values(node, reference)
    except (PathError, ValueError) as exc:
        raise MappingExecutionError(f"{owner}: {exc}") from None
    if not values:
        return None
    if len(values) > 1:
        raise MappingExecutionError(
            f"{owner}: path {reference!r} selected {len(values)} values; term maps need exactly one"
        )
    return values[0]


_IRI_ILLEGAL = re.compile(r'[\x00-\x20<>"{}|^`\\]')


def _as_iri(value: str, owner: str, role: str) -> IRI:
    if _IRI_ILLEGAL.search(value):
        raise MappingExecutionError(f"{owner}: {role} value {value!r} is not a valid IRI")
    try:
        return IRI(value)
    except TermError:
        raise MappingExecutionError(f"{owner}: {role} value {value!r} is not a valid IRI") from None


def _make_term(term_map: TermMap, value: str, owner: str, role: str) -> Term:
    if term_map.term_type == "iri":
        return _as_iri(value, owner, role)
    if term_map.term_type == "blank":
        if not value:
            raise MappingExecutionError(f"{owner}: empty blank node label")
        return BlankNode(value)
    return Literal(value, datatype=term_map.datatype, language=term_map.language)


def _join_objects(
    tm: TriplesMap,
    om: ObjectMap,
    mapping: MappingDocument,
    sources: dict[str, SourceDocument],
    child_doc: SourceDocument,
    child_node,
    ctx: MappingContext,
    parent_cache: dict,
) -> list[Term]:
    parent = mapping.maps[om.parent_ref]
    if parent.logical_source.source_ref == CONTEXT_SOURCE:
        return _context_join(tm, om, parent, child_doc, child_node, ctx)
    cache_key = om.parent_ref
    if cache_key not in parent_cache:
        parent_doc = _source_for(parent, sources)
        rows = []
        for parent_node in _iterate(parent, parent_doc):
            subject = _gen_term(parent.subject_map, parent_doc, parent_node, ctx, parent.name, "subject")
            if subject is None:
                continue
            rows.append((parent_node, parent_doc, subject))
        parent_cache[cache_key] = rows
    objects: list[Term] = []
    for parent_node, parent_doc, parent_subject in parent_cache[cache_key]:
        if _join_matches(om.joins, child_doc, child_node, parent_doc, parent_node, tm.name, parent.name):
            objects.append(parent_subject)
    return objects


def _join_matches(joins, child_doc, child_node, parent_doc, parent_node, child_name, parent_name) -> bool:
    for join in joins:
        child_value = _single_value(child_doc, child_node, join.child, child_name)
        if child_value is None:
            return False
        parent_value = _single_value(parent_doc, parent_node, join.parent, parent_name)
        if parent_value is None:
            return False
        if child_value != parent_value:
            return False
    return True


def _context_join(
    tm: TriplesMap,
    om: ObjectMap,
    parent: TriplesMap,
    child_doc: SourceDocument,
    child_node,
    ctx: MappingContext,
) -> list[Term]:
    if not om.joins:
        raise MappingExecutionError(f"{tm.name}: a context join needs join conditions")
    bindings: dict[str, str] = {}
    for join in om.joins:
        value = _single_value(child_doc, child_node, join.child, tm.name)
        if value is None:
            return []
        bindings[join.parent] = value
    parts = []
    for part in parent.subject_map.template.parts:
        if isinstance(part, str):
            parts.append(part)
            continue
        value = bindings.get(part.path)
        if value is None:
            return []
        value = _apply_transform(part, value, ctx, parent.name)
        if value is None:
            return []
        if parent.subject_map.percent_encode:
            value = urllib.parse.quote(value, safe="-._~")
        parts.append(value)
    candidate_text = "".join(parts)
    if parent.subject_map.term_type == "blank":
        candidate: Term = BlankNode(candidate_text)
    else:
        candidate = _as_iri(candidate_text, parent.name, "subject")
    if next(iter(ctx.context_graph.quads(subject=candidate)), None) is None:
        return []
    return [candidate]
