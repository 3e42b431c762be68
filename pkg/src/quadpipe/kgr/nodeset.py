"""OPC UA NodeSet XML: subset scan, two-pass lifting, template lowering.

The subset covers Object, Variable, ObjectType, and Method nodes with
their browse/display names and references. Import runs as a mapping
chain over a shared context:

- pass 1 lifts node identities, classes, and names;
- pass 2 resolves references into links, reading the alias and namespace
  tables from the context's named values and checking targets against
  everything lifted so far (earlier sets included), so cross-set
  references resolve through the store's union.

Every reference also produces a reference record resource carrying both
resolved IRIs and canonical NodeId texts. Records make three things
possible: exporting XML purely from the graph, detecting dangling
references (a record without its direct link), and re-resolving them
once the missing set arrives. Backward references (IsForward="false")
are normalised at record time, so a record always points from link
source to link target.

NodeIds are canonicalised to the expanded text form "nsu=<uri>;<id>"
and mapped to IRIs "urn:opcua:ns:<uri>;<id>"; both are index-free, so
identity survives namespace reordering between documents. Namespace
URIs must not contain ";" or XML metacharacters.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from ..mapping import MappingContext, SourceDocument, lift, load_mapping, load_template, lower
from ..rdf import Dataset, IRI

UA = "urn:opcua:vocab:"
UA_BASE_NAMESPACE = "http://opcfoundation.org/UA/"
NODE_IRI_PREFIX = "urn:opcua:ns:"
NODE_CLASSES = ("Object", "Variable", "ObjectType", "Method")

_NODE_TAGS = {f"UA{name}": name for name in NODE_CLASSES}
_STRUCTURAL_TAGS = frozenset({"NamespaceUris", "Aliases", "Models", "ServerUris"})
_ID_PART = re.compile(r"^[isgb]=.+$", re.DOTALL)


class NodeSetError(ValueError):
    """NodeSet document outside the supported subset."""


@dataclass(frozen=True, slots=True)
class NodeSetInfo:
    namespace_uris: tuple
    aliases: dict
    node_count: int


# -- NodeId handling --------------------------------------------------------------


def parse_node_id(text: str, namespace_uris) -> tuple[str, str]:
    """Split a NodeId into (namespace URI, id part), resolving ns= indexes."""
    text = text.strip()
    if text.startswith("nsu="):
        uri, sep, part = text[4:].partition(";")
        if not sep or not uri:
            raise NodeSetError(f"bad NodeId {text!r}: nsu= needs a URI and an id part")
    elif text.startswith("ns="):
        index_text, sep, part = text[3:].partition(";")
        if not sep or not index_text.isdigit():
            raise NodeSetError(f"bad NodeId {text!r}: ns= needs a numeric index and an id part")
        index = int(index_text)
        if index >= len(namespace_uris):
            raise NodeSetError(
                f"bad NodeId {text!r}: namespace index {index} is not declared (have {len(namespace_uris)})"
            )
        uri = namespace_uris[index]
    else:
        uri = namespace_uris[0]
        part = text
    if not _ID_PART.match(part):
        raise NodeSetError(f"bad NodeId {text!r}: id part must be i=, s=, g=, or b=")
    return uri, part


def canonical_node_id(text: str, namespace_uris) -> str:
    uri, part = parse_node_id(text, namespace_uris)
    return f"nsu={uri};{part}"


def node_iri(text: str, namespace_uris) -> str:
    uri, part = parse_node_id(text, namespace_uris)
    return f"{NODE_IRI_PREFIX}{uri};{part}"


def iri_to_canonical(iri: str) -> str:
    if not iri.startswith(NODE_IRI_PREFIX):
        raise NodeSetError(f"{iri!r} is not a node IRI")
    return "nsu=" + iri[len(NODE_IRI_PREFIX) :]


# -- subset scan ------------------------------------------------------------------


def scan_nodeset(raw: bytes) -> NodeSetInfo:
    """Validate the subset shape and collect the namespace and alias tables."""
    try:
        root = ET.fromstring(raw.decode("utf-8"))
    except (UnicodeDecodeError, ET.ParseError) as exc:
        raise NodeSetError(f"nodeset does not parse: {exc}") from None
    if _local(root.tag) != "UANodeSet":
        raise NodeSetError(f"root element must be UANodeSet, found {_local(root.tag)}")
    uris = [UA_BASE_NAMESPACE]
    aliases: dict[str, str] = {}
    nodes = []
    for child in root:
        tag = _local(child.tag)
        if tag == "NamespaceUris":
            for uri_elem in child:
                uri = (uri_elem.text or "").strip()
                if not uri or ";" in uri or _bad_xml_text(uri):
                    raise NodeSetError(f"unusable namespace URI {uri!r}")
                uris.append(uri)
        elif tag == "Aliases":
            for alias_elem in child:
                name = alias_elem.get("Alias", "")
                target = (alias_elem.text or "").strip()
                if not name or not target:
                    raise NodeSetError("an Alias needs an Alias attribute and a NodeId")
                if aliases.get(name, target) != target:
                    raise NodeSetError(f"alias {name!r} declared twice with different NodeIds")
                aliases[name] = target
        elif tag in _NODE_TAGS:
            nodes.append(child)
        elif tag not in _STRUCTURAL_TAGS:
            raise NodeSetError(f"unsupported element {tag!r} (subset covers UA{'/UA'.join(NODE_CLASSES)})")
    info = NodeSetInfo(tuple(uris), aliases, len(nodes))
    seen: dict[str, str] = {}
    for node in nodes:
        raw_id = node.get("NodeId", "")
        if not raw_id:
            raise NodeSetError(f"a {_local(node.tag)} node has no NodeId")
        canonical = canonical_node_id(raw_id, info.namespace_uris)
        if canonical in seen:
            raise NodeSetError(f"duplicate NodeId {raw_id!r}")
        seen[canonical] = raw_id
        if not node.get("BrowseName"):
            raise NodeSetError(f"node {raw_id!r} has no BrowseName")
        if _bad_xml_text(node.get("BrowseName", "")):
            raise NodeSetError(f"node {raw_id!r}: BrowseName contains XML metacharacters")
        display = [c for c in node if _local(c.tag) == "DisplayName"]
        if len(display) != 1 or not (display[0].text or "").strip():
            raise NodeSetError(f"node {raw_id!r} needs exactly one non-empty DisplayName")
        if _bad_xml_text(display[0].text or ""):
            raise NodeSetError(f"node {raw_id!r}: DisplayName contains XML metacharacters")
        for refs in (c for c in node if _local(c.tag) == "References"):
            for ref in refs:
                _check_reference(ref, raw_id, info)
    return info


def _check_reference(ref, owner: str, info: NodeSetInfo) -> None:
    ref_type = ref.get("ReferenceType", "")
    if not ref_type:
        raise NodeSetError(f"node {owner!r}: a Reference has no ReferenceType")
    resolve_reference_type(ref_type, info)
    target = (ref.text or "").strip()
    if not target:
        raise NodeSetError(f"node {owner!r}: a Reference has no target NodeId")
    canonical_node_id(target, info.namespace_uris)
    forward = ref.get("IsForward")
    if forward not in (None, "true", "false"):
        raise NodeSetError(f"node {owner!r}: IsForward must be true or false, found {forward!r}")


def resolve_reference_type(text: str, info: NodeSetInfo) -> str:
    """Alias name or literal NodeId -> canonical NodeId text."""
    resolved = info.aliases.get(text.strip(), text.strip())
    try:
        return canonical_node_id(resolved, info.namespace_uris)
    except NodeSetError:
        raise NodeSetError(
            f"reference type {text!r} is neither a declared alias nor a NodeId"
        ) from None


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _bad_xml_text(text: str) -> bool:
    return any(ch in text for ch in "<>&\"'")


# -- the import chain -------------------------------------------------------------

_PREFIXES = """\
@prefix rml: <http://semweb.mmlab.be/ns/rml#> .
@prefix rr: <http://www.w3.org/ns/r2rml#> .
@prefix ql: <http://semweb.mmlab.be/ns/ql#> .
@prefix map: <urn:maps:> .
@prefix uav: <urn:opcua:vocab:> .
"""


def _node_map(name: str) -> str:
    return f"""
map:{name.lower()}s rml:logicalSource [ rml:source "nodeset" ; rml:referenceFormulation ql:XPath ;
    rml:iterator "/UANodeSet/UA{name}" ] ;
  rr:subjectMap [ rr:template "{{@NodeId|ua-node-iri}}" ; rr:class uav:{name} ] ;
  rr:predicateObjectMap [ rr:predicate uav:nodeId ;
    rr:objectMap [ rr:template "{{@NodeId|ua-node-id}}" ; rr:termType rr:Literal ] ] ;
  rr:predicateObjectMap [ rr:predicate uav:browseName ; rr:objectMap [ rml:reference "@BrowseName" ] ] ;
  rr:predicateObjectMap [ rr:predicate uav:displayName ; rr:objectMap [ rml:reference "DisplayName" ] ] .
"""


PASS1_RULES = _PREFIXES + "".join(_node_map(name) for name in NODE_CLASSES)

_FORWARD = "/UANodeSet/*/References/Reference[not(@IsForward='false')]"
_BACKWARD = "/UANodeSet/*/References/Reference[@IsForward='false']"


def _record_map(name: str, iterator: str, from_path: str, to_path: str) -> str:
    return f"""
map:{name} rml:logicalSource [ rml:source "nodeset" ; rml:referenceFormulation ql:XPath ;
    rml:iterator "{iterator}" ] ;
  rr:subjectMap [
    rr:template "urn:opcua:ref:{{{from_path}|ua-node-id}};{{@ReferenceType|ua-ref-id}};{{{to_path}|ua-node-id}}" ;
    rr:class uav:Reference ] ;
  rr:predicateObjectMap [ rr:predicate uav:refFrom ; rr:objectMap [ rr:template "{{{from_path}|ua-node-iri}}" ] ] ;
  rr:predicateObjectMap [ rr:predicate uav:refTo ; rr:objectMap [ rr:template "{{{to_path}|ua-node-iri}}" ] ] ;
  rr:predicateObjectMap [ rr:predicate uav:refType ; rr:objectMap [ rr:template "{{@ReferenceType|ua-ref-iri}}" ] ] ;
  rr:predicateObjectMap [ rr:predicate uav:refFromId ;
    rr:objectMap [ rr:template "{{{from_path}|ua-node-id}}" ; rr:termType rr:Literal ] ] ;
  rr:predicateObjectMap [ rr:predicate uav:refToId ;
    rr:objectMap [ rr:template "{{{to_path}|ua-node-id}}" ; rr:termType rr:Literal ] ] ;
  rr:predicateObjectMap [ rr:predicate uav:refTypeId ;
    rr:objectMap [ rr:template "{{@ReferenceType|ua-ref-id}}" ; rr:termType rr:Literal ] ] .
"""


PASS2_RULES = (
    _PREFIXES
    + """
map:known-node rml:logicalSource [ rml:source "context" ; rml:referenceFormulation ql:XPath ] ;
  rr:subjectMap [ rr:template "{nid|ua-node-iri}" ] .

map:forward-links rml:logicalSource [ rml:source "nodeset" ; rml:referenceFormulation ql:XPath ;
    rml:iterator "%(forward)s" ] ;
  rr:subjectMap [ rr:template "{../../@NodeId|ua-node-iri}" ] ;
  rr:predicateObjectMap [ rr:predicate uav:references ;
    rr:objectMap [ rr:parentTriplesMap map:known-node ;
      rr:joinCondition [ rr:child "text()" ; rr:parent "nid" ] ] ] .

map:backward-links rml:logicalSource [ rml:source "nodeset" ; rml:referenceFormulation ql:XPath ;
    rml:iterator "%(backward)s" ] ;
  rr:subjectMap [ rr:template "{text()|ua-known-node-iri}" ] ;
  rr:predicateObjectMap [ rr:predicate uav:references ;
    rr:objectMap [ rr:parentTriplesMap map:known-node ;
      rr:joinCondition [ rr:child "../../@NodeId" ; rr:parent "nid" ] ] ] .
"""
    % {"forward": _FORWARD, "backward": _BACKWARD}
    + _record_map("forward-records", _FORWARD, "../../@NodeId", "text()")
    + _record_map("backward-records", _BACKWARD, "text()", "../../@NodeId")
)

_PASS1_DOC = None
_PASS2_DOC = None


def pass1_document():
    global _PASS1_DOC
    if _PASS1_DOC is None:
        _PASS1_DOC = load_mapping(PASS1_RULES)
    return _PASS1_DOC


def pass2_document():
    global _PASS2_DOC
    if _PASS2_DOC is None:
        _PASS2_DOC = load_mapping(PASS2_RULES)
    return _PASS2_DOC


def make_context(info: NodeSetInfo, context_quads=None) -> MappingContext:
    """Context for one document's chain: tables, transforms, prior graphs."""
    ctx = MappingContext()
    for index, uri in enumerate(info.namespace_uris):
        ctx.set_value(f"ns:{index}", uri)
    for name, target in info.aliases.items():
        ctx.set_value(f"alias:{name}", target)

    table = info.namespace_uris

    def to_iri(value: str, _ctx) -> str:
        return node_iri(value, table)

    def to_id(value: str, _ctx) -> str:
        return canonical_node_id(value, table)

    def ref_iri(value: str, _ctx) -> str:
        return NODE_IRI_PREFIX + resolve_reference_type(value, info)[len("nsu=") :]

    def ref_id(value: str, _ctx) -> str:
        return resolve_reference_type(value, info)

    def known_node(value: str, ctx: MappingContext) -> str | None:
        candidate = IRI(node_iri(value, table))
        if next(iter(ctx.context_graph.quads(subject=candidate)), None) is None:
            return None
        return candidate.value

    ctx.register_transform("ua-node-iri", to_iri)
    ctx.register_transform("ua-node-id", to_id)
    ctx.register_transform("ua-ref-iri", ref_iri)
    ctx.register_transform("ua-ref-id", ref_id)
    ctx.register_transform("ua-known-node-iri", known_node)
    if context_quads is not None:
        ctx.context_graph.update(context_quads)
    return ctx


def import_chain(raw: bytes, context_quads=None) -> tuple[Dataset, NodeSetInfo]:
    """Run the full two-pass chain; returns (document quads, scan info)."""
    info = scan_nodeset(raw)
    ctx = make_context(info, context_quads)
    source = {"nodeset": SourceDocument(raw, "xml", name="nodeset")}
    out = lift(pass1_document(), source, ctx)
    ctx.context_graph.update(out)
    out.update(lift(pass2_document(), source, ctx))
    return out, info


def resolve_links(raw: bytes, context_quads) -> Dataset:
    """Re-run pass 2 for a stored document against the current store union.

    Returns the pass-2 quads; records re-emit identically (set semantics
    absorb them) while previously dangling references gain their direct
    links once the union contains their targets.
    """
    info = scan_nodeset(raw)
    ctx = make_context(info, context_quads)
    return lift(pass2_document(), {"nodeset": SourceDocument(raw, "xml", name="nodeset")}, ctx)


def dangling_references(quads: Dataset) -> list[str]:
    """Records in the graph whose direct link is missing, as diagnostics."""
    references = IRI(UA + "references")
    out = []
    for record_quad in quads.quads(predicate=IRI(UA + "refFrom")):
        record = record_quad.subject
        source = record_quad.object
        target = next(iter(quads.quads(subject=record, predicate=IRI(UA + "refTo")))).object
        if next(iter(quads.quads(subject=source, predicate=references, object=target)), None) is None:
            from_id = _record_literal(quads, record, "refFromId")
            to_id = _record_literal(quads, record, "refToId")
            type_id = _record_literal(quads, record, "refTypeId")
            out.append(f"unresolved reference {from_id} -[{type_id}]-> {to_id}")
    return sorted(out)


def _record_literal(quads: Dataset, record, local: str) -> str:
    quad = next(iter(quads.quads(subject=record, predicate=IRI(UA + local))), None)
    return quad.object.lexical if quad is not None else "?"


# -- lowering back to XML ---------------------------------------------------------


def _node_block(name: str) -> str:
    return (
        '[[#query "SELECT ?node ?nid ?bn ?dn WHERE { ?node a <%(ua)s%(name)s> . '
        "?node <%(ua)snodeId> ?nid . ?node <%(ua)sbrowseName> ?bn . "
        '?node <%(ua)sdisplayName> ?dn . }"]]'
        '  <UA%(name)s NodeId="[[?nid]]" BrowseName="[[?bn]]">\n'
        "    <DisplayName>[[?dn]]</DisplayName>\n"
        "    <References>\n"
        '[[#query "SELECT ?rt ?to WHERE { ?r a <%(ua)sReference> . ?r <%(ua)srefFrom> [[?node]] . '
        '?r <%(ua)srefTypeId> ?rt . ?r <%(ua)srefToId> ?to . }"]]'
        '      <Reference ReferenceType="[[?rt]]">[[?to]]</Reference>\n'
        "[[/query]]"
        '[[#query "SELECT ?rt ?from WHERE { ?r a <%(ua)sReference> . ?r <%(ua)srefTo> [[?node]] . '
        '?r <%(ua)srefTypeId> ?rt . ?r <%(ua)srefFromId> ?from . }"]]'
        '      <Reference ReferenceType="[[?rt]]" IsForward="false">[[?from]]</Reference>\n'
        "[[/query]]"
        "    </References>\n"
        "  </UA%(name)s>\n"
        "[[/query]]"
    ) % {"ua": UA, "name": name}


EXPORT_TEMPLATE = (
    '<UANodeSet xmlns="http://opcfoundation.org/UA/2011/03/UANodeSet.xsd">\n'
    + "".join(_node_block(name) for name in NODE_CLASSES)
    + "</UANodeSet>\n"
)

_EXPORT_DOC = None


def export_nodeset_xml(quads) -> str:
    """Render a document's quads (or any node projection) back to XML."""
    global _EXPORT_DOC
    if _EXPORT_DOC is None:
        _EXPORT_DOC = load_template(EXPORT_TEMPLATE)
    ds = Dataset(quads) if not isinstance(quads, Dataset) else quads
    return lower(_EXPORT_DOC, ds, union_default_graph=True)


def node_projection(quads: Dataset, node: IRI) -> list:
    """Exactly one node's statements plus its outgoing reference records."""
    out = list(quads.quads(subject=node))
    if not out:
        raise NodeSetError(f"node {iri_to_canonical(node.value)} not found")
    for record_quad in quads.quads(predicate=IRI(UA + "refFrom"), object=node):
        out.extend(quads.quads(subject=record_quad.subject))
    return out


__all__ = [
    "EXPORT_TEMPLATE",
    "NODE_CLASSES",
    "NODE_IRI_PREFIX",
    "NodeSetError",
    "NodeSetInfo",
    "PASS1_RULES",
    "PASS2_RULES",
    "UA",
    "UA_BASE_NAMESPACE",
    "canonical_node_id",
    "dangling_references",
    "export_nodeset_xml",
    "import_chain",
    "iri_to_canonical",
    "make_context",
    "node_iri",
    "node_projection",
    "parse_node_id",
    "resolve_links",
    "scan_nodeset",
]
