"""Thing Descriptions: a JSON subset with a fixed lifting to RDF.

A Thing Description names a device, its title, and its affordances
(properties, actions, events), each optionally annotated with semantic
type IRIs and a hypermedia form. The subset read here covers exactly
what discovery queries need; the full document is preserved as raw bytes
by the repository, so nothing is lost by the narrow view.

JSON-LD processing is deliberately out: a plain "@context" of strings is
tolerated, "@type" values must already be absolute IRIs, and any other
JSON-LD keyword is an explicit unsupported error rather than a silently
wrong interpretation.
"""

from __future__ import annotations

import json
import urllib.parse
from dataclasses import dataclass

from ..rdf import Dataset, IRI, Literal, Quad, RDF_TYPE

TD = "https://www.w3.org/2019/wot/td#"
HCTL = "https://www.w3.org/2019/wot/hypermedia#"

AFFORDANCE_PREDICATES = {
    "property": TD + "hasPropertyAffordance",
    "action": TD + "hasActionAffordance",
    "event": TD + "hasEventAffordance",
}
AFFORDANCE_CLASSES = {
    "property": TD + "PropertyAffordance",
    "action": TD + "ActionAffordance",
    "event": TD + "EventAffordance",
}
_BUCKETS = (("properties", "property"), ("actions", "action"), ("events", "event"))
_JSON_LD_KEYWORDS = frozenset(
    {"@id", "@graph", "@reverse", "@list", "@set", "@value", "@language", "@base", "@vocab", "@container", "@nest"}
)

_TYPE = IRI(RDF_TYPE)
_THING = IRI(TD + "Thing")
_TITLE = IRI(TD + "title")
_DESCRIPTION = IRI(TD + "description")
_NAME = IRI(TD + "name")
_HAS_FORM = IRI(TD + "hasForm")
_HAS_TARGET = IRI(HCTL + "hasTarget")


class ThingError(ValueError):
    """Malformed Thing Description or use of an unsupported JSON-LD feature."""


@dataclass(frozen=True, slots=True)
class Affordance:
    name: str
    kind: str
    semantic_types: tuple
    href: str | None


@dataclass(frozen=True, slots=True)
class ThingDescription:
    id: str
    title: str
    types: tuple
    affordances: tuple
    description: str | None
    raw: bytes


def parse_thing(raw: bytes) -> ThingDescription:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ThingError(f"thing description is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ThingError("thing description must be a JSON object")
    _reject_json_ld(doc, "document")
    _check_context(doc.get("@context"))
    thing_id = doc.get("id")
    if not isinstance(thing_id, str) or not thing_id:
        raise ThingError("thing description is missing id")
    title = doc.get("title")
    if not isinstance(title, str) or not title:
        raise ThingError("thing description is missing title")
    description = doc.get("description")
    if description is not None and not isinstance(description, str):
        raise ThingError("description must be text")
    types = _type_list(doc.get("@type"), "document")
    affordances = []
    for bucket, kind in _BUCKETS:
        table = doc.get(bucket)
        if table is None:
            continue
        if not isinstance(table, dict):
            raise ThingError(f"{bucket} must be an object keyed by affordance name")
        for name in sorted(table):
            affordances.append(_affordance(name, kind, table[name]))
    return ThingDescription(thing_id, title, types, tuple(affordances), description, raw)


def _affordance(name: str, kind: str, obj) -> Affordance:
    if not name:
        raise ThingError(f"an affordance of kind {kind!r} has an empty name")
    if not isinstance(obj, dict):
        raise ThingError(f"affordance {name!r} must be a JSON object")
    _reject_json_ld(obj, f"affordance {name!r}")
    href = None
    forms = obj.get("forms")
    if forms is not None:
        if not isinstance(forms, list) or not forms:
            raise ThingError(f"affordance {name!r}: forms must be a non-empty list")
        form = forms[0]
        if not isinstance(form, dict):
            raise ThingError(f"affordance {name!r}: each form must be a JSON object")
        _reject_json_ld(form, f"affordance {name!r} form")
        href = form.get("href")
        if not isinstance(href, str) or not href:
            raise ThingError(f"affordance {name!r}: form needs an href")
    return Affordance(name, kind, _type_list(obj.get("@type"), f"affordance {name!r}"), href)


def _reject_json_ld(obj: dict, where: str) -> None:
    used = sorted(_JSON_LD_KEYWORDS & set(obj))
    if used:
        raise ThingError(f"unsupported JSON-LD feature in {where}: {', '.join(used)}")


def _check_context(value) -> None:
    if value is None or isinstance(value, str):
        return
    if isinstance(value, list) and all(isinstance(item, str) for item in value):
        return
    raise ThingError("unsupported JSON-LD feature: a non-string @context entry")


def _type_list(value, where: str) -> tuple:
    if value is None:
        return ()
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, list) or not all(isinstance(item, str) for item in value):
        raise ThingError(f"{where}: @type must be an IRI or a list of IRIs")
    for item in value:
        if ":" not in item:
            raise ThingError(
                f"{where}: @type {item!r} is not an absolute IRI (JSON-LD term expansion is unsupported)"
            )
    return tuple(value)


def lift_thing(td: ThingDescription) -> Dataset:
    """Fixed subset lifting: named graph <id> holding the TD vocabulary view."""
    graph = IRI(td.id)
    out = Dataset()
    subject = graph
    out.add(Quad(subject, _TYPE, _THING, graph))
    out.add(Quad(subject, _TITLE, Literal(td.title), graph))
    if td.description is not None:
        out.add(Quad(subject, _DESCRIPTION, Literal(td.description), graph))
    for type_iri in td.types:
        out.add(Quad(subject, _TYPE, IRI(type_iri), graph))
    for aff in td.affordances:
        node = IRI(f"{td.id}#{aff.kind}-{urllib.parse.quote(aff.name, safe='')}")
        out.add(Quad(subject, IRI(AFFORDANCE_PREDICATES[aff.kind]), node, graph))
        out.add(Quad(node, _TYPE, IRI(AFFORDANCE_CLASSES[aff.kind]), graph))
        out.add(Quad(node, _NAME, Literal(aff.name), graph))
        for type_iri in aff.semantic_types:
            out.add(Quad(node, _TYPE, IRI(type_iri), graph))
        if aff.href is not None:
            form = IRI(node.value + "-form")
            out.add(Quad(node, _HAS_FORM, form, graph))
            out.add(Quad(form, _HAS_TARGET, IRI(aff.href), graph))
    return out


__all__ = [
    "AFFORDANCE_CLASSES",
    "AFFORDANCE_PREDICATES",
    "Affordance",
    "HCTL",
    "TD",
    "ThingDescription",
    "ThingError",
    "lift_thing",
    "parse_thing",
]
