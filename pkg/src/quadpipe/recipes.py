"""Recipes: application templates of required device capabilities.

A recipe names the capabilities an application needs from a set of
devices. Each required capability points at a semantic type IRI and,
optionally, the affordance kind that must carry it; a minimum cardinality
says how many distinct devices must offer it. Matching compares these
requirements against stored Thing Descriptions: a Thing is a candidate
for a capability when at least one of its affordances carries the
capability's semantic type (exact IRI match, no subclass reasoning) and
has the required kind, if one is given.

Recipes load from two equivalent encodings, a JSON schema and a Turtle
vocabulary subset, and both produce identical values; capabilities are
kept sorted by id so the unordered Turtle form and the JSON list agree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .rdf import BlankNode, Dataset, IRI, Literal, Quad, RDF_TYPE, XSD, parse, typed

REC = "urn:recipe:vocab:"
AFFORDANCE_KINDS = ("property", "action", "event")

_TYPE = IRI(RDF_TYPE)
_RECIPE = IRI(REC + "Recipe")
_NAME = IRI(REC + "name")
_CAPABILITY = IRI(REC + "capability")
_CAP_ID = IRI(REC + "capabilityId")
_SEMANTIC_TYPE = IRI(REC + "semanticType")
_AFFORDANCE_KIND = IRI(REC + "affordanceKind")
_MIN_COUNT = IRI(REC + "minCount")
_PARAMETER = IRI(REC + "parameter")
_PAR_KEY = IRI(REC + "key")
_PAR_VALUE = IRI(REC + "value")


class RecipeError(ValueError):
    """Malformed recipe document or match report."""


@dataclass(frozen=True, slots=True)
class RequiredCapability:
    id: str
    semantic_type: str
    affordance_kind: str | None = None
    min_count: int = 1

    def __post_init__(self) -> None:
        if not self.id:
            raise RecipeError("capability id must be non-empty")
        if not self.semantic_type:
            raise RecipeError(f"capability {self.id!r}: semantic type must be non-empty")
        if self.affordance_kind is not None and self.affordance_kind not in AFFORDANCE_KINDS:
            raise RecipeError(
                f"capability {self.id!r}: affordance kind must be one of {', '.join(AFFORDANCE_KINDS)}"
            )
        if not isinstance(self.min_count, int) or isinstance(self.min_count, bool) or self.min_count < 1:
            raise RecipeError(f"capability {self.id!r}: min count must be an integer >= 1")


@dataclass(frozen=True, slots=True)
class Recipe:
    id: str
    name: str
    capabilities: tuple
    parameters: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise RecipeError("recipe id must be non-empty")
        if not self.capabilities:
            raise RecipeError("recipe needs at least one capability")
        ids = [c.id for c in self.capabilities]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise RecipeError(f"duplicate capability id: {', '.join(dup)}")
        object.__setattr__(self, "capabilities", tuple(sorted(self.capabilities, key=lambda c: c.id)))


@dataclass(frozen=True, slots=True)
class MatchEntry:
    capability_id: str
    candidates: tuple
    satisfied: bool


@dataclass(frozen=True, slots=True)
class MatchReport:
    recipe_id: str
    entries: tuple
    overall_satisfiable: bool


# -- loading ----------------------------------------------------------------------


def load_recipe(data: bytes | str) -> Recipe:
    """Load a recipe from its JSON or Turtle encoding (detected by shape)."""
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return _recipe_from_json(text)
    return recipe_from_rdf(parse(text, format="turtle"))


def load_recipe_file(path: str) -> Recipe:
    try:
        with open(path, "rb") as handle:
            return load_recipe(handle.read())
    except OSError as exc:
        raise RecipeError(f"cannot read recipe file {path!r}: {exc}") from None


def _recipe_from_json(text: str) -> Recipe:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RecipeError(f"recipe is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise RecipeError("recipe must be a JSON object")
    unknown = set(doc) - {"id", "name", "capabilities", "parameters"}
    if unknown:
        raise RecipeError(f"unknown recipe field: {', '.join(sorted(unknown))}")
    for key in ("id", "name"):
        if not isinstance(doc.get(key), str) or not doc.get(key):
            raise RecipeError(f"recipe needs a non-empty text field {key!r}")
    raw_caps = doc.get("capabilities")
    if not isinstance(raw_caps, list):
        raise RecipeError("recipe field 'capabilities' must be a list")
    capabilities = [_capability_from_json(c, i) for i, c in enumerate(raw_caps)]
    parameters = doc.get("parameters", {})
    if not isinstance(parameters, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in parameters.items()
    ):
        raise RecipeError("recipe field 'parameters' must map text keys to text values")
    return Recipe(doc["id"], doc["name"], tuple(capabilities), dict(parameters))


def _capability_from_json(obj, index: int) -> RequiredCapability:
    if not isinstance(obj, dict):
        raise RecipeError(f"capability {index} must be a JSON object")
    unknown = set(obj) - {"id", "semantic-type", "affordance-kind", "min"}
    if unknown:
        raise RecipeError(f"capability {index}: unknown field: {', '.join(sorted(unknown))}")
    for key in ("id", "semantic-type"):
        if not isinstance(obj.get(key), str):
            raise RecipeError(f"capability {index} needs a text field {key!r}")
    return RequiredCapability(
        id=obj["id"],
        semantic_type=obj["semantic-type"],
        affordance_kind=obj.get("affordance-kind"),
        min_count=obj.get("min", 1),
    )


def recipe_from_rdf(ds: Dataset) -> Recipe:
    """Decode the Turtle vocabulary subset back into a Recipe value."""
    subjects = sorted(
        (q.subject for q in ds.quads(predicate=_TYPE, object=_RECIPE)),
        key=lambda s: getattr(s, "value", ""),
    )
    if len(subjects) != 1:
        raise RecipeError(f"recipe document must declare exactly one recipe, found {len(subjects)}")
    subject = subjects[0]
    if not isinstance(subject, IRI):
        raise RecipeError("recipe subject must be an IRI")
    consumed = set(ds.quads(subject=subject, predicate=_TYPE, object=_RECIPE))
    name = _literal_of(ds, subject, _NAME, consumed)
    capabilities = []
    for quad in ds.quads(subject=subject, predicate=_CAPABILITY):
        consumed.add(quad)
        capabilities.append(_capability_from_rdf(ds, quad.object, consumed))
    parameters = {}
    for quad in ds.quads(subject=subject, predicate=_PARAMETER):
        consumed.add(quad)
        key = _literal_of(ds, quad.object, _PAR_KEY, consumed)
        if key in parameters:
            raise RecipeError(f"duplicate parameter key {key!r}")
        parameters[key] = _literal_of(ds, quad.object, _PAR_VALUE, consumed)
    leftovers = [q for q in ds.quads() if q not in consumed]
    if leftovers:
        extra = sorted({q.predicate.value for q in leftovers})
        raise RecipeError(f"unexpected statement in recipe document: {', '.join(extra)}")
    return Recipe(subject.value, name, tuple(capabilities), parameters)


def _capability_from_rdf(ds: Dataset, node, consumed: set) -> RequiredCapability:
    cap_id = _literal_of(ds, node, _CAP_ID, consumed)
    type_quads = list(ds.quads(subject=node, predicate=_SEMANTIC_TYPE))
    if len(type_quads) != 1 or not isinstance(type_quads[0].object, IRI):
        raise RecipeError(f"capability {cap_id!r} needs exactly one semanticType IRI")
    consumed.add(type_quads[0])
    kind = None
    kind_quads = list(ds.quads(subject=node, predicate=_AFFORDANCE_KIND))
    if kind_quads:
        if len(kind_quads) > 1 or not isinstance(kind_quads[0].object, Literal):
            raise RecipeError(f"capability {cap_id!r} needs at most one affordanceKind literal")
        consumed.add(kind_quads[0])
        kind = kind_quads[0].object.lexical
    min_count = 1
    min_quads = list(ds.quads(subject=node, predicate=_MIN_COUNT))
    if min_quads:
        if len(min_quads) > 1 or not isinstance(min_quads[0].object, Literal):
            raise RecipeError(f"capability {cap_id!r} needs at most one minCount literal")
        consumed.add(min_quads[0])
        try:
            min_count = int(min_quads[0].object.lexical)
        except ValueError:
            raise RecipeError(f"capability {cap_id!r}: minCount is not an integer") from None
    return RequiredCapability(cap_id, type_quads[0].object.value, kind, min_count)


def _literal_of(ds: Dataset, subject, predicate: IRI, consumed: set) -> str:
    quads = list(ds.quads(subject=subject, predicate=predicate))
    if len(quads) != 1 or not isinstance(quads[0].object, Literal):
        raise RecipeError(f"needs exactly one <{predicate.value}> literal, found {len(quads)}")
    consumed.add(quads[0])
    return quads[0].object.lexical


def recipe_to_rdf(recipe: Recipe) -> Dataset:
    """Encode a Recipe in the Turtle vocabulary subset (default graph)."""
    out = Dataset()
    subject = IRI(recipe.id)
    integer = XSD + "integer"
    out.add(Quad(subject, _TYPE, _RECIPE))
    out.add(Quad(subject, _NAME, Literal(recipe.name)))
    for i, cap in enumerate(recipe.capabilities):
        node = BlankNode(f"cap{i}")
        out.add(Quad(subject, _CAPABILITY, node))
        out.add(Quad(node, _CAP_ID, Literal(cap.id)))
        out.add(Quad(node, _SEMANTIC_TYPE, IRI(cap.semantic_type)))
        if cap.affordance_kind is not None:
            out.add(Quad(node, _AFFORDANCE_KIND, Literal(cap.affordance_kind)))
        out.add(Quad(node, _MIN_COUNT, typed(str(cap.min_count), integer)))
    for i, key in enumerate(sorted(recipe.parameters)):
        node = BlankNode(f"par{i}")
        out.add(Quad(subject, _PARAMETER, node))
        out.add(Quad(node, _PAR_KEY, Literal(key)))
        out.add(Quad(node, _PAR_VALUE, Literal(recipe.parameters[key])))
    return out


# -- matching ---------------------------------------------------------------------

_TD = "https://www.w3.org/2019/wot/td#"
_AFFORDANCE_PREDICATES = {
    _TD + "hasPropertyAffordance": "property",
    _TD + "hasActionAffordance": "action",
    _TD + "hasEventAffordance": "event",
}

_MATCH_QUERY = "SELECT ?thing ?rel ?type WHERE { ?thing ?rel ?aff . ?aff a ?type . }"


def match(recipe: Recipe, store) -> MatchReport:
    """Match each required capability against the store's Thing Descriptions.

    The store handle must expose select(query) returning solution rows as
    plain string dicts; both the in-process repository and the HTTP client
    do. Candidates are ordered lexicographically by Thing id.
    """
    offers: set[tuple[str, str, str]] = set()
    for row in store.select(_MATCH_QUERY):
        kind = _AFFORDANCE_PREDICATES.get(row["rel"])
        if kind is not None:
            offers.add((row["thing"], kind, row["type"]))
    entries = []
    for cap in recipe.capabilities:
        candidates = sorted(
            {
                thing
                for thing, kind, semantic_type in offers
                if semantic_type == cap.semantic_type
                and (cap.affordance_kind is None or kind == cap.affordance_kind)
            }
        )
        entries.append(MatchEntry(cap.id, tuple(candidates), len(candidates) >= cap.min_count))
    return MatchReport(recipe.id, tuple(entries), all(e.satisfied for e in entries))


def export_match(report: MatchReport) -> str:
    """Render a match report as JSON with a stable field order."""
    doc = {
        "recipe-id": report.recipe_id,
        "entries": [
            {
                "capability-id": entry.capability_id,
                "candidates": list(entry.candidates),
                "satisfied": entry.satisfied,
            }
            for entry in report.entries
        ],
        "overall-satisfiable": report.overall_satisfiable,
    }
    return json.dumps(doc, indent=2) + "\n"


def load_match(text: str) -> MatchReport:
    try:
        doc = json.loads(text)
        entries = tuple(
            MatchEntry(e["capability-id"], tuple(e["candidates"]), bool(e["satisfied"]))
            for e in doc["entries"]
        )
        return MatchReport(doc["recipe-id"], entries, bool(doc["overall-satisfiable"]))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise RecipeError(f"malformed match report: {exc}") from None


def recipe_parameters(recipe: Recipe) -> str:
    """Render the recipe's parameter map as flat sorted-key JSON."""
    return json.dumps(recipe.parameters, sort_keys=True) + "\n"


__all__ = [
    "AFFORDANCE_KINDS",
    "MatchEntry",
    "MatchReport",
    "REC",
    "Recipe",
    "RecipeError",
    "RequiredCapability",
    "export_match",
    "load_match",
    "load_recipe",
    "load_recipe_file",
    "match",
    "recipe_from_rdf",
    "recipe_parameters",
    "recipe_to_rdf",
]
