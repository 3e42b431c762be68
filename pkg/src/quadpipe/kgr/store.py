"""Knowledge graph repository: documents in, one named graph per document.

The repository holds Thing Descriptions, OPC UA NodeSets, and recipes.
Each stored document owns exactly one named graph (registry and graphs
stay in bijection) plus its raw bytes, so GET returns the original
document byte-exact while SPARQL sees the lifted view. Queries run over
the union of all graphs with GRAPH patterns honoured.

Reads may run concurrently; writes serialize on a store-wide lock.
Deleting a document drops exactly its graph: links other graphs hold
into it simply become dangling IRIs.

NodeSet imports resolve references against everything already stored,
and every import is followed by a re-resolution pass over the other
stored NodeSets, so references to nodes that arrive later link up as
soon as their set does. Import order does not change the final union.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, replace

from ..rdf import DEFAULT_GRAPH, Dataset, IRI, Literal, Quad, evaluate, parse_query
from ..rdf.sparql import QueryError
from ..recipes import Recipe, RecipeError, load_recipe, match, recipe_to_rdf
from .nodeset import (
    NodeSetError,
    dangling_references,
    export_nodeset_xml,
    import_chain,
    node_iri,
    node_projection,
    resolve_links,
)
from .things import ThingError, lift_thing, parse_thing

NODESET_GRAPH_PREFIX = "urn:kgr:graph:"


class StoreError(Exception):
    """Base for repository failures."""


class NotFound(StoreError):
    pass


class BadDocument(StoreError):
    """Input document rejected before any state change."""


@dataclass(frozen=True, slots=True)
class DocumentRecord:
    id: str
    kind: str
    graph: IRI
    raw: bytes
    etag: str
    node_count: int = 0
    diagnostics: tuple = ()


def _etag(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()


def _rehome(quads, graph: IRI) -> list:
    return [Quad(q.subject, q.predicate, q.object, graph) for q in quads]


class Repository:
    def __init__(self) -> None:
        self._ds = Dataset()
        self._registry: dict[str, DocumentRecord] = {}
        self._write = threading.Lock()
        self._nodeset_seq = 0

    # -- registry views ----------------------------------------------------------

    def get(self, doc_id: str) -> DocumentRecord:
        record = self._registry.get(doc_id)
        if record is None:
            raise NotFound(f"no document {doc_id!r}")
        return record

    def get_kind(self, doc_id: str, kind: str) -> DocumentRecord:
        record = self.get(doc_id)
        if record.kind != kind:
            raise NotFound(f"{doc_id!r} is a {record.kind}, not a {kind}")
        return record

    def list_ids(self, kind: str | None = None) -> list[str]:
        return sorted(r.id for r in self._registry.values() if kind is None or r.kind == kind)

    def graphs(self) -> set:
        with self._ds.read_lock():
            return {g for g in self._ds.graphs() if g != DEFAULT_GRAPH}

    def __len__(self) -> int:
        return len(self._registry)

    # -- things --------------------------------------------------------------------

    def put_thing(self, doc_id: str, raw: bytes) -> DocumentRecord:
        try:
            td = parse_thing(raw)
        except ThingError as exc:
            raise BadDocument(str(exc)) from None
        if td.id != doc_id:
            raise BadDocument(f"document id {td.id!r} does not match target {doc_id!r}")
        return self._put(DocumentRecord(doc_id, "thing", IRI(td.id), raw, _etag(raw)), lift_thing(td))

    # -- recipes ---------------------------------------------------------------------

    def put_recipe(self, doc_id: str, raw: bytes) -> DocumentRecord:
        try:
            recipe = load_recipe(raw.decode("utf-8"))
        except (UnicodeDecodeError, RecipeError) as exc:
            raise BadDocument(str(exc)) from None
        if recipe.id != doc_id:
            raise BadDocument(f"recipe id {recipe.id!r} does not match target {doc_id!r}")
        graph = IRI(recipe.id)
        quads = _rehome(recipe_to_rdf(recipe), graph)
        return self._put(DocumentRecord(doc_id, "recipe", graph, raw, _etag(raw)), quads)

    def match_recipe(self, doc_id: str):
        record = self.get_kind(doc_id, "recipe")
        return match(load_recipe(record.raw.decode("utf-8")), self)

    def _put(self, record: DocumentRecord, quads) -> DocumentRecord:
        with self._write:
            existing = self._registry.get(record.id)
            if existing is not None:
                if existing.kind != record.kind:
                    raise BadDocument(f"{record.id!r} already holds a {existing.kind}")
                if existing.raw == record.raw:
                    return existing
                self._ds.drop_graph(existing.graph)
            elif record.graph in self.graphs():
                raise BadDocument(f"graph {record.graph.value!r} is already in use")
            self._ds.update(quads)
            self._registry[record.id] = record
            return record

    # -- nodesets ---------------------------------------------------------------------

    def import_nodeset(self, raw: bytes) -> DocumentRecord:
        with self._write:
            try:
                quads, info = import_chain(raw, context_quads=self._ds)
            except NodeSetError as exc:
                raise BadDocument(str(exc)) from None
            taken = self.graphs()
            while True:
                self._nodeset_seq += 1
                doc_id = f"nodeset-{self._nodeset_seq}"
                graph = IRI(NODESET_GRAPH_PREFIX + doc_id)
                if doc_id not in self._registry and graph not in taken:
                    break
            homed = _rehome(quads, graph)
            self._ds.update(homed)
            record = DocumentRecord(
                doc_id,
                "nodeset",
                graph,
                raw,
                _etag(raw),
                node_count=info.node_count,
                diagnostics=tuple(dangling_references(Dataset(homed))),
            )
            self._registry[doc_id] = record
            self._resolve_other_nodesets(doc_id)
            return self._registry[doc_id]

    def _resolve_other_nodesets(self, imported_id: str) -> None:
        # References may point at nodes that only now exist; re-run the
        # link-resolution pass for every other stored set against the
        # current union and refresh its diagnostics.
        for record in list(self._registry.values()):
            if record.kind != "nodeset" or record.id == imported_id:
                continue
            resolved = resolve_links(record.raw, self._ds)
            self._ds.update(_rehome(resolved, record.graph))
            diagnostics = tuple(dangling_references(self._graph_quads(record.graph)))
            self._registry[record.id] = replace(record, diagnostics=diagnostics)

    def _graph_quads(self, graph: IRI) -> Dataset:
        with self._ds.read_lock():
            return Dataset(self._ds.quads(graph=graph))

    def export_nodeset(self, doc_id: str) -> str:
        record = self.get_kind(doc_id, "nodeset")
        return export_nodeset_xml(self._graph_quads(record.graph))

    def export_nodes(self, node_ids) -> str:
        if not node_ids:
            raise BadDocument("no node ids given")
        quads = []
        with self._ds.read_lock():
            for text in node_ids:
                try:
                    node = IRI(node_iri(text, ("http://opcfoundation.org/UA/",)))
                except NodeSetError as exc:
                    raise BadDocument(str(exc)) from None
                try:
                    quads.extend(node_projection(self._ds, node))
                except NodeSetError as exc:
                    raise NotFound(str(exc)) from None
        return export_nodeset_xml(Dataset(quads))

    # -- queries -----------------------------------------------------------------------

    def search(self, query_text: str):
        """SPARQL over the union of stored graphs; SELECT or CONSTRUCT result."""
        try:
            query = parse_query(query_text)
        except QueryError as exc:
            raise BadDocument(str(exc)) from None
        with self._ds.read_lock():
            return evaluate(self._ds, query, union_default_graph=True)

    def select(self, query_text: str) -> list[dict]:
        """SELECT solutions as plain string dicts (IRIs and lexical forms)."""
        result = self.search(query_text)
        if isinstance(result, Dataset):
            raise BadDocument("expected a SELECT query")
        rows = []
        for solution in result.solutions:
            row = {}
            for name, term in solution.items():
                if isinstance(term, Literal):
                    row[name] = term.lexical
                elif isinstance(term, IRI):
                    row[name] = term.value
                else:
                    row[name] = "_:" + term.label
            rows.append(row)
        return rows

    # -- lifecycle -----------------------------------------------------------------------

    def delete(self, doc_id: str) -> DocumentRecord:
        with self._write:
            record = self.get(doc_id)
            self._ds.drop_graph(record.graph)
            del self._registry[doc_id]
            return record


__all__ = [
    "BadDocument",
    "DocumentRecord",
    "NODESET_GRAPH_PREFIX",
    "NotFound",
    "Repository",
    "StoreError",
]
