"""Knowledge graph repository: documents, lifted graphs, HTTP access."""

from .nodeset import (
    NodeSetError,
    NodeSetInfo,
    canonical_node_id,
    dangling_references,
    export_nodeset_xml,
    import_chain,
    node_iri,
    parse_node_id,
    scan_nodeset,
)
from .service import make_server, serve
from .store import BadDocument, DocumentRecord, NotFound, Repository, StoreError
from .things import Affordance, ThingDescription, ThingError, lift_thing, parse_thing

__all__ = [
    "Affordance",
    "BadDocument",
    "DocumentRecord",
    "NodeSetError",
    "NodeSetInfo",
    "NotFound",
    "Repository",
    "StoreError",
    "ThingDescription",
    "ThingError",
    "canonical_node_id",
    "dangling_references",
    "export_nodeset_xml",
    "import_chain",
    "lift_thing",
    "make_server",
    "node_iri",
    "parse_node_id",
    "parse_thing",
    "scan_nodeset",
    "serve",
]
