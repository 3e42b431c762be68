"""HTTP front for the repository.

Routes:

- ``GET /health``
- ``PUT/GET/DELETE /things/{id}`` (JSON, byte-exact GET)
- ``PUT/GET/DELETE /recipes/{id}`` (JSON or Turtle, byte-exact GET)
- ``GET /recipes/{id}/match`` (match report JSON)
- ``POST /nodesets`` (XML body) -> ``{id, nodeCount, diagnostics}``
- ``GET /nodesets/{id}`` / ``DELETE /nodesets/{id}``
- ``GET /nodes?id=...`` (XML fragment of the named nodes)
- ``POST /sparql`` (query text in the body; SELECT answers in SPARQL
  results JSON, CONSTRUCT answers in Turtle)

Document GETs carry the stored document's ETag (hash of the bytes that
were put or posted). Ids in paths are percent-decoded. The server
handles requests on threads; the repository serializes writes itself.
"""

from __future__ import annotations

import json
import threading
import urllib.parse
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from ..rdf import Dataset, IRI, Literal, serialize
from ..recipes import export_match
from .store import BadDocument, NotFound, Repository, StoreError

_MAX_BODY = 64 * 1024 * 1024


def results_json(result) -> str:
    """SELECT solutions in the SPARQL query results JSON format."""
    bindings = []
    for solution in result.solutions:
        row = {}
        for name, term in solution.items():
            if isinstance(term, IRI):
                row[name] = {"type": "uri", "value": term.value}
            elif isinstance(term, Literal):
                encoded = {"type": "literal", "value": term.lexical}
                if term.language is not None:
                    encoded["xml:lang"] = term.language
                elif term.datatype is not None:
                    encoded["datatype"] = term.datatype.value
                row[name] = encoded
            else:
                row[name] = {"type": "bnode", "value": term.label}
        bindings.append(row)
    doc = {"head": {"vars": list(result.variables)}, "results": {"bindings": bindings}}
    return json.dumps(doc, indent=2) + "\n"


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "kgr"

    # -- plumbing -----------------------------------------------------------------

    def log_message(self, format, *args):
        pass

    @property
    def repo(self) -> Repository:
        return self.server.repository

    def _body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        if length > _MAX_BODY:
            raise BadDocument(f"body larger than {_MAX_BODY} bytes")
        return self.rfile.read(length)

    def _send(self, status: int, payload: bytes, content_type: str, etag: str | None = None) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        if etag is not None:
            self.send_header("ETag", f'"{etag}"')
        self.end_headers()
        self.wfile.write(payload)

    def _send_json(self, status: int, doc, etag: str | None = None) -> None:
        self._send(status, (json.dumps(doc, indent=2) + "\n").encode("utf-8"), "application/json", etag)

    def _error(self, status: int, message: str) -> None:
        self._send_json(status, {"error": message})

    def _dispatch(self, method: str) -> None:
        parsed = urllib.parse.urlsplit(self.path)
        parts = [urllib.parse.unquote(p) for p in parsed.path.split("/") if p]
        try:
            handled = self._route(method, parts, parsed.query)
        except NotFound as exc:
            self._error(404, str(exc))
        except BadDocument as exc:
            self._error(400, str(exc))
        except StoreError as exc:
            self._error(500, str(exc))
        else:
            if not handled:
                self._error(404, f"no route for {method} {parsed.path}")

    def do_GET(self):
        self._dispatch("GET")

    def do_PUT(self):
        self._dispatch("PUT")

    def do_POST(self):
        self._dispatch("POST")

    def do_DELETE(self):
        self._dispatch("DELETE")

    # -- routes --------------------------------------------------------------------

    def _route(self, method: str, parts: list, query: str) -> bool:
        if parts == ["health"]:
            if method != "GET":
                return False
            self._send_json(200, {"status": "ok", "documents": len(self.repo)})
            return True
        if len(parts) == 2 and parts[0] in ("things", "recipes"):
            return self._document(method, parts[0], parts[1])
        if parts == ["nodesets"] and method == "POST":
            record = self.repo.import_nodeset(self._body())
            self._send_json(
                201,
                {"id": record.id, "nodeCount": record.node_count, "diagnostics": list(record.diagnostics)},
                etag=record.etag,
            )
            return True
        if len(parts) == 2 and parts[0] == "nodesets":
            return self._nodeset(method, parts[1])
        if parts == ["nodes"] and method == "GET":
            ids = urllib.parse.parse_qs(query).get("id", [])
            xml = self.repo.export_nodes(ids)
            self._send(200, xml.encode("utf-8"), "application/xml")
            return True
        if len(parts) == 3 and parts[0] == "recipes" and parts[2] == "match" and method == "GET":
            report = self.repo.match_recipe(parts[1])
            self._send(200, export_match(report).encode("utf-8"), "application/json")
            return True
        if parts == ["sparql"] and method == "POST":
            result = self.repo.search(self._body().decode("utf-8"))
            if isinstance(result, Dataset):
                self._send(200, serialize(result, "turtle").encode("utf-8"), "text/turtle")
            else:
                self._send(200, results_json(result).encode("utf-8"), "application/sparql-results+json")
            return True
        return False

    def _document(self, method: str, collection: str, doc_id: str) -> bool:
        kind = {"things": "thing", "recipes": "recipe"}[collection]
        if method == "PUT":
            existed = doc_id in self.repo.list_ids(kind)
            put = self.repo.put_thing if kind == "thing" else self.repo.put_recipe
            record = put(doc_id, self._body())
            self._send_json(200 if existed else 201, {"id": record.id, "etag": record.etag}, etag=record.etag)
            return True
        if method == "GET":
            record = self.repo.get_kind(doc_id, kind)
            content_type = "application/json" if kind == "thing" else _recipe_content_type(record.raw)
            self._send(200, record.raw, content_type, etag=record.etag)
            return True
        if method == "DELETE":
            self.repo.get_kind(doc_id, kind)
            self.repo.delete(doc_id)
            self._send_json(200, {"deleted": doc_id})
            return True
        return False

    def _nodeset(self, method: str, doc_id: str) -> bool:
        if method == "GET":
            record = self.repo.get_kind(doc_id, "nodeset")
            xml = self.repo.export_nodeset(doc_id)
            self._send(200, xml.encode("utf-8"), "application/xml", etag=record.etag)
            return True
        if method == "DELETE":
            self.repo.get_kind(doc_id, "nodeset")
            self.repo.delete(doc_id)
            self._send_json(200, {"deleted": doc_id})
            return True
        return False


def _recipe_content_type(raw: bytes) -> str:
    return "application/json" if raw.lstrip()[:1] == b"{" else "text/turtle"


class KgrServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, repository: Repository) -> None:
        super().__init__(address, _Handler)
        self.repository = repository


def make_server(port: int, repository: Repository | None = None, host: str = "127.0.0.1") -> KgrServer:
    # an explicit None test: an empty Repository is falsy but still the caller's store
    return KgrServer((host, port), Repository() if repository is None else repository)


def serve(port: int, repository: Repository | None = None, host: str = "127.0.0.1") -> KgrServer:
    """Start serving on a daemon thread; returns the server (port on .server_address)."""
    server = make_server(port, repository, host)
    thread = threading.Thread(
        target=server.serve_forever, kwargs={"poll_interval": 0.05}, name="kgr-http", daemon=True
    )
    thread.start()
    return server


__all__ = ["KgrServer", "make_server", "results_json", "serve"]
