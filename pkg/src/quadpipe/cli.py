"""Command-line front end: pipelines, repository service, one-shot tools.

Commands: run, serve, lift, lower, nodeset-import, nodeset-export,
match, validate. Results go to standard output, diagnostics to the
error stream. Exit codes: 0 success, 1 input or validation error,
2 runtime error (for lift/lower that split is: load problems exit 1,
execution problems exit 2).

The repository URL for the client commands comes from --kgr or the
KGR_URL environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import signal
import sys
import threading
from pathlib import Path

from .kgr import Repository, make_server
from .mapping import (
    MappingError,
    MappingLoadError,
    SourceDocument,
    SourceError,
    TemplateLoadError,
    lift,
    load_mapping_file,
    load_template_file,
    lower,
)
from .pipeline import Engine, SpecError, load_spec_file
from .recipes import export_match, load_recipe_file, match
from .rdf import ParseError, parse, serialize

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_RUNTIME = 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT) -> None:
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract wants 1 with usage on stderr
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def build_parser() -> _Parser:
    parser = _Parser(prog="quadpipe", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a pipeline spec until interrupted")
    run.add_argument("--spec", required=True, help="pipeline spec file (YAML)")
    run.add_argument("--metrics-port", type=int, help="serve GET /metrics on this port")

    serve = sub.add_parser("serve", help="serve the knowledge graph repository")
    serve.add_argument("--port", type=int, default=8080)
    serve.add_argument("--data", help="directory of documents to load at startup")

    lift_cmd = sub.add_parser("lift", help="run mapping rules over source files")
    lift_cmd.add_argument("--rules", required=True, help="mapping rules (Turtle)")
    lift_cmd.add_argument("--source", action="append", default=[], metavar="NAME=PATH",
                          help="named source document (repeatable)")
    lift_cmd.add_argument("--out", help="write Turtle here instead of stdout")

    lower_cmd = sub.add_parser("lower", help="render a lowering template over RDF")
    lower_cmd.add_argument("--template", required=True)
    lower_cmd.add_argument("--graph", required=True, help="RDF data (Turtle or N-Quads)")
    lower_cmd.add_argument("--out", help="write the rendering here instead of stdout")

    nsi = sub.add_parser("nodeset-import", help="post a NodeSet document to the repository")
    group = nsi.add_mutually_exclusive_group(required=True)
    group.add_argument("--file", help="NodeSet XML file")
    group.add_argument("--url", help="fetch the NodeSet XML from this URL")
    nsi.add_argument("--kgr", default=None, help="repository base URL (default: $KGR_URL)")

    nse = sub.add_parser("nodeset-export", help="fetch a stored NodeSet as XML")
    nse.add_argument("--id", required=True, dest="doc_id")
    nse.add_argument("--out", help="write XML here instead of stdout")
    nse.add_argument("--kgr", default=None)

    match_cmd = sub.add_parser("match", help="match a recipe against the repository")
    match_cmd.add_argument("--recipe", required=True, help="stored recipe id, or a local recipe file")
    match_cmd.add_argument("--kgr", default=None)

    validate = sub.add_parser("validate", help="load a pipeline spec and report")
    validate.add_argument("--spec", required=True)
    return parser


def _kgr_url(flag: str | None) -> str:
    url = flag or os.environ.get("KGR_URL")
    if not url:
        raise CliError("no repository URL: pass --kgr or set KGR_URL")
    return url.rstrip("/")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _http(method: str, url: str, **kwargs):
    import requests

    try:
        response = requests.request(method, url, timeout=60, **kwargs)
    except requests.RequestException as exc:
        raise CliError(f"cannot reach {url}: {exc}", EXIT_RUNTIME) from None
    if response.status_code >= 500:
        raise CliError(f"{url} answered {response.status_code}: {response.text}", EXIT_RUNTIME)
    if response.status_code >= 400:
        detail = response.text.strip()
        try:
            detail = response.json().get("error", detail)
        except ValueError:
            pass
        raise CliError(f"{url} answered {response.status_code}: {detail}")
    return response


class RemoteRepository:
    """Just enough of the repository surface for matching over HTTP."""

    def __init__(self, base_url: str) -> None:
        self.base_url = base_url

    def select(self, query: str) -> list:
        response = _http("POST", self.base_url + "/sparql", data=query.encode("utf-8"))
        doc = response.json()
        rows = []
        for binding in doc["results"]["bindings"]:
            rows.append({name: term["value"] for name, term in binding.items()})
        return rows


# -- commands ----------------------------------------------------------------------


def cmd_run(args) -> int:
    try:
        spec = load_spec_file(args.spec)
    except SpecError as exc:
        raise CliError(str(exc)) from None
    engine = Engine(spec)
    if args.metrics_port is not None:
        port = engine.serve_metrics(args.metrics_port)
        print(f"metrics on http://127.0.0.1:{port}/metrics", file=sys.stderr)
    stop = threading.Event()

    def request_stop(signum, frame):
        stop.set()

    signal.signal(signal.SIGINT, request_stop)
    signal.signal(signal.SIGTERM, request_stop)
    engine.start()
    print(f"running {len(spec.pipelines)} pipelines, interrupt to stop", file=sys.stderr)
    stop.wait()
    engine.shutdown()
    sys.stdout.write(engine.metrics_text())
    return EXIT_OK


def cmd_serve(args) -> int:
    repo = Repository()
    if args.data:
        _preload(repo, Path(args.data))
    try:
        server = make_server(args.port, repo)
    except OSError as exc:
        raise CliError(f"cannot bind port {args.port}: {exc}", EXIT_RUNTIME) from None
    host, port = server.server_address[:2]
    print(f"repository on http://{host}:{port}", file=sys.stderr)
    stop = threading.Event()

    def request_stop(signum, frame):
        stop.set()

    signal.signal(signal.SIGINT, request_stop)
    signal.signal(signal.SIGTERM, request_stop)
    thread = threading.Thread(target=server.serve_forever, kwargs={"poll_interval": 0.1}, daemon=True)
    thread.start()
    stop.wait()
    server.shutdown()
    server.server_close()
    return EXIT_OK


def _preload(repo: Repository, root: Path) -> None:
    from .kgr import BadDocument, StoreError

    if not root.is_dir():
        raise CliError(f"--data {root} is not a directory")
    for path in sorted(root.iterdir()):
        if path.is_dir():
            continue
        try:
            kind = _load_document(repo, path)
        except (StoreError, BadDocument) as exc:
            raise CliError(f"{path.name}: {exc}") from None
        if kind:
            print(f"loaded {kind} from {path.name}", file=sys.stderr)


def _load_document(repo: Repository, path: Path) -> str | None:
    raw = path.read_bytes()
    suffix = path.suffix.lower()
    if suffix == ".xml":
        record = repo.import_nodeset(raw)
        return f"nodeset {record.id} ({record.node_count} nodes)"
    if suffix == ".ttl":
        from .recipes import load_recipe

        recipe = load_recipe(raw.decode("utf-8"))
        repo.put_recipe(recipe.id, raw)
        return f"recipe {recipe.id}"
    if suffix == ".json":
        doc = json.loads(raw)
        if "capabilities" in doc:
            repo.put_recipe(doc.get("id", ""), raw)
            return f"recipe {doc['id']}"
        repo.put_thing(doc.get("id", ""), raw)
        return f"thing {doc['id']}"
    return None


def cmd_lift(args) -> int:
    try:
        rules = load_mapping_file(args.rules)
        sources = {}
        for item in args.source:
            name, sep, path = item.partition("=")
            if not sep or not name:
                raise CliError(f"--source wants NAME=PATH, got {item!r}")
            sources[name] = SourceDocument.from_file(path, name=name)
    except (MappingLoadError, SourceError, OSError) as exc:
        raise CliError(str(exc)) from None
    try:
        out = lift(rules, sources)
    except MappingError as exc:
        raise CliError(str(exc), EXIT_RUNTIME) from None
    _emit(serialize(out, "turtle"), args.out)
    return EXIT_OK


def cmd_lower(args) -> int:
    try:
        template = load_template_file(args.template)
        graph_path = Path(args.graph)
        fmt = "nquads" if graph_path.suffix.lower() in (".nq", ".nquads") else "turtle"
        ds = parse(graph_path.read_text(encoding="utf-8"), format=fmt)
    except (TemplateLoadError, ParseError, OSError) as exc:
        raise CliError(str(exc)) from None
    try:
        text = lower(template, ds, union_default_graph=True)
    except MappingError as exc:
        raise CliError(str(exc), EXIT_RUNTIME) from None
    _emit(text, args.out)
    return EXIT_OK


def cmd_nodeset_import(args) -> int:
    if args.file:
        try:
            raw = Path(args.file).read_bytes()
        except OSError as exc:
            raise CliError(str(exc)) from None
    else:
        raw = _http("GET", args.url).content
    response = _http("POST", _kgr_url(args.kgr) + "/nodesets", data=raw)
    sys.stdout.write(response.text)
    return EXIT_OK


def cmd_nodeset_export(args) -> int:
    response = _http("GET", _kgr_url(args.kgr) + "/nodesets/" + args.doc_id)
    _emit(response.text, args.out)
    return EXIT_OK


def cmd_match(args) -> int:
    base = _kgr_url(args.kgr)
    if Path(args.recipe).is_file():
        try:
            recipe = load_recipe_file(args.recipe)
        except Exception as exc:
            raise CliError(str(exc)) from None
        report = match(recipe, RemoteRepository(base))
        sys.stdout.write(export_match(report))
        return EXIT_OK
    import urllib.parse

    quoted = urllib.parse.quote(args.recipe, safe="")
    response = _http("GET", f"{base}/recipes/{quoted}/match")
    sys.stdout.write(response.text)
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        spec = load_spec_file(args.spec)
    except SpecError as exc:
        raise CliError(str(exc)) from None
    count = len(spec.pipelines)
    print(f"{count} pipeline{'s' if count != 1 else ''} OK")
    return EXIT_OK


_COMMANDS = {
    "run": cmd_run,
    "serve": cmd_serve,
    "lift": cmd_lift,
    "lower": cmd_lower,
    "nodeset-import": cmd_nodeset_import,
    "nodeset-export": cmd_nodeset_export,
    "match": cmd_match,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
