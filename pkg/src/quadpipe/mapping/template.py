"""Lowering templates: RDF in, text out.

A template is plain text with three directives:

- ``[[#query "SELECT ..."]] body [[/query]]`` runs the embedded query and
  renders the body once per solution, in evaluation order.
- ``[[?var]]`` interpolates a binding from the enclosing query's solution:
  IRIs verbatim, literals by lexical form.
- ``[[#if bound(?var)]] body [[/if]]`` renders the body only when the
  variable is bound.

``\\[[`` escapes a literal ``[[``. Query blocks nest; an inner query's text
may interpolate outer bindings, which makes it a correlated query that is
re-parsed per outer solution.

Load is strict: every query must parse as a SELECT under the query subset,
and every interpolated variable must be projected by its lexically
enclosing query. Rendering an unbound variable inside a satisfied
``bound()`` guard is an error; outside any guard it renders as empty text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..rdf import BlankNode, Dataset, IRI, Literal, evaluate, parse_query, term_text
from ..rdf.sparql import QueryError
from .rml import MappingError

_VAR_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_VAR_REF = re.compile(r"\[\[\?([A-Za-z_][A-Za-z0-9_]*)\]\]")


class TemplateLoadError(MappingError):
    pass


class TemplateRenderError(MappingError):
    pass


@dataclass(frozen=True, slots=True)
class TextNode:
    text: str


@dataclass(frozen=True, slots=True)
class VarNode:
    name: str


@dataclass(frozen=True, slots=True)
class IfNode:
    var: str
    body: tuple


@dataclass(frozen=True, slots=True)
class QueryBlock:
    raw: str
    projection: tuple
    correlated: bool
    body: tuple


@dataclass(frozen=True, slots=True)
class LoweringTemplate:
    text: str
    nodes: tuple


def load_template(text: str) -> LoweringTemplate:
    nodes, i = _parse_nodes(text, 0, closer=None)
    if i != len(text):
        raise TemplateLoadError(f"unexpected closer at offset {i}")
    template = LoweringTemplate(text, tuple(nodes))
    _check_vars(template.nodes, None)
    return template


def load_template_file(path: str) -> LoweringTemplate:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise TemplateLoadError(f"cannot read template file {path!r}: {exc}") from None
    return load_template(text)


def _parse_nodes(text: str, i: int, closer: str | None) -> tuple[list, int]:
    nodes: list = []
    buf: list[str] = []

    def flush() -> None:
        if buf:
            nodes.append(TextNode("".join(buf)))
            buf.clear()

    n = len(text)
    while i < n:
        if text.startswith("\\[[", i):
            buf.append("[[")
            i += 3
            continue
        if not text.startswith("[[", i):
            buf.append(text[i])
            i += 1
            continue
        if text.startswith("[[/", i):
            end = text.find("]]", i)
            if end < 0:
                raise TemplateLoadError(f"unterminated directive at offset {i}")
            name = text[i + 3 : end].strip()
            tag = f"[[/{name}]]"
            if closer is None:
                raise TemplateLoadError(f"{tag} without an open block")
            if name != closer:
                raise TemplateLoadError(f"expected [[/{closer}]], found {tag}")
            flush()
            return nodes, end + 2
        if text.startswith("[[?", i):
            end = text.find("]]", i)
            if end < 0:
                raise TemplateLoadError(f"unterminated interpolation at offset {i}")
            name = text[i + 3 : end]
            if not _VAR_NAME.match(name):
                raise TemplateLoadError(f"bad variable name in [[?{name}]]")
            flush()
            nodes.append(VarNode(name))
            i = end + 2
            continue
        if text.startswith("[[#query", i):
            j = _skip_ws(text, i + len("[[#query"))
            raw, j = _quoted(text, j)
            j = _skip_ws(text, j)
            if not text.startswith("]]", j):
                raise TemplateLoadError(f"expected ']]' after query text at offset {j}")
            body, j = _parse_nodes(text, j + 2, closer="query")
            flush()
            nodes.append(_make_query_block(raw, tuple(body)))
            i = j
            continue
        if text.startswith("[[#if", i):
            end = text.find("]]", i)
            if end < 0:
                raise TemplateLoadError(f"unterminated directive at offset {i}")
            cond = text[i + len("[[#if") : end].strip()
            match = re.fullmatch(r"bound\(\s*\?([A-Za-z_][A-Za-z0-9_]*)\s*\)", cond)
            if match is None:
                raise TemplateLoadError(f"unsupported condition {cond!r} (only bound(?var))")
            body, j = _parse_nodes(text, end + 2, closer="if")
            flush()
            nodes.append(IfNode(match.group(1), tuple(body)))
            i = j
            continue
        if text.startswith("[[#", i):
            end = text.find("]]", i)
            fragment = text[i : end + 2 if end >= 0 else n]
            raise TemplateLoadError(f"unknown directive {fragment!r}")
        # a bare "[[": treat as literal text
        buf.append("[[")
        i += 2
    if closer is not None:
        raise TemplateLoadError(f"missing [[/{closer}]]")
    flush()
    return nodes, i


def _skip_ws(text: str, i: int) -> int:
    while i < len(text) and text[i] in " \t\r\n":
        i += 1
    return i


def _quoted(text: str, i: int) -> tuple[str, int]:
    if i >= len(text) or text[i] != '"':
        raise TemplateLoadError(f"expected a quoted query at offset {i}")
    i += 1
    out: list[str] = []
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text) and text[i + 1] in '"\\':
            out.append(text[i + 1])
            i += 2
            continue
        if ch == '"':
            return "".join(out), i + 1
        out.append(ch)
        i += 1
    raise TemplateLoadError("unterminated query text")


def _make_query_block(raw: str, body: tuple) -> QueryBlock:
    correlated = _VAR_REF.search(raw) is not None
    # validate the query shape up front; correlated blocks are checked with
    # outer interpolations replaced by plain variables
    dummy = _VAR_REF.sub(lambda m: "?" + m.group(1), raw)
    try:
        query = parse_query(dummy)
    except QueryError as exc:
        raise TemplateLoadError(f"embedded query does not parse: {exc}") from None
    if query.form != "select":
        raise TemplateLoadError("templates can only embed SELECT queries")
    projection = tuple(query.variables)
    return QueryBlock(raw, projection, correlated, body)


def _check_vars(nodes: tuple, projection: tuple | None) -> None:
    for node in nodes:
        if isinstance(node, VarNode):
            _require_projected(node.name, projection, "interpolation")
        elif isinstance(node, IfNode):
            _require_projected(node.var, projection, "bound() guard")
            _check_vars(node.body, projection)
        elif isinstance(node, QueryBlock):
            for match in _VAR_REF.finditer(node.raw):
                _require_projected(match.group(1), projection, "query correlation")
            _check_vars(node.body, node.projection)


def _require_projected(name: str, projection: tuple | None, what: str) -> None:
    if projection is None:
        raise TemplateLoadError(f"{what} [[?{name}]] outside any query block")
    if name not in projection:
        raise TemplateLoadError(
            f"{what} [[?{name}]] is not projected by the enclosing query (has: {', '.join(projection) or 'nothing'})"
        )


# -- rendering --------------------------------------------------------------------


def lower(
    template: LoweringTemplate,
    ds: Dataset,
    union_default_graph: bool = False,
) -> str:
    """Render the template against a dataset."""
    out: list[str] = []
    _render_nodes(template.nodes, ds, None, 0, union_default_graph, out)
    return "".join(out)


def _render_nodes(nodes, ds, env, guard_depth, union, out) -> None:
    for node in nodes:
        if isinstance(node, TextNode):
            out.append(node.text)
        elif isinstance(node, VarNode):
            out.append(_interpolate(node.name, env, guard_depth))
        elif isinstance(node, IfNode):
            term = None if env is None else env.get(node.var)
            if term is not None:
                _render_nodes(node.body, ds, env, guard_depth + 1, union, out)
        else:  # QueryBlock
            query_text = node.raw
            if node.correlated:
                query_text = _VAR_REF.sub(lambda m: _query_token(m.group(1), env), query_text)
            try:
                query = parse_query(query_text)
            except QueryError as exc:
                raise TemplateRenderError(f"correlated query does not parse: {exc}") from None
            result = evaluate(ds, query, union_default_graph=union)
            for solution in result.solutions:
                _render_nodes(node.body, ds, solution, guard_depth, union, out)


def _interpolate(name: str, env, guard_depth: int) -> str:
    term = None if env is None else env.get(name)
    if term is None:
        if guard_depth > 0:
            raise TemplateRenderError(f"variable ?{name} is unbound inside a bound() guard")
        return ""
    if isinstance(term, IRI):
        return term.value
    if isinstance(term, Literal):
        return term.lexical
    return "_:" + term.label


def _query_token(name: str, env) -> str:
    term = None if env is None else env.get(name)
    if term is None:
        raise TemplateRenderError(f"variable ?{name} is unbound in a correlated query")
    if isinstance(term, BlankNode):
        raise TemplateRenderError(f"cannot correlate on blank node ?{name}")
    return term_text(term)
