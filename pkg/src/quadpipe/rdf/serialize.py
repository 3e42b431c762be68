"""Turtle and N-Quads writers.

Output is deterministic: quads are sorted by (graph, subject, predicate,
object) over their canonical N-Quads encodings. Datasets with named
graphs serialize in the "turtle" format using TriG-style
`GRAPH <iri> { ... }` blocks, which the parser accepts back.
"""

from __future__ import annotations

from .dataset import Dataset
from .terms import DEFAULT_GRAPH, BlankNode, GraphLabel, IRI, Literal, Quad, Term

_ESCAPES = {
    "\\": "\\\\",
    '"': '\\"',
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
    "\b": "\\b",
    "\f": "\\f",
}


def _escape_string(value: str) -> str:
    out = []
    for ch in value:
        esc = _ESCAPES.get(ch)
        if esc is not None:
            out.append(esc)
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


def _escape_iri(value: str) -> str:
    out = []
    for ch in value:
        if ch in '<>"{}|^`\\' or ord(ch) <= 0x20:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


def term_text(term: Term) -> str:
    """Canonical N-Quads encoding of a term."""
    if isinstance(term, IRI):
        return f"<{_escape_iri(term.value)}>"
    if isinstance(term, BlankNode):
        return f"_:{term.label}"
    if isinstance(term, Literal):
        base = f'"{_escape_string(term.lexical)}"'
        if term.language:
            return f"{base}@{term.language}"
        if term.datatype:
            return f"{base}^^<{_escape_iri(term.datatype.value)}>"
        return base
    raise TypeError(f"not an RDF term: {term!r}")


def graph_text(graph: GraphLabel) -> str:
    return "" if graph is DEFAULT_GRAPH else f"<{_escape_iri(graph.value)}>"


def quad_sort_key(quad: Quad) -> tuple[str, str, str, str]:
    return (
        graph_text(quad.graph),
        term_text(quad.subject),
        term_text(quad.predicate),
        term_text(quad.object),
    )


def to_nquads(ds: Dataset) -> str:
    lines = []
    for q in sorted(ds, key=quad_sort_key):
        g = graph_text(q.graph)
        tail = f" {g} ." if g else " ."
        lines.append(
            f"{term_text(q.subject)} {term_text(q.predicate)} {term_text(q.object)}{tail}"
        )
    return "\n".join(lines) + ("\n" if lines else "")


def _abbreviate(term: Term, prefixes: dict[str, str]) -> str:
    if isinstance(term, IRI):
        for prefix, ns in prefixes.items():
            local = term.value[len(ns):]
            if term.value.startswith(ns) and local and _is_safe_local(local):
                return f"{prefix}:{local}"
    if isinstance(term, Literal) and not term.language and term.datatype:
        dt = _abbreviate(term.datatype, prefixes)
        if not dt.startswith("<"):
            return f'"{_escape_string(term.lexical)}"^^{dt}'
    return term_text(term)


def _is_safe_local(local: str) -> bool:
    # conservative: no escaping needed in the local part
    return all(c.isalnum() or c in "_-." for c in local) and not local.startswith(".") and not local.endswith(".")


def _triples_block(quads: list[Quad], prefixes: dict[str, str], indent: str) -> list[str]:
    lines: list[str] = []
    by_subject: dict[str, list[Quad]] = {}
    for q in quads:
        by_subject.setdefault(_abbreviate(q.subject, prefixes), []).append(q)
    for subj in sorted(by_subject):
        group = sorted(
            by_subject[subj],
            key=lambda q: (_abbreviate(q.predicate, prefixes), term_text(q.object)),
        )
        parts = [
            f"{_abbreviate(q.predicate, prefixes)} {_abbreviate(q.object, prefixes)}"
            for q in group
        ]
        joined = f" ;\n{indent}{' ' * (len(subj) + 1)}".join(parts)
        lines.append(f"{indent}{subj} {joined} .")
    return lines


def to_turtle(ds: Dataset, prefixes: dict[str, str] | None = None) -> str:
    """Serialize a dataset; named graphs become `GRAPH <iri> { ... }` blocks."""
    prefixes = dict(prefixes or {})
    lines = [f"@prefix {p}: <{_escape_iri(ns)}> ." for p, ns in sorted(prefixes.items())]
    if lines:
        lines.append("")
    default = [q for q in ds if q.graph is DEFAULT_GRAPH]
    lines.extend(_triples_block(default, prefixes, ""))
    for g in sorted(ds.graphs(), key=lambda g: g.value):
        lines.append(f"GRAPH <{_escape_iri(g.value)}> {{")
        lines.extend(_triples_block(ds.quads(graph=g), prefixes, "  "))
        lines.append("}")
    text = "\n".join(lines)
    return text + "\n" if text else ""


def serialize(ds: Dataset, format: str = "turtle", prefixes: dict[str, str] | None = None) -> str:
    if format == "turtle":
        return to_turtle(ds, prefixes)
    if format == "nquads":
        return to_nquads(ds)
    raise ValueError(f"unknown serialization format: {format!r}")
