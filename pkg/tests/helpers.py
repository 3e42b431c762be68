"""Shared test material: random RDF generators and a brute-force query oracle.

The oracle joins patterns by scanning every triple in scope with no
indexes, no candidate ordering, and its own unification, so it checks
the evaluator's join/GRAPH/DISTINCT machinery independently. Filter
expressions reuse the production evaluator; their semantics get their
own targeted unit tests.
"""

from __future__ import annotations

import random
from collections import Counter

from quadpipe.rdf import (
    DEFAULT_GRAPH,
    BlankNode,
    Dataset,
    IRI,
    Literal,
    Quad,
    term_text,
)
from quadpipe.rdf.sparql import (
    GraphBlock,
    Group,
    Query,
    TriplePattern,
    Var,
    _ebv,
    _EvalError,
)

EX = "http://example.org/"

_WORDS = ["alpha", "beta", "gamma", "delta", "kappa", "omega", "zeta", "theta"]
_LANGS = ["en", "de", "en-us", "fr"]
_ODD_STRINGS = [
    "",
    " ",
    'quote " inside',
    "back\\slash",
    "tab\there",
    "new\nline",
    "uniçodé ☃",
    "'single' and \"double\"",
    "ends with backslash \\",
    "ümläut",
]


def random_iri(rng: random.Random) -> IRI:
    if rng.random() < 0.1:
        return IRI("urn:thing:" + rng.choice(_WORDS))
    return IRI(EX + rng.choice(_WORDS) + str(rng.randrange(6)))


def random_literal(rng: random.Random) -> Literal:
    roll = rng.random()
    if roll < 0.35:
        return Literal(rng.choice(_WORDS + _ODD_STRINGS))
    if roll < 0.5:
        return Literal(rng.choice(_WORDS), language=rng.choice(_LANGS))
    if roll < 0.7:
        return Literal(str(rng.randrange(-50, 100)), datatype=IRI("http://www.w3.org/2001/XMLSchema#integer"))
    if roll < 0.8:
        return Literal(f"{rng.randrange(100)}.{rng.randrange(10)}", datatype=IRI("http://www.w3.org/2001/XMLSchema#decimal"))
    if roll < 0.9:
        return Literal("true" if rng.random() < 0.5 else "false", datatype=IRI("http://www.w3.org/2001/XMLSchema#boolean"))
    return Literal(rng.choice(_WORDS + _ODD_STRINGS), datatype=IRI(EX + "custom-type"))


def random_term(rng: random.Random, blanks: list[BlankNode]) -> object:
    roll = rng.random()
    if roll < 0.5:
        return random_iri(rng)
    if roll < 0.7 and blanks:
        return rng.choice(blanks)
    return random_literal(rng)


def random_dataset(rng: random.Random, max_quads: int = 40, named_graphs: int = 2) -> Dataset:
    blanks = [BlankNode(f"n{i}") for i in range(rng.randrange(0, 5))]
    graph_pool = [DEFAULT_GRAPH] + [IRI(EX + f"graph/{i}") for i in range(named_graphs)]
    quads = []
    for _ in range(rng.randrange(0, max_quads + 1)):
        subject = rng.choice(blanks) if (blanks and rng.random() < 0.25) else random_iri(rng)
        predicate = random_iri(rng)
        obj = random_term(rng, blanks)
        graph = rng.choice(graph_pool)
        quads.append(Quad(subject, predicate, obj, graph))
    return Dataset(quads)


# -- random queries ------------------------------------------------------------


def random_select_query(rng: random.Random, ds: Dataset) -> str:
    """A SELECT query whose patterns are abstracted from actual data."""
    all_quads = list(ds)
    lines = [f"PREFIX ex: <{EX}>"]
    body: list[str] = []
    used_vars: list[str] = []
    var_count = 0

    def pattern_from_quad(q: Quad) -> str:
        nonlocal var_count
        parts = []
        for term, can_var in ((q.subject, True), (q.predicate, True), (q.object, True)):
            if can_var and rng.random() < 0.55:
                # reuse a var sometimes to force joins
                if used_vars and rng.random() < 0.4:
                    name = rng.choice(used_vars)
                else:
                    name = f"v{var_count}"
                    var_count += 1
                    used_vars.append(name)
                parts.append("?" + name)
            elif isinstance(term, BlankNode):
                # blank labels are not allowed in patterns; use a fresh var
                name = f"v{var_count}"
                var_count += 1
                used_vars.append(name)
                parts.append("?" + name)
            else:
                parts.append(term_text(term))
        return " ".join(parts) + " ."

    default_quads = [q for q in all_quads if q.graph is DEFAULT_GRAPH]
    named_quads = [q for q in all_quads if q.graph is not DEFAULT_GRAPH]

    for _ in range(rng.randrange(1, 4)):
        if default_quads and rng.random() < 0.8:
            body.append(pattern_from_quad(rng.choice(default_quads)))
        elif named_quads:
            q = rng.choice(named_quads)
            if rng.random() < 0.5:
                label = term_text(q.graph)
            else:
                name = f"v{var_count}"
                var_count += 1
                used_vars.append(name)
                label = "?" + name
            body.append(f"GRAPH {label} {{ {pattern_from_quad(q)[:-2]} }}")
        else:
            body.append(pattern_from_quad(rng.choice(all_quads)) if all_quads else "?a ?b ?c .")
            if not all_quads:
                used_vars.extend(n for n in ("a", "b", "c") if n not in used_vars)

    if used_vars and rng.random() < 0.4:
        v = rng.choice(used_vars)
        body.append(rng.choice([
            f"FILTER (?{v} > 10)",
            f"FILTER (?{v} != 3)",
            f'FILTER regex(?{v}, "a")',
            f"FILTER bound(?{v})",
            f'FILTER (?{v} < 40 || regex(?{v}, "^[ab]"))',
        ]))

    distinct = "DISTINCT " if rng.random() < 0.3 else ""
    if used_vars and rng.random() < 0.7:
        count = rng.randrange(1, len(used_vars) + 1)
        projection = " ".join("?" + v for v in rng.sample(used_vars, count))
    else:
        projection = "*"
    lines.append(f"SELECT {distinct}{projection} WHERE {{")
    lines.extend("  " + b for b in body)
    lines.append("}")
    return "\n".join(lines)


# -- brute-force oracle ----------------------------------------------------------


def _scope_triples(ds: Dataset, scope) -> set[tuple]:
    if scope == "union":
        return {(q.subject, q.predicate, q.object) for q in ds}
    return {(q.subject, q.predicate, q.object) for q in ds if q.graph == scope}


def _unify(sol: dict, tp: TriplePattern, triple: tuple) -> dict | None:
    out = dict(sol)
    for role, value in zip((tp.subject, tp.predicate, tp.object), triple):
        if isinstance(role, Var):
            if role.name in out:
                if out[role.name] != value:
                    return None
            else:
                out[role.name] = value
        elif role != value:
            return None
    return out


def _oracle_group(ds: Dataset, group: Group, scope, sols: list[dict]) -> list[dict]:
    for part in group.parts:
        if isinstance(part, GraphBlock):
            named = ds.graphs()
            new: list[dict] = []
            if isinstance(part.label, Var):
                for sol in sols:
                    for g in named:
                        if part.label.name in sol and sol[part.label.name] != g:
                            continue
                        new.extend(_oracle_group(ds, part.group, g, [{**sol, part.label.name: g}]))
            else:
                if part.label in named:
                    new = _oracle_group(ds, part.group, part.label, sols)
            sols = new
        else:
            triples = _scope_triples(ds, scope)
            for tp in part:
                sols = [m for sol in sols for t in triples if (m := _unify(sol, tp, t)) is not None]
    kept = []
    for sol in sols:
        ok = True
        for expr in group.filters:
            try:
                if not _ebv(expr.eval(sol)):
                    ok = False
                    break
            except _EvalError:
                ok = False
                break
        if ok:
            kept.append(sol)
    return kept


def oracle_select(ds: Dataset, query: Query, union_default_graph: bool = False) -> Counter:
    """Multiset of projected rows for a SELECT query, brute-forced."""
    scope = "union" if union_default_graph else DEFAULT_GRAPH
    sols = _oracle_group(ds, query.where, scope, [{}])
    variables = query.variables if query.variables is not None else query.pattern_variables
    rows = []
    for sol in sols:
        rows.append(frozenset((v, term_text(sol[v])) for v in variables if v in sol))
    if query.distinct:
        return Counter(set(rows))
    return Counter(rows)


def result_rows(result) -> Counter:
    """The production result in the oracle's comparable form."""
    return Counter(
        frozenset((v, term_text(row[v])) for v in result.variables if v in row)
        for row in result.solutions
    )
