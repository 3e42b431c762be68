"""SPARQL subset over named-graph datasets.

Supported: SELECT (var list or *, DISTINCT, LIMIT/OFFSET) and CONSTRUCT,
basic graph patterns, GRAPH blocks with an IRI or variable label, and
FILTER with comparisons, && || !, regex(), and bound(). PREFIX and BASE
prologues work as in Turtle.

Anything else from the full language (OPTIONAL, UNION, MINUS, BIND,
VALUES, ORDER BY, aggregates, property paths, subqueries, SERVICE,
updates) raises UnsupportedQueryError naming the feature, never a
silent wrong answer.

Evaluation is deterministic: candidate quads are matched in canonical
N-Quads order and GRAPH variables iterate named graphs sorted by IRI.
Filter evaluation errors (type mismatches, malformed numbers) make the
filter false for that solution, as in the full language.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

from .dataset import ANY, Dataset
from .parser import ParseError, _is_pn_chars_u, _Scanner, _TurtleParser
from .serialize import term_text
from .terms import (
    DEFAULT_GRAPH,
    BlankNode,
    IRI,
    Literal,
    Quad,
    RDF_TYPE,
    Term,
    XSD_BOOLEAN,
    XSD_DECIMAL,
    XSD_DOUBLE,
    XSD_INTEGER,
    XSD_STRING,
)


class QueryError(ParseError):
    """Malformed query text."""


class UnsupportedQueryError(QueryError):
    """Syntactically valid SPARQL outside the supported subset."""


_NUMERIC_TYPES = {XSD_INTEGER, XSD_DECIMAL, XSD_DOUBLE}


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Var:
    name: str


PatternTerm = Term | Var


@dataclass(frozen=True, slots=True)
class TriplePattern:
    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm


@dataclass(slots=True)
class Group:
    parts: list  # list[list[TriplePattern] | GraphBlock]
    filters: list


@dataclass(slots=True)
class GraphBlock:
    label: IRI | Var
    group: Group


@dataclass(slots=True)
class Query:
    form: str  # "select" | "construct"
    variables: list[str] | None  # None means '*'
    distinct: bool
    template: list[TriplePattern] | None
    where: Group
    limit: int | None
    offset: int
    pattern_variables: list[str]  # all vars in order of appearance


@dataclass(slots=True)
class SelectResult:
    variables: list[str]
    solutions: list[dict[str, Term]]


# -- expressions ---------------------------------------------------------------


class _EvalError(Exception):
    """Filter evaluation error; makes the enclosing filter false."""


class _Expr:
    def eval(self, solution: dict[str, Term]):
        raise NotImplementedError


@dataclass(slots=True)
class _Const(_Expr):
    term: Term

    def eval(self, solution):
        return self.term


@dataclass(slots=True)
class _VarRef(_Expr):
    name: str

    def eval(self, solution):
        try:
            return solution[self.name]
        except KeyError:
            raise _EvalError(f"unbound variable ?{self.name}")


@dataclass(slots=True)
class _Not(_Expr):
    inner: _Expr

    def eval(self, solution):
        return not _ebv(self.inner.eval(solution))


@dataclass(slots=True)
class _And(_Expr):
    left: _Expr
    right: _Expr

    def eval(self, solution):
        # SPARQL three-valued logic: error on one side, false on the other -> false
        try:
            lv = _ebv(self.left.eval(solution))
        except _EvalError:
            if not _ebv(self.right.eval(solution)):
                return False
            raise
        if not lv:
            return False
        return _ebv(self.right.eval(solution))


@dataclass(slots=True)
class _Or(_Expr):
    left: _Expr
    right: _Expr

    def eval(self, solution):
        try:
            lv = _ebv(self.left.eval(solution))
        except _EvalError:
            if _ebv(self.right.eval(solution)):
                return True
            raise
        if lv:
            return True
        return _ebv(self.right.eval(solution))


@dataclass(slots=True)
class _Compare(_Expr):
    op: str
    left: _Expr
    right: _Expr

    def eval(self, solution):
        return _compare(self.op, self.left.eval(solution), self.right.eval(solution))


@dataclass(slots=True)
class _Bound(_Expr):
    name: str

    def eval(self, solution):
        return self.name in solution


@dataclass(slots=True)
class _Regex(_Expr):
    text: _Expr
    pattern: _Expr
    flags: _Expr | None

    def eval(self, solution):
        text = _plain_string(self.text.eval(solution))
        pattern = _plain_string(self.pattern.eval(solution))
        re_flags = 0
        if self.flags is not None:
            for ch in _plain_string(self.flags.eval(solution)):
                flag = {"i": re.IGNORECASE, "s": re.DOTALL, "m": re.MULTILINE, "x": re.VERBOSE}.get(ch)
                if flag is None:
                    raise _EvalError(f"unknown regex flag {ch!r}")
                re_flags |= flag
        try:
            return re.search(pattern, text, re_flags) is not None
        except re.error as exc:
            raise _EvalError(f"bad regex: {exc}")


def _plain_string(value) -> str:
    if isinstance(value, Literal) and value.language is None and value.datatype is None:
        return value.lexical
    raise _EvalError(f"expected a string literal, got {value!r}")


def _numeric_value(lit: Literal):
    dt = lit.datatype.value if lit.datatype else XSD_STRING
    text = lit.lexical.strip()
    try:
        if dt == XSD_INTEGER:
            return int(text)
        if dt == XSD_DECIMAL:
            return Decimal(text)
        if dt == XSD_DOUBLE:
            return float(text)
    except (ValueError, InvalidOperation):
        raise _EvalError(f"malformed numeric literal {lit.lexical!r}")
    raise _EvalError("not numeric")


def _ebv(value) -> bool:
    """Effective boolean value."""
    if isinstance(value, bool):
        return value
    if isinstance(value, Literal):
        dt = value.datatype.value if value.datatype else None
        if dt == XSD_BOOLEAN:
            if value.lexical in ("true", "1"):
                return True
            if value.lexical in ("false", "0"):
                return False
            raise _EvalError(f"malformed boolean {value.lexical!r}")
        if dt in _NUMERIC_TYPES:
            return _numeric_value(value) != 0
        if dt is None and value.language is None:
            return len(value.lexical) > 0
    raise _EvalError(f"no boolean value for {value!r}")


def _value_key(lit: Literal):
    dt = lit.datatype.value if lit.datatype else None
    if lit.language is not None:
        return ("lang", (lit.language, lit.lexical))
    if dt in _NUMERIC_TYPES:
        return ("num", _numeric_value(lit))
    if dt == XSD_BOOLEAN:
        return ("bool", _ebv(lit))
    if dt is None:
        return ("str", lit.lexical)
    return ("other", (dt, lit.lexical))


def _compare(op: str, left, right) -> bool:
    if isinstance(left, bool):
        left = Literal("true" if left else "false", datatype=IRI(XSD_BOOLEAN))
    if isinstance(right, bool):
        right = Literal("true" if right else "false", datatype=IRI(XSD_BOOLEAN))
    if isinstance(left, Literal) and isinstance(right, Literal):
        ka, va = _value_key(left)
        kb, vb = _value_key(right)
        if ka == kb and ka in ("num", "str", "bool"):
            return _apply(op, va, vb)
        if ka == kb == "lang":
            # same language tag: lexical comparison; across tags only (in)equality
            if va[0] == vb[0]:
                return _apply(op, va[1], vb[1])
            if op == "=":
                return False
            if op == "!=":
                return True
            raise _EvalError("no order across language tags")
        if ka == kb == "other" and va[0] == vb[0]:
            # same unrecognized datatype: lexical comparison
            return _apply(op, va[1], vb[1])
        raise _EvalError(f"incomparable literals {left!r} and {right!r}")
    # at least one IRI or blank node: plain term (in)equality only
    if op == "=":
        return left == right
    if op == "!=":
        return left != right
    raise _EvalError("no order on IRIs or blank nodes")


def _apply(op: str, a, b) -> bool:
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == ">":
        return a > b
    if op == "<=":
        return a <= b
    return a >= b


# -- parser --------------------------------------------------------------------


_UNSUPPORTED_IN_GROUP = [
    ("OPTIONAL", "OPTIONAL"),
    ("MINUS", "MINUS"),
    ("BIND", "BIND"),
    ("VALUES", "VALUES"),
    ("SERVICE", "SERVICE"),
    ("SELECT", "subqueries"),
]

_UNSUPPORTED_AFTER_GROUP = [
    ("ORDER", "ORDER BY"),
    ("GROUP", "GROUP BY"),
    ("HAVING", "HAVING"),
    ("UNION", "UNION"),
]

_UNSUPPORTED_FORMS = [
    ("ASK", "ASK queries"),
    ("DESCRIBE", "DESCRIBE queries"),
    ("INSERT", "SPARQL Update"),
    ("DELETE", "SPARQL Update"),
    ("LOAD", "SPARQL Update"),
    ("CLEAR", "SPARQL Update"),
    ("CREATE", "SPARQL Update"),
    ("DROP", "SPARQL Update"),
]


class _QueryParser:
    def __init__(self, text: str, base: str | None = None) -> None:
        self.t = _TurtleParser(text, base=base)
        self.s: _Scanner = self.t.s
        self.seen_vars: list[str] = []  # vars bound by patterns, in order
        self.in_filter = False

    def unsupported(self, feature: str) -> UnsupportedQueryError:
        return UnsupportedQueryError(f"{feature} is not supported", self.s.line, self.s.col)

    def parse(self) -> Query:
        s = self.s
        s.skip_ws()
        while True:
            if s.match_keyword("PREFIX"):
                s.skip_ws()
                prefix = self.t._pname_ns()
                s.skip_ws()
                self.t.prefixes[prefix] = self.t._iriref().value
                s.skip_ws()
            elif s.match_keyword("BASE"):
                s.skip_ws()
                self.t.base = self.t._iriref().value
                s.skip_ws()
            else:
                break
        for kw, feature in _UNSUPPORTED_FORMS:
            if s.match_keyword(kw):
                raise self.unsupported(feature)
        if s.match_keyword("SELECT"):
            query = self._select()
        elif s.match_keyword("CONSTRUCT"):
            query = self._construct()
        else:
            raise s.error("expected SELECT or CONSTRUCT")
        s.skip_ws()
        if not s.at_end():
            raise s.error("trailing content after query")
        return query

    def _select(self) -> Query:
        s = self.s
        s.skip_ws()
        distinct = s.match_keyword("DISTINCT")
        if not distinct and s.match_keyword("REDUCED"):
            raise self.unsupported("REDUCED")
        s.skip_ws()
        variables: list[str] | None
        if s.peek() == "*":
            s.advance()
            variables = None
        else:
            variables = []
            while True:
                s.skip_ws()
                if s.peek() in "?$":
                    variables.append(self._var().name)
                elif s.peek() == "(":
                    raise self.unsupported("SELECT expression syntax (including aggregates)")
                else:
                    break
            if not variables:
                raise s.error("SELECT needs variables or *")
        s.skip_ws()
        s.match_keyword("WHERE")
        s.skip_ws()
        where = self._group()
        limit, offset = self._modifiers()
        return Query("select", variables, distinct, None, where, limit, offset, list(self.seen_vars))

    def _construct(self) -> Query:
        s = self.s
        s.skip_ws()
        s.expect("{")
        template = self._triples_block(in_template=True)
        s.skip_ws()
        s.expect("}")
        s.skip_ws()
        if not s.match_keyword("WHERE"):
            raise s.error("CONSTRUCT needs a WHERE clause")
        s.skip_ws()
        where = self._group()
        limit, offset = self._modifiers()
        return Query("construct", None, False, template, where, limit, offset, list(self.seen_vars))

    def _modifiers(self) -> tuple[int | None, int]:
        s = self.s
        limit: int | None = None
        offset = 0
        while True:
            s.skip_ws()
            for kw, feature in _UNSUPPORTED_AFTER_GROUP:
                if s.match_keyword(kw):
                    raise self.unsupported(feature)
            if s.match_keyword("LIMIT"):
                limit = self._integer()
            elif s.match_keyword("OFFSET"):
                offset = self._integer()
            else:
                return limit, offset

    def _integer(self) -> int:
        s = self.s
        s.skip_ws()
        digits = []
        while s.peek().isdigit():
            digits.append(s.advance())
        if not digits:
            raise s.error("expected a non-negative integer")
        return int("".join(digits))

    def _group(self) -> Group:
        s = self.s
        s.expect("{")
        group = Group(parts=[], filters=[])
        while True:
            s.skip_ws()
            if s.peek() == "}":
                s.advance()
                return group
            if s.at_end():
                raise s.error("unterminated group pattern")
            for kw, feature in _UNSUPPORTED_IN_GROUP:
                if s.match_keyword(kw):
                    raise self.unsupported(feature)
            if s.peek() == "{":
                raise self.unsupported("nested group pattern syntax (including UNION)")
            if s.match_keyword("FILTER"):
                s.skip_ws()
                if s.match_keyword("EXISTS") or s.match_keyword("NOT"):
                    raise self.unsupported("FILTER (NOT) EXISTS")
                self.in_filter = True
                try:
                    group.filters.append(self._constraint())
                finally:
                    self.in_filter = False
                continue
            if s.match_keyword("GRAPH"):
                s.skip_ws()
                if s.peek() in "?$":
                    label: IRI | Var = self._var()
                else:
                    label = self.t._iri()
                s.skip_ws()
                inner = self._group()
                group.parts.append(GraphBlock(label, inner))
                continue
            triples = self._triples_block(in_template=False)
            if triples:
                group.parts.append(triples)
            s.skip_ws()
            if s.peek() == ".":
                s.advance()

    def _triples_block(self, in_template: bool) -> list[TriplePattern]:
        """Triples until a keyword, '}', FILTER or GRAPH boundary."""
        s = self.s
        out: list[TriplePattern] = []
        while True:
            s.skip_ws()
            if s.peek() in "}" or s.at_end():
                return out
            # stop without consuming group-level keywords
            save = s.pos, s.line, s.col
            for kw in ("FILTER", "GRAPH", "OPTIONAL", "MINUS", "BIND", "VALUES", "SERVICE", "SELECT"):
                if s.match_keyword(kw):
                    s.pos, s.line, s.col = save
                    return out
            if s.peek() == "{":
                return out
            subject = self._pattern_term(position="subject", in_template=in_template)
            self._pattern_po_list(subject, out, in_template)
            s.skip_ws()
            if s.peek() == ".":
                s.advance()
            else:
                return out

    def _pattern_po_list(self, subject: PatternTerm, out: list[TriplePattern], in_template: bool) -> None:
        s = self.s
        while True:
            s.skip_ws()
            predicate = self._verb_term(in_template)
            while True:
                s.skip_ws()
                obj = self._pattern_term(position="object", in_template=in_template)
                out.append(TriplePattern(subject, predicate, obj))
                s.skip_ws()
                if s.peek() == ",":
                    s.advance()
                    continue
                break
            if s.peek() == ";":
                s.advance()
                s.skip_ws()
                if s.peek() in ".}" or s.at_end():
                    return
                continue
            return

    def _verb_term(self, in_template: bool) -> PatternTerm:
        s = self.s
        if s.peek() in "?$":
            return self._var()
        if s.peek() == "^":
            raise self.unsupported("property paths")
        nxt = s.peek(1)
        if s.peek() == "a" and not (_is_pn_chars_u(nxt) or nxt.isdigit() or nxt in (":", "-")):
            s.advance()
            return IRI(RDF_TYPE)
        term = self.t._iri()
        if s.peek() in ("/", "|", "+", "*"):
            raise self.unsupported("property paths")
        return term

    def _pattern_term(self, position: str, in_template: bool) -> PatternTerm:
        s = self.s
        ch = s.peek()
        if ch in "?$":
            return self._var()
        if ch == "[":
            raise self.unsupported("blank node property lists in patterns")
        if ch == "(":
            raise self.unsupported("collections in patterns")
        if ch == "_" and s.peek(1) == ":":
            if in_template:
                return self.t._blank_node_label()
            raise self.unsupported("blank node labels in query patterns (use a variable)")
        if ch in "\"'":
            return self.t._rdf_literal()
        if ch.isdigit() or (ch in "+-" and (s.peek(1).isdigit() or s.peek(1) == ".")):
            return self.t._numeric_literal()
        if s.match_keyword("true"):
            return Literal("true", datatype=IRI(XSD_BOOLEAN))
        if s.match_keyword("false"):
            return Literal("false", datatype=IRI(XSD_BOOLEAN))
        return self.t._iri()

    def _var(self) -> Var:
        s = self.s
        s.advance()  # ? or $
        out: list[str] = []
        while True:
            ch = s.peek()
            if ch and (_is_pn_chars_u(ch) or ch.isdigit()):
                out.append(s.advance())
            else:
                break
        if not out:
            raise s.error("empty variable name")
        name = "".join(out)
        if not self.in_filter and name not in self.seen_vars:
            self.seen_vars.append(name)
        return Var(name)

    # FILTER expression grammar: or > and > unary > comparison > primary

    def _constraint(self) -> _Expr:
        s = self.s
        s.skip_ws()
        if s.peek() == "(":
            return self._paren_expr()
        return self._builtin()

    def _paren_expr(self) -> _Expr:
        s = self.s
        s.expect("(")
        expr = self._or_expr()
        s.skip_ws()
        s.expect(")")
        return expr

    def _or_expr(self) -> _Expr:
        left = self._and_expr()
        s = self.s
        while True:
            s.skip_ws()
            if s.peek() == "|" and s.peek(1) == "|":
                s.advance(2)
                left = _Or(left, self._and_expr())
            else:
                return left

    def _and_expr(self) -> _Expr:
        left = self._cmp_expr()
        s = self.s
        while True:
            s.skip_ws()
            if s.peek() == "&" and s.peek(1) == "&":
                s.advance(2)
                left = _And(left, self._cmp_expr())
            else:
                return left

    def _cmp_expr(self) -> _Expr:
        left = self._unary()
        s = self.s
        s.skip_ws()
        two = s.peek() + s.peek(1)
        op = None
        if two in ("<=", ">=", "!="):
            op = two
            s.advance(2)
        elif s.peek() in ("=", "<", ">"):
            op = s.advance()
        if op is None:
            return left
        return _Compare(op, left, self._unary())

    def _unary(self) -> _Expr:
        s = self.s
        s.skip_ws()
        if s.peek() == "!" and s.peek(1) != "=":
            s.advance()
            return _Not(self._unary())
        return self._primary()

    def _primary(self) -> _Expr:
        s = self.s
        s.skip_ws()
        ch = s.peek()
        if ch == "(":
            return self._paren_expr()
        if ch in "?$":
            return _VarRef(self._var().name)
        if ch in "\"'":
            return _Const(self.t._rdf_literal())
        if ch.isdigit() or (ch in "+-" and (s.peek(1).isdigit() or s.peek(1) == ".")):
            return _Const(self.t._numeric_literal())
        if s.match_keyword("true"):
            return _Const(Literal("true", datatype=IRI(XSD_BOOLEAN)))
        if s.match_keyword("false"):
            return _Const(Literal("false", datatype=IRI(XSD_BOOLEAN)))
        if ch == "<":
            return _Const(self.t._iriref())
        return self._builtin()

    def _builtin(self) -> _Expr:
        s = self.s
        if s.match_keyword("bound"):
            s.skip_ws()
            s.expect("(")
            s.skip_ws()
            if s.peek() not in "?$":
                raise s.error("bound() takes a variable")
            name = self._var().name
            s.skip_ws()
            s.expect(")")
            return _Bound(name)
        if s.match_keyword("regex"):
            s.skip_ws()
            s.expect("(")
            text = self._or_expr()
            s.skip_ws()
            s.expect(",")
            pattern = self._or_expr()
            s.skip_ws()
            flags = None
            if s.peek() == ",":
                s.advance()
                flags = self._or_expr()
                s.skip_ws()
            s.expect(")")
            return _Regex(text, pattern, flags)
        # an identifier followed by '(' is some other builtin or function call
        start, start_col = s.pos, s.col
        while _is_pn_chars_u(s.peek()) or s.peek().isdigit():
            s.advance()
        name = s.text[start : s.pos]
        if name and s.peek() == "(":
            raise self.unsupported(f"filter function {name}()")
        if name and s.peek() == ":":
            # prefixed-name constant; rewind (identifiers contain no newlines)
            s.pos, s.col = start, start_col
            return _Const(self.t._prefixed_name())
        raise s.error("expected a filter expression")


def parse_query(text: str, base: str | None = None) -> Query:
    try:
        return _QueryParser(text, base=base).parse()
    except QueryError:
        raise
    except ParseError as exc:
        # term-level errors from the shared scanner become query errors
        raise QueryError(exc.message, exc.line, exc.column) from None


# -- evaluation ----------------------------------------------------------------


_UNION = object()  # scope marker: union of all graphs


def _triple_key(q: Quad) -> tuple[str, str, str]:
    return (term_text(q.subject), term_text(q.predicate), term_text(q.object))


def _match_patterns(
    ds: Dataset,
    patterns: list[TriplePattern],
    scope,
    solutions: list[dict[str, Term]],
) -> list[dict[str, Term]]:
    for tp in patterns:
        extended: list[dict[str, Term]] = []
        for sol in solutions:
            parts = []
            for role in (tp.subject, tp.predicate, tp.object):
                if isinstance(role, Var):
                    parts.append(sol.get(role.name, ANY))
                else:
                    parts.append(role)
            s_pat, p_pat, o_pat = parts
            if scope is _UNION:
                candidates = ds.quads(s_pat, p_pat, o_pat, graph=ANY)
            else:
                candidates = ds.quads(s_pat, p_pat, o_pat, graph=scope)
            candidates.sort(key=_triple_key)
            prev_key = None
            for quad in candidates:
                key = _triple_key(quad)
                if scope is _UNION and key == prev_key:
                    continue  # union of graphs is a set of triples
                prev_key = key
                ext = dict(sol)
                ok = True
                for role, value in (
                    (tp.subject, quad.subject),
                    (tp.predicate, quad.predicate),
                    (tp.object, quad.object),
                ):
                    if isinstance(role, Var):
                        bound = ext.get(role.name)
                        if bound is None:
                            ext[role.name] = value
                        elif bound != value:
                            ok = False
                            break
                if ok:
                    extended.append(ext)
        solutions = extended
        if not solutions:
            return solutions
    return solutions


def _eval_group(
    ds: Dataset,
    group: Group,
    scope,
    solutions: list[dict[str, Term]],
) -> list[dict[str, Term]]:
    for part in group.parts:
        if isinstance(part, GraphBlock):
            named = sorted(ds.graphs(), key=lambda g: g.value)
            if isinstance(part.label, IRI):
                if part.label not in named:
                    solutions = []
                else:
                    solutions = _eval_group(ds, part.group, part.label, solutions)
            else:
                var = part.label.name
                out: list[dict[str, Term]] = []
                for sol in solutions:
                    bound = sol.get(var)
                    for g in named:
                        if bound is not None and bound != g:
                            continue
                        seed = dict(sol)
                        seed[var] = g
                        out.extend(_eval_group(ds, part.group, g, [seed]))
                solutions = out
        else:
            solutions = _match_patterns(ds, part, scope, solutions)
        if not solutions:
            break
    if solutions and group.filters:
        kept = []
        for sol in solutions:
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
        solutions = kept
    return solutions


def _instantiate(template: list[TriplePattern], solutions: list[dict[str, Term]]) -> Dataset:
    from .parser import _fresh_blank_ids

    out = Dataset()
    for sol in solutions:
        blanks: dict[BlankNode, BlankNode] = {}

        def resolve(role: PatternTerm) -> Term | None:
            if isinstance(role, Var):
                return sol.get(role.name)
            if isinstance(role, BlankNode):
                fresh = blanks.get(role)
                if fresh is None:
                    fresh = BlankNode(f"b{next(_fresh_blank_ids)}")
                    blanks[role] = fresh
                return fresh
            return role

        for tp in template:
            s = resolve(tp.subject)
            p = resolve(tp.predicate)
            o = resolve(tp.object)
            if s is None or p is None or o is None:
                continue  # unbound variable: skip the triple, not the solution
            if isinstance(s, Literal) or not isinstance(p, IRI):
                continue
            out.add(Quad(s, p, o, DEFAULT_GRAPH))
    return out


def evaluate(
    ds: Dataset,
    query: Query | str,
    union_default_graph: bool = False,
    base: str | None = None,
) -> SelectResult | Dataset:
    """Run a parsed or textual query against a dataset.

    With union_default_graph=True, patterns outside GRAPH match the
    union of the default and all named graphs instead of just the
    default graph.
    """
    if isinstance(query, str):
        query = parse_query(query, base=base)
    scope = _UNION if union_default_graph else DEFAULT_GRAPH
    with ds.read_lock():
        solutions = _eval_group(ds, query.where, scope, [{}])
        if query.form == "construct":
            solutions = _slice(solutions, query.offset, query.limit)
            return _instantiate(query.template or [], solutions)
        variables = query.variables if query.variables is not None else query.pattern_variables
        rows = [{v: sol[v] for v in variables if v in sol} for sol in solutions]
        if query.distinct:
            seen = set()
            unique = []
            for row in rows:
                key = tuple((v, term_text(row[v])) for v in variables if v in row)
                if key not in seen:
                    seen.add(key)
                    unique.append(row)
            rows = unique
        rows = _slice(rows, query.offset, query.limit)
        return SelectResult(list(variables), rows)


def _slice(items: list, offset: int, limit: int | None) -> list:
    if offset:
        items = items[offset:]
    if limit is not None:
        items = items[:limit]
    return items
