"""Path expression subsets for lifting rules.

Three small languages, one per reference formulation:

- JSONPath subset: `$`, `.name`, `['name']`, `[0]`, `[*]` / `.*`, and
  recursive descent `..name`.
- XPath subset: `/`-separated child steps, `//` descent, `*`, `..`, `.`,
  `@attr`, `text()`, and predicates `[@a='v']` / `[not(@a='v')]`.
  Element names match on local name; namespaces are ignored.
- CSV: a bare column name, resolved against the row's header.

Anything outside a subset raises PathError at parse time so unsupported
syntax can never silently select nothing.
"""

from __future__ import annotations

from dataclasses import dataclass


class PathError(ValueError):
    """Unsupported or malformed path expression."""


# -- JSONPath -------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class _JChild:
    name: str


@dataclass(frozen=True, slots=True)
class _JIndex:
    index: int


@dataclass(frozen=True, slots=True)
class _JWildcard:
    pass


@dataclass(frozen=True, slots=True)
class _JDescend:
    name: str


class JsonPath:
    __slots__ = ("text", "_steps")

    def __init__(self, text: str, steps: list) -> None:
        self.text = text
        self._steps = steps

    def __repr__(self) -> str:
        return f"JsonPath({self.text!r})"

    def select(self, node: object) -> list:
        current = [node]
        for step in self._steps:
            result: list = []
            if isinstance(step, _JChild):
                for item in current:
                    if isinstance(item, dict) and step.name in item:
                        result.append(item[step.name])
            elif isinstance(step, _JIndex):
                for item in current:
                    if isinstance(item, list) and -len(item) <= step.index < len(item):
                        result.append(item[step.index])
            elif isinstance(step, _JWildcard):
                for item in current:
                    if isinstance(item, dict):
                        result.extend(item.values())
                    elif isinstance(item, list):
                        result.extend(item)
            else:  # _JDescend
                for item in current:
                    result.extend(_descend(item, step.name))
            current = result
        return current


def _descend(node: object, name: str) -> list:
    found: list = []
    if isinstance(node, dict):
        if name in node:
            found.append(node[name])
        for value in node.values():
            found.extend(_descend(value, name))
    elif isinstance(node, list):
        for value in node:
            found.extend(_descend(value, name))
    return found


def parse_jsonpath(text: str) -> JsonPath:
    src = text.strip()
    if not src:
        raise PathError("empty JSONPath")
    i = 0
    if src.startswith("$"):
        i = 1
    steps: list = []
    while i < len(src):
        ch = src[i]
        if ch == ".":
            if src.startswith("..", i):
                i += 2
                name, i = _jname(src, i, text)
                steps.append(_JDescend(name))
            else:
                i += 1
                if i < len(src) and src[i] == "*":
                    steps.append(_JWildcard())
                    i += 1
                else:
                    name, i = _jname(src, i, text)
                    steps.append(_JChild(name))
        elif ch == "[":
            end = src.find("]", i)
            if end < 0:
                raise PathError(f"unclosed '[' in JSONPath {text!r}")
            inner = src[i + 1 : end].strip()
            i = end + 1
            if inner == "*":
                steps.append(_JWildcard())
            elif inner.startswith(("'", '"')) and inner.endswith(inner[0]) and len(inner) >= 2:
                steps.append(_JChild(inner[1:-1]))
            else:
                try:
                    steps.append(_JIndex(int(inner)))
                except ValueError:
                    raise PathError(f"bad bracket selector {inner!r} in JSONPath {text!r}") from None
        else:
            # a bare leading name (references are often written without '$.')
            if steps or i > 0:
                raise PathError(f"unexpected {ch!r} in JSONPath {text!r}")
            name, i = _jname(src, i, text)
            steps.append(_JChild(name))
    return JsonPath(text, steps)


def _jname(src: str, i: int, whole: str) -> tuple[str, int]:
    start = i
    while i < len(src) and (src[i].isalnum() or src[i] in "_-"):
        i += 1
    if i == start:
        raise PathError(f"expected a name at offset {start} in JSONPath {whole!r}")
    return src[start:i], i


# -- XPath ----------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class _XPredicate:
    attr: str
    value: str
    negated: bool


@dataclass(frozen=True, slots=True)
class _XStep:
    kind: str  # element | wildcard | parent | self | attribute | text
    name: str
    descend: bool  # reached via //
    predicates: tuple


def local_name(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


class XPath:
    __slots__ = ("text", "_steps", "_absolute")

    def __init__(self, text: str, steps: list, absolute: bool) -> None:
        self.text = text
        self._steps = steps
        self._absolute = absolute

    def __repr__(self) -> str:
        return f"XPath({self.text!r})"

    def select(self, node, doc) -> list:
        """Evaluate against an Element; `doc` supplies root and parent links.

        Returns elements, or strings for @attr / text() terminal steps.
        """
        if self._absolute:
            current: list = [doc.root]
            steps = self._steps
            if steps and steps[0].kind == "element" and not steps[0].descend:
                # the leading absolute step names the document element
                if local_name(doc.root.tag) != steps[0].name:
                    return []
                if not _keep(doc.root, steps[0].predicates):
                    return []
                steps = steps[1:]
        else:
            current = [node]
            steps = self._steps
        for step in steps:
            result: list = []
            for item in current:
                if not hasattr(item, "tag"):
                    raise PathError(f"step after a string value in XPath {self.text!r}")
                result.extend(_apply_step(item, step, doc))
            current = _dedup(result)
        return current


def _apply_step(elem, step: _XStep, doc) -> list:
    if step.kind == "attribute":
        if step.descend:
            out = []
            for e in _all_descendants(elem):
                if step.name in e.attrib:
                    out.append(e.attrib[step.name])
            return out
        value = elem.attrib.get(step.name)
        return [value] if value is not None else []
    if step.kind == "text":
        return ["".join(elem.itertext())]
    if step.kind == "parent":
        parent = doc.parent(elem)
        return [parent] if parent is not None else []
    if step.kind == "self":
        return [elem]
    pool = _all_descendants(elem) if step.descend else list(elem)
    out = []
    for child in pool:
        if step.kind == "wildcard" or local_name(child.tag) == step.name:
            if _keep(child, step.predicates):
                out.append(child)
    return out


def _all_descendants(elem) -> list:
    out = []
    for child in elem:
        out.append(child)
        out.extend(_all_descendants(child))
    return out


def _keep(elem, predicates: tuple) -> bool:
    for pred in predicates:
        actual = elem.attrib.get(pred.attr)
        matched = actual == pred.value
        if matched == pred.negated:
            return False
    return True


def _dedup(items: list) -> list:
    seen: set[int] = set()
    out = []
    for item in items:
        key = id(item)
        if key not in seen:
            seen.add(key)
            out.append(item)
    return out


def parse_xpath(text: str) -> XPath:
    src = text.strip()
    if not src:
        raise PathError("empty XPath")
    absolute = src.startswith("/")
    i = 0
    steps: list = []
    while i < len(src):
        descend = False
        if src.startswith("//", i):
            descend = True
            i += 2
        elif src[i] == "/":
            i += 1
        elif i > 0:
            raise PathError(f"expected '/' at offset {i} in XPath {text!r}")
        if i >= len(src):
            raise PathError(f"trailing slash in XPath {text!r}")
        if src.startswith("..", i):
            steps.append(_XStep("parent", "", descend, ()))
            i += 2
            continue
        if src[i] == ".":
            steps.append(_XStep("self", "", descend, ()))
            i += 1
            continue
        if src[i] == "@":
            name, i = _xname(src, i + 1, text)
            steps.append(_XStep("attribute", name, descend, ()))
            continue
        if src.startswith("text()", i):
            steps.append(_XStep("text", "", descend, ()))
            i += 6
            continue
        if src[i] == "*":
            name = "*"
            i += 1
            kind = "wildcard"
        else:
            name, i = _xname(src, i, text)
            kind = "element"
        predicates = []
        while i < len(src) and src[i] == "[":
            end = src.find("]", i)
            if end < 0:
                raise PathError(f"unclosed predicate in XPath {text!r}")
            predicates.append(_parse_predicate(src[i + 1 : end], text))
            i = end + 1
        steps.append(_XStep(kind, name, descend, tuple(predicates)))
    # a terminal string-valued step must be last
    for step in steps[:-1]:
        if step.kind in ("attribute", "text"):
            raise PathError(f"@attr/text() must be the final step in XPath {text!r}")
    return XPath(text, steps, absolute)


def _parse_predicate(inner: str, whole: str) -> _XPredicate:
    body = inner.strip()
    negated = False
    if body.startswith("not(") and body.endswith(")"):
        negated = True
        body = body[4:-1].strip()
    if not body.startswith("@"):
        raise PathError(f"only attribute-equality predicates are supported: [{inner}] in {whole!r}")
    eq = body.find("=")
    if eq < 0:
        raise PathError(f"predicate needs '=': [{inner}] in {whole!r}")
    attr = body[1:eq].strip()
    value = body[eq + 1 :].strip()
    if len(value) < 2 or value[0] not in "'\"" or value[-1] != value[0]:
        raise PathError(f"predicate value must be quoted: [{inner}] in {whole!r}")
    return _XPredicate(attr, value[1:-1], negated)


def _xname(src: str, i: int, whole: str) -> tuple[str, int]:
    start = i
    while i < len(src) and (src[i].isalnum() or src[i] in "_-."):
        # '.' only inside a name, not as the leading parent/self marker
        if src[i] == "." and i == start:
            break
        i += 1
    if i == start:
        raise PathError(f"expected a name at offset {start} in XPath {whole!r}")
    return src[start:i], i
