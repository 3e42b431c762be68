"""Logical source documents consumed by lifting rules.

A SourceDocument wraps raw payload bytes plus a format tag (json, xml, or
csv) and parses eagerly, so malformed input fails before any rule runs.
Iteration and value lookup go through the path subsets in paths.py:

- json: iteration nodes are the values selected by a JSONPath iterator;
  references are JSONPaths relative to the node (leading `$.` optional).
- xml:  iteration nodes are elements; references are XPaths relative to
  the node, with `..` supported through a prebuilt parent map.
- csv:  iteration nodes are row dicts keyed by header; references are
  column names.
"""

from __future__ import annotations

import csv
import io
import json
import xml.etree.ElementTree as ET

from .paths import PathError, parse_jsonpath, parse_xpath

FORMATS = ("json", "xml", "csv")


class SourceError(ValueError):
    """Malformed source payload or an unusable reference into it."""


class XmlDocument:
    """Parsed XML tree plus child-to-parent links for the `..` axis."""

    __slots__ = ("root", "_parents")

    def __init__(self, root: ET.Element) -> None:
        self.root = root
        self._parents: dict[int, ET.Element] = {}
        stack = [root]
        while stack:
            elem = stack.pop()
            for child in elem:
                self._parents[id(child)] = elem
                stack.append(child)

    def parent(self, elem: ET.Element) -> ET.Element | None:
        return self._parents.get(id(elem))


class SourceDocument:
    __slots__ = ("name", "format", "payload", "delimiter", "_json", "_xml", "_rows")

    def __init__(
        self,
        payload: bytes,
        format: str,
        name: str = "",
        delimiter: str = ",",
    ) -> None:
        if format not in FORMATS:
            raise SourceError(f"unknown source format {format!r} (expected one of {FORMATS})")
        if not isinstance(payload, bytes):
            raise SourceError("source payload must be bytes")
        self.name = name
        self.format = format
        self.payload = payload
        self.delimiter = delimiter
        self._json = None
        self._xml: XmlDocument | None = None
        self._rows: list[dict[str, str]] | None = None
        self._parse()

    @classmethod
    def from_text(cls, text: str, format: str, name: str = "", delimiter: str = ",") -> "SourceDocument":
        return cls(text.encode("utf-8"), format, name=name, delimiter=delimiter)

    @classmethod
    def from_file(cls, path: str, format: str | None = None, name: str = "", delimiter: str = ",") -> "SourceDocument":
        if format is None:
            lowered = str(path).lower()
            if lowered.endswith(".json"):
                format = "json"
            elif lowered.endswith((".xml", ".nodeset2.xml")):
                format = "xml"
            elif lowered.endswith((".csv", ".txt")):
                format = "csv"
            else:
                raise SourceError(f"cannot infer source format from {path!r}")
        with open(path, "rb") as handle:
            return cls(handle.read(), format, name=name or str(path), delimiter=delimiter)

    def _parse(self) -> None:
        label = self.name or "<source>"
        try:
            text = self.payload.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SourceError(f"{label}: payload is not valid UTF-8: {exc}") from None
        if self.format == "json":
            try:
                self._json = json.loads(text)
            except json.JSONDecodeError as exc:
                raise SourceError(f"{label}: invalid JSON: {exc}") from None
        elif self.format == "xml":
            try:
                self._xml = XmlDocument(ET.fromstring(text))
            except ET.ParseError as exc:
                raise SourceError(f"{label}: invalid XML: {exc}") from None
        else:
            reader = csv.reader(io.StringIO(text), delimiter=self.delimiter)
            rows = list(reader)
            if not rows:
                self._rows = []
                return
            header = [cell.strip() for cell in rows[0]]
            out = []
            for cells in rows[1:]:
                if not any(cell.strip() for cell in cells):
                    continue
                out.append({name: (cells[i] if i < len(cells) else "") for i, name in enumerate(header)})
            self._rows = out

    # -- iteration ---------------------------------------------------------

    def iterate(self, iterator: str | None) -> list:
        """Expand the iterator into the list of iteration nodes."""
        if self.format == "csv":
            return list(self._rows or [])
        if self.format == "json":
            path = parse_jsonpath(iterator if iterator else "$")
            return path.select(self._json)
        if not iterator:
            raise SourceError(f"{self.name or '<source>'}: xml sources require an iterator")
        path = parse_xpath(iterator)
        if not path._absolute:
            raise SourceError(f"xml iterator must be an absolute path: {iterator!r}")
        return path.select(None, self._xml)

    # -- reference lookup ----------------------------------------------------

    def values(self, node, reference: str) -> list[str]:
        """All string values the reference selects on one iteration node.

        Absent paths yield an empty list; JSON null counts as absent.
        """
        if self.format == "csv":
            if reference not in node:
                return []
            return [node[reference]]
        if self.format == "json":
            selected = parse_jsonpath(reference).select(node)
            return [_json_text(v) for v in selected if v is not None and not isinstance(v, (dict, list))]
        path = parse_xpath(reference)
        out = []
        for item in path.select(node, self._xml):
            out.append(item if isinstance(item, str) else "".join(item.itertext()))
        return out


def _json_text(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


__all__ = ["FORMATS", "PathError", "SourceError", "SourceDocument", "XmlDocument"]
