"""Step configurations and their per-message behavior.

A step takes one message and returns the messages that continue down
the route (possibly none, possibly several). Stateful steps (aggregate)
and steps that end the route themselves (route) are coordinated by the
engine; everything here is a pure transformation given its loaded
resources.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field

from ..connectors import ConnectorSpec, Message, SPLIT_INDEX
from ..fusion import (
    FusionConfig,
    VocabProfile,
    emit_rdf,
    fuse,
    observation_from_json,
    observations_from_rdf,
)
from ..mapping import (
    LoweringTemplate,
    MappingDocument,
    SourceDocument,
    chain,
    lift,
    lower,
)
from ..rdf import Dataset, evaluate, parse, serialize


class StepError(ValueError):
    """A message could not be processed by a step."""


_FORMAT_BY_CONTENT_TYPE = {
    "application/json": "json",
    "text/json": "json",
    "application/xml": "xml",
    "text/xml": "xml",
    "text/csv": "csv",
}

RDF_CONTENT_TYPE = "text/turtle"


def _payload_format(message: Message, explicit: str | None) -> str:
    if explicit is not None:
        return explicit
    base = message.content_type.split(";")[0].strip()
    fmt = _FORMAT_BY_CONTENT_TYPE.get(base)
    if fmt is None:
        raise StepError(f"cannot infer source format from content type {message.content_type!r}")
    return fmt


def _require_rdf(message: Message) -> Dataset:
    base = message.content_type.split(";")[0].strip()
    if base != RDF_CONTENT_TYPE:
        raise StepError(f"step needs {RDF_CONTENT_TYPE} payloads, got {message.content_type!r}")
    try:
        return parse(message.payload.decode("utf-8"), format="turtle")
    except Exception as exc:
        raise StepError(f"payload is not parseable Turtle: {exc}") from None


def _as_turtle(message: Message, ds: Dataset) -> Message:
    return message.with_payload(serialize(ds, format="turtle").encode("utf-8"), RDF_CONTENT_TYPE)


@dataclass(frozen=True)
class LiftStep:
    kind = "lift"
    mapping: MappingDocument
    source_name: str
    format: str | None = None

    def apply(self, message: Message) -> list[Message]:
        fmt = _payload_format(message, self.format)
        doc = SourceDocument(message.payload, format=fmt, name=self.source_name)
        out = lift(self.mapping, {self.source_name: doc})
        return [_as_turtle(message, out)]


@dataclass(frozen=True)
class LowerStep:
    kind = "lower"
    template: LoweringTemplate
    content_type: str = "text/plain"

    def apply(self, message: Message) -> list[Message]:
        ds = _require_rdf(message)
        text = lower(self.template, ds, union_default_graph=True)
        return [message.with_payload(text.encode("utf-8"), self.content_type)]


@dataclass(frozen=True)
class ChainStep:
    kind = "chain"
    stages: tuple
    source_name: str
    format: str | None = None
    content_type: str = "text/plain"

    def apply(self, message: Message) -> list[Message]:
        fmt = _payload_format(message, self.format)
        doc = SourceDocument(message.payload, format=fmt, name=self.source_name)
        result = chain(list(self.stages), {self.source_name: doc}, union_default_graph=True)
        if isinstance(result, Dataset):
            return [_as_turtle(message, result)]
        return [message.with_payload(result.encode("utf-8"), self.content_type)]


@dataclass(frozen=True)
class FilterStep:
    kind = "filter"
    predicate: object
    source: str = ""

    def matches(self, message: Message) -> bool:
        return bool(self.predicate(message))


@dataclass(frozen=True)
class RouteBranch:
    predicate: object | None  # None is the otherwise branch
    sink: ConnectorSpec
    when: str = ""


@dataclass(frozen=True)
class RouteStep:
    kind = "route"
    branches: tuple

    def pick(self, message: Message) -> ConnectorSpec:
        for branch in self.branches:
            if branch.predicate is None or branch.predicate(message):
                return branch.sink
        raise StepError("no route branch matched")  # unreachable: otherwise is enforced


@dataclass(frozen=True)
class SplitStep:
    kind = "split"
    path: object

    def apply(self, message: Message) -> list[Message]:
        try:
            doc = json.loads(message.payload)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise StepError(f"split needs a JSON payload: {exc}") from None
        parts = self.path.select(doc)
        out = []
        for index, part in enumerate(parts):
            derived = message.with_payload(
                json.dumps(part, sort_keys=True).encode("utf-8"), "application/json"
            )
            out.append(derived.with_header(SPLIT_INDEX, str(index)))
        return out


@dataclass(frozen=True)
class AggregateStep:
    kind = "aggregate"
    batch_size: int | None = None
    timeout_millis: int | None = None
    by: str = "correlation-id"


class Aggregator:
    """Runtime state for one aggregate step: groups messages by key."""

    def __init__(self, step: AggregateStep) -> None:
        self.step = step
        self._lock = threading.Lock()
        self._groups: dict[str, list[Message]] = {}
        self._opened: dict[str, float] = {}

    def add(self, message: Message) -> list[Message]:
        key = message.headers.get(self.step.by, "")
        with self._lock:
            group = self._groups.setdefault(key, [])
            if not group:
                self._opened[key] = time.monotonic()
            group.append(message)
            if self.step.batch_size is not None and len(group) >= self.step.batch_size:
                del self._groups[key], self._opened[key]
                return [combine(group)]
        return []

    def flush_expired(self) -> list[Message]:
        if self.step.timeout_millis is None:
            return []
        cutoff = time.monotonic() - self.step.timeout_millis / 1000.0
        out = []
        with self._lock:
            for key in [k for k, opened in self._opened.items() if opened <= cutoff]:
                out.append(combine(self._groups.pop(key)))
                del self._opened[key]
        return out

    def drain(self) -> list[Message]:
        with self._lock:
            groups = list(self._groups.values())
            self._groups.clear()
            self._opened.clear()
        return [combine(group) for group in groups]

    def buffered(self) -> int:
        with self._lock:
            return sum(len(group) for group in self._groups.values())


def combine(group: list[Message]) -> Message:
    """One message from many: dataset union for Turtle, else concatenation."""
    first = group[0]
    if all(m.content_type.split(";")[0].strip() == RDF_CONTENT_TYPE for m in group):
        union = Dataset()
        for m in group:
            try:
                union.update(parse(m.payload.decode("utf-8"), format="turtle"))
            except Exception as exc:
                raise StepError(f"aggregate union: {exc}") from None
        return _as_turtle(first, union)
    return first.with_payload(b"".join(m.payload for m in group))


@dataclass(frozen=True)
class MulticastStep:
    kind = "multicast"
    sinks: tuple


@dataclass(frozen=True)
class EnrichStep:
    kind = "enrich"
    query: str
    dataset: Dataset | None = None
    kgr_url: str | None = None

    def apply(self, message: Message) -> list[Message]:
        ds = _require_rdf(message)
        extra = self._construct()
        ds.update(extra)
        return [_as_turtle(message, ds)]

    def _construct(self) -> Dataset:
        if self.dataset is not None:
            return evaluate(self.dataset, self.query, union_default_graph=True)
        import requests

        try:
            response = requests.post(
                self.kgr_url.rstrip("/") + "/sparql",
                data=self.query.encode("utf-8"),
                headers={"Content-Type": "application/sparql-query"},
                timeout=10,
            )
            response.raise_for_status()
        except requests.RequestException as exc:
            raise StepError(f"enrich: repository query failed: {exc}") from None
        return parse(response.text, format="turtle")


@dataclass(frozen=True)
class FuseStep:
    kind = "fuse"
    config: FusionConfig
    origin: tuple | None = None
    vocab: VocabProfile = field(default_factory=VocabProfile)

    def apply(self, message: Message) -> list[Message]:
        if message.content_type.split(";")[0].strip() == RDF_CONTENT_TYPE:
            ds = parse(message.payload.decode("utf-8"), format="turtle")
            frame = observations_from_rdf(ds, self.vocab)
        else:
            frame = [observation_from_json(obj, self.origin) for obj in self._objects(message)]
        fused = fuse(frame, self.config)
        return [_as_turtle(message, emit_rdf(fused, self.vocab))]

    def _objects(self, message: Message) -> list[dict]:
        text = message.payload.decode("utf-8", errors="strict")
        try:
            doc = json.loads(text)
            return doc if isinstance(doc, list) else [doc]
        except json.JSONDecodeError:
            pass
        objects = []
        for line in text.splitlines():
            if not line.strip():
                continue
            try:
                objects.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise StepError(f"fuse: payload is neither a JSON array nor JSON lines: {exc}") from None
        return objects


@dataclass(frozen=True)
class SetHeaderStep:
    kind = "set-header"
    name: str
    value: str

    def apply(self, message: Message) -> list[Message]:
        return [message.with_header(self.name, self.value)]


STEP_KINDS = (
    "lift",
    "lower",
    "chain",
    "filter",
    "route",
    "split",
    "aggregate",
    "multicast",
    "enrich",
    "fuse",
    "set-header",
)

__all__ = [
    "AggregateStep",
    "Aggregator",
    "ChainStep",
    "EnrichStep",
    "FilterStep",
    "FuseStep",
    "LiftStep",
    "LowerStep",
    "MulticastStep",
    "RDF_CONTENT_TYPE",
    "RouteBranch",
    "RouteStep",
    "STEP_KINDS",
    "SetHeaderStep",
    "SplitStep",
    "StepError",
    "combine",
]
