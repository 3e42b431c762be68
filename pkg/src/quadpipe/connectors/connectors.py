"""Connector specs, sources, and sinks.

A ConnectorSpec is a kind plus a string-keyed param map. Validation is
fail-fast and names the offending parameter, so a pipeline spec referencing
a broken connector never starts. open_source() turns a source-capable spec
into a stream of Messages; send() pushes one message through a
sink-capable spec.

Transport notes: the bus is in-process (same publish/subscribe contract as
a networked broker, at-most-once); mid-stream transport failures are
retried per max-retries/backoff-millis, then recorded on the source's
errors list and the stream ends.
"""

from __future__ import annotations

import dataclasses
import http.server
import json
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .bus import DEFAULT_QUEUE_SIZE, MessageBus
from .gtfs import decode_gtfs_rt, ingest_gtfs_static
from .message import CORRELATION_ID, Message, ingress


class ConnectorError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class ConnectorSpec:
    kind: str
    params: Mapping[str, object] = field(default_factory=dict)


SOURCE_KINDS = (
    "http-server",
    "websocket-client",
    "file",
    "file-watch",
    "timer",
    "bus-subscribe",
    "gtfs-static",
    "gtfs-rt",
)
SINK_KINDS = ("http-client", "bus-publish", "file")
ALL_KINDS = tuple(sorted({*SOURCE_KINDS, *SINK_KINDS}))


def _text(value, name, kind):
    if not isinstance(value, str) or not value.strip():
        raise ConnectorError(f"{kind}: parameter {name!r} must be non-empty text")
    return value


def _int_pos(value, name, kind):
    try:
        number = int(value)
    except (TypeError, ValueError):
        number = 0
    if isinstance(value, bool) or number < 1:
        raise ConnectorError(f"{kind}: parameter {name!r} must be a positive integer")
    return number


def _int_nonneg(value, name, kind):
    try:
        number = int(value)
    except (TypeError, ValueError):
        number = -1
    if isinstance(value, bool) or number < 0:
        raise ConnectorError(f"{kind}: parameter {name!r} must be a non-negative integer")
    return number


def _bool(value, name, kind):
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.lower() in ("true", "false"):
        return value.lower() == "true"
    raise ConnectorError(f"{kind}: parameter {name!r} must be true or false")


def _http_url(value, name, kind):
    value = _text(value, name, kind)
    if not value.startswith(("http://", "https://")):
        raise ConnectorError(f"{kind}: parameter {name!r} must be an http(s) URL")
    return value


def _ws_url(value, name, kind):
    value = _text(value, name, kind)
    if not value.startswith(("ws://", "wss://")):
        raise ConnectorError(f"{kind}: parameter {name!r} must be a ws(s) URL")
    return value


def _method(value, name, kind):
    value = _text(value, name, kind).upper()
    if value not in ("GET", "POST", "PUT", "DELETE", "PATCH"):
        raise ConnectorError(f"{kind}: parameter {name!r} must be an HTTP method")
    return value


def _enum(*allowed):
    def check(value, name, kind):
        value = _text(value, name, kind)
        if value not in allowed:
            raise ConnectorError(f"{kind}: parameter {name!r} must be one of {', '.join(allowed)}")
        return value

    return check


_PARAMS = {
    "http-server": ({"port": _int_nonneg}, {"host": _text, "path": _text}),
    "http-client": (
        {"url": _http_url},
        {
            "method": _method,
            "max-retries": _int_nonneg,
            "backoff-millis": _int_pos,
            "accept-any-status": _bool,
        },
    ),
    "websocket-client": (
        {"url": _ws_url},
        {"max-retries": _int_nonneg, "backoff-millis": _int_pos},
    ),
    "file": ({"path": _text}, {"mode": _enum("whole", "lines", "append", "truncate"), "content-type": _text}),
    "file-watch": ({"path": _text}, {"interval-millis": _int_pos, "content-type": _text}),
    "timer": ({"interval-millis": _int_pos}, {"count": _int_pos}),
    "bus-subscribe": ({"topic": _text}, {"queue-size": _int_pos}),
    "bus-publish": ({"topic": _text}, {}),
    "gtfs-static": ({"path": _text}, {}),
    "gtfs-rt": ({}, {"url": _http_url, "path": _text, "interval-millis": _int_pos, "count": _int_pos}),
}


def validate_connector(spec: ConnectorSpec) -> dict:
    """Check kind and params; returns the params with typed values."""
    if spec.kind not in _PARAMS:
        raise ConnectorError(f"unknown connector kind {spec.kind!r} (expected one of {', '.join(ALL_KINDS)})")
    required, optional = _PARAMS[spec.kind]
    out: dict = {}
    for name, value in spec.params.items():
        if name == "id":
            out["id"] = _text(value, "id", spec.kind)
            continue
        checker = required.get(name) or optional.get(name)
        if checker is None:
            raise ConnectorError(f"{spec.kind}: unknown parameter {name!r}")
        out[name] = checker(value, name, spec.kind)
    for name in required:
        if name not in out:
            raise ConnectorError(f"{spec.kind}: missing required parameter {name!r}")
    if spec.kind == "gtfs-rt":
        if ("url" in out) == ("path" in out):
            raise ConnectorError("gtfs-rt: needs exactly one of parameters 'url' or 'path'")
    return out


# -- sources ----------------------------------------------------------------------


class Source:
    """A stream of Messages. Iterate messages(); close() ends the stream."""

    def __init__(self, source_id: str) -> None:
        self.source_id = source_id
        self.errors: list[str] = []
        self.diagnostics: list[str] = []
        self._closed = threading.Event()

    def messages(self) -> Iterator[Message]:
        raise NotImplementedError

    def drain(self) -> Iterator[Message]:
        """Messages still buffered after close(); empty unless queued."""
        return iter(())

    def close(self) -> None:
        self._closed.set()

    @property
    def closed(self) -> bool:
        return self._closed.is_set()


class _FileSource(Source):
    def __init__(self, source_id: str, params: dict) -> None:
        super().__init__(source_id)
        path = params["path"]
        mode = params.get("mode", "whole")
        if mode not in ("whole", "lines"):
            raise ConnectorError(f"file: mode {mode!r} is write-only; sources need whole or lines")
        self._mode = mode
        self._content_type = params.get(
            "content-type", "text/plain" if mode == "lines" else "application/octet-stream"
        )
        try:
            with open(path, "rb") as handle:
                self._data = handle.read()
        except OSError as exc:
            raise ConnectorError(f"file: cannot open {path!r}: {exc}") from None

    def messages(self) -> Iterator[Message]:
        if self._mode == "whole":
            if not self.closed:
                yield ingress(self._data, self._content_type, self.source_id)
            return
        for line in self._data.splitlines():
            if self.closed:
                return
            yield ingress(line, self._content_type, self.source_id)


class _FileWatchSource(Source):
    def __init__(self, source_id: str, params: dict) -> None:
        super().__init__(source_id)
        self._path = params["path"]
        self._interval = params.get("interval-millis", 200) / 1000.0
        self._content_type = params.get("content-type", "application/octet-stream")
        self._offset = 0

    def messages(self) -> Iterator[Message]:
        while not self.closed:
            chunk = self._read_new()
            if chunk:
                yield ingress(chunk, self._content_type, self.source_id)
            if self._closed.wait(timeout=self._interval):
                return

    def _read_new(self) -> bytes:
        try:
            with open(self._path, "rb") as handle:
                data = handle.read()
        except OSError:
            return b""
        if len(data) < self._offset:
            self._offset = 0  # truncated; start over
        chunk = data[self._offset :]
        self._offset = len(data)
        return chunk


class _TimerSource(Source):
    def __init__(self, source_id: str, params: dict) -> None:
        super().__init__(source_id)
        self._interval = params["interval-millis"] / 1000.0
        self._count = params.get("count")

    def messages(self) -> Iterator[Message]:
        ticks = 0
        while not self.closed:
            if self._closed.wait(timeout=self._interval):
                return
            yield ingress(b"", "application/octet-stream", self.source_id)
            ticks += 1
            if self._count is not None and ticks >= self._count:
                return


class _BusSource(Source):
    def __init__(self, source_id: str, params: dict, bus: MessageBus) -> None:
        super().__init__(source_id)
        self._sub = bus.subscribe(params["topic"], params.get("queue-size", DEFAULT_QUEUE_SIZE))

    def messages(self) -> Iterator[Message]:
        while not self.closed:
            message = self._sub.get(timeout=0.05)
            if message is None:
                continue
            if CORRELATION_ID not in message.headers:
                message = ingress(message.payload, message.content_type, self.source_id, message.headers)
            yield message

    def drain(self) -> Iterator[Message]:
        while True:
            message = self._sub.get(timeout=0)
            if message is None:
                return
            yield message

    def close(self) -> None:
        super().close()
        self._sub.close()

    def pending(self) -> int:
        return self._sub.pending()

    @property
    def drops(self) -> int:
        return self._sub.drops


class _HttpServerSource(Source):
    def __init__(self, source_id: str, params: dict) -> None:
        super().__init__(source_id)
        host = params.get("host", "127.0.0.1")
        port = params["port"]
        path = params.get("path", "/")
        inbox: queue.Queue = queue.Queue()
        sid = source_id

        class Handler(http.server.BaseHTTPRequestHandler):
            def log_message(self, *args) -> None:
                pass

            def do_POST(self) -> None:
                if path not in ("/", self.path):
                    self.send_error(404)
                    return
                length = int(self.headers.get("Content-Length", "0"))
                body = self.rfile.read(length)
                content_type = self.headers.get("Content-Type", "application/octet-stream")
                inbox.put(ingress(body, content_type, sid))
                self.send_response(202)
                self.send_header("Content-Length", "0")
                self.end_headers()

            do_PUT = do_POST

        try:
            self._server = http.server.ThreadingHTTPServer((host, port), Handler)
        except OSError as exc:
            raise ConnectorError(f"http-server: cannot bind {host}:{port}: {exc}") from None
        self.port = self._server.server_address[1]
        self._inbox = inbox
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def messages(self) -> Iterator[Message]:
        while not self.closed:
            try:
                yield self._inbox.get(timeout=0.05)
            except queue.Empty:
                continue

    def close(self) -> None:
        super().close()
        self._server.shutdown()
        self._server.server_close()


class _WebSocketSource(Source):
    def __init__(self, source_id: str, params: dict) -> None:
        super().__init__(source_id)
        self._url = params["url"]
        self._max_retries = params.get("max-retries", 0)
        self._backoff = params.get("backoff-millis", 100) / 1000.0

    def messages(self) -> Iterator[Message]:
        from websockets.sync.client import connect

        attempts = 0
        while not self.closed:
            try:
                with connect(self._url) as ws:
                    attempts = 0
                    while not self.closed:
                        try:
                            frame = ws.recv(timeout=0.1)
                        except TimeoutError:
                            continue
                        if isinstance(frame, str):
                            yield ingress(frame.encode("utf-8"), "text/plain", self.source_id)
                        else:
                            yield ingress(frame, "application/octet-stream", self.source_id)
            except Exception as exc:
                from websockets.exceptions import ConnectionClosedOK

                if isinstance(exc, ConnectionClosedOK):
                    return
                if attempts >= self._max_retries:
                    self.errors.append(f"websocket-client: {exc}")
                    return
                attempts += 1
                if self._closed.wait(timeout=self._backoff):
                    return


class _GtfsStaticSource(Source):
    def __init__(self, source_id: str, params: dict) -> None:
        super().__init__(source_id)
        path = params["path"]
        try:
            with open(path, "rb") as handle:
                data = handle.read()
        except OSError as exc:
            raise ConnectorError(f"gtfs-static: cannot open {path!r}: {exc}") from None
        feed = ingest_gtfs_static(data)
        self.diagnostics.extend(feed.diagnostics)
        self._entities = (
            [("stop", s) for s in feed.stops]
            + [("route", r) for r in feed.routes]
            + [("trip", t) for t in feed.trips]
        )

    def messages(self) -> Iterator[Message]:
        for kind, entity in self._entities:
            if self.closed:
                return
            payload = json.dumps(dataclasses.asdict(entity)).encode("utf-8")
            yield ingress(payload, "application/json", self.source_id, {"entity-kind": kind})


class _GtfsRtSource(Source):
    def __init__(self, source_id: str, params: dict) -> None:
        super().__init__(source_id)
        self._url = params.get("url")
        self._path = params.get("path")
        self._interval = params.get("interval-millis", 1000) / 1000.0
        self._count = params.get("count", 1 if self._path else None)

    def messages(self) -> Iterator[Message]:
        fetched = 0
        while not self.closed:
            payload = self._fetch()
            if payload is not None:
                yield ingress(payload, "application/json", self.source_id)
            fetched += 1
            if self._count is not None and fetched >= self._count:
                return
            if self._closed.wait(timeout=self._interval):
                return

    def _fetch(self) -> bytes | None:
        if self._path is not None:
            try:
                with open(self._path, "rb") as handle:
                    return handle.read()
            except OSError as exc:
                self.errors.append(f"gtfs-rt: cannot read {self._path!r}: {exc}")
                return None
        import requests

        try:
            response = requests.get(self._url, timeout=10)
            response.raise_for_status()
            return response.content
        except Exception as exc:
            self.errors.append(f"gtfs-rt: fetch failed: {exc}")
            return None


def open_source(spec: ConnectorSpec, bus: MessageBus | None = None) -> Source:
    params = validate_connector(spec)
    if spec.kind not in SOURCE_KINDS:
        raise ConnectorError(f"{spec.kind} is not a source-capable kind")
    source_id = params.get("id", spec.kind)
    if spec.kind == "file":
        return _FileSource(source_id, params)
    if spec.kind == "file-watch":
        return _FileWatchSource(source_id, params)
    if spec.kind == "timer":
        return _TimerSource(source_id, params)
    if spec.kind == "bus-subscribe":
        if bus is None:
            raise ConnectorError("bus-subscribe needs a bus")
        return _BusSource(source_id, params, bus)
    if spec.kind == "http-server":
        return _HttpServerSource(source_id, params)
    if spec.kind == "websocket-client":
        return _WebSocketSource(source_id, params)
    if spec.kind == "gtfs-static":
        return _GtfsStaticSource(source_id, params)
    return _GtfsRtSource(source_id, params)


# -- sinks ------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class SendResult:
    ok: bool
    delivered: int | None = None
    status: int | None = None


def send(spec: ConnectorSpec, message: Message, bus: MessageBus | None = None) -> SendResult:
    params = validate_connector(spec)
    if spec.kind not in SINK_KINDS:
        raise ConnectorError(f"{spec.kind} is not a sink-capable kind")
    if spec.kind == "bus-publish":
        if bus is None:
            raise ConnectorError("bus-publish needs a bus")
        delivered = bus.publish(params["topic"], message)
        return SendResult(ok=True, delivered=delivered)
    if spec.kind == "file":
        mode = params.get("mode", "append")
        if mode not in ("append", "truncate"):
            raise ConnectorError(f"file: mode {mode!r} is read-only; sinks need append or truncate")
        try:
            with open(params["path"], "ab" if mode == "append" else "wb") as handle:
                handle.write(message.payload)
        except OSError as exc:
            raise ConnectorError(f"file: cannot write {params['path']!r}: {exc}") from None
        return SendResult(ok=True)
    return _http_send(params, message)


def _http_send(params: dict, message: Message) -> SendResult:
    import requests

    method = params.get("method", "POST")
    retries = params.get("max-retries", 0)
    backoff = params.get("backoff-millis", 100) / 1000.0
    attempt = 0
    while True:
        try:
            response = requests.request(
                method,
                params["url"],
                data=message.payload if method != "GET" else None,
                headers={"Content-Type": message.content_type},
                timeout=10,
            )
        except requests.RequestException as exc:
            if attempt >= retries:
                raise ConnectorError(f"http-client: {exc}") from None
            attempt += 1
            time.sleep(backoff)
            continue
        if response.ok or params.get("accept-any-status", False):
            return SendResult(ok=response.ok, status=response.status_code)
        if attempt >= retries:
            raise ConnectorError(f"http-client: HTTP {response.status_code} from {params['url']}")
        attempt += 1
        time.sleep(backoff)


__all__ = [
    "ALL_KINDS",
    "ConnectorError",
    "ConnectorSpec",
    "SendResult",
    "SINK_KINDS",
    "SOURCE_KINDS",
    "Source",
    "decode_gtfs_rt",
    "ingest_gtfs_static",
    "open_source",
    "send",
    "validate_connector",
]
