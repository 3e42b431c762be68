"""The message envelope that moves through pipelines.

A message is an immutable payload with a content type and string headers.
Three headers are reserved and stamped at ingress: source-id (the
connector that produced it), received-at (epoch millis), and
correlation-id (unique per ingress message). Downstream steps never mutate
a message; they derive new ones that keep the correlation id.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

SOURCE_ID = "source-id"
RECEIVED_AT = "received-at"
CORRELATION_ID = "correlation-id"
SPLIT_INDEX = "split-index"
ERROR_HEADER = "error"

RESERVED_HEADERS = (SOURCE_ID, RECEIVED_AT, CORRELATION_ID)


@dataclass(frozen=True, slots=True)
class Message:
    payload: bytes
    content_type: str = "application/octet-stream"
    headers: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.payload, bytes):
            raise TypeError("message payload must be bytes")
        object.__setattr__(self, "headers", MappingProxyType(dict(self.headers)))

    @property
    def correlation_id(self) -> str:
        return self.headers.get(CORRELATION_ID, "")

    def header(self, name: str, default: str = "") -> str:
        return self.headers.get(name, default)

    def with_header(self, name: str, value: str) -> Message:
        headers = dict(self.headers)
        headers[name] = value
        return Message(self.payload, self.content_type, headers)

    def with_payload(self, payload: bytes, content_type: str | None = None) -> Message:
        return Message(
            payload,
            self.content_type if content_type is None else content_type,
            dict(self.headers),
        )


def ingress(
    payload: bytes,
    content_type: str,
    source_id: str,
    headers: Mapping[str, str] | None = None,
) -> Message:
    """Stamp a fresh message as it enters the system."""
    merged = dict(headers or {})
    merged[SOURCE_ID] = source_id
    merged[RECEIVED_AT] = str(int(time.time() * 1000))
    merged[CORRELATION_ID] = uuid.uuid4().hex
    return Message(payload, content_type, merged)


__all__ = [
    "CORRELATION_ID",
    "ERROR_HEADER",
    "Message",
    "RECEIVED_AT",
    "RESERVED_HEADERS",
    "SOURCE_ID",
    "SPLIT_INDEX",
    "ingress",
]
