"""Message transport: bus, sources, sinks, and GTFS ingestion."""

from .bus import DEFAULT_QUEUE_SIZE, MessageBus, Subscription
from .connectors import (
    ALL_KINDS,
    SINK_KINDS,
    SOURCE_KINDS,
    ConnectorError,
    ConnectorSpec,
    SendResult,
    Source,
    open_source,
    send,
    validate_connector,
)
from .gtfs import (
    GtfsError,
    GtfsFeed,
    Route,
    Stop,
    Trip,
    VehiclePosition,
    decode_gtfs_rt,
    ingest_gtfs_static,
)
from .message import (
    CORRELATION_ID,
    ERROR_HEADER,
    RECEIVED_AT,
    SOURCE_ID,
    SPLIT_INDEX,
    Message,
    ingress,
)

__all__ = [
    "ALL_KINDS",
    "CORRELATION_ID",
    "ConnectorError",
    "ConnectorSpec",
    "DEFAULT_QUEUE_SIZE",
    "ERROR_HEADER",
    "GtfsError",
    "GtfsFeed",
    "Message",
    "MessageBus",
    "RECEIVED_AT",
    "Route",
    "SINK_KINDS",
    "SOURCE_ID",
    "SOURCE_KINDS",
    "SPLIT_INDEX",
    "SendResult",
    "Source",
    "Stop",
    "Subscription",
    "Trip",
    "VehiclePosition",
    "decode_gtfs_rt",
    "ingest_gtfs_static",
    "ingress",
    "open_source",
    "send",
    "validate_connector",
]
