"""GTFS ingestion: static feed ZIPs and realtime feed messages.

Static feeds are ZIP archives of CSV tables; stops.txt is mandatory,
routes.txt and trips.txt are read when present. Realtime feeds are JSON
FeedMessage documents carrying vehicle positions. Both readers skip
invalid records and report each skip as a diagnostic instead of failing
the whole feed.
"""

from __future__ import annotations

import csv
import io
import json
import zipfile
from dataclasses import dataclass, field


class GtfsError(ValueError):
    """The feed container itself is unusable (bad ZIP, missing stops.txt)."""


@dataclass(frozen=True, slots=True)
class Stop:
    stop_id: str
    name: str
    lat: float
    lon: float


@dataclass(frozen=True, slots=True)
class Route:
    route_id: str
    type: str


@dataclass(frozen=True, slots=True)
class Trip:
    trip_id: str
    route_id: str


@dataclass(slots=True)
class GtfsFeed:
    stops: list = field(default_factory=list)
    routes: list = field(default_factory=list)
    trips: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def entities(self) -> list:
        return [*self.stops, *self.routes, *self.trips]


def ingest_gtfs_static(data: bytes) -> GtfsFeed:
    """Read a static feed ZIP into validated entities plus diagnostics."""
    try:
        archive = zipfile.ZipFile(io.BytesIO(data))
    except zipfile.BadZipFile as exc:
        raise GtfsError(f"not a ZIP archive: {exc}") from None
    names = set(archive.namelist())
    if "stops.txt" not in names:
        raise GtfsError("feed has no stops.txt")
    feed = GtfsFeed()
    for row, where in _rows(archive, "stops.txt"):
        stop_id = (row.get("stop_id") or "").strip()
        name = (row.get("stop_name") or "").strip()
        if not stop_id:
            feed.diagnostics.append(f"{where}: missing stop_id, row skipped")
            continue
        lat = _coord(row.get("stop_lat"), -90.0, 90.0)
        lon = _coord(row.get("stop_lon"), -180.0, 180.0)
        if lat is None or lon is None:
            feed.diagnostics.append(f"{where}: stop {stop_id!r} has a bad coordinate, row skipped")
            continue
        feed.stops.append(Stop(stop_id, name, lat, lon))
    if "routes.txt" in names:
        for row, where in _rows(archive, "routes.txt"):
            route_id = (row.get("route_id") or "").strip()
            if not route_id:
                feed.diagnostics.append(f"{where}: missing route_id, row skipped")
                continue
            feed.routes.append(Route(route_id, (row.get("route_type") or "").strip()))
    if "trips.txt" in names:
        for row, where in _rows(archive, "trips.txt"):
            trip_id = (row.get("trip_id") or "").strip()
            route_id = (row.get("route_id") or "").strip()
            if not trip_id or not route_id:
                feed.diagnostics.append(f"{where}: trip needs trip_id and route_id, row skipped")
                continue
            feed.trips.append(Trip(trip_id, route_id))
    return feed


def _rows(archive: zipfile.ZipFile, name: str):
    text = archive.read(name).decode("utf-8-sig")
    reader = csv.DictReader(io.StringIO(text))
    for index, row in enumerate(reader, start=2):  # header is line 1
        yield row, f"{name} line {index}"


def _coord(raw: str | None, low: float, high: float) -> float | None:
    if raw is None or not raw.strip():
        return None
    try:
        value = float(raw)
    except ValueError:
        return None
    if not (low <= value <= high):
        return None
    return value


# -- realtime ---------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class VehiclePosition:
    vehicle_id: str
    trip_id: str
    lat: float
    lon: float
    timestamp: int


def decode_gtfs_rt(payload: bytes) -> tuple[list, list]:
    """Decode a JSON FeedMessage into vehicle positions plus diagnostics."""
    try:
        doc = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise GtfsError(f"feed message is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("entity"), list):
        raise GtfsError("feed message has no entity list")
    header_time = _int_or_none(doc.get("header", {}).get("timestamp")) if isinstance(doc.get("header"), dict) else None
    positions: list[VehiclePosition] = []
    diagnostics: list[str] = []
    for index, entity in enumerate(doc["entity"]):
        if not isinstance(entity, dict):
            diagnostics.append(f"entity {index}: not an object, skipped")
            continue
        label = str(entity.get("id", index))
        vehicle = entity.get("vehicle")
        if not isinstance(vehicle, dict):
            diagnostics.append(f"entity {label}: no vehicle position, skipped")
            continue
        vehicle_id = _nested(vehicle, "vehicle", "id")
        trip_id = _nested(vehicle, "trip", "trip_id")
        if not vehicle_id or not trip_id:
            diagnostics.append(f"entity {label}: missing vehicle or trip id, skipped")
            continue
        position = vehicle.get("position")
        lat = _float_or_none(position.get("latitude")) if isinstance(position, dict) else None
        lon = _float_or_none(position.get("longitude")) if isinstance(position, dict) else None
        if lat is None or lon is None:
            diagnostics.append(f"entity {label}: missing position, skipped")
            continue
        timestamp = _int_or_none(vehicle.get("timestamp"))
        if timestamp is None:
            timestamp = header_time if header_time is not None else 0
        positions.append(VehiclePosition(vehicle_id, trip_id, lat, lon, timestamp))
    return positions, diagnostics


def _nested(obj: dict, outer: str, inner: str) -> str:
    value = obj.get(outer)
    if isinstance(value, dict):
        got = value.get(inner)
        if isinstance(got, str) and got.strip():
            return got.strip()
    return ""


def _float_or_none(value) -> float | None:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    return None


def _int_or_none(value) -> int | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, str) and value.isdigit():
        return int(value)
    return None


__all__ = [
    "GtfsError",
    "GtfsFeed",
    "Route",
    "Stop",
    "Trip",
    "VehiclePosition",
    "decode_gtfs_rt",
    "ingest_gtfs_static",
]
