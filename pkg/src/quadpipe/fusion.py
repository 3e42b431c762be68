"""Observation fusion: link detections from different sources that
plausibly denote the same physical object, and correct object classes
using the more trusted source.

Matching is greedy nearest-first with explicit tie-breaking (time gap,
then id pair), one link per observation per foreign source. Greedy was
chosen over optimal assignment for latency predictability; the rule is
simple enough to re-derive by brute force, which the tests do.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .rdf import Dataset, IRI, Literal, Quad, RDF_TYPE, XSD, term_text, typed

EARTH_RADIUS_M = 6371000.0

_TYPE = IRI(RDF_TYPE)


class FusionError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Observation:
    id: str
    source: str
    source_kind: str
    x: float
    y: float
    timestamp: int
    object_class: str
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if self.timestamp <= 0:
            raise FusionError(f"observation {self.id}: timestamp must be positive")
        if not (0.0 <= self.confidence <= 1.0):
            raise FusionError(f"observation {self.id}: confidence must be in [0, 1]")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise FusionError(f"observation {self.id}: position must be finite")


@dataclass(frozen=True)
class FusionConfig:
    time_window: int
    distance_threshold: float
    class_compatibility: frozenset = frozenset()
    authority_order: tuple = ()

    def __post_init__(self) -> None:
        if self.time_window <= 0:
            raise FusionError("time-window-millis must be positive")
        if self.distance_threshold <= 0:
            raise FusionError("distance-threshold-meters must be positive")
        if len(set(self.authority_order)) != len(self.authority_order):
            raise FusionError("authority-order must not repeat a source kind")
        pairs = frozenset(frozenset(pair) for pair in self.class_compatibility)
        object.__setattr__(self, "class_compatibility", pairs)

    def compatible(self, class_a: str, class_b: str) -> bool:
        return class_a == class_b or frozenset((class_a, class_b)) in self.class_compatibility

    def rank(self, source_kind: str) -> int | None:
        """Authority rank; lower is more trusted, None is unranked."""
        try:
            return self.authority_order.index(source_kind)
        except ValueError:
            return None


@dataclass(frozen=True, slots=True)
class Correction:
    observation_id: str
    original_class: str
    corrected_class: str
    authority_source: str


@dataclass(frozen=True, slots=True)
class FusedFrame:
    observations: tuple = ()
    links: tuple = ()
    corrections: tuple = ()


def project_to_local(lat: float, lon: float, origin: tuple[float, float]) -> tuple[float, float]:
    """Equirectangular projection about origin, meters. Good under ~50 km."""
    origin_lat, origin_lon = origin
    for name, value, bound in (
        ("lat", lat, 90.0),
        ("lon", lon, 180.0),
        ("origin lat", origin_lat, 90.0),
        ("origin lon", origin_lon, 180.0),
    ):
        if not (-bound <= value <= bound):
            raise FusionError(f"{name} {value} out of range [-{bound}, {bound}]")
    x = EARTH_RADIUS_M * math.radians(lon - origin_lon) * math.cos(math.radians(origin_lat))
    y = EARTH_RADIUS_M * math.radians(lat - origin_lat)
    return (x, y)


def _distance(a: Observation, b: Observation) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def _id_pair(a: Observation, b: Observation) -> tuple[str, str]:
    return (a.id, b.id) if a.id <= b.id else (b.id, a.id)


def fuse(frame: list[Observation], cfg: FusionConfig) -> FusedFrame:
    candidates = []
    for i, a in enumerate(frame):
        for b in frame[i + 1 :]:
            if a.source == b.source:
                continue
            gap = abs(a.timestamp - b.timestamp)
            if gap > cfg.time_window:
                continue
            distance = _distance(a, b)
            if distance > cfg.distance_threshold:
                continue
            if not cfg.compatible(a.object_class, b.object_class):
                continue
            candidates.append((distance, gap, _id_pair(a, b), a, b))
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))

    links = []
    corrections = []
    taken: set[tuple[str, str]] = set()  # (observation id, foreign source)
    for distance, gap, pair, a, b in candidates:
        if (a.id, b.source) in taken or (b.id, a.source) in taken:
            continue
        taken.add((a.id, b.source))
        taken.add((b.id, a.source))
        links.append(pair)
        correction = _correct(a, b, cfg)
        if correction is not None:
            corrections.append(correction)
    return FusedFrame(tuple(frame), tuple(links), tuple(corrections))


def _correct(a: Observation, b: Observation, cfg: FusionConfig) -> Correction | None:
    rank_a, rank_b = cfg.rank(a.source_kind), cfg.rank(b.source_kind)
    if rank_a is None or rank_b is None or rank_a == rank_b:
        return None
    high, low = (a, b) if rank_a < rank_b else (b, a)
    if high.object_class == low.object_class:
        return None
    return Correction(low.id, low.object_class, high.object_class, high.source_kind)


# -- JSON forms -------------------------------------------------------------------


def observation_from_json(obj: dict, origin: tuple[float, float] | None = None) -> Observation:
    if not isinstance(obj, dict):
        raise FusionError("observation must be a JSON object")
    try:
        if "x" in obj and "y" in obj:
            x, y = float(obj["x"]), float(obj["y"])
        elif origin is not None and "lat" in obj and "lon" in obj:
            x, y = project_to_local(float(obj["lat"]), float(obj["lon"]), origin)
        else:
            raise KeyError("x/y (or lat/lon with a configured origin)")
        return Observation(
            id=str(obj["id"]),
            source=str(obj["source"]),
            source_kind=str(obj["source-kind"]),
            x=x,
            y=y,
            timestamp=int(obj["timestamp"]),
            object_class=str(obj["object-class"]),
            confidence=float(obj.get("confidence", 1.0)),
        )
    except KeyError as exc:
        raise FusionError(f"observation missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise FusionError(f"bad observation field: {exc}") from None


def observations_from_rdf(ds: Dataset, vocab: VocabProfile | None = None) -> list[Observation]:
    """Read observations back out of the RDF shape emit_rdf produces.

    Inverse of the emission template so fusion can run on lifted RDF
    payloads: any subject typed as an observation is decoded; corrections
    and links already present are ignored (fusion recomputes them).
    """
    vocab = vocab or VocabProfile()
    kinds = {iri: kind for kind, iri in vocab.source_kinds.items()}
    classes = {iri: name for name, iri in vocab.classes.items()}
    out = []
    for quad in ds.quads(predicate=_TYPE, object=IRI(vocab.observation_class)):
        subject = quad.subject
        if not isinstance(subject, IRI):
            raise FusionError(f"observation subject {subject!r} is not an IRI")
        sensor = _one_object(ds, subject, vocab.made_by_sensor)
        sensor_type = _one_object(ds, sensor, RDF_TYPE)
        feature = _one_object(ds, subject, vocab.feature_of_interest)
        feature_type = _one_object(ds, feature, RDF_TYPE)
        confidence = _opt_object(ds, subject, vocab.confidence)
        out.append(
            Observation(
                id=subject.value,
                source=_strip(sensor.value, "urn:source:"),
                source_kind=kinds.get(sensor_type.value, _strip(sensor_type.value, FUSE + "kind:")),
                x=_float_of(ds, subject, vocab.pos_x),
                y=_float_of(ds, subject, vocab.pos_y),
                timestamp=int(_lexical_of(ds, subject, vocab.result_time, "timestamp")),
                object_class=classes.get(feature_type.value, feature_type.value),
                confidence=float(confidence.lexical) if confidence is not None else 1.0,
            )
        )
    out.sort(key=lambda obs: obs.id)
    return out


def _one_object(ds: Dataset, subject, predicate: str):
    found = {q.object for q in ds.quads(subject=subject, predicate=IRI(predicate))}
    if len(found) != 1:
        raise FusionError(
            f"observation {term_text(subject)} needs exactly one <{predicate}> value, found {len(found)}"
        )
    return next(iter(found))


def _opt_object(ds: Dataset, subject, predicate: str):
    found = {q.object for q in ds.quads(subject=subject, predicate=IRI(predicate))}
    if len(found) > 1:
        raise FusionError(f"observation {term_text(subject)} has {len(found)} <{predicate}> values")
    return next(iter(found), None)


def _float_of(ds: Dataset, subject, predicate: str) -> float:
    return float(_lexical_of(ds, subject, predicate, predicate))


def _lexical_of(ds: Dataset, subject, predicate: str, what: str) -> str:
    term = _one_object(ds, subject, predicate)
    if not isinstance(term, Literal):
        raise FusionError(f"observation {term_text(subject)}: {what} must be a literal")
    return term.lexical


def _strip(value: str, prefix: str) -> str:
    return value[len(prefix) :] if value.startswith(prefix) else value


def load_fusion_config(data: bytes | str) -> tuple[FusionConfig, tuple[float, float] | None]:
    """Parse the fusion config file; returns the config and optional origin."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FusionError(f"fusion config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise FusionError("fusion config must be a JSON object")
    known = {
        "time-window-millis",
        "distance-threshold-meters",
        "class-compatibility",
        "authority-order",
        "origin",
    }
    for key in doc:
        if key not in known:
            raise FusionError(f"fusion config: unknown field {key!r}")
    try:
        cfg = FusionConfig(
            time_window=int(doc["time-window-millis"]),
            distance_threshold=float(doc["distance-threshold-meters"]),
            class_compatibility=frozenset(
                frozenset(map(str, pair)) for pair in doc.get("class-compatibility", [])
            ),
            authority_order=tuple(doc.get("authority-order", [])),
        )
    except KeyError as exc:
        raise FusionError(f"fusion config missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise FusionError(f"fusion config: {exc}") from None
    origin = None
    if "origin" in doc:
        spot = doc["origin"]
        if not isinstance(spot, dict) or "lat" not in spot or "lon" not in spot:
            raise FusionError("fusion config: origin needs lat and lon")
        origin = (float(spot["lat"]), float(spot["lon"]))
    return cfg, origin


# -- RDF emission -----------------------------------------------------------------

SOSA = "http://www.w3.org/ns/sosa/"
FUSE = "urn:fusion:"


@dataclass(frozen=True)
class VocabProfile:
    observation_class: str = SOSA + "Observation"
    made_by_sensor: str = SOSA + "madeBySensor"
    result_time: str = FUSE + "resultTimeMillis"
    feature_of_interest: str = SOSA + "hasFeatureOfInterest"
    pos_x: str = FUSE + "x"
    pos_y: str = FUSE + "y"
    confidence: str = FUSE + "confidence"
    effective_class: str = FUSE + "effectiveClass"
    sameness: str = FUSE + "sameObjectAs"
    source_kinds: dict = field(default_factory=dict)
    classes: dict = field(default_factory=dict)

    def class_iri(self, name: str) -> str:
        return self.classes.get(name, name)

    def kind_iri(self, kind: str) -> str:
        return self.source_kinds.get(kind, FUSE + "kind:" + kind)


def load_vocab_profile(data: bytes | str) -> VocabProfile:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FusionError(f"vocab profile is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise FusionError("vocab profile must be a JSON object")
    fields = {}
    renames = {
        "observation-class": "observation_class",
        "made-by-sensor": "made_by_sensor",
        "result-time": "result_time",
        "feature-of-interest": "feature_of_interest",
        "pos-x": "pos_x",
        "pos-y": "pos_y",
        "confidence": "confidence",
        "effective-class": "effective_class",
        "sameness": "sameness",
        "source-kinds": "source_kinds",
        "classes": "classes",
    }
    for key, value in doc.items():
        if key not in renames:
            raise FusionError(f"vocab profile: unknown field {key!r}")
        fields[renames[key]] = value
    return VocabProfile(**fields)


# Quads emitted for one observation (see emit_rdf): type, sensor, sensor
# kind, time, x, y, confidence, feature link, object class, effective class.
QUADS_PER_OBSERVATION = 10


def emit_rdf(fused: FusedFrame, vocab: VocabProfile | None = None) -> Dataset:
    vocab = vocab or VocabProfile()
    out = Dataset()
    effective = {c.observation_id: c.corrected_class for c in fused.corrections}
    double = XSD + "double"
    long_t = XSD + "long"
    for obs in fused.observations:
        subject = IRI(obs.id)
        sensor = IRI("urn:source:" + obs.source)
        feature = IRI(obs.id + "#object")
        out.add(Quad(subject, _TYPE, IRI(vocab.observation_class)))
        out.add(Quad(subject, IRI(vocab.made_by_sensor), sensor))
        out.add(Quad(sensor, _TYPE, IRI(vocab.kind_iri(obs.source_kind))))
        out.add(Quad(subject, IRI(vocab.result_time), typed(str(obs.timestamp), long_t)))
        out.add(Quad(subject, IRI(vocab.pos_x), typed(repr(obs.x), double)))
        out.add(Quad(subject, IRI(vocab.pos_y), typed(repr(obs.y), double)))
        out.add(Quad(subject, IRI(vocab.confidence), typed(repr(obs.confidence), double)))
        out.add(Quad(subject, IRI(vocab.feature_of_interest), feature))
        out.add(Quad(feature, _TYPE, IRI(vocab.class_iri(obs.object_class))))
        chosen = effective.get(obs.id, obs.object_class)
        out.add(Quad(feature, IRI(vocab.effective_class), IRI(vocab.class_iri(chosen))))
    for id_a, id_b in fused.links:
        out.add(Quad(IRI(id_a), IRI(vocab.sameness), IRI(id_b)))
    return out


__all__ = [
    "Correction",
    "EARTH_RADIUS_M",
    "FusedFrame",
    "FusionConfig",
    "FusionError",
    "Observation",
    "QUADS_PER_OBSERVATION",
    "VocabProfile",
    "emit_rdf",
    "fuse",
    "load_fusion_config",
    "load_vocab_profile",
    "observation_from_json",
    "observations_from_rdf",
    "project_to_local",
]
