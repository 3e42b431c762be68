"""Pipeline spec loading: parse, substitute ${VAR}, validate everything.

Loading either succeeds completely or fails with the path to the
offending field; referenced rule and template files are loaded here so a
broken reference can never reach a running engine.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path

import yaml

from ..connectors import ConnectorSpec, SINK_KINDS, SOURCE_KINDS, validate_connector
from ..fusion import FusionError, load_fusion_config, load_vocab_profile
from ..mapping import (
    CONTEXT_SOURCE,
    MappingDocument,
    MappingError,
    load_mapping_file,
    load_template_file,
)
from ..mapping.paths import PathError, parse_jsonpath
from ..rdf import parse_query
from .predicates import PredicateError, parse_predicate
from .steps import (
    AggregateStep,
    ChainStep,
    EnrichStep,
    FilterStep,
    FuseStep,
    LiftStep,
    LowerStep,
    MulticastStep,
    RouteBranch,
    RouteStep,
    STEP_KINDS,
    SetHeaderStep,
    SplitStep,
)

SPEC_VERSION = 1

_VAR = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineDef:
    id: str
    source: ConnectorSpec
    steps: tuple
    sinks: tuple
    ordered: bool = True


@dataclass(frozen=True)
class PipelineSpec:
    version: int
    pipelines: tuple

    def describe(self) -> dict:
        """Plain-data shape of the loaded spec (ids, kinds, params)."""
        return {
            "version": self.version,
            "pipelines": [
                {
                    "id": p.id,
                    "ordered": p.ordered,
                    "source": {"kind": p.source.kind, "params": dict(p.source.params)},
                    "steps": [{"kind": s.kind} for s in p.steps],
                    "sinks": [{"kind": s.kind, "params": dict(s.params)} for s in p.sinks],
                }
                for p in self.pipelines
            ],
        }


def _substitute(value, path: str, env):
    if isinstance(value, str):
        def replace(match):
            name = match.group(1)
            if name not in env:
                raise SpecError(f"{path}: undefined environment variable ${{{name}}}")
            return env[name]

        return _VAR.sub(replace, value)
    if isinstance(value, list):
        return [_substitute(v, f"{path}[{i}]", env) for i, v in enumerate(value)]
    if isinstance(value, dict):
        return {k: _substitute(v, f"{path}.{k}", env) for k, v in value.items()}
    return value


def _expect(doc: dict, key: str, types, path: str, required: bool = True, default=None):
    if key not in doc:
        if required:
            raise SpecError(f"{path}: missing field {key!r}")
        return default
    value = doc[key]
    if not isinstance(value, types) or isinstance(value, bool) and bool not in _tuple(types):
        raise SpecError(f"{path}.{key}: expected {_type_names(types)}, got {type(value).__name__}")
    return value


def _tuple(types):
    return types if isinstance(types, tuple) else (types,)


def _type_names(types):
    return "/".join(t.__name__ for t in _tuple(types))


def load_spec_file(path: str | Path) -> PipelineSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError(f"cannot read spec file {path}: {exc}") from None
    return load_spec(text, base_dir=path.parent)


def load_spec(doc: str, base_dir: str | Path = ".") -> PipelineSpec:
    try:
        data = yaml.safe_load(doc)
    except yaml.YAMLError as exc:
        raise SpecError(f"spec is not well-formed YAML/JSON: {exc}") from None
    if not isinstance(data, dict):
        raise SpecError("spec root must be a mapping")
    data = _substitute(data, "spec", os.environ)

    version = _expect(data, "version", int, "spec")
    if version != SPEC_VERSION:
        raise SpecError(f"spec.version: expected {SPEC_VERSION}, got {version}")
    pipelines_doc = _expect(data, "pipelines", list, "spec")
    unknown = set(data) - {"version", "pipelines"}
    if unknown:
        raise SpecError(f"spec: unknown field {sorted(unknown)[0]!r}")
    if not pipelines_doc:
        raise SpecError("spec.pipelines: at least one pipeline is required")

    loader = _Loader(Path(base_dir))
    pipelines = []
    seen_ids = set()
    for index, pipeline_doc in enumerate(pipelines_doc):
        path = f"spec.pipelines[{index}]"
        if not isinstance(pipeline_doc, dict):
            raise SpecError(f"{path}: expected a mapping")
        pipeline = loader.pipeline(pipeline_doc, path)
        if pipeline.id in seen_ids:
            raise SpecError(f"{path}.id: duplicate pipeline id {pipeline.id!r}")
        seen_ids.add(pipeline.id)
        pipelines.append(pipeline)
    return PipelineSpec(version=version, pipelines=tuple(pipelines))


class _Loader:
    def __init__(self, base_dir: Path) -> None:
        self.base_dir = base_dir

    def resolve(self, name: str, path: str) -> Path:
        candidate = Path(name)
        if not candidate.is_absolute():
            candidate = self.base_dir / candidate
        if not candidate.is_file():
            raise SpecError(f"{path}: file not found: {candidate}")
        return candidate

    def pipeline(self, doc: dict, path: str) -> PipelineDef:
        unknown = set(doc) - {"id", "source", "steps", "sinks", "ordered"}
        if unknown:
            raise SpecError(f"{path}: unknown field {sorted(unknown)[0]!r}")
        pid = _expect(doc, "id", str, path)
        if not pid.strip():
            raise SpecError(f"{path}.id: must be non-empty")
        ordered = _expect(doc, "ordered", bool, path, required=False, default=True)

        source = self.connector(_expect(doc, "source", dict, path), f"{path}.source")
        if source.kind not in SOURCE_KINDS:
            raise SpecError(f"{path}.source.kind: {source.kind!r} is not source-capable")

        steps = []
        for i, step_doc in enumerate(_expect(doc, "steps", list, path, required=False, default=[])):
            steps.append(self.step(step_doc, f"{path}.steps[{i}]"))
        for i, step in enumerate(steps[:-1]):
            if isinstance(step, RouteStep):
                raise SpecError(f"{path}.steps[{i}]: route must be the last step")

        sinks = []
        for i, sink_doc in enumerate(_expect(doc, "sinks", list, path, required=False, default=[])):
            sink = self.connector(sink_doc, f"{path}.sinks[{i}]")
            if sink.kind not in SINK_KINDS:
                raise SpecError(f"{path}.sinks[{i}].kind: {sink.kind!r} is not sink-capable")
            sinks.append(sink)
        routed = bool(steps) and isinstance(steps[-1], RouteStep)
        if not sinks and not routed:
            raise SpecError(f"{path}.sinks: at least one sink is required (or a terminal route step)")
        return PipelineDef(id=pid, source=source, steps=tuple(steps), sinks=tuple(sinks), ordered=ordered)

    def connector(self, doc, path: str) -> ConnectorSpec:
        if not isinstance(doc, dict):
            raise SpecError(f"{path}: expected a mapping")
        unknown = set(doc) - {"kind", "params"}
        if unknown:
            raise SpecError(f"{path}: unknown field {sorted(unknown)[0]!r}")
        kind = _expect(doc, "kind", str, path)
        params = _expect(doc, "params", dict, path, required=False, default={})
        spec = ConnectorSpec(kind, params)
        try:
            validate_connector(spec)
        except ValueError as exc:
            raise SpecError(f"{path}: {exc}") from None
        return spec

    def step(self, doc, path: str):
        if not isinstance(doc, dict):
            raise SpecError(f"{path}: expected a mapping")
        unknown = set(doc) - {"kind", "params"}
        if unknown:
            raise SpecError(f"{path}: unknown field {sorted(unknown)[0]!r}")
        kind = _expect(doc, "kind", str, path)
        if kind not in STEP_KINDS:
            raise SpecError(f"{path}.kind: unknown step kind {kind!r}")
        params = _expect(doc, "params", dict, path, required=False, default={})
        builder = getattr(self, "step_" + kind.replace("-", "_"))
        return builder(dict(params), f"{path}.params")

    def _done(self, params: dict, path: str) -> None:
        if params:
            raise SpecError(f"{path}: unknown parameter {sorted(params)[0]!r}")

    def _mapping_source_name(self, mapping: MappingDocument, explicit, path: str) -> str:
        names = sorted(
            {
                tm.logical_source.source_ref
                for tm in mapping.maps.values()
                if tm.logical_source.source_ref != CONTEXT_SOURCE
            }
        )
        if explicit is not None:
            if explicit not in names:
                raise SpecError(f"{path}: rules never reference source {explicit!r}")
            return explicit
        if len(names) != 1:
            raise SpecError(f"{path}: rules reference sources {names}; set the 'source' parameter")
        return names[0]

    def step_lift(self, params: dict, path: str) -> LiftStep:
        rules_path = self.resolve(_expect(params, "rules", str, path), f"{path}.rules")
        try:
            mapping = load_mapping_file(str(rules_path))
        except MappingError as exc:
            raise SpecError(f"{path}.rules: {exc}") from None
        source = self._mapping_source_name(mapping, params.pop("source", None), f"{path}.source")
        fmt = self._format(params, path)
        params.pop("rules")
        self._done(params, path)
        return LiftStep(mapping=mapping, source_name=source, format=fmt)

    def step_lower(self, params: dict, path: str) -> LowerStep:
        template_path = self.resolve(_expect(params, "template", str, path), f"{path}.template")
        try:
            template = load_template_file(str(template_path))
        except MappingError as exc:
            raise SpecError(f"{path}.template: {exc}") from None
        content_type = params.pop("content-type", "text/plain")
        params.pop("template")
        self._done(params, path)
        return LowerStep(template=template, content_type=content_type)

    def step_chain(self, params: dict, path: str) -> ChainStep:
        stage_docs = _expect(params, "stages", list, path)
        if not stage_docs:
            raise SpecError(f"{path}.stages: at least one stage is required")
        stages = []
        source_names = set()
        for i, stage in enumerate(stage_docs):
            stage_path = f"{path}.stages[{i}]"
            if not isinstance(stage, dict) or len(stage) != 1:
                raise SpecError(f"{stage_path}: expected exactly one of rules/template")
            key, name = next(iter(stage.items()))
            file_path = self.resolve(str(name), stage_path)
            try:
                if key == "rules":
                    mapping = load_mapping_file(str(file_path))
                    stages.append(mapping)
                    source_names.update(
                        tm.logical_source.source_ref
                        for tm in mapping.maps.values()
                        if tm.logical_source.source_ref != CONTEXT_SOURCE
                    )
                elif key == "template":
                    stages.append(load_template_file(str(file_path)))
                else:
                    raise SpecError(f"{stage_path}: expected rules or template, got {key!r}")
            except MappingError as exc:
                raise SpecError(f"{stage_path}: {exc}") from None
        explicit = params.pop("source", None)
        if explicit is not None:
            if explicit not in source_names:
                raise SpecError(f"{path}.source: stages never reference source {explicit!r}")
            source = explicit
        elif len(source_names) == 1:
            source = source_names.pop()
        else:
            raise SpecError(
                f"{path}.source: stages reference sources {sorted(source_names)}; set the 'source' parameter"
            )
        fmt = self._format(params, path)
        content_type = params.pop("content-type", "text/plain")
        params.pop("stages")
        self._done(params, path)
        return ChainStep(stages=tuple(stages), source_name=source, format=fmt, content_type=content_type)

    def _format(self, params: dict, path: str) -> str | None:
        fmt = params.pop("format", None)
        if fmt is not None and fmt not in ("json", "xml", "csv"):
            raise SpecError(f"{path}.format: expected json, xml, or csv, got {fmt!r}")
        return fmt

    def _predicate(self, text, path: str):
        try:
            return parse_predicate(text)
        except PredicateError as exc:
            raise SpecError(f"{path}: {exc}") from None

    def step_filter(self, params: dict, path: str) -> FilterStep:
        text = _expect(params, "predicate", str, path)
        predicate = self._predicate(text, f"{path}.predicate")
        params.pop("predicate")
        self._done(params, path)
        return FilterStep(predicate=predicate, source=text)

    def step_route(self, params: dict, path: str) -> RouteStep:
        branch_docs = _expect(params, "branches", list, path)
        params.pop("branches")
        self._done(params, path)
        branches = []
        saw_otherwise = False
        for i, branch_doc in enumerate(branch_docs):
            branch_path = f"{path}.branches[{i}]"
            if not isinstance(branch_doc, dict):
                raise SpecError(f"{branch_path}: expected a mapping")
            unknown = set(branch_doc) - {"when", "to"}
            if unknown:
                raise SpecError(f"{branch_path}: unknown field {sorted(unknown)[0]!r}")
            when = _expect(branch_doc, "when", str, branch_path)
            sink = self.connector(_expect(branch_doc, "to", dict, branch_path), f"{branch_path}.to")
            if sink.kind not in SINK_KINDS:
                raise SpecError(f"{branch_path}.to.kind: {sink.kind!r} is not sink-capable")
            if when == "otherwise":
                if i != len(branch_docs) - 1:
                    raise SpecError(f"{branch_path}.when: otherwise must be the last branch")
                saw_otherwise = True
                branches.append(RouteBranch(predicate=None, sink=sink, when=when))
            else:
                branches.append(
                    RouteBranch(predicate=self._predicate(when, f"{branch_path}.when"), sink=sink, when=when)
                )
        if not saw_otherwise:
            raise SpecError(f"{path}.branches: an otherwise branch is required")
        return RouteStep(branches=tuple(branches))

    def step_split(self, params: dict, path: str) -> SplitStep:
        text = _expect(params, "path", str, path)
        try:
            json_path = parse_jsonpath(text)
        except PathError as exc:
            raise SpecError(f"{path}.path: {exc}") from None
        params.pop("path")
        self._done(params, path)
        return SplitStep(path=json_path)

    def step_aggregate(self, params: dict, path: str) -> AggregateStep:
        batch = params.pop("batch-size", None)
        timeout = params.pop("timeout-millis", None)
        by = params.pop("by", "correlation-id")
        self._done(params, path)
        for name, value in (("batch-size", batch), ("timeout-millis", timeout)):
            if value is not None and (isinstance(value, bool) or not isinstance(value, int) or value < 1):
                raise SpecError(f"{path}.{name}: must be a positive integer")
        if batch is None and timeout is None:
            raise SpecError(f"{path}: aggregate needs batch-size and/or timeout-millis")
        if not isinstance(by, str) or not by.strip():
            raise SpecError(f"{path}.by: must be a header name")
        return AggregateStep(batch_size=batch, timeout_millis=timeout, by=by)

    def step_multicast(self, params: dict, path: str) -> MulticastStep:
        to_docs = _expect(params, "to", list, path)
        params.pop("to")
        self._done(params, path)
        if not to_docs:
            raise SpecError(f"{path}.to: at least one sink is required")
        sinks = []
        for i, sink_doc in enumerate(to_docs):
            sink = self.connector(sink_doc, f"{path}.to[{i}]")
            if sink.kind not in SINK_KINDS:
                raise SpecError(f"{path}.to[{i}].kind: {sink.kind!r} is not sink-capable")
            sinks.append(sink)
        return MulticastStep(sinks=tuple(sinks))

    def step_enrich(self, params: dict, path: str) -> EnrichStep:
        query_file = params.pop("query", None)
        inline = params.pop("construct", None)
        if (query_file is None) == (inline is None):
            raise SpecError(f"{path}: enrich needs exactly one of 'query' (file) or 'construct' (inline)")
        if query_file is not None:
            inline = self.resolve(str(query_file), f"{path}.query").read_text(encoding="utf-8")
        try:
            parsed = parse_query(inline)
        except Exception as exc:
            raise SpecError(f"{path}: bad query: {exc}") from None
        if parsed.form != "construct":
            raise SpecError(f"{path}: enrich query must be a CONSTRUCT")
        dataset_file = params.pop("dataset", None)
        kgr_url = params.pop("kgr", None)
        self._done(params, path)
        if (dataset_file is None) == (kgr_url is None):
            raise SpecError(f"{path}: enrich needs exactly one of 'dataset' (file) or 'kgr' (URL)")
        dataset = None
        if dataset_file is not None:
            from ..rdf import parse as parse_rdf

            resolved = self.resolve(str(dataset_file), f"{path}.dataset")
            fmt = "nquads" if resolved.suffix == ".nq" else "turtle"
            try:
                dataset = parse_rdf(resolved.read_text(encoding="utf-8"), format=fmt)
            except Exception as exc:
                raise SpecError(f"{path}.dataset: {exc}") from None
        return EnrichStep(query=inline, dataset=dataset, kgr_url=kgr_url)

    def step_fuse(self, params: dict, path: str) -> FuseStep:
        config_path = self.resolve(_expect(params, "config", str, path), f"{path}.config")
        try:
            config, origin = load_fusion_config(config_path.read_bytes())
        except FusionError as exc:
            raise SpecError(f"{path}.config: {exc}") from None
        vocab_file = params.pop("vocab", None)
        vocab = None
        if vocab_file is not None:
            resolved = self.resolve(str(vocab_file), f"{path}.vocab")
            try:
                vocab = load_vocab_profile(resolved.read_bytes())
            except FusionError as exc:
                raise SpecError(f"{path}.vocab: {exc}") from None
        params.pop("config")
        self._done(params, path)
        if vocab is None:
            return FuseStep(config=config, origin=origin)
        return FuseStep(config=config, origin=origin, vocab=vocab)

    def step_set_header(self, params: dict, path: str) -> SetHeaderStep:
        name = _expect(params, "name", str, path)
        value = _expect(params, "value", str, path)
        params.pop("name")
        params.pop("value")
        self._done(params, path)
        if not name.strip():
            raise SpecError(f"{path}.name: must be non-empty")
        return SetHeaderStep(name=name, value=value)


__all__ = ["PipelineDef", "PipelineSpec", "SPEC_VERSION", "SpecError", "load_spec", "load_spec_file"]
