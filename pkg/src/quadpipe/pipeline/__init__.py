"""Declarative pipeline runtime: spec loading, processors, engine, metrics."""

from .engine import Engine, run
from .metrics import BUCKET_BOUNDS, MetricsRegistry
from .predicates import PredicateError, parse_predicate
from .spec import PipelineDef, PipelineSpec, SPEC_VERSION, SpecError, load_spec, load_spec_file
from .steps import STEP_KINDS, StepError, combine

__all__ = [
    "BUCKET_BOUNDS",
    "Engine",
    "MetricsRegistry",
    "PipelineDef",
    "PipelineSpec",
    "PredicateError",
    "SPEC_VERSION",
    "STEP_KINDS",
    "SpecError",
    "StepError",
    "combine",
    "load_spec",
    "load_spec_file",
    "parse_predicate",
    "run",
]
