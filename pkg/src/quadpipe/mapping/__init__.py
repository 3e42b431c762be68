"""Declarative lifting and lowering between RDF and JSON/XML/CSV."""

from .chain import chain
from .context import MappingContext, Transform
from .paths import PathError, parse_jsonpath, parse_xpath
from .rml import (
    CONTEXT_SOURCE,
    MappingDocument,
    MappingError,
    MappingExecutionError,
    MappingLoadError,
    Template,
    TriplesMap,
    lift,
    load_mapping,
    load_mapping_file,
    parse_template,
)
from .sources import SourceDocument, SourceError
from .template import (
    LoweringTemplate,
    TemplateLoadError,
    TemplateRenderError,
    load_template,
    load_template_file,
    lower,
)

__all__ = [
    "CONTEXT_SOURCE",
    "LoweringTemplate",
    "MappingContext",
    "MappingDocument",
    "MappingError",
    "MappingExecutionError",
    "MappingLoadError",
    "PathError",
    "SourceDocument",
    "SourceError",
    "Template",
    "TemplateLoadError",
    "TemplateRenderError",
    "Transform",
    "TriplesMap",
    "chain",
    "lift",
    "load_mapping",
    "load_mapping_file",
    "load_template",
    "load_template_file",
    "lower",
    "parse_jsonpath",
    "parse_template",
    "parse_xpath",
]
