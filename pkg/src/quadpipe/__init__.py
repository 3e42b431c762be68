"""Composable semantic data pipelines: RDF core, declarative mappings,
connectors, a pipeline runtime, and a knowledge graph repository service.
"""

__version__ = "0.1.0"
