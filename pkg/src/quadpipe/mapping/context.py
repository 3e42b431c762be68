"""Shared state threaded through multi-step mapping runs.

The context carries everything a later step may need from an earlier one:
the accumulated output graph, a write-once table of named values (alias
tables, namespace registries), registered value transforms, and free-form
diagnostics.
"""

from __future__ import annotations

from typing import Callable

from ..rdf import Dataset

Transform = Callable[[str, "MappingContext"], str | None]


class MappingContext:
    __slots__ = ("context_graph", "named_values", "transforms", "diagnostics")

    def __init__(self) -> None:
        self.context_graph = Dataset()
        self.named_values: dict[str, str] = {}
        self.transforms: dict[str, Transform] = {}
        self.diagnostics: list[str] = []

    def set_value(self, key: str, value: str) -> None:
        """Record a named value; keys are write-once."""
        existing = self.named_values.get(key)
        if existing is not None and existing != value:
            raise ValueError(f"named value {key!r} already set to {existing!r}, refusing {value!r}")
        self.named_values[key] = value

    def register_transform(self, name: str, fn: Transform) -> None:
        if name in self.transforms:
            raise ValueError(f"transform {name!r} already registered")
        self.transforms[name] = fn

    def note(self, text: str) -> None:
        self.diagnostics.append(text)


__all__ = ["MappingContext", "Transform"]
