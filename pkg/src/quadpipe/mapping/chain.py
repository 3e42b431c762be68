"""Multi-step mapping runs over a shared context.

Each lifting step's output is unioned into the context graph before the
next step runs, so later steps can join against everything produced so
far (via the reserved "context" source). A lowering step renders the
accumulated context graph and must come last. Step errors are re-raised
with the step index prepended.
"""

from __future__ import annotations

from ..rdf import Dataset
from .context import MappingContext
from .rml import MappingDocument, MappingError, lift
from .template import LoweringTemplate, lower


def chain(
    steps: list,
    sources: dict,
    ctx: MappingContext | None = None,
    union_default_graph: bool = False,
):
    """Run mapping steps in order; returns the final step's output."""
    if not steps:
        raise MappingError("chain needs at least one step")
    if ctx is None:
        ctx = MappingContext()
    result = None
    for index, step in enumerate(steps):
        if isinstance(step, LoweringTemplate):
            if index != len(steps) - 1:
                raise MappingError(f"step {index}: a lowering step must be the last step")
            try:
                result = lower(step, ctx.context_graph, union_default_graph=union_default_graph)
            except MappingError as exc:
                raise type(exc)(f"step {index}: {exc}") from None
        elif isinstance(step, MappingDocument):
            try:
                out = lift(step, sources, ctx)
            except MappingError as exc:
                raise type(exc)(f"step {index}: {exc}") from None
            ctx.context_graph.update(out)
            result = out
        else:
            raise MappingError(f"step {index}: not a mapping document or lowering template")
    return result


__all__ = ["chain"]
