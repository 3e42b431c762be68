"""Dataset isomorphism under blank-node relabeling.

Blank nodes are assigned canonical labels by iterated signature
refinement; when refinement leaves indistinguishable blanks (automorphic
structures), each member of the smallest ambiguous class is individuated
in turn and the lexicographically smallest canonical form wins.
"""

from __future__ import annotations

from hashlib import sha256

from .dataset import Dataset
from .terms import BlankNode, DEFAULT_GRAPH, Quad, Term
from .serialize import graph_text, term_text


def _hash(value: str) -> str:
    return sha256(value.encode("utf-8")).hexdigest()


def _term_sig(term: Term, colors: dict[BlankNode, str]) -> str:
    if isinstance(term, BlankNode):
        return "~" + colors[term]
    return term_text(term)


def _quad_sig(q: Quad, colors: dict[BlankNode, str]) -> str:
    return " ".join(
        (
            _term_sig(q.subject, colors),
            _term_sig(q.predicate, colors),
            _term_sig(q.object, colors),
            graph_text(q.graph),
        )
    )


def _refine(quads: list[Quad], colors: dict[BlankNode, str]) -> dict[BlankNode, str]:
    """Recolor blanks from the multiset of signatures of quads touching them."""
    for _ in range(len(colors) + 1):
        occurrences: dict[BlankNode, list[str]] = {b: [] for b in colors}
        for q in quads:
            sig = _quad_sig(q, colors)
            if isinstance(q.subject, BlankNode):
                occurrences[q.subject].append("s" + sig)
            if isinstance(q.object, BlankNode):
                occurrences[q.object].append("o" + sig)
        new = {b: _hash(colors[b] + "|" + "|".join(sorted(occ))) for b, occ in occurrences.items()}
        if _partition(new) == _partition(colors):
            return new
        colors = new
    return colors


def _partition(colors: dict[BlankNode, str]) -> list[tuple[str, ...]]:
    groups: dict[str, list[str]] = {}
    for b, c in colors.items():
        groups.setdefault(c, []).append(b.label)
    return sorted(tuple(sorted(v)) for v in groups.values())


def _canonical_lines(quads: list[Quad], colors: dict[BlankNode, str]) -> tuple[str, ...]:
    return tuple(sorted(_quad_sig(q, colors) for q in quads))


def _canonicalize(quads: list[Quad], colors: dict[BlankNode, str]) -> tuple[tuple[str, ...], dict[BlankNode, str]]:
    colors = _refine(quads, colors)
    classes: dict[str, list[BlankNode]] = {}
    for b, c in colors.items():
        classes.setdefault(c, []).append(b)
    ambiguous = sorted(
        (c for c, members in classes.items() if len(members) > 1),
    )
    if not ambiguous:
        return _canonical_lines(quads, colors), colors
    # individuate each member of the smallest ambiguous class; keep the
    # lexicographically smallest outcome
    target = min(ambiguous, key=lambda c: (len(classes[c]), c))
    best: tuple[tuple[str, ...], dict[BlankNode, str]] | None = None
    for member in sorted(classes[target], key=lambda b: b.label):
        trial = dict(colors)
        trial[member] = _hash(colors[member] + "!pick")
        result = _canonicalize(quads, trial)
        if best is None or result[0] < best[0]:
            best = result
    assert best is not None
    return best


def canonical_form(ds: Dataset) -> tuple[str, ...]:
    """Order-independent canonical encoding; equal iff datasets are isomorphic."""
    quads = list(ds)
    blanks = {t for q in quads for t in (q.subject, q.object) if isinstance(t, BlankNode)}
    if not blanks:
        return tuple(sorted(_quad_sig(q, {}) for q in quads))
    colors = {b: "init" for b in blanks}
    lines, _ = _canonicalize(quads, colors)
    return lines


def canonical_labels(ds: Dataset) -> dict[BlankNode, str]:
    """Map each blank node to its canonical label c0, c1, ..."""
    quads = list(ds)
    blanks = {t for q in quads for t in (q.subject, q.object) if isinstance(t, BlankNode)}
    if not blanks:
        return {}
    _, colors = _canonicalize(quads, {b: "init" for b in blanks})
    ordered = sorted(blanks, key=lambda b: (colors[b], b.label))
    return {b: f"c{i}" for i, b in enumerate(ordered)}


def isomorphic(a: Dataset, b: Dataset) -> bool:
    if len(a) != len(b):
        return False
    return canonical_form(a) == canonical_form(b)
