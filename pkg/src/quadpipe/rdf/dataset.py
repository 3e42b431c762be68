"""In-memory named-graph quad store.

Set semantics throughout: adding an existing quad is a no-op and sizes
never count duplicates. Lookups go through per-graph subject/predicate/
object indexes (graph-first composite indexes). A reader-writer lock
gives many concurrent readers or one writer; `read_lock()` lets a query
evaluation hold a consistent snapshot for its whole run.
"""

from __future__ import annotations

import threading
from typing import Iterable, Iterator

from .terms import DEFAULT_GRAPH, GraphLabel, IRI, Quad, Term

# wildcard marker for pattern positions (distinct from DEFAULT_GRAPH)
ANY = None


class _RWLock:
    """Reader-writer lock, write-preferring, reentrant for readers."""

    def __init__(self) -> None:
        self._cond = threading.Condition()
        self._readers = 0
        self._writer: int | None = None
        self._local = threading.local()

    def _held_reads(self) -> int:
        return getattr(self._local, "reads", 0)

    def acquire_read(self) -> None:
        me = threading.get_ident()
        with self._cond:
            if self._writer == me or self._held_reads() > 0:
                self._local.reads = self._held_reads() + 1
                return
            while self._writer is not None:
                self._cond.wait()
            self._readers += 1
        self._local.reads = 1

    def release_read(self) -> None:
        reads = self._held_reads()
        if reads > 1 or self._writer == threading.get_ident():
            self._local.reads = max(0, reads - 1)
            return
        self._local.reads = 0
        with self._cond:
            self._readers -= 1
            if self._readers == 0:
                self._cond.notify_all()

    def acquire_write(self) -> None:
        me = threading.get_ident()
        with self._cond:
            if self._writer == me:
                raise RuntimeError("write lock is not reentrant")
            if self._held_reads() > 0:
                raise RuntimeError("cannot upgrade a read lock to a write lock")
            while self._writer is not None or self._readers > 0:
                self._cond.wait()
            self._writer = me

    def release_write(self) -> None:
        with self._cond:
            self._writer = None
            self._cond.notify_all()


class _ReadLockContext:
    def __init__(self, lock: _RWLock) -> None:
        self._lock = lock

    def __enter__(self) -> "_ReadLockContext":
        self._lock.acquire_read()
        return self

    def __exit__(self, *exc: object) -> None:
        self._lock.release_read()


class Dataset:
    """A mutable set of quads with named-graph indexing."""

    __slots__ = ("_graphs", "_idx_s", "_idx_p", "_idx_o", "_size", "_lock")

    def __init__(self, quads: Iterable[Quad] = ()) -> None:
        # graph label -> set[Quad]; index dicts are graph -> term -> set[Quad]
        self._graphs: dict[GraphLabel, set[Quad]] = {}
        self._idx_s: dict[GraphLabel, dict[Term, set[Quad]]] = {}
        self._idx_p: dict[GraphLabel, dict[Term, set[Quad]]] = {}
        self._idx_o: dict[GraphLabel, dict[Term, set[Quad]]] = {}
        self._size = 0
        self._lock = _RWLock()
        for q in quads:
            self.add(q)

    # -- locking ---------------------------------------------------------

    def read_lock(self) -> _ReadLockContext:
        """Context manager holding the read side for a consistent snapshot."""
        return _ReadLockContext(self._lock)

    # -- mutation --------------------------------------------------------

    def add(self, quad: Quad) -> bool:
        """Insert a quad; returns False if it was already present."""
        self._lock.acquire_write()
        try:
            g = quad.graph
            existing = self._graphs.get(g)
            if existing is not None and quad in existing:
                return False
            if existing is None:
                existing = set()
                self._graphs[g] = existing
                self._idx_s[g] = {}
                self._idx_p[g] = {}
                self._idx_o[g] = {}
            existing.add(quad)
            self._idx_s[g].setdefault(quad.subject, set()).add(quad)
            self._idx_p[g].setdefault(quad.predicate, set()).add(quad)
            self._idx_o[g].setdefault(quad.object, set()).add(quad)
            self._size += 1
            return True
        finally:
            self._lock.release_write()

    def discard(self, quad: Quad) -> bool:
        """Remove a quad if present; returns True when something was removed."""
        self._lock.acquire_write()
        try:
            g = quad.graph
            existing = self._graphs.get(g)
            if existing is None or quad not in existing:
                return False
            existing.remove(quad)
            for idx, key in (
                (self._idx_s, quad.subject),
                (self._idx_p, quad.predicate),
                (self._idx_o, quad.object),
            ):
                bucket = idx[g][key]
                bucket.remove(quad)
                if not bucket:
                    del idx[g][key]
            if not existing:
                self._drop_graph_entry(g)
            self._size -= 1
            return True
        finally:
            self._lock.release_write()

    def drop_graph(self, graph: GraphLabel) -> int:
        """Remove every quad labeled `graph`; returns the count removed."""
        self._lock.acquire_write()
        try:
            existing = self._graphs.get(graph)
            if existing is None:
                return 0
            n = len(existing)
            self._drop_graph_entry(graph)
            self._size -= n
            return n
        finally:
            self._lock.release_write()

    def _drop_graph_entry(self, graph: GraphLabel) -> None:
        self._graphs.pop(graph, None)
        self._idx_s.pop(graph, None)
        self._idx_p.pop(graph, None)
        self._idx_o.pop(graph, None)

    def update(self, quads: Iterable[Quad]) -> int:
        added = 0
        for q in quads:
            if self.add(q):
                added += 1
        return added

    # -- lookup ----------------------------------------------------------

    def __len__(self) -> int:
        return self._size

    def __iter__(self) -> Iterator[Quad]:
        with self.read_lock():
            snapshot = [q for quads in self._graphs.values() for q in quads]
        return iter(snapshot)

    def __contains__(self, quad: Quad) -> bool:
        with self.read_lock():
            existing = self._graphs.get(quad.graph)
            return existing is not None and quad in existing

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return set(self) == set(other)

    def __hash__(self) -> int:  # mutable container
        raise TypeError("Dataset is unhashable")

    def graphs(self) -> list[IRI]:
        """Labels of the non-empty named graphs (default graph excluded)."""
        with self.read_lock():
            return [g for g in self._graphs if isinstance(g, IRI)]

    def quads(
        self,
        subject: Term | None = ANY,
        predicate: Term | None = ANY,
        object: Term | None = ANY,
        graph: GraphLabel | None = ANY,
    ) -> list[Quad]:
        """All quads matching the pattern; ANY (None) positions are wildcards.

        `graph=DEFAULT_GRAPH` matches only the default graph; `graph=ANY`
        matches every graph including the default.
        """
        with self.read_lock():
            if graph is ANY:
                scopes = list(self._graphs.keys())
            elif graph in self._graphs:
                scopes = [graph]
            else:
                return []
            out: list[Quad] = []
            for g in scopes:
                # most selective available index first
                if subject is not ANY:
                    candidates = self._idx_s[g].get(subject, ())
                elif object is not ANY:
                    candidates = self._idx_o[g].get(object, ())
                elif predicate is not ANY:
                    candidates = self._idx_p[g].get(predicate, ())
                else:
                    candidates = self._graphs[g]
                for q in candidates:
                    if subject is not ANY and q.subject != subject:
                        continue
                    if predicate is not ANY and q.predicate != predicate:
                        continue
                    if object is not ANY and q.object != object:
                        continue
                    out.append(q)
            return out

    def copy(self) -> "Dataset":
        with self.read_lock():
            return Dataset(q for quads in self._graphs.values() for q in quads)

    def __repr__(self) -> str:
        return f"Dataset({self._size} quads, {len(self.graphs())} named graphs)"
