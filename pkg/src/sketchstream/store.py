"""Bounded in-memory adjacency over all live graphs.

Nodes are keyed by ``(graph_id, node_id)``. Each node keeps its outgoing
edges ordered by ``(timestamp, arrival_seq)`` and its incoming edges in
arrival order. When the total number of resident edges would exceed the
capacity, edges are evicted: pick the node whose most recent incident
edge is oldest (ties broken by node key), drop that node's oldest
incident edge, and repeat until back under capacity. Nodes left with no
incident edges are forgotten entirely, including their type.

The store is single-writer: exactly one stream-processing context may
mutate it, and a prepared edge must be inserted before the next edge is
prepared.
"""

from __future__ import annotations

import heapq
from bisect import insort
from dataclasses import dataclass, field
from typing import Iterator

from .records import EdgeRecord

NodeKey = tuple[int, int]  # (graph_id, node_id)


class NodeTypeConflictError(ValueError):
    """A node reappeared with a different type symbol."""

    def __init__(self, node: NodeKey, existing: str, proposed: str):
        super().__init__(
            f"node {node} already has type {existing!r}, edge proposes {proposed!r}"
        )
        self.node = node
        self.existing = existing
        self.proposed = proposed


@dataclass(slots=True, eq=False)
class StoredEdge:
    source: NodeKey
    dest: NodeKey
    edge_type: str
    timestamp: int
    arrival_seq: int

    @property
    def order_key(self) -> tuple[int, int]:
        return (self.timestamp, self.arrival_seq)


@dataclass(slots=True, frozen=True)
class PendingEdge:
    """An edge validated and sequenced but not yet inserted."""

    edge: StoredEdge
    source_type: str
    dest_type: str


@dataclass(slots=True)
class InsertOutcome:
    new_source: bool
    new_dest: bool
    evicted: list[StoredEdge] = field(default_factory=list)


class _Node:
    __slots__ = ("type", "out", "inc", "touched")

    def __init__(self, node_type: str, touched: int):
        self.type = node_type
        self.out: list[StoredEdge] = []
        self.inc: list[StoredEdge] = []
        self.touched = touched


_EMPTY: list[StoredEdge] = []


class GraphStore:
    """Adjacency store with a hard cap on resident edges.

    ``capacity`` of ``None`` disables eviction.
    """

    def __init__(self, capacity: int | None = None):
        if capacity is not None and capacity < 1:
            raise ValueError("capacity must be positive or None")
        self.capacity = capacity
        self.total_edges = 0
        self.peak_edges = 0
        self._nodes: dict[NodeKey, _Node] = {}
        self._graphs: dict[int, set[NodeKey]] = {}
        self._seq = 0
        # Lazy-deletion min-heap of (touched, node key); stale entries are
        # skipped when popped.
        self._lru: list[tuple[int, NodeKey]] = []

    # -- queries ---------------------------------------------------------

    def __len__(self) -> int:
        return self.total_edges

    def has_node(self, node: NodeKey) -> bool:
        return node in self._nodes

    def node_type(self, node: NodeKey) -> str | None:
        entry = self._nodes.get(node)
        return entry.type if entry is not None else None

    def last_touched(self, node: NodeKey) -> int | None:
        entry = self._nodes.get(node)
        return entry.touched if entry is not None else None

    def out_edges(self, node: NodeKey) -> list[StoredEdge]:
        """Outgoing edges in ``(timestamp, arrival_seq)`` order.

        Returns the live internal list for speed; callers must not mutate
        it. Unknown nodes yield an empty list.
        """
        entry = self._nodes.get(node)
        return entry.out if entry is not None else _EMPTY

    def in_edges(self, node: NodeKey) -> list[StoredEdge]:
        entry = self._nodes.get(node)
        return entry.inc if entry is not None else _EMPTY

    def graph_ids(self) -> list[int]:
        return sorted(self._graphs)

    def graph_nodes(self, graph_id: int) -> list[NodeKey]:
        return sorted(self._graphs.get(graph_id, ()))

    def iter_edges(self) -> Iterator[StoredEdge]:
        for entry in self._nodes.values():
            yield from entry.out

    def reverse_reach(self, node: NodeKey, depth: int) -> set[NodeKey]:
        """All nodes with a directed path to ``node`` of length <= depth.

        Always contains ``node`` itself, whether or not it is stored.
        """
        if depth < 0:
            raise ValueError("depth must be non-negative")
        seen = {node}
        frontier = [node]
        for _ in range(depth):
            next_frontier = []
            for current in frontier:
                for edge in self.in_edges(current):
                    if edge.source not in seen:
                        seen.add(edge.source)
                        next_frontier.append(edge.source)
            if not next_frontier:
                break
            frontier = next_frontier
        return seen

    # -- mutation --------------------------------------------------------

    def add_node(self, node: NodeKey, node_type: str) -> bool:
        """Register a node without edges; returns True if it was new."""
        existing = self._nodes.get(node)
        if existing is not None:
            if existing.type != node_type:
                raise NodeTypeConflictError(node, existing.type, node_type)
            return False
        self._nodes[node] = _Node(node_type, self._seq)
        self._graphs.setdefault(node[0], set()).add(node)
        return True

    def prepare_edge(self, rec: EdgeRecord) -> PendingEdge:
        """Validate type consistency and assign the next arrival sequence.

        Does not mutate adjacency; the returned edge must be passed to
        :meth:`insert_prepared` before any further edge is prepared.
        """
        source: NodeKey = (rec.graph_id, rec.source_id)
        dest: NodeKey = (rec.graph_id, rec.dest_id)
        if source == dest and rec.source_type != rec.dest_type:
            raise NodeTypeConflictError(source, rec.source_type, rec.dest_type)
        for node, proposed in ((source, rec.source_type), (dest, rec.dest_type)):
            entry = self._nodes.get(node)
            if entry is not None and entry.type != proposed:
                raise NodeTypeConflictError(node, entry.type, proposed)
        edge = StoredEdge(source, dest, rec.edge_type, rec.timestamp, self._seq + 1)
        return PendingEdge(edge, rec.source_type, rec.dest_type)

    def insert(self, rec: EdgeRecord) -> InsertOutcome:
        return self.insert_prepared(self.prepare_edge(rec))

    def insert_prepared(self, pending: PendingEdge) -> InsertOutcome:
        edge = pending.edge
        if edge.arrival_seq != self._seq + 1:
            raise RuntimeError("stale prepared edge; prepare and insert must alternate")
        self._seq += 1

        new_source = self._register(edge.source, pending.source_type)
        new_dest = self._register(edge.dest, pending.dest_type)

        source_node = self._nodes[edge.source]
        out = source_node.out
        if out and edge.order_key < out[-1].order_key:
            insort(out, edge, key=lambda e: e.order_key)
        else:
            out.append(edge)
        self._nodes[edge.dest].inc.append(edge)
        self.total_edges += 1

        for node in (edge.source, edge.dest):
            self._nodes[node].touched = edge.arrival_seq
            heapq.heappush(self._lru, (edge.arrival_seq, node))

        evicted: list[StoredEdge] = []
        if self.capacity is not None:
            while self.total_edges > self.capacity:
                evicted.append(self._evict_one())
        self.peak_edges = max(self.peak_edges, self.total_edges)
        return InsertOutcome(new_source, new_dest, evicted)

    def _register(self, node: NodeKey, node_type: str) -> bool:
        entry = self._nodes.get(node)
        if entry is not None:
            # prepare_edge already rejected conflicts.
            return False
        self._nodes[node] = _Node(node_type, self._seq)
        self._graphs.setdefault(node[0], set()).add(node)
        return True

    def _evict_one(self) -> StoredEdge:
        while self._lru:
            touched, key = heapq.heappop(self._lru)
            entry = self._nodes.get(key)
            if entry is None or entry.touched != touched:
                continue
            if not entry.out and not entry.inc:
                continue
            victim = min(
                entry.out + entry.inc if entry.out and entry.inc
                else (entry.out or entry.inc),
                key=lambda e: e.arrival_seq,
            )
            self._remove_edge(victim)
            if key in self._nodes:
                heapq.heappush(self._lru, (touched, key))
            return victim
        raise RuntimeError("eviction requested but no node holds edges")

    def _remove_edge(self, edge: StoredEdge) -> None:
        self._nodes[edge.source].out.remove(edge)
        self._nodes[edge.dest].inc.remove(edge)
        self.total_edges -= 1
        for node in {edge.source, edge.dest}:
            entry = self._nodes[node]
            if not entry.out and not entry.inc:
                del self._nodes[node]
                graph = self._graphs[node[0]]
                graph.discard(node)
                if not graph:
                    del self._graphs[node[0]]
