"""Shingles: strings summarizing a node's ordered local neighborhood.

A node's shingle starts with its own type symbol. A breadth-first
traversal then expands each reached node's out-edges in
``(timestamp, arrival_seq)`` order, appending the edge type and the
destination type for every edge traversed, down to a fixed hop depth.
A node reached several times contributes its type once per traversed
edge, but its out-edges are expanded at most once per traversal.

Shingles are split into fixed-length chunks, which are the unit actually
counted and hashed. The per-edge delta of a graph is the multiset of
chunks added and removed by one arriving edge, computed for every node
whose shingle that edge can change: the nodes that reach the edge's
source within ``k - 1`` hops, plus the destination when it is new.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import Counter, deque
from dataclasses import dataclass
from typing import Iterable

from .store import GraphStore, NodeKey, PendingEdge, StoredEdge

ShingleVector = Counter  # chunk -> frequency; zero counts are never stored


def node_shingle(
    store: GraphStore,
    node: NodeKey,
    hops: int,
    pending: PendingEdge | None = None,
    include_pending: bool = False,
) -> str:
    """Build the depth-limited ordered-traversal shingle of ``node``.

    With ``include_pending`` the pending edge participates as if already
    inserted (at its sorted position in its source's out-edges); otherwise
    it is ignored entirely. ``node`` must be stored or be an endpoint of
    the pending edge.
    """
    if hops < 1:
        raise ValueError("hops must be at least 1")
    pending_edge = pending.edge if (pending is not None and include_pending) else None

    def type_of(key: NodeKey) -> str:
        entry = store.node_type(key)
        if entry is not None:
            return entry
        if pending is not None:
            if key == pending.edge.source:
                return pending.source_type
            if key == pending.edge.dest:
                return pending.dest_type
        raise KeyError(f"unknown node {key}")

    def out_of(key: NodeKey) -> list[StoredEdge]:
        base = store.out_edges(key)
        if pending_edge is None or key != pending_edge.source:
            return base
        idx = bisect_right([e.order_key for e in base], pending_edge.order_key)
        return base[:idx] + [pending_edge] + base[idx:]

    if hops == 1:
        parts = [type_of(node)]
        for edge in out_of(node):
            parts.append(edge.edge_type)
            parts.append(type_of(edge.dest))
        return "".join(parts)

    parts = [type_of(node)]
    expanded: set[NodeKey] = set()
    queue: deque[tuple[NodeKey, int]] = deque([(node, 0)])
    while queue:
        current, depth = queue.popleft()
        if depth >= hops or current in expanded:
            continue
        expanded.add(current)
        for edge in out_of(current):
            parts.append(edge.edge_type)
            parts.append(type_of(edge.dest))
            queue.append((edge.dest, depth + 1))
    return "".join(parts)


def chunk_shingle(shingle: str, chunk_length: int) -> list[str]:
    """Split into consecutive chunks of ``chunk_length``; the last may be shorter."""
    if chunk_length < 1:
        raise ValueError("chunk_length must be at least 1")
    if not shingle:
        raise ValueError("shingle must not be empty")
    return [shingle[i : i + chunk_length] for i in range(0, len(shingle), chunk_length)]


@dataclass(frozen=True)
class ChunkDelta:
    """Chunks entering and leaving a graph's shingle multiset.

    The two sides are disjoint: chunks appearing on both with equal
    multiplicity cancel at construction.
    """

    incoming: Counter
    outgoing: Counter

    @classmethod
    def cancelled(cls, incoming: Iterable[str], outgoing: Iterable[str]) -> "ChunkDelta":
        net: dict[str, int] = {}
        for chunk in incoming:
            net[chunk] = net.get(chunk, 0) + 1
        for chunk in outgoing:
            net[chunk] = net.get(chunk, 0) - 1
        plus = Counter({c: n for c, n in net.items() if n > 0})
        minus = Counter({c: -n for c, n in net.items() if n < 0})
        return cls(plus, minus)

    def is_empty(self) -> bool:
        return not self.incoming and not self.outgoing


def edge_delta(store: GraphStore, pending: PendingEdge, hops: int, chunk_length: int) -> ChunkDelta:
    """Chunk delta caused by inserting ``pending`` into the store.

    Must be called before the edge is inserted. For every affected node,
    the pre-insertion shingle (omitted for brand-new nodes) goes out and
    the post-insertion shingle comes in; both sides are chunked and
    cancelled.
    """
    edge = pending.edge
    affected = store.reverse_reach(edge.source, hops - 1)
    if not store.has_node(edge.dest):
        affected.add(edge.dest)
    incoming: list[str] = []
    outgoing: list[str] = []
    for node in affected:
        if store.has_node(node):
            outgoing.extend(
                chunk_shingle(node_shingle(store, node, hops, pending, False), chunk_length)
            )
        incoming.extend(
            chunk_shingle(node_shingle(store, node, hops, pending, True), chunk_length)
        )
    return ChunkDelta.cancelled(incoming, outgoing)


def shingle_vector(store: GraphStore, graph_id: int, hops: int, chunk_length: int) -> Counter:
    """Chunk-frequency vector over all of one graph's node shingles.

    The batch counterpart of folding :func:`edge_delta` over the graph's
    edges; unknown graphs yield an empty vector.
    """
    counts: Counter = Counter()
    for node in store.graph_nodes(graph_id):
        counts.update(chunk_shingle(node_shingle(store, node, hops), chunk_length))
    return counts


def exact_cosine(a: Counter, b: Counter) -> float:
    """Cosine similarity of two non-negative count vectors.

    Both zero gives 1.0, exactly one zero gives 0.0. The result is clamped
    to [0, 1] against float round-off.
    """
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    if len(b) < len(a):
        a, b = b, a
    dot = sum(count * b[chunk] for chunk, count in a.items() if chunk in b)
    sq_a = sum(count * count for count in a.values())
    sq_b = sum(count * count for count in b.values())
    # One sqrt of the exact integer product: identical vectors give 1.0.
    return min(1.0, max(0.0, dot / math.sqrt(sq_a * sq_b)))


def exact_cosine_distance(a: Counter, b: Counter) -> float:
    return 1.0 - exact_cosine(a, b)
