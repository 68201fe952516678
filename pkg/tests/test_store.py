import numpy as np
import pytest

from sketchstream import GraphStore, NodeTypeConflictError

from conftest import edge, build_store


def test_insert_under_capacity_reports_new_nodes():
    store = GraphStore(capacity=10)
    outcome = store.insert(edge(1, "a", 2, "b", 1))
    assert outcome.new_source and outcome.new_dest
    assert outcome.evicted == []
    assert store.total_edges == 1
    outcome = store.insert(edge(1, "a", 3, "c", 2))
    assert not outcome.new_source and outcome.new_dest


def test_eviction_picks_oldest_edge_of_least_recently_touched_node():
    # e1 touches a,b at seq 1; e2 touches c,d at seq 2; e3 touches a,d at
    # seq 3. Node b has the stalest touch (1); its only edge is e1.
    store = GraphStore(capacity=2)
    store.insert(edge(0, "a", 1, "b", 1))  # a -> b
    store.insert(edge(2, "c", 3, "d", 2))  # c -> d
    outcome = store.insert(edge(0, "a", 3, "d", 3))  # a -> d
    assert len(outcome.evicted) == 1
    evicted = outcome.evicted[0]
    assert evicted.source == (0, 0) and evicted.dest == (0, 1)
    assert store.total_edges == 2
    assert not store.has_node((0, 1))  # b had no other edges; dropped


def test_type_conflict_is_rejected():
    store = GraphStore()
    store.insert(edge(1, "a", 2, "b", 1))
    with pytest.raises(NodeTypeConflictError) as exc:
        store.insert(edge(1, "z", 3, "c", 2))
    assert exc.value.node == (0, 1)
    # node types are scoped per graph: same id in another graph is fine
    store.insert(edge(1, "z", 3, "c", 2, graph_id=1))


def test_self_loop_type_conflict_is_rejected():
    store = GraphStore()
    with pytest.raises(NodeTypeConflictError):
        store.insert(edge(1, "a", 1, "b", 1))


def test_out_edges_sorted_by_timestamp_then_arrival():
    store = GraphStore()
    store.insert(edge(1, "a", 2, "b", 5))
    store.insert(edge(1, "a", 3, "c", 3))
    out = store.out_edges((0, 1))
    assert [e.timestamp for e in out] == [3, 5]
    assert store.out_edges((9, 9)) == []


def test_out_edges_ties_break_by_arrival_seq():
    store = GraphStore()
    store.insert(edge(1, "a", 2, "b", 3))
    store.insert(edge(9, "z", 8, "y", 1, graph_id=1))  # push the global seq
    store.insert(edge(1, "a", 3, "c", 3))
    out = store.out_edges((0, 1))
    assert [(e.timestamp, e.arrival_seq) for e in out] == [(3, 1), (3, 3)]


def test_out_edges_order_is_insertion_invariant(rng):
    base = [
        edge(0, "a", 1, "b", 4),
        edge(0, "a", 2, "c", 2),
        edge(0, "a", 3, "d", 2),
        edge(0, "a", 4, "e", 9),
        edge(0, "a", 5, "f", 1),
    ]
    reference = None
    for _ in range(6):
        order = rng.permutation(len(base))
        store = build_store(base[i] for i in order)
        got = [(e.timestamp, e.dest) for e in store.out_edges((0, 0))]
        timestamps = [t for t, _ in got]
        assert timestamps == sorted(timestamps)
        dests = {d for _, d in got}
        if reference is None:
            reference = dests
        assert dests == reference


def test_reverse_reach_zero_depth_is_identity():
    store = build_store([edge(1, "a", 2, "b", 1)])
    assert store.reverse_reach((0, 2), 0) == {(0, 2)}
    assert store.reverse_reach((5, 5), 0) == {(5, 5)}  # unknown node: itself


def test_reverse_reach_single_hop_chain():
    store = build_store([edge(1, "a", 2, "b", 1), edge(2, "b", 3, "c", 2)])
    assert store.reverse_reach((0, 3), 1) == {(0, 3), (0, 2)}


def test_reverse_reach_diamond_matches_brute_force():
    edges = [
        edge(0, "a", 1, "b", 1),
        edge(0, "a", 2, "c", 2),
        edge(1, "b", 3, "d", 3),
        edge(2, "c", 3, "d", 4),
    ]
    store = build_store(edges)
    # brute force all-pairs shortest paths over the 4-node graph
    nodes = [0, 1, 2, 3]
    dist = {(u, v): (0 if u == v else np.inf) for u in nodes for v in nodes}
    for rec in edges:
        dist[(rec.source_id, rec.dest_id)] = 1
    for k in nodes:
        for i in nodes:
            for j in nodes:
                dist[(i, j)] = min(dist[(i, j)], dist[(i, k)] + dist[(k, j)])
    for depth in range(4):
        expected = {(0, u) for u in nodes if dist[(u, 3)] <= depth}
        assert store.reverse_reach((0, 3), depth) == expected
    assert store.reverse_reach((0, 3), 2) == {(0, 3), (0, 1), (0, 2), (0, 0)}


def test_capacity_bound_holds_under_random_inserts(rng):
    capacity = 25
    store = GraphStore(capacity=capacity)
    timestamps = {}
    for i in range(400):
        graph = int(rng.integers(0, 3))
        timestamps[graph] = timestamps.get(graph, 0) + 1
        u = int(rng.integers(0, 30))
        v = int(rng.integers(0, 30))
        store.insert(
            edge(u, "t", v, "t", timestamps[graph], "E", graph_id=graph)
        )
        assert store.total_edges <= capacity
    assert store.peak_edges <= capacity
    # every stored edge is in exactly one out list and one in list
    out_edges = [e for g in store.graph_ids() for v in store.graph_nodes(g) for e in store.out_edges(v)]
    in_edges = [e for g in store.graph_ids() for v in store.graph_nodes(g) for e in store.in_edges(v)]
    assert len(out_edges) == store.total_edges
    assert len(in_edges) == store.total_edges
    assert {id(e) for e in out_edges} == {id(e) for e in in_edges}


def test_eviction_victim_has_globally_minimal_touch(rng):
    store = GraphStore(capacity=8)
    timestamp = 0
    for i in range(120):
        timestamp += 1
        u = int(rng.integers(0, 12))
        v = int(rng.integers(0, 12))
        # candidate touches as they stand the moment eviction runs: nodes
        # holding edges, with the new edge's endpoints freshly touched
        touches = {
            node: store.last_touched(node)
            for g in store.graph_ids()
            for node in store.graph_nodes(g)
            if store.out_edges(node) or store.in_edges(node)
        }
        fresh = 10**9
        outcome = store.insert(edge(u, "t", v, "t", timestamp))
        if not outcome.evicted:
            continue
        assert len(outcome.evicted) == 1  # one insert adds one edge
        touches[(0, u)] = fresh
        touches[(0, v)] = fresh
        evicted = outcome.evicted[0]
        min_touch = min(touches.values())
        assert min(touches[owner] for owner in {evicted.source, evicted.dest}) == min_touch


def test_node_forgotten_after_losing_all_edges():
    store = GraphStore(capacity=1)
    store.insert(edge(1, "a", 2, "b", 1))
    store.insert(edge(3, "c", 4, "d", 2))
    assert store.total_edges == 1
    assert not store.has_node((0, 1)) and not store.has_node((0, 2))
    # the id can come back with a brand-new type
    store.insert(edge(1, "q", 5, "e", 3))
    assert store.node_type((0, 1)) == "q"


def test_add_node_registers_bare_node():
    store = GraphStore()
    assert store.add_node((0, 7), "a") is True
    assert store.add_node((0, 7), "a") is False
    with pytest.raises(NodeTypeConflictError):
        store.add_node((0, 7), "b")
    assert store.graph_nodes(0) == [(0, 7)]


def test_stale_prepared_edge_is_rejected():
    store = GraphStore()
    pending = store.prepare_edge(edge(1, "a", 2, "b", 1))
    store.insert(edge(3, "c", 4, "d", 1))
    with pytest.raises(RuntimeError):
        store.insert_prepared(pending)
