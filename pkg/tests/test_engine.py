import io
from collections import Counter

import numpy as np
import pytest

from sketchstream import (
    GeneratorConfig,
    ParseError,
    RunConfig,
    batch_projection,
    format_edge,
    generate_dataset,
    load_model,
    run_bootstrap,
    run_stream,
    save_model,
    shingle_vector,
)
from sketchstream.clustering import UNASSIGNED
from sketchstream.engine import report_text


def small_dataset(seed=5, **overrides):
    defaults = dict(
        num_behavior_classes=2,
        graphs_per_class=8,
        anomaly_fraction=2 / 18,
        avg_nodes=20,
        avg_edges=60,
        interleave_width=4,
        separation=1.0,
        seed=seed,
    )
    defaults.update(overrides)
    return generate_dataset(GeneratorConfig(**defaults), train_fraction=0.75)


def small_config(**overrides):
    defaults = dict(
        hops=1,
        sketch_bits=128,
        candidate_chunk_lengths=(2, 4, 8),
        candidate_cluster_counts=(2, 3),
        snapshot_interval=100,
        cluster_seed=3,
        family_seed=4,
    )
    defaults.update(overrides)
    return RunConfig(**defaults)


def lines_of(records):
    return [format_edge(r) for r in records]


def test_bootstrap_recovers_two_classes_and_reports():
    dataset = small_dataset()
    model, report = run_bootstrap(lines_of(dataset.train), small_config())
    assert report.n_clusters == 2
    assert model.n_clusters == 2
    text = report_text(report)
    assert "clusters 2" in text and "silhouette" in text


def test_bootstrap_is_deterministic(tmp_path):
    dataset = small_dataset()
    config = small_config()
    paths = []
    for name in ("a.model", "b.model"):
        path = tmp_path / name
        run_bootstrap(lines_of(dataset.train), config, model_path=path)
        paths.append(path.read_bytes())
    assert paths[0] == paths[1]


def test_bootstrap_rejects_too_few_graphs():
    dataset = small_dataset(graphs_per_class=2, num_behavior_classes=2, anomaly_fraction=0.0)
    config = small_config(candidate_cluster_counts=(10,))
    with pytest.raises(ValueError):
        run_bootstrap(lines_of(dataset.train), config)


def test_model_round_trip_preserves_behavior():
    dataset = small_dataset()
    config = small_config()
    model, _ = run_bootstrap(lines_of(dataset.train), config)
    dump = io.StringIO()
    save_model(model, dump)
    loaded = load_model(io.StringIO(dump.getvalue()))
    assert loaded.n_clusters == model.n_clusters
    assert loaded.chunk_length == model.chunk_length
    assert loaded.hops == model.hops
    assert np.array_equal(loaded.centroids, model.centroids)
    assert np.array_equal(loaded.thresholds, model.thresholds)
    assert np.array_equal(loaded.sizes, model.sizes)
    assert np.array_equal(loaded.family.coefficients, model.family.coefficients)
    # a second dump of the loaded model is byte-identical
    second = io.StringIO()
    save_model(loaded, second)
    assert second.getvalue() == dump.getvalue()


def test_load_model_rejects_garbage():
    with pytest.raises(ValueError):
        load_model(io.StringIO("not a model\n"))


def test_stream_of_known_graph_scores_below_threshold():
    dataset = small_dataset()
    config = small_config()
    model, _ = run_bootstrap(lines_of(dataset.train), config)
    # replay one complete benign training graph as a fresh stream
    graph_id = dataset.train_ids[0]
    records = [r for r in dataset.train if r.graph_id == graph_id]
    result = run_stream(model, lines_of(records), config)
    score = result.model.scores[graph_id]
    assignment = result.model.assignments[graph_id]
    assert isinstance(assignment, int)
    assert score <= result.model.thresholds[assignment]


def test_empty_stream_emits_single_empty_snapshot():
    dataset = small_dataset()
    config = small_config()
    model, _ = run_bootstrap(lines_of(dataset.train), config)
    result = run_stream(model, [], config)
    assert len(result.snapshots) == 1
    assert result.snapshots[0].edges_processed == 0
    assert result.snapshots[0].rows == []
    assert result.edges_processed == 0


def test_stream_runs_are_deterministic():
    dataset = small_dataset()
    config = small_config()
    outputs = []
    for _ in range(2):
        model, _ = run_bootstrap(lines_of(dataset.train), config)
        csv = io.StringIO()
        run_stream(model, lines_of(dataset.test), config, labels=dataset.labels, csv_fp=csv)
        outputs.append(csv.getvalue())
    assert outputs[0] == outputs[1]


def test_snapshot_cadence_and_final_row():
    dataset = small_dataset()
    config = small_config(snapshot_interval=100)
    model, _ = run_bootstrap(lines_of(dataset.train), config)
    result = run_stream(model, lines_of(dataset.test), config)
    edges = result.edges_processed
    expected = list(range(100, edges + 1, 100))
    if edges % 100 != 0:
        expected.append(edges)
    assert [s.edges_processed for s in result.snapshots] == expected


def test_snapshot_metrics_appear_only_with_labels():
    dataset = small_dataset()
    config = small_config(snapshot_interval=10_000)
    model, _ = run_bootstrap(lines_of(dataset.train), config)
    unlabeled = run_stream(model, lines_of(dataset.test), config)
    assert all(s.ap is None and s.auc is None for s in unlabeled.snapshots)
    model2, _ = run_bootstrap(lines_of(dataset.train), config)
    labeled = run_stream(model2, lines_of(dataset.test), config, labels=dataset.labels)
    final = labeled.snapshots[-1]
    assert final.ap is not None and 0.0 <= final.ap <= 1.0
    assert final.auc is not None and 0.0 <= final.auc <= 1.0


def test_csv_has_expected_shape():
    dataset = small_dataset()
    config = small_config(snapshot_interval=200)
    model, _ = run_bootstrap(lines_of(dataset.train), config)
    csv = io.StringIO()
    result = run_stream(model, lines_of(dataset.test), config, labels=dataset.labels, csv_fp=csv)
    lines = csv.getvalue().splitlines()
    assert lines[0] == "edges_processed,graph_id,score,assignment,ap,auc"
    data = [line.split(",") for line in lines[1:]]
    assert all(len(row) == 6 for row in data)
    snapshot_edges = {int(row[0]) for row in data}
    assert snapshot_edges == {s.edges_processed for s in result.snapshots if s.rows}
    assignments = {row[3] for row in data}
    assert assignments <= {"0", "1", "2", "ATTACK", "UNASSIGNED"}


def test_final_sketches_match_batch_projection_without_eviction():
    # the whole-pipeline oracle: stream the test set with unlimited memory
    # and compare every graph's folded projection to the batch projection
    # of its final shingle vector
    dataset = small_dataset()
    config = small_config()
    model, _ = run_bootstrap(lines_of(dataset.train), config)
    result = run_stream(model, lines_of(dataset.test), config)
    store = result.store
    for graph_id, state in result.states.items():
        vector = shingle_vector(store, graph_id, model.hops, model.chunk_length)
        expected = batch_projection(vector, model.family)
        assert np.array_equal(state.projection, expected.projection)


def test_resident_edges_respect_the_cap():
    dataset = small_dataset()
    config = small_config(max_edges=40)
    model, _ = run_bootstrap(lines_of(dataset.train), config)
    result = run_stream(model, lines_of(dataset.test), config)
    assert result.peak_edges <= 40
    assert result.store.total_edges <= 40
    # detection state persists for graphs whose edges were evicted
    assert len(result.model.scores) == len({r.graph_id for r in dataset.test})


def test_tracked_graph_cap_drops_oldest_state():
    dataset = small_dataset()
    config = small_config(max_tracked_graphs=3)
    model, _ = run_bootstrap(lines_of(dataset.train), config)
    result = run_stream(model, lines_of(dataset.test), config)
    assert len(result.states) <= 3
    assert len(result.model.scores) <= 3
    # centroid sizes stay consistent: every assigned graph is still tracked
    assigned = [g for g, a in result.model.assignments.items() if isinstance(a, int)]
    assert set(assigned) <= set(result.states)


def test_parse_errors_carry_line_numbers_through_the_engine():
    dataset = small_dataset()
    config = small_config()
    model, _ = run_bootstrap(lines_of(dataset.train), config)
    bad = lines_of(dataset.test[:3]) + ["broken line\n"]
    with pytest.raises(ParseError, match="line 4"):
        run_stream(model, bad, config)


def test_unassigned_graphs_report_unassigned_in_snapshot():
    dataset = small_dataset()
    config = small_config(snapshot_interval=1)
    model, _ = run_bootstrap(lines_of(dataset.train), config)
    result = run_stream(model, lines_of(dataset.test[:1]), config)
    rows = result.snapshots[0].rows
    assert len(rows) == 1
    assert rows[0][2] in {UNASSIGNED, "ATTACK"} or rows[0][2].isdigit()
