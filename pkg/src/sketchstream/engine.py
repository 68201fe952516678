"""End-to-end runners: offline bootstrap and online stream detection.

The bootstrap runner loads a training stream whole (unbounded store),
clusters it, and writes a text model file. The stream runner replays a
test stream one edge at a time against a loaded model: store insertion
with eviction, chunk delta, sketch update, cluster update, score; a
snapshot of the instantaneous ranking is recorded every ``snapshot
interval`` edges and once at stream end.

Evicted edges never roll sketches back: a graph's projection accumulates
over everything it has seen, while deltas for later edges are computed on
the retained adjacency only. Detection state (sketch, assignment, score)
outlives a graph's edges, up to an optional cap on tracked graphs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .clustering import UNASSIGNED, BootstrapReport, ClusterModel, bootstrap_model
from .generator import LABEL_ANOMALY, read_labels
from .metrics import average_precision, roc_auc
from .records import EdgeRecord, read_stream
from .shingles import edge_delta
from .sketches import HashFamily, SketchState, apply_delta, fresh_state
from .store import GraphStore

MODEL_HEADER = "sketchstream model 1"


@dataclass
class RunConfig:
    """Knobs of the detection pipeline."""

    hops: int = 1
    sketch_bits: int = 1000
    max_edges: int | None = None
    candidate_chunk_lengths: tuple[int, ...] = (4, 8, 16, 32)
    candidate_cluster_counts: tuple[int, ...] = (2, 3, 4, 5)
    snapshot_interval: int = 10_000
    cluster_seed: int = 0
    family_seed: int = 1
    train_fraction: float = 0.75
    max_tracked_graphs: int | None = None
    entropy_bins: int = 10

    def __post_init__(self) -> None:
        if self.hops < 1:
            raise ValueError("hops must be at least 1")
        if self.sketch_bits < 1:
            raise ValueError("sketch_bits must be at least 1")
        if self.max_edges is not None and self.max_edges < 1:
            raise ValueError("max_edges must be positive or None")
        if self.snapshot_interval < 1:
            raise ValueError("snapshot_interval must be positive")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.max_tracked_graphs is not None and self.max_tracked_graphs < 1:
            raise ValueError("max_tracked_graphs must be positive or None")


@dataclass
class SnapshotRecord:
    edges_processed: int
    rows: list[tuple[int, float, str]]  # (graph_id, score, assignment)
    ap: float | None = None
    auc: float | None = None


@dataclass
class StreamResult:
    snapshots: list[SnapshotRecord]
    edges_processed: int
    elapsed_seconds: float
    edges_per_second: float
    peak_edges: int
    model: ClusterModel
    states: dict[int, SketchState] = field(default_factory=dict)
    store: GraphStore | None = None


# -- model file ------------------------------------------------------------


def save_model(model: ClusterModel, fp: IO[str]) -> None:
    """Write the text model dump; floats use repr for exact round-trips."""
    fp.write(MODEL_HEADER + "\n")
    fp.write(f"sketch_bits {model.sketch_bits}\n")
    fp.write(f"chunk_length {model.chunk_length}\n")
    fp.write(f"hops {model.hops}\n")
    fp.write(f"family_seed {model.family.seed}\n")
    fp.write(f"clusters {model.n_clusters}\n")
    for q in range(model.n_clusters):
        fp.write(
            f"cluster {q} size {int(model.sizes[q])} threshold {float(model.thresholds[q])!r}\n"
        )
    for q in range(model.n_clusters):
        values = " ".join(repr(float(v)) for v in model.centroids[q])
        fp.write(f"projection {q} {values}\n")


def load_model(fp: IO[str]) -> ClusterModel:
    lines = [line.rstrip("\n") for line in fp]
    if not lines or lines[0] != MODEL_HEADER:
        raise ValueError("not a recognized model file")
    fields: dict[str, int] = {}
    for line in lines[1:5]:
        key, _, value = line.partition(" ")
        fields[key] = int(value)
    for key in ("sketch_bits", "chunk_length", "hops", "family_seed"):
        if key not in fields:
            raise ValueError(f"model file is missing {key}")
    key, _, value = lines[5].partition(" ")
    if key != "clusters":
        raise ValueError("model file is missing the cluster count")
    n_clusters = int(value)

    sizes = np.zeros(n_clusters, dtype=np.int64)
    thresholds = np.zeros(n_clusters, dtype=np.float64)
    centroids = np.zeros((n_clusters, fields["sketch_bits"]), dtype=np.float64)
    for line in lines[6 : 6 + n_clusters]:
        parts = line.split(" ")
        if len(parts) != 6 or parts[0] != "cluster":
            raise ValueError(f"malformed cluster line: {line!r}")
        q = int(parts[1])
        sizes[q] = int(parts[3])
        thresholds[q] = float(parts[5])
    for line in lines[6 + n_clusters : 6 + 2 * n_clusters]:
        parts = line.split(" ")
        if parts[0] != "projection":
            raise ValueError(f"malformed projection line: {line!r}")
        q = int(parts[1])
        centroids[q] = [float(v) for v in parts[2:]]

    family = HashFamily.generate(
        fields["sketch_bits"], fields["chunk_length"], fields["family_seed"]
    )
    return ClusterModel(
        family, fields["hops"], fields["chunk_length"], centroids, sizes, thresholds
    )


# -- runners ----------------------------------------------------------------


def run_bootstrap(
    stream: Iterable[str] | str | Path,
    config: RunConfig,
    model_path: str | Path | None = None,
) -> tuple[ClusterModel, BootstrapReport]:
    """Cluster a training stream of complete graphs into a model.

    The training phase is static: every edge is held in memory regardless
    of ``max_edges``.
    """
    store = GraphStore(capacity=None)
    for rec in _iter_records(stream):
        store.insert(rec)
    model, report = bootstrap_model(
        store,
        store.graph_ids(),
        hops=config.hops,
        candidate_chunk_lengths=config.candidate_chunk_lengths,
        candidate_cluster_counts=config.candidate_cluster_counts,
        sketch_bits=config.sketch_bits,
        cluster_seed=config.cluster_seed,
        family_seed=config.family_seed,
        entropy_bins=config.entropy_bins,
    )
    if model_path is not None:
        with open(model_path, "w", encoding="ascii") as fp:
            save_model(model, fp)
    return model, report


def report_text(report: BootstrapReport) -> str:
    lines = [
        f"chunk_length {report.chunk_length}",
        f"clusters {report.n_clusters}",
        f"silhouette {report.silhouette:.4f}",
    ]
    for length in sorted(report.entropy_by_chunk_length):
        lines.append(f"entropy C={length} {report.entropy_by_chunk_length[length]:.4f}")
    for q, (size, threshold) in enumerate(zip(report.cluster_sizes, report.thresholds)):
        lines.append(f"cluster {q} size {size} threshold {threshold:.6f}")
    return "\n".join(lines) + "\n"


def run_stream(
    model: ClusterModel,
    stream: Iterable[str] | str | Path,
    config: RunConfig,
    labels: dict[int, str] | None = None,
    csv_fp: IO[str] | None = None,
) -> StreamResult:
    """Replay a stream against a model, scoring each edge's graph.

    Snapshots are taken every ``config.snapshot_interval`` edges and once
    at stream end (not duplicated when the end falls on the interval).
    Ranking metrics are attached when ``labels`` is given and the current
    ranking has both positives and negatives.
    """
    positives = (
        {g for g, label in labels.items() if label == LABEL_ANOMALY} if labels else None
    )
    store = GraphStore(capacity=config.max_edges)
    states: dict[int, SketchState] = {}
    last_active: dict[int, int] = {}
    snapshots: list[SnapshotRecord] = []
    if csv_fp is not None:
        csv_fp.write("edges_processed,graph_id,score,assignment,ap,auc\n")

    hops = model.hops
    chunk_length = model.chunk_length
    family = model.family
    edges = 0
    started = time.perf_counter()
    for rec in _iter_records(stream):
        pending = store.prepare_edge(rec)
        delta = edge_delta(store, pending, hops, chunk_length)
        store.insert_prepared(pending)
        if config.max_edges is not None and store.total_edges > config.max_edges:
            raise AssertionError("resident edges exceeded the configured bound")

        graph_id = rec.graph_id
        state = states.get(graph_id)
        if state is None:
            state = states[graph_id] = fresh_state(family.sketch_bits)
        old_state = state.copy()
        apply_delta(state, family, delta)
        model.update_graph(graph_id, old_state, state)

        edges += 1
        last_active[graph_id] = edges
        if config.max_tracked_graphs is not None and len(states) > config.max_tracked_graphs:
            _drop_oldest_tracked(model, states, last_active)
        if edges % config.snapshot_interval == 0:
            snapshots.append(_snapshot(model, edges, positives, csv_fp))
    if edges == 0 or edges % config.snapshot_interval != 0:
        snapshots.append(_snapshot(model, edges, positives, csv_fp))
    elapsed = time.perf_counter() - started

    return StreamResult(
        snapshots=snapshots,
        edges_processed=edges,
        elapsed_seconds=elapsed,
        edges_per_second=edges / elapsed if elapsed > 0 else float("inf"),
        peak_edges=store.peak_edges,
        model=model,
        states=states,
        store=store,
    )


def _iter_records(stream: Iterable[str] | str | Path) -> Iterable[EdgeRecord]:
    if isinstance(stream, (str, Path)):
        with open(stream, "r", encoding="ascii") as fp:
            yield from read_stream(fp)
    else:
        yield from read_stream(stream)


def _drop_oldest_tracked(
    model: ClusterModel, states: dict[int, SketchState], last_active: dict[int, int]
) -> None:
    victim = min(last_active, key=lambda g: (last_active[g], g))
    model.forget_graph(victim, states[victim].projection)
    del states[victim]
    del last_active[victim]


def _snapshot(
    model: ClusterModel,
    edges: int,
    positives: set[int] | None,
    csv_fp: IO[str] | None,
) -> SnapshotRecord:
    ranking = model.ranking()
    rows = [
        (graph_id, score, _assignment_text(model.assignments.get(graph_id, UNASSIGNED)))
        for graph_id, score in ranking
    ]
    ap = auc = None
    if positives is not None and ranking:
        ranked_positives = sum(1 for g, _ in ranking if g in positives)
        if 0 < ranked_positives < len(ranking):
            ap = average_precision(ranking, positives)
            auc = roc_auc(ranking, positives)
    record = SnapshotRecord(edges_processed=edges, rows=rows, ap=ap, auc=auc)
    if csv_fp is not None:
        ap_text = "" if ap is None else repr(ap)
        auc_text = "" if auc is None else repr(auc)
        for graph_id, score, assignment in rows:
            csv_fp.write(f"{edges},{graph_id},{score!r},{assignment},{ap_text},{auc_text}\n")
    return record


def _assignment_text(assignment: int | str) -> str:
    return str(assignment)


def load_labels_file(path: str | Path) -> dict[int, str]:
    with open(path, "r", encoding="ascii") as fp:
        return read_labels(fp)
