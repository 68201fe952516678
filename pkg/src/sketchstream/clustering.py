"""Bootstrap clustering and streaming cluster maintenance.

Bootstrapping picks a chunk length by the entropy of pairwise distances,
groups training graphs with k-medoids at the cluster count maximizing the
silhouette, and turns each cluster into a centroid: the running mean of
its members' projection vectors, its sign sketch, and an anomaly
threshold of mean plus three standard deviations of the member-to-centroid
sketch distances (a one-sided tail bound caps the false-positive rate at
10%).

In streaming mode every sketch update re-evaluates its graph against the
nearest centroid: close enough means the graph (re)joins that cluster and
the centroid mean is adjusted incrementally; too far means the graph is
pulled out of its cluster and marked as attack. Centroid projections are
kept as real-valued running means because the incremental updates divide
by cluster sizes.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .shingles import chunk_shingle, exact_cosine_distance, node_shingle
from .sketches import (
    HashFamily,
    SketchState,
    batch_projection,
    cosine_distance,
    sign_bits,
)
from .store import GraphStore

UNASSIGNED = "UNASSIGNED"
ATTACK = "ATTACK"

# Histogram resolution for the chunk-length entropy curve.
DEFAULT_ENTROPY_BINS = 10


def pairwise_entropy(distances: Sequence[float], bins: int) -> float:
    """Shannon entropy (nats) of distances histogrammed over [0, 1]."""
    if bins < 2:
        raise ValueError("bins must be at least 2")
    if len(distances) == 0:
        raise ValueError("distances must not be empty")
    values = np.asarray(distances, dtype=np.float64)
    if values.min() < 0.0 or values.max() > 1.0:
        raise ValueError("distances must lie in [0, 1]")
    counts, _ = np.histogram(values, bins=bins, range=(0.0, 1.0))
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def pairwise_distance_matrix(vectors: Sequence[Counter]) -> np.ndarray:
    """Symmetric exact-cosine distance matrix with zero diagonal."""
    n = len(vectors)
    matrix = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            d = exact_cosine_distance(vectors[i], vectors[j])
            matrix[i, j] = d
            matrix[j, i] = d
    return matrix


def chunk_length_entropies(
    vectors_by_length: Mapping[int, Sequence[Counter]],
    bins: int = DEFAULT_ENTROPY_BINS,
) -> dict[int, float]:
    """Entropy of the pairwise-distance distribution per candidate chunk length."""
    entropies: dict[int, float] = {}
    for length in sorted(vectors_by_length):
        matrix = pairwise_distance_matrix(vectors_by_length[length])
        upper = matrix[np.triu_indices(matrix.shape[0], k=1)]
        entropies[length] = pairwise_entropy(upper, bins)
    return entropies


def pick_chunk_length(entropies: Mapping[int, float]) -> int:
    """Smallest candidate strictly above the entropy argmax, else the argmax.

    The argmax marks where distances spread most evenly; choosing its right
    neighbor lands in the region that still separates dissimilar graphs
    without making similar ones drift apart. Entropy ties resolve to the
    smaller candidate.
    """
    if len(entropies) < 2:
        raise ValueError("need at least two candidate chunk lengths")
    candidates = sorted(entropies)
    best = max(candidates, key=lambda c: (entropies[c], -c))
    larger = [c for c in candidates if c > best]
    return min(larger) if larger else best


def select_chunk_length(
    vectors_by_length: Mapping[int, Sequence[Counter]],
    bins: int = DEFAULT_ENTROPY_BINS,
) -> int:
    if len(vectors_by_length) < 2:
        raise ValueError("need at least two candidate chunk lengths")
    sizes = {len(v) for v in vectors_by_length.values()}
    if len(sizes) != 1 or min(sizes) < 2:
        raise ValueError("need the same >= 2 training graphs at every candidate")
    return pick_chunk_length(chunk_length_entropies(vectors_by_length, bins))


def kmedoids(
    distances: np.ndarray, n_clusters: int, seed: int
) -> tuple[list[int], np.ndarray]:
    """Partition-around-medoids on a precomputed distance matrix.

    Starts from seeded random distinct medoids, then repeatedly applies the
    single best cost-reducing (medoid, non-medoid) swap until none improves
    the total distance to assigned medoids. Assignment ties go to the
    lower medoid position. Deterministic for a fixed seed.
    """
    n = distances.shape[0]
    if distances.shape != (n, n):
        raise ValueError("distance matrix must be square")
    if not 1 <= n_clusters <= n:
        raise ValueError(f"n_clusters must lie in [1, {n}]")
    rng = np.random.default_rng(seed)
    medoids = sorted(int(m) for m in rng.choice(n, size=n_clusters, replace=False))

    def cost_of(candidate: list[int]) -> float:
        return float(distances[:, candidate].min(axis=1).sum())

    cost = cost_of(medoids)
    improved = True
    while improved:
        improved = False
        best_swap: tuple[int, int] | None = None
        best_cost = cost
        medoid_set = set(medoids)
        for mi, medoid in enumerate(medoids):
            for other in range(n):
                if other in medoid_set:
                    continue
                trial = medoids.copy()
                trial[mi] = other
                trial_cost = cost_of(trial)
                if trial_cost < best_cost:
                    best_cost = trial_cost
                    best_swap = (mi, other)
        if best_swap is not None:
            medoids[best_swap[0]] = best_swap[1]
            medoids.sort()
            cost = best_cost
            improved = True
    assignments = np.argmin(distances[:, medoids], axis=1)
    return medoids, assignments


def anomaly_threshold(distances: "Sequence[float] | np.ndarray") -> float:
    """Mean plus three population standard deviations of member distances."""
    values = np.asarray(distances, dtype=np.float64)
    if values.size == 0:
        raise ValueError("need at least one member distance")
    return float(values.mean() + 3.0 * values.std())


def silhouette(distances: np.ndarray, assignments: np.ndarray) -> float:
    """Mean silhouette over points; singleton-cluster points contribute 0."""
    labels = np.unique(assignments)
    if labels.shape[0] < 2:
        raise ValueError("silhouette requires at least two clusters")
    n = distances.shape[0]
    total = 0.0
    for i in range(n):
        own = assignments[i]
        own_mask = assignments == own
        own_size = int(own_mask.sum())
        if own_size == 1:
            continue
        a = distances[i, own_mask].sum() / (own_size - 1)
        b = min(
            float(distances[i, assignments == other].mean())
            for other in labels
            if other != own
        )
        denom = max(a, b)
        if denom > 0.0:
            total += (b - a) / denom
    return total / n


@dataclass(frozen=True)
class AnomalyEvent:
    """Result of re-scoring one graph after a sketch update."""

    score: float
    nearest: int
    flagged: bool


@dataclass
class BootstrapReport:
    chunk_length: int
    n_clusters: int
    silhouette: float
    entropy_by_chunk_length: dict[int, float]
    thresholds: list[float]
    cluster_sizes: list[int] = field(default_factory=list)


class ClusterModel:
    """Centroid sketches, sizes, and thresholds, maintained per edge."""

    def __init__(
        self,
        family: HashFamily,
        hops: int,
        chunk_length: int,
        centroids: np.ndarray,
        sizes: Sequence[int],
        thresholds: Sequence[float],
    ):
        centroids = np.array(centroids, dtype=np.float64)  # owned copy
        if centroids.ndim != 2 or centroids.shape[1] != family.sketch_bits:
            raise ValueError("centroids must be K x sketch_bits")
        self.family = family
        self.hops = hops
        self.chunk_length = chunk_length
        self.centroids = centroids
        self.sketches = sign_bits(centroids)
        self.sizes = np.asarray(sizes, dtype=np.int64).copy()
        self.thresholds = np.asarray(thresholds, dtype=np.float64).copy()
        self.live = self.sizes > 0
        if not (len(self.sizes) == len(self.thresholds) == centroids.shape[0]):
            raise ValueError("centroids, sizes and thresholds must align")
        self.assignments: dict[int, int | str] = {}
        self.scores: dict[int, float] = {}

    @property
    def n_clusters(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def sketch_bits(self) -> int:
        return self.family.sketch_bits

    def distances_to(self, sketch: np.ndarray) -> np.ndarray:
        """Estimated cosine distance to every centroid; retired ones are inf."""
        matches = (self.sketches == sketch).sum(axis=1) / self.sketch_bits
        distances = 1.0 - np.cos(np.pi * (1.0 - matches))
        distances[~self.live] = np.inf
        return distances

    def update_graph(
        self, graph_id: int, old_state: SketchState, new_state: SketchState
    ) -> AnomalyEvent:
        """Re-evaluate a graph against the clustering after one sketch update.

        ``old_state`` must be the graph's state before the triggering edge;
        it is what the graph's current cluster has folded into its mean.
        """
        sketch = new_state.sketch
        distances = self.distances_to(sketch)
        nearest = int(np.argmin(distances))
        distance = float(distances[nearest])
        previous = self.assignments.get(graph_id, UNASSIGNED)
        flagged = distance > self.thresholds[nearest]

        if flagged:
            if isinstance(previous, int):
                self._remove(previous, old_state.projection)
            self.assignments[graph_id] = ATTACK
        elif previous == nearest:
            self.centroids[nearest] += (
                new_state.projection - old_state.projection
            ) / self.sizes[nearest]
            self._resign(nearest)
        else:
            if isinstance(previous, int):
                self._remove(previous, old_state.projection)
            self._add(nearest, new_state.projection)
            self.assignments[graph_id] = nearest

        score = self._score_against(nearest, sketch, distance)
        self.scores[graph_id] = score
        return AnomalyEvent(score=score, nearest=nearest, flagged=flagged)

    def ranking(self) -> list[tuple[int, float]]:
        """Scored graphs, highest score first; ties by lower graph id."""
        return sorted(self.scores.items(), key=lambda item: (-item[1], item[0]))

    def forget_graph(self, graph_id: int, projection: np.ndarray) -> None:
        """Drop a graph's detection state, unfolding it from its cluster.

        ``projection`` must be the graph's latest folded projection so the
        centroid stays the mean of its remaining members.
        """
        assignment = self.assignments.get(graph_id, UNASSIGNED)
        if isinstance(assignment, int):
            self._remove(assignment, projection)
        self.assignments.pop(graph_id, None)
        self.scores.pop(graph_id, None)

    # -- centroid maintenance ---------------------------------------------

    def _add(self, cluster: int, projection: np.ndarray) -> None:
        # Never called on a retired cluster: dead rows are inf in
        # distances_to, so they are never the nearest.
        size = int(self.sizes[cluster])
        self.centroids[cluster] = (self.centroids[cluster] * size + projection) / (size + 1)
        self.sizes[cluster] = size + 1
        self._resign(cluster)

    def _remove(self, cluster: int, projection: np.ndarray) -> None:
        size = int(self.sizes[cluster])
        if size <= 1:
            # Removing the last member would divide by zero; retire the
            # cluster instead. It is never matched again.
            self.sizes[cluster] = 0
            self.live[cluster] = False
            return
        self.centroids[cluster] = (self.centroids[cluster] * size - projection) / (size - 1)
        self.sizes[cluster] = size - 1
        self._resign(cluster)

    def _resign(self, cluster: int) -> None:
        self.sketches[cluster] = sign_bits(self.centroids[cluster])

    def _score_against(self, nearest: int, sketch: np.ndarray, fallback: float) -> float:
        if self.live[nearest]:
            return cosine_distance(sketch, self.sketches[nearest])
        if self.live.any():
            return float(self.distances_to(sketch).min())
        return fallback


def build_model(
    store: GraphStore,
    graph_ids: Sequence[int],
    *,
    hops: int,
    chunk_length: int,
    n_clusters: int,
    sketch_bits: int,
    cluster_seed: int,
    family_seed: int,
) -> tuple[ClusterModel, np.ndarray]:
    """Cluster training graphs at a fixed chunk length and cluster count.

    Returns the model and the medoid assignment of each training graph.
    """
    vectors = [
        Counter(
            chunk
            for node in store.graph_nodes(g)
            for chunk in chunk_shingle(node_shingle(store, node, hops), chunk_length)
        )
        for g in graph_ids
    ]
    distances = pairwise_distance_matrix(vectors)
    _, assignments = kmedoids(distances, n_clusters, cluster_seed)
    family = HashFamily.generate(sketch_bits, chunk_length, family_seed)
    return _assemble_model(vectors, assignments, family, hops, chunk_length, n_clusters), assignments


def _assemble_model(
    vectors: Sequence[Counter],
    assignments: np.ndarray,
    family: HashFamily,
    hops: int,
    chunk_length: int,
    n_clusters: int,
) -> ClusterModel:
    projections = np.stack([batch_projection(v, family).projection for v in vectors])
    centroids = np.zeros((n_clusters, family.sketch_bits), dtype=np.float64)
    sizes = np.zeros(n_clusters, dtype=np.int64)
    thresholds = np.zeros(n_clusters, dtype=np.float64)
    for cluster in range(n_clusters):
        members = np.flatnonzero(assignments == cluster)
        if members.size == 0:
            raise ValueError(f"cluster {cluster} has no members")
        sizes[cluster] = members.size
        centroids[cluster] = projections[members].mean(axis=0)
        centroid_sketch = sign_bits(centroids[cluster])
        member_distances = [
            cosine_distance(sign_bits(projections[m]), centroid_sketch) for m in members
        ]
        thresholds[cluster] = anomaly_threshold(member_distances)
    return ClusterModel(family, hops, chunk_length, centroids, sizes, thresholds)


def bootstrap_model(
    store: GraphStore,
    graph_ids: Sequence[int],
    *,
    hops: int,
    candidate_chunk_lengths: Sequence[int],
    candidate_cluster_counts: Sequence[int],
    sketch_bits: int,
    cluster_seed: int,
    family_seed: int,
    entropy_bins: int = DEFAULT_ENTROPY_BINS,
) -> tuple[ClusterModel, BootstrapReport]:
    """Full bootstrap: chunk-length selection, cluster-count selection, model.

    Training graphs must all be resident in ``store``. After this returns,
    the caller may discard the store; the model keeps only centroids.
    """
    graph_ids = sorted(graph_ids)
    counts = sorted(set(candidate_cluster_counts))
    if not counts or counts[0] < 2:
        raise ValueError("candidate cluster counts must all be at least 2")
    if len(graph_ids) < counts[-1]:
        raise ValueError(
            f"need at least {counts[-1]} training graphs, have {len(graph_ids)}"
        )

    shingle_lists = [
        [node_shingle(store, node, hops) for node in store.graph_nodes(g)]
        for g in graph_ids
    ]
    vectors_by_length = {
        length: [
            Counter(chunk for s in shingles for chunk in chunk_shingle(s, length))
            for shingles in shingle_lists
        ]
        for length in sorted(set(candidate_chunk_lengths))
    }
    entropies = chunk_length_entropies(vectors_by_length, entropy_bins)
    chunk_length = pick_chunk_length(entropies)
    vectors = vectors_by_length[chunk_length]
    distances = pairwise_distance_matrix(vectors)

    best: tuple[float, int, np.ndarray] | None = None
    for n_clusters in counts:
        _, assignments = kmedoids(distances, n_clusters, cluster_seed)
        if np.unique(assignments).shape[0] < n_clusters:
            continue  # degenerate split (duplicate points); not comparable
        quality = silhouette(distances, assignments)
        if best is None or quality > best[0]:
            best = (quality, n_clusters, assignments)
    if best is None:
        raise ValueError("no candidate cluster count produced a valid clustering")
    quality, n_clusters, assignments = best

    family = HashFamily.generate(sketch_bits, chunk_length, family_seed)
    model = _assemble_model(vectors, assignments, family, hops, chunk_length, n_clusters)
    report = BootstrapReport(
        chunk_length=chunk_length,
        n_clusters=n_clusters,
        silhouette=quality,
        entropy_by_chunk_length=entropies,
        thresholds=[float(t) for t in model.thresholds],
        cluster_sizes=[int(s) for s in model.sizes],
    )
    return model, report
