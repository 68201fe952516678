"""Ranking metrics for labeled anomaly scores."""

from __future__ import annotations

from typing import Sequence, Set


def average_precision(ranking: Sequence[tuple[int, float]], positives: Set[int]) -> float:
    """Area under the precision-recall curve of a descending-score ranking.

    Sums precision at each positive's rank, normalized by the number of
    positives present in the ranking. The ranking's own tie order is used
    as-is.
    """
    total_positives = sum(1 for graph_id, _ in ranking if graph_id in positives)
    if total_positives == 0:
        raise ValueError("ranking contains no positive items")
    hits = 0
    ap = 0.0
    for rank, (graph_id, _) in enumerate(ranking, start=1):
        if graph_id in positives:
            hits += 1
            ap += hits / rank
    return ap / total_positives


def roc_auc(ranking: Sequence[tuple[int, float]], positives: Set[int]) -> float:
    """Probability that a random positive outscores a random negative.

    Computed from the scores in Mann-Whitney form, with tied scores
    counting one half.
    """
    pos_scores = [score for graph_id, score in ranking if graph_id in positives]
    neg_scores = [score for graph_id, score in ranking if graph_id not in positives]
    if not pos_scores or not neg_scores:
        raise ValueError("need at least one positive and one negative item")
    # Average ranks over ascending scores, then the rank-sum formula.
    entries = sorted(
        [(score, True) for score in pos_scores] + [(score, False) for score in neg_scores]
    )
    rank_sum = 0.0
    i = 0
    while i < len(entries):
        j = i
        while j < len(entries) and entries[j][0] == entries[i][0]:
            j += 1
        average_rank = (i + 1 + j) / 2.0  # ranks are 1-based, tie group [i+1, j]
        rank_sum += average_rank * sum(1 for k in range(i, j) if entries[k][1])
        i = j
    n_pos = len(pos_scores)
    n_neg = len(neg_scores)
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
