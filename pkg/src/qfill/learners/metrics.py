"""Ranking metrics."""

from __future__ import annotations

import numpy as np


class SingleClassEval(ValueError):
    pass


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Rank-sum AUC with half credit for ties, O(n log n).

    Equals the exhaustive pairwise count (concordant + 0.5 * tied) / (n1*n0);
    tied ranks are half-integers so the rank sum is exact in floating point.
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    n = scores.shape[0]
    if n == 0 or labels.shape[0] != n:
        raise ValueError("scores and labels must be non-empty and aligned")
    n1 = int((labels == 1).sum())
    n0 = int((labels == 0).sum())
    if n1 + n0 != n:
        raise ValueError("labels must be binary")
    if n1 == 0 or n0 == 0:
        raise SingleClassEval("AUC needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    s = scores[order]
    # 1-based average rank per tie group.
    boundaries = np.nonzero(np.diff(s))[0] + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [n]))
    group_ranks = (starts + ends + 1) / 2.0
    ranks_sorted = np.repeat(group_ranks, ends - starts)
    ranks = np.empty(n)
    ranks[order] = ranks_sorted
    pos_rank_sum = float(ranks[labels == 1].sum())
    return (pos_rank_sum - n1 * (n1 + 1) / 2.0) / (n1 * n0)
