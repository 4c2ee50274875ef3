"""Cross-modal retrieval metrics over index-paired embedding sets.

Query i's true match is gallery row i. Ranks are computed pessimistically:
every competitor whose similarity ties the true match counts against it,
so reported ranks are reproducible and conservative. Recall@K is the
fraction of queries ranked within K; the median rank averages the two
middle order statistics for even counts; MRR@10 is the truncated mean
reciprocal rank, with zero contribution beyond rank 10.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import RelationshipConfig, cross_relationship
from .linalg import as_matrix

DEFAULT_K_VALUES = (1, 5, 10, 100)

DIRECTIONS = ("a_to_b", "b_to_a")


@dataclass
class RetrievalReport:
    direction: str = "a_to_b"
    n_queries: int = 0
    recall_at: dict[int, float] = field(default_factory=dict)
    median_rank: float = 0.0
    mrr_at_10: float = 0.0

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "n_queries": int(self.n_queries),
            "recall_at": {int(k): float(v) for k, v in self.recall_at.items()},
            "median_rank": float(self.median_rank),
            "mrr_at_10": float(self.mrr_at_10),
        }


def rank_matrix(queries, gallery, similarity: RelationshipConfig) -> np.ndarray:
    """Rank of the true match per query: 1 + competitors with similarity >= it."""
    q = as_matrix(queries, "queries")
    g = as_matrix(gallery, "gallery")
    if q.shape != g.shape:
        raise ValueError(
            f"queries and gallery must be index-paired with equal shapes, got {q.shape} vs {g.shape}"
        )
    sims = cross_relationship(q, g, similarity)
    true_sims = np.diag(sims)
    # the comparison includes the true match itself, which contributes the leading 1
    return (sims >= true_sims[:, None]).sum(axis=1).astype(np.int64)


def metrics_from_ranks(ranks, k_values=DEFAULT_K_VALUES, direction: str = "a_to_b") -> RetrievalReport:
    """Aggregate a rank vector into recall/median/MRR metrics."""
    r = np.asarray(ranks, dtype=np.int64)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("ranks must be a non-empty 1-D vector")
    if np.any(r < 1):
        raise ValueError("ranks must be >= 1")
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown direction {direction!r}; valid: {DIRECTIONS}")
    report = RetrievalReport(direction=direction, n_queries=int(r.size))
    for k in k_values:
        report.recall_at[int(k)] = float(np.mean(r <= k))
    report.median_rank = float(np.median(r))
    report.mrr_at_10 = float(np.mean(np.where(r <= 10, 1.0 / r, 0.0)))
    return report


def evaluate_pair(a, b, similarity: RelationshipConfig, k_values=DEFAULT_K_VALUES) -> dict[str, RetrievalReport]:
    """Retrieval metrics in both directions for an index-paired set."""
    return {
        "a_to_b": metrics_from_ranks(rank_matrix(a, b, similarity), k_values, "a_to_b"),
        "b_to_a": metrics_from_ranks(rank_matrix(b, a, similarity), k_values, "b_to_a"),
    }
