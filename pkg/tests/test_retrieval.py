"""Retrieval metrics against an exhaustive sort-based oracle."""

import numpy as np
import pytest

from rpl.kernels import RelationshipConfig, cross_relationship
from rpl.retrieval import (
    evaluate_pair,
    metrics_from_ranks,
    rank_matrix,
)

COSINE = RelationshipConfig(kind="cosine")
DOT = RelationshipConfig(kind="dot")


def oracle_ranks(queries, gallery, cfg):
    """Brute force: sort candidates per query, ties placed ahead of the match."""
    sims = cross_relationship(queries, gallery, cfg)
    n = sims.shape[0]
    ranks = []
    for i in range(n):
        order = sorted(range(n), key=lambda j: (-sims[i, j], 0 if j != i else 1))
        ranks.append(order.index(i) + 1)
    return np.array(ranks)


def oracle_metrics(ranks, k_values):
    n = len(ranks)
    recall = {k: sum(1 for r in ranks if r <= k) / n for k in k_values}
    ordered = sorted(ranks)
    if n % 2:
        median = float(ordered[n // 2])
    else:
        median = (ordered[n // 2 - 1] + ordered[n // 2]) / 2.0
    mrr = sum((1.0 / r if r <= 10 else 0.0) for r in ranks) / n
    return recall, median, mrr


class TestRankMatrix:
    def test_self_retrieval_all_rank_one(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(12, 5))
        ranks = rank_matrix(a, a, COSINE)
        np.testing.assert_array_equal(ranks, 1)

    def test_constructed_rank_positions(self):
        # gallery items arranged so true-match similarity is the 1st, 3rd
        # and 5th largest for the three queries
        queries = np.eye(3, 5)
        gallery = np.zeros((3, 5))
        gallery[0] = queries[0]  # rank 1 for query 0
        gallery[1] = 0.5 * queries[1] + 0.8 * queries[0]
        gallery[2] = 0.3 * queries[2] + 0.9 * queries[0] + 0.5 * queries[1]
        ranks = rank_matrix(queries, gallery, DOT)
        assert ranks.tolist() == oracle_ranks(queries, gallery, DOT).tolist()

    def test_matches_oracle_randomized(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            n = int(rng.integers(3, 40))
            d = int(rng.integers(2, 8))
            a = rng.normal(size=(n, d))
            b = rng.normal(size=(n, d))
            for cfg in (COSINE, DOT):
                got = rank_matrix(a, b, cfg)
                want = oracle_ranks(a, b, cfg)
                np.testing.assert_array_equal(got, want)

    def test_pessimistic_ties(self):
        queries = np.array([[1.0, 0.0]])
        # two gallery rows with identical similarity to the query
        gallery_a = np.array([[1.0, 0.0]])
        q = np.vstack([queries, queries])
        g = np.vstack([gallery_a, gallery_a])
        ranks = rank_matrix(q, g, DOT)
        np.testing.assert_array_equal(ranks, [2, 2])  # each ties the other

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=(15, 4))
        b = rng.normal(size=(15, 4))
        base = rank_matrix(a, b, DOT)
        scaled = rank_matrix(a * 3.0, b, DOT)  # positive row scale: monotone per query
        np.testing.assert_array_equal(base, scaled)

    def test_shared_orthogonal_transform_invariance(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(20, 6))
        b = rng.normal(size=(20, 6))
        q, r = np.linalg.qr(rng.normal(size=(6, 6)))
        q = q * np.sign(np.diag(r))
        for cfg in (DOT, COSINE):
            base = rank_matrix(a, b, cfg)
            rotated = rank_matrix(a @ q, b @ q, cfg)
            np.testing.assert_array_equal(base, rotated)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="index-paired"):
            rank_matrix(np.ones((3, 2)), np.ones((4, 2)), DOT)


class TestMetricsFromRanks:
    def test_perfect_retrieval(self):
        rep = metrics_from_ranks([1, 1, 1])
        assert rep.recall_at[1] == 1.0
        assert rep.median_rank == 1.0
        assert rep.mrr_at_10 == 1.0

    def test_hand_values_small(self):
        rep = metrics_from_ranks([1, 2, 3])
        assert rep.mrr_at_10 == pytest.approx((1 + 0.5 + 1 / 3) / 3)
        assert rep.mrr_at_10 == pytest.approx(0.6111, abs=1e-4)
        assert rep.recall_at[1] == pytest.approx(1 / 3)
        assert rep.median_rank == 2.0

    def test_rank_beyond_ten_contributes_zero(self):
        rep = metrics_from_ranks([1, 3, 20])
        assert rep.recall_at[10] == pytest.approx(2 / 3)
        assert rep.mrr_at_10 == pytest.approx((1 + 1 / 3) / 3)
        assert rep.mrr_at_10 == pytest.approx(0.4444, abs=1e-4)

    def test_median_mean_of_middles_for_even_count(self):
        rep = metrics_from_ranks([1, 2, 4, 10])
        assert rep.median_rank == 3.0

    def test_recall_monotone_and_saturates(self):
        rng = np.random.default_rng(4)
        ranks = rng.integers(1, 50, size=100)
        rep = metrics_from_ranks(ranks, k_values=(1, 5, 10, 50, 100))
        values = [rep.recall_at[k] for k in (1, 5, 10, 50, 100)]
        assert all(a <= b for a, b in zip(values, values[1:]))
        assert rep.recall_at[50] == 1.0

    def test_mrr_sandwich(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            ranks = rng.integers(1, 30, size=40)
            rep = metrics_from_ranks(ranks)
            r1, r10 = rep.recall_at[1], rep.recall_at[10]
            assert rep.mrr_at_10 <= r1 + (r10 - r1) + 1e-12
            assert rep.mrr_at_10 >= r1 - 1e-12

    def test_matches_oracle(self):
        rng = np.random.default_rng(6)
        ranks = rng.integers(1, 120, size=71)
        rep = metrics_from_ranks(ranks, k_values=(1, 5, 10, 100))
        recall, median, mrr = oracle_metrics(ranks.tolist(), (1, 5, 10, 100))
        assert rep.recall_at == pytest.approx(recall)
        assert rep.median_rank == pytest.approx(median)
        assert rep.mrr_at_10 == pytest.approx(mrr)

    def test_empty_and_invalid(self):
        with pytest.raises(ValueError):
            metrics_from_ranks([])
        with pytest.raises(ValueError):
            metrics_from_ranks([0, 1])


class TestEvaluatePair:
    def test_both_directions_present(self):
        rng = np.random.default_rng(7)
        a = rng.normal(size=(10, 4))
        b = a + 0.01 * rng.normal(size=(10, 4))
        out = evaluate_pair(a, b, COSINE)
        assert set(out) == {"a_to_b", "b_to_a"}
        assert out["a_to_b"].recall_at[1] > 0.5
        assert out["a_to_b"].direction == "a_to_b"
