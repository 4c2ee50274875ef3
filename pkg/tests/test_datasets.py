"""Manifold generators, isometric lift, and embedding file round trips."""

import numpy as np
import pytest

from rpl.datasets import (
    BAND_RADIUS,
    generate_cinnamon_roll,
    generate_twisted_surface,
    lift_to_high_dim,
    load_embeddings,
    roll_angular_rate,
    save_embeddings,
)
from rpl.linalg import numeric_rank


def ks_statistic(a, b):
    """Two-sample Kolmogorov-Smirnov statistic, written directly."""
    a = np.sort(np.asarray(a))
    b = np.sort(np.asarray(b))
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def pairwise_distances(points, rng, max_pairs=200_000):
    n = points.shape[0]
    i = rng.integers(0, n, size=max_pairs)
    j = rng.integers(0, n, size=max_pairs)
    keep = i != j
    return np.linalg.norm(points[i[keep]] - points[j[keep]], axis=1)


class TestCinnamonRoll:
    def test_noiseless_points_on_curve(self):
        sample = generate_cinnamon_roll(8, turns=2.0, noise=0.0, seed=5)
        c = roll_angular_rate(2.0)
        t = sample.latent
        np.testing.assert_allclose(sample.points[:, 0], t * np.cos(c * t), atol=1e-12)
        np.testing.assert_allclose(sample.points[:, 1], t * np.sin(c * t), atol=1e-12)

    def test_seed_determinism(self):
        a = generate_cinnamon_roll(50, seed=9)
        b = generate_cinnamon_roll(50, seed=9)
        np.testing.assert_array_equal(a.points, b.points)
        np.testing.assert_array_equal(a.latent, b.latent)

    def test_distance_distribution_matches_reference_sample(self):
        # a second seed acts as an independent draw from the same manifold
        a = generate_cinnamon_roll(2000, seed=1)
        b = generate_cinnamon_roll(2000, seed=2)
        rng = np.random.default_rng(0)
        stat = ks_statistic(pairwise_distances(a.points, rng), pairwise_distances(b.points, rng))
        assert stat < 0.05

    def test_rejects_tiny_n(self):
        with pytest.raises(ValueError, match="n >= 8"):
            generate_cinnamon_roll(4)

    def test_finite_and_tagged(self):
        s = generate_cinnamon_roll(100, noise=0.1, seed=3)
        assert np.all(np.isfinite(s.points)) and np.all(np.isfinite(s.latent))
        assert s.manifold_tag == "cinnamon-roll"


class TestTwistedSurface:
    def test_noiseless_points_on_band(self):
        sample = generate_twisted_surface(32, twist=1.0, noise=0.0, seed=0)
        u = sample.latent
        x, y, z = sample.points.T
        # angular position matches the latent
        np.testing.assert_allclose(np.mod(np.arctan2(y, x), 2 * np.pi), np.mod(u, 2 * np.pi), atol=1e-9)
        # the cross-section lies on the line tilted by twist*u/2
        radial = np.hypot(x, y) - BAND_RADIUS
        residual = radial * np.sin(0.5 * u) - z * np.cos(0.5 * u)
        np.testing.assert_allclose(residual, 0.0, atol=1e-12)

    def test_seed_determinism(self):
        a = generate_twisted_surface(64, noise=0.05, seed=11)
        b = generate_twisted_surface(64, noise=0.05, seed=11)
        np.testing.assert_array_equal(a.points, b.points)

    def test_distance_distribution_matches_reference_sample(self):
        a = generate_twisted_surface(2000, noise=0.01, seed=1)
        b = generate_twisted_surface(2000, noise=0.01, seed=2)
        rng = np.random.default_rng(0)
        stat = ks_statistic(pairwise_distances(a.points, rng), pairwise_distances(b.points, rng))
        assert stat < 0.05

    def test_latent_is_grid_angle(self):
        s = generate_twisted_surface(100, seed=0)
        assert np.all(s.latent >= 0) and np.all(s.latent < 2 * np.pi)


class TestLift:
    def test_same_dim_preserves_gram(self):
        s = generate_cinnamon_roll(64, seed=4)
        lifted = lift_to_high_dim(s, 3, seed=7)
        g0 = s.points @ s.points.T
        g1 = lifted.points @ lifted.points.T
        assert np.max(np.abs(g0 - g1)) <= 1e-10 * max(np.max(np.abs(g0)), 1.0)

    def test_lift_to_24_preserves_gram(self):
        s = generate_cinnamon_roll(128, seed=5)
        lifted = lift_to_high_dim(s, 24, seed=8)
        assert lifted.points.shape == (128, 24)
        g0 = s.points @ s.points.T
        g1 = lifted.points @ lifted.points.T
        rel = np.linalg.norm(g0 - g1) / np.linalg.norm(g0)
        assert rel <= 1e-10

    def test_rank_preserved(self):
        s = generate_twisted_surface(64, seed=6)
        lifted = lift_to_high_dim(s, 16, seed=9)
        assert numeric_rank(lifted.points) == numeric_rank(s.points)

    def test_latent_carried_over(self):
        s = generate_cinnamon_roll(32, seed=1)
        lifted = lift_to_high_dim(s, 10, seed=2)
        np.testing.assert_array_equal(lifted.latent, s.latent)

    def test_rejects_shrinking(self):
        s = generate_cinnamon_roll(32, seed=1)
        with pytest.raises(ValueError, match="below the ambient"):
            lift_to_high_dim(s, 2, seed=0)


class TestEmbeddingFiles:
    def test_round_trip_bitwise(self, tmp_path):
        rng = np.random.default_rng(13)
        m = rng.normal(size=(3, 2))
        path = tmp_path / "emb.txt"
        save_embeddings(path, m)
        loaded, ids = load_embeddings(path)
        np.testing.assert_array_equal(loaded, m)
        assert ids is None

    def test_round_trip_with_ids(self, tmp_path):
        m = np.array([[1.5, -2.25], [0.125, 3.0]])
        path = tmp_path / "emb.txt"
        save_embeddings(path, m, ids=["img_0", "img_1"])
        loaded, ids = load_embeddings(path)
        np.testing.assert_array_equal(loaded, m)
        assert ids == ["img_0", "img_1"]

    def test_empty_matrix_rejected_on_save(self, tmp_path):
        with pytest.raises(ValueError):
            save_embeddings(tmp_path / "x.txt", np.zeros((0, 3)))

    def test_header_only_file_rejected(self, tmp_path):
        path = tmp_path / "x.txt"
        path.write_text("dims 3\n")
        with pytest.raises(ValueError, match="no data rows"):
            load_embeddings(path)

    def test_nan_token_names_line(self, tmp_path):
        path = tmp_path / "x.txt"
        path.write_text("dims 2\n1.0 2.0\n3.0 nan\n")
        with pytest.raises(ValueError, match="line 3"):
            load_embeddings(path)

    def test_wrong_column_count_names_line(self, tmp_path):
        path = tmp_path / "x.txt"
        path.write_text("dims 2\n1.0 2.0 3.0\n")
        with pytest.raises(ValueError, match="line 2"):
            load_embeddings(path)

    def test_non_numeric_token_names_line(self, tmp_path):
        path = tmp_path / "x.txt"
        path.write_text("dims 2\n1.0 2.0\nfoo 4.0\n")
        with pytest.raises(ValueError, match="line 3"):
            load_embeddings(path)

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "x.txt"
        path.write_text("columns 2\n1.0 2.0\n")
        with pytest.raises(ValueError, match="header"):
            load_embeddings(path)

    def test_write_is_deterministic(self, tmp_path):
        m = np.random.default_rng(3).normal(size=(5, 4))
        p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
        save_embeddings(p1, m)
        save_embeddings(p2, m)
        assert p1.read_bytes() == p2.read_bytes()
