import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from semsig.kernels import (
    AnchorSet,
    map_features,
    median_heuristic_width,
    rbf_map,
    ridge_solve,
    select_anchors,
)


class TestSelectAnchors:
    def test_identical_rows_all_selected(self):
        X = np.ones((3, 2))
        anchors = select_anchors(X, 3, seed=0)
        assert anchors.anchors.shape == (3, 2)
        assert_array_equal(anchors.anchors, X)

    def test_m_equals_n_selects_every_row(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(20, 4))
        anchors = select_anchors(X, 20, seed=5)
        assert_array_equal(np.sort(anchors.indices), np.arange(20))
        # every anchor is literally a training row
        assert_array_equal(anchors.anchors, X[anchors.indices])

    def test_fixed_seed_reproducible(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(10, 2))
        a = select_anchors(X, 4, seed=42)
        b = select_anchors(X, 4, seed=42)
        assert_array_equal(a.anchors, b.anchors)
        assert a.width == b.width

    def test_different_seeds_differ(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(500, 3))
        a = select_anchors(X, 10, seed=0)
        b = select_anchors(X, 10, seed=1)
        assert not np.array_equal(a.indices, b.indices)

    def test_m_larger_than_n_rejected(self):
        X = np.zeros((4, 2))
        with pytest.raises(ValueError):
            select_anchors(X, 5, seed=0)

    def test_sampling_without_replacement(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(50, 2))
        anchors = select_anchors(X, 30, seed=9)
        assert len(set(anchors.indices.tolist())) == 30


class TestMedianHeuristicWidth:
    def test_single_nonzero_distance(self):
        X = np.array([[0.0], [2.0]])
        anchors = AnchorSet(anchors=np.array([[0.0]]), width=1.0)
        assert median_heuristic_width(X, anchors) == 4.0

    def test_degenerate_all_identical(self):
        X = np.ones((5, 3))
        anchors = AnchorSet(anchors=np.ones((2, 3)), width=1.0)
        assert median_heuristic_width(X, anchors) == 1.0

    def test_matches_brute_force_median(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(50, 4))
        anchors = select_anchors(X, 12, seed=3)
        d2 = []
        for i in range(50):
            for j in range(12):
                v = float(np.sum((X[i] - anchors.anchors[j]) ** 2))
                if v > 0:
                    d2.append(v)
        assert_allclose(median_heuristic_width(X, anchors), np.median(d2), rtol=1e-12)


class TestRbfMap:
    def test_anchor_itself_maps_to_one(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(6, 3))
        anchors = select_anchors(X, 4, seed=0)
        phi = rbf_map(anchors.anchors[2], anchors)
        assert phi[2] == 1.0

    def test_unit_ratio_distance(self):
        anchors = AnchorSet(anchors=np.array([[0.0, 0.0]]), width=9.0)
        phi = rbf_map(np.array([3.0, 0.0]), anchors)
        assert_allclose(phi[0], np.exp(-1.0), rtol=1e-15)

    def test_matches_scalar_recomputation(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(8, 5))
        anchors = select_anchors(X, 5, seed=1)
        x = rng.normal(size=5)
        phi = rbf_map(x, anchors)
        for j in range(5):
            expected = np.exp(-np.sum((x - anchors.anchors[j]) ** 2) / anchors.width)
            assert_allclose(phi[j], expected, rtol=1e-12)

    def test_outputs_in_unit_interval(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(30, 4))
        anchors = select_anchors(X, 10, seed=2)
        phi = map_features(rng.normal(size=(100, 4)) * 5, anchors)
        assert np.all(phi > 0)
        assert np.all(phi <= 1)

    def test_dimension_mismatch_rejected(self):
        anchors = AnchorSet(anchors=np.zeros((2, 3)), width=1.0)
        with pytest.raises(ValueError):
            rbf_map(np.zeros(4), anchors)

    def test_batch_map_agrees_with_single(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(20, 3))
        anchors = select_anchors(X, 6, seed=4)
        Q = rng.normal(size=(7, 3))
        batch = map_features(Q, anchors)
        for i in range(7):
            assert_array_equal(batch[i], rbf_map(Q[i], anchors))


class TestRidgeSolve:
    def test_identity_lambda_zero(self):
        T = np.arange(12.0).reshape(4, 3)
        assert_allclose(ridge_solve(np.eye(4), T, 0.0), T, atol=1e-12)

    def test_identity_lambda_one_halves(self):
        T = np.arange(12.0).reshape(4, 3)
        assert_allclose(ridge_solve(np.eye(4), T, 1.0), T / 2.0, rtol=1e-12)

    def test_gradient_vanishes_at_solution(self):
        rng = np.random.default_rng(12)
        A = rng.normal(size=(20, 5))
        T = rng.normal(size=(20, 3))
        lam = 0.1
        S = ridge_solve(A, T, lam)
        grad = 2.0 * (A.T @ (A @ S - T)) + 2.0 * lam * S
        assert np.linalg.norm(grad) <= 1e-6

    def test_normal_equation_residual(self):
        rng = np.random.default_rng(13)
        A = rng.normal(size=(40, 10))
        T = rng.normal(size=(40, 8))
        lam = 1e-6
        S = ridge_solve(A, T, lam)
        lhs = (A.T @ A + lam * np.eye(10)) @ S
        rhs = A.T @ T
        assert np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs) <= 1e-8

    def test_local_optimality_probe(self):
        rng = np.random.default_rng(14)
        A = rng.normal(size=(25, 6))
        T = rng.normal(size=(25, 4))
        lam = 0.05
        S = ridge_solve(A, T, lam)

        def obj(M):
            return np.sum((A @ M - T) ** 2) + lam * np.sum(M**2)

        base = obj(S)
        for _ in range(100):
            E = rng.normal(size=S.shape)
            assert base <= obj(S + 1e-3 * E) + 1e-12

    def test_singular_without_ridge_raises(self):
        A = np.zeros((5, 3))
        T = np.ones((5, 2))
        with pytest.raises(np.linalg.LinAlgError):
            ridge_solve(A, T, 0.0)
