import numpy as np
import pytest
from numpy.testing import assert_array_equal

from semsig.retrieval import (
    KnowledgeBase,
    average_precisions,
    evaluate_retrieval,
    hamming_distance,
    mean_average_precision,
    pack_signatures,
    precision_at_radius,
    query_radius,
    reconstruct,
)


def random_signs(n, width, rng):
    return np.where(rng.normal(size=(n, width)) >= 0, 1.0, -1.0)


def naive_distance(a, b):
    return sum(1 for x, y in zip(a, b) if x != y)


def naive_ranking(kb, q, query_id=None):
    """(distance, id)-sorted list of (id, label, distance), pure Python."""
    rows = []
    for code, label, item_id in zip(kb.codes, kb.labels, kb.ids):
        if query_id is not None and item_id == query_id:
            continue
        rows.append((naive_distance(code, q), int(item_id), int(label)))
    rows.sort()
    return rows


def naive_average_precision(kb, q, q_label, query_id=None):
    rows = naive_ranking(kb, q, query_id)
    hits = 0
    total = 0.0
    for rank, (_, _, label) in enumerate(rows, start=1):
        if label == q_label:
            hits += 1
            total += hits / rank
    return total / hits if hits else float("nan")


class TestPackSignatures:
    def test_popcount_counts_plus_ones(self):
        rng = np.random.default_rng(0)
        for width in (1, 7, 63, 64, 65, 130):
            codes = random_signs(5, width, rng)
            packed = pack_signatures(codes)
            assert packed.shape == (5, (width + 63) // 64)
            pops = np.bitwise_count(packed).sum(axis=1)
            assert_array_equal(pops, (codes > 0).sum(axis=1))

    def test_all_signs(self):
        plus = np.ones((1, 64))
        minus = -np.ones((1, 64))
        assert int(np.bitwise_count(pack_signatures(plus)).sum()) == 64
        assert int(np.bitwise_count(pack_signatures(minus)).sum()) == 0


class TestHammingDistance:
    def test_matches_naive_count(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a = random_signs(1, 33, rng)[0]
            b = random_signs(1, 33, rng)[0]
            assert hamming_distance(a, b) == naive_distance(a, b)

    def test_extremes(self):
        a = np.ones(16)
        assert hamming_distance(a, a) == 0
        assert hamming_distance(a, -a) == 16

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            hamming_distance(np.ones(4), np.ones(5))


class TestKnowledgeBase:
    def test_distances_match_naive_loop(self):
        rng = np.random.default_rng(2)
        for width in (1, 63, 64, 65, 130):
            base = random_signs(37, width, rng)
            queries = random_signs(11, width, rng)
            kb = KnowledgeBase(base, rng.integers(0, 3, size=37))
            dist = kb.distances(queries)
            for i in range(11):
                for j in range(37):
                    assert dist[i, j] == naive_distance(queries[i], base[j])

    def test_duplicate_ids_rejected(self):
        rng = np.random.default_rng(3)
        codes = random_signs(4, 8, rng)
        with pytest.raises(ValueError):
            KnowledgeBase(codes, [0, 0, 1, 1], ids=[5, 5, 6, 7])

    def test_width_mismatch_rejected(self):
        rng = np.random.default_rng(4)
        kb = KnowledgeBase(random_signs(6, 16, rng), np.zeros(6, dtype=int))
        with pytest.raises(ValueError):
            kb.distances(random_signs(2, 8, rng))

    def test_label_row_mismatch_rejected(self):
        rng = np.random.default_rng(5)
        with pytest.raises(ValueError):
            KnowledgeBase(random_signs(6, 8, rng), np.zeros(5, dtype=int))


class TestQueryRadius:
    def test_orders_by_distance_then_id(self):
        q = np.ones(4)
        codes = np.array(
            [
                [1.0, 1.0, 1.0, -1.0],   # distance 1
                [1.0, 1.0, 1.0, 1.0],    # distance 0
                [-1.0, 1.0, 1.0, 1.0],   # distance 1
                [-1.0, -1.0, 1.0, 1.0],  # distance 2
            ]
        )
        kb = KnowledgeBase(codes, [0, 1, 2, 3], ids=[30, 20, 10, 40])
        res = query_radius(kb, q, 1)
        assert res.ids.tolist() == [20, 10, 30]
        assert res.distances.tolist() == [0, 1, 1]
        assert res.labels.tolist() == [1, 2, 0]

    def test_radius_zero_returns_exact_matches(self):
        rng = np.random.default_rng(6)
        codes = random_signs(10, 12, rng)
        kb = KnowledgeBase(codes, np.arange(10))
        res = query_radius(kb, codes[4], 0)
        matches = [i for i in range(10) if naive_distance(codes[i], codes[4]) == 0]
        assert res.ids.tolist() == matches

    def test_empty_ball(self):
        kb = KnowledgeBase(np.ones((3, 8)), [0, 1, 2])
        res = query_radius(kb, -np.ones(8), 2)
        assert len(res) == 0

    def test_negative_radius_rejected(self):
        kb = KnowledgeBase(np.ones((2, 4)), [0, 1])
        with pytest.raises(ValueError):
            query_radius(kb, np.ones(4), -1)

    def test_matches_naive_scan(self):
        rng = np.random.default_rng(7)
        codes = random_signs(50, 24, rng)
        labels = rng.integers(0, 4, size=50)
        kb = KnowledgeBase(codes, labels)
        q = random_signs(1, 24, rng)[0]
        for r in (0, 3, 8, 24):
            res = query_radius(kb, q, r)
            expected = [(d, i) for d, i, _ in naive_ranking(kb, q) if d <= r]
            assert [(int(d), int(i)) for d, i in zip(res.distances, res.ids)] == expected


class TestReconstruct:
    def test_majority_vote(self):
        codes = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
        kb = KnowledgeBase(codes, [7, 7, 3, 5])
        rec = reconstruct(kb, np.array([1.0, 1.0]), 1)
        # items at distance <= 1 carry labels 7, 7, 3
        assert rec.label == 7
        assert len(rec.items) == 3

    def test_tie_takes_smallest_label(self):
        codes = np.array([[1.0, 1.0], [1.0, -1.0]])
        kb = KnowledgeBase(codes, [9, 2])
        rec = reconstruct(kb, np.array([1.0, 1.0]), 1)
        assert rec.label == 2

    def test_empty_ball_has_no_label(self):
        kb = KnowledgeBase(np.ones((2, 8)), [0, 1])
        rec = reconstruct(kb, -np.ones(8), 1)
        assert rec.label is None
        assert len(rec.items) == 0


class TestPrecisionAtRadius:
    def test_two_thirds_by_hand(self):
        q = np.ones(4).reshape(1, -1)
        codes = np.array(
            [
                [1.0, 1.0, 1.0, 1.0],     # distance 0, label 0
                [1.0, 1.0, 1.0, -1.0],    # distance 1, label 0
                [1.0, 1.0, -1.0, -1.0],   # distance 2, excluded at r=1
                [-1.0, 1.0, 1.0, 1.0],    # distance 1, label 1
            ]
        )
        kb = KnowledgeBase(codes, [0, 0, 1, 1])
        assert precision_at_radius(q, [0], kb, 1) == pytest.approx(2.0 / 3.0)

    def test_empty_ball_counts_zero(self):
        kb = KnowledgeBase(np.ones((2, 8)), [0, 0])
        queries = np.vstack([np.ones(8), -np.ones(8)])
        # first query scores 1, second finds nothing and scores 0
        assert precision_at_radius(queries, [0, 0], kb, 0) == pytest.approx(0.5)

    def test_full_radius_balanced_base_gives_class_prior(self):
        rng = np.random.default_rng(8)
        width, per_class, c = 16, 25, 4
        codes = random_signs(per_class * c, width, rng)
        labels = np.repeat(np.arange(c), per_class)
        kb = KnowledgeBase(codes, labels)
        queries = random_signs(9, width, rng)
        q_labels = rng.integers(0, c, size=9)
        assert precision_at_radius(queries, q_labels, kb, width) == pytest.approx(1.0 / c)

    def test_self_exclusion_by_id(self):
        rng = np.random.default_rng(9)
        codes = random_signs(6, 10, rng)
        labels = np.array([0, 0, 1, 1, 2, 2])
        kb = KnowledgeBase(codes, labels)
        # querying row 0 at radius 0 finds only itself; with the id
        # excluded the ball is empty and the score drops to 0
        with_self = precision_at_radius(codes[:1], labels[:1], kb, 0)
        without = precision_at_radius(codes[:1], labels[:1], kb, 0, query_ids=[0])
        assert with_self == pytest.approx(1.0)
        assert without == pytest.approx(0.0)

    def test_matches_naive_loop(self):
        rng = np.random.default_rng(10)
        codes = random_signs(40, 12, rng)
        labels = rng.integers(0, 3, size=40)
        kb = KnowledgeBase(codes, labels)
        queries = random_signs(15, 12, rng)
        q_labels = rng.integers(0, 3, size=15)
        for r in (0, 2, 5, 12):
            scores = []
            for q, ql in zip(queries, q_labels):
                rows = [row for row in naive_ranking(kb, q) if row[0] <= r]
                if rows:
                    scores.append(sum(1 for _, _, lab in rows if lab == ql) / len(rows))
                else:
                    scores.append(0.0)
            got = precision_at_radius(queries, q_labels, kb, r)
            assert got == pytest.approx(sum(scores) / len(scores), rel=1e-12)


class TestAveragePrecision:
    def test_single_relevant_at_rank_k(self):
        width = 8
        q = np.ones(width).reshape(1, -1)
        # distances 0,1,2,3 with the only relevant item at rank 3
        codes = np.array(
            [
                np.ones(width),
                np.concatenate([[-1.0], np.ones(width - 1)]),
                np.concatenate([[-1.0, -1.0], np.ones(width - 2)]),
                np.concatenate([[-1.0, -1.0, -1.0], np.ones(width - 3)]),
            ]
        )
        kb = KnowledgeBase(codes, [1, 1, 0, 1])
        aps = average_precisions(q, [0], kb)
        assert aps[0] == pytest.approx(1.0 / 3.0)

    def test_perfect_ranking_scores_one(self):
        rng = np.random.default_rng(11)
        codes = random_signs(8, 16, rng)
        kb = KnowledgeBase(codes, [0] * 8)
        aps = average_precisions(codes[:2], [0, 0], kb)
        assert_array_equal(aps, [1.0, 1.0])

    def test_matches_naive_formula(self):
        rng = np.random.default_rng(12)
        codes = random_signs(35, 14, rng)
        labels = rng.integers(0, 3, size=35)
        kb = KnowledgeBase(codes, labels)
        queries = random_signs(12, 14, rng)
        q_labels = rng.integers(0, 4, size=12)  # label 3 never appears in the base
        aps = average_precisions(queries, q_labels, kb)
        for j in range(12):
            expected = naive_average_precision(kb, queries[j], q_labels[j])
            if np.isnan(expected):
                assert np.isnan(aps[j])
            else:
                assert aps[j] == pytest.approx(expected, rel=1e-12)

    def test_self_exclusion_matches_naive(self):
        rng = np.random.default_rng(13)
        codes = random_signs(20, 10, rng)
        labels = rng.integers(0, 2, size=20)
        kb = KnowledgeBase(codes, labels)
        aps = average_precisions(codes, labels, kb, query_ids=np.arange(20))
        for j in range(20):
            expected = naive_average_precision(kb, codes[j], labels[j], query_id=j)
            assert aps[j] == pytest.approx(expected, rel=1e-12)


class TestMeanAveragePrecision:
    def test_skips_queries_without_relevant_items(self):
        rng = np.random.default_rng(14)
        codes = random_signs(10, 8, rng)
        kb = KnowledgeBase(codes, [0] * 10)
        queries = random_signs(3, 8, rng)
        # labels 0,0,5: the third query has nothing relevant
        aps = average_precisions(queries, [0, 0, 5], kb)
        expected = np.nanmean(aps)
        got = mean_average_precision(queries, [0, 0, 5], kb)
        assert got == pytest.approx(float(expected), rel=1e-12)

    def test_all_queries_unmatched_raises(self):
        kb = KnowledgeBase(np.ones((4, 8)), [0, 0, 1, 1])
        with pytest.raises(ValueError):
            mean_average_precision(np.ones((2, 8)), [7, 8], kb)

    def test_invariant_under_relabeling(self):
        rng = np.random.default_rng(15)
        codes = random_signs(30, 12, rng)
        labels = rng.integers(0, 3, size=30)
        queries = random_signs(10, 12, rng)
        q_labels = rng.integers(0, 3, size=10)
        relabel = {0: 42, 1: 7, 2: 13}
        kb1 = KnowledgeBase(codes, labels)
        kb2 = KnowledgeBase(codes, np.vectorize(relabel.get)(labels))
        m1 = mean_average_precision(queries, q_labels, kb1)
        m2 = mean_average_precision(queries, np.vectorize(relabel.get)(q_labels), kb2)
        assert m1 == pytest.approx(m2, rel=1e-12)


class TestEvaluateRetrieval:
    def test_agrees_with_standalone_metrics(self):
        rng = np.random.default_rng(16)
        codes = random_signs(45, 16, rng)
        labels = rng.integers(0, 3, size=45)
        kb = KnowledgeBase(codes, labels)
        queries = random_signs(14, 16, rng)
        q_labels = rng.integers(0, 3, size=14)
        report = evaluate_retrieval(queries, q_labels, kb, [0, 2, 4])
        for r in (0, 2, 4):
            assert report.precision_at_r[r] == pytest.approx(
                precision_at_radius(queries, q_labels, kb, r), rel=1e-12
            )
        assert report.map_score == pytest.approx(
            mean_average_precision(queries, q_labels, kb), rel=1e-12
        )
        assert report.n_queries == 14

    def test_empty_counts_per_radius(self):
        kb = KnowledgeBase(np.ones((3, 8)), [0, 0, 0])
        queries = np.vstack([np.ones(8), -np.ones(8)])
        report = evaluate_retrieval(queries, [0, 0], kb, [0, 8], with_map=False)
        assert report.empty_return_count[0] == 1
        assert report.empty_return_count[8] == 0
        assert report.map_score is None

    def test_map_excluded_count(self):
        rng = np.random.default_rng(17)
        codes = random_signs(10, 8, rng)
        kb = KnowledgeBase(codes, [0] * 10)
        queries = random_signs(3, 8, rng)
        report = evaluate_retrieval(queries, [0, 3, 4], kb, [2])
        assert report.map_excluded_count == 2

    def test_no_radii_rejected(self):
        kb = KnowledgeBase(np.ones((2, 4)), [0, 1])
        with pytest.raises(ValueError):
            evaluate_retrieval(np.ones((1, 4)), [0], kb, [])
