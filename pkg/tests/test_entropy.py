import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from semsig.entropy import (
    MessageModel,
    load_message_model,
    message_entropy,
    recommend_code_length,
    save_message_model,
    semantic_entropy,
    semantic_mutual_information,
    symbol_distribution,
)


def model(probs, symbols):
    ids = [f"m{i}" for i in range(len(probs))]
    return MessageModel(message_ids=tuple(ids), probs=tuple(probs), symbols=tuple(symbols))


class TestMessageEntropy:
    def test_uniform_four(self):
        assert message_entropy(model([0.25] * 4, "abcd")) == 2.0

    def test_degenerate_single(self):
        assert message_entropy(model([1.0], "a")) == 0.0

    def test_half_quarter_quarter(self):
        assert_allclose(message_entropy(model([0.5, 0.25, 0.25], "abc")), 1.5, atol=1e-15)

    def test_not_a_distribution_rejected(self):
        with pytest.raises(ValueError):
            model([0.5, 0.4], "ab")
        with pytest.raises(ValueError):
            model([0.7, -0.1, 0.4], "abc")


class TestSymbolDistribution:
    def test_aggregates_shared_symbol(self):
        # two car images and one cat image
        m = model([0.3, 0.2, 0.5], ["car", "car", "cat"])
        dist = symbol_distribution(m)
        assert_allclose(dist["car"], 0.5, atol=1e-15)
        assert_allclose(dist["cat"], 0.5, atol=1e-15)

    def test_injective_map_is_permutation(self):
        m = model([0.2, 0.3, 0.5], ["z", "x", "y"])
        dist = symbol_distribution(m)
        assert sorted(dist.values()) == sorted([0.2, 0.3, 0.5])

    def test_total_aggregation(self):
        m = model([0.1, 0.2, 0.3, 0.4], ["s"] * 4)
        assert symbol_distribution(m) == {"s": 1.0}

    def test_sums_to_one(self):
        rng = np.random.default_rng(0)
        p = rng.dirichlet(np.ones(9))
        m = model(p, [f"s{i % 3}" for i in range(9)])
        assert_allclose(sum(symbol_distribution(m).values()), 1.0, atol=1e-12)


class TestSemanticEntropy:
    def test_uniform_three_symbols(self):
        assert_allclose(semantic_entropy([1 / 3] * 3), math.log2(3), atol=1e-12)

    def test_single_symbol(self):
        assert semantic_entropy([1.0]) == 0.0

    def test_fair_coin(self):
        assert semantic_entropy([0.5, 0.5]) == 1.0

    def test_accepts_symbol_dict(self):
        assert semantic_entropy({"car": 0.5, "cat": 0.5}) == 1.0


class TestMutualInformation:
    def test_injective_uniform_four(self):
        rep = semantic_mutual_information(model([0.25] * 4, "abcd"))
        assert rep.mutual_info == 2.0
        assert rep.h_message == 2.0
        assert rep.h_symbol == 2.0
        assert rep.h_m_given_x == 0.0

    def test_all_to_one(self):
        rep = semantic_mutual_information(model([0.25] * 4, "aaaa"))
        assert rep.mutual_info == 0.0
        assert rep.h_symbol == 0.0

    def test_two_image_example(self):
        # messages (0.3, 0.2, 0.5), first two share a symbol
        rep = semantic_mutual_information(model([0.3, 0.2, 0.5], ["car", "car", "cat"]))
        assert_allclose(rep.mutual_info, 1.0, atol=1e-12)
        # frozen: -(0.3 log2 0.3 + 0.2 log2 0.2 + 0.5 log2 0.5)
        assert_allclose(rep.h_message, 1.4854752972273343, atol=1e-15)
        # frozen: 0.5 * H(0.6, 0.4), the car-conditional branch
        assert_allclose(rep.h_m_given_x, 0.4854752972273343, atol=1e-14)
        assert rep.h_x_given_m == 0.0

    def test_both_forms_agree_on_random_models(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            n = int(rng.integers(2, 12))
            p = rng.dirichlet(np.ones(n))
            symbols = [f"s{rng.integers(0, 5)}" for _ in range(n)]
            rep = semantic_mutual_information(model(p, symbols))
            # identity: H(M) - H(M|X) must equal H(X) - H(X|M)
            lhs = rep.h_message - rep.h_m_given_x
            rhs = rep.h_symbol - rep.h_x_given_m
            assert abs(lhs - rhs) <= 1e-9
            assert rep.mutual_info <= min(rep.h_message, rep.h_symbol) + 1e-12
            assert rep.mutual_info >= -1e-12

    def test_symbol_entropy_never_exceeds_message_entropy(self):
        rng = np.random.default_rng(43)
        for _ in range(50):
            n = int(rng.integers(2, 10))
            p = rng.dirichlet(np.ones(n))
            symbols = [f"s{rng.integers(0, 4)}" for _ in range(n)]
            rep = semantic_mutual_information(model(p, symbols))
            assert rep.h_symbol <= rep.h_message + 1e-12

    def test_merging_symbols_never_increases_entropy(self):
        rng = np.random.default_rng(44)
        for _ in range(50):
            n = int(rng.integers(3, 10))
            p = rng.dirichlet(np.ones(n))
            symbols = [f"s{rng.integers(0, 4)}" for _ in range(n)]
            before = semantic_mutual_information(model(p, symbols)).h_symbol
            merged = ["s0" if s == "s1" else s for s in symbols]
            after = semantic_mutual_information(model(p, merged)).h_symbol
            assert after <= before + 1e-12


class TestRecommendCodeLength:
    def test_exact_ceil(self):
        rep = semantic_mutual_information(model([0.25] * 4, "abcd"))
        assert recommend_code_length(rep, margin=1.0) == 2

    def test_triple_symbol_with_margin_eight(self):
        rep = semantic_mutual_information(model([1 / 3] * 3, "abc"))
        assert recommend_code_length(rep, margin=8.0) == 13

    def test_zero_information_clamps_to_one(self):
        rep = semantic_mutual_information(model([0.5, 0.5], "aa"))
        assert recommend_code_length(rep, margin=8.0) == 1

    def test_margin_below_one_rejected(self):
        rep = semantic_mutual_information(model([0.5, 0.5], "ab"))
        with pytest.raises(ValueError):
            recommend_code_length(rep, margin=0.5)


class TestModelFile:
    def test_round_trip(self, tmp_path):
        m = model([0.3, 0.2, 0.5], ["car", "car", "cat"])
        path = tmp_path / "messages.tsv"
        save_message_model(path, m)
        back = load_message_model(path)
        assert back.message_ids == m.message_ids
        assert back.symbols == m.symbols
        assert_allclose(back.probs, m.probs, rtol=0)

    def test_comments_and_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "messages.tsv"
        path.write_text("# header\nm0\t0.5\tcar\n\nm1\t0.5\tcat\n")
        m = load_message_model(path)
        assert m.message_ids == ("m0", "m1")

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "messages.tsv"
        path.write_text("m0\t0.5\tcar\nm1\tnot-a-number\tcat\n")
        with pytest.raises(ValueError, match=r":2: bad probability"):
            load_message_model(path)

    def test_duplicate_message_id_rejected(self, tmp_path):
        path = tmp_path / "messages.tsv"
        path.write_text("m0\t0.5\tcar\nm0\t0.5\tcat\n")
        with pytest.raises(ValueError):
            load_message_model(path)
