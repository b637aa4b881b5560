import random
from fractions import Fraction

import pytest

from knnbanzhaf.dp_efficient import banzhaf_dp_efficient
from knnbanzhaf.dp_unweighted import banzhaf_dp_unweighted, build_shared_tables
from knnbanzhaf.model import game_from_weights
from knnbanzhaf.oracle import banzhaf_exact_bruteforce

from conftest import random_unit_game


class TestSharedTables:
    def test_forward_entries(self, a2_game):
        fb, _ = build_shared_tables(a2_game)
        assert (fb.fwd(2, 0, 0), fb.fwd(2, -1, 1), fb.fwd(2, 1, 1)) == (1, 1, 1)

    def test_backward_entries(self, a2_game):
        fb, sig = build_shared_tables(a2_game)
        assert fb.bwd(4, 0, 0) == 1 and fb.bwd(4, -1, 1) == 1
        assert sig.minus(4, -1, 1) == 1

    def test_cumulative_backward(self, a2_game):
        fb, _ = build_shared_tables(a2_game)
        assert fb.bwd_cum(4, 0, 1) == 1

    def test_forward_layer_totals(self):
        import math

        game = random_unit_game(random.Random(31), n_range=(12, 12), k_range=(4, 4))
        fb, _ = build_shared_tables(game)
        for s in range(5):
            assert sum(fb.fwd(game.n, w, s) for w in range(-5, 6)) == math.comb(game.n, s)

    def test_first_layer_sign_totals(self):
        game = random_unit_game(random.Random(32), n_range=(10, 10))
        _, sig = build_shared_tables(game)
        n = game.n
        for i in range(1, n + 1):
            assert sig.plus(i, 1, 1) + sig.minus(i, -1, 1) == 2 ** (n - i + 1) - 1

    def test_rejects_weighted(self, a1_game):
        with pytest.raises(ValueError):
            build_shared_tables(a1_game)


class TestBanzhafUnweighted:
    def test_example_third_point(self, a2_game):
        assert banzhaf_dp_unweighted(a2_game).fractions()[2] == Fraction(1, 4)

    def test_example_vector_matches_oracle(self, a2_game):
        assert banzhaf_dp_unweighted(a2_game).same_values(banzhaf_exact_bruteforce(a2_game))

    def test_all_positive_k1(self):
        game = game_from_weights([1, 1, 1], 1, W=2)
        assert banzhaf_dp_unweighted(game).same_values(banzhaf_exact_bruteforce(game))

    def test_matches_oracle(self):
        rng = random.Random(33)
        for _ in range(300):
            game = random_unit_game(rng)
            assert banzhaf_dp_unweighted(game).same_values(banzhaf_exact_bruteforce(game))

    def test_zero_weights_match_oracle(self):
        rng = random.Random(34)
        for _ in range(200):
            n, k = rng.randint(1, 12), rng.randint(1, 6)
            game = game_from_weights([rng.choice((1, -1, 0)) for _ in range(n)], k, W=k + 1)
            assert banzhaf_dp_unweighted(game).same_values(banzhaf_exact_bruteforce(game))

    def test_tabular_path_agrees(self):
        rng = random.Random(35)
        for _ in range(100):
            game = random_unit_game(rng)
            a = banzhaf_dp_unweighted(game)
            assert a.same_values(banzhaf_dp_unweighted(game, method="tabular"))

    def test_matches_efficient_up_to_sixty(self):
        rng = random.Random(36)
        for n in (15, 30, 60):
            game = random_unit_game(rng, n_range=(n, n))
            assert banzhaf_dp_unweighted(game).same_values(banzhaf_dp_efficient(game))

    def test_rejects_weighted(self, a1_game):
        with pytest.raises(ValueError):
            banzhaf_dp_unweighted(a1_game)

    def test_rejects_unknown_options(self, a2_game):
        with pytest.raises(ValueError):
            banzhaf_dp_unweighted(a2_game, negative_tail_table="both")
        with pytest.raises(ValueError):
            banzhaf_dp_unweighted(a2_game, method="fast")


class TestNegativeTailTable:
    """A negative point flips a win only by displacing a positive k-th member."""

    def test_plus_table_matches_oracle(self, a2_game):
        vals = banzhaf_dp_unweighted(a2_game, negative_tail_table="plus").fractions()
        assert vals == banzhaf_exact_bruteforce(a2_game).fractions()
        assert vals[1] == Fraction(-1, 2)

    def test_minus_table_undercounts(self, a2_game):
        vals = banzhaf_dp_unweighted(a2_game, negative_tail_table="minus").fractions()
        assert vals[1] == Fraction(-1, 4)
        assert vals != banzhaf_exact_bruteforce(a2_game).fractions()

    def test_minus_table_only_affects_negative_points(self):
        rng = random.Random(37)
        for _ in range(50):
            game = random_unit_game(rng)
            ref = banzhaf_exact_bruteforce(game).fractions()
            minus = banzhaf_dp_unweighted(game, negative_tail_table="minus").fractions()
            for pid in range(game.n):
                if game.signed_weights[game.rank_of[pid]] > 0:
                    assert minus[pid] == ref[pid]
