"""Acceptance criteria AC1 to AC12, one test each, each printing a PASS/FAIL line.

The lines are also collected into an "acceptance criteria" section of the
pytest terminal summary.
"""

import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from knnbanzhaf.apps import (
    NoiseMask,
    as_float_values,
    inject_label_noise,
    label_flip_repair_curve,
    mislabel_detection_scores,
    point_removal_curve,
    two_gaussians,
)
from knnbanzhaf.dp_efficient import banzhaf_dp_efficient, compute_g
from knnbanzhaf.dp_standard import banzhaf_dp_standard, build_f_table
from knnbanzhaf.dp_unweighted import banzhaf_dp_unweighted
from knnbanzhaf.model import (
    Dataset,
    GameSpec,
    average_over_tests,
    combine_subgames,
    decompose_multiclass,
    game_from_weights,
    prepare_game,
)
from knnbanzhaf.montecarlo import (
    TopKWindow,
    banzhaf_mc_coalition,
    banzhaf_mc_permutation,
    coalition_marginals,
    deviation,
    window_marginals,
)
from knnbanzhaf.oracle import (
    _rank_value,
    banzhaf_bruteforce_multiclass,
    banzhaf_exact_bruteforce,
    lemma_violations,
)
from knnbanzhaf.runner import RunConfig, run_bench, synthetic_gaussian, value_dataset

from conftest import A1_VALUES, random_unit_game, random_weighted_game


def _timed(fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - start


def test_ac1_golden_weighted_example(a1_game, acceptance):
    results = {}
    for name, engine in [
        ("oracle", banzhaf_exact_bruteforce),
        ("standard", banzhaf_dp_standard),
        ("efficient", banzhaf_dp_efficient),
    ]:
        vals, secs = _timed(engine, a1_game)
        results[name] = (vals.fractions() == list(A1_VALUES), secs)
    ok = all(match and secs < 1.0 for match, secs in results.values())
    detail = ", ".join(f"{k} exact={m} {s * 1e3:.1f}ms" for k, (m, s) in results.items())
    assert acceptance("AC1", ok, detail)


def test_ac2_golden_unweighted_example(a2_game, acceptance):
    vals, secs = _timed(banzhaf_dp_unweighted, a2_game)
    third = vals.fractions()[2]
    full = vals.same_values(banzhaf_exact_bruteforce(a2_game))
    ok = third == Fraction(1, 4) and full and secs < 1.0
    assert acceptance("AC2", ok, f"z3={third}, vector equals oracle={full}, {secs * 1e3:.1f}ms")


def test_ac3_oracle_equivalence_fuzz(acceptance):
    start = time.perf_counter()
    rng = random.Random(2024)
    weighted_bad = 0
    for _ in range(300):
        game = random_weighted_game(rng, n_range=(1, 12), k_range=(1, 5), max_mag=8)
        ref = banzhaf_exact_bruteforce(game)
        if not (banzhaf_dp_standard(game).same_values(ref) and banzhaf_dp_efficient(game).same_values(ref)):
            weighted_bad += 1
    unit_bad = 0
    for _ in range(300):
        game = random_unit_game(rng, n_range=(1, 14), k_range=(1, 6))
        if not banzhaf_dp_unweighted(game).same_values(banzhaf_exact_bruteforce(game)):
            unit_bad += 1
    secs = time.perf_counter() - start
    ok = weighted_bad == 0 and unit_bad == 0 and secs < 300
    detail = f"weighted mismatches {weighted_bad}/300, unweighted mismatches {unit_bad}/300, {secs:.1f}s"
    assert acceptance("AC3", ok, detail)


def test_ac4_sign_rule_exhaustive(acceptance):
    rng = random.Random(4)
    games = [random_weighted_game(rng, n_range=(1, 10)) for _ in range(200)]
    games += [random_unit_game(rng, n_range=(1, 10)) for _ in range(200)]
    # three-class subgames add zero-weight points
    for _ in range(100):
        n = rng.randint(1, 10)
        train = Dataset(np.array([[rng.random()] for _ in range(n)]), [rng.randrange(3) for _ in range(n)], 3)
        spec = GameSpec(k=rng.randint(1, 5), weight_scheme=rng.choice(["uniform", "inverse-distance"]), bits=3)
        games += [sub.game for sub in decompose_multiclass(train, [rng.random()], rng.randrange(3), spec)]
    bad = sum(len(lemma_violations(g)) for g in games)
    assert acceptance("AC4", bad == 0, f"{len(games)} games, {bad} wrong-direction flips")


def _direct_g_table(max_n: int):
    # prefix[a][t] = sum_{j <= t} C(a, j), each binomial summed term by term
    prefix = []
    for a in range(max_n + 1):
        acc, row = 0, []
        for j in range(a + 1):
            acc += math.comb(a, j)
            row.append(acc)
        prefix.append(row)

    def direct(n, k):
        top = n - k - 1
        return [0] + [prefix[n - m][min(top, n - m)] if top >= 0 else 0 for m in range(1, n + 1)]

    return direct


def test_ac5_g_recurrence(acceptance):
    direct = _direct_g_table(200)
    bad = pairs = 0
    for n in range(1, 201):
        for k in range(1, n + 1):
            pairs += 1
            if compute_g(n, k) != direct(n, k):
                bad += 1
    assert acceptance("AC5", bad == 0, f"{pairs} (n, k) pairs, {bad} mismatches")


def test_ac6_count_conservation(acceptance):
    rng = random.Random(6)
    bad = checks = 0
    for _ in range(60):
        game = random_weighted_game(rng, n_range=(1, 10))
        for i in range(1, game.n + 1):
            f = build_f_table(game, i, full=True)
            for s in range(game.n):
                checks += 1
                bad += f.layer_total(s) != math.comb(game.n - 1, s)
    assert acceptance("AC6", bad == 0, f"{checks} (game, i, s) layers, {bad} mismatches")


@pytest.mark.slow
def test_ac7_scaling(acceptance):
    # fastest of three runs per size; uniform weights for both engines, as in
    # the reference scalability benchmark
    uw_rows, uw_slope = run_bench(
        RunConfig(algo="unweighted", k=5, budget_secs=600), [1_000, 10_000, 100_000], repeats=3
    )
    ef_rows, ef_slope = run_bench(
        RunConfig(algo="efficient", k=5, budget_secs=600), [250, 500, 1000, 2000], repeats=3
    )
    largest = uw_rows[-1]
    ok = (
        all(r.status == "ok" for r in uw_rows + ef_rows)
        and uw_slope is not None and abs(uw_slope - 1.0) <= 0.35
        and largest.seconds < 600
        and ef_slope is not None and abs(ef_slope - 2.0) <= 0.35
    )

    def fmt(rows):
        return " ".join(f"{r.n}:{r.seconds:.3f}s" if r.seconds is not None else f"{r.n}:{r.status}" for r in rows)

    detail = (
        f"unweighted slope {uw_slope:.3f} [{fmt(uw_rows)}]; "
        f"efficient slope {ef_slope:.3f} [{fmt(ef_rows)}]"
    )
    assert acceptance("AC7", ok, detail)


def _unbiased(estimator, game, exact, rounds=10_000, seed=808):
    est = estimator(game, rounds, seed)
    se = est.std_errors
    # a coordinate whose samples never vary must hit the exact value
    ok = np.where(se > 0, np.abs(est.values - exact) <= 4 * se, est.values == exact)
    return bool(ok.all()), float(np.max(np.abs(est.values - exact) / np.where(se > 0, se, 1.0)))


def _convergence_medians(seeds=range(5), n=1000, n_test=10, k=5, max_log=14):
    """Median deviation over seeds at m = 2^7 .. 2^14 for dataset-level values.

    Each seed is one run of 2^14 coalition rounds per test point; the
    estimate at m is the mean of its first m rounds.
    """
    data, _, _ = synthetic_gaussian(n + n_test, 32, 0)
    train, test = data.subset(range(n)), data.subset(range(n, n + n_test))
    spec = GameSpec(k=k)
    games = [prepare_game(train, x, int(y), spec) for x, y in zip(test.features, test.labels)]
    exact = average_over_tests([banzhaf_dp_unweighted(g) for g in games])
    ms = [2 ** j for j in range(7, max_log + 1)]
    devs = []
    for seed in seeds:
        acc = np.zeros((len(ms), n))
        for j, game in enumerate(games):
            cum = np.cumsum(coalition_marginals(game, ms[-1], seed + 1_000_003 * j), axis=0, dtype=np.int32)
            order = list(game.order)
            for a, m in enumerate(ms):
                acc[a, order] += cum[m - 1] / m
        devs.append([deviation(row / n_test, exact) for row in acc])
    return ms, np.median(np.array(devs), axis=0)


@pytest.mark.slow
def test_ac8_monte_carlo(acceptance):
    game = random_weighted_game(random.Random(88), n_range=(10, 10), k_range=(3, 3))
    exact = banzhaf_exact_bruteforce(game).to_float()
    coal_ok, coal_z = _unbiased(banzhaf_mc_coalition, game, exact)
    perm_ok, perm_z = _unbiased(banzhaf_mc_permutation, game, exact)
    ms, medians = _convergence_medians()
    mono = bool(np.all(np.diff(medians) <= 0))
    ok = coal_ok and perm_ok and mono
    detail = (
        f"coalition max |z|={coal_z:.2f}, permutation max |z|={perm_z:.2f}; "
        f"median deviation {' '.join(f'{d:.4f}' for d in medians)} non-increasing={mono}"
    )
    assert acceptance("AC8", ok, detail)


def test_ac9_locality_equivalence(acceptance):
    rng = random.Random(9)
    pairs = bad = 0
    while pairs < 10_000:
        n = rng.randint(1, 50)
        k = rng.randint(1, 8)
        game = game_from_weights([rng.randint(-6, 6) for _ in range(n)], k)
        mask = np.array([rng.random() < rng.random() for _ in range(n)])
        members = set(np.flatnonzero(mask).tolist())
        window = TopKWindow(game, np.flatnonzero(mask)).marginals(np.arange(n), mask)
        batched = window_marginals(np.asarray(game.signed_weights), k, mask[None, :])[0]
        for r in range(n):
            naive = _rank_value(members | {r}, game) - _rank_value(members - {r}, game)
            bad += window[r] != naive or batched[r] != naive
            pairs += 1
    assert acceptance("AC9", bad == 0, f"{pairs} (coalition, player) pairs, {bad} mismatches")


def _trivial_score_identities():
    vals = np.arange(100.0)
    exact = mislabel_detection_scores(vals, NoiseMask(frozenset(range(10))), 0.1)["f1"] == 1.0
    disjoint = mislabel_detection_scores(vals, NoiseMask(frozenset(range(90, 100))), 0.1)["f1"] == 0.0
    half = mislabel_detection_scores(vals, NoiseMask(frozenset([*range(5), *range(50, 55)])), 0.1)
    halves = half["precision"] == half["recall"] == half["f1"] == 0.5
    auc_ok = 0.0 <= half["auc_roc"] <= 1.0
    return exact and disjoint and halves and auc_ok


@pytest.mark.slow
def test_ac10_applications(acceptance):
    config = RunConfig(k=5, threads=1)
    n, budget = 2000, int(0.05 * 2000)
    areas, random_areas, first_gain = [], [], []
    for seed in range(5):
        train = two_gaussians(n, d=2, separation=2.0, seed=seed)
        test = two_gaussians(100, d=2, separation=2.0, seed=1000 + seed)
        noisy, _ = inject_label_noise(train, 0.05, seed)
        values = as_float_values(value_dataset(noisy, test, config))
        shuffled = np.random.default_rng(seed).random(n)
        areas.append(point_removal_curve(noisy, test, values, config.spec, n, stride=20).area())
        random_areas.append(point_removal_curve(noisy, test, shuffled, config.spec, n, stride=20).area())
        repair = label_flip_repair_curve(noisy, test, values, config.spec, budget)
        gains = [t for t, y in zip(repair.x, repair.y) if y > repair.y[0]]
        first_gain.append(gains[0] if gains else math.inf)
    removal_ok = np.median(areas) < np.median(random_areas)
    repair_ok = np.median(first_gain) <= budget
    scores_ok = _trivial_score_identities()
    ok = removal_ok and repair_ok and scores_ok
    detail = (
        f"(a) median removal area {np.median(areas):.1f} vs random {np.median(random_areas):.1f}; "
        f"(b) median first gain after {np.median(first_gain)} of {budget} flips; "
        f"(c) identities hold={scores_ok}"
    )
    assert acceptance("AC10", ok, detail)


def test_ac11_multiclass_decomposition(acceptance):
    rng = np.random.default_rng(11)
    bad = 0
    cases = 150
    for case in range(cases):
        n = int(rng.integers(1, 11))
        labels = rng.integers(0, 3, n)
        train = Dataset(rng.standard_normal((n, 2)), labels, 3)
        x, y = rng.standard_normal(2), int(rng.integers(0, 3))
        if case % 2:
            spec = GameSpec(k=int(rng.integers(1, 6)))
            engine = banzhaf_dp_unweighted
        else:
            spec = GameSpec(k=int(rng.integers(1, 6)), weight_scheme="inverse-distance", bits=3)
            engine = banzhaf_dp_efficient
        subgames = decompose_multiclass(train, x, y, spec)
        got = combine_subgames([engine(sub.game) for sub in subgames])
        bad += got.fractions() != banzhaf_bruteforce_multiclass(subgames).fractions()
    assert acceptance("AC11", bad == 0, f"{cases} three-class games, {bad} mismatches")


def test_ac12_negative_tail_table(a2_game, acceptance):
    oracle = banzhaf_exact_bruteforce(a2_game).fractions()
    plus = banzhaf_dp_unweighted(a2_game, negative_tail_table="plus").fractions()
    minus = banzhaf_dp_unweighted(a2_game, negative_tail_table="minus").fractions()
    default = banzhaf_dp_unweighted(a2_game).fractions()
    rng = random.Random(12)
    minus_wrong = plus_wrong = 0
    for _ in range(200):
        game = random_unit_game(rng)
        ref = banzhaf_exact_bruteforce(game).fractions()
        plus_wrong += banzhaf_dp_unweighted(game, negative_tail_table="plus").fractions() != ref
        minus_wrong += banzhaf_dp_unweighted(game, negative_tail_table="minus").fractions() != ref
    ok = plus == oracle and minus != oracle and default == plus and plus_wrong == 0 and minus_wrong > 0
    detail = (
        f"z2 oracle {oracle[1]}, b+ {plus[1]}, b- {minus[1]}; default is b+; "
        f"random games wrong: b+ {plus_wrong}/200, b- {minus_wrong}/200"
    )
    assert acceptance("AC12", ok, detail)
