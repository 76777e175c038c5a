"""Tests for increment likelihoods, caches, and degree-power traces."""

import itertools
import math

import numpy as np
import pytest

import growthfit as gf
from growthfit.likelihood import (
    DEFAULT_ORDERING_SAMPLES,
    MAX_EXHAUSTIVE_CHOICES,
    build_choice_cache,
    build_dp_trace,
    cache_loglik,
    cache_logratios,
    dp_trace_loglik,
    dp_trace_logp,
    orderings_for_increment,
    per_choice_ratio,
)
from oracles import oracle_increment_probability


def schedule_for(*pairs):
    weights, comps = zip(*pairs)
    return gf.ModelSchedule.constant(gf.MixtureInterval(tuple(weights), tuple(comps)))


def path_plus_star():
    """Path 1-2-3 (ids 0-1-2) about to receive node 3 -> {1, 2}."""
    graph = gf.graph_from_edges([(0, 1), (1, 2)])
    inc = gf.Increment(0, 3, True, (1, 2), (False, False))
    return graph, inc


class TestWorkedExample:
    def test_linear_degree_value(self):
        graph, inc = path_plus_star()
        p = gf.increment_probability(graph, inc, schedule_for((1.0, gf.DegreePower(1.0))))
        assert abs(p - 5.0 / 12.0) < 1e-15

    def test_uniform_value(self):
        graph, inc = path_plus_star()
        p = gf.increment_probability(graph, inc, schedule_for((1.0, gf.Random())))
        assert abs(p - 1.0 / 3.0) < 1e-15

    def test_per_choice_ratio(self):
        graph, inc = path_plus_star()
        stream = gf.GrowthStream(seed_edges=[(0, 1), (1, 2)], increments=[inc])
        summary, _ = gf.score_stream(stream, schedule_for((1.0, gf.DegreePower(1.0))))
        assert abs(summary.c0 - math.sqrt(5.0 / 4.0)) < 1e-15


class TestAgainstBruteForceOracle:
    def run_case(self, rng):
        n = int(rng.integers(5, 12))
        edges = set()
        for v in range(1, n):
            edges.add((int(rng.integers(0, v)), v))
        for _ in range(int(rng.integers(0, n))):
            u, v = sorted(rng.choice(n, size=2, replace=False).tolist())
            edges.add((int(u), int(v)))
        edges = sorted(edges)
        graph = gf.graph_from_edges(edges, num_nodes=n)

        pool_specs = [
            (gf.Random(), ("rand",)),
            (gf.DegreePower(1.0), ("dp", 1.0)),
            (gf.DegreePower(0.0), ("dp", 0.0)),
            (gf.DegreePower(-0.1), ("dp", -0.1)),
            (gf.DegreePower(2.1), ("dp", 2.1)),
            (gf.RankPreference(1.0), ("rp", 1.0)),
            (gf.TriangleClosure(), ("tri",)),
        ]
        k = int(rng.integers(1, 4))
        picks = rng.choice(len(pool_specs), size=k, replace=False)
        weights = rng.dirichlet(np.ones(k))
        comps = tuple(pool_specs[i][0] for i in picks)
        mixture = [(float(w), pool_specs[i][1]) for w, i in zip(weights, picks)]
        schedule = gf.ModelSchedule.constant(gf.MixtureInterval(tuple(weights), comps))

        center_is_new = bool(rng.integers(0, 2))
        if center_is_new:
            center, pool = n, list(range(n))
        else:
            center = int(rng.integers(0, n))
            banned = {center} | set(graph.neighbors(center))
            pool = [x for x in range(n) if x not in banned]
            if not pool:
                return None
        q = int(rng.integers(1, min(4, len(pool)) + 1))
        existing = [int(t) for t in rng.choice(pool, size=q, replace=False)]
        first_new = n + (1 if center_is_new else 0)
        n_new = int(rng.integers(0, 2))
        targets = [(t, False) for t in existing]
        targets += [(first_new + i, True) for i in range(n_new)]
        inc = gf.Increment(
            99, center, center_is_new,
            tuple(t for t, _ in targets),
            tuple(is_new for _, is_new in targets),
        )
        p_pkg = gf.increment_probability(graph, inc, schedule, max_exhaustive_choices=8)
        p_ref = oracle_increment_probability(n, edges, center, center_is_new, targets, mixture)
        return p_pkg, p_ref

    def test_randomized_increments_match(self):
        rng = np.random.default_rng(42)
        checked = 0
        while checked < 80:
            case = self.run_case(rng)
            if case is None:
                continue
            p_pkg, p_ref = case
            checked += 1
            if p_ref == 0.0:
                assert p_pkg == 0.0
            else:
                assert abs(p_pkg - p_ref) <= 1e-12 * abs(p_ref)


class TestOrderings:
    def test_small_increments_enumerate_exhaustively(self):
        inc = gf.Increment(0, 9, True, (1, 2, 3), (False,) * 3)
        orders, sampled, log_mult = orderings_for_increment(inc, 0, 0, 5, 120)
        assert not sampled
        assert log_mult == 0.0
        assert sorted(orders) == sorted(itertools.permutations((1, 2, 3)))

    def test_large_increments_sample(self):
        inc = gf.Increment(0, 99, True, tuple(range(6)), (False,) * 6)
        orders, sampled, log_mult = orderings_for_increment(inc, 3, 7, 5, 50)
        assert sampled
        assert len(orders) == 50
        assert abs(log_mult - (math.log(math.factorial(6)) - math.log(50))) < 1e-12
        for order in orders:
            assert sorted(order) == list(range(6))

    def test_sampling_is_deterministic_in_seed_and_index(self):
        inc = gf.Increment(0, 99, True, tuple(range(6)), (False,) * 6)
        a = orderings_for_increment(inc, 3, 7, 5, 50)[0]
        b = orderings_for_increment(inc, 3, 7, 5, 50)[0]
        c = orderings_for_increment(inc, 4, 7, 5, 50)[0]
        assert a == b
        assert a != c

    def test_sampled_estimator_is_unbiased(self):
        graph = gf.graph_from_edges(
            [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (1, 5), (2, 6)]
        )
        inc = gf.Increment(9, 7, True, (0, 2, 3, 4, 5, 6), (False,) * 6)
        sched = schedule_for((1.0, gf.DegreePower(1.0)))
        exact = gf.increment_probability(graph, inc, sched, max_exhaustive_choices=6)
        draws = np.array(
            [
                gf.increment_probability(graph, inc, sched, seed=k, ordering_samples=40)
                for k in range(400)
            ]
        )
        se = draws.std(ddof=1) / math.sqrt(draws.size)
        assert abs(draws.mean() - exact) < 4.0 * se


class TestScoreStream:
    def make_stream(self, spec, n=300, seed=0, **kw):
        return gf.grow(gf.GrowthRecipe.constant(spec, increments=n, **kw), seed=seed)

    def test_uniform_model_is_its_own_baseline(self):
        stream = self.make_stream("RAND", internal_prob=0.2, internal_targets=2, seed_clique=6)
        summary, _ = gf.score_stream(stream, schedule_for((1.0, gf.Random())))
        assert summary.loglik == summary.loglik_rand
        assert summary.c0 == 1.0

    def test_flat_degree_power_equals_uniform(self):
        stream = self.make_stream("RAND", n=120)
        s_dp, _ = gf.score_stream(stream, schedule_for((1.0, gf.DegreePower(0.0))))
        s_rand, _ = gf.score_stream(stream, schedule_for((1.0, gf.Random())))
        assert s_dp.loglik == s_rand.loglik

    def test_true_model_beats_uniform_on_average(self):
        stream = self.make_stream("BA")
        summary, _ = gf.score_stream(stream, schedule_for((1.0, gf.DegreePower(1.0))))
        assert summary.c0 > 1.02

    def test_series_matches_totals(self):
        stream = self.make_stream("0.5*BA + 0.5*RAND", n=100)
        sched = schedule_for((0.5, gf.DegreePower(1.0)), (0.5, gf.Random()))
        summary, series = gf.score_stream(stream, sched, keep_series=True)
        assert len(series) == 100
        assert abs(summary.loglik - math.fsum(s.logp for s in series)) < 1e-9
        assert abs(summary.loglik_rand - math.fsum(s.logp_rand for s in series)) < 1e-9
        assert summary.total_choices == sum(s.num_choices for s in series)

    def test_impossible_increment_scores_zero(self):
        # center 0 closes a "triangle" with node 4, which shares no common
        # neighbor with it while eligible node 3 does: weight 0 against a
        # positive total, so no fallback fires and the step is impossible
        graph_edges = [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4)]
        inc = gf.Increment(0, 0, False, (4,), (False,))
        stream = gf.GrowthStream(seed_edges=graph_edges, increments=[inc])
        summary, series = gf.score_stream(
            stream, schedule_for((1.0, gf.TriangleClosure())), keep_series=True
        )
        assert summary.loglik == -math.inf
        assert summary.impossible_increments == 1
        assert series[0].impossible

    def test_overfull_star_is_rejected(self):
        graph_edges = [(0, 1), (0, 2), (0, 3)]
        inc = gf.Increment(0, 1, False, (2, 3), (False, False))
        stream = gf.GrowthStream(seed_edges=graph_edges, increments=[inc])
        # center 1 with neighborhood {0} leaves eligible {2, 3}: fine
        summary, _ = gf.score_stream(stream, schedule_for((1.0, gf.Random())))
        assert summary.c0 == 1.0
        bad = gf.Increment(0, 0, False, (1, 2), (False, False))
        with pytest.raises(gf.RejectedIncrementError):
            gf.score_stream(
                gf.GrowthStream(seed_edges=graph_edges, increments=[bad]),
                schedule_for((1.0, gf.Random())),
            )

    def test_per_choice_ratio_normalizes_by_choice_count(self):
        assert per_choice_ratio(math.log(4.0), 0.0, 2) == 2.0
        assert per_choice_ratio(-math.inf, 0.0, 5) == 0.0
        with pytest.raises(gf.UndefinedRatioError):
            per_choice_ratio(0.0, 0.0, 0)


class TestChoiceCache:
    def make(self, spec="0.4*BA + 0.3*TRI + 0.3*RAND", n=150, seed=2):
        stream = gf.grow(
            gf.GrowthRecipe.constant(
                spec, increments=n, new_targets=3, internal_prob=0.2,
                internal_targets=2, seed_clique=6,
            ),
            seed=seed,
        )
        comps = [gf.DegreePower(1.0), gf.TriangleClosure(), gf.Random()]
        return stream, comps, build_choice_cache(stream, comps)

    def test_cache_matches_direct_scoring(self):
        stream, comps, cache = self.make()
        for weights in ([1, 0, 0], [0, 0, 1], [0.4, 0.3, 0.3], [0.1, 0.8, 0.1]):
            sched = gf.ModelSchedule.constant(
                gf.MixtureInterval(tuple(float(w) for w in weights), tuple(comps))
            )
            direct, _ = gf.score_stream(stream, sched)
            ratios = cache_logratios(cache, np.array(weights, dtype=float))
            assert np.isfinite(ratios).all()
            cached = float(ratios.sum()) + direct.loglik_rand
            assert abs(cached - direct.loglik) < 1e-9

    def test_cache_loglik_matches_logratios(self):
        _, _, cache = self.make(n=80)
        grid = np.array([[1.0, 0.0, 0.0], [0.2, 0.5, 0.3], [0.0, 0.0, 1.0]])
        lls = cache_loglik(cache, grid)
        base = cache.logp_rand.sum()
        for row, expect in zip(grid, lls):
            assert abs(cache_logratios(cache, row).sum() + base - expect) < 1e-10

    def test_uniform_weights_give_zero_ratio(self):
        _, _, cache = self.make(spec="RAND", n=60)
        ratios = cache_logratios(cache, np.array([0.0, 0.0, 1.0]))
        assert np.max(np.abs(ratios)) == 0.0

    def test_cache_metadata(self):
        from growthfit.stream import summarize_stream

        stream, _, cache = self.make(n=60)
        assert cache.num_choices.sum() == summarize_stream(stream).model_choices
        assert len(cache.timestamps) == len(stream.increments)
        assert cache.sampled_increments == 0  # all stars here have <= 5 choices
        assert np.all(np.diff(cache.increment_offsets) >= 0)


class TestDPTrace:
    def make_stream(self, spec="DP(1.5)", n=200):
        return gf.grow(
            gf.GrowthRecipe.constant(
                spec, increments=n, new_targets=3, internal_prob=0.15,
                internal_targets=2, seed_clique=5,
            ),
            seed=4,
        )

    def test_trace_matches_direct_scoring(self):
        stream = self.make_stream()
        trace = build_dp_trace(stream)
        for alpha in (-0.1, 0.0, 0.5, 1.0, 1.7, 2.1):
            sched = schedule_for((1.0, gf.DegreePower(alpha)))
            direct, _ = gf.score_stream(stream, sched)
            got = dp_trace_logp(trace, alpha).sum()
            assert abs(got - direct.loglik) <= 1e-9 * max(1.0, abs(direct.loglik))

    def test_trace_baseline_matches_direct(self):
        stream = self.make_stream(n=100)
        trace = build_dp_trace(stream)
        direct, _ = gf.score_stream(stream, schedule_for((1.0, gf.Random())))
        assert abs(trace.logp_rand.sum() - direct.loglik_rand) < 1e-9

    def test_flat_exponent_is_exactly_uniform(self):
        stream = self.make_stream(n=100)
        trace = build_dp_trace(stream)
        assert np.array_equal(dp_trace_logp(trace, 0.0), trace.logp_rand)

    def test_vectorized_grid_matches_single_evals(self):
        stream = self.make_stream(n=80)
        trace = build_dp_trace(stream)
        grid = np.array([0.0, 0.8, 1.0, 1.9])
        lls = dp_trace_loglik(trace, grid)
        for alpha, expect in zip(grid, lls):
            assert abs(dp_trace_logp(trace, float(alpha)).sum() - expect) < 1e-10
