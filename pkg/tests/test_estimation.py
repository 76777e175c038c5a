"""Tests for grid fitting, interval partitions, changepoints, and model tests."""

import numpy as np
import pytest

import growthfit as gf
from growthfit.estimation import (
    changepoint_grid,
    default_alpha_grid,
    partition_indices,
    simplex_grid,
)
from oracles import oracle_chi2_sf


class TestGrids:
    def test_alpha_grid_span_and_step(self):
        grid = default_alpha_grid()
        assert len(grid) == 221
        assert grid[0] == -0.1
        assert grid[-1] == 2.1
        assert np.allclose(np.diff(grid), 0.01)

    def test_simplex_grid_covers_simplex(self):
        grid = simplex_grid(2, 0.25)
        assert grid.tolist() == [
            [0.0, 1.0],
            [0.25, 0.75],
            [0.5, 0.5],
            [0.75, 0.25],
            [1.0, 0.0],
        ]

    def test_simplex_grid_three_components(self):
        grid = simplex_grid(3, 0.01)
        assert grid.shape == (5151, 3)
        assert np.all(grid >= 0.0)
        assert np.allclose(grid.sum(axis=1), 1.0, atol=1e-12)
        # ascending lexicographic order makes first-maximum ties reproducible
        as_tuples = [tuple(row) for row in np.round(grid, 10)]
        assert as_tuples == sorted(as_tuples)

    def test_changepoint_grid_is_inclusive_linspace(self):
        grid = changepoint_grid(0.0, 10.0, 5)
        assert grid.tolist() == [0.0, 2.0, 4.0, 6.0, 8.0, 10.0]


class TestPartitions:
    def make_cache(self, n=10):
        stream = gf.grow(
            gf.GrowthRecipe.constant("RAND", increments=n, new_targets=2), seed=0
        )
        return gf.build_choice_cache(stream, [gf.Random()])

    def test_count_mode_balances_increments(self):
        cache = self.make_cache(10)
        assert partition_indices(cache, 3, "count") == [(0, 3), (3, 6), (6, 10)]
        assert partition_indices(cache, 1, "count") == [(0, 10)]

    def test_time_mode_splits_timestamp_span(self):
        cache = self.make_cache(10)
        assert partition_indices(cache, 2, "time") == [(0, 5), (5, 10)]

    def test_empty_group_raises(self):
        cache = self.make_cache(10)
        with pytest.raises(gf.IntervalUnderflowError):
            partition_indices(cache, 11, "count")

    def test_time_mode_with_identical_timestamps_raises(self):
        incs = [gf.Increment(5, 3 + i, True, (0,), (False,)) for i in range(4)]
        stream = gf.GrowthStream(seed_edges=[(0, 1), (1, 2), (0, 2)], increments=incs)
        cache = gf.build_choice_cache(stream, [gf.Random()])
        with pytest.raises(gf.IntervalUnderflowError):
            partition_indices(cache, 2, "time")


class TestFitDegreeExponent:
    def test_recovers_exponent(self):
        stream = gf.grow(
            gf.GrowthRecipe.constant("DP(1.5)", increments=800, new_targets=3), seed=1
        )
        fit = gf.fit_degree_exponent(stream)
        assert abs(fit.value - 1.5) <= 0.1
        assert fit.loglik >= fit.loglik_rand

    def test_accepts_prebuilt_trace(self):
        stream = gf.grow(
            gf.GrowthRecipe.constant("BA", increments=300, new_targets=3), seed=2
        )
        trace = gf.build_dp_trace(stream)
        a = gf.fit_degree_exponent(stream)
        b = gf.fit_degree_exponent(trace)
        assert a.value == b.value
        assert a.loglik == b.loglik

    def test_custom_grid_argmax_is_first_maximum(self):
        stream = gf.grow(
            gf.GrowthRecipe.constant("RAND", increments=50, new_targets=2), seed=3
        )
        # exponent 0 is exactly uniform, so a grid of two zeros ties; the
        # first grid point must win
        fit = gf.fit_degree_exponent(stream, grid=np.array([0.0, -0.0]))
        assert fit.value == 0.0
        assert fit.logliks[0] == fit.logliks[1]


class TestFitMixtureWeights:
    def test_recovers_even_mixture(self):
        stream = gf.grow(
            gf.GrowthRecipe.constant("0.5*BA + 0.5*RAND", increments=900, new_targets=3),
            seed=4,
        )
        comps = [gf.DegreePower(1.0), gf.Random()]
        cache = gf.build_choice_cache(stream, comps)
        fit = gf.fit_mixture_weights(cache, 0, cache.num_increments)
        assert abs(fit.weights[0] - 0.5) <= 0.1
        assert abs(sum(fit.weights) - 1.0) < 1e-9

    def test_pure_component_hits_vertex(self):
        stream = gf.grow(
            gf.GrowthRecipe.constant("RAND", increments=400, new_targets=3), seed=5
        )
        comps = [gf.DegreePower(1.0), gf.Random()]
        cache = gf.build_choice_cache(stream, comps)
        fit = gf.fit_mixture_weights(cache, 0, cache.num_increments)
        assert fit.weights[1] >= 0.9

    def test_infeasible_stream_raises(self):
        inc = gf.Increment(0, 0, False, (4,), (False,))
        stream = gf.GrowthStream(
            seed_edges=[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4)], increments=[inc]
        )
        cache = gf.build_choice_cache(stream, [gf.TriangleClosure()])
        with pytest.raises(gf.NoFeasibleFitError):
            gf.fit_mixture_weights(cache, 0, 1)


class TestFitIntervals:
    def make_two_phase(self, n=1200, seed=6):
        stream = gf.grow(
            gf.GrowthRecipe.two_phase(
                "0.2*BA + 0.8*RAND", "0.8*BA + 0.2*RAND", n / 2 - 1,
                increments=n, new_targets=3,
            ),
            seed=seed,
        )
        comps = [gf.DegreePower(1.0), gf.Random()]
        return stream, gf.build_choice_cache(stream, comps)

    def test_two_intervals_track_the_phases(self):
        _, cache = self.make_two_phase()
        fit = gf.fit_intervals(cache, 2)
        w_pre = fit.intervals[0]["weights"][0]
        w_post = fit.intervals[1]["weights"][0]
        assert w_pre < 0.45
        assert w_post > 0.55

    def test_loglik_never_decreases_with_doubling(self):
        _, cache = self.make_two_phase(n=600)
        f1 = gf.fit_intervals(cache, 1)
        f2 = gf.fit_intervals(cache, 2)
        f4 = gf.fit_intervals(cache, 4)
        assert f2.loglik >= f1.loglik - 1e-9
        assert f4.loglik >= f2.loglik - 1e-9

    def test_interval_bookkeeping(self):
        _, cache = self.make_two_phase(n=600)
        fit = gf.fit_intervals(cache, 3)
        assert [iv["increments"] for iv in fit.intervals] == [200, 200, 200]
        assert fit.intervals[0]["start_index"] == 0
        assert fit.intervals[-1]["end_index"] == 599
        assert fit.total_choices == cache.num_choices.sum()

    def test_schedule_round_trip_scores_identically(self):
        stream, cache = self.make_two_phase(n=600)
        fit = gf.fit_intervals(cache, 2)
        summary, _ = gf.score_stream(stream, fit.schedule())
        assert abs(summary.loglik - fit.loglik) < 1e-6

    def test_scan_returns_one_fit_per_depth(self):
        _, cache = self.make_two_phase(n=600)
        fits = gf.scan_interval_counts(cache, 1, 4)
        assert [len(f.intervals) for f in fits] == [1, 2, 3, 4]

    def test_fit_stream_mixture_wraps_cache_build(self):
        stream, cache = self.make_two_phase(n=400)
        comps = [gf.DegreePower(1.0), gf.Random()]
        fit, built = gf.fit_stream_mixture(stream, comps, j=2)
        assert fit.loglik == gf.fit_intervals(cache, 2).loglik
        assert built.num_increments == cache.num_increments


class TestChangepoint:
    def test_exact_argmax_on_synthetic_series(self):
        ts = np.array([3, 5, 7, 9])
        pre = np.array([0.0, 0.0, -5.0, -5.0])
        post = np.array([-5.0, -5.0, 0.0, 0.0])
        cp = gf.fit_changepoint(pre, post, ts)
        assert cp.t_hat == 5.0
        assert cp.loglik == 0.0
        assert cp.logliks.tolist() == [-5.0, 0.0, -5.0, -10.0]

    def test_tied_series_picks_earliest_grid_point(self):
        ts = np.array([3, 5, 7, 9])
        series = np.array([-1.0, -2.0, -1.5, -0.5])
        cp = gf.fit_changepoint(series, series.copy(), ts)
        assert cp.t_hat == 3.0

    def test_custom_grid(self):
        ts = np.array([0, 10])
        pre = np.array([0.0, -1.0])
        post = np.array([-1.0, 0.0])
        cp = gf.fit_changepoint(pre, post, ts, grid=changepoint_grid(0.0, 10.0, 10))
        assert cp.t_hat == 0.0
        assert len(cp.grid) == 11

    def test_dp_changepoint_localizes_switch(self):
        stream = gf.grow(
            gf.GrowthRecipe.two_phase("DP(1.5)", "DP(0.5)", 999.0, increments=2000,
                                      new_targets=3),
            seed=0,
        )
        cp = gf.fit_dp_changepoint(stream, 1.5, 0.5)
        assert abs(cp.t_hat - 999.0) <= 100.0

    def test_joint_fit_recovers_exponent_pair(self):
        stream = gf.grow(
            gf.GrowthRecipe.two_phase("DP(1.5)", "DP(0.5)", 999.0, increments=2000,
                                      new_targets=3),
            seed=0,
        )
        joint = gf.fit_dp_changepoint_joint(
            stream, t_grid=np.arange(100.0, 1900.0, 50.0)
        )
        assert abs(joint.alpha_pre - 1.5) <= 0.15
        assert abs(joint.alpha_post - 0.5) <= 0.15
        assert abs(joint.t_hat - 999.0) <= 150.0

    def test_series_from_cache_matches_logratios(self):
        stream = gf.grow(
            gf.GrowthRecipe.constant("0.5*BA + 0.5*RAND", increments=100, new_targets=3),
            seed=1,
        )
        comps = [gf.DegreePower(1.0), gf.Random()]
        cache = gf.build_choice_cache(stream, comps)
        w = np.array([0.5, 0.5])
        series = gf.changepoint_series_from_cache(cache, w)
        assert series.shape == (100,)
        assert np.allclose(series, gf.cache_logratios(cache, w) + cache.logp_rand)


class TestWilks:
    def test_statistic_and_pvalue(self):
        report = gf.wilks_test(-100.0, -95.0, 2)
        assert report.statistic == 10.0
        assert abs(report.p_value - oracle_chi2_sf(10.0, 2)) < 1e-12

    def test_tiny_negative_statistic_clamps_to_zero(self):
        report = gf.wilks_test(-100.0, -100.0 - 1e-9, 1)
        assert report.statistic == 0.0
        assert report.p_value == 1.0

    def test_nesting_violation_raises(self):
        with pytest.raises(gf.NestingViolationError):
            gf.wilks_test(-100.0, -101.0, 1)

    def test_sf_matches_quadrature_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(40):
            df = int(rng.integers(1, 31))
            stat = float(rng.uniform(0.0, 100.0))
            assert abs(gf.chi_square_sf(stat, df) - oracle_chi2_sf(stat, df)) < 1e-6

    def test_compare_interval_fits_degrees_of_freedom(self):
        stream = gf.grow(
            gf.GrowthRecipe.constant(
                "0.4*BA + 0.3*TRI + 0.3*RAND", increments=400, new_targets=3
            ),
            seed=7,
        )
        comps = [gf.DegreePower(1.0), gf.TriangleClosure(), gf.Random()]
        cache = gf.build_choice_cache(stream, comps)
        f1 = gf.fit_intervals(cache, 1)
        f3 = gf.fit_intervals(cache, 3)
        report = gf.compare_interval_fits(f1, f3)
        # two extra intervals, each with two free weights
        assert report.df == 4
        assert report.statistic >= 0.0
