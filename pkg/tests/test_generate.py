"""Tests for the growth generator and its samplers."""

import pytest

import growthfit as gf
from growthfit.generate import sample_choice_frequencies
from growthfit.stream import extract_operation_schedule


def chi_square_stat(counts, probs):
    expected = probs * counts.sum()
    mask = expected > 0
    assert counts[~mask].sum() == 0, "draws landed on zero-probability nodes"
    return float(((counts[mask] - expected[mask]) ** 2 / expected[mask]).sum()), int(
        mask.sum() - 1
    )


class TestGrowthRecipe:
    def test_json_round_trip(self):
        recipe = gf.GrowthRecipe.two_phase(
            "0.3*BA + 0.7*RAND", "BA", 99.0, increments=200, new_targets=2,
            internal_prob=0.1, internal_targets=1, seed_clique=5,
        )
        assert gf.GrowthRecipe.from_json(recipe.to_json()) == recipe

    def test_seed_defaults_to_one_more_than_star_size(self):
        assert gf.GrowthRecipe.constant("BA", new_targets=4).seed_size() == 5
        assert gf.GrowthRecipe.constant("BA", new_targets=3, seed_clique=9).seed_size() == 9

    def test_bad_spec_fails_at_construction(self):
        with pytest.raises(gf.ModelSpecError):
            gf.GrowthRecipe.constant("0.5*BA + 0.6*RAND").schedule()


class TestGrow:
    def test_same_seed_reproduces_stream(self):
        recipe = gf.GrowthRecipe.constant(
            "0.5*BA + 0.5*RAND", increments=120, new_targets=3,
            internal_prob=0.2, internal_targets=2, seed_clique=6,
        )
        a = gf.grow(recipe, seed=7)
        b = gf.grow(recipe, seed=7)
        c = gf.grow(recipe, seed=8)
        assert a.increments == b.increments
        assert a.increments != c.increments

    def test_external_star_shape(self):
        stream = gf.grow(gf.GrowthRecipe.constant("BA", increments=50, new_targets=3), seed=0)
        for inc in stream.increments:
            assert inc.center_is_new
            assert len(inc.existing_targets) == 3
        final = stream.final_graph()
        assert final.num_nodes == 4 + 50
        assert final.edge_count == 6 + 150

    def test_timestamps_are_increment_indices(self):
        stream = gf.grow(gf.GrowthRecipe.constant("RAND", increments=30, new_targets=2), seed=0)
        assert [inc.timestamp for inc in stream.increments] == list(range(30))

    def test_internal_stars_appear_and_are_valid(self):
        stream = gf.grow(
            gf.GrowthRecipe.constant(
                "RAND", increments=200, new_targets=2, internal_prob=0.3,
                internal_targets=2, seed_clique=5,
            ),
            seed=1,
        )
        internals = [i for i in stream.increments if not i.center_is_new]
        assert internals, "expected internal stars at 30% draw rate"
        stream.final_graph().check_invariants()

    def test_infeasible_internal_becomes_external_on_clique(self):
        # a growth run drawing internal stars on the seed clique cannot host
        # them (every node is adjacent to every other), so they fall back to
        # external stars instead of stalling
        recipe = gf.GrowthRecipe.constant(
            "RAND", increments=3, new_targets=2, internal_prob=1.0,
            internal_targets=1, seed_clique=5,
        )
        stream = gf.grow(recipe, seed=3)
        assert stream.increments[0].center_is_new

    def test_replayed_infeasible_shape_raises(self):
        donor = gf.grow(
            gf.GrowthRecipe.constant(
                "RAND", increments=5, new_targets=2, internal_prob=0.4,
                internal_targets=1, seed_clique=8,
            ),
            seed=5,
        )
        ops = extract_operation_schedule(donor)
        internal_rows = [r for r in ops.rows if not r.center_new]
        assert internal_rows, "donor run should contain an internal star"
        # replay onto a recipe whose seed clique is complete and too small
        # to ever host the internal star
        tiny = gf.GrowthRecipe.constant("RAND", seed_clique=2)
        from growthfit.stream import OperationSchedule

        with pytest.raises(gf.GrowthStallError):
            gf.grow(tiny, seed=0, op_schedule=OperationSchedule(rows=internal_rows))

    def test_two_phase_switch_changes_mechanism(self):
        recipe = gf.GrowthRecipe.two_phase("RAND", "DP(2.0)", 499.0, increments=1000,
                                           new_targets=2)
        stream = gf.grow(recipe, seed=2)
        pre = gf.fit_dp_changepoint(stream, 0.0, 2.0)
        assert abs(pre.t_hat - 499.0) <= 100.0


class TestSamplerDistributions:
    """Empirical draw frequencies against the model probability vectors."""

    def frozen_graph(self):
        return gf.grow(
            gf.GrowthRecipe.constant("0.5*BA + 0.5*RAND", increments=60, new_targets=3),
            seed=9,
        ).final_graph()

    def check_model(self, model, anchor=None, draws=20000):
        graph = self.frozen_graph()
        # an anchor is never itself eligible (it is the star's center or an
        # already-chosen target), so exclude it like real growth does
        excluded = set() if anchor is None else {anchor}
        eligible = [v for v in range(graph.num_nodes) if v not in excluded]
        counts = sample_choice_frequencies(
            graph, model, draws, seed=11, anchor=anchor, excluded=excluded
        )
        assert counts[sorted(excluded)].sum() == 0 if excluded else True
        mix = model if isinstance(model, gf.MixtureInterval) else gf.MixtureInterval.single(model)
        probs = gf.node_probabilities(mix, 0, graph, eligible, anchor=anchor)
        stat, df = chi_square_stat(counts[eligible], probs)
        assert gf.chi_square_sf(stat, df) > 0.001

    def test_uniform_sampler(self):
        self.check_model(gf.Random())

    def test_linear_degree_sampler(self):
        self.check_model(gf.DegreePower(1.0))

    def test_superlinear_degree_sampler(self):
        self.check_model(gf.DegreePower(1.6))

    def test_rank_sampler(self):
        self.check_model(gf.RankPreference(1.0))

    def test_triangle_sampler_with_anchor(self):
        self.check_model(gf.TriangleClosure(), anchor=0)

    def test_mixture_sampler(self):
        mix = gf.MixtureInterval(
            (0.4, 0.6), (gf.DegreePower(1.0), gf.Random())
        )
        self.check_model(mix)

    def test_zero_probability_nodes_never_drawn(self):
        graph = gf.graph_from_edges([(0, 1), (1, 2)], num_nodes=5)
        counts = sample_choice_frequencies(graph, gf.DegreePower(1.0), 4000, seed=3)
        assert counts[3] == 0 and counts[4] == 0

    def test_excluded_nodes_never_drawn(self):
        graph = self.frozen_graph()
        counts = sample_choice_frequencies(
            graph, gf.Random(), 2000, seed=4, excluded={0, 1, 2}
        )
        assert counts[:3].sum() == 0
