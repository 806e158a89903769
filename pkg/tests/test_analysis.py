"""Rank tables, dissimilarity, extension sets, embedding, calibration, bench.

The small fixture election is chosen so that every rank and TF-IDF value can
be recomputed by hand (or by a one-line sort over tfidf_value outputs, which
several tests do as their oracle).
"""

import logging
import math

import numpy as np
import pytest

from votesearch.analysis import (
    MISSING,
    DissimilarityGraph,
    Embedding,
    RankTableCache,
    bench_algorithms,
    build_dissimilarity_graph,
    build_extension,
    calibrate_gamma,
    dissimilarity,
    edge_weight,
    embed,
    rank_in_local,
    rank_table,
)
from votesearch.elections import ApprovalElection
from votesearch.search import NoSupportersError, UnknownResourceError, tfidf_value
from votesearch.solvers import AnnealingConfig
from votesearch.synthetic import SyntheticConfig, generate_election


def fixture_election():
    return ApprovalElection(
        {
            1: {100, 1, 2},
            2: {100, 1, 3},
            3: {100, 2, 3, 4},
            4: {1, 2},
            5: {100},
            6: {5},
        },
        resources={100, 1, 2, 3, 4, 5, 999},
    )


class TestRankInLocal:
    def test_ordering_matches_sorted_tfidf(self):
        # oracle: sort the local resources of the query by tfidf_value
        g = fixture_election()
        counts_local = {1: 2, 2: 2, 3: 2, 4: 1}
        counts_global = {1: 3, 2: 3, 3: 2, 4: 1}
        scores = {
            r: tfidf_value(counts_local[r], counts_global[r], 6, 2.0)
            for r in counts_local
        }
        ranked = sorted(scores, key=lambda r: (-scores[r], r))
        for expected_rank, r in enumerate(ranked, start=1):
            assert rank_in_local(g, 100, r) == expected_rank

    def test_tied_tfidf_breaks_by_ascending_id(self):
        # resources 1 and 2 have identical local and global counts, so their
        # TF-IDF values tie exactly; 1 must come first
        g = fixture_election()
        assert rank_in_local(g, 100, 1) == 3
        assert rank_in_local(g, 100, 2) == 4

    def test_highest_tfidf_gets_rank_one(self):
        g = fixture_election()
        assert rank_in_local(g, 100, 3) == 1

    def test_absent_resource_is_missing(self):
        g = fixture_election()
        assert rank_in_local(g, 100, 5) is MISSING
        assert rank_in_local(g, 100, 999) is MISSING

    def test_unknown_and_degenerate_inputs(self):
        g = fixture_election()
        with pytest.raises(UnknownResourceError):
            rank_in_local(g, 12345, 1)
        with pytest.raises(NoSupportersError):
            rank_in_local(g, 999, 1)
        with pytest.raises(ValueError):
            rank_in_local(g, 100, 100)


class TestRankTable:
    def test_full_table(self):
        g = fixture_election()
        table = rank_table(g, 100, gamma=2.0)
        assert table == {3: 1, 4: 2, 1: 3, 2: 4}

    def test_empty_when_supporters_add_nothing(self):
        g = fixture_election()
        # resource 5 is approved only by agent 6 who approves nothing else
        assert rank_table(g, 5, gamma=2.0) == {}

    def test_cache_returns_same_object_until_evicted(self):
        g = fixture_election()
        cache = RankTableCache(g, gamma=2.0, maxsize=2)
        first = cache.get(100)
        assert cache.get(100) is first
        assert cache.hits == 1 and cache.misses == 1
        cache.get(1)
        cache.get(2)  # evicts 100
        assert cache.get(100) is not first
        assert cache.get(100) == first


class TestDissimilarity:
    def test_mean_of_the_two_ranks(self):
        g = fixture_election()
        # rank_100(3) = 1 and rank_3(100) = 2, both hand-checked
        assert rank_in_local(g, 100, 3) == 1
        assert rank_in_local(g, 3, 100) == 2
        assert dissimilarity(g, 100, 3) == 1.5

    def test_symmetry(self):
        g = fixture_election()
        for x, y in ((100, 1), (1, 2), (2, 3), (100, 4)):
            assert dissimilarity(g, x, y) == dissimilarity(g, y, x)

    def test_missing_direction_poisons_the_pair(self):
        g = fixture_election()
        assert dissimilarity(g, 100, 5) is MISSING

    def test_at_least_one(self):
        g = fixture_election()
        for x, y in ((100, 1), (100, 3), (1, 3)):
            d = dissimilarity(g, x, y)
            assert d is not MISSING and d >= 1.0


class TestDissimilarityGraph:
    def test_build_over_fixture_nodes(self):
        g = fixture_election()
        graph = build_dissimilarity_graph(g, {100, 1, 3}, gamma=2.0)
        assert graph.nodes == frozenset({100, 1, 3})
        assert graph.get(100, 3) == dissimilarity(g, 100, 3)
        assert graph.get(3, 100) == graph.get(100, 3)

    def test_missing_pairs_left_out(self):
        g = fixture_election()
        graph = build_dissimilarity_graph(g, {100, 3, 5}, gamma=2.0)
        assert graph.get(100, 5) is MISSING
        assert graph.get(3, 5) is MISSING

    def test_unknown_node_lookup_rejected(self):
        g = fixture_election()
        graph = build_dissimilarity_graph(g, {100, 3}, gamma=2.0)
        with pytest.raises(ValueError):
            graph.get(100, 42)


class TestBuildExtension:
    def test_empty_input(self):
        g = fixture_election()
        assert build_extension(g, set()) == frozenset()

    def test_superset_of_input(self):
        g = fixture_election()
        ext = build_extension(g, {100})
        assert 100 in ext

    def test_fixture_extension(self):
        # with k=10 > m=4 every solver returns all four local resources, and
        # the size-2 follow-up committees stay inside the same five movies
        g = fixture_election()
        assert build_extension(g, {100}) == frozenset({100, 1, 2, 3, 4})

    def test_degenerate_member_skipped_with_warning(self, caplog):
        g = fixture_election()
        with caplog.at_level(logging.WARNING, logger="votesearch.analysis"):
            ext = build_extension(g, {999})
        assert ext == frozenset({999})
        assert any("999" in record.message for record in caplog.records)

    def test_supporters_without_other_approvals_skipped(self, caplog):
        g = fixture_election()
        with caplog.at_level(logging.WARNING, logger="votesearch.analysis"):
            ext = build_extension(g, {5})
        assert ext == frozenset({5})

    def test_counting_bound_on_synthetic_elections(self):
        # |ext| <= |A|(1 + Pk) + |B| * 2 <= |A|(1 + Pk(1 + 2))
        cfg = SyntheticConfig(voters=60, draws_per_voter=25, seed=21)
        e = generate_election(cfg).election
        a = {cfg.movie_id(1, 1, 1), cfg.movie_id(2, 5, 3)}
        p_values = (0, 1)
        k = 3
        ext = build_extension(e, a, k=k, p_values=p_values)
        bound = len(a) * (1 + len(p_values) * k * 3)
        assert a <= ext
        assert len(ext) <= bound


class TestEdgeWeight:
    def test_inverse_square(self):
        assert edge_weight(2.0) == 0.25
        assert edge_weight(1.0) == 1.0

    def test_missing_is_zero(self):
        assert edge_weight(MISSING) == 0.0


class TestEmbed:
    def _two_node_graph(self, diss):
        return DissimilarityGraph(
            nodes=frozenset({1, 2}), diss={(1, 2): diss}
        )

    @staticmethod
    def _distance(emb):
        (x1, y1), (x2, y2) = emb.positions[1], emb.positions[2]
        return math.hypot(x1 - x2, y1 - y2)

    def test_two_body_equilibrium(self):
        # closed form for this force model: d* = sqrt(1/2) * diss^(2/3)
        for diss in (1.2, 2.2):
            emb = embed(self._two_node_graph(diss), iterations=400, seed=0)
            target = math.sqrt(0.5) * diss ** (2 / 3)
            assert self._distance(emb) == pytest.approx(target, rel=0.1)

    def test_distance_monotone_in_dissimilarity(self):
        d_near = self._distance(embed(self._two_node_graph(1.2), iterations=400, seed=0))
        d_far = self._distance(embed(self._two_node_graph(2.2), iterations=400, seed=0))
        assert d_near < d_far

    def test_missing_pair_repels_further_than_any_edge(self):
        no_edge = DissimilarityGraph(nodes=frozenset({1, 2}), diss={})
        d_missing = self._distance(embed(no_edge, iterations=400, seed=0))
        d_edge = self._distance(embed(self._two_node_graph(2.2), iterations=400, seed=0))
        assert d_missing > d_edge

    def test_deterministic_per_seed(self):
        graph = self._two_node_graph(1.5)
        a = embed(graph, iterations=50, seed=7)
        b = embed(graph, iterations=50, seed=7)
        c = embed(graph, iterations=50, seed=8)
        assert a.positions == b.positions
        assert a.positions != c.positions

    def test_single_node_at_origin(self):
        emb = embed(DissimilarityGraph(nodes=frozenset({9}), diss={}))
        assert emb.positions == {9: (0.0, 0.0)}

    def test_positions_stay_in_unit_square(self):
        g = fixture_election()
        graph = build_dissimilarity_graph(g, {100, 1, 2, 3, 4}, gamma=2.0)
        emb = embed(graph, iterations=300, seed=3)
        assert set(emb.positions) == {100, 1, 2, 3, 4}
        for x, y in emb.positions.values():
            assert math.isfinite(x) and math.isfinite(y)
            assert 0.0 <= x <= 1.0 and 0.0 <= y <= 1.0


def chain_election():
    """Query 0 with twelve other resources of strictly decreasing local count.

    Agent j approves resource 0 plus resources 1..j, so resource l is
    approved by 13-l agents and the gamma=1 ranking is 1, 2, ..., 12.
    """
    approvals = {j: {0} | set(range(1, j + 1)) for j in range(1, 13)}
    return ApprovalElection(approvals)


class TestCalibrateGamma:
    def test_family_too_small(self):
        g = fixture_election()
        with pytest.raises(ValueError):
            calibrate_gamma(g, {100})

    def test_counts_are_cooccurrence_when_locals_are_small(self):
        # every local election here has at most four resources, so the top-10
        # cutoff never bites and each count is plain family co-occurrence
        g = fixture_election()
        result = calibrate_gamma(g, {1, 2, 3})
        assert [row.gamma for row in result.rows] == [
            1.2, 1.4, 1.6, 1.8, 2.0, 2.2, 2.4, 2.6, 2.8,
        ]
        for row in result.rows:
            assert row.counts == {1: 2, 2: 2, 3: 2}
            assert row.mean == pytest.approx(2.0)
        assert result.flagged == frozenset()

    def test_top_ten_cutoff_and_tie_breaks(self):
        g = chain_election()
        result = calibrate_gamma(g, {0, 10, 11}, gammas=(1.0,))
        (row,) = result.rows
        # for query 0 the top ten are resources 1..10 (counts 12..3), so of
        # the family only 10 makes the cut; for queries 10 and 11 the local
        # counts tie and ascending ids fill the ten slots, keeping only 0
        assert row.counts == {0: 1, 10: 1, 11: 1}
        assert row.mean == pytest.approx(1.0)

    def test_degenerate_member_flagged(self):
        g = fixture_election()
        result = calibrate_gamma(g, {100, 5}, gammas=(2.0,))
        assert result.flagged == frozenset({5})
        (row,) = result.rows
        assert row.counts[5] == 0

    def test_counts_bounded_by_family_size(self):
        cfg = SyntheticConfig(voters=150, draws_per_voter=60, seed=17)
        e = generate_election(cfg).election
        family = {cfg.movie_id(3, 3, i) for i in (1, 2, 3, 4)}
        result = calibrate_gamma(e, family, gammas=(1.5, 2.0))
        for row in result.rows:
            assert set(row.counts) == family
            assert all(0 <= c <= 3 for c in row.counts.values())
            assert 0.0 <= row.mean <= 3.0

    def test_top_ranks_recover_planted_structure(self):
        # at the default gamma the top of a movie's rank table should be
        # dominated by its own category, with several movies from its own
        # subcategory (seed-frozen expectation on a mid-sized election)
        cfg = SyntheticConfig(voters=400, draws_per_voter=120, seed=23)
        e = generate_election(cfg).election
        x = cfg.movie_id(5, 5, 1)
        table = rank_table(e, x, gamma=2.0)
        top10 = sorted(table, key=table.get)[:10]
        same_cat = sum(1 for r in top10 if cfg.movie_label(r)[0] == 5)
        same_sub = sum(1 for r in top10 if cfg.movie_label(r)[:2] == (5, 5))
        assert same_cat >= 8
        assert same_sub >= 4


class TestBenchAlgorithms:
    def test_fixture_eligibility_and_skips(self):
        g = fixture_election()
        result = bench_algorithms(
            g,
            sample_size=10,
            p_values=(1,),
            k=3,
            seed=0,
            annealing=AnnealingConfig(steps=100),
        )
        benched = {row.movie for row in result.rows}
        assert benched == {100, 1, 2, 3, 4}
        assert set(result.skipped) == {5, 999}

    def test_ratio_floor_and_positivity(self):
        # greedy is within 1-1/e of optimal and annealing never exceeds
        # optimal, so the ratio has a hard floor
        g = fixture_election()
        result = bench_algorithms(
            g,
            sample_size=5,
            p_values=(1, 2),
            k=2,
            seed=1,
            annealing=AnnealingConfig(steps=200),
        )
        floor = 1 - 1 / math.e
        for row in result.rows:
            assert row.ratio > 0
            assert row.ratio >= floor - 1e-9
            assert row.global_approvals >= 1

    def test_summary_stats(self):
        cfg = SyntheticConfig(voters=120, draws_per_voter=40, seed=5)
        e = generate_election(cfg).election
        result = bench_algorithms(
            e,
            sample_size=4,
            p_values=(1,),
            k=5,
            seed=9,
            annealing=AnnealingConfig(steps=300),
        )
        assert len(result.rows) == 4
        mean, std = result.summary[1]
        ratios = [row.ratio for row in result.rows if row.p == 1]
        assert mean == pytest.approx(sum(ratios) / len(ratios))
        assert std >= 0.0

    def test_deterministic(self):
        cfg = SyntheticConfig(voters=120, draws_per_voter=40, seed=5)
        e = generate_election(cfg).election
        kwargs = dict(
            sample_size=3, p_values=(2,), k=4, seed=9,
            annealing=AnnealingConfig(steps=200),
        )
        a = bench_algorithms(e, **kwargs)
        b = bench_algorithms(e, **kwargs)
        assert a.rows == b.rows
        assert a.summary == b.summary
