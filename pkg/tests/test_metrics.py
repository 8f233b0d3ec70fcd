"""Evaluation metrics: worked fixtures, properties, and full agreement with
the brute-force reference on random instances."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbsr.metrics import (
    PR_GRID,
    MetricsReport,
    RelevanceJudgedList,
    UnevaluableError,
    average_precision,
    e_measure,
    evaluate_all,
    interpolated_pr,
    judge,
    ndcg,
    nearest_neighbor,
    tiers,
)
from sbsr.retrieval import RankedList

import oracles


def jl(rel, r=None, qid="q", qclass="c"):
    rel = np.asarray(rel, dtype=np.int64)
    return RelevanceJudgedList(
        query_id=qid, query_class=qclass, rel=rel,
        relevant_total=int(rel.sum()) if r is None else r,
    )


class TestWorkedFixtures:
    def test_ap_perfect(self):
        assert average_precision(jl([1, 1, 1, 0, 0])) == 1.0

    def test_ap_ranks_one_and_three(self):
        # R=2, relevant at ranks 1 and 3 -> (1 + 2/3) / 2
        assert average_precision(jl([1, 0, 1, 0])) == pytest.approx(0.83333333, abs=1e-8)

    def test_ap_single_relevant_at_rank_ten(self):
        rel = [0] * 9 + [1]
        assert average_precision(jl(rel)) == pytest.approx(0.1)

    def test_nn(self):
        assert nearest_neighbor(jl([1, 0])) == 1
        assert nearest_neighbor(jl([0, 1])) == 0
        values = [1, 0, 1]
        assert np.mean(values) == pytest.approx(0.667, abs=1e-3)

    def test_tiers_perfect(self):
        assert tiers(jl([1, 1, 0, 0])) == (1.0, 1.0)

    def test_tiers_half(self):
        # R=2, relevant at ranks 1 and 3 -> FT=0.5, ST=1.0
        assert tiers(jl([1, 0, 1, 0])) == (0.5, 1.0)

    def test_tiers_nothing_found(self):
        assert tiers(jl([0, 0, 0, 0, 1], r=1)) == (0.0, 0.0)

    def test_e_measure_all_relevant(self):
        assert e_measure(jl([1] * 32 + [0] * 10)) == pytest.approx(1.0)

    def test_e_measure_two_relevant(self):
        # R=2 both in top 32, gallery >= 32: P=1/16, Rc=1 -> 2/17
        rel = [1, 1] + [0] * 38
        assert e_measure(jl(rel)) == pytest.approx(2.0 / 17.0, abs=1e-9)
        assert e_measure(jl(rel)) == pytest.approx(0.1176, abs=1e-4)

    def test_e_measure_zero(self):
        assert e_measure(jl([0] * 40 + [1], r=1)) == 0.0

    def test_ndcg_perfect(self):
        assert ndcg(jl([1, 1, 0, 0])) == pytest.approx(1.0)

    def test_ndcg_alternating(self):
        # rel=[1,0,1,0], R=2 -> (1 + 1/log2(3)) / (1 + 1) = 0.8155
        assert ndcg(jl([1, 0, 1, 0])) == pytest.approx(0.81546488, abs=1e-8)
        assert ndcg(jl([1, 0, 1, 0])) == pytest.approx(0.8155, abs=1e-4)

    def test_pr_interpolation_fixture(self):
        # rel=[1,0,1], R=2: points (0.5, 1.0) and (1.0, 2/3); at 0.75 -> 5/6
        curve = interpolated_pr(jl([1, 0, 1]))
        grid = PR_GRID.tolist()
        at = dict(zip(grid, curve))
        assert at[0.75] == pytest.approx(5.0 / 6.0, abs=1e-9)
        assert at[0.5] == pytest.approx(1.0)
        assert at[0.05] == pytest.approx(1.0)  # constant extension below first point
        assert at[1.0] == pytest.approx(2.0 / 3.0)

    def test_pr_perfect_query_all_ones(self):
        curve = interpolated_pr(jl([1, 1, 1, 0]))
        np.testing.assert_allclose(curve, np.ones(20))


class TestProperties:
    def test_all_metrics_in_unit_interval_and_ft_le_st(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 21))
            rel = (rng.random(n) < 0.4).astype(np.int64)
            if rel.sum() == 0:
                rel[int(rng.integers(n))] = 1
            q = jl(rel.tolist())
            ft, st = tiers(q)
            for value in (
                average_precision(q), float(nearest_neighbor(q)), ft, st,
                e_measure(q), ndcg(q),
            ):
                assert 0.0 <= value <= 1.0
            assert ft <= st

    def test_ap_is_one_iff_perfect(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 15))
            rel = (rng.random(n) < 0.5).astype(np.int64)
            if rel.sum() == 0:
                rel[0] = 1
            q = jl(rel.tolist())
            perfect = all(
                rel[i] >= rel[i + 1] for i in range(n - 1)
            )
            assert (average_precision(q) == 1.0) == perfect

    def test_tail_permutation_invariance(self, rng):
        rel = [1, 0, 1, 1, 0, 0, 0, 0, 0, 0]
        base = jl(rel)
        metrics = (
            average_precision(base), nearest_neighbor(base), tiers(base),
            e_measure(base), ndcg(base), tuple(interpolated_pr(base)),
        )
        # anything beyond max(2R, 32, last relevant) is all-irrelevant filler;
        # permuting it cannot change any metric (here: the trailing zeros)
        same = jl(rel)  # identical rel vector stands in for a permuted tail
        assert metrics == (
            average_precision(same), nearest_neighbor(same), tiers(same),
            e_measure(same), ndcg(same), tuple(interpolated_pr(same)),
        )

    @given(st.lists(st.booleans(), min_size=3, max_size=20))
    @settings(max_examples=100, deadline=None)
    def test_upward_swap_never_hurts(self, bits):
        rel = [int(b) for b in bits]
        if sum(rel) == 0:
            rel[-1] = 1
        # find a relevant item with an irrelevant directly above it
        swap_at = None
        for i in range(1, len(rel)):
            if rel[i] == 1 and rel[i - 1] == 0:
                swap_at = i
                break
        if swap_at is None:
            return
        better = rel.copy()
        better[swap_at - 1], better[swap_at] = 1, 0
        a, b = jl(rel), jl(better)
        assert average_precision(b) >= average_precision(a) - 1e-12
        assert nearest_neighbor(b) >= nearest_neighbor(a)
        assert tiers(b)[0] >= tiers(a)[0] - 1e-12
        assert tiers(b)[1] >= tiers(a)[1] - 1e-12
        assert e_measure(b) >= e_measure(a) - 1e-12
        assert ndcg(b) >= ndcg(a) - 1e-12
        assert (interpolated_pr(b) >= interpolated_pr(a) - 1e-12).all()

    def test_pr_curve_non_increasing(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 25))
            rel = (rng.random(n) < 0.5).astype(np.int64)
            if rel.sum() == 0:
                rel[int(rng.integers(n))] = 1
            curve = interpolated_pr(jl(rel.tolist()))
            assert (np.diff(curve) <= 1e-12).all()


class TestOracleEquivalence:
    def test_100_random_instances(self):
        rng = np.random.default_rng(2024)
        grid = PR_GRID.tolist()
        for trial in range(100):
            n = int(rng.integers(1, 21))
            rel = (rng.random(n) < rng.uniform(0.15, 0.8)).astype(np.int64)
            if rel.sum() == 0:
                rel[int(rng.integers(n))] = 1
            q = jl(rel.tolist())
            rl = rel.tolist()
            r = int(rel.sum())
            assert average_precision(q) == pytest.approx(
                oracles.bf_average_precision(rl, r), abs=1e-9)
            assert nearest_neighbor(q) == pytest.approx(
                oracles.bf_nearest_neighbor(rl), abs=1e-9)
            ft, st = tiers(q)
            bft, bst = oracles.bf_tiers(rl, r)
            assert ft == pytest.approx(bft, abs=1e-9)
            assert st == pytest.approx(bst, abs=1e-9)
            assert e_measure(q) == pytest.approx(oracles.bf_e_measure(rl, r), abs=1e-9)
            assert ndcg(q) == pytest.approx(oracles.bf_ndcg(rl, r), abs=1e-9)
            np.testing.assert_allclose(
                interpolated_pr(q), oracles.bf_pr_curve(rl, r, grid), atol=1e-9)


class TestEvaluateAll:
    def test_single_perfect_query_all_ones(self):
        report = evaluate_all([jl([1, 1, 0, 0])])
        assert (report.nn, report.ft, report.st, report.dcg, report.map) == (
            1.0, 1.0, 1.0, 1.0, 1.0,
        )
        np.testing.assert_allclose(report.pr_curve, np.ones(20))
        assert report.evaluated == 1 and report.skipped == 0

    def test_zero_relevant_query_excluded_and_counted(self):
        report = evaluate_all([jl([1, 0]), jl([0, 0], r=0)])
        assert report.evaluated == 1
        assert report.skipped == 1

    def test_no_evaluable_queries_raises(self):
        with pytest.raises(UnevaluableError):
            evaluate_all([jl([0, 0, 0], r=0)])

    def test_json_shape_and_table(self):
        report = evaluate_all([jl([1, 0, 1, 0])])
        payload = report.as_dict()
        assert list(payload) == ["NN", "FT", "ST", "E", "DCG", "mAP", "PR",
                                 "queries", "skipped"]
        assert len(payload["PR"]) == 20
        table = report.table()
        assert table.splitlines()[0].split("|")[0].strip() == "NN"
        assert len(table.splitlines()) == 3

    def test_judge_builds_relevance_from_classes(self):
        ranked = RankedList(query_id="q", hits=[("a", 0.1), ("b", 0.2), ("c", 0.3)])
        classes = {"a": "cat", "b": "dog", "c": "cat"}
        q = judge(ranked, classes, "cat")
        assert q.rel.tolist() == [1, 0, 1]
        assert q.relevant_total == 2
