"""Rank metrics against frozen values and the rational oracle."""

import itertools
import math

import numpy as np
import pytest

import oracles
from interfuse import ingest, metrics, runio
from interfuse.errors import ValidationError


class TestPointMetrics:
    def test_precision_divisor_is_always_k(self):
        # one relevant doc ranked first, cutoff 20 -> 1/20, not 1/1
        assert metrics.precision_at_k(["d1"], {"d1"}, 20) == 1 / 20
        assert metrics.precision_at_k(["d1", "d2"], {"d1"}, 2) == 0.5

    def test_overall_precision(self):
        assert metrics.overall_precision(["a", "b", "c"], {"a", "c"}) \
            == pytest.approx(2 / 3)
        assert metrics.overall_precision([], {"a"}) == 0.0

    def test_average_precision_frozen(self):
        # hits at ranks 1 and 3 with 2 relevant total -> (1 + 2/3) / 2
        got = metrics.average_precision(["r1", "n1", "r2"], {"r1", "r2"})
        assert abs(got - 5 / 6) < 1e-12

    def test_ap_denominator_counts_unretrieved_relevant(self):
        # relevant doc r2 missing from the ranking still divides the sum
        got = metrics.average_precision(["r1", "n1"], {"r1", "r2"})
        assert abs(got - 0.5) < 1e-12

    def test_ndcg_frozen(self):
        got = metrics.ndcg_at_k(["n1", "r1"], {"r1"}, 2)
        assert abs(got - 1.0 / math.log2(3.0)) < 1e-12

    def test_ndcg_perfect_ranking_is_one(self):
        assert metrics.ndcg_at_k(["r1", "r2", "n1"], {"r1", "r2"}, 3) \
            == pytest.approx(1.0)

    def test_no_relevant_gives_zero(self):
        assert metrics.average_precision(["a"], set()) == 0.0
        assert metrics.ndcg_at_k(["a"], set(), 5) == 0.0

    def test_small_exhaustive_against_oracle(self):
        docs = ["a", "b", "c", "d"]
        for n in range(1, 5):
            for perm in itertools.permutations(docs[:n]):
                for bits in itertools.product((0, 1), repeat=n):
                    relevant = {d for d, rel in zip(docs[:n], bits) if rel}
                    pattern = tuple(int(d in relevant) for d in perm)
                    n_rel = sum(bits)
                    got_ap = metrics.average_precision(perm, relevant)
                    want_ap = oracles.average_precision_frac(pattern, n_rel)
                    assert abs(got_ap - float(want_ap)) < 1e-12
                    got_p = metrics.precision_at_k(perm, relevant, 3)
                    want_p = oracles.precision_at_k_frac(pattern, 3)
                    assert abs(got_p - float(want_p)) < 1e-12
                    got_n = metrics.ndcg_at_k(perm, relevant, n)
                    want_n = oracles.ndcg_float(pattern, n, n_rel)
                    assert abs(got_n - want_n) < 1e-12


def make_run(tag, rankings):
    return runio.RankedRun(tag=tag, rankings=rankings)


def make_qrels(relevant, judged=None):
    rel = {q: frozenset(s) for q, s in relevant.items()}
    jud = {q: frozenset(s) for q, s in (judged or relevant).items()}
    return ingest.QrelSet(relevant=rel, judged=jud)


class TestEvaluateRun:
    def test_per_query_and_map(self):
        run = make_run("t", {
            "q1": [("r1", 0.9), ("n1", 0.5), ("r2", 0.4)],
            "q2": [("n1", 0.9), ("r1", 0.5)],
        })
        qrels = make_qrels({"q1": {"r1", "r2"}, "q2": {"r1"}})
        report = metrics.evaluate_run(run, qrels)
        by_id = {qm.query_id: qm for qm in report.per_query}
        assert abs(by_id["q1"].ap - 5 / 6) < 1e-12
        assert abs(by_id["q2"].ap - 0.5) < 1e-12
        assert abs(report.map - (5 / 6 + 0.5) / 2) < 1e-12

    def test_unjudged_documents_count_nonrelevant(self):
        run = make_run("t", {"q1": [("mystery", 0.9), ("r1", 0.5)]})
        qrels = make_qrels({"q1": {"r1"}})
        report = metrics.evaluate_run(run, qrels)
        assert abs(report.per_query[0].ap - 0.5) < 1e-12

    def test_flagged_queries_excluded_from_aggregates(self, caplog):
        run = make_run("t", {
            "q1": [("r1", 0.9)],
            "q2": [("n1", 0.9)],
        })
        qrels = make_qrels({"q1": {"r1"}},
                           judged={"q1": {"r1"}, "q2": {"n1"}})
        report = metrics.evaluate_run(run, qrels)
        flagged = [qm for qm in report.per_query if qm.flagged]
        assert [qm.query_id for qm in flagged] == ["q2"]
        assert abs(report.map - 1.0) < 1e-12
        assert len(report.scored_queries()) == 1

    def test_unknown_run_query_rejected(self):
        run = make_run("t", {"q9": [("d1", 0.5)]})
        qrels = make_qrels({"q1": {"d1"}})
        with pytest.raises(ValidationError, match="unknown"):
            metrics.evaluate_run(run, qrels)

    def test_missing_qrels_query_warns(self, caplog):
        import logging
        run = make_run("t", {"q1": [("r1", 0.5)]})
        qrels = make_qrels({"q1": {"r1"}, "q2": {"r9"}})
        with caplog.at_level(logging.WARNING, logger="interfuse.metrics"):
            report = metrics.evaluate_run(run, qrels)
        assert any("q2" in r.message for r in caplog.records)
        assert len(report.per_query) == 1

    def test_sd_uses_sample_variance(self):
        run = make_run("t", {
            "q1": [("r1", 0.9)],
            "q2": [("n1", 0.9), ("r1", 0.5)],
        })
        qrels = make_qrels({"q1": {"r1"}, "q2": {"r1"}})
        report = metrics.evaluate_run(run, qrels)
        vals = report.values("ap")
        assert report.sd("ap") == pytest.approx(float(np.std(vals, ddof=1)))


class TestCompare:
    def two_reports(self, aps_a, aps_b):
        rankings_a = {}
        rankings_b = {}
        qrels_rel = {}
        for i, (ap_a, ap_b) in enumerate(zip(aps_a, aps_b)):
            q = f"q{i}"
            qrels_rel[q] = {"r1"}
            rankings_a[q] = [("r1", 0.9)] if ap_a == 1.0 \
                else [("n1", 0.9), ("r1", 0.5)]
            rankings_b[q] = [("r1", 0.9)] if ap_b == 1.0 \
                else [("n1", 0.9), ("r1", 0.5)]
        qrels = make_qrels(qrels_rel)
        rep_a = metrics.evaluate_run(make_run("a", rankings_a), qrels)
        rep_b = metrics.evaluate_run(make_run("b", rankings_b), qrels)
        return rep_a, rep_b

    def test_zero_variance_diffs_give_p_one(self):
        rep_a, rep_b = self.two_reports([1.0, 1.0, 1.0], [1.0, 1.0, 1.0])
        result = metrics.compare_runs(rep_a, rep_b, "ap")
        assert result.p_value_t == 1.0
        assert result.p_value_wilcoxon == 1.0
        assert result.mean_a == result.mean_b

    def test_direction_and_p_values(self):
        # six queries improve by 0.5, two are unchanged
        rep_a, rep_b = self.two_reports(
            [0.5] * 6 + [1.0] * 2, [1.0] * 8)
        result = metrics.compare_runs(rep_a, rep_b, "ap")
        assert result.mean_b > result.mean_a
        assert 0.0 < result.p_value_t < 0.05
        assert 0.0 < result.p_value_wilcoxon < 0.05

    def test_constant_nonzero_diffs_give_p_zero_limit(self):
        import warnings
        rep_a, rep_b = self.two_reports([0.5] * 5, [1.0] * 5)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = metrics.compare_runs(rep_a, rep_b, "ap")
        assert result.p_value_t == 0.0

    def test_t_statistic_matches_textbook_formula(self):
        rng = np.random.default_rng(5)
        diffs = rng.normal(0.1, 0.05, size=12)
        from scipy import stats
        t_lib = stats.ttest_rel(diffs, np.zeros_like(diffs)).statistic
        t_hand = oracles.paired_t_stat(diffs)
        assert abs(t_lib - t_hand) < 1e-10

    def test_query_set_mismatch_rejected(self):
        rep_a, _ = self.two_reports([1.0], [1.0])
        rep_b_other = metrics.evaluate_run(
            make_run("b", {"other": [("r1", 0.9)]}),
            make_qrels({"other": {"r1"}}))
        with pytest.raises(ValidationError):
            metrics.compare_runs(rep_a, rep_b_other, "ap")

    def test_too_few_pairs_rejected(self):
        rep_a, rep_b = self.two_reports([1.0], [0.5])
        with pytest.raises(ValueError):
            metrics.compare_runs(rep_a, rep_b, "ap")


class TestReports:
    def make_report(self):
        run = make_run("demo", {
            "q1": [("r1", 0.9), ("n1", 0.5)],
            "q2": [("n1", 0.9), ("r1", 0.5)],
        })
        qrels = make_qrels({"q1": {"r1"}, "q2": {"r1"}})
        return metrics.evaluate_run(run, qrels)

    def test_per_query_csv(self, tmp_path):
        report = self.make_report()
        path = tmp_path / "per_query.csv"
        metrics.write_per_query_report(report, path)
        lines = path.read_text().splitlines()
        comments = [ln for ln in lines if ln.startswith("#")]
        assert any("unjudged" in c for c in comments)
        rows = [ln for ln in lines if not ln.startswith("#")]
        assert rows[0].startswith("query_id,")
        assert len(rows) == 3

    def test_summary_csv(self, tmp_path):
        report = self.make_report()
        path = tmp_path / "summary.csv"
        metrics.write_summary_report(report, path)
        text = path.read_text()
        assert "ap" in text
        assert "mean" in text

    def test_comparison_csv(self, tmp_path):
        rep = self.make_report()
        run_b = make_run("better", {
            "q1": [("r1", 0.9), ("n1", 0.5)],
            "q2": [("r1", 0.9), ("n1", 0.5)],
        })
        rep_b = metrics.evaluate_run(
            run_b, make_qrels({"q1": {"r1"}, "q2": {"r1"}}))
        path = tmp_path / "cmp.csv"
        result = metrics.write_comparison(rep, rep_b, "ap", path)
        assert result.mean_b > result.mean_a
        text = path.read_text()
        assert "p_value" in text
        assert "q1" in text
