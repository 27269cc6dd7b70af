"""Ranking quality metrics and paired significance tests between runs.

All metrics take a ranking (doc ids in retrieved order), a set of
relevant doc ids, and binary relevance. Conventions:

* P@k divides by k even when fewer than k documents were retrieved.
* AP averages precision at the ranks of relevant documents over the
  total number of relevant documents in the judgments, so relevant
  documents missing from a truncated pool count against the run.
* NDCG uses binary gains with the 1/log2(rank+1) discount, rank
  starting at 1, normalized by the ideal ordering.
* Unjudged documents count as nonrelevant. Queries with no relevant
  documents at all are flagged and excluded from aggregate means.

Run comparison reports both a paired two-tailed t-test and a Wilcoxon
signed-rank test over the per-query values; when the two runs agree on
every query, both p-values degenerate to 1.0 ("no difference").
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Collection, NamedTuple, Sequence

import numpy as np
from scipy import stats

from .errors import ValidationError
from .ingest import QrelSet
from .runio import RankedRun

log = logging.getLogger(__name__)

METRIC_NAMES = ("p20", "p100", "overall", "ap", "ndcg100")


def precision_at_k(ranking: Sequence[str], relevant: Collection[str],
                   k: int) -> float:
    """Fraction of the top k that is relevant; divisor is always k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    relevant = set(relevant)
    hits = sum(1 for doc_id in ranking[:k] if doc_id in relevant)
    return hits / k


def overall_precision(ranking: Sequence[str], relevant: Collection[str]) -> float:
    """Precision over everything retrieved; 0 for an empty ranking."""
    if not ranking:
        return 0.0
    relevant = set(relevant)
    hits = sum(1 for doc_id in ranking if doc_id in relevant)
    return hits / len(ranking)


def average_precision(ranking: Sequence[str], relevant: Collection[str]) -> float:
    """Mean precision at each relevant document's rank.

    The denominator is the total number of relevant documents, so
    relevant documents never retrieved contribute zero. Queries without
    relevant documents score 0 and are flagged by the caller.
    """
    relevant = set(relevant)
    if not relevant:
        return 0.0
    hits = 0
    precision_sum = 0.0
    for pos, doc_id in enumerate(ranking, start=1):
        if doc_id in relevant:
            hits += 1
            precision_sum += hits / pos
    return precision_sum / len(relevant)


def ndcg_at_k(ranking: Sequence[str], relevant: Collection[str], k: int) -> float:
    """Binary-gain NDCG with the log2(rank+1) discount."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    relevant = set(relevant)
    if not relevant:
        return 0.0
    dcg = sum(1.0 / math.log2(pos + 1)
              for pos, doc_id in enumerate(ranking[:k], start=1)
              if doc_id in relevant)
    ideal_hits = min(len(relevant), k)
    idcg = sum(1.0 / math.log2(pos + 1) for pos in range(1, ideal_hits + 1))
    return dcg / idcg


@dataclass(frozen=True)
class QueryMetrics:
    query_id: str
    p20: float
    p100: float
    overall: float
    ap: float
    ndcg100: float
    n_relevant: int
    flagged: bool  # no relevant documents exist for this query

    def value(self, metric: str) -> float:
        if metric not in METRIC_NAMES:
            raise ValueError(f"unknown metric {metric!r}")
        return getattr(self, metric)


@dataclass(frozen=True)
class MetricReport:
    """Per-query metric rows plus (mean, sample SD) aggregates."""

    run_tag: str
    per_query: tuple[QueryMetrics, ...]

    def scored_queries(self) -> list[QueryMetrics]:
        return [qm for qm in self.per_query if not qm.flagged]

    def values(self, metric: str) -> np.ndarray:
        return np.array([qm.value(metric) for qm in self.scored_queries()])

    def mean(self, metric: str) -> float:
        values = self.values(metric)
        return float(np.mean(values)) if values.size else 0.0

    def sd(self, metric: str) -> float:
        values = self.values(metric)
        return float(np.std(values, ddof=1)) if values.size > 1 else 0.0

    @property
    def map(self) -> float:
        return self.mean("ap")


def evaluate_query(query_id: str, ranking: Sequence[str],
                   relevant: Collection[str]) -> QueryMetrics:
    relevant = set(relevant)
    flagged = not relevant
    if flagged:
        log.warning("query %s has no relevant documents; flagged and "
                    "excluded from aggregates", query_id)
    return QueryMetrics(
        query_id=query_id,
        p20=precision_at_k(ranking, relevant, 20),
        p100=precision_at_k(ranking, relevant, 100),
        overall=overall_precision(ranking, relevant),
        ap=average_precision(ranking, relevant),
        ndcg100=ndcg_at_k(ranking, relevant, 100),
        n_relevant=len(relevant),
        flagged=flagged,
    )


def evaluate_run(run: RankedRun, qrels: QrelSet) -> MetricReport:
    """Score every query of a run against the judgments.

    A run query entirely absent from the qrels (not even a judged pool)
    is a mismatch error; qrels queries missing from the run are skipped
    with a warning.
    """
    unknown = [q for q in run.queries() if q not in qrels]
    if unknown:
        raise ValidationError(
            f"run {run.tag!r} contains queries unknown to the qrels: "
            f"{unknown[:5]}"
        )
    missing = sorted(set(qrels.queries()) - set(run.queries()))
    if missing:
        log.warning("qrels queries missing from run %r: %s",
                    run.tag, missing[:5])
    rows = [
        evaluate_query(query_id, run.doc_order(query_id),
                       qrels.relevant_for(query_id))
        for query_id in run.queries()
    ]
    return MetricReport(run_tag=run.tag, per_query=tuple(rows))


class RunComparison(NamedTuple):
    """Aggregate comparison of one metric across two runs."""

    mean_a: float
    mean_b: float
    sd_a: float
    sd_b: float
    p_value_t: float
    p_value_wilcoxon: float


def paired_values(a: MetricReport, b: MetricReport,
                  metric: str) -> list[tuple[str, float, float]]:
    """Per-query (query_id, value_a, value_b) over the shared query set.

    Both reports must cover the same unflagged queries.
    """
    qa = {qm.query_id: qm for qm in a.scored_queries()}
    qb = {qm.query_id: qm for qm in b.scored_queries()}
    if qa.keys() != qb.keys():
        raise ValidationError(
            f"query sets differ between runs {a.run_tag!r} and {b.run_tag!r}: "
            f"{sorted(qa.keys() ^ qb.keys())[:5]}"
        )
    return [(q, qa[q].value(metric), qb[q].value(metric)) for q in sorted(qa)]


def compare_runs(a: MetricReport, b: MetricReport, metric: str) -> RunComparison:
    """Paired t-test and Wilcoxon signed-rank over per-query metric values."""
    pairs = paired_values(a, b, metric)
    if len(pairs) < 2:
        raise ValueError(
            f"need at least 2 paired queries to compare, got {len(pairs)}"
        )
    va = np.array([x for _, x, _ in pairs])
    vb = np.array([y for _, _, y in pairs])

    diffs = vb - va
    if np.allclose(diffs, 0.0, atol=0.0):
        # zero variance in the differences: the runs do not differ
        p_t = 1.0
        p_w = 1.0
    elif np.all(diffs == diffs[0]):
        # constant nonzero shift: the t statistic diverges, so report
        # the limiting p value instead of tripping scipy's sd=0 warning
        p_t = 0.0
        p_w = float(stats.wilcoxon(va, vb).pvalue)
    else:
        p_t = float(stats.ttest_rel(va, vb).pvalue)
        try:
            p_w = float(stats.wilcoxon(va, vb).pvalue)
        except ValueError:
            p_w = 1.0
    return RunComparison(
        mean_a=float(np.mean(va)),
        mean_b=float(np.mean(vb)),
        sd_a=float(np.std(va, ddof=1)),
        sd_b=float(np.std(vb, ddof=1)),
        p_value_t=p_t,
        p_value_wilcoxon=p_w,
    )


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------

_UNJUDGED_NOTE = "# note: unjudged documents are treated as nonrelevant\n"


def write_per_query_report(report: MetricReport, path: str | Path) -> None:
    """Per-query CSV: query_id, P@20, P@100, overall precision, AP, NDCG@100."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# run: {report.run_tag}\n")
        fh.write(_UNJUDGED_NOTE)
        writer = csv.writer(fh)
        writer.writerow(["query_id", "p20", "p100", "overall", "ap",
                         "ndcg100", "n_relevant", "flagged"])
        for qm in report.per_query:
            writer.writerow([
                qm.query_id, f"{qm.p20:.9g}", f"{qm.p100:.9g}",
                f"{qm.overall:.9g}", f"{qm.ap:.9g}", f"{qm.ndcg100:.9g}",
                qm.n_relevant, int(qm.flagged),
            ])


def write_summary_report(report: MetricReport, path: str | Path) -> None:
    """Aggregate CSV: one row per metric with mean and sample SD."""
    n = len(report.scored_queries())
    flagged = len(report.per_query) - n
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# run: {report.run_tag}\n")
        fh.write(_UNJUDGED_NOTE)
        fh.write(f"# queries scored: {n}, flagged (no relevant docs, "
                 f"excluded): {flagged}\n")
        writer = csv.writer(fh)
        writer.writerow(["metric", "mean", "sd"])
        for metric in METRIC_NAMES:
            writer.writerow([metric, f"{report.mean(metric):.9g}",
                             f"{report.sd(metric):.9g}"])


def write_comparison(a: MetricReport, b: MetricReport, metric: str,
                     path: str | Path) -> RunComparison:
    """Per-query paired CSV plus the significance summary as # comments.

    The comment header keeps the file directly plottable (gnuplot skips
    # lines) while carrying the p-values alongside the data.
    """
    comparison = compare_runs(a, b, metric)
    pairs = paired_values(a, b, metric)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# metric: {metric}; run_a: {a.run_tag}; run_b: {b.run_tag}\n")
        fh.write(f"# mean_a={comparison.mean_a:.9g} sd_a={comparison.sd_a:.9g} "
                 f"mean_b={comparison.mean_b:.9g} sd_b={comparison.sd_b:.9g}\n")
        fh.write(f"# p_value_t={comparison.p_value_t:.9g} "
                 f"p_value_wilcoxon={comparison.p_value_wilcoxon:.9g}\n")
        writer = csv.writer(fh)
        writer.writerow(["query_id", f"{metric}_a", f"{metric}_b", "diff"])
        for query_id, value_a, value_b in pairs:
            writer.writerow([query_id, f"{value_a:.9g}", f"{value_b:.9g}",
                             f"{value_b - value_a:.9g}"])
    return comparison
