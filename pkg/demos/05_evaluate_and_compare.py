"""Scoring runs with IR metrics and paired significance tests.

Builds two runs over the same queries, one strictly better, and walks
through per-query metrics, aggregates, and the paired t / Wilcoxon tests.

Run: python3 demos/05_evaluate_and_compare.py
"""

from interfuse import ingest, metrics, runio

QRELS = {
    "q1": {"d1", "d4"},
    "q2": {"d2"},
    "q3": {"d3", "d5"},
    "q4": {"d1"},
}

# baseline buries one relevant document per query
BASELINE = {
    "q1": ["d4", "d2", "d3", "d1", "d5"],
    "q2": ["d5", "d2", "d1", "d3", "d4"],
    "q3": ["d3", "d1", "d2", "d4", "d5"],
    "q4": ["d2", "d1", "d3", "d4", "d5"],
}

# improved pulls every relevant document to the front
IMPROVED = {
    "q1": ["d1", "d4", "d2", "d3", "d5"],
    "q2": ["d2", "d5", "d1", "d3", "d4"],
    "q3": ["d3", "d5", "d1", "d2", "d4"],
    "q4": ["d1", "d2", "d3", "d4", "d5"],
}


def as_run(tag, rankings):
    scored = {q: [(d, 1.0 - 0.1 * i) for i, d in enumerate(docs)]
              for q, docs in rankings.items()}
    return runio.RankedRun(tag=tag, rankings=scored)


def main():
    qrels = ingest.QrelSet(
        relevant={q: frozenset(s) for q, s in QRELS.items()},
        judged={q: frozenset(s) for q, s in QRELS.items()},
    )
    report_a = metrics.evaluate_run(as_run("baseline", BASELINE), qrels)
    report_b = metrics.evaluate_run(as_run("improved", IMPROVED), qrels)

    print("per-query AP (denominator counts all relevant in the qrels):")
    for qm_a, qm_b in zip(report_a.per_query, report_b.per_query):
        print(f"  {qm_a.query_id}: baseline={qm_a.ap:.4f}  "
              f"improved={qm_b.ap:.4f}")

    print("\naggregates over scored queries:")
    for metric in metrics.METRIC_NAMES:
        print(f"  {metric:<8} baseline={report_a.mean(metric):.4f} "
              f"(sd {report_a.sd(metric):.4f})   "
              f"improved={report_b.mean(metric):.4f} "
              f"(sd {report_b.sd(metric):.4f})")

    result = metrics.compare_runs(report_a, report_b, "ap")
    print(f"\npaired comparison on AP over {len(QRELS)} queries:")
    print(f"  mean baseline={result.mean_a:.4f}  improved={result.mean_b:.4f}")
    print(f"  paired t-test p={result.p_value_t:.4f}")
    print(f"  Wilcoxon signed-rank p={result.p_value_wilcoxon:.4f}")
    print("\nfour queries give the significance tests little power; with")
    print("so few pairs even a consistent win can stay above p=0.05.")


if __name__ == "__main__":
    main()
