"""Ranked-run container and the TREC run file format.

A run file line is ``query_id Q0 doc_id rank score tag``. Scores are
printed at 9 significant digits; since that rounding is monotone, the
written file preserves the non-increasing score order the container
enforces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .errors import ValidationError
from .fusion import FusedScore


@dataclass(frozen=True)
class RankedRun:
    """Per-query ordered (doc_id, score) lists under one run tag."""

    tag: str
    rankings: dict[str, list[tuple[str, float]]] = field(default_factory=dict)

    def __post_init__(self):
        for query_id, ranking in self.rankings.items():
            seen: set[str] = set()
            prev = None
            for doc_id, score in ranking:
                if doc_id in seen:
                    raise ValidationError(
                        f"query {query_id}: duplicate doc {doc_id!r} in run "
                        f"{self.tag!r}"
                    )
                seen.add(doc_id)
                if prev is not None and score > prev:
                    raise ValidationError(
                        f"query {query_id}: scores increase at doc {doc_id!r} "
                        f"in run {self.tag!r}"
                    )
                prev = score

    def queries(self) -> list[str]:
        return sorted(self.rankings)

    def ranking(self, query_id: str) -> list[tuple[str, float]]:
        return self.rankings.get(query_id, [])

    def doc_order(self, query_id: str) -> list[str]:
        return [doc_id for doc_id, _ in self.ranking(query_id)]


def run_from_fused(fused: Mapping[str, Sequence[FusedScore]], tag: str) -> RankedRun:
    """Build a RankedRun from fusion output (already ranked per query)."""
    return RankedRun(tag=tag, rankings={
        query_id: [(f.doc_id, f.score) for f in ranked]
        for query_id, ranked in fused.items()
    })


def write_run(run: RankedRun, path: str | Path) -> None:
    """Write the TREC run format, queries sorted, ranks starting at 1."""
    with open(path, "w", encoding="utf-8") as fh:
        for query_id in run.queries():
            for pos, (doc_id, score) in enumerate(run.ranking(query_id), start=1):
                fh.write(f"{query_id} Q0 {doc_id} {pos} {score:.9g} {run.tag}\n")


def read_run(path: str | Path) -> RankedRun:
    """Parse a TREC run file; line order per query is the ranking order."""
    rankings: dict[str, list[tuple[str, float]]] = {}
    tag = ""
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 6:
                raise ValidationError(
                    f"{path}:{line_no}: expected 6 fields "
                    f"'query_id Q0 doc_id rank score tag', got {len(parts)}"
                )
            query_id, _, doc_id, _, score_str, line_tag = parts
            try:
                score = float(score_str)
            except ValueError as exc:
                raise ValidationError(
                    f"{path}:{line_no}: bad score {score_str!r}"
                ) from exc
            tag = tag or line_tag
            rankings.setdefault(query_id, []).append((doc_id, score))
    try:
        return RankedRun(tag=tag, rankings=rankings)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc
