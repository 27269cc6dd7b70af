"""Parsing and validation of all external data files.

Formats handled here:

* documents   -- JSON-lines (``doc_id``, ``text``, ``image_refs``) or TSV
                 (``doc_id<TAB>text[<TAB>ref1,ref2,...]``)
* queries     -- JSON-lines (``query_id``, ``text``, ``sample_image_refs``)
* qrels       -- whitespace-separated TREC qrels, binary relevance only
* vectors     -- "IFV1" binary container or a TSV fallback, float32 components
* score table -- TSV ``query_id<TAB>doc_id<TAB>modality<TAB>score``

Everything loaded here is immutable afterwards and safe to share across
threads. Loaders either raise :class:`~interfuse.errors.ValidationError`
on the first bad line (``on_error="raise"``, the default) or collect the
per-line problems and return them alongside the accepted records
(``on_error="collect"``); nothing is ever dropped silently.
"""

from __future__ import annotations

import json
import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ValidationError

log = logging.getLogger(__name__)

MODALITIES = ("text", "image")

VECTOR_MAGIC = b"IFV1"
_HEADER = struct.Struct("<4sII")
_ID_LEN = struct.Struct("<H")

SCORE_DIGITS = 9  # significant digits in TSV scores; round-trips float32


@dataclass(frozen=True)
class DocumentRecord:
    """One multimodal document: free text plus references to its images."""

    doc_id: str
    text: str = ""
    image_refs: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.doc_id:
            raise ValidationError("document with empty doc_id")
        if not self.text and not self.image_refs:
            raise ValidationError(
                f"document {self.doc_id!r} has neither text nor image_refs"
            )


@dataclass(frozen=True)
class QueryRecord:
    """A query: text description plus sample image identifiers."""

    query_id: str
    text: str = ""
    sample_image_refs: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.query_id:
            raise ValidationError("query with empty query_id")
        if not self.text and not self.sample_image_refs:
            raise ValidationError(
                f"query {self.query_id!r} has neither text nor sample images"
            )


@dataclass(frozen=True)
class QrelSet:
    """Binary relevance judgments: relevant docs and the judged pool per query."""

    relevant: dict[str, frozenset[str]]
    judged: dict[str, frozenset[str]] = field(default_factory=dict)

    def queries(self) -> list[str]:
        return sorted(self.relevant)

    def relevant_for(self, query_id: str) -> frozenset[str]:
        return self.relevant.get(query_id, frozenset())

    def judged_for(self, query_id: str) -> frozenset[str]:
        return self.judged.get(query_id, frozenset())

    def __contains__(self, query_id: str) -> bool:
        return query_id in self.relevant or query_id in self.judged


@dataclass(frozen=True)
class DenseVector:
    """A float32 vector keyed by a document or image identifier."""

    vector_id: str
    values: np.ndarray  # 1-D float32

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float32)
        if arr.ndim != 1:
            raise ValidationError(f"vector {self.vector_id!r} is not 1-D")
        if not np.all(np.isfinite(arr)):
            raise ValidationError(
                f"vector {self.vector_id!r} has a non-finite component"
            )
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


class ScoreTable:
    """Per (query, document, modality) relevance scores, the fusion input.

    Scores must be finite and non-negative; cosine-derived scores live in
    [0, 1]. Duplicate keys are rejected.
    """

    def __init__(self):
        self._entries: dict[tuple[str, str, str], float] = {}

    def add(self, query_id: str, doc_id: str, modality: str, score: float) -> None:
        if modality not in MODALITIES:
            raise ValidationError(f"unknown modality {modality!r}")
        key = (query_id, doc_id, modality)
        if key in self._entries:
            raise ValidationError(
                f"duplicate score entry ({query_id}, {doc_id}, {modality})"
            )
        score = float(score)
        if not math.isfinite(score):
            raise ValidationError(
                f"non-finite score for ({query_id}, {doc_id}, {modality})"
            )
        if score < 0.0:
            raise ValidationError(
                f"negative score {score} for ({query_id}, {doc_id}, {modality})"
            )
        self._entries[key] = score

    def get(self, query_id: str, doc_id: str, modality: str,
            default: float | None = None) -> float | None:
        return self._entries.get((query_id, doc_id, modality), default)

    def queries(self) -> list[str]:
        return sorted({q for q, _, _ in self._entries})

    def docs_for(self, query_id: str) -> list[str]:
        return sorted({d for q, d, _ in self._entries if q == query_id})

    def items(self) -> Iterator[tuple[tuple[str, str, str], float]]:
        """Entries in sorted key order (deterministic)."""
        for key in sorted(self._entries):
            yield key, self._entries[key]

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, ScoreTable) and self._entries == other._entries


# ---------------------------------------------------------------------------
# line-oriented helpers
# ---------------------------------------------------------------------------

def _iter_lines(path: str | Path) -> Iterator[tuple[int, str]]:
    """Yield (line_no, line) for non-blank lines; line numbers start at 1."""
    with open(path, "r", encoding="utf-8") as fh:
        for i, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if line.strip():
                yield i, line


def _run_collector(path, parse_lines, on_error):
    """Shared raise-vs-collect driver for the line-oriented loaders."""
    if on_error not in ("raise", "collect"):
        raise ValueError(f"on_error must be 'raise' or 'collect', got {on_error!r}")
    records, problems = parse_lines(path)
    if problems and on_error == "raise":
        raise ValidationError(problems[0])
    for msg in problems:
        log.warning("%s", msg)
    if on_error == "collect":
        return records, problems
    return records


# ---------------------------------------------------------------------------
# documents and queries
# ---------------------------------------------------------------------------

def _parse_doc_jsonl(path, line_no, line):
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValidationError("not a JSON object")
    refs = obj.get("image_refs", [])
    if not isinstance(refs, list) or not all(isinstance(r, str) for r in refs):
        raise ValidationError("image_refs must be a list of strings")
    return DocumentRecord(
        doc_id=str(obj.get("doc_id", "")),
        text=str(obj.get("text", "") or ""),
        image_refs=tuple(refs),
    )


def _parse_doc_tsv(path, line_no, line):
    parts = line.split("\t")
    if len(parts) < 2 or len(parts) > 3:
        raise ValidationError(f"expected 2-3 TAB-separated columns, got {len(parts)}")
    refs = tuple(r for r in parts[2].split(",") if r) if len(parts) == 3 else ()
    return DocumentRecord(doc_id=parts[0], text=parts[1], image_refs=refs)


def load_corpus(path: str | Path, fmt: str = "jsonl",
                on_error: str = "raise"):
    """Load a document collection from a JSON-lines or TSV file.

    Returns the list of records, or ``(records, problems)`` when
    ``on_error="collect"``. Duplicate doc_ids and records with neither
    text nor images are reported with their line numbers.
    """
    if fmt not in ("jsonl", "tsv"):
        raise ValueError(f"unknown corpus format {fmt!r}")
    parse = _parse_doc_jsonl if fmt == "jsonl" else _parse_doc_tsv

    def run(path):
        records: list[DocumentRecord] = []
        problems: list[str] = []
        seen: set[str] = set()
        n_lines = 0
        for line_no, line in _iter_lines(path):
            n_lines += 1
            try:
                rec = parse(path, line_no, line)
                if rec.doc_id in seen:
                    raise ValidationError(f"duplicate doc_id {rec.doc_id!r}")
            except (ValidationError, json.JSONDecodeError) as exc:
                problems.append(f"{path}:{line_no}: {exc}")
                continue
            seen.add(rec.doc_id)
            records.append(rec)
        if n_lines == 0:
            log.warning("%s: empty corpus file", path)
        assert n_lines == len(records) + len(problems)
        return records, problems

    return _run_collector(path, run, on_error)


def load_queries(path: str | Path, on_error: str = "raise"):
    """Load queries from JSON-lines (``query_id``, ``text``, ``sample_image_refs``)."""

    def run(path):
        records: list[QueryRecord] = []
        problems: list[str] = []
        seen: set[str] = set()
        for line_no, line in _iter_lines(path):
            try:
                obj = json.loads(line)
                refs = obj.get("sample_image_refs", [])
                if not isinstance(refs, list):
                    raise ValidationError("sample_image_refs must be a list")
                rec = QueryRecord(
                    query_id=str(obj.get("query_id", "")),
                    text=str(obj.get("text", "") or ""),
                    sample_image_refs=tuple(str(r) for r in refs),
                )
                if rec.query_id in seen:
                    raise ValidationError(f"duplicate query_id {rec.query_id!r}")
            except (ValidationError, json.JSONDecodeError) as exc:
                problems.append(f"{path}:{line_no}: {exc}")
                continue
            seen.add(rec.query_id)
            records.append(rec)
        return records, problems

    return _run_collector(path, run, on_error)


def write_queries(queries: Iterable[QueryRecord], path: str | Path) -> None:
    """Write queries in the JSON-lines query format (expansion output path)."""
    with open(path, "w", encoding="utf-8") as fh:
        for q in queries:
            fh.write(json.dumps({
                "query_id": q.query_id,
                "text": q.text,
                "sample_image_refs": list(q.sample_image_refs),
            }, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# qrels
# ---------------------------------------------------------------------------

def load_qrels(path: str | Path) -> QrelSet:
    """Parse TREC qrels: ``query_id 0 doc_id rel`` with rel in {0, 1}.

    rel=1 rows join the relevant set; rel=0 rows are recorded as judged
    nonrelevant. Anything outside {0, 1} is a graded-relevance error.
    """
    relevant: dict[str, set[str]] = {}
    judged: dict[str, set[str]] = {}
    for line_no, line in _iter_lines(path):
        parts = line.split()
        if len(parts) != 4:
            raise ValidationError(
                f"{path}:{line_no}: expected 'query_id 0 doc_id rel', "
                f"got {len(parts)} fields"
            )
        query_id, _, doc_id, rel_str = parts
        if rel_str not in ("0", "1"):
            raise ValidationError(
                f"{path}:{line_no}: relevance must be binary (0 or 1), "
                f"got {rel_str!r}"
            )
        pool = judged.setdefault(query_id, set())
        if doc_id in pool:
            raise ValidationError(
                f"{path}:{line_no}: duplicate judgment for "
                f"({query_id}, {doc_id})"
            )
        pool.add(doc_id)
        if rel_str == "1":
            relevant.setdefault(query_id, set()).add(doc_id)
    return QrelSet(
        relevant={q: frozenset(s) for q, s in relevant.items()},
        judged={q: frozenset(s) for q, s in judged.items()},
    )


def write_qrels(qrels: QrelSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for query_id in sorted(qrels.judged.keys() | qrels.relevant.keys()):
            rel = qrels.relevant_for(query_id)
            pool = qrels.judged_for(query_id) | rel
            for doc_id in sorted(pool):
                fh.write(f"{query_id} 0 {doc_id} {1 if doc_id in rel else 0}\n")


# ---------------------------------------------------------------------------
# dense vectors (IFV1 binary, TSV fallback)
# ---------------------------------------------------------------------------

def write_vectors(vectors: Sequence[DenseVector], path: str | Path,
                  fmt: str = "binary") -> None:
    """Write vectors in the IFV1 binary container (or TSV with ``fmt="tsv"``).

    Binary layout: magic ``IFV1``, u32-le count, u32-le dim, then per
    vector a u16-le id length, the UTF-8 id bytes, and dim little-endian
    float32 components. The binary path round-trips bit-exactly.
    """
    vectors = list(vectors)
    dims = {v.dim for v in vectors}
    if len(dims) > 1:
        raise ValidationError(f"vectors have mixed dimensions {sorted(dims)}")
    dim = dims.pop() if dims else 0

    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(VECTOR_MAGIC, len(vectors), dim))
            for v in vectors:
                id_bytes = v.vector_id.encode("utf-8")
                if len(id_bytes) > 0xFFFF:
                    raise ValidationError(f"vector id too long: {v.vector_id[:32]!r}...")
                fh.write(_ID_LEN.pack(len(id_bytes)))
                fh.write(id_bytes)
                fh.write(np.ascontiguousarray(v.values, dtype="<f4").tobytes())
    elif fmt == "tsv":
        with open(path, "w", encoding="utf-8") as fh:
            for v in vectors:
                comps = "\t".join(f"{x:.{SCORE_DIGITS}g}" for x in v.values)
                fh.write(f"{v.vector_id}\t{comps}\n")
    else:
        raise ValueError(f"unknown vector format {fmt!r}")


def _read_vectors_binary(path: str | Path) -> list[DenseVector]:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValidationError(f"{path}: truncated vector header")
        magic, count, dim = _HEADER.unpack(header)
        if magic != VECTOR_MAGIC:
            raise ValidationError(f"{path}: bad magic {magic!r}")
        vectors: list[DenseVector] = []
        for i in range(count):
            raw_len = fh.read(_ID_LEN.size)
            if len(raw_len) != _ID_LEN.size:
                raise ValidationError(f"{path}: truncated at vector {i}")
            (id_len,) = _ID_LEN.unpack(raw_len)
            vector_id = fh.read(id_len).decode("utf-8")
            buf = fh.read(4 * dim)
            if len(buf) != 4 * dim:
                raise ValidationError(f"{path}: truncated values for {vector_id!r}")
            values = np.frombuffer(buf, dtype="<f4").copy()
            try:
                vectors.append(DenseVector(vector_id, values))
            except ValidationError as exc:
                raise ValidationError(f"{path}: {exc}") from exc
        trailing = fh.read(1)
        if trailing:
            raise ValidationError(f"{path}: trailing bytes after {count} vectors")
    return vectors


def _read_vectors_tsv(path: str | Path) -> list[DenseVector]:
    vectors: list[DenseVector] = []
    for line_no, line in _iter_lines(path):
        parts = line.split("\t")
        if len(parts) < 2:
            raise ValidationError(f"{path}:{line_no}: expected id plus components")
        try:
            values = np.array([float(x) for x in parts[1:]], dtype=np.float32)
        except ValueError as exc:
            raise ValidationError(f"{path}:{line_no}: {exc}") from exc
        try:
            vectors.append(DenseVector(parts[0], values))
        except ValidationError as exc:
            raise ValidationError(f"{path}:{line_no}: {exc}") from exc
    return vectors


def load_vectors(path: str | Path) -> list[DenseVector]:
    """Load dense vectors, sniffing IFV1 binary vs the TSV fallback.

    All vectors in one file must share a single dimension; duplicate ids
    are allowed at this level (descriptor files repeat ids per image).
    """
    with open(path, "rb") as fh:
        magic = fh.read(4)
    vectors = (_read_vectors_binary(path) if magic == VECTOR_MAGIC
               else _read_vectors_tsv(path))
    dims = {v.dim for v in vectors}
    if len(dims) > 1:
        raise ValidationError(
            f"{path}: vectors have mixed dimensions {sorted(dims)}"
        )
    return vectors


def vectors_by_id(vectors: Iterable[DenseVector]) -> dict[str, np.ndarray]:
    """Index unique vectors by id; duplicate ids are an error here."""
    out: dict[str, np.ndarray] = {}
    for v in vectors:
        if v.vector_id in out:
            raise ValidationError(f"duplicate vector id {v.vector_id!r}")
        out[v.vector_id] = v.values
    return out


# ---------------------------------------------------------------------------
# score tables
# ---------------------------------------------------------------------------

def load_scores(path: str | Path) -> ScoreTable:
    """Load a score table from TSV ``query_id<TAB>doc_id<TAB>modality<TAB>score``."""
    table = ScoreTable()
    for line_no, line in _iter_lines(path):
        parts = line.split("\t")
        if len(parts) != 4:
            raise ValidationError(
                f"{path}:{line_no}: expected 4 TAB-separated columns, "
                f"got {len(parts)}"
            )
        query_id, doc_id, modality, score_str = parts
        try:
            score = float(score_str)
        except ValueError as exc:
            raise ValidationError(f"{path}:{line_no}: bad score {score_str!r}") from exc
        try:
            table.add(query_id, doc_id, modality, score)
        except ValidationError as exc:
            raise ValidationError(f"{path}:{line_no}: {exc}") from exc
    return table


def write_scores(table: ScoreTable, path: str | Path) -> None:
    """Write a score table as TSV with scores at 9 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        for (query_id, doc_id, modality), score in table.items():
            fh.write(f"{query_id}\t{doc_id}\t{modality}\t{score:.{SCORE_DIGITS}g}\n")
