"""Text-side relevance: TF-IDF cosine scoring and query expansion.

The pipeline is the classic one: lowercase, strip punctuation, drop
stopwords, Porter-stem, then weight term counts by a smoothed inverse
document frequency

    idf(t) = ln((1 + N) / (1 + df(t))) + 1

which behaves as if one extra document containing every term had been
seen, and L2-normalize the resulting vectors. Similarity is the cosine,
i.e. the dot product of the normalized vectors, so scores live in [0, 1]
(all weights are non-negative) and a document sharing no term with the
query scores exactly 0.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import porter
from .errors import ValidationError
from .ingest import DocumentRecord, QueryRecord

log = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[a-z0-9]+")

NORM_TOL = 1e-12


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read a stopword file: one term per line, UTF-8, blank lines ignored."""
    with open(path, "r", encoding="utf-8") as fh:
        return frozenset(line.strip().lower() for line in fh if line.strip())


def default_stopwords() -> frozenset[str]:
    """The English stopword list shipped with the package."""
    text = resources.files("interfuse.data").joinpath("stopwords_en.txt").read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def tokenize(text: str, stopwords: frozenset[str] | None = None) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop stopwords, Porter-stem.

    ``stopwords=None`` selects the packaged English list; pass an empty
    set to keep everything.
    """
    if stopwords is None:
        stopwords = default_stopwords()
    tokens = _TOKEN_RE.findall(text.lower())
    return [porter.stem(t) for t in tokens if t not in stopwords]


@dataclass(frozen=True)
class Vocabulary:
    """Term-to-index mapping with document frequencies over N documents."""

    index: dict[str, int]
    df: np.ndarray  # int64, df[index[term]]
    n_docs: int

    def __post_init__(self):
        if len(self.index) != len(self.df):
            raise ValidationError("vocabulary index/df size mismatch")
        if len(self.df) and (self.df.min() < 1 or self.df.max() > self.n_docs):
            raise ValidationError("document frequencies outside 1..N")

    def __len__(self) -> int:
        return len(self.index)

    def idf(self) -> np.ndarray:
        """Smoothed idf: ln((1+N)/(1+df)) + 1; equals 1 when df = N."""
        return np.log((1.0 + self.n_docs) / (1.0 + self.df)) + 1.0


@dataclass(frozen=True)
class SparseTermVector:
    """Sorted (index, weight) pairs with the L2 norm cached at build time."""

    indices: np.ndarray  # int32, strictly increasing
    weights: np.ndarray  # float64, non-negative
    norm: float
    vocab_size: int

    @classmethod
    def from_pairs(cls, indices, weights, vocab_size: int) -> "SparseTermVector":
        idx = np.asarray(indices, dtype=np.int32)
        w = np.asarray(weights, dtype=np.float64)
        if idx.shape != w.shape:
            raise ValidationError("indices/weights length mismatch")
        if idx.size and np.any(np.diff(idx) <= 0):
            raise ValidationError("term indices must be strictly increasing")
        if np.any(w < 0):
            raise ValidationError("term weights must be non-negative")
        return cls(idx, w, float(np.sqrt(np.dot(w, w))), vocab_size)

    def normalized(self) -> "SparseTermVector":
        """Unit-norm copy; the all-zero vector stays all-zero."""
        if self.norm <= 0.0:
            return self
        return SparseTermVector(self.indices, self.weights / self.norm, 1.0,
                                self.vocab_size)

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def dot(self, other: "SparseTermVector") -> float:
        _, ia, ib = np.intersect1d(self.indices, other.indices,
                                   assume_unique=True, return_indices=True)
        return float(np.dot(self.weights[ia], other.weights[ib]))


def _count_terms(docs: Iterable[DocumentRecord],
                 stopwords: frozenset[str] | None) -> dict[str, Counter]:
    return {doc.doc_id: Counter(tokenize(doc.text, stopwords)) for doc in docs}


def build_index(docs: Sequence[DocumentRecord],
                stopwords: frozenset[str] | None = None,
                ) -> tuple[Vocabulary, dict[str, SparseTermVector]]:
    """Build the vocabulary and L2-normalized TF-IDF vectors for a collection.

    Term indices are assigned in sorted term order, so the index is fully
    determined by the corpus. Documents whose text tokenizes to nothing
    get an empty vector (and later score 0 against every query).
    """
    if not docs:
        raise ValidationError("cannot index an empty collection")
    counts = _count_terms(docs, stopwords)

    df_counter: Counter = Counter()
    for c in counts.values():
        df_counter.update(c.keys())
    terms = sorted(df_counter)
    vocab = Vocabulary(
        index={t: i for i, t in enumerate(terms)},
        df=np.array([df_counter[t] for t in terms], dtype=np.int64),
        n_docs=len(docs),
    )

    idf = vocab.idf()
    vectors = {
        doc_id: _weigh(c, vocab, idf).normalized()
        for doc_id, c in counts.items()
    }
    return vocab, vectors


def _weigh(counts: Counter, vocab: Vocabulary, idf: np.ndarray) -> SparseTermVector:
    known = sorted(vocab.index[t] for t in counts if t in vocab.index)
    if not known:
        return SparseTermVector.from_pairs([], [], len(vocab))
    idx = np.array(known, dtype=np.int32)
    terms_by_idx = {vocab.index[t]: t for t in counts if t in vocab.index}
    tf = np.array([counts[terms_by_idx[i]] for i in known], dtype=np.float64)
    return SparseTermVector.from_pairs(idx, tf * idf[idx], len(vocab))


def vectorize(tokens: Sequence[str], vocab: Vocabulary) -> SparseTermVector:
    """TF-IDF vector for already-tokenized text; out-of-vocabulary terms drop."""
    return _weigh(Counter(tokens), vocab, vocab.idf()).normalized()


def text_score(query_vec: SparseTermVector, doc_vec: SparseTermVector) -> float:
    """Cosine similarity in [0, 1]; 0 whenever either vector is all-zero."""
    if query_vec.vocab_size != doc_vec.vocab_size:
        raise ValidationError(
            f"vectors built over different vocabularies "
            f"({query_vec.vocab_size} vs {doc_vec.vocab_size} terms)"
        )
    if query_vec.norm <= 0.0 or doc_vec.norm <= 0.0:
        return 0.0
    cos = query_vec.dot(doc_vec) / (query_vec.norm * doc_vec.norm)
    return min(max(cos, 0.0), 1.0)


def expand_query(query: QueryRecord,
                 relevant_docs: Sequence[DocumentRecord],
                 k: int = 10,
                 stopwords: frozenset[str] | None = None,
                 count_mode: str = "term",
                 include_existing: bool = True) -> QueryRecord:
    """Append the k most frequent terms from known-relevant documents.

    Frequency is the raw term count across the documents (``count_mode=
    "term"``) or the number of documents containing the term (``"doc"``).
    Ties break lexicographically. With ``include_existing=False``, terms
    already present in the tokenized query are not candidates. The
    appended terms are the stemmed forms, joined onto the query text.
    """
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if count_mode not in ("term", "doc"):
        raise ValueError(f"count_mode must be 'term' or 'doc', got {count_mode!r}")
    if not relevant_docs:
        log.warning("query %s: no relevant documents to expand from", query.query_id)
        return query
    if k == 0:
        return query

    freq: Counter = Counter()
    for doc in relevant_docs:
        tokens = tokenize(doc.text, stopwords)
        freq.update(tokens if count_mode == "term" else set(tokens))
    if not include_existing:
        for term in set(tokenize(query.text, stopwords)):
            freq.pop(term, None)
    if not freq:
        log.warning("query %s: relevant documents yielded no terms", query.query_id)
        return query

    chosen = [t for t, _ in sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[:k]]
    return QueryRecord(
        query_id=query.query_id,
        text=(query.text + " " + " ".join(chosen)).strip(),
        sample_image_refs=query.sample_image_refs,
    )
