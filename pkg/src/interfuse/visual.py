"""Image-side relevance: bag-of-visual-words histograms and dense cosine.

Local descriptors arrive precomputed (one IFV1 container with the image
id repeated per descriptor). A codebook of K visual words is learned by
k-means (k-means++ seeding, Lloyd refinement), each image becomes the
L2-normalized histogram of its nearest-word assignments, and similarity
is the cosine. The same :func:`image_score` serves dense CNN embeddings;
negative cosines are clamped to 0 so the score stays usable as a
probability downstream.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .ingest import DenseVector, load_vectors, write_vectors

log = logging.getLogger(__name__)

DEFAULT_CODEBOOK_SIZE = 1000


@dataclass(frozen=True)
class DescriptorSet:
    """All local descriptors of one image, shape (n_descriptors, dim)."""

    image_id: str
    descriptors: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.descriptors, dtype=np.float64)
        if arr.ndim != 2:
            raise ValidationError(
                f"descriptors for {self.image_id!r} must be 2-D, got {arr.ndim}-D"
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError(
                f"non-finite descriptor component in {self.image_id!r}"
            )
        object.__setattr__(self, "descriptors", arr)

    @property
    def count(self) -> int:
        return int(self.descriptors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.descriptors.shape[1])


@dataclass(frozen=True)
class Codebook:
    """K learned visual words plus the training provenance."""

    centroids: np.ndarray  # (K, dim) float64
    rng_seed: int
    n_iters: int = 0
    inertia_per_iter: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        arr = np.asarray(self.centroids, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValidationError("codebook needs at least one centroid")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("codebook contains a non-finite centroid")
        object.__setattr__(self, "centroids", arr)

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])

    @property
    def dim(self) -> int:
        return int(self.centroids.shape[1])


@dataclass(frozen=True)
class VisualHistogram:
    """L2-normalized visual-word frequencies; all-zero for imageless input."""

    image_id: str
    values: np.ndarray  # (K,) float64


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distances, chunked to bound memory."""
    n, dim = points.shape
    k = centers.shape[0]
    out = np.empty((n, k), dtype=np.float64)
    chunk = max(1, (1 << 22) // max(1, k * dim))
    for start in range(0, n, chunk):
        block = points[start:start + chunk]
        diff = block[:, None, :] - centers[None, :, :]
        out[start:start + chunk] = np.einsum("nkd,nkd->nk", diff, diff)
    return out


def _plus_plus_init(points: np.ndarray, k: int,
                    rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: first center uniform, then D^2-weighted draws."""
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]), dtype=np.float64)
    centers[0] = points[rng.integers(n)]
    closest = _sq_dists(points, centers[0:1])[:, 0]
    for i in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))  # all points coincide with a center
        else:
            idx = int(rng.choice(n, p=closest / total))
        centers[i] = points[idx]
        np.minimum(closest, _sq_dists(points, centers[i:i + 1])[:, 0], out=closest)
    return centers


def learn_codebook(train: Sequence[DescriptorSet] | np.ndarray, k: int,
                   seed: int = 0, max_iters: int = 100) -> Codebook:
    """Learn K visual words by Lloyd's algorithm over all training descriptors.

    Runs until the assignment reaches a fixpoint or ``max_iters`` passes.
    A cluster that loses all members is re-seeded to the point currently
    farthest from its assigned centroid (ties to the lowest point index),
    taking successively farther points when several clusters empty at
    once. Identical seeds produce bit-identical codebooks.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if isinstance(train, np.ndarray):
        points = np.asarray(train, dtype=np.float64)
    else:
        mats = [ds.descriptors for ds in train if ds.count > 0]
        if not mats:
            raise ValidationError("no descriptors to train on")
        points = np.vstack(mats)
    if points.ndim != 2:
        raise ValidationError("training descriptors must be 2-D")
    if points.shape[0] < k:
        raise ValidationError(
            f"need at least k={k} descriptors, got {points.shape[0]}"
        )

    rng = np.random.default_rng(seed)
    centers = _plus_plus_init(points, k, rng)

    prev_assign = None
    inertia_history: list[float] = []
    n_iters = 0
    for _ in range(max_iters):
        d2 = _sq_dists(points, centers)
        assign = np.argmin(d2, axis=1)  # ties resolve to the lowest index
        inertia_history.append(float(d2[np.arange(points.shape[0]), assign].sum()))
        n_iters += 1
        if prev_assign is not None and np.array_equal(assign, prev_assign):
            break
        prev_assign = assign

        point_d2 = d2[np.arange(points.shape[0]), assign].copy()
        for c in range(k):
            members = assign == c
            if members.any():
                centers[c] = points[members].mean(axis=0)
            else:
                farthest = int(np.argmax(point_d2))
                centers[c] = points[farthest]
                point_d2[farthest] = -1.0  # claim it for this reseed round

    return Codebook(
        centroids=centers,
        rng_seed=seed,
        n_iters=n_iters,
        inertia_per_iter=tuple(inertia_history),
    )


def quantize(image: DescriptorSet, codebook: Codebook) -> VisualHistogram:
    """Histogram of nearest-centroid assignments, L2-normalized.

    An image with zero descriptors yields the all-zero histogram (it can
    never match anything) and logs a warning.
    """
    if image.count == 0:
        log.warning("image %s has no descriptors; histogram is all-zero",
                    image.image_id)
        return VisualHistogram(image.image_id,
                               np.zeros(codebook.k, dtype=np.float64))
    if image.dim != codebook.dim:
        raise ValidationError(
            f"descriptor dim {image.dim} does not match codebook dim "
            f"{codebook.dim} for {image.image_id!r}"
        )
    assign = np.argmin(_sq_dists(image.descriptors, codebook.centroids), axis=1)
    counts = np.bincount(assign, minlength=codebook.k).astype(np.float64)
    return VisualHistogram(image.image_id, counts / np.linalg.norm(counts))


def image_score(query_vec, doc_vec) -> float:
    """Cosine similarity clamped to [0, 1]; 0 if either vector is zero.

    Accepts raw arrays, DenseVector, or VisualHistogram arguments.
    """
    q = np.asarray(getattr(query_vec, "values", query_vec),
                   dtype=np.float64).ravel()
    d = np.asarray(getattr(doc_vec, "values", doc_vec),
                   dtype=np.float64).ravel()
    if q.shape != d.shape:
        raise ValidationError(
            f"vector dimensions differ: {q.shape[0]} vs {d.shape[0]}"
        )
    qn = np.linalg.norm(q)
    dn = np.linalg.norm(d)
    if qn <= 0.0 or dn <= 0.0:
        return 0.0
    return min(max(float(np.dot(q, d) / (qn * dn)), 0.0), 1.0)


def aggregate_query_images(per_image_scores: Sequence[float],
                           mode: str = "max") -> float:
    """Combine the per-sample-image scores of one query into one number."""
    if len(per_image_scores) == 0:
        raise ValueError("cannot aggregate an empty score sequence")
    if mode == "max":
        return float(max(per_image_scores))
    if mode == "mean":
        return float(sum(per_image_scores) / len(per_image_scores))
    raise ValueError(f"unknown aggregation mode {mode!r}")


# ---------------------------------------------------------------------------
# file formats: descriptors share the IFV1 container, ids repeated per image
# ---------------------------------------------------------------------------

def load_descriptors(path: str | Path) -> list[DescriptorSet]:
    """Group an IFV1/TSV vector file into per-image descriptor sets.

    Grouping preserves first-appearance order of the image ids and the
    descriptor order within each image.
    """
    grouped: dict[str, list[np.ndarray]] = {}
    for vec in load_vectors(path):
        grouped.setdefault(vec.vector_id, []).append(vec.values)
    return [DescriptorSet(image_id, np.vstack(rows))
            for image_id, rows in grouped.items()]


def write_descriptors(sets: Sequence[DescriptorSet], path: str | Path,
                      fmt: str = "binary") -> None:
    flat = [DenseVector(ds.image_id, row.astype(np.float32))
            for ds in sets for row in ds.descriptors]
    write_vectors(flat, path, fmt=fmt)


def save_codebook(codebook: Codebook, path: str | Path) -> None:
    """Store centroids as an IFV1 file, ids c000000... in centroid order."""
    vecs = [DenseVector(f"c{i:06d}", row.astype(np.float32))
            for i, row in enumerate(codebook.centroids)]
    write_vectors(vecs, path)


def load_codebook(path: str | Path, rng_seed: int = -1) -> Codebook:
    vecs = load_vectors(path)
    if not vecs:
        raise ValidationError(f"{path}: empty codebook file")
    return Codebook(
        centroids=np.vstack([v.values.astype(np.float64) for v in vecs]),
        rng_seed=rng_seed,
    )


def histograms_to_vectors(histograms: Sequence[VisualHistogram]) -> list[DenseVector]:
    """Export histograms as float32 dense vectors (the fusion-side format)."""
    return [DenseVector(h.image_id, h.values.astype(np.float32))
            for h in histograms]
